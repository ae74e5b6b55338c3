//! Noiseless statevector QAOA.
//!
//! Amplitude `k` belongs to the computational basis state whose bit `q` is
//! qubit `q` (qubit 0 least significant). Each layer applies the cost phase
//! `exp(-i gamma_l C)` and then the mixer `exp(-i beta_l sum_j X_j)`.

use std::collections::BTreeMap;
use std::io::Write;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::exact::cost_vector_with_limit;
use crate::instances::IsingInstance;
use crate::schedule::Schedule;
use crate::{Error, Result, DEFAULT_MAX_QUBITS};

const NORM_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct QaoaState {
    n_qubits: usize,
    amplitudes: Vec<Complex64>,
}

fn check_qubits(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::invalid("a state needs at least one qubit"));
    }
    if n > DEFAULT_MAX_QUBITS {
        return Err(Error::TooLarge {
            n,
            limit: DEFAULT_MAX_QUBITS,
            what: "the statevector simulator",
        });
    }
    Ok(())
}

impl QaoaState {
    /// `|+>^n`: every amplitude `2^(-n/2)`.
    pub fn plus(n_qubits: usize) -> Result<Self> {
        check_qubits(n_qubits)?;
        let dim = 1usize << n_qubits;
        let a = Complex64::new((dim as f64).sqrt().recip(), 0.0);
        Ok(QaoaState {
            n_qubits,
            amplitudes: vec![a; dim],
        })
    }

    /// Computational basis state `|config>`.
    pub fn basis(n_qubits: usize, config: usize) -> Result<Self> {
        check_qubits(n_qubits)?;
        let dim = 1usize << n_qubits;
        if config >= dim {
            return Err(Error::invalid(format!(
                "configuration {config} does not fit in {n_qubits} qubits"
            )));
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); dim];
        amplitudes[config] = Complex64::new(1.0, 0.0);
        Ok(QaoaState {
            n_qubits,
            amplitudes,
        })
    }

    /// Wraps raw amplitudes; the length must be a power of two and the norm
    /// must be one within `1e-10`.
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        let dim = amplitudes.len();
        if dim < 2 || !dim.is_power_of_two() {
            return Err(Error::invalid(format!(
                "amplitude count {dim} is not a power of two >= 2"
            )));
        }
        let n_qubits = dim.trailing_zeros() as usize;
        check_qubits(n_qubits)?;
        let state = QaoaState {
            n_qubits,
            amplitudes,
        };
        let norm = state.norm();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::Numeric(format!("state norm is {norm}, expected 1")));
        }
        Ok(state)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes
            .iter()
            .map(|a| a.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }
}

/// `|+>^n`.
pub fn plus_state(n: usize) -> Result<QaoaState> {
    QaoaState::plus(n)
}

fn check_len(state: &QaoaState, costs: &[f64]) -> Result<()> {
    if state.dim() != costs.len() {
        return Err(Error::LengthMismatch {
            expected: state.dim(),
            found: costs.len(),
        });
    }
    Ok(())
}

/// `amplitude_k *= exp(-i gamma costs[k])`.
pub fn apply_cost_phase(state: &mut QaoaState, costs: &[f64], gamma: f64) -> Result<()> {
    check_len(state, costs)?;
    for (a, &c) in state.amplitudes.iter_mut().zip(costs) {
        let (s, co) = (gamma * c).sin_cos();
        *a *= Complex64::new(co, -s);
    }
    Ok(())
}

/// `exp(-i beta X_q)` on a single qubit.
pub fn apply_mixer_qubit(state: &mut QaoaState, qubit: usize, beta: f64) -> Result<()> {
    if qubit >= state.n_qubits {
        return Err(Error::invalid(format!(
            "qubit {qubit} out of range for {} qubits",
            state.n_qubits
        )));
    }
    let (s, c) = beta.sin_cos();
    let stride = 1usize << qubit;
    let mis = Complex64::new(0.0, -s);
    for block in state.amplitudes.chunks_exact_mut(2 * stride) {
        let (lo, hi) = block.split_at_mut(stride);
        for (a0, a1) in lo.iter_mut().zip(hi.iter_mut()) {
            let (x, y) = (*a0, *a1);
            *a0 = x * c + y * mis;
            *a1 = x * mis + y * c;
        }
    }
    Ok(())
}

/// `exp(-i beta sum_j X_j)`. The single-qubit factors commute, so they are
/// applied one after another.
pub fn apply_mixer(state: &mut QaoaState, beta: f64) {
    for q in 0..state.n_qubits {
        apply_mixer_qubit(state, q, beta).expect("qubit index is in range");
    }
}

/// Runs the circuit from `|+>^n` on a precomputed cost diagonal.
pub fn run_qaoa_with_costs(costs: &[f64], schedule: &Schedule) -> Result<QaoaState> {
    if costs.len() < 2 || !costs.len().is_power_of_two() {
        return Err(Error::invalid(format!(
            "cost vector length {} is not a power of two >= 2",
            costs.len()
        )));
    }
    let mut state = QaoaState::plus(costs.len().trailing_zeros() as usize)?;
    for (gamma, beta) in schedule.layers() {
        apply_cost_phase(&mut state, costs, gamma)?;
        apply_mixer(&mut state, beta);
    }
    Ok(state)
}

/// Final QAOA state for `inst` under `schedule`.
pub fn run_qaoa(inst: &IsingInstance, schedule: &Schedule) -> Result<QaoaState> {
    let costs = cost_vector_with_limit(inst, DEFAULT_MAX_QUBITS)?;
    run_qaoa_with_costs(&costs, schedule)
}

/// `sum_k |a_k|^2 costs[k]`, summed in index order.
pub fn exact_expectation(state: &QaoaState, costs: &[f64]) -> Result<f64> {
    check_len(state, costs)?;
    Ok(state
        .amplitudes
        .iter()
        .zip(costs)
        .map(|(a, &c)| a.norm_sqr() * c)
        .sum())
}

/// Measurement outcomes keyed by configuration.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShotHistogram {
    pub counts: BTreeMap<u64, u64>,
    pub shots: u64,
}

impl ShotHistogram {
    pub fn is_empty(&self) -> bool {
        self.shots == 0
    }
}

/// Draws `shots` independent measurements in the computational basis.
pub fn sample(state: &QaoaState, shots: u64, seed: u64) -> Result<ShotHistogram> {
    if shots == 0 {
        return Err(Error::invalid("shot count must be at least 1"));
    }
    let mut cumulative = Vec::with_capacity(state.dim());
    let mut total = 0.0;
    for a in &state.amplitudes {
        total += a.norm_sqr();
        cumulative.push(total);
    }
    let last = state.dim() - 1;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = BTreeMap::new();
    for _ in 0..shots {
        let u = rng.random::<f64>() * total;
        let k = cumulative.partition_point(|&c| c <= u).min(last);
        *counts.entry(k as u64).or_insert(0) += 1;
    }
    Ok(ShotHistogram { counts, shots })
}

/// `sum_k counts(k) costs[k] / shots`.
pub fn sampled_expectation(hist: &ShotHistogram, costs: &[f64]) -> Result<f64> {
    if hist.shots == 0 {
        return Err(Error::invalid("empty histogram"));
    }
    let mut acc = 0.0;
    for (&k, &count) in &hist.counts {
        let c = costs.get(k as usize).ok_or(Error::LengthMismatch {
            expected: k as usize + 1,
            found: costs.len(),
        })?;
        acc += count as f64 * c;
    }
    Ok(acc / hist.shots as f64)
}

/// `|<a|b>|`.
pub fn fidelity(a: &QaoaState, b: &QaoaState) -> Result<f64> {
    if a.n_qubits != b.n_qubits {
        return Err(Error::LengthMismatch {
            expected: a.n_qubits,
            found: b.n_qubits,
        });
    }
    Ok(a.amplitudes
        .iter()
        .zip(&b.amplitudes)
        .map(|(x, y)| x.conj() * y)
        .sum::<Complex64>()
        .norm())
}

/// Little-endian `(re, im)` f64 pairs in configuration order.
pub fn write_state_binary(state: &QaoaState, mut out: impl Write) -> Result<()> {
    for a in &state.amplitudes {
        out.write_all(&a.re.to_le_bytes())?;
        out.write_all(&a.im.to_le_bytes())?;
    }
    Ok(())
}

/// One `config_index<TAB>re<TAB>im` line per amplitude.
pub fn write_state_text(state: &QaoaState, mut out: impl Write) -> Result<()> {
    writeln!(out, "config_index\tre\tim")?;
    for (k, a) in state.amplitudes.iter().enumerate() {
        writeln!(out, "{k}\t{}\t{}", a.re, a.im)?;
    }
    Ok(())
}
