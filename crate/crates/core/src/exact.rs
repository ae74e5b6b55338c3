//! Brute-force classical evaluation of instance energies.
//!
//! Configurations are integers: bit `q` of `k` is qubit (node) `q`, and bit
//! value 0 maps to spin +1, bit value 1 to spin -1.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::instances::{Edge, HamiltonianKind, IsingInstance};
use crate::{Error, Result, DEFAULT_MAX_QUBITS};

/// Default cap on the number of ground configurations kept in an
/// [`ExactSolution`].
pub const DEFAULT_GROUND_STATE_CAP: usize = 1 << 16;

// Below this size the scan is not worth splitting across threads.
const PARALLEL_MIN_QUBITS: usize = 14;

#[inline]
fn config_energy(edges: &[Edge], kind: HamiltonianKind, scale_w: f64, k: u64) -> f64 {
    // An edge is "cut" when its endpoints carry opposite spins.
    let cut = |e: &Edge| ((k >> e.i) ^ (k >> e.j)) & 1 == 1;
    match kind {
        HamiltonianKind::RandomIsing => edges
            .iter()
            .map(|e| if cut(e) { -e.weight } else { e.weight })
            .sum(),
        HamiltonianKind::MaxCut => -(edges.iter().filter(|e| cut(e)).count() as f64),
        HamiltonianKind::WeightedMaxCut => {
            -scale_w
                * edges
                    .iter()
                    .filter(|e| cut(e))
                    .map(|e| e.weight)
                    .sum::<f64>()
        }
    }
}

/// Energy of configuration `config` (qubit 0 in the least significant bit).
pub fn energy(inst: &IsingInstance, config: u64) -> Result<f64> {
    let n = inst.n_qubits();
    if n < 64 && config >> n != 0 {
        return Err(Error::LengthMismatch {
            expected: n,
            found: 64 - config.leading_zeros() as usize,
        });
    }
    Ok(config_energy(
        inst.edges(),
        inst.kind(),
        inst.scale_w(),
        config,
    ))
}

/// Energy of a configuration written as a bit string whose `q`-th character
/// is qubit `q`, e.g. `"01"` puts qubit 1 in state 1.
pub fn energy_of_bits(inst: &IsingInstance, bits: &str) -> Result<f64> {
    energy(inst, parse_bits(bits, inst.n_qubits())?)
}

pub fn parse_bits(bits: &str, n: usize) -> Result<u64> {
    if bits.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            found: bits.len(),
        });
    }
    bits.bytes()
        .enumerate()
        .try_fold(0u64, |acc, (q, b)| match b {
            b'0' => Ok(acc),
            b'1' => Ok(acc | 1 << q),
            _ => Err(Error::invalid(format!("not a bit string: {bits:?}"))),
        })
}

/// Inverse of [`parse_bits`].
pub fn format_bits(config: u64, n: usize) -> String {
    (0..n)
        .map(|q| if (config >> q) & 1 == 1 { '1' } else { '0' })
        .collect()
}

fn check_size(n: usize, limit: usize, what: &'static str) -> Result<()> {
    if n > limit || n >= usize::BITS as usize {
        Err(Error::TooLarge { n, limit, what })
    } else {
        Ok(())
    }
}

/// Diagonal of the cost Hamiltonian: entry `k` is `energy(inst, k)`.
pub fn cost_vector(inst: &IsingInstance) -> Result<Vec<f64>> {
    cost_vector_with_limit(inst, DEFAULT_MAX_QUBITS)
}

pub fn cost_vector_with_limit(inst: &IsingInstance, max_qubits: usize) -> Result<Vec<f64>> {
    let n = inst.n_qubits();
    check_size(n, max_qubits, "a dense cost vector")?;
    let (edges, kind, w) = (inst.edges(), inst.kind(), inst.scale_w());
    let mut costs = vec![0.0; 1 << n];
    if n >= PARALLEL_MIN_QUBITS {
        costs
            .par_iter_mut()
            .enumerate()
            .for_each(|(k, c)| *c = config_energy(edges, kind, w, k as u64));
    } else {
        for (k, c) in costs.iter_mut().enumerate() {
            *c = config_energy(edges, kind, w, k as u64);
        }
    }
    Ok(costs)
}

/// Result of an exhaustive scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactSolution {
    /// Minimum energy, `E_exact`.
    pub e_min: f64,
    /// Maximum energy.
    pub e_max: f64,
    /// Ground configurations in ascending order, at most the configured cap.
    pub ground_states: Vec<u64>,
    /// Total number of ground configurations, including any beyond the cap.
    pub degeneracy: u64,
    /// True when `ground_states` was cut off at the cap.
    pub truncated: bool,
}

impl ExactSolution {
    /// Scans a precomputed cost vector.
    pub fn from_costs(costs: &[f64], ground_state_cap: usize) -> Result<Self> {
        if costs.is_empty() {
            return Err(Error::invalid("empty cost vector"));
        }
        let mut e_min = f64::INFINITY;
        let mut e_max = f64::NEG_INFINITY;
        for &c in costs {
            if !c.is_finite() {
                return Err(Error::Numeric(format!("non-finite energy {c}")));
            }
            e_min = e_min.min(c);
            e_max = e_max.max(c);
        }
        let mut ground_states = Vec::new();
        let mut degeneracy = 0u64;
        for (k, &c) in costs.iter().enumerate() {
            if c == e_min {
                degeneracy += 1;
                if ground_states.len() < ground_state_cap {
                    ground_states.push(k as u64);
                }
            }
        }
        Ok(ExactSolution {
            e_min,
            e_max,
            truncated: degeneracy as usize > ground_states.len(),
            ground_states,
            degeneracy,
        })
    }

    /// True when `e_min` is exactly zero and ratios cannot be formed.
    pub fn has_zero_minimum(&self) -> bool {
        self.e_min == 0.0
    }

    /// `<E> / E_exact`.
    pub fn ratio(&self, expectation: f64) -> Result<f64> {
        if self.has_zero_minimum() {
            return Err(Error::ZeroGroundEnergy);
        }
        Ok(expectation / self.e_min)
    }
}

/// Brute-force solver with configurable limits.
#[derive(Debug, Clone, Copy)]
pub struct ExactSolver {
    pub max_qubits: usize,
    pub ground_state_cap: usize,
}

impl Default for ExactSolver {
    fn default() -> Self {
        ExactSolver {
            max_qubits: DEFAULT_MAX_QUBITS,
            ground_state_cap: DEFAULT_GROUND_STATE_CAP,
        }
    }
}

impl ExactSolver {
    pub fn solve(&self, inst: &IsingInstance) -> Result<ExactSolution> {
        check_size(inst.n_qubits(), self.max_qubits, "brute force")?;
        let costs = cost_vector_with_limit(inst, self.max_qubits)?;
        ExactSolution::from_costs(&costs, self.ground_state_cap)
    }
}

/// Exhaustive minimum over all `2^n` configurations with default limits.
pub fn solve_exact(inst: &IsingInstance) -> Result<ExactSolution> {
    ExactSolver::default().solve(inst)
}

/// Writes `config_index<TAB>energy` lines, one per configuration.
pub fn write_spectrum(costs: &[f64], mut out: impl Write) -> Result<()> {
    writeln!(out, "config_index\tenergy")?;
    for (k, c) in costs.iter().enumerate() {
        writeln!(out, "{k}\t{c}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::{gen_random_ising, gen_weighted_maxcut};
    use proptest::prelude::*;

    fn inst(
        n: usize,
        edges: &[(usize, usize, f64)],
        kind: HamiltonianKind,
        w: f64,
    ) -> IsingInstance {
        IsingInstance::new(n, edges.iter().map(|&e| e.into()).collect(), kind, w, 0).unwrap()
    }

    fn triangle() -> IsingInstance {
        inst(
            3,
            &[(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)],
            HamiltonianKind::RandomIsing,
            1.0,
        )
    }

    #[test]
    fn triangle_energies() {
        let t = triangle();
        assert_eq!(energy_of_bits(&t, "000").unwrap(), 3.0);
        assert_eq!(energy_of_bits(&t, "001").unwrap(), -1.0);
        assert!(matches!(
            energy_of_bits(&t, "01"),
            Err(Error::LengthMismatch {
                expected: 3,
                found: 2
            })
        ));
        assert!(energy(&t, 8).is_err());
    }

    #[test]
    fn weighted_edge_energy() {
        let e = inst(2, &[(0, 1, 0.5)], HamiltonianKind::WeightedMaxCut, 10.0);
        assert_eq!(energy_of_bits(&e, "01").unwrap(), -5.0);
        assert_eq!(energy_of_bits(&e, "00").unwrap(), 0.0);
    }

    #[test]
    fn triangle_ground_states() {
        // Hand enumeration: 000 and 111 give +3, the other six give -1.
        let sol = solve_exact(&triangle()).unwrap();
        assert_eq!(sol.e_min, -1.0);
        assert_eq!(sol.e_max, 3.0);
        assert_eq!(sol.degeneracy, 6);
        assert_eq!(sol.ground_states, vec![1, 2, 3, 4, 5, 6]);
        assert!(!sol.truncated);
    }

    #[test]
    fn single_edge_ground_states() {
        let ising = inst(2, &[(0, 1, 1.0)], HamiltonianKind::RandomIsing, 1.0);
        let sol = solve_exact(&ising).unwrap();
        assert_eq!((sol.e_min, sol.ground_states.clone()), (-1.0, vec![1, 2]));
        assert_eq!(cost_vector(&ising).unwrap(), vec![1.0, -1.0, -1.0, 1.0]);

        let mc = inst(2, &[(0, 1, 1.0)], HamiltonianKind::MaxCut, 1.0);
        let sol = solve_exact(&mc).unwrap();
        assert_eq!((sol.e_min, sol.ground_states), (-1.0, vec![1, 2]));
    }

    #[test]
    fn size_limit() {
        let big = gen_random_ising(12, 0.5, 1).unwrap();
        let solver = ExactSolver {
            max_qubits: 10,
            ..Default::default()
        };
        let err = solver.solve(&big).unwrap_err();
        assert!(
            err.to_string().contains("too large for brute force"),
            "{err}"
        );
    }

    #[test]
    fn ground_state_cap_sets_overflow_flag() {
        let k6: Vec<(usize, usize, f64)> = (0..6)
            .flat_map(|i| (i + 1..6).map(move |j| (i, j, 1.0)))
            .collect();
        let inst = inst(6, &k6, HamiltonianKind::MaxCut, 1.0);
        let costs = cost_vector(&inst).unwrap();
        let full = ExactSolution::from_costs(&costs, usize::MAX).unwrap();
        assert_eq!(full.degeneracy, 20); // C(6, 3) balanced cuts
        let capped = ExactSolution::from_costs(&costs, 4).unwrap();
        assert!(capped.truncated);
        assert_eq!(capped.degeneracy, 20);
        assert_eq!(capped.ground_states, full.ground_states[..4]);
    }

    #[test]
    fn ratio_guard() {
        let sol = ExactSolution::from_costs(&[0.0, 1.0], 8).unwrap();
        assert!(sol.has_zero_minimum());
        assert!(matches!(sol.ratio(0.5), Err(Error::ZeroGroundEnergy)));
        let sol = ExactSolution::from_costs(&[-2.0, 1.0], 8).unwrap();
        assert_eq!(sol.ratio(-1.0).unwrap(), 0.5);
    }

    #[test]
    fn spectrum_dump() {
        let mut buf = Vec::new();
        write_spectrum(&[1.0, -1.0, -1.0, 1.0], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "config_index\tenergy\n0\t1\n1\t-1\n2\t-1\n3\t1\n");
    }

    #[test]
    fn bits_round_trip() {
        assert_eq!(parse_bits("011", 3).unwrap(), 0b110);
        assert_eq!(format_bits(0b110, 3), "011");
        assert!(parse_bits("0x1", 3).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn spin_flip_symmetry_and_parity(n in 2usize..11, d in 0.3f64..1.0, seed: u64) {
            let Ok(inst) = gen_random_ising(n, d, seed) else { return Ok(()) };
            let costs = cost_vector(&inst).unwrap();
            let mask = (1u64 << n) - 1;
            let m = inst.num_edges() as i64;
            for (k, &c) in costs.iter().enumerate() {
                prop_assert_eq!(c, costs[(!(k as u64) & mask) as usize]);
                prop_assert_eq!(c.fract(), 0.0);
                prop_assert_eq!((c as i64 - m).rem_euclid(2), 0);
            }
            let sol = ExactSolution::from_costs(&costs, usize::MAX).unwrap();
            prop_assert_eq!(sol.degeneracy % 2, 0);
            prop_assert!(!sol.has_zero_minimum());
        }

        #[test]
        fn cost_vector_agrees_with_energy(n in 2usize..12, d in 0.3f64..1.0, w in 0.1f64..100.0, seed: u64) {
            let Ok(inst) = gen_weighted_maxcut(n, d, w, seed) else { return Ok(()) };
            let costs = cost_vector(&inst).unwrap();
            for k in 0..costs.len().min(1000) {
                let k = (k as u64).wrapping_mul(0x9e37_79b9) % costs.len() as u64;
                prop_assert_eq!(costs[k as usize], energy(&inst, k).unwrap());
            }
            let sol = solve_exact(&inst).unwrap();
            let min = costs.iter().copied().fold(f64::INFINITY, f64::min);
            prop_assert_eq!(sol.e_min, min);
            for &g in &sol.ground_states {
                prop_assert_eq!(energy(&inst, g).unwrap(), sol.e_min);
            }
        }
    }
}
