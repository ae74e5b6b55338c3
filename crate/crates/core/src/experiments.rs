//! Experiment harnesses: landscape sweeps, transfer batches, the weighted
//! max-cut scaling study and the state-fidelity study.
//!
//! Independent tasks run on the rayon pool. Each task derives its own seed
//! from the batch seed and its index, and results are assembled in index
//! order, so output does not depend on the number of worker threads.

use std::collections::BTreeMap;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::exact::{cost_vector, ExactSolution, DEFAULT_GROUND_STATE_CAP};
use crate::instances::{
    gen_maxcut, gen_random_ising, gen_weighted_maxcut, min_connected_density, HamiltonianKind,
    IsingInstance,
};
use crate::optimizer::{optimize_costs, SearchSpec};
use crate::schedule::{materialize, LinearParams, PARAM_NAMES};
use crate::simulator::{
    exact_expectation, fidelity, run_qaoa_with_costs, sample, sampled_expectation, QaoaState,
    ShotHistogram,
};
use crate::{derive_seed, Error, Result};

/// Ratio above which a destination counts as solved.
pub const SOLVABLE_RATIO: f64 = 0.8;

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| {
            if k + 1 == n {
                hi
            } else {
                lo + (hi - lo) * k as f64 / (n - 1) as f64
            }
        })
        .collect()
}

// ---------------------------------------------------------------- landscape

/// Which slope/intercept pair a landscape sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepPair {
    Gamma,
    Beta,
}

impl SweepPair {
    /// Indices of (slope, intercept) in [`LinearParams::to_array`] order.
    fn coords(self) -> (usize, usize) {
        match self {
            SweepPair::Gamma => (0, 1),
            SweepPair::Beta => (2, 3),
        }
    }
}

/// Sweep window: `slope` runs along the columns, `intercept` along the rows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub slope: (f64, f64),
    pub intercept: (f64, f64),
    pub slope_points: usize,
    pub intercept_points: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            slope: (-2.0, 2.0),
            intercept: (-2.0, 2.0),
            slope_points: 64,
            intercept_points: 64,
        }
    }
}

impl GridSpec {
    pub fn square(lo: f64, hi: f64, points: usize) -> Self {
        GridSpec {
            slope: (lo, hi),
            intercept: (lo, hi),
            slope_points: points,
            intercept_points: points,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.slope_points < 2 || self.intercept_points < 2 {
            return Err(Error::invalid(
                "landscape resolution must be at least 2 per axis",
            ));
        }
        for (lo, hi) in [self.slope, self.intercept] {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::invalid(format!("bad landscape range ({lo}, {hi})")));
            }
        }
        Ok(())
    }
}

/// Exact expectation over a slope/intercept grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LandscapeGrid {
    pub pair: SweepPair,
    pub p: usize,
    /// Parameters the sweep starts from; the swept pair is overwritten.
    pub fixed: LinearParams,
    pub slope_values: Vec<f64>,
    pub intercept_values: Vec<f64>,
    /// `values[row][col]` at `intercept_values[row]`, `slope_values[col]`.
    pub values: Vec<Vec<f64>>,
}

impl LandscapeGrid {
    pub fn slope_name(&self) -> &'static str {
        PARAM_NAMES[self.pair.coords().0]
    }

    pub fn intercept_name(&self) -> &'static str {
        PARAM_NAMES[self.pair.coords().1]
    }

    /// Parameters of cell `(row, col)`.
    pub fn params_at(&self, row: usize, col: usize) -> LinearParams {
        let (a, b) = self.pair.coords();
        let mut x = self.fixed.to_array();
        x[a] = self.slope_values[col];
        x[b] = self.intercept_values[row];
        LinearParams::from_array(x).expect("grid values are finite")
    }

    /// `(row, col, value)` of the lowest cell; the first one in row-major
    /// order wins ties.
    pub fn argmin(&self) -> (usize, usize, f64) {
        let mut best = (0, 0, f64::INFINITY);
        for (r, row) in self.values.iter().enumerate() {
            for (c, &v) in row.iter().enumerate() {
                if v < best.2 {
                    best = (r, c, v);
                }
            }
        }
        best
    }

    /// Header lines starting with `#`, then one comma-separated row per
    /// intercept value.
    pub fn write_text(&self, mut out: impl Write) -> Result<()> {
        let join = |v: &[f64]| {
            v.iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join(",")
        };
        writeln!(out, "# p={}", self.p)?;
        writeln!(
            out,
            "# fixed {}",
            PARAM_NAMES
                .iter()
                .zip(self.fixed.to_array())
                .map(|(n, v)| format!("{n}={v}"))
                .collect::<Vec<_>>()
                .join(" ")
        )?;
        writeln!(
            out,
            "# columns {} {}",
            self.slope_name(),
            join(&self.slope_values)
        )?;
        writeln!(
            out,
            "# rows {} {}",
            self.intercept_name(),
            join(&self.intercept_values)
        )?;
        for row in &self.values {
            writeln!(out, "{}", join(row))?;
        }
        Ok(())
    }
}

/// Sweeps `pair` of `fixed` over `grid` on `inst`, recording the exact
/// expectation of every cell.
pub fn landscape(
    inst: &IsingInstance,
    p: usize,
    pair: SweepPair,
    fixed: LinearParams,
    grid: &GridSpec,
) -> Result<LandscapeGrid> {
    landscape_costs(&cost_vector(inst)?, p, pair, fixed, grid)
}

pub fn landscape_costs(
    costs: &[f64],
    p: usize,
    pair: SweepPair,
    fixed: LinearParams,
    grid: &GridSpec,
) -> Result<LandscapeGrid> {
    grid.validate()?;
    materialize(&fixed, p)?;
    let mut out = LandscapeGrid {
        pair,
        p,
        fixed,
        slope_values: linspace(grid.slope.0, grid.slope.1, grid.slope_points),
        intercept_values: linspace(grid.intercept.0, grid.intercept.1, grid.intercept_points),
        values: Vec::new(),
    };
    let cells: Vec<(usize, usize)> = (0..grid.intercept_points)
        .flat_map(|r| (0..grid.slope_points).map(move |c| (r, c)))
        .collect();
    let flat = cells
        .par_iter()
        .map(|&(r, c)| {
            let state = run_qaoa_with_costs(costs, &out.params_at(r, c).materialize(p)?)?;
            exact_expectation(&state, costs)
        })
        .collect::<Result<Vec<f64>>>()?;
    out.values = flat
        .chunks(grid.slope_points)
        .map(<[f64]>::to_vec)
        .collect();
    Ok(out)
}

// ----------------------------------------------------------------- transfer

/// Features identifying a destination instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InstanceDescriptor {
    pub n: usize,
    pub d_edges: f64,
    pub kind: HamiltonianKind,
    pub seed: u64,
}

impl InstanceDescriptor {
    pub fn of(inst: &IsingInstance) -> Self {
        InstanceDescriptor {
            n: inst.n_qubits(),
            d_edges: inst.edge_density(),
            kind: inst.kind(),
            seed: inst.seed(),
        }
    }
}

/// Outcome of running one destination with transferred parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferResult {
    pub instance: InstanceDescriptor,
    pub exp_energy: f64,
    pub e_exact: f64,
    pub ratio: f64,
    /// `None` in exact mode.
    pub histogram: Option<ShotHistogram>,
    /// Rank of the ground energy among observed energy levels ordered by
    /// frequency, 0 being the most frequent. Levels tied with the ground
    /// level do not push it down. `None` if the ground energy never occurs.
    pub ground_hit_rank: Option<usize>,
    pub solvable: bool,
}

/// One line of a transfer output file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferRecord {
    pub n: usize,
    pub d_edges: f64,
    pub seed: u64,
    pub e_exact: f64,
    pub exp_energy: f64,
    pub ratio: f64,
    pub ground_hit_rank: Option<usize>,
    pub solvable: bool,
}

impl From<&TransferResult> for TransferRecord {
    fn from(r: &TransferResult) -> Self {
        TransferRecord {
            n: r.instance.n,
            d_edges: r.instance.d_edges,
            seed: r.instance.seed,
            e_exact: r.e_exact,
            exp_energy: r.exp_energy,
            ratio: r.ratio,
            ground_hit_rank: r.ground_hit_rank,
            solvable: r.solvable,
        }
    }
}

/// Pools weights by energy value (levels closer than `1e-9` relative are
/// merged) and ranks the lowest level. Returns `None` if the lowest observed
/// level is not the ground energy.
fn ground_rank(levels: impl IntoIterator<Item = (f64, f64)>, e_min: f64) -> Option<usize> {
    let mut pairs: Vec<(f64, f64)> = levels.into_iter().filter(|&(_, w)| w > 0.0).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0);
    let mut pooled: Vec<(f64, f64)> = Vec::new();
    for (e, w) in pairs {
        match pooled.last_mut() {
            Some(last) if close(last.0, e) => last.1 += w,
            _ => pooled.push((e, w)),
        }
    }
    let &(e0, w0) = pooled.first()?;
    if !close(e0, e_min) {
        return None;
    }
    Some(pooled.iter().filter(|&&(_, w)| w > w0).count())
}

/// Ground-energy rank from a shot histogram.
pub fn histogram_ground_rank(hist: &ShotHistogram, costs: &[f64], e_min: f64) -> Option<usize> {
    ground_rank(
        hist.counts
            .iter()
            .map(|(&k, &c)| (costs[k as usize], c as f64)),
        e_min,
    )
}

/// Ground-energy rank from exact measurement probabilities.
pub fn exact_ground_rank(state: &QaoaState, costs: &[f64], e_min: f64) -> Option<usize> {
    ground_rank(
        state
            .probabilities()
            .into_iter()
            .zip(costs)
            .map(|(p, &c)| (c, p)),
        e_min,
    )
}

/// Runs `params` on one destination. `shots == 0` uses the exact expectation
/// and exact level probabilities; otherwise `shots` samples drawn with `seed`.
pub fn transfer_one(
    params: &LinearParams,
    p: usize,
    dest: &IsingInstance,
    shots: u64,
    seed: u64,
) -> Result<TransferResult> {
    let costs = cost_vector(dest)?;
    let exact = ExactSolution::from_costs(&costs, DEFAULT_GROUND_STATE_CAP)?;
    if exact.has_zero_minimum() {
        return Err(Error::ZeroGroundEnergy);
    }
    let state = run_qaoa_with_costs(&costs, &materialize(params, p)?)?;
    let (exp_energy, histogram, rank) = if shots == 0 {
        let e = exact_expectation(&state, &costs)?;
        (e, None, exact_ground_rank(&state, &costs, exact.e_min))
    } else {
        let hist = sample(&state, shots, seed)?;
        let e = sampled_expectation(&hist, &costs)?;
        let rank = histogram_ground_rank(&hist, &costs, exact.e_min);
        (e, Some(hist), rank)
    };
    let ratio = exact.ratio(exp_energy)?;
    Ok(TransferResult {
        instance: InstanceDescriptor::of(dest),
        exp_energy,
        e_exact: exact.e_min,
        ratio,
        histogram,
        ground_hit_rank: rank,
        solvable: rank == Some(0) && ratio > SOLVABLE_RATIO,
    })
}

/// Runs the same parameters on every destination. Destination `i` samples
/// with `derive_seed(seed, i)`. A failing destination yields an error entry
/// and the batch continues.
pub fn transfer_batch(
    params: &LinearParams,
    p: usize,
    destinations: &[IsingInstance],
    shots: u64,
    seed: u64,
) -> Result<Vec<Result<TransferResult>>> {
    materialize(params, p)?;
    Ok(destinations
        .par_iter()
        .enumerate()
        .map(|(i, dest)| transfer_one(params, p, dest, shots, derive_seed(seed, i as u64)))
        .collect())
}

/// One JSON object per line; failed destinations become
/// `{"index": i, "error": "..."}`.
pub fn write_transfer_records(
    results: &[Result<TransferResult>],
    mut out: impl Write,
) -> Result<()> {
    for (i, r) in results.iter().enumerate() {
        let line = match r {
            Ok(r) => serde_json::to_string(&TransferRecord::from(r))?,
            Err(e) => serde_json::json!({ "index": i, "error": e.to_string() }).to_string(),
        };
        writeln!(out, "{line}")?;
    }
    Ok(())
}

/// Min, mean and max ratio plus the solvable fraction over successful
/// destinations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransferSummary {
    pub count: usize,
    pub failed: usize,
    pub min_ratio: f64,
    pub mean_ratio: f64,
    pub max_ratio: f64,
    pub solvable_fraction: f64,
}

pub fn summarize_transfer(results: &[Result<TransferResult>]) -> TransferSummary {
    let ok: Vec<&TransferResult> = results.iter().filter_map(|r| r.as_ref().ok()).collect();
    let ratios: Vec<f64> = ok.iter().map(|r| r.ratio).collect();
    let count = ok.len();
    let denom = count.max(1) as f64;
    TransferSummary {
        count,
        failed: results.len() - count,
        min_ratio: ratios.iter().copied().fold(f64::INFINITY, f64::min),
        mean_ratio: ratios.iter().sum::<f64>() / denom,
        max_ratio: ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        solvable_fraction: ok.iter().filter(|r| r.solvable).count() as f64 / denom,
    }
}

/// Instance family and feature ranges for random destination sets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DestinationSpec {
    pub kind: HamiltonianKind,
    pub n: usize,
    pub d_min: f64,
    pub d_max: f64,
    /// Energy scale, used only for weighted max-cut.
    pub w: f64,
}

/// Draws `count` connected instances. Instance `i` uses
/// `derive_seed(seed, i)` both for its density and its graph. Densities are
/// uniform on `[max(d_min, (n-1)/C(n,2)), d_max]`, since sparser graphs
/// cannot be connected.
pub fn random_destinations(
    spec: &DestinationSpec,
    count: usize,
    seed: u64,
) -> Result<Vec<IsingInstance>> {
    let lo = spec.d_min.max(min_connected_density(spec.n));
    if !(lo <= spec.d_max && spec.d_max <= 1.0) {
        return Err(Error::invalid(format!(
            "density range [{}, {}] holds no connected graph on {} nodes",
            spec.d_min, spec.d_max, spec.n
        )));
    }
    (0..count)
        .into_par_iter()
        .map(|i| {
            let s = derive_seed(seed, i as u64);
            let d = if lo == spec.d_max {
                lo
            } else {
                ChaCha8Rng::seed_from_u64(s).random_range(lo..=spec.d_max)
            };
            match spec.kind {
                HamiltonianKind::RandomIsing => gen_random_ising(spec.n, d, s),
                HamiltonianKind::MaxCut => gen_maxcut(spec.n, d, s),
                HamiltonianKind::WeightedMaxCut => gen_weighted_maxcut(spec.n, d, spec.w, s),
            }
        })
        .collect()
}

// ---------------------------------------------------------- weighted study

/// Settings for [`weighted_scaling_study`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedStudySpec {
    /// Inclusive node-count range.
    pub n_range: (usize, usize),
    pub d_range: (f64, f64),
    pub w_values: Vec<f64>,
    /// Instances generated per weight.
    pub per_cell_count: usize,
    /// Search settings; `seed` is replaced per instance.
    pub search: SearchSpec,
    pub seed: u64,
}

impl Default for WeightedStudySpec {
    fn default() -> Self {
        WeightedStudySpec {
            n_range: (5, 12),
            d_range: (0.1, 1.0),
            w_values: vec![0.1, 1.0, 10.0, 100.0, 1000.0],
            per_cell_count: 40,
            search: SearchSpec::default(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightedStudyRow {
    pub n: usize,
    pub d_edges: f64,
    pub w: f64,
    pub instance_seed: u64,
    pub params: LinearParams,
    pub best_value: f64,
    /// Exact expectation at `params` over the exact minimum.
    pub ratio: f64,
}

/// Optimizes a fresh weighted max-cut instance for every `(w, i)` cell.
/// Cell `k` in w-major order uses `derive_seed(seed, k)` for its instance and
/// for its search.
pub fn weighted_scaling_study(spec: &WeightedStudySpec) -> Result<Vec<WeightedStudyRow>> {
    let (n_lo, n_hi) = spec.n_range;
    if n_lo < 2 || n_lo > n_hi {
        return Err(Error::invalid(format!("bad node range [{n_lo}, {n_hi}]")));
    }
    if let Some(w) = spec.w_values.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
        return Err(Error::invalid(format!(
            "weight factor must be positive, got {w}"
        )));
    }
    let (d_lo, d_hi) = spec.d_range;
    if !(d_lo <= d_hi && d_hi <= 1.0 && d_hi >= min_connected_density(n_hi)) {
        return Err(Error::invalid(format!(
            "bad density range [{d_lo}, {d_hi}]"
        )));
    }
    let cells: Vec<(f64, u64)> = spec
        .w_values
        .iter()
        .flat_map(|&w| (0..spec.per_cell_count).map(move |_| w))
        .enumerate()
        .map(|(k, w)| (w, derive_seed(spec.seed, k as u64)))
        .collect();
    cells
        .par_iter()
        .map(|&(w, s)| {
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            // Resample the node count until the density range admits a
            // connected graph.
            let (n, lo) = loop {
                let n = rng.random_range(n_lo..=n_hi);
                let lo = d_lo.max(min_connected_density(n));
                if lo <= d_hi {
                    break (n, lo);
                }
            };
            let d = if lo == d_hi {
                lo
            } else {
                rng.random_range(lo..=d_hi)
            };
            let inst = gen_weighted_maxcut(n, d, w, s)?;
            let costs = cost_vector(&inst)?;
            let exact = ExactSolution::from_costs(&costs, DEFAULT_GROUND_STATE_CAP)?;
            let search = SearchSpec {
                seed: s,
                ..spec.search.clone()
            };
            let trace = optimize_costs(&costs, &search)?;
            let state = run_qaoa_with_costs(&costs, &trace.best_params.materialize(search.p)?)?;
            Ok(WeightedStudyRow {
                n,
                d_edges: inst.edge_density(),
                w,
                instance_seed: s,
                params: trace.best_params,
                best_value: trace.best_value,
                ratio: exact.ratio(exact_expectation(&state, &costs)?)?,
            })
        })
        .collect()
}

pub fn write_weighted_rows(rows: &[WeightedStudyRow], mut out: impl Write) -> Result<()> {
    writeln!(
        out,
        "n,d_edges,w,instance_seed,{},best_value,ratio",
        PARAM_NAMES.join(",")
    )?;
    for r in rows {
        let x = r.params.to_array();
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.n, r.d_edges, r.w, r.instance_seed, x[0], x[1], x[2], x[3], r.best_value, r.ratio
        )?;
    }
    Ok(())
}

/// Per-weight medians of the absolute optimal parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightLevel {
    pub w: f64,
    pub count: usize,
    pub median_abs: [f64; 4],
    pub fraction_above_threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedSummary {
    /// Ascending in `w`.
    pub levels: Vec<WeightLevel>,
    /// Kendall tau-b between `w` and `|param|`, per coordinate.
    pub kendall_tau: [f64; 4],
    pub fraction_above_threshold: f64,
}

pub fn median(values: &mut [f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.sort_by(f64::total_cmp);
    let m = values.len() / 2;
    if values.len() % 2 == 1 {
        values[m]
    } else {
        0.5 * (values[m - 1] + values[m])
    }
}

/// Kendall rank correlation with the tau-b tie correction. NaN when either
/// input is constant.
pub fn kendall_tau_b(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len().min(y.len());
    let (mut concordant, mut discordant) = (0i64, 0i64);
    let (mut ties_x, mut ties_y) = (0i64, 0i64);
    for i in 0..n {
        for j in i + 1..n {
            let dx = x[i].total_cmp(&x[j]) as i64;
            let dy = y[i].total_cmp(&y[j]) as i64;
            match (dx, dy) {
                (0, 0) => {}
                (0, _) => ties_x += 1,
                (_, 0) => ties_y += 1,
                _ if dx == dy => concordant += 1,
                _ => discordant += 1,
            }
        }
    }
    let n0 = concordant + discordant;
    let denom = (((n0 + ties_x) * (n0 + ties_y)) as f64).sqrt();
    (concordant - discordant) as f64 / denom
}

pub fn summarize_weighted(rows: &[WeightedStudyRow]) -> WeightedSummary {
    let mut by_w: BTreeMap<u64, Vec<&WeightedStudyRow>> = BTreeMap::new();
    for r in rows {
        // Positive floats order like their bit patterns.
        by_w.entry(r.w.to_bits()).or_default().push(r);
    }
    let above = |rs: &[&WeightedStudyRow]| {
        rs.iter().filter(|r| r.ratio > SOLVABLE_RATIO).count() as f64 / rs.len().max(1) as f64
    };
    let levels = by_w
        .values()
        .map(|rs| {
            let median_abs = std::array::from_fn(|d| {
                let mut v: Vec<f64> = rs.iter().map(|r| r.params.to_array()[d].abs()).collect();
                median(&mut v)
            });
            WeightLevel {
                w: rs[0].w,
                count: rs.len(),
                median_abs,
                fraction_above_threshold: above(rs),
            }
        })
        .collect();
    let ws: Vec<f64> = rows.iter().map(|r| r.w).collect();
    let kendall_tau = std::array::from_fn(|d| {
        let v: Vec<f64> = rows.iter().map(|r| r.params.to_array()[d].abs()).collect();
        kendall_tau_b(&ws, &v)
    });
    let all: Vec<&WeightedStudyRow> = rows.iter().collect();
    WeightedSummary {
        levels,
        kendall_tau,
        fraction_above_threshold: above(&all),
    }
}

/// Length of the longest non-increasing subsequence.
pub fn longest_non_increasing(values: &[f64]) -> usize {
    let mut best = vec![1usize; values.len()];
    for i in 0..values.len() {
        for j in 0..i {
            if values[i] <= values[j] {
                best[i] = best[i].max(best[j] + 1);
            }
        }
    }
    best.into_iter().max().unwrap_or(0)
}

// ---------------------------------------------------------- fidelity study

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FidelityRow {
    pub d_edges: f64,
    pub seed: u64,
    /// `|<source|destination>|` of the final states.
    pub fidelity: f64,
    /// Exact expectation over exact minimum.
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FidelityStudy {
    /// The source compared with itself.
    pub source: FidelityRow,
    pub destinations: Vec<FidelityRow>,
}

fn final_state_and_ratio(
    inst: &IsingInstance,
    params: &LinearParams,
    p: usize,
) -> Result<(QaoaState, f64)> {
    let costs = cost_vector(inst)?;
    let exact = ExactSolution::from_costs(&costs, DEFAULT_GROUND_STATE_CAP)?;
    let state = run_qaoa_with_costs(&costs, &materialize(params, p)?)?;
    let ratio = exact.ratio(exact_expectation(&state, &costs)?)?;
    Ok((state, ratio))
}

/// Overlap of each destination's final state with the source's, under the
/// same parameters, alongside each destination's ratio.
pub fn fidelity_study(
    source: &IsingInstance,
    params: &LinearParams,
    destinations: &[IsingInstance],
    p: usize,
) -> Result<FidelityStudy> {
    let n = source.n_qubits();
    if let Some(d) = destinations.iter().find(|d| d.n_qubits() != n) {
        return Err(Error::invalid(format!(
            "fidelity needs equal sizes: source has {n} qubits, destination has {}",
            d.n_qubits()
        )));
    }
    let (src_state, src_ratio) = final_state_and_ratio(source, params, p)?;
    let row = |inst: &IsingInstance, state: &QaoaState, ratio: f64| -> Result<FidelityRow> {
        Ok(FidelityRow {
            d_edges: inst.edge_density(),
            seed: inst.seed(),
            fidelity: fidelity(&src_state, state)?,
            ratio,
        })
    };
    let source_row = row(source, &src_state, src_ratio)?;
    let destinations = destinations
        .par_iter()
        .map(|d| {
            let (state, ratio) = final_state_and_ratio(d, params, p)?;
            row(d, &state, ratio)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FidelityStudy {
        source: source_row,
        destinations,
    })
}

/// Source row first, then destinations.
pub fn write_fidelity_rows(study: &FidelityStudy, mut out: impl Write) -> Result<()> {
    writeln!(out, "role,d_edges,seed,fidelity,ratio")?;
    let rows = std::iter::once(("source", &study.source))
        .chain(study.destinations.iter().map(|r| ("destination", r)));
    for (role, r) in rows {
        writeln!(
            out,
            "{role},{},{},{},{}",
            r.d_edges, r.seed, r.fidelity, r.ratio
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn single_edge() -> IsingInstance {
        IsingInstance::new(
            2,
            vec![(0, 1, 1.0).into()],
            HamiltonianKind::RandomIsing,
            1.0,
            0,
        )
        .unwrap()
    }

    fn triangle() -> IsingInstance {
        let edges = vec![(0, 1, 1.0).into(), (1, 2, 1.0).into(), (0, 2, 1.0).into()];
        IsingInstance::new(3, edges, HamiltonianKind::RandomIsing, 1.0, 0).unwrap()
    }

    #[test]
    fn grid_shape_and_bounds() {
        let inst = gen_random_ising(6, 0.6, 3).unwrap();
        let exact = crate::solve_exact(&inst).unwrap();
        let g = landscape(
            &inst,
            4,
            SweepPair::Gamma,
            LinearParams::ISING_N16_D060,
            &GridSpec::square(-1.0, 1.0, 3),
        )
        .unwrap();
        assert_eq!(g.values.len(), 3);
        assert!(g.values.iter().all(|r| r.len() == 3));
        for v in g.values.iter().flatten() {
            assert!(*v >= exact.e_min - 1e-9 && *v <= exact.e_max + 1e-9);
        }
        assert!(landscape(
            &inst,
            4,
            SweepPair::Gamma,
            LinearParams::ISING_N16_D060,
            &GridSpec::square(-1.0, 1.0, 1)
        )
        .is_err());
    }

    #[test]
    fn single_edge_gamma_sweep_finds_the_closed_form_minimum() {
        let fixed = LinearParams::new(0.0, 0.0, 0.0, 3.0 * PI / 8.0).unwrap();
        let grid = GridSpec {
            slope: (-1.0, 1.0),
            intercept: (0.0, PI / 2.0),
            slope_points: 3,
            intercept_points: 65,
        };
        let g = landscape(&single_edge(), 1, SweepPair::Gamma, fixed, &grid).unwrap();
        let (row, _, v) = g.argmin();
        assert!((v + 1.0).abs() < 1e-12, "{v}");
        assert!((g.intercept_values[row] - PI / 4.0).abs() < 1e-12);
    }

    #[test]
    fn p1_rows_do_not_depend_on_the_slope() {
        let inst = gen_random_ising(5, 0.7, 1).unwrap();
        let g = landscape(
            &inst,
            1,
            SweepPair::Gamma,
            LinearParams::ISING_N16_D060,
            &GridSpec::square(-2.0, 2.0, 5),
        )
        .unwrap();
        for row in &g.values {
            assert!(row.iter().all(|&v| v == row[0]));
        }
    }

    #[test]
    fn grid_minimum_reruns_bit_exactly() {
        let inst = gen_random_ising(6, 0.5, 9).unwrap();
        let g = landscape(
            &inst,
            3,
            SweepPair::Beta,
            LinearParams::ISING_N16_D060,
            &GridSpec::square(-1.0, 1.0, 7),
        )
        .unwrap();
        let (r, c, v) = g.argmin();
        let costs = cost_vector(&inst).unwrap();
        let state =
            run_qaoa_with_costs(&costs, &g.params_at(r, c).materialize(3).unwrap()).unwrap();
        assert_eq!(exact_expectation(&state, &costs).unwrap(), v);
    }

    #[test]
    fn landscape_text_has_headers_and_rows() {
        let g = landscape(
            &triangle(),
            2,
            SweepPair::Gamma,
            LinearParams::ISING_N16_D060,
            &GridSpec::square(-1.0, 1.0, 4),
        )
        .unwrap();
        let mut buf = Vec::new();
        g.write_text(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 8);
        assert!(lines[2].starts_with("# columns gamma_slope -1,"));
        assert!(lines[3].starts_with("# rows gamma_intcp -1,"));
        assert_eq!(lines[4].split(',').count(), 4);
    }

    #[test]
    fn rank_pools_degenerate_ground_states() {
        // Energies: -1 twice (counts 3 + 3), 1 once (count 5).
        let costs = [-1.0, 1.0, 1.0, -1.0];
        let hist = ShotHistogram {
            counts: [(0, 3), (3, 3), (1, 5)].into_iter().collect(),
            shots: 11,
        };
        assert_eq!(histogram_ground_rank(&hist, &costs, -1.0), Some(0));
        let hist = ShotHistogram {
            counts: [(0, 3), (1, 4), (2, 4)].into_iter().collect(),
            shots: 11,
        };
        assert_eq!(histogram_ground_rank(&hist, &costs, -1.0), Some(1));
        let hist = ShotHistogram {
            counts: [(1, 4)].into_iter().collect(),
            shots: 4,
        };
        assert_eq!(histogram_ground_rank(&hist, &costs, -1.0), None);
    }

    #[test]
    fn transfer_ratio_recomputes_from_histogram() {
        let dests = random_destinations(
            &DestinationSpec {
                kind: HamiltonianKind::RandomIsing,
                n: 7,
                d_min: 0.3,
                d_max: 0.9,
                w: 1.0,
            },
            6,
            5,
        )
        .unwrap();
        let results = transfer_batch(&LinearParams::ISING_N16_D060, 4, &dests, 2000, 1).unwrap();
        for (dest, r) in dests.iter().zip(&results) {
            let r = r.as_ref().unwrap();
            let costs = cost_vector(dest).unwrap();
            let e = sampled_expectation(r.histogram.as_ref().unwrap(), &costs).unwrap();
            assert!((e / r.e_exact - r.ratio).abs() < 1e-12);
            assert_eq!(r.solvable, r.ground_hit_rank == Some(0) && r.ratio > 0.8);
            assert!(r.ratio <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn transfer_batch_is_deterministic_and_order_stable() {
        let spec = DestinationSpec {
            kind: HamiltonianKind::MaxCut,
            n: 6,
            d_min: 0.4,
            d_max: 0.8,
            w: 1.0,
        };
        let dests = random_destinations(&spec, 5, 2).unwrap();
        let a = transfer_batch(&LinearParams::ISING_N16_D060, 3, &dests, 500, 9).unwrap();
        let b = transfer_batch(&LinearParams::ISING_N16_D060, 3, &dests[..3], 500, 9).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.as_ref().unwrap(), y.as_ref().unwrap());
        }
    }

    #[test]
    fn exact_mode_transfer() {
        let r = transfer_one(&LinearParams::ISING_N16_D060, 2, &triangle(), 0, 0).unwrap();
        assert!(r.histogram.is_none());
        let costs = cost_vector(&triangle()).unwrap();
        let state = run_qaoa_with_costs(
            &costs,
            &LinearParams::ISING_N16_D060.materialize(2).unwrap(),
        )
        .unwrap();
        assert_eq!(r.exp_energy, exact_expectation(&state, &costs).unwrap());
        assert_eq!(r.ratio, r.exp_energy / -1.0);
    }

    #[test]
    fn random_destinations_respect_ranges() {
        let spec = DestinationSpec {
            kind: HamiltonianKind::RandomIsing,
            n: 16,
            d_min: 0.1,
            d_max: 1.0,
            w: 1.0,
        };
        let dests = random_destinations(&spec, 40, 3).unwrap();
        let floor = min_connected_density(16);
        for d in &dests {
            assert_eq!(d.n_qubits(), 16);
            assert!(d.edge_density() >= floor - 1e-12 && d.edge_density() <= 1.0);
        }
        let again = random_destinations(&spec, 40, 3).unwrap();
        assert_eq!(dests, again);
        let bad = DestinationSpec {
            d_max: 0.05,
            ..spec
        };
        assert!(random_destinations(&bad, 1, 0).is_err());
    }

    #[test]
    fn kendall_tau_known_values() {
        assert_eq!(kendall_tau_b(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]), 1.0);
        assert_eq!(kendall_tau_b(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]), -1.0);
        // x = [1,1,2,2], y = [1,2,3,4]: 4 concordant, 0 discordant, 2 ties in x.
        let t = kendall_tau_b(&[1.0, 1.0, 2.0, 2.0], &[1.0, 2.0, 3.0, 4.0]);
        assert!((t - 4.0 / (4.0f64 * 6.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn median_and_monotone_runs() {
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&mut [4.0, 1.0, 2.0, 3.0]), 2.5);
        assert_eq!(longest_non_increasing(&[5.0, 4.0, 4.5, 3.0, 1.0]), 4);
        assert_eq!(longest_non_increasing(&[]), 0);
    }

    #[test]
    fn small_weighted_study() {
        let spec = WeightedStudySpec {
            n_range: (4, 5),
            d_range: (0.5, 1.0),
            w_values: vec![1.0, 10.0],
            per_cell_count: 2,
            search: SearchSpec {
                budget: 20,
                p: 2,
                shots: 0,
                ..SearchSpec::default()
            },
            seed: 4,
        };
        let rows = weighted_scaling_study(&spec).unwrap();
        assert_eq!(rows.len(), 4);
        assert_eq!((rows[0].w, rows[3].w), (1.0, 10.0));
        assert!(rows.iter().all(|r| r.ratio <= 1.0 + 1e-12));
        let summary = summarize_weighted(&rows);
        assert_eq!(summary.levels.len(), 2);
        assert_eq!(rows, weighted_scaling_study(&spec).unwrap());
        let bad = WeightedStudySpec {
            w_values: vec![0.0],
            ..spec
        };
        assert!(weighted_scaling_study(&bad).is_err());
    }

    #[test]
    fn fidelity_of_source_with_itself() {
        let src = gen_random_ising(8, 0.5, 1).unwrap();
        let dests = vec![src.clone(), gen_random_ising(8, 0.9, 2).unwrap()];
        let study = fidelity_study(&src, &LinearParams::ISING_N16_D060, &dests, 8).unwrap();
        assert!((study.source.fidelity - 1.0).abs() < 1e-10);
        assert!((study.destinations[0].fidelity - 1.0).abs() < 1e-10);
        assert!(study
            .destinations
            .iter()
            .all(|r| (0.0..=1.0 + 1e-12).contains(&r.fidelity)));
        let other = gen_random_ising(6, 0.5, 1).unwrap();
        assert!(fidelity_study(&src, &LinearParams::ISING_N16_D060, &[other], 8).is_err());
    }
}
