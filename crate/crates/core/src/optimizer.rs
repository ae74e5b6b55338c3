//! Derivative-free search over the four linear schedule parameters.
//!
//! The sampler is a tree-structured Parzen estimator: after a uniform warmup,
//! past trials are split at the `split_quantile` of their values into a good
//! and a bad set, each set is turned into a product-kernel density, and the
//! next point is the candidate (drawn from the good density) that maximizes
//! `log l_good(x) - log l_bad(x)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::exact::cost_vector;
use crate::instances::IsingInstance;
use crate::schedule::{materialize, LinearParams};
use crate::simulator::{exact_expectation, run_qaoa_with_costs, sample, sampled_expectation};
use crate::{derive_seed, Error, Result, DEFAULT_LAYERS, DEFAULT_SHOTS};

/// Half-width of the default search box. With full-angle gates
/// `exp(-i gamma C)` and `exp(-i beta X)` this window holds the useful basin
/// of ±1 Ising instances while leaving out the weaker copies near
/// `gamma = ±pi/2`.
pub const DEFAULT_BOUND: f64 = 1.0;

/// Box, budget and objective settings for [`optimize`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSpec {
    /// `(low, high)` per coordinate, in `[gamma_slope, gamma_intcp,
    /// beta_slope, beta_intcp]` order.
    pub bounds: [(f64, f64); 4],
    /// Number of objective evaluations.
    pub budget: usize,
    /// Circuit depth.
    pub p: usize,
    /// 0 evaluates the exact expectation; otherwise the sampled expectation
    /// over this many shots.
    pub shots: u64,
    pub seed: u64,
    /// How the two gamma coordinates are searched.
    #[serde(default)]
    pub gamma_axis: GammaAxis,
}

/// Search scale of `gamma_slope` and `gamma_intcp`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "scale")]
pub enum GammaAxis {
    /// Uniform within `bounds`.
    #[default]
    Linear,
    /// `gamma = sign(v) * min_abs * (max_abs / min_abs)^|v|` for a searched
    /// `v` in `[-1, 1]`. The gamma entries of `bounds` are ignored. Suits
    /// cost functions whose energy scale is unknown by orders of magnitude.
    SignedLog { min_abs: f64, max_abs: f64 },
}

impl GammaAxis {
    fn validate(&self) -> Result<()> {
        if let GammaAxis::SignedLog { min_abs, max_abs } = *self {
            if !(min_abs > 0.0 && min_abs < max_abs && max_abs.is_finite()) {
                return Err(Error::invalid(format!(
                    "log gamma range needs 0 < min_abs < max_abs, got [{min_abs}, {max_abs}]"
                )));
            }
        }
        Ok(())
    }

    /// Box coordinate to gamma.
    pub fn to_gamma(&self, v: f64) -> f64 {
        match *self {
            GammaAxis::Linear => v,
            GammaAxis::SignedLog { min_abs, max_abs } => {
                v.signum() * min_abs * (max_abs / min_abs).powf(v.abs())
            }
        }
    }

    fn search_bounds(&self, bounds: &[(f64, f64); 4]) -> [(f64, f64); 4] {
        match self {
            GammaAxis::Linear => *bounds,
            GammaAxis::SignedLog { .. } => [(-1.0, 1.0), (-1.0, 1.0), bounds[2], bounds[3]],
        }
    }
}

impl Default for SearchSpec {
    fn default() -> Self {
        SearchSpec {
            bounds: [(-DEFAULT_BOUND, DEFAULT_BOUND); 4],
            budget: 500,
            p: DEFAULT_LAYERS,
            shots: DEFAULT_SHOTS,
            seed: 0,
            gamma_axis: GammaAxis::Linear,
        }
    }
}

impl SearchSpec {
    fn validate(&self) -> Result<()> {
        self.gamma_axis.validate()?;
        check_bounds(&self.gamma_axis.search_bounds(&self.bounds))?;
        if self.budget == 0 {
            return Err(Error::invalid("search budget must be at least 1"));
        }
        if self.p == 0 {
            return Err(Error::invalid("layer count p must be at least 1"));
        }
        Ok(())
    }
}

fn check_bounds(bounds: &[(f64, f64)]) -> Result<()> {
    if bounds.is_empty() {
        return Err(Error::invalid("search box has no coordinates"));
    }
    for (d, &(lo, hi)) in bounds.iter().enumerate() {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::invalid(format!(
                "empty or non-finite bounds ({lo}, {hi}) for coordinate {d}"
            )));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    pub params: LinearParams,
    pub value: f64,
}

/// Every evaluation in order, plus the best one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchTrace {
    pub trials: Vec<Trial>,
    pub best_params: LinearParams,
    pub best_value: f64,
}

impl SearchTrace {
    /// Best value seen after each trial.
    pub fn running_best(&self) -> Vec<f64> {
        self.trials
            .iter()
            .scan(f64::INFINITY, |best, t| {
                *best = best.min(t.value);
                Some(*best)
            })
            .collect()
    }

    /// Tab-separated `trial, gamma_slope, gamma_intcp, beta_slope,
    /// beta_intcp, value` table.
    pub fn to_table(&self) -> String {
        let mut out =
            String::from("trial\tgamma_slope\tgamma_intcp\tbeta_slope\tbeta_intcp\tvalue\n");
        for (i, t) in self.trials.iter().enumerate() {
            let [a, b, c, d] = t.params.to_array();
            out.push_str(&format!("{i}\t{a}\t{b}\t{c}\t{d}\t{}\n", t.value));
        }
        out
    }
}

/// Tuning knobs of the Parzen sampler.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TpeConfig {
    /// Fraction of trials treated as good.
    pub split_quantile: f64,
    /// Candidates drawn from the good density per proposal.
    pub candidates: usize,
    /// Uniform trials before the model is used; `None` means
    /// `max(10, budget / 10)`.
    pub warmup: Option<usize>,
    /// Kernel widths never drop below `bandwidth_shrink * range *
    /// m^(-1/(D+4))` for `m` points in `D` dimensions, which keeps early
    /// models broad enough to move between basins.
    pub bandwidth_shrink: f64,
}

impl Default for TpeConfig {
    fn default() -> Self {
        TpeConfig {
            split_quantile: 0.25,
            candidates: 24,
            warmup: None,
            bandwidth_shrink: 0.1,
        }
    }
}

/// Sequential ask/tell Parzen sampler on a box.
#[derive(Debug, Clone)]
pub struct TpeSampler {
    bounds: Vec<(f64, f64)>,
    config: TpeConfig,
    warmup: usize,
    rng: ChaCha8Rng,
    history: Vec<(Vec<f64>, f64)>,
}

impl TpeSampler {
    pub fn new(bounds: &[(f64, f64)], budget: usize, config: TpeConfig, seed: u64) -> Result<Self> {
        check_bounds(bounds)?;
        if !(config.split_quantile > 0.0 && config.split_quantile < 1.0) {
            return Err(Error::invalid("split quantile must lie in (0, 1)"));
        }
        if !(config.bandwidth_shrink >= 0.0 && config.bandwidth_shrink.is_finite()) {
            return Err(Error::invalid(
                "bandwidth shrink must be a finite non-negative number",
            ));
        }
        if config.candidates == 0 {
            return Err(Error::invalid("candidate count must be positive"));
        }
        Ok(TpeSampler {
            bounds: bounds.to_vec(),
            warmup: config.warmup.unwrap_or((budget / 10).max(10)),
            config,
            rng: ChaCha8Rng::seed_from_u64(seed),
            history: Vec::new(),
        })
    }

    pub fn ask(&mut self) -> Vec<f64> {
        if self.history.len() < self.warmup.max(2) {
            return self.uniform();
        }
        let mut order: Vec<usize> = (0..self.history.len()).collect();
        order.sort_by(|&a, &b| self.history[a].1.total_cmp(&self.history[b].1));
        let n_good = ((self.config.split_quantile * order.len() as f64).ceil() as usize)
            .clamp(1, order.len() - 1);
        let pick = |idx: &[usize]| -> Vec<&[f64]> {
            idx.iter().map(|&i| self.history[i].0.as_slice()).collect()
        };
        let shrink = self.config.bandwidth_shrink;
        let good = Parzen::fit(&pick(&order[..n_good]), &self.bounds, shrink);
        let bad = Parzen::fit(&pick(&order[n_good..]), &self.bounds, shrink);

        let mut best: Option<(f64, Vec<f64>)> = None;
        for _ in 0..self.config.candidates {
            let x = good.sample(&mut self.rng);
            let score = good.log_pdf(&x) - bad.log_pdf(&x);
            if best.as_ref().is_none_or(|(s, _)| score > *s) {
                best = Some((score, x));
            }
        }
        best.expect("at least one candidate").1
    }

    pub fn tell(&mut self, x: Vec<f64>, value: f64) -> Result<()> {
        if value.is_nan() {
            return Err(Error::Numeric("objective returned NaN".into()));
        }
        if x.len() != self.bounds.len() {
            return Err(Error::LengthMismatch {
                expected: self.bounds.len(),
                found: x.len(),
            });
        }
        self.history.push((x, value));
        Ok(())
    }

    fn uniform(&mut self) -> Vec<f64> {
        self.bounds
            .iter()
            .map(|&(lo, hi)| self.rng.random_range(lo..hi))
            .collect()
    }
}

/// Minimizes `objective` over `bounds` with exactly `budget` evaluations.
/// Returns every `(point, value)` pair in evaluation order.
pub fn minimize<F>(
    bounds: &[(f64, f64)],
    budget: usize,
    config: TpeConfig,
    seed: u64,
    mut objective: F,
) -> Result<Vec<(Vec<f64>, f64)>>
where
    F: FnMut(usize, &[f64]) -> Result<f64>,
{
    let mut sampler = TpeSampler::new(bounds, budget, config, seed)?;
    for trial in 0..budget {
        let x = sampler.ask();
        let value = objective(trial, &x)?;
        sampler.tell(x, value)?;
    }
    Ok(sampler.history)
}

/// Searches the linear schedule box for the lowest QAOA energy on `inst`.
pub fn optimize(inst: &IsingInstance, spec: &SearchSpec) -> Result<SearchTrace> {
    let costs = cost_vector(inst)?;
    optimize_costs(&costs, spec)
}

/// [`optimize`] on a precomputed cost diagonal.
pub fn optimize_costs(costs: &[f64], spec: &SearchSpec) -> Result<SearchTrace> {
    optimize_costs_with(costs, spec, TpeConfig::default())
}

pub fn optimize_costs_with(
    costs: &[f64],
    spec: &SearchSpec,
    config: TpeConfig,
) -> Result<SearchTrace> {
    spec.validate()?;
    let axis = spec.gamma_axis;
    let to_params = |x: &[f64]| {
        LinearParams::from_array([axis.to_gamma(x[0]), axis.to_gamma(x[1]), x[2], x[3]])
    };
    let bounds = axis.search_bounds(&spec.bounds);
    let history = minimize(&bounds, spec.budget, config, spec.seed, |trial, x| {
        let params = to_params(x)?;
        let state = run_qaoa_with_costs(costs, &materialize(&params, spec.p)?)?;
        if spec.shots == 0 {
            exact_expectation(&state, costs)
        } else {
            let hist = sample(&state, spec.shots, derive_seed(spec.seed, trial as u64))?;
            sampled_expectation(&hist, costs)
        }
    })?;

    let trials: Vec<Trial> = history
        .into_iter()
        .map(|(x, value)| Trial {
            params: to_params(&x).expect("finite by construction"),
            value,
        })
        .collect();
    // First occurrence wins ties so the choice is stable.
    let best = trials
        .iter()
        .copied()
        .reduce(|a, b| if b.value < a.value { b } else { a })
        .expect("budget is at least 1");
    Ok(SearchTrace {
        best_params: best.params,
        best_value: best.value,
        trials,
    })
}

/// Product of truncated Gaussians per kernel, mixed uniformly with one broad
/// prior kernel at the box center.
struct Parzen<'a> {
    bounds: &'a [(f64, f64)],
    centers: Vec<Vec<f64>>,
    sigmas: Vec<Vec<f64>>,
    /// Per kernel: `-sum_d (ln sigma_d + ln mass_d) - D ln sqrt(2 pi)`.
    log_norms: Vec<f64>,
}

impl<'a> Parzen<'a> {
    /// Per-point, per-coordinate bandwidth is the larger gap to the
    /// neighbouring points along that coordinate, clipped to
    /// `[range / min(100, m + 1), range]` and raised to the shrink floor.
    fn fit(points: &[&[f64]], bounds: &'a [(f64, f64)], shrink: f64) -> Self {
        let m = points.len();
        let mut sigmas = vec![vec![0.0; bounds.len()]; m];
        let shrink_floor = shrink * (m.max(1) as f64).powf(-1.0 / (bounds.len() as f64 + 4.0));
        for (d, &(lo, hi)) in bounds.iter().enumerate() {
            let range = hi - lo;
            let floor = (range / (m as f64 + 1.0).min(100.0)).max(shrink_floor * range);
            let mut order: Vec<usize> = (0..m).collect();
            order.sort_by(|&a, &b| points[a][d].total_cmp(&points[b][d]));
            let pos = |r: usize| points[order[r]][d];
            for r in 0..m {
                let left = if r == 0 {
                    pos(r) - lo
                } else {
                    pos(r) - pos(r - 1)
                };
                let right = if r + 1 == m {
                    hi - pos(r)
                } else {
                    pos(r + 1) - pos(r)
                };
                sigmas[order[r]][d] = left.max(right).clamp(floor, range);
            }
        }
        let mut centers: Vec<Vec<f64>> = points.iter().map(|p| p.to_vec()).collect();
        centers.push(bounds.iter().map(|&(lo, hi)| 0.5 * (lo + hi)).collect());
        sigmas.push(bounds.iter().map(|&(lo, hi)| hi - lo).collect());
        let log_norms = centers
            .iter()
            .zip(&sigmas)
            .map(|(mu, sigma)| {
                bounds
                    .iter()
                    .enumerate()
                    .map(|(d, &(lo, hi))| -log_truncated_normalizer(mu[d], sigma[d], lo, hi))
                    .sum()
            })
            .collect();
        Parzen {
            bounds,
            centers,
            sigmas,
            log_norms,
        }
    }

    fn sample(&self, rng: &mut impl Rng) -> Vec<f64> {
        let k = rng.random_range(0..self.centers.len());
        self.bounds
            .iter()
            .enumerate()
            .map(|(d, &(lo, hi))| {
                let (mu, sigma) = (self.centers[k][d], self.sigmas[k][d]);
                for _ in 0..64 {
                    let z: f64 = StandardNormal.sample(rng);
                    let x = mu + sigma * z;
                    if x >= lo && x < hi {
                        return x;
                    }
                }
                rng.random_range(lo..hi)
            })
            .collect()
    }

    fn log_pdf(&self, x: &[f64]) -> f64 {
        let terms: Vec<f64> = self
            .centers
            .iter()
            .zip(&self.sigmas)
            .zip(&self.log_norms)
            .map(|((mu, sigma), norm)| {
                let quad: f64 = x
                    .iter()
                    .zip(mu)
                    .zip(sigma)
                    .map(|((x, m), s)| ((x - m) / s).powi(2))
                    .sum();
                norm - 0.5 * quad
            })
            .collect();
        log_sum_exp(&terms) - (terms.len() as f64).ln()
    }
}

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

/// `ln(sqrt(2 pi) sigma mass)` where `mass` is the normal probability of
/// `[lo, hi]`.
fn log_truncated_normalizer(mu: f64, sigma: f64, lo: f64, hi: f64) -> f64 {
    let mass = (normal_cdf((hi - mu) / sigma) - normal_cdf((lo - mu) / sigma)).max(1e-300);
    LN_SQRT_2PI + sigma.ln() + mass.ln()
}

#[cfg(test)]
fn log_truncated_normal(x: f64, mu: f64, sigma: f64, lo: f64, hi: f64) -> f64 {
    let z = (x - mu) / sigma;
    -0.5 * z * z - log_truncated_normalizer(mu, sigma, lo, hi)
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + v.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::HamiltonianKind;
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

    fn edge_spec(budget: usize) -> SearchSpec {
        SearchSpec {
            bounds: [(-PI, PI); 4],
            budget,
            p: 1,
            shots: 0,
            seed: 3,
            gamma_axis: GammaAxis::Linear,
        }
    }

    #[test]
    fn single_edge_reaches_the_analytic_minimum() {
        let trace = optimize(&single_edge(), &edge_spec(200)).unwrap();
        assert!(trace.best_value <= -0.95, "best {}", trace.best_value);
        assert!(trace.best_value >= -1.0 - 1e-12);
    }

    #[test]
    fn beats_a_17_by_17_grid() {
        // At p = 1 only the intercepts matter: <E> = sin(4 beta) sin(2 gamma).
        // A 17-point grid on [-pi, pi] lands exactly on the analytic
        // optimum, so the grid and the search use [-2, 2].
        let axis = |i: usize| -2.0 + 4.0 * i as f64 / 16.0;
        let grid_best = (0..17)
            .flat_map(|i| (0..17).map(move |j| (axis(i), axis(j))))
            .map(|(g, b)| (4.0 * b).sin() * (2.0 * g).sin())
            .fold(f64::INFINITY, f64::min);
        let spec = SearchSpec {
            budget: 200,
            p: 1,
            shots: 0,
            bounds: [(-2.0, 2.0); 4],
            ..SearchSpec::default()
        };
        // A run occasionally settles in the corner basin at (2, 2), which
        // the box cuts off at about -0.75; require the grid to be beaten on
        // most seeds rather than all.
        let wins = (0..20)
            .filter(|&seed| {
                let trace = optimize(
                    &single_edge(),
                    &SearchSpec {
                        seed,
                        ..spec.clone()
                    },
                )
                .unwrap();
                trace.best_value <= grid_best
            })
            .count();
        assert!(wins >= 16, "beat the grid on {wins} of 20 seeds");
    }

    #[test]
    fn budget_of_one_is_a_single_uniform_draw() {
        let trace = optimize(&single_edge(), &edge_spec(1)).unwrap();
        assert_eq!(trace.trials.len(), 1);
        assert_eq!(trace.best_params, trace.trials[0].params);
        assert_eq!(trace.best_value, trace.trials[0].value);
    }

    #[test]
    fn trace_invariants() {
        let spec = SearchSpec {
            shots: 256,
            ..edge_spec(60)
        };
        let trace = optimize(&single_edge(), &spec).unwrap();
        assert_eq!(trace.trials.len(), 60);
        let running = trace.running_best();
        assert!(running.windows(2).all(|w| w[1] <= w[0]));
        assert_eq!(*running.last().unwrap(), trace.best_value);
        for t in &trace.trials {
            for (x, (lo, hi)) in t.params.to_array().iter().zip(spec.bounds) {
                assert!(*x >= lo && *x < hi);
            }
        }
    }

    #[test]
    fn exact_mode_is_reproducible() {
        let a = optimize(&single_edge(), &edge_spec(80)).unwrap();
        let b = optimize(&single_edge(), &edge_spec(80)).unwrap();
        assert_eq!(a, b);
        let c = optimize(
            &single_edge(),
            &SearchSpec {
                seed: 4,
                ..edge_spec(80)
            },
        )
        .unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn rejects_bad_specs() {
        let inst = single_edge();
        let mut spec = edge_spec(10);
        spec.bounds[2] = (1.0, 1.0);
        assert!(optimize(&inst, &spec).is_err());
        assert!(optimize(
            &inst,
            &SearchSpec {
                budget: 0,
                ..edge_spec(10)
            }
        )
        .is_err());
        assert!(optimize(
            &inst,
            &SearchSpec {
                p: 0,
                ..edge_spec(10)
            }
        )
        .is_err());
    }

    #[test]
    fn tpe_finds_a_shifted_quadratic() {
        let history = minimize(&[(-5.0, 5.0); 3], 300, TpeConfig::default(), 1, |_, x| {
            Ok((x[0] - 1.0).powi(2) + (x[1] + 2.0).powi(2) + (x[2] - 0.5).powi(2))
        })
        .unwrap();
        let best = history.iter().map(|h| h.1).fold(f64::INFINITY, f64::min);
        assert!(best < 0.05, "best {best}");
    }

    #[test]
    fn truncated_normal_integrates_to_one() {
        let (lo, hi, mu, sigma) = (-1.0, 2.0, 1.5, 0.8);
        let n = 20_000;
        let h = (hi - lo) / n as f64;
        let integral: f64 = (0..n)
            .map(|i| log_truncated_normal(lo + (i as f64 + 0.5) * h, mu, sigma, lo, hi).exp() * h)
            .sum();
        assert!((integral - 1.0).abs() < 1e-6);
    }

    #[test]
    fn signed_log_axis() {
        let axis = GammaAxis::SignedLog {
            min_abs: 1e-3,
            max_abs: 10.0,
        };
        assert!((axis.to_gamma(1.0) - 10.0).abs() < 1e-12);
        assert!((axis.to_gamma(-1.0) + 10.0).abs() < 1e-12);
        assert!((axis.to_gamma(0.5) - 0.1).abs() < 1e-12);
        assert_eq!(GammaAxis::Linear.to_gamma(0.3), 0.3);
        let bad = SearchSpec {
            gamma_axis: GammaAxis::SignedLog {
                min_abs: 0.0,
                max_abs: 1.0,
            },
            ..SearchSpec::default()
        };
        assert!(optimize(&single_edge(), &bad).is_err());
        let spec = SearchSpec {
            budget: 150,
            p: 1,
            shots: 0,
            gamma_axis: axis,
            ..SearchSpec::default()
        };
        let trace = optimize(&single_edge(), &spec).unwrap();
        assert!(trace.best_value < -0.9, "{}", trace.best_value);
        assert!(trace
            .trials
            .iter()
            .all(|t| t.params.gamma_intcp.abs() >= 1e-3 - 1e-15));
    }
}
