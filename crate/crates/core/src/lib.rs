//! Statevector QAOA restricted to linear-in-depth parameter schedules.
//!
//! The variational angles of a `p`-layer circuit are tied to four scalars,
//!
//! ```text
//! gamma_l = gamma_slope * l / p + gamma_intcp
//! beta_l  = beta_slope  * l / p + beta_intcp      (l = 0, ..., p - 1)
//! ```
//!
//! so the search space stays four-dimensional for every depth. The crate
//! provides the pieces needed to study how well such a schedule, tuned on one
//! instance, carries over to others:
//!
//! - [`instances`]: random ±1 Ising, regular-graph Ising, max-cut and weighted
//!   max-cut instances on connected graphs.
//! - [`exact`]: brute-force energies, cost vectors and ground states.
//! - [`schedule`]: the linear parameter model.
//! - [`simulator`]: a noiseless statevector engine with shot sampling.
//! - [`optimizer`]: a tree-structured Parzen estimator over the four scalars.
//! - [`experiments`]: landscapes, transfer batches and the scaling and
//!   fidelity studies.

pub mod error;
pub mod exact;
pub mod experiments;
pub mod instances;
pub mod optimizer;
pub mod schedule;
pub mod simulator;

pub use error::{Error, Result};
pub use exact::{cost_vector, energy, solve_exact, ExactSolution};
pub use instances::{HamiltonianKind, IsingInstance};
pub use schedule::{LinearParams, Schedule};
pub use simulator::{QaoaState, ShotHistogram};

/// Largest register handled by the simulator and the brute-force oracle
/// unless a caller configures otherwise. 2^26 amplitudes take 1 GiB.
pub const DEFAULT_MAX_QUBITS: usize = 26;

/// Shot count used wherever a sampled expectation is requested without an
/// explicit value.
pub const DEFAULT_SHOTS: u64 = 1 << 14;

/// Default circuit depth.
pub const DEFAULT_LAYERS: usize = 8;

/// Derives an independent sub-seed for task `index` of a batch seeded with
/// `master`. Uses the SplitMix64 finalizer, so results do not depend on the
/// order in which tasks are executed.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    splitmix64(master ^ splitmix64(index.wrapping_add(0x9e37_79b9_7f4a_7c15)))
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
