//! Problem instances on connected undirected graphs.
//!
//! One qubit per node. Edge weights are stored unscaled; for weighted max-cut
//! the weight factor `w` lives in [`IsingInstance::scale_w`] and is applied
//! when energies are evaluated.

use std::collections::{HashSet, VecDeque};

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Which energy formula an instance uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HamiltonianKind {
    /// `H = sum J_ij s_i s_j` with `J_ij` in {+1, -1}.
    RandomIsing,
    /// `H = -(1/2) sum (1 - s_i s_j)` over unit-weight edges.
    MaxCut,
    /// `H = -(1/2) sum w J_ij (1 - s_i s_j)` with `J_ij` in (0.1, 1).
    WeightedMaxCut,
}

impl HamiltonianKind {
    pub fn as_str(self) -> &'static str {
        match self {
            HamiltonianKind::RandomIsing => "random_ising",
            HamiltonianKind::MaxCut => "max_cut",
            HamiltonianKind::WeightedMaxCut => "weighted_max_cut",
        }
    }
}

/// An undirected weighted edge with `i < j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "(usize, usize, f64)", into = "(usize, usize, f64)")]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub weight: f64,
}

impl From<(usize, usize, f64)> for Edge {
    fn from((i, j, weight): (usize, usize, f64)) -> Self {
        Edge { i, j, weight }
    }
}

impl From<Edge> for (usize, usize, f64) {
    fn from(e: Edge) -> Self {
        (e.i, e.j, e.weight)
    }
}

/// Weighted undirected graph together with the Hamiltonian that lives on it.
///
/// Immutable once built; every constructor validates connectivity and the
/// per-kind weight domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "InstanceDocument", into = "InstanceDocument")]
pub struct IsingInstance {
    n_qubits: usize,
    edges: Vec<Edge>,
    kind: HamiltonianKind,
    scale_w: f64,
    seed: u64,
}

/// On-disk layout. Field order here is the order written to files.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceDocument {
    n_qubits: usize,
    kind: HamiltonianKind,
    scale_w: f64,
    seed: u64,
    edges: Vec<Edge>,
}

impl TryFrom<InstanceDocument> for IsingInstance {
    type Error = Error;

    fn try_from(doc: InstanceDocument) -> Result<Self> {
        IsingInstance::new(doc.n_qubits, doc.edges, doc.kind, doc.scale_w, doc.seed)
    }
}

impl From<IsingInstance> for InstanceDocument {
    fn from(inst: IsingInstance) -> Self {
        InstanceDocument {
            n_qubits: inst.n_qubits,
            kind: inst.kind,
            scale_w: inst.scale_w,
            seed: inst.seed,
            edges: inst.edges,
        }
    }
}

impl IsingInstance {
    /// Builds an instance after checking every invariant. Edges given as
    /// `(j, i)` are normalized to `(i, j)`; a pair listed twice in either
    /// orientation is rejected.
    pub fn new(
        n_qubits: usize,
        edges: Vec<Edge>,
        kind: HamiltonianKind,
        scale_w: f64,
        seed: u64,
    ) -> Result<Self> {
        if n_qubits < 2 {
            return Err(Error::InvalidInstance(format!(
                "need at least 2 nodes, got {n_qubits}"
            )));
        }
        if edges.is_empty() {
            return Err(Error::InvalidInstance("instance has no edges".into()));
        }
        if !(scale_w.is_finite() && scale_w > 0.0) {
            return Err(Error::InvalidInstance(format!(
                "weight factor must be positive, got {scale_w}"
            )));
        }
        if kind != HamiltonianKind::WeightedMaxCut && scale_w != 1.0 {
            return Err(Error::InvalidInstance(format!(
                "weight factor must be 1 for {}, got {scale_w}",
                kind.as_str()
            )));
        }

        let mut seen = HashSet::with_capacity(edges.len());
        let mut normalized = Vec::with_capacity(edges.len());
        for e in edges {
            if e.i >= n_qubits || e.j >= n_qubits {
                return Err(Error::InvalidInstance(format!(
                    "edge ({}, {}) references a node outside 0..{n_qubits}",
                    e.i, e.j
                )));
            }
            if e.i == e.j {
                return Err(Error::InvalidInstance(format!("self-loop on node {}", e.i)));
            }
            let (i, j) = if e.i < e.j { (e.i, e.j) } else { (e.j, e.i) };
            if !seen.insert((i, j)) {
                return Err(Error::InvalidInstance(format!("duplicate edge ({i}, {j})")));
            }
            check_weight(kind, e.weight)?;
            normalized.push(Edge {
                i,
                j,
                weight: e.weight,
            });
        }

        if !is_connected(n_qubits, normalized.iter().map(|e| (e.i, e.j))) {
            return Err(Error::InvalidInstance("graph is not connected".into()));
        }

        Ok(IsingInstance {
            n_qubits,
            edges: normalized,
            kind,
            scale_w,
            seed,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn kind(&self) -> HamiltonianKind {
        self.kind
    }

    /// Weight factor `w`; 1.0 for every kind except weighted max-cut.
    pub fn scale_w(&self) -> f64 {
        self.scale_w
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// `|E| / C(|V|, 2)`.
    pub fn edge_density(&self) -> f64 {
        self.edges.len() as f64 / max_edges(self.n_qubits) as f64
    }

    /// Copy of this instance with a different weight factor. Only meaningful
    /// for weighted max-cut.
    pub fn with_scale(&self, scale_w: f64) -> Result<Self> {
        IsingInstance::new(
            self.n_qubits,
            self.edges.clone(),
            self.kind,
            scale_w,
            self.seed,
        )
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n_qubits];
        for e in &self.edges {
            deg[e.i] += 1;
            deg[e.j] += 1;
        }
        deg
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("instance serialization cannot fail")
    }

    /// Parses an instance document. Structural problems are reported as
    /// [`Error::InvalidInstance`], syntax problems as [`Error::Parse`].
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: InstanceDocument = serde_json::from_str(text)?;
        IsingInstance::try_from(doc)
    }
}

/// `|E| / C(|V|, 2)` for an instance.
pub fn edge_density(inst: &IsingInstance) -> f64 {
    inst.edge_density()
}

fn check_weight(kind: HamiltonianKind, w: f64) -> Result<()> {
    let ok = match kind {
        HamiltonianKind::RandomIsing => w == 1.0 || w == -1.0,
        HamiltonianKind::MaxCut => w == 1.0,
        HamiltonianKind::WeightedMaxCut => w > 0.1 && w < 1.0,
    };
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidInstance(format!(
            "weight {w} is outside the domain of {}",
            kind.as_str()
        )))
    }
}

pub(crate) fn max_edges(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

/// Breadth-first reachability from node 0.
pub fn is_connected(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> bool {
    if n == 0 {
        return false;
    }
    let mut adj = vec![Vec::new(); n];
    for (i, j) in edges {
        adj[i].push(j);
        adj[j].push(i);
    }
    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([0]);
    seen[0] = true;
    let mut reached = 1;
    while let Some(u) = queue.pop_front() {
        for &v in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                reached += 1;
                queue.push_back(v);
            }
        }
    }
    reached == n
}

/// Number of edges a generated graph gets for density `d_edges`:
/// `round(d_edges * C(n, 2))`. Fails when that is too few edges to connect
/// `n` nodes.
pub fn edge_count_for_density(n: usize, d_edges: f64) -> Result<usize> {
    if n < 2 {
        return Err(Error::invalid(format!("need at least 2 nodes, got {n}")));
    }
    if !(d_edges > 0.0 && d_edges <= 1.0) {
        return Err(Error::invalid(format!(
            "edge density must lie in (0, 1], got {d_edges}"
        )));
    }
    let m = (d_edges * max_edges(n) as f64).round() as usize;
    if m < n - 1 {
        return Err(Error::invalid(format!(
            "edge density {d_edges} gives {m} edges, fewer than the {} needed to connect {n} nodes",
            n - 1
        )));
    }
    Ok(m)
}

/// Density of a spanning tree, `(n - 1) / C(n, 2)`: the sparsest connected
/// graph on `n` nodes.
pub fn min_connected_density(n: usize) -> f64 {
    (n as f64 - 1.0) / max_edges(n) as f64
}

fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform random labelled tree on `n` nodes via a random Prüfer sequence.
fn random_tree(n: usize, rng: &mut impl Rng) -> Vec<(usize, usize)> {
    if n == 2 {
        return vec![(0, 1)];
    }
    let seq: Vec<usize> = (0..n - 2).map(|_| rng.random_range(0..n)).collect();
    let mut degree = vec![1usize; n];
    for &x in &seq {
        degree[x] += 1;
    }
    let mut edges = Vec::with_capacity(n - 1);
    for &x in &seq {
        let leaf = (0..n)
            .find(|&v| degree[v] == 1)
            .expect("a leaf always exists");
        edges.push((leaf.min(x), leaf.max(x)));
        degree[leaf] -= 1;
        degree[x] -= 1;
    }
    let rest: Vec<usize> = (0..n).filter(|&v| degree[v] == 1).collect();
    debug_assert_eq!(rest.len(), 2);
    edges.push((rest[0], rest[1]));
    edges
}

/// Connected graph with exactly `m` edges: a uniform spanning tree plus
/// `m - (n - 1)` further pairs drawn uniformly without replacement.
/// Returned in lexicographic order.
fn random_connected_edges(n: usize, m: usize, rng: &mut impl Rng) -> Vec<(usize, usize)> {
    let tree = random_tree(n, rng);
    let in_tree: HashSet<(usize, usize)> = tree.iter().copied().collect();
    let others: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .filter(|pair| !in_tree.contains(pair))
        .collect();
    let extra = m - (n - 1);
    let mut edges = tree;
    edges.extend(
        index::sample(rng, others.len(), extra)
            .into_iter()
            .map(|k| others[k]),
    );
    edges.sort_unstable();
    edges
}

fn sign_weights(pairs: Vec<(usize, usize)>, rng: &mut impl Rng) -> Vec<Edge> {
    pairs
        .into_iter()
        .map(|(i, j)| Edge {
            i,
            j,
            weight: if rng.random::<bool>() { 1.0 } else { -1.0 },
        })
        .collect()
}

/// Random ±1 Ising model on a connected graph with
/// `round(d_edges * C(n, 2))` edges. Signs are independent and equally likely.
pub fn gen_random_ising(n: usize, d_edges: f64, seed: u64) -> Result<IsingInstance> {
    let m = edge_count_for_density(n, d_edges)?;
    let mut rng = rng_for(seed);
    let pairs = random_connected_edges(n, m, &mut rng);
    let edges = sign_weights(pairs, &mut rng);
    IsingInstance::new(n, edges, HamiltonianKind::RandomIsing, 1.0, seed)
}

/// Unit-weight max-cut on a random connected graph.
pub fn gen_maxcut(n: usize, d_edges: f64, seed: u64) -> Result<IsingInstance> {
    let m = edge_count_for_density(n, d_edges)?;
    let mut rng = rng_for(seed);
    let edges = random_connected_edges(n, m, &mut rng)
        .into_iter()
        .map(|(i, j)| Edge { i, j, weight: 1.0 })
        .collect();
    IsingInstance::new(n, edges, HamiltonianKind::MaxCut, 1.0, seed)
}

/// Weighted max-cut with `J_ij` iid uniform on the open interval (0.1, 1)
/// and weight factor `w`.
pub fn gen_weighted_maxcut(n: usize, d_edges: f64, w: f64, seed: u64) -> Result<IsingInstance> {
    if !(w.is_finite() && w > 0.0) {
        return Err(Error::invalid(format!(
            "weight factor must be positive, got {w}"
        )));
    }
    let m = edge_count_for_density(n, d_edges)?;
    let mut rng = rng_for(seed);
    let pairs = random_connected_edges(n, m, &mut rng);
    let edges = pairs
        .into_iter()
        .map(|(i, j)| {
            let weight = loop {
                let x = rng.random_range(0.1..1.0);
                if x > 0.1 {
                    break x;
                }
            };
            Edge { i, j, weight }
        })
        .collect();
    IsingInstance::new(n, edges, HamiltonianKind::WeightedMaxCut, w, seed)
}

const REGULAR_RESTARTS: usize = 10_000;

/// Random ±1 Ising model on a connected `degree`-regular graph.
///
/// Stubs are paired one at a time, only ever choosing pairs that keep the
/// graph simple (Steger–Wormald); dead ends and disconnected results restart.
pub fn gen_regular_ising(n: usize, degree: usize, seed: u64) -> Result<IsingInstance> {
    if n < 2 {
        return Err(Error::invalid(format!("need at least 2 nodes, got {n}")));
    }
    if degree == 0 || degree >= n {
        return Err(Error::invalid(format!(
            "degree must lie in 1..{n} for {n} nodes, got {degree}"
        )));
    }
    if (n * degree) % 2 == 1 {
        return Err(Error::invalid(format!(
            "n * degree must be even, got {n} * {degree}"
        )));
    }
    if degree == 1 && n > 2 {
        return Err(Error::invalid(format!(
            "no connected 1-regular graph on {n} nodes"
        )));
    }

    let mut rng = rng_for(seed);
    let pairs = if degree == n - 1 {
        (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .collect()
    } else {
        (0..REGULAR_RESTARTS)
            .find_map(|_| {
                pair_stubs(n, degree, &mut rng)
                    .filter(|pairs| is_connected(n, pairs.iter().copied()))
            })
            .ok_or_else(|| {
                Error::Numeric(format!(
                    "failed to draw a connected {degree}-regular graph on {n} nodes"
                ))
            })?
    };
    let edges = sign_weights(pairs, &mut rng);
    IsingInstance::new(n, edges, HamiltonianKind::RandomIsing, 1.0, seed)
}

fn pair_stubs(n: usize, degree: usize, rng: &mut impl Rng) -> Option<Vec<(usize, usize)>> {
    let mut stubs: Vec<usize> = (0..n)
        .flat_map(|v| std::iter::repeat_n(v, degree))
        .collect();
    let mut edges = HashSet::with_capacity(n * degree / 2);
    while !stubs.is_empty() {
        let mut placed = false;
        for _ in 0..64 {
            let a = rng.random_range(0..stubs.len());
            let b = rng.random_range(0..stubs.len());
            let (u, v) = (stubs[a], stubs[b]);
            if a == b || u == v || edges.contains(&(u.min(v), u.max(v))) {
                continue;
            }
            edges.insert((u.min(v), u.max(v)));
            let (hi, lo) = (a.max(b), a.min(b));
            stubs.swap_remove(hi);
            stubs.swap_remove(lo);
            placed = true;
            break;
        }
        if !placed {
            // Random probing failed; check whether any legal pair is left.
            let legal = (0..stubs.len()).any(|a| {
                (a + 1..stubs.len()).any(|b| {
                    let (u, v) = (stubs[a], stubs[b]);
                    u != v && !edges.contains(&(u.min(v), u.max(v)))
                })
            });
            if !legal {
                return None;
            }
        }
    }
    let mut out: Vec<(usize, usize)> = edges.into_iter().collect();
    out.sort_unstable();
    Some(out)
}
