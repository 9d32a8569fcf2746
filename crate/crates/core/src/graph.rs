//! Undirected network topologies and their Metropolis gossip matrices.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{sym_eig, SymMatrix};

/// Maximum number of Erdős–Rényi resamples before giving up on connectivity.
pub const ER_RESAMPLE_CAP: usize = 1000;

const ROW_SUM_TOL: f64 = 1e-12;
const SIMPLE_EIGEN_TOL: f64 = 1e-9;
const PSD_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TopologyKind {
    Ring,
    Complete,
    /// Each pair is linked independently with probability `q`.
    ErdosRenyi { q: f64 },
}

/// Connected undirected simple graph on nodes `0..n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Topology {
    n: usize,
    /// Sorted, each pair stored as `(i, j)` with `i < j`.
    edges: Vec<(usize, usize)>,
    degrees: Vec<usize>,
}

impl Topology {
    /// Validates the edge set (range, no self-loops, no duplicates) and connectivity.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("a topology needs at least one node".into()));
        }
        let mut set = BTreeSet::new();
        for &(a, b) in edges {
            if a >= n || b >= n {
                return Err(Error::InvalidParameter(format!(
                    "edge ({a}, {b}) out of range for {n} nodes"
                )));
            }
            if a == b {
                return Err(Error::InvalidParameter(format!("self-loop at node {a}")));
            }
            if !set.insert((a.min(b), a.max(b))) {
                return Err(Error::InvalidParameter(format!("duplicate edge ({a}, {b})")));
            }
        }
        let topo = Self::from_set(n, set);
        if !topo.is_connected() {
            return Err(Error::Disconnected);
        }
        Ok(topo)
    }

    fn from_set(n: usize, set: BTreeSet<(usize, usize)>) -> Self {
        let mut degrees = vec![0; n];
        for &(a, b) in &set {
            degrees[a] += 1;
            degrees[b] += 1;
        }
        Topology {
            n,
            edges: set.into_iter().collect(),
            degrees,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn degrees(&self) -> &[usize] {
        &self.degrees
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.edges.binary_search(&(a.min(b), a.max(b))).is_ok()
    }

    fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n];
        for &(a, b) in &self.edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        adj
    }

    /// Single component check by depth-first traversal.
    pub fn is_connected(&self) -> bool {
        let adj = self.adjacency();
        let mut seen = vec![false; self.n];
        let mut stack = vec![0];
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for &u in &adj[v] {
                if !seen[u] {
                    seen[u] = true;
                    count += 1;
                    stack.push(u);
                }
            }
        }
        count == self.n
    }

    /// Edge-list text: `"n m"` then one `"i j"` line per edge, 0-based.
    pub fn to_edge_list(&self) -> String {
        let mut out = format!("{} {}\n", self.n, self.edges.len());
        for (a, b) in &self.edges {
            writeln!(out, "{a} {b}").expect("write to string");
        }
        out
    }

    pub fn parse_edge_list(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty());
        let (hline, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            message: "missing \"n m\" header".into(),
        })?;
        let nums = parse_pair(header, hline + 1)?;
        let (n, m) = nums;
        let mut edges = Vec::with_capacity(m);
        for (idx, line) in lines {
            edges.push(parse_pair(line, idx + 1)?);
        }
        if edges.len() != m {
            return Err(Error::Parse {
                line: hline + 1,
                message: format!("header announces {m} edges, found {}", edges.len()),
            });
        }
        Self::from_edges(n, &edges)
    }
}

fn parse_pair(line: &str, lineno: usize) -> Result<(usize, usize)> {
    let toks: Vec<&str> = line.split_whitespace().collect();
    let bad = |message: String| Error::Parse {
        line: lineno,
        message,
    };
    if toks.len() != 2 {
        return Err(bad(format!("expected two integers, got {:?}", line.trim())));
    }
    let a = toks[0]
        .parse()
        .map_err(|_| bad(format!("not an integer: {:?}", toks[0])))?;
    let b = toks[1]
        .parse()
        .map_err(|_| bad(format!("not an integer: {:?}", toks[1])))?;
    Ok((a, b))
}

/// Generates a connected topology. Erdős–Rényi draws are retried with seeds
/// `seed, seed + 1, ...` until the sample is connected.
pub fn gen_topology(kind: TopologyKind, n: usize, seed: u64) -> Result<Topology> {
    if n == 0 {
        return Err(Error::InvalidParameter("a topology needs at least one node".into()));
    }
    match kind {
        TopologyKind::Ring => {
            let mut set = BTreeSet::new();
            for i in 0..n {
                let j = (i + 1) % n;
                if i != j {
                    set.insert((i.min(j), i.max(j)));
                }
            }
            Ok(Topology::from_set(n, set))
        }
        TopologyKind::Complete => {
            let set = (0..n)
                .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
                .collect();
            Ok(Topology::from_set(n, set))
        }
        TopologyKind::ErdosRenyi { q } => {
            if !(q > 0.0 && q <= 1.0) {
                return Err(Error::InvalidParameter(format!(
                    "edge probability must lie in (0, 1], got {q}"
                )));
            }
            for attempt in 0..ER_RESAMPLE_CAP {
                let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(attempt as u64));
                let mut set = BTreeSet::new();
                for i in 0..n {
                    for j in (i + 1)..n {
                        if rng.random::<f64>() < q {
                            set.insert((i, j));
                        }
                    }
                }
                let topo = Topology::from_set(n, set);
                if topo.is_connected() {
                    return Ok(topo);
                }
            }
            Err(Error::ConnectivityCap {
                attempts: ER_RESAMPLE_CAP,
                q,
            })
        }
    }
}

/// Symmetric doubly-stochastic gossip matrix with its spectrum.
#[derive(Clone, Debug)]
pub struct MixingMatrix {
    w: SymMatrix,
    /// Ascending.
    eigenvalues: Vec<f64>,
    rho: f64,
    psd: bool,
}

impl MixingMatrix {
    /// Checks `W1 = 1`, a spectrum inside `(-1, 1]` and a simple unit eigenvalue.
    pub fn from_matrix(w: SymMatrix) -> Result<Self> {
        for (i, s) in w.row_sums().iter().enumerate() {
            if (s - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::InvalidMixing(format!("row {i} sums to {s}")));
            }
        }
        let eigenvalues = sym_eig(&w)?.eigenvalues;
        let n = eigenvalues.len();
        let top = eigenvalues[n - 1];
        if (top - 1.0).abs() > SIMPLE_EIGEN_TOL {
            return Err(Error::InvalidMixing(format!("largest eigenvalue {top} is not 1")));
        }
        if eigenvalues[0] <= -1.0 + SIMPLE_EIGEN_TOL {
            return Err(Error::InvalidMixing(format!(
                "eigenvalue {} not above -1",
                eigenvalues[0]
            )));
        }
        let rho = rho_of(&eigenvalues)?;
        let psd = eigenvalues[0] >= -PSD_TOL;
        Ok(MixingMatrix {
            w,
            eigenvalues,
            rho,
            psd,
        })
    }

    pub fn matrix(&self) -> &SymMatrix {
        &self.w
    }

    pub fn n(&self) -> usize {
        self.w.order()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// `max(|λ₂|, |λ_n|)`.
    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn is_psd(&self) -> bool {
        self.psd
    }

    /// True when off-diagonal support equals the edge set exactly.
    pub fn matches_topology(&self, t: &Topology) -> bool {
        let n = self.n();
        if t.n() != n {
            return false;
        }
        (0..n).all(|i| {
            ((i + 1)..n).all(|j| {
                let wij = self.w.get(i, j);
                if t.has_edge(i, j) {
                    wij > 0.0
                } else {
                    wij == 0.0
                }
            })
        })
    }
}

fn rho_of(eigenvalues: &[f64]) -> Result<f64> {
    let n = eigenvalues.len();
    if n == 1 {
        return Ok(0.0);
    }
    let second = eigenvalues[n - 2];
    if second >= 1.0 - SIMPLE_EIGEN_TOL {
        return Err(Error::Disconnected);
    }
    Ok(second.abs().max(eigenvalues[0].abs()))
}

/// Metropolis–Hastings weights: `W_ij = 1 / (1 + max(deg_i, deg_j))` on
/// edges, diagonal absorbing the remainder of each row.
pub fn metropolis_weights(t: &Topology) -> Result<MixingMatrix> {
    let n = t.n();
    let deg = t.degrees();
    let mut data = vec![0.0; n * n];
    for &(a, b) in t.edges() {
        let v = 1.0 / (1.0 + deg[a].max(deg[b]) as f64);
        data[a * n + b] = v;
        data[b * n + a] = v;
    }
    for i in 0..n {
        let off: f64 = (0..n).filter(|&j| j != i).map(|j| data[i * n + j]).sum();
        data[i * n + i] = 1.0 - off;
    }
    MixingMatrix::from_matrix(SymMatrix::from_row_major(n, data)?)
}

/// `(I + W) / 2`, which maps every eigenvalue λ to `(1 + λ)/2 ≥ 0`.
pub fn lazify(w: &MixingMatrix) -> Result<MixingMatrix> {
    let n = w.n();
    let lazy = SymMatrix::identity(n).lin_comb(0.5, w.matrix(), 0.5)?;
    MixingMatrix::from_matrix(lazy)
}

/// `ρ = max(|λ₂|, |λ_n|)` recomputed from the matrix; a repeated unit
/// eigenvalue means the graph is disconnected.
pub fn spectral_gap(w: &SymMatrix) -> Result<f64> {
    rho_of(&sym_eig(w)?.eigenvalues)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ring_and_complete() {
        let r = gen_topology(TopologyKind::Ring, 4, 0).unwrap();
        assert_eq!(r.edges(), &[(0, 1), (0, 3), (1, 2), (2, 3)]);
        assert!(r.degrees().iter().all(|&d| d == 2));
        let c = gen_topology(TopologyKind::Complete, 3, 0).unwrap();
        assert_eq!(c.edges().len(), 3);
        assert!(c.degrees().iter().all(|&d| d == 2));
        let single = gen_topology(TopologyKind::Ring, 1, 0).unwrap();
        assert!(single.edges().is_empty());
        assert_eq!(gen_topology(TopologyKind::Ring, 2, 0).unwrap().edges(), &[(0, 1)]);
    }

    #[test]
    fn erdos_renyi_is_deterministic_and_connected() {
        let kind = TopologyKind::ErdosRenyi { q: 0.1 };
        let a = gen_topology(kind, 50, 7).unwrap();
        let b = gen_topology(kind, 50, 7).unwrap();
        assert_eq!(a, b);
        assert!(a.is_connected());
        assert!(matches!(
            gen_topology(TopologyKind::ErdosRenyi { q: 1e-6 }, 30, 0),
            Err(Error::ConnectivityCap { .. })
        ));
        assert!(gen_topology(TopologyKind::ErdosRenyi { q: 0.0 }, 3, 0).is_err());
    }

    #[test]
    fn metropolis_complete3() {
        let t = gen_topology(TopologyKind::Complete, 3, 0).unwrap();
        let w = metropolis_weights(&t).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert!((w.matrix().get(i, j) - 1.0 / 3.0).abs() < 1e-15);
            }
        }
        let ev = w.eigenvalues();
        assert!(ev[0].abs() < 1e-12 && ev[1].abs() < 1e-12 && (ev[2] - 1.0).abs() < 1e-12);
        assert!(w.rho() < 1e-12);
    }

    #[test]
    fn metropolis_ring4() {
        let t = gen_topology(TopologyKind::Ring, 4, 0).unwrap();
        let w = metropolis_weights(&t).unwrap();
        assert!((w.matrix().get(0, 1) - 1.0 / 3.0).abs() < 1e-15);
        assert!((w.matrix().get(0, 0) - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(w.matrix().get(0, 2), 0.0);
        assert!((w.rho() - 1.0 / 3.0).abs() < 1e-12);
        assert!(!w.is_psd());
        assert!(w.matches_topology(&t));
        assert!((spectral_gap(w.matrix()).unwrap() - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn single_node() {
        let t = gen_topology(TopologyKind::Complete, 1, 0).unwrap();
        let w = metropolis_weights(&t).unwrap();
        assert_eq!(w.matrix().get(0, 0), 1.0);
        assert_eq!(w.rho(), 0.0);
        assert_eq!(spectral_gap(w.matrix()).unwrap(), 0.0);
    }

    #[test]
    fn lazify_cases() {
        let t = gen_topology(TopologyKind::Ring, 4, 0).unwrap();
        let lazy = lazify(&metropolis_weights(&t).unwrap()).unwrap();
        assert!((lazy.eigenvalues()[0] - 1.0 / 3.0).abs() < 1e-12);
        assert!((lazy.rho() - 2.0 / 3.0).abs() < 1e-12);
        assert!(lazy.is_psd());
        let id = MixingMatrix::from_matrix(SymMatrix::identity(1)).unwrap();
        assert_eq!(lazify(&id).unwrap().matrix(), &SymMatrix::identity(1));
    }

    #[test]
    fn disconnected_is_rejected() {
        assert!(matches!(
            Topology::from_edges(4, &[(0, 1), (2, 3)]),
            Err(Error::Disconnected)
        ));
        // block-diagonal W has a repeated unit eigenvalue
        let w = SymMatrix::from_rows(&[
            vec![0.5, 0.5, 0.0, 0.0],
            vec![0.5, 0.5, 0.0, 0.0],
            vec![0.0, 0.0, 0.5, 0.5],
            vec![0.0, 0.0, 0.5, 0.5],
        ])
        .unwrap();
        assert!(matches!(spectral_gap(&w), Err(Error::Disconnected)));
        assert!(MixingMatrix::from_matrix(w).is_err());
    }

    #[test]
    fn edge_validation() {
        assert!(Topology::from_edges(3, &[(0, 0), (1, 2)]).is_err());
        assert!(Topology::from_edges(3, &[(0, 1), (1, 0), (1, 2)]).is_err());
        assert!(Topology::from_edges(3, &[(0, 5)]).is_err());
    }

    #[test]
    fn edge_list_round_trip() {
        let t = gen_topology(TopologyKind::ErdosRenyi { q: 0.3 }, 12, 3).unwrap();
        let text = t.to_edge_list();
        assert!(text.starts_with(&format!("12 {}\n", t.edges().len())));
        assert_eq!(Topology::parse_edge_list(&text).unwrap(), t);
        assert!(matches!(
            Topology::parse_edge_list("3 2\n0 1\n"),
            Err(Error::Parse { .. })
        ));
        assert!(matches!(
            Topology::parse_edge_list("2 1\n0 x\n"),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn random_graphs_satisfy_mixing_invariants() {
        for seed in 0..100u64 {
            let n = 5 + (seed as usize % 20);
            let t = gen_topology(TopologyKind::ErdosRenyi { q: 0.35 }, n, seed).unwrap();
            let w = metropolis_weights(&t).unwrap();
            assert!(w.matches_topology(&t));
            for s in w.matrix().row_sums() {
                assert!((s - 1.0).abs() <= 1e-12);
            }
            let ev = w.eigenvalues();
            assert!(ev[0] > -1.0 && (ev[n - 1] - 1.0).abs() < 1e-9 && ev[n - 2] < 1.0 - 1e-9);
            let lazy = lazify(&w).unwrap();
            assert!(lazy.eigenvalues()[0] >= -1e-12);
            assert!(lazy.matches_topology(&t));
        }
    }
}
