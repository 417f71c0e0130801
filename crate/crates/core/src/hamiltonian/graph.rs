use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::rng::Rng;
use crate::tensor::symmetric_eigenvalues;
use crate::{Error, NumericPolicy, Result};

/// Symmetric nonnegative weight matrix with zero diagonal and total mass one.
///
/// `weights[i][j]` is the probability of the ordered pair `(i, j)`; an
/// unweighted graph puts mass `1 / (2|E|)` on both orientations of each edge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteractionGraph {
    n: usize,
    weights: Vec<Vec<f64>>,
}

/// An undirected edge `i < j` with the combined mass of both orientations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub weight: f64,
}

impl InteractionGraph {
    /// Builds from undirected edges with positive weights, normalising the
    /// total to one.
    pub fn from_weighted_edges(n: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        let total: f64 = edges.iter().map(|e| e.2).sum();
        if n == 0 {
            return Err(Error::InvalidSpec("graph with no sites".into()));
        }
        let mut weights = vec![vec![0.0; n]; n];
        for &(i, j, w) in edges {
            if i >= n || j >= n || i == j {
                return Err(Error::InvalidSpec(format!("bad edge ({i}, {j}) for n = {n}")));
            }
            if !(w >= 0.0) || !w.is_finite() {
                return Err(Error::InvalidSpec(format!("edge ({i}, {j}) has weight {w}")));
            }
            let half = w / total / 2.0;
            weights[i][j] += half;
            weights[j][i] += half;
        }
        if total <= 0.0 {
            // Edgeless register: the zero Hamiltonian on n sites.
            return Ok(Self { n, weights });
        }
        Ok(Self { n, weights })
    }

    /// Builds from undirected edges whose weights already sum to one; no
    /// renormalisation, so stored values survive a round trip unchanged.
    pub fn from_normalized_edges(n: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        let total: f64 = edges.iter().map(|e| e.2).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidSpec(format!("edge weights sum to {total}, expected 1")));
        }
        let mut weights = vec![vec![0.0; n]; n];
        for &(i, j, w) in edges {
            if i >= n || j >= n || i == j || !(w >= 0.0) {
                return Err(Error::InvalidSpec(format!("bad edge ({i}, {j}, {w})")));
            }
            weights[i][j] += w / 2.0;
            weights[j][i] += w / 2.0;
        }
        Ok(Self { n, weights })
    }

    pub fn unweighted(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut seen = std::collections::BTreeSet::new();
        for &(i, j) in edges {
            if !seen.insert((i.min(j), i.max(j))) {
                return Err(Error::InvalidSpec(format!("duplicate edge ({i}, {j})")));
            }
        }
        let w: Vec<_> = edges.iter().map(|&(i, j)| (i, j, 1.0)).collect();
        Self::from_weighted_edges(n, &w)
    }

    pub fn ring(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidSpec(format!("ring needs n >= 3, got {n}")));
        }
        let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        Self::unweighted(n, &edges)
    }

    pub fn complete(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidSpec(format!("complete graph needs n >= 2, got {n}")));
        }
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                edges.push((i, j));
            }
        }
        Self::unweighted(n, &edges)
    }

    pub fn star(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidSpec("star needs n >= 2".into()));
        }
        let edges: Vec<_> = (1..n).map(|j| (0, j)).collect();
        Self::unweighted(n, &edges)
    }

    /// Perfect matching `(0,1), (2,3), …`.
    pub fn disjoint_edges(n: usize) -> Result<Self> {
        if n < 2 || n % 2 == 1 {
            return Err(Error::InvalidSpec(format!("disjoint edges need even n, got {n}")));
        }
        let edges: Vec<_> = (0..n / 2).map(|k| (2 * k, 2 * k + 1)).collect();
        Self::unweighted(n, &edges)
    }

    /// `rows × cols` grid. Each unit face additionally receives its main
    /// diagonal with probability `diagonal_prob`; one diagonal per face keeps
    /// the graph planar.
    pub fn grid(rows: usize, cols: usize, diagonal_prob: f64, rng: &mut Rng) -> Result<Self> {
        if rows == 0 || cols == 0 || rows * cols < 2 {
            return Err(Error::InvalidSpec(format!("grid {rows}x{cols} has fewer than two sites")));
        }
        let id = |r: usize, c: usize| r * cols + c;
        let mut edges = Vec::new();
        for r in 0..rows {
            for c in 0..cols {
                if c + 1 < cols {
                    edges.push((id(r, c), id(r, c + 1)));
                }
                if r + 1 < rows {
                    edges.push((id(r, c), id(r + 1, c)));
                }
                if r + 1 < rows && c + 1 < cols && diagonal_prob > 0.0 && rng.random::<f64>() < diagonal_prob {
                    edges.push((id(r, c), id(r + 1, c + 1)));
                }
            }
        }
        Self::unweighted(rows * cols, &edges)
    }

    /// Uniform `D`-regular simple graph by the pairing model with rejection.
    /// Dense degrees (`2D > n − 1`) are the complement of a uniform
    /// `(n − 1 − D)`-regular graph, where rejection would almost never accept.
    pub fn random_regular(n: usize, degree: usize, rng: &mut Rng) -> Result<Self> {
        if degree == 0 || degree >= n {
            return Err(Error::InvalidSpec(format!("random-regular needs 0 < D < n, got D = {degree}, n = {n}")));
        }
        if (n * degree) % 2 == 1 {
            return Err(Error::InvalidSpec(format!("n·D = {} is odd", n * degree)));
        }
        if 2 * degree > n - 1 {
            let co = n - 1 - degree;
            let absent: std::collections::BTreeSet<(usize, usize)> =
                if co == 0 { Default::default() } else { Self::pairing(n, co, rng)?.into_iter().collect() };
            let edges: Vec<_> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).filter(|e| !absent.contains(e)).collect();
            return Self::unweighted(n, &edges);
        }
        Self::unweighted(n, &Self::pairing(n, degree, rng)?)
    }

    fn pairing(n: usize, degree: usize, rng: &mut Rng) -> Result<Vec<(usize, usize)>> {
        let mut points: Vec<usize> = (0..n).flat_map(|v| std::iter::repeat_n(v, degree)).collect();
        for _ in 0..100_000 {
            points.shuffle(rng);
            let mut seen = std::collections::BTreeSet::new();
            let ok = points.chunks(2).all(|p| {
                let (a, b) = (p[0].min(p[1]), p[0].max(p[1]));
                a != b && seen.insert((a, b))
            });
            if ok {
                return Ok(seen.into_iter().collect());
            }
        }
        Err(Error::InvalidSpec(format!("pairing model did not produce a simple {degree}-regular graph on {n} sites")))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[i][j]
    }

    pub fn weights(&self) -> &[Vec<f64>] {
        &self.weights
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().flatten().sum()
    }

    /// Undirected edges `i < j` carrying positive mass.
    pub fn edges(&self) -> Vec<Edge> {
        let mut out = Vec::new();
        for i in 0..self.n {
            for j in i + 1..self.n {
                let w = self.weights[i][j] + self.weights[j][i];
                if w > 0.0 {
                    out.push(Edge { i, j, weight: w });
                }
            }
        }
        out
    }

    pub fn neighbours(&self, i: usize) -> Vec<usize> {
        (0..self.n).filter(|&j| self.weights[i][j] > 0.0).collect()
    }

    pub fn degree(&self, i: usize) -> usize {
        self.neighbours(i).len()
    }

    /// `Some(D)` when every site has degree `D` and all edges carry equal mass.
    pub fn regular_degree(&self) -> Option<usize> {
        let d0 = self.degree(0);
        if (1..self.n).any(|i| self.degree(i) != d0) {
            return None;
        }
        let edges = self.edges();
        let w0 = edges.first()?.weight;
        if edges.iter().all(|e| (e.weight - w0).abs() <= 1e-12 * w0.max(1.0)) {
            Some(d0)
        } else {
            None
        }
    }

    /// Stationary distribution `π_j = Σ_i G_ij`.
    pub fn stationary(&self) -> Vec<f64> {
        (0..self.n).map(|j| (0..self.n).map(|i| self.weights[i][j]).sum()).collect()
    }

    /// Conditional probability that an ordered pair leaving a vertex of `s`
    /// lands outside `s`. A set with no incident mass has expansion 0.
    pub fn expansion(&self, s: &[usize]) -> Result<f64> {
        if s.is_empty() {
            return Err(Error::Invalid("expansion of the empty set".into()));
        }
        let mut inside = vec![false; self.n];
        for &v in s {
            if v >= self.n {
                return Err(Error::Invalid(format!("site {v} out of range")));
            }
            inside[v] = true;
        }
        Ok(self.expansion_mask(&inside))
    }

    fn expansion_mask(&self, inside: &[bool]) -> f64 {
        let mut out = 0.0;
        let mut mass = 0.0;
        for u in (0..self.n).filter(|&u| inside[u]) {
            for v in 0..self.n {
                let w = self.weights[u][v];
                mass += w;
                if !inside[v] {
                    out += w;
                }
            }
        }
        if mass == 0.0 {
            0.0
        } else {
            out / mass
        }
    }

    /// Largest graph accepted by [`graph_expansion`](Self::graph_expansion).
    pub const MAX_EXHAUSTIVE: usize = 20;

    /// Exact minimum of the expansion over nonempty sets of at most `n/2` sites.
    pub fn graph_expansion(&self) -> Result<f64> {
        if self.n > Self::MAX_EXHAUSTIVE {
            return Err(Error::GraphTooLarge {
                n: self.n,
                max: Self::MAX_EXHAUSTIVE,
            });
        }
        let mut best = f64::INFINITY;
        let mut inside = vec![false; self.n];
        for mask in 1u32..(1u32 << self.n) {
            if (mask.count_ones() as usize) * 2 > self.n {
                continue;
            }
            for (v, slot) in inside.iter_mut().enumerate() {
                *slot = mask >> v & 1 == 1;
            }
            best = best.min(self.expansion_mask(&inside));
        }
        Ok(if best.is_finite() { best } else { 0.0 })
    }

    /// Mean block expansion over a partition.
    pub fn mean_block_expansion(&self, blocks: &[Vec<usize>]) -> Result<f64> {
        let mut s = 0.0;
        for b in blocks {
            s += self.expansion(b)?;
        }
        Ok(s / blocks.len() as f64)
    }

    pub fn walk_stats(&self) -> WalkStats {
        let pi = self.stationary();
        let n = self.n;
        let mut isolated = Vec::new();
        let mut a = vec![vec![0.0; n]; n];
        for j in 0..n {
            if pi[j] > 0.0 {
                for i in 0..n {
                    a[i][j] = self.weights[i][j] / pi[j];
                }
            } else {
                a[j][j] = 1.0;
                isolated.push(j);
            }
        }
        let trace_a2: f64 = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| a[i][j] * a[j][i]).sum();
        let pi_norm2: f64 = pi.iter().map(|p| p * p).sum();
        WalkStats {
            collision: trace_a2 * pi_norm2,
            trace_a2,
            pi_norm2,
            pi,
            a,
            isolated,
        }
    }

    /// Eigenvalues of the walk matrix, ascending.
    pub fn walk_spectrum(&self, policy: &NumericPolicy) -> Result<Vec<f64>> {
        let pi = self.stationary();
        let live: Vec<usize> = (0..self.n).filter(|&j| pi[j] > 0.0).collect();
        let isolated = self.n - live.len();
        // A = G Π⁻¹ is similar to Π^{-1/2} G Π^{-1/2}.
        let sym: Vec<Vec<f64>> = live
            .iter()
            .map(|&i| live.iter().map(|&j| self.weights[i][j] / (pi[i] * pi[j]).sqrt()).collect())
            .collect();
        let mut values = if live.is_empty() { Vec::new() } else { symmetric_eigenvalues(&sym, policy)? };
        values.extend(std::iter::repeat_n(1.0, isolated));
        values.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Ok(values)
    }

    /// Number of walk eigenvalues strictly above `lambda`.
    pub fn threshold_rank(&self, lambda: f64, policy: &NumericPolicy) -> Result<usize> {
        Ok(self.walk_spectrum(policy)?.iter().filter(|&&v| v > lambda + 1e-12).count())
    }
}

/// Random-walk statistics of a weighted graph.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WalkStats {
    pub pi: Vec<f64>,
    /// Column-stochastic walk matrix, `a[i][j] = G_ij / π_j`.
    pub a: Vec<Vec<f64>>,
    pub trace_a2: f64,
    pub pi_norm2: f64,
    /// `tr[A²]·‖π‖₂²`
    pub collision: f64,
    /// Sites with `π_j = 0`; their columns are point masses.
    pub isolated: Vec<usize>,
}
