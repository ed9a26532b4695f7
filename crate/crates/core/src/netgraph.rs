//! Threshold graphs over bit-packed adjacency rows.
//!
//! Rows are `u64` words, so BFS expands a whole frontier level with word-wide
//! OR/AND sweeps and neighbor intersections reduce to popcounts. This is what
//! keeps a full threshold sweep (every window x every grid point) cheap even
//! for dense graphs near the bottom of the grid.

use std::io::Write;

use crate::error::{Error, Result};
use crate::rolling::CorrMatrix;

/// Undirected simple graph built by thresholding a correlation matrix.
///
/// The edge rule is `w_ij >= theta`: ties at exactly `theta` are included.
#[derive(Debug, Clone)]
pub struct ThresholdGraph {
    n: usize,
    words: usize,
    theta: f64,
    window_index: usize,
    rows: Vec<u64>, // n * words, row-major; bits >= n in the last word are 0
}

impl ThresholdGraph {
    /// Thresholds a correlation matrix: edge `(i, j)` iff `w_ij >= theta`
    /// for `i != j`.
    pub fn from_matrix(w: &CorrMatrix, theta: f64) -> Self {
        let n = w.size();
        let words = n.div_ceil(64);
        let mut rows = vec![0u64; n * words];
        for i in 0..n {
            for j in 0..n {
                if i != j && w.get(i, j) >= theta {
                    rows[i * words + j / 64] |= 1u64 << (j % 64);
                }
            }
        }
        Self {
            n,
            words,
            theta,
            window_index: w.window_index(),
            rows,
        }
    }

    /// Builds a graph from an explicit edge list. Self-loops and duplicate
    /// pairs collapse silently; `theta` is recorded as NaN since no matrix
    /// produced the edges.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Self {
        let words = n.div_ceil(64);
        let mut rows = vec![0u64; n * words];
        for &(i, j) in edges {
            assert!(i < n && j < n, "edge ({i},{j}) outside 0..{n}");
            if i == j {
                continue;
            }
            rows[i * words + j / 64] |= 1u64 << (j % 64);
            rows[j * words + i / 64] |= 1u64 << (i % 64);
        }
        Self {
            n,
            words,
            theta: f64::NAN,
            window_index: 0,
            rows,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn window_index(&self) -> usize {
        self.window_index
    }

    #[inline]
    fn row(&self, i: usize) -> &[u64] {
        &self.rows[i * self.words..(i + 1) * self.words]
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.rows[i * self.words + j / 64] >> (j % 64) & 1 == 1
    }

    pub fn edge_count(&self) -> usize {
        self.rows
            .iter()
            .map(|w| w.count_ones() as usize)
            .sum::<usize>()
            / 2
    }

    /// Edges as `(i, j)` pairs with `i < j`, ascending.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.edge_count());
        for i in 0..self.n {
            for (w, &word) in self.row(i).iter().enumerate().skip(i / 64) {
                let mut bits = word;
                if w == i / 64 {
                    // keep only j > i within this word
                    bits &= !((1u64 << (i % 64)) - 1) & !(1u64 << (i % 64));
                }
                while bits != 0 {
                    let j = w * 64 + bits.trailing_zeros() as usize;
                    bits &= bits - 1;
                    out.push((i, j));
                }
            }
        }
        out
    }

    /// Same vertices, exactly the non-edges (no self-loops).
    pub fn complement(&self) -> ThresholdGraph {
        let mut rows = vec![0u64; self.n * self.words];
        let tail_mask = if self.n.is_multiple_of(64) {
            u64::MAX
        } else {
            (1u64 << (self.n % 64)) - 1
        };
        for i in 0..self.n {
            let src = self.row(i);
            let dst = &mut rows[i * self.words..(i + 1) * self.words];
            for w in 0..self.words {
                dst[w] = !src[w];
            }
            if let Some(last) = dst.last_mut() {
                *last &= tail_mask;
            }
            dst[i / 64] &= !(1u64 << (i % 64));
        }
        ThresholdGraph {
            n: self.n,
            words: self.words,
            theta: self.theta,
            window_index: self.window_index,
            rows,
        }
    }

    /// Degree of every vertex; the sum is twice the edge count.
    pub fn degrees(&self) -> Vec<usize> {
        (0..self.n)
            .map(|i| self.row(i).iter().map(|w| w.count_ones() as usize).sum())
            .collect()
    }

    /// Local clustering coefficient `c_i = 2 m_i / (k_i (k_i - 1))`, where
    /// `m_i` counts edges among the neighbors of `i`. Vertices with degree
    /// below 2 get 0.
    pub fn local_clustering(&self) -> Vec<f64> {
        let degrees = self.degrees();
        let mut out = vec![0.0; self.n];
        for i in 0..self.n {
            let k = degrees[i];
            if k < 2 {
                continue;
            }
            let row_i = self.row(i);
            // sum over neighbors j of |N(i) & N(j)| counts each triangle
            // edge twice, i.e. equals 2 * m_i
            let mut twice_m = 0u64;
            for w in 0..self.words {
                let mut bits = row_i[w];
                while bits != 0 {
                    let j = w * 64 + bits.trailing_zeros() as usize;
                    bits &= bits - 1;
                    let row_j = self.row(j);
                    for k in 0..self.words {
                        twice_m += (row_i[k] & row_j[k]).count_ones() as u64;
                    }
                }
            }
            out[i] = twice_m as f64 / (k * (k - 1)) as f64;
        }
        out
    }

    /// Per-node shortest-path distributions via a BFS from every source,
    /// expanded level-by-level as bitset sweeps.
    pub fn distance_profile(&self) -> DistanceProfile {
        let n = self.n;
        let words = self.words;
        let mut visited = vec![0u64; words];
        let mut frontier = vec![0u64; words];
        let mut next = vec![0u64; words];

        // counts[src][d-1] = number of vertices at distance d from src
        let mut counts: Vec<Vec<u32>> = Vec::with_capacity(n);
        let mut diameter = 0usize;
        for src in 0..n {
            visited.fill(0);
            frontier.fill(0);
            visited[src / 64] |= 1u64 << (src % 64);
            frontier[src / 64] |= 1u64 << (src % 64);
            let mut level_counts = Vec::new();
            loop {
                next.fill(0);
                for (w, &word) in frontier.iter().enumerate() {
                    let mut bits = word;
                    while bits != 0 {
                        let v = w * 64 + bits.trailing_zeros() as usize;
                        bits &= bits - 1;
                        let row = self.row(v);
                        for k in 0..words {
                            next[k] |= row[k];
                        }
                    }
                }
                let mut newly = 0u32;
                for k in 0..words {
                    next[k] &= !visited[k];
                    visited[k] |= next[k];
                    newly += next[k].count_ones();
                }
                if newly == 0 {
                    break;
                }
                level_counts.push(newly);
                std::mem::swap(&mut frontier, &mut next);
            }
            diameter = diameter.max(level_counts.len());
            counts.push(level_counts);
        }

        DistanceProfile::from_counts(n, diameter, &counts)
    }

    /// Writes the edge list as text lines `i j`, 0-based, `i < j`.
    pub fn write_edge_list<W: Write>(&self, mut out: W) -> Result<()> {
        for (i, j) in self.edges() {
            writeln!(out, "{i} {j}")?;
        }
        Ok(())
    }
}

/// Shortest-path-length distributions of one graph.
///
/// Every per-node distribution has `diameter + 1` bins: mass at distances
/// `1..=diameter` followed by one explicit unreachable bin. Each vertex
/// spreads mass 1 over the other `n - 1` vertices. The aggregated
/// distribution is the arithmetic mean of the per-node ones.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceProfile {
    n: usize,
    diameter: usize,
    per_node: Vec<Vec<f64>>,
    aggregated: Vec<f64>,
}

impl DistanceProfile {
    fn from_counts(n: usize, diameter: usize, counts: &[Vec<u32>]) -> Self {
        let bins = diameter + 1;
        let others = (n.max(2) - 1) as f64; // n == 1 degenerates to an all-zero profile
        let mut per_node = Vec::with_capacity(n);
        for level_counts in counts {
            let mut dist = vec![0.0; bins];
            let mut reached = 0u32;
            for (d, &c) in level_counts.iter().enumerate() {
                dist[d] = c as f64 / others;
                reached += c;
            }
            dist[bins - 1] = (n as u32 - 1 - reached) as f64 / others;
            per_node.push(dist);
        }
        let mut aggregated = vec![0.0; bins];
        for dist in &per_node {
            for (a, v) in aggregated.iter_mut().zip(dist) {
                *a += v;
            }
        }
        for a in &mut aggregated {
            *a /= n as f64;
        }
        Self {
            n,
            diameter,
            per_node,
            aggregated,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Largest finite shortest-path distance; 0 for edgeless graphs.
    pub fn diameter(&self) -> usize {
        self.diameter
    }

    /// One distribution per vertex, `diameter + 1` bins each; the last bin
    /// is the unreachable mass.
    pub fn per_node(&self) -> &[Vec<f64>] {
        &self.per_node
    }

    /// Mean of the per-node distributions, same layout.
    pub fn aggregated(&self) -> &[f64] {
        &self.aggregated
    }

    /// Fraction of ordered vertex pairs connected by a finite path.
    pub fn connected_pair_fraction(&self) -> f64 {
        1.0 - self.aggregated[self.diameter]
    }

    /// Mean finite shortest-path distance over connected ordered pairs,
    /// or `None` when no pair is connected.
    pub fn mean_finite_distance(&self) -> Option<f64> {
        let finite_mass: f64 = self.aggregated[..self.diameter].iter().sum();
        if finite_mass <= 0.0 {
            return None;
        }
        let weighted: f64 = self.aggregated[..self.diameter]
            .iter()
            .enumerate()
            .map(|(d, &m)| (d + 1) as f64 * m)
            .sum();
        Some(weighted / finite_mass)
    }

    /// Pooled distribution of finite distances over connected ordered
    /// pairs: probabilities for distances `1..=diameter`, renormalized to
    /// exclude the unreachable mass. Errors when nothing is connected.
    pub fn pooled_finite_distribution(&self) -> Result<Vec<f64>> {
        let finite_mass: f64 = self.aggregated[..self.diameter].iter().sum();
        if finite_mass <= 0.0 {
            return Err(Error::NoConnectedPairs);
        }
        Ok(self.aggregated[..self.diameter]
            .iter()
            .map(|&m| m / finite_mass)
            .collect())
    }
}
