//! Network dissimilarity: divergence of distance distributions, node
//! dispersion, and centrality terms on graphs and their complements.

use crate::error::{Error, Result};
use crate::netgraph::{DistanceProfile, ThresholdGraph};

const LN_2: f64 = std::f64::consts::LN_2;

/// A validated discrete probability vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution(Vec<f64>);

impl Distribution {
    /// Checks nonnegativity and unit total mass (1e-12 slack).
    pub fn new(probabilities: Vec<f64>) -> Result<Self> {
        if probabilities.is_empty() {
            return Err(Error::InvalidDistribution {
                reason: "empty probability vector".into(),
            });
        }
        if let Some(&bad) = probabilities.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return Err(Error::InvalidDistribution {
                reason: format!("negative or non-finite probability {bad}"),
            });
        }
        let total: f64 = probabilities.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidDistribution {
                reason: format!("probabilities sum to {total}, expected 1"),
            });
        }
        Ok(Self(probabilities))
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Weights of the three dissimilarity terms; must be nonnegative and sum
/// to 1. Defaults to (0.45, 0.45, 0.1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DissimWeights {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl DissimWeights {
    pub fn new(alpha: f64, beta: f64, gamma: f64) -> Result<Self> {
        let reject = |reason: &str| Error::InvalidWeights {
            alpha,
            beta,
            gamma,
            reason: reason.into(),
        };
        if !(alpha >= 0.0 && beta >= 0.0 && gamma >= 0.0) {
            return Err(reject("weights must be nonnegative"));
        }
        if (alpha + beta + gamma - 1.0).abs() > 1e-12 {
            return Err(reject("weights must sum to 1"));
        }
        Ok(Self { alpha, beta, gamma })
    }
}

impl Default for DissimWeights {
    fn default() -> Self {
        Self {
            alpha: 0.45,
            beta: 0.45,
            gamma: 0.1,
        }
    }
}

fn entropy_of(probabilities: &[f64]) -> f64 {
    let mut acc = 0.0;
    for &p in probabilities {
        if p > 0.0 {
            acc -= p * p.ln();
        }
    }
    acc
}

/// Shannon entropy in nats, with `0 ln 0 = 0`.
pub fn shannon_entropy(p: &Distribution) -> f64 {
    entropy_of(p.probabilities())
}

/// Jensen-Shannon divergence of slices already on a common support
/// (shorter ones are treated as zero-padded). Clamped at 0 to absorb
/// cancellation error.
fn jsd_slices(ps: &[&[f64]]) -> f64 {
    let m = ps.len();
    let support = ps.iter().map(|p| p.len()).max().unwrap_or(0);
    let mut mixture = vec![0.0; support];
    for p in ps {
        for (slot, &v) in mixture.iter_mut().zip(p.iter()) {
            *slot += v;
        }
    }
    for slot in &mut mixture {
        *slot /= m as f64;
    }
    let mean_entropy = ps.iter().map(|p| entropy_of(p)).sum::<f64>() / m as f64;
    (entropy_of(&mixture) - mean_entropy).max(0.0)
}

/// Jensen-Shannon divergence of `m >= 2` distributions: entropy of the
/// average distribution minus the average of entropies. Bounded by `ln m`;
/// by `ln 2` for two distributions.
pub fn jsd(ps: &[Distribution]) -> Result<f64> {
    if ps.len() < 2 {
        return Err(Error::InvalidDistribution {
            reason: format!("jsd needs at least 2 distributions, got {}", ps.len()),
        });
    }
    let slices: Vec<&[f64]> = ps.iter().map(|p| p.probabilities()).collect();
    Ok(jsd_slices(&slices))
}

/// Network node dispersion: divergence among all per-node distance
/// distributions, normalized by `ln(diameter + 1)`. Zero whenever the
/// per-node distributions coincide, including the edgeless `diameter = 0`
/// case where the normalizer itself vanishes.
pub fn nnd(profile: &DistanceProfile) -> Result<f64> {
    if profile.n() < 2 {
        return Err(Error::TooFewVertices {
            op: "nnd",
            min: 2,
            n: profile.n(),
        });
    }
    // exactly zero when every vertex sees the same distance distribution
    // (vertex-transitive or edgeless graphs); the divergence would otherwise
    // pick up summation noise that the square root in the dissimilarity
    // amplifies
    let per_node = profile.per_node();
    if per_node.windows(2).all(|pair| pair[0] == pair[1]) {
        return Ok(0.0);
    }
    let denom = ((profile.diameter() + 1) as f64).ln();
    if denom == 0.0 {
        return Ok(0.0);
    }
    let slices: Vec<&[f64]> = per_node.iter().map(|d| d.as_slice()).collect();
    Ok(jsd_slices(&slices) / denom)
}

/// Degree centralities `k_i / (n - 1)` histogrammed on a fixed partition of
/// `[0, 1]` into `n` right-closed bins (0 falls in the first bin).
pub fn centrality_distribution(g: &ThresholdGraph) -> Result<Distribution> {
    if g.n() < 2 {
        return Err(Error::TooFewVertices {
            op: "centrality_distribution",
            min: 2,
            n: g.n(),
        });
    }
    Ok(centrality_from_degrees(&g.degrees(), g.n()))
}

fn centrality_from_degrees(degrees: &[usize], n: usize) -> Distribution {
    let bins = n;
    let mut hist = vec![0.0; bins];
    for &k in degrees {
        let c = k as f64 / (n - 1) as f64;
        let bin = if c <= 0.0 {
            0
        } else {
            ((c * bins as f64).ceil() as usize - 1).min(bins - 1)
        };
        hist[bin] += 1.0;
    }
    for h in &mut hist {
        *h /= n as f64;
    }
    Distribution(hist)
}

/// Cached per-graph inputs of the dissimilarity: aggregated distance
/// distribution, node dispersion, and the centrality histograms of the
/// graph and its complement. Building one of these costs a full BFS
/// profile; comparing two is cheap, which is what the threshold sweep
/// exploits.
#[derive(Debug, Clone)]
pub struct DissimProfile {
    n: usize,
    diameter: usize,
    aggregated: Vec<f64>,
    nnd: f64,
    centrality: Distribution,
    complement_centrality: Distribution,
}

impl DissimProfile {
    pub fn of(g: &ThresholdGraph) -> Result<Self> {
        let profile = g.distance_profile();
        Self::from_distance_profile(g, &profile)
    }

    /// Variant for callers that already hold the BFS profile.
    pub fn from_distance_profile(g: &ThresholdGraph, profile: &DistanceProfile) -> Result<Self> {
        let n = g.n();
        let dispersion = nnd(profile)?;
        let degrees = g.degrees();
        // complement degrees are n-1-k; no need to materialize the graph
        let co_degrees: Vec<usize> = degrees.iter().map(|&k| n - 1 - k).collect();
        Ok(Self {
            n,
            diameter: profile.diameter(),
            aggregated: profile.aggregated().to_vec(),
            nnd: dispersion,
            centrality: centrality_from_degrees(&degrees, n),
            complement_centrality: centrality_from_degrees(&co_degrees, n),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnd(&self) -> f64 {
        self.nnd
    }

    pub fn centrality(&self) -> &Distribution {
        &self.centrality
    }

    pub fn complement_centrality(&self) -> &Distribution {
        &self.complement_centrality
    }
}

/// Weighted contributions of the three dissimilarity terms;
/// `total = distance + dispersion + centrality`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DissimTerms {
    pub distance: f64,
    pub dispersion: f64,
    pub centrality: f64,
}

impl DissimTerms {
    pub fn total(&self) -> f64 {
        self.distance + self.dispersion + self.centrality
    }
}

/// Aligns two aggregated distance distributions onto a common support:
/// finite bins padded to the larger diameter, unreachable bins (always
/// stored last) compared against each other.
fn align_aggregated(a: &DissimProfile, b: &DissimProfile) -> (Vec<f64>, Vec<f64>) {
    let bins = a.diameter.max(b.diameter) + 1;
    let stretch = |p: &DissimProfile| {
        let mut v = vec![0.0; bins];
        v[..p.diameter].copy_from_slice(&p.aggregated[..p.diameter]);
        v[bins - 1] = p.aggregated[p.diameter];
        v
    };
    (stretch(a), stretch(b))
}

/// Dissimilarity of two graphs from their cached profiles, split by term.
pub fn d_measure_terms_from_profiles(
    a: &DissimProfile,
    b: &DissimProfile,
    w: DissimWeights,
) -> Result<DissimTerms> {
    if a.n != b.n {
        return Err(Error::SizeMismatch {
            left: a.n,
            right: b.n,
        });
    }
    let (pa, pb) = align_aggregated(a, b);
    let distance = w.alpha * (jsd_slices(&[&pa, &pb]) / LN_2).sqrt();
    let dispersion = w.beta * (a.nnd.sqrt() - b.nnd.sqrt()).abs();
    let j_cent = jsd_slices(&[a.centrality.probabilities(), b.centrality.probabilities()]);
    let j_cocent = jsd_slices(&[
        a.complement_centrality.probabilities(),
        b.complement_centrality.probabilities(),
    ]);
    let centrality = w.gamma / 2.0 * ((j_cent / LN_2).sqrt() + (j_cocent / LN_2).sqrt());
    Ok(DissimTerms {
        distance,
        dispersion,
        centrality,
    })
}

/// Graph dissimilarity in `[0, 1]`: weighted sum of the aggregated
/// distance-distribution divergence, the node-dispersion difference, and
/// the centrality divergence on graphs and complements.
pub fn d_measure(g1: &ThresholdGraph, g2: &ThresholdGraph, w: DissimWeights) -> Result<f64> {
    Ok(d_measure_terms(g1, g2, w)?.total())
}

/// Like [`d_measure`] but exposing the per-term contributions.
pub fn d_measure_terms(
    g1: &ThresholdGraph,
    g2: &ThresholdGraph,
    w: DissimWeights,
) -> Result<DissimTerms> {
    if g1.n() != g2.n() {
        return Err(Error::SizeMismatch {
            left: g1.n(),
            right: g2.n(),
        });
    }
    let a = DissimProfile::of(g1)?;
    let b = DissimProfile::of(g2)?;
    d_measure_terms_from_profiles(&a, &b, w)
}
