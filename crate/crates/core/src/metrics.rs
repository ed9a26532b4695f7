//! Per-window network statistics: density, clustering, path lengths,
//! heterogeneity indices, entropies.

use std::io::Write;

use rayon::prelude::*;

use crate::dissim::nnd;
use crate::error::{Error, Result};
use crate::netgraph::{DistanceProfile, ThresholdGraph};
use crate::rolling::{avg_correlation, CorrMatrix};

/// Default histogram resolution for the clustering-coefficient entropy.
pub const DEFAULT_CLUSTER_BINS: usize = 20;

/// All statistics of one window. Path statistics are `None` when the graph
/// has no connected pair.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub window_index: usize,
    pub avg_corr: f64,
    pub edge_density: f64,
    pub avg_clustering: f64,
    pub avg_path_length: Option<f64>,
    pub connected_pair_fraction: f64,
    pub h_k: f64,
    pub h_c: f64,
    pub h_c_excluded_edge_fraction: f64,
    pub h_l: f64,
    pub s_k: f64,
    pub s_c: f64,
    pub s_l: Option<f64>,
}

/// Realized fraction of the `n(n-1)/2` possible edges.
pub fn edge_density(g: &ThresholdGraph) -> Result<f64> {
    let n = g.n();
    if n < 2 {
        return Err(Error::TooFewVertices {
            op: "edge_density",
            min: 2,
            n,
        });
    }
    Ok(2.0 * g.edge_count() as f64 / (n * (n - 1)) as f64)
}

/// Mean local clustering coefficient (degree < 2 counts as 0).
pub fn avg_clustering(g: &ThresholdGraph) -> f64 {
    let c = g.local_clustering();
    if c.is_empty() {
        0.0
    } else {
        c.iter().sum::<f64>() / c.len() as f64
    }
}

/// Mean shortest-path distance over connected ordered pairs, plus the
/// fraction of ordered pairs that are connected. With no connected pair the
/// mean is `None` and the fraction 0.
pub fn avg_path_length(profile: &DistanceProfile) -> Result<(Option<f64>, f64)> {
    if profile.n() < 2 {
        return Err(Error::TooFewVertices {
            op: "avg_path_length",
            min: 2,
            n: profile.n(),
        });
    }
    Ok((
        profile.mean_finite_distance(),
        profile.connected_pair_fraction(),
    ))
}

fn heterogeneity_from_values(
    g: &ThresholdGraph,
    value: &[f64],
    skip_zero_values: bool,
) -> (f64, f64) {
    let n = g.n();
    let mut sum = 0.0;
    let mut excluded = 0usize;
    let mut total = 0usize;
    for (i, j) in g.edges() {
        total += 1;
        if skip_zero_values && (value[i] == 0.0 || value[j] == 0.0) {
            excluded += 1;
            continue;
        }
        let d = 1.0 / value[i].sqrt() - 1.0 / value[j].sqrt();
        sum += d * d;
    }
    let denom = n as f64 - 2.0 * ((n - 1) as f64).sqrt();
    let fraction = if total == 0 {
        0.0
    } else {
        excluded as f64 / total as f64
    };
    (sum / denom, fraction)
}

/// Degree heterogeneity: edge sum of squared differences of inverse square
/// root degrees, normalized so regular graphs score 0 and stars score 1.
pub fn heterogeneity_degree(g: &ThresholdGraph) -> Result<f64> {
    if g.n() < 3 {
        return Err(Error::TooFewVertices {
            op: "heterogeneity_degree",
            min: 3,
            n: g.n(),
        });
    }
    let degrees: Vec<f64> = g.degrees().iter().map(|&k| k as f64).collect();
    Ok(heterogeneity_from_values(g, &degrees, false).0)
}

/// Same index over local clustering values. Edges with a zero-clustering
/// endpoint are excluded (the inverse square root diverges there); the
/// excluded-edge fraction is returned alongside so the omission is visible.
pub fn heterogeneity_clustering(g: &ThresholdGraph) -> Result<(f64, f64)> {
    if g.n() < 3 {
        return Err(Error::TooFewVertices {
            op: "heterogeneity_clustering",
            min: 3,
            n: g.n(),
        });
    }
    let c = g.local_clustering();
    Ok(heterogeneity_from_values(g, &c, true))
}

fn entropy_of_counts(counts: impl IntoIterator<Item = usize>, total: usize) -> f64 {
    let mut acc = 0.0;
    for c in counts {
        if c > 0 {
            let p = c as f64 / total as f64;
            acc -= p * p.ln();
        }
    }
    acc
}

/// Shannon entropy (nats) of the empirical degree distribution.
pub fn entropy_degree(g: &ThresholdGraph) -> f64 {
    let n = g.n();
    if n == 0 {
        return 0.0;
    }
    let mut counts = vec![0usize; n];
    for k in g.degrees() {
        counts[k] += 1;
    }
    entropy_of_counts(counts, n)
}

/// Shannon entropy of local clustering values histogrammed into `bins`
/// right-closed uniform bins on `[0, 1]` (0 falls in the first bin).
pub fn entropy_clustering(g: &ThresholdGraph, bins: usize) -> f64 {
    let n = g.n();
    if n == 0 || bins == 0 {
        return 0.0;
    }
    let mut counts = vec![0usize; bins];
    for c in g.local_clustering() {
        let bin = if c <= 0.0 {
            0
        } else {
            ((c * bins as f64).ceil() as usize - 1).min(bins - 1)
        };
        counts[bin] += 1;
    }
    entropy_of_counts(counts, n)
}

/// Shannon entropy of the pooled finite shortest-path-length distribution
/// over connected ordered pairs.
pub fn entropy_path(profile: &DistanceProfile) -> Result<f64> {
    if profile.n() < 2 {
        return Err(Error::TooFewVertices {
            op: "entropy_path",
            min: 2,
            n: profile.n(),
        });
    }
    let pooled = profile.pooled_finite_distribution()?;
    let mut acc = 0.0;
    for p in pooled {
        if p > 0.0 {
            acc -= p * p.ln();
        }
    }
    Ok(acc)
}

/// Computes the full row for one window from its graph, matrix, and BFS
/// profile.
pub fn metrics_row(
    g: &ThresholdGraph,
    w: &CorrMatrix,
    profile: &DistanceProfile,
    cluster_bins: usize,
) -> Result<MetricsRow> {
    let (l, connected) = avg_path_length(profile)?;
    let (h_c, h_c_excluded) = heterogeneity_clustering(g)?;
    let s_l = match entropy_path(profile) {
        Ok(v) => Some(v),
        Err(Error::NoConnectedPairs) => None,
        Err(e) => return Err(e),
    };
    Ok(MetricsRow {
        window_index: g.window_index(),
        avg_corr: avg_correlation(w)?,
        edge_density: edge_density(g)?,
        avg_clustering: avg_clustering(g),
        avg_path_length: l,
        connected_pair_fraction: connected,
        h_k: heterogeneity_degree(g)?,
        h_c,
        h_c_excluded_edge_fraction: h_c_excluded,
        h_l: nnd(profile)?,
        s_k: entropy_degree(g),
        s_c: entropy_clustering(g, cluster_bins),
        s_l,
    })
}

/// One row per window, computed in parallel and assembled in window order.
pub fn metrics_series(
    graphs: &[ThresholdGraph],
    mats: &[CorrMatrix],
    cluster_bins: usize,
) -> Result<Vec<MetricsRow>> {
    if graphs.len() != mats.len() {
        return Err(Error::SizeMismatch {
            left: graphs.len(),
            right: mats.len(),
        });
    }
    graphs
        .par_iter()
        .zip(mats.par_iter())
        .map(|(g, w)| {
            let profile = g.distance_profile();
            metrics_row(g, w, &profile, cluster_bins)
        })
        .collect()
}

fn fmt_opt(v: Option<f64>) -> String {
    match v {
        Some(x) => format!("{x}"),
        None => "nan".into(),
    }
}

/// Writes the metrics table: `# key = value` metadata lines, a header, one
/// delimited row per window. Undefined path statistics print as `nan`.
pub fn render_metrics_table<W: Write>(
    rows: &[MetricsRow],
    metadata: &[(&str, String)],
    mut out: W,
) -> Result<()> {
    for (key, value) in metadata {
        writeln!(out, "# {key} = {value}")?;
    }
    writeln!(
        out,
        "window,avg_corr,edge_density,avg_clustering,avg_path_length,\
         connected_pair_fraction,h_k,h_c,h_c_excluded_edge_fraction,h_l,s_k,s_c,s_l"
    )?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.window_index,
            r.avg_corr,
            r.edge_density,
            r.avg_clustering,
            fmt_opt(r.avg_path_length),
            r.connected_pair_fraction,
            r.h_k,
            r.h_c,
            r.h_c_excluded_edge_fraction,
            r.h_l,
            r.s_k,
            r.s_c,
            fmt_opt(r.s_l),
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netgraph::ThresholdGraph;
    use ndarray::Array2;

    fn complete(n: usize) -> ThresholdGraph {
        let mut edges = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                edges.push((i, j));
            }
        }
        ThresholdGraph::from_edges(n, &edges)
    }

    fn path(n: usize) -> ThresholdGraph {
        ThresholdGraph::from_edges(n, &(0..n - 1).map(|i| (i, i + 1)).collect::<Vec<_>>())
    }

    fn cycle(n: usize) -> ThresholdGraph {
        ThresholdGraph::from_edges(n, &(0..n).map(|i| (i, (i + 1) % n)).collect::<Vec<_>>())
    }

    fn star(leaves: usize) -> ThresholdGraph {
        ThresholdGraph::from_edges(
            leaves + 1,
            &(1..=leaves).map(|i| (0, i)).collect::<Vec<_>>(),
        )
    }

    fn bowtie() -> ThresholdGraph {
        ThresholdGraph::from_edges(5, &[(0, 1), (0, 2), (1, 2), (2, 3), (2, 4), (3, 4)])
    }

    #[test]
    fn edge_density_examples() {
        assert_eq!(edge_density(&complete(6)).unwrap(), 1.0);
        assert_eq!(
            edge_density(&ThresholdGraph::from_edges(6, &[])).unwrap(),
            0.0
        );
        assert_eq!(edge_density(&path(4)).unwrap(), 0.5);
    }

    #[test]
    fn avg_clustering_examples() {
        assert_eq!(avg_clustering(&complete(5)), 1.0);
        assert_eq!(avg_clustering(&path(6)), 0.0); // trees have no triangles
                                                   // triangle plus a pendant on one corner: (1 + 1 + 1/3 + 0) / 4
        let g = ThresholdGraph::from_edges(4, &[(0, 1), (0, 2), (1, 2), (2, 3)]);
        assert!((avg_clustering(&g) - 7.0 / 12.0).abs() < 1e-15);
    }

    #[test]
    fn avg_path_length_examples() {
        let (l, f) = avg_path_length(&complete(5).distance_profile()).unwrap();
        assert_eq!((l, f), (Some(1.0), 1.0));

        let (l, f) = avg_path_length(&path(3).distance_profile()).unwrap();
        assert!((l.unwrap() - 4.0 / 3.0).abs() < 1e-15);
        assert_eq!(f, 1.0);

        // triangle plus isolated vertex: 6 of 12 ordered pairs connected
        let g = ThresholdGraph::from_edges(4, &[(0, 1), (0, 2), (1, 2)]);
        let (l, f) = avg_path_length(&g.distance_profile()).unwrap();
        assert_eq!(l, Some(1.0));
        assert_eq!(f, 0.5);

        let (l, f) =
            avg_path_length(&ThresholdGraph::from_edges(3, &[]).distance_profile()).unwrap();
        assert_eq!((l, f), (None, 0.0));
    }

    #[test]
    fn heterogeneity_degree_endpoints() {
        assert!(heterogeneity_degree(&cycle(6)).unwrap().abs() <= 1e-12);
        assert!(heterogeneity_degree(&complete(7)).unwrap().abs() <= 1e-12);
        for leaves in 2..=12 {
            let h = heterogeneity_degree(&star(leaves)).unwrap();
            assert!((h - 1.0).abs() <= 1e-12, "star {leaves}: {h}");
        }
    }

    #[test]
    fn heterogeneity_degree_of_path4_matches_direct_formula() {
        let h = heterogeneity_degree(&path(4)).unwrap();
        assert!((h - 0.32015934382394774).abs() < 1e-14, "{h}");
    }

    #[test]
    fn heterogeneity_clustering_examples() {
        let (h, excl) = heterogeneity_clustering(&complete(5)).unwrap();
        assert_eq!((h, excl), (0.0, 0.0));

        // all edges join equal-clustering endpoints in a disjoint pair of
        // triangles
        let two_triangles =
            ThresholdGraph::from_edges(6, &[(0, 1), (0, 2), (1, 2), (3, 4), (3, 5), (4, 5)]);
        let (h, excl) = heterogeneity_clustering(&two_triangles).unwrap();
        assert_eq!((h, excl), (0.0, 0.0));

        // bowtie: frozen from direct evaluation on the 5-node graph
        let (h, excl) = heterogeneity_clustering(&bowtie()).unwrap();
        assert!((h - 2.1435935394489816).abs() < 1e-12, "{h}");
        assert_eq!(excl, 0.0);

        // pendant edge has a zero-clustering endpoint and is excluded
        let g = ThresholdGraph::from_edges(4, &[(0, 1), (0, 2), (1, 2), (2, 3)]);
        let (_, excl) = heterogeneity_clustering(&g).unwrap();
        assert_eq!(excl, 0.25);
    }

    #[test]
    fn entropy_degree_examples() {
        assert_eq!(entropy_degree(&cycle(8)), 0.0);
        let s = entropy_degree(&star(3));
        assert!((s - 0.5623351446188083).abs() < 1e-14);
        // degrees uniform over {1, 2, 3, 4}
        let g = ThresholdGraph::from_edges(
            8,
            &[
                (0, 1),
                (0, 2),
                (0, 3),
                (0, 4),
                (1, 2),
                (1, 3),
                (1, 5),
                (2, 6),
                (3, 7),
                (4, 5),
            ],
        );
        let mut degs = g.degrees();
        degs.sort_unstable();
        assert_eq!(degs, vec![1, 1, 2, 2, 3, 3, 4, 4]);
        assert!((entropy_degree(&g) - 4.0f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn entropy_degree_bounded_by_distinct_values() {
        let g = bowtie();
        let mut degs = g.degrees();
        degs.sort_unstable();
        degs.dedup();
        assert!(entropy_degree(&g) <= (degs.len() as f64).ln() + 1e-12);
    }

    #[test]
    fn entropy_clustering_examples() {
        assert_eq!(entropy_clustering(&complete(5), DEFAULT_CLUSTER_BINS), 0.0);
        assert_eq!(entropy_clustering(&path(5), DEFAULT_CLUSTER_BINS), 0.0);
        // bowtie: clustering values (1, 1, 1/3, 1, 1) -> bins 19 and 6
        let s = entropy_clustering(&bowtie(), DEFAULT_CLUSTER_BINS);
        assert!((s - 0.5004024235381878).abs() < 1e-14, "{s}");
    }

    #[test]
    fn entropy_path_examples() {
        assert_eq!(entropy_path(&complete(5).distance_profile()).unwrap(), 0.0);
        let s = entropy_path(&path(3).distance_profile()).unwrap();
        assert!((s - 0.636514168294813).abs() < 1e-13, "{s}");
        let s4 = entropy_path(&cycle(4).distance_profile()).unwrap();
        assert!((s4 - 0.636514168294813).abs() < 1e-13, "{s4}");
        assert!(matches!(
            entropy_path(&ThresholdGraph::from_edges(3, &[]).distance_profile()),
            Err(Error::NoConnectedPairs)
        ));
    }

    fn synthetic_window(n: usize, level: f64, idx: usize) -> (ThresholdGraph, CorrMatrix) {
        let mut m = Array2::eye(n);
        for i in 0..n {
            for j in 0..i {
                m[(i, j)] = level;
                m[(j, i)] = level;
            }
        }
        let w = CorrMatrix::new(m, idx).unwrap();
        let g = ThresholdGraph::from_matrix(&w, 0.25);
        (g, w)
    }

    #[test]
    fn series_has_one_row_per_window_in_order() {
        let (g0, w0) = synthetic_window(6, 0.1, 0);
        let (g1, w1) = synthetic_window(6, 0.3, 1);
        let (g2, w2) = synthetic_window(6, 0.6, 2);
        let rows = metrics_series(&[g0, g1, g2], &[w0, w1, w2], DEFAULT_CLUSTER_BINS).unwrap();
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[0].window_index, 0);
        assert_eq!(rows[2].window_index, 2);
        // increasing uniform correlation: density and clustering nondecreasing
        assert!(rows[0].edge_density <= rows[1].edge_density);
        assert!(rows[1].edge_density <= rows[2].edge_density);
        assert!(rows[0].avg_clustering <= rows[2].avg_clustering);
    }

    #[test]
    fn identical_windows_give_identical_rows() {
        let (g0, w0) = synthetic_window(5, 0.4, 3);
        let (g1, w1) = synthetic_window(5, 0.4, 3);
        let rows = metrics_series(&[g0, g1], &[w0, w1], DEFAULT_CLUSTER_BINS).unwrap();
        assert_eq!(rows[0], rows[1]);
    }

    #[test]
    fn series_rejects_length_mismatch() {
        let (g0, w0) = synthetic_window(5, 0.4, 0);
        let (_, w1) = synthetic_window(5, 0.4, 1);
        assert!(matches!(
            metrics_series(&[g0], &[w0, w1], DEFAULT_CLUSTER_BINS),
            Err(Error::SizeMismatch { .. })
        ));
    }

    #[test]
    fn path_length_at_least_one_when_any_pair_connected() {
        for seed in 0..30 {
            let g = crate::netgraph::tests::random_graph(17, 0.12, seed + 400);
            let p = g.distance_profile();
            let (l, f) = avg_path_length(&p).unwrap();
            if f > 0.0 {
                assert!(l.unwrap() >= 1.0);
            } else {
                assert!(l.is_none());
            }
        }
    }

    #[test]
    fn table_rendering_includes_metadata_and_nan_sentinels() {
        let (g, w) = synthetic_window(4, 0.9, 0);
        let empty_g = ThresholdGraph::from_matrix(&w, 2.0);
        let profile = empty_g.distance_profile();
        let row = metrics_row(&empty_g, &w, &profile, DEFAULT_CLUSTER_BINS).unwrap();
        drop(g);
        let mut buf = Vec::new();
        render_metrics_table(&[row], &[("theta", "2".into())], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("# theta = 2\n"));
        assert!(text.contains(",nan,"));
        assert!(text.lines().count() == 3);
    }
}
