//! Threshold-grid sweep: dynamic consistence per grid point and argmax
//! estimation.

use std::io::Write;

use rayon::prelude::*;

use crate::dissim::{d_measure_terms_from_profiles, DissimProfile, DissimWeights};
use crate::error::{Error, Result};
use crate::ingest::ReturnSeries;
use crate::netgraph::ThresholdGraph;
use crate::numeric::pairwise_sum_by;
use crate::rolling::{
    correlation_matrix, matrix_difference, window_starts, CorrMatrix, MatrixNorm, WindowSpec,
};

/// Ascending threshold grid `min, min + step, ..., <= max`.
///
/// Grid values are rounded to 10 decimals so that e.g. a 0.01 step lands on
/// exact hundredths; the count is `floor((max - min) / step) + 1` with a
/// small guard against the division landing just below an integer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaGrid {
    pub min: f64,
    pub max: f64,
    pub step: f64,
}

impl ThetaGrid {
    pub fn new(min: f64, max: f64, step: f64) -> Result<Self> {
        if !(min.is_finite() && max.is_finite() && step.is_finite()) || min >= max || step <= 0.0 {
            return Err(Error::InvalidConfig {
                reason: format!(
                    "theta grid needs min < max and step > 0, got ({min}, {max}, {step})"
                ),
            });
        }
        Ok(Self { min, max, step })
    }

    pub fn len(&self) -> usize {
        ((self.max - self.min) / self.step + 1e-9) as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.len())
            .map(|i| round10(self.min + i as f64 * self.step))
            .collect()
    }

    /// Default grid derived from the observed correlation range: start one
    /// step below the minimum correlation rounded down to a step multiple,
    /// end at 1.
    pub fn auto(min_correlation: f64, step: f64) -> Result<Self> {
        let start = round10(((min_correlation / step + 1e-9).floor() - 1.0) * step);
        Self::new(start, 1.0, step)
    }
}

fn round10(x: f64) -> f64 {
    (x * 1e10).round() / 1e10
}

/// Explicit grid, or one derived from the data's correlation range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GridSpec {
    Explicit(ThetaGrid),
    Auto { step: f64 },
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec::Auto { step: 0.01 }
    }
}

/// Which difference sequence was constant when a consistence value is
/// undefined.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZeroVarianceSide {
    Network,
    Matrix,
    Both,
}

/// Consistence at one grid point: a Pearson value, or an explicit
/// undefined marker (never a silently substituted number).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Consistence {
    Defined(f64),
    Undefined(ZeroVarianceSide),
}

impl Consistence {
    pub fn value(&self) -> Option<f64> {
        match self {
            Consistence::Defined(v) => Some(*v),
            Consistence::Undefined(_) => None,
        }
    }

    pub fn is_defined(&self) -> bool {
        matches!(self, Consistence::Defined(_))
    }
}

/// Pearson correlation between the network-difference and
/// matrix-difference sequences. Either sequence being constant makes the
/// value undefined, with the degenerate side reported.
pub fn consistence(diff_n: &[f64], diff_w: &[f64]) -> Result<Consistence> {
    if diff_n.len() != diff_w.len() {
        return Err(Error::SizeMismatch {
            left: diff_n.len(),
            right: diff_w.len(),
        });
    }
    let len = diff_n.len();
    if len < 3 {
        return Err(Error::SequenceTooShort { len });
    }
    let m = len as f64;
    let mean_n = pairwise_sum_by(len, |i| diff_n[i]) / m;
    let mean_w = pairwise_sum_by(len, |i| diff_w[i]) / m;
    let var_n = pairwise_sum_by(len, |i| (diff_n[i] - mean_n) * (diff_n[i] - mean_n)) / m;
    let var_w = pairwise_sum_by(len, |i| (diff_w[i] - mean_w) * (diff_w[i] - mean_w)) / m;
    let side = match (var_n == 0.0, var_w == 0.0) {
        (true, true) => Some(ZeroVarianceSide::Both),
        (true, false) => Some(ZeroVarianceSide::Network),
        (false, true) => Some(ZeroVarianceSide::Matrix),
        (false, false) => None,
    };
    if let Some(side) = side {
        return Ok(Consistence::Undefined(side));
    }
    let cov = pairwise_sum_by(len, |i| (diff_n[i] - mean_n) * (diff_w[i] - mean_w)) / m;
    Ok(Consistence::Defined(
        (cov / (var_n.sqrt() * var_w.sqrt())).clamp(-1.0, 1.0),
    ))
}

/// Smallest grid threshold attaining the maximal defined consistence,
/// plus every tied threshold for diagnostics.
pub fn argmax_theta(grid: &[f64], values: &[Consistence]) -> Result<(f64, Vec<f64>)> {
    if grid.len() != values.len() {
        return Err(Error::SizeMismatch {
            left: grid.len(),
            right: values.len(),
        });
    }
    let best = values
        .iter()
        .filter_map(Consistence::value)
        .fold(f64::NEG_INFINITY, f64::max);
    if best == f64::NEG_INFINITY {
        return Err(Error::AllUndefined {
            reason: "no grid point produced a defined consistence value".into(),
        });
    }
    let tied: Vec<f64> = grid
        .iter()
        .zip(values)
        .filter(|(_, v)| v.value() == Some(best))
        .map(|(t, _)| *t)
        .collect();
    Ok((tied[0], tied))
}

/// Sweep configuration; see the field docs for defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub window: WindowSpec,
    pub grid: GridSpec,
    pub weights: DissimWeights,
    pub norm: MatrixNorm,
    /// Thread count; `None` uses the global pool. Results are identical
    /// for every worker count.
    pub workers: Option<usize>,
    /// Retain the per-threshold network-difference sequences (memory grows
    /// with grid size x window count).
    pub keep_network_diffs: bool,
}

impl SweepConfig {
    pub fn new(window: WindowSpec) -> Self {
        Self {
            window,
            grid: GridSpec::default(),
            weights: DissimWeights::default(),
            norm: MatrixNorm::default(),
            workers: None,
            keep_network_diffs: false,
        }
    }
}

/// Everything the sweep produced.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    /// Ascending grid actually used (resolved when the config asked for
    /// an automatic one).
    pub grid: Vec<f64>,
    /// Consistence per grid point.
    pub g_values: Vec<Consistence>,
    /// Smallest grid threshold attaining the maximal defined consistence.
    pub theta_hat: f64,
    /// All thresholds tied at the maximum (contains `theta_hat`).
    pub tied_thetas: Vec<f64>,
    /// Matrix-difference sequence, shared by every grid point.
    pub diff_w: Vec<f64>,
    /// Network-difference sequences per grid point, when retained.
    pub network_diffs: Option<Vec<Vec<f64>>>,
    /// Window start indices into the return series.
    pub window_starts: Vec<usize>,
    /// Smallest and largest off-diagonal correlation seen across windows.
    pub correlation_range: (f64, f64),
}

/// Runs the full sweep: correlation matrices per window, the shared
/// matrix-difference sequence, then per grid point the graph sequence, the
/// network-difference sequence, and its consistence with the matrix one.
///
/// Deterministic for a fixed config regardless of worker count: all
/// parallel loops collect into indexed slots and every reduction has a
/// fixed order.
pub fn sweep(returns: &ReturnSeries, cfg: &SweepConfig) -> Result<SweepResult> {
    match cfg.workers {
        None => sweep_inner(returns, cfg),
        Some(workers) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(workers.max(1))
                .build()
                .map_err(|e| Error::InvalidConfig {
                    reason: format!("cannot build {workers}-thread pool: {e}"),
                })?;
            pool.install(|| sweep_inner(returns, cfg))
        }
    }
}

fn sweep_inner(returns: &ReturnSeries, cfg: &SweepConfig) -> Result<SweepResult> {
    let starts = window_starts(returns.num_observations(), cfg.window)?;
    let m = starts.len();
    // difference sequences need >= 3 entries for a defined Pearson value
    if m < 4 {
        return Err(Error::TooFewWindows { windows: m, min: 4 });
    }

    let mats: Vec<CorrMatrix> = starts
        .par_iter()
        .enumerate()
        .map(|(k, &start)| correlation_matrix(returns, start, cfg.window.width, k))
        .collect::<Result<_>>()?;

    let correlation_range = mats
        .iter()
        .flat_map(|w| {
            let n = w.size();
            (0..n).flat_map(move |i| (0..i).map(move |j| w.get(i, j)))
        })
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
            (lo.min(v), hi.max(v))
        });

    let grid = match cfg.grid {
        GridSpec::Explicit(g) => g,
        GridSpec::Auto { step } => ThetaGrid::auto(correlation_range.0, step)?,
    };
    let thetas = grid.values();

    let diff_w: Vec<f64> = (0..m - 1)
        .into_par_iter()
        .map(|k| matrix_difference(&mats[k], &mats[k + 1], cfg.norm))
        .collect::<Result<_>>()?;

    let per_theta: Vec<(Consistence, Vec<f64>)> = thetas
        .par_iter()
        .map(|&theta| -> Result<(Consistence, Vec<f64>)> {
            let profiles: Vec<DissimProfile> = mats
                .par_iter()
                .map(|w| DissimProfile::of(&ThresholdGraph::from_matrix(w, theta)))
                .collect::<Result<_>>()?;
            let mut diff_n = Vec::with_capacity(m - 1);
            for k in 0..m - 1 {
                let terms =
                    d_measure_terms_from_profiles(&profiles[k], &profiles[k + 1], cfg.weights)?;
                diff_n.push(terms.total());
            }
            let g = consistence(&diff_n, &diff_w)?;
            Ok((g, diff_n))
        })
        .collect::<Result<_>>()?;

    let g_values: Vec<Consistence> = per_theta.iter().map(|(g, _)| *g).collect();
    let network_diffs = cfg
        .keep_network_diffs
        .then(|| per_theta.into_iter().map(|(_, d)| d).collect());

    let (theta_hat, tied_thetas) = argmax_theta(&thetas, &g_values)?;

    Ok(SweepResult {
        grid: thetas,
        g_values,
        theta_hat,
        tied_thetas,
        diff_w,
        network_diffs,
        window_starts: starts,
        correlation_range,
    })
}

/// Writes the sweep table: `# key = value` metadata lines, then
/// `theta,g_theta,defined` rows. Undefined consistence prints as `nan`.
pub fn render_sweep_table<W: Write>(
    result: &SweepResult,
    metadata: &[(&str, String)],
    mut out: W,
) -> Result<()> {
    for (key, value) in metadata {
        writeln!(out, "# {key} = {value}")?;
    }
    writeln!(out, "theta,g_theta,defined")?;
    for (theta, g) in result.grid.iter().zip(&result.g_values) {
        match g.value() {
            Some(v) => writeln!(out, "{theta},{v},true")?,
            None => writeln!(out, "{theta},nan,false")?,
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::ReturnSeries;
    use ndarray::Array2;

    #[test]
    fn paper_grid_has_146_points() {
        let grid = ThetaGrid::new(-0.45, 1.0, 0.01).unwrap();
        let values = grid.values();
        assert_eq!(values.len(), 146);
        assert_eq!(values[0], -0.45);
        assert_eq!(*values.last().unwrap(), 1.0);
        assert!((values[73] - 0.28).abs() < 1e-12);
    }

    #[test]
    fn auto_grid_reproduces_minus_045_start() {
        let grid = ThetaGrid::auto(-0.44, 0.01).unwrap();
        assert_eq!(grid.min, -0.45);
        assert_eq!(grid.max, 1.0);
        assert_eq!(grid.len(), 146);
    }

    #[test]
    fn grid_rejects_bad_bounds() {
        assert!(ThetaGrid::new(0.5, 0.5, 0.01).is_err());
        assert!(ThetaGrid::new(0.0, 1.0, 0.0).is_err());
        assert!(ThetaGrid::new(0.0, 1.0, -0.1).is_err());
    }

    #[test]
    fn consistence_of_identical_sequences_is_one() {
        let xs = [0.5, 1.0, 0.25, 2.0, 0.75];
        match consistence(&xs, &xs).unwrap() {
            Consistence::Defined(v) => assert!((v - 1.0).abs() < 1e-12),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn consistence_of_negated_shifted_sequence_is_minus_one() {
        let xs = [0.5, 1.0, 0.25, 2.0, 0.75];
        let ys: Vec<f64> = xs.iter().map(|x| -x + 3.0).collect();
        match consistence(&xs, &ys).unwrap() {
            Consistence::Defined(v) => assert!((v + 1.0).abs() < 1e-12),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn consistence_matches_textbook_pearson() {
        // frozen from a high-precision evaluation
        let v = consistence(&[1.0, 2.0, 3.0, 5.0], &[2.0, 4.0, 5.0, 9.0])
            .unwrap()
            .value()
            .unwrap();
        assert!((v - 0.9944903161976938).abs() < 1e-14, "{v}");
    }

    #[test]
    fn consistence_zero_variance_is_undefined_not_a_number() {
        let flat = [1.0, 1.0, 1.0, 1.0];
        let live = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(
            consistence(&flat, &live).unwrap(),
            Consistence::Undefined(ZeroVarianceSide::Network)
        );
        assert_eq!(
            consistence(&live, &flat).unwrap(),
            Consistence::Undefined(ZeroVarianceSide::Matrix)
        );
        assert_eq!(
            consistence(&flat, &flat).unwrap(),
            Consistence::Undefined(ZeroVarianceSide::Both)
        );
    }

    #[test]
    fn consistence_rejects_short_or_mismatched_input() {
        assert!(matches!(
            consistence(&[1.0, 2.0], &[1.0, 2.0]),
            Err(Error::SequenceTooShort { len: 2 })
        ));
        assert!(matches!(
            consistence(&[1.0, 2.0, 3.0], &[1.0, 2.0]),
            Err(Error::SizeMismatch { .. })
        ));
    }

    #[test]
    fn consistence_invariant_under_positive_affine_transforms() {
        let a = [0.1, 0.9, 0.4, 0.7, 0.2, 0.55];
        let b = [1.0, 0.3, 0.8, 0.25, 0.95, 0.4];
        let base = consistence(&a, &b).unwrap().value().unwrap();
        let a2: Vec<f64> = a.iter().map(|x| 4.5 * x + 2.0).collect();
        let b2: Vec<f64> = b.iter().map(|x| 0.02 * x - 7.0).collect();
        let transformed = consistence(&a2, &b2).unwrap().value().unwrap();
        assert!((base - transformed).abs() < 1e-10);
    }

    #[test]
    fn argmax_takes_smallest_theta_and_reports_ties() {
        let grid = [0.0, 0.1, 0.2, 0.3];
        let values = [
            Consistence::Defined(0.1),
            Consistence::Defined(0.9),
            Consistence::Defined(0.9),
            Consistence::Defined(0.3),
        ];
        let (hat, tied) = argmax_theta(&grid, &values).unwrap();
        assert_eq!(hat, 0.1);
        assert_eq!(tied, vec![0.1, 0.2]);
    }

    #[test]
    fn argmax_ignores_undefined_and_errors_when_all_undefined() {
        let grid = [0.0, 0.1];
        let values = [
            Consistence::Undefined(ZeroVarianceSide::Network),
            Consistence::Defined(0.2),
        ];
        assert_eq!(argmax_theta(&grid, &values).unwrap().0, 0.1);
        let all = [Consistence::Undefined(ZeroVarianceSide::Both); 2];
        assert!(matches!(
            argmax_theta(&grid, &all),
            Err(Error::AllUndefined { .. })
        ));
    }

    #[test]
    fn argmax_single_defined_value() {
        let (hat, tied) = argmax_theta(&[0.7], &[Consistence::Defined(-0.4)]).unwrap();
        assert_eq!((hat, tied), (0.7, vec![0.7]));
    }

    fn synthetic_returns(n: usize, t: usize, seed: u64) -> ReturnSeries {
        let mut rng = crate::rng::Xoshiro256StarStar::seed_from_u64(seed);
        let mut data = Array2::zeros((n, t));
        for col in 0..t {
            // correlation regime flips halfway through
            let loading: f64 = if col < t / 2 { 0.3 } else { 0.8 };
            let f = rng.next_normal();
            for row in 0..n {
                data[(row, col)] =
                    0.02 * (loading * f + (1.0 - loading * loading).sqrt() * rng.next_normal());
            }
        }
        ReturnSeries::from_raw((0..n).map(|i| format!("S{i}")).collect(), 1, data).unwrap()
    }

    fn small_config() -> SweepConfig {
        let mut cfg = SweepConfig::new(WindowSpec::new(40, 10).unwrap());
        cfg.grid = GridSpec::Explicit(ThetaGrid::new(-0.2, 0.9, 0.05).unwrap());
        cfg
    }

    #[test]
    fn sweep_is_worker_count_invariant() {
        let returns = synthetic_returns(12, 160, 77);
        let mut cfg = small_config();
        cfg.keep_network_diffs = true;
        cfg.workers = Some(1);
        let one = sweep(&returns, &cfg).unwrap();
        cfg.workers = Some(3);
        let three = sweep(&returns, &cfg).unwrap();
        assert_eq!(one, three);
    }

    #[test]
    fn sweep_marks_degenerate_grid_points_undefined() {
        let returns = synthetic_returns(8, 120, 5);
        let mut cfg = small_config();
        cfg.grid = GridSpec::Explicit(ThetaGrid::new(1.5, 2.0, 0.25).unwrap());
        // all graphs empty at every theta -> network diffs constant zero
        match sweep(&returns, &cfg) {
            Err(Error::AllUndefined { .. }) => {}
            other => panic!("expected AllUndefined, got {other:?}"),
        }
    }

    #[test]
    fn sweep_mixed_grid_keeps_undefined_points_out_of_argmax() {
        let returns = synthetic_returns(10, 160, 9);
        let mut cfg = small_config();
        // extend the grid well past any observed correlation
        cfg.grid = GridSpec::Explicit(ThetaGrid::new(-0.5, 1.5, 0.1).unwrap());
        let result = sweep(&returns, &cfg).unwrap();
        let last = result.g_values.last().unwrap();
        assert!(!last.is_defined(), "theta=1.5 must be degenerate");
        assert!(result.theta_hat < 1.2);
        assert!(result
            .g_values
            .iter()
            .filter_map(Consistence::value)
            .all(|v| (-1.0..=1.0).contains(&v)));
    }

    #[test]
    fn sweep_requires_enough_windows() {
        let returns = synthetic_returns(6, 50, 3);
        let cfg = SweepConfig::new(WindowSpec::new(40, 10).unwrap());
        assert!(matches!(
            sweep(&returns, &cfg),
            Err(Error::TooFewWindows { windows: 2, min: 4 })
        ));
    }

    #[test]
    fn sweep_auto_grid_covers_observed_range() {
        let returns = synthetic_returns(10, 200, 13);
        let mut cfg = SweepConfig::new(WindowSpec::new(50, 25).unwrap());
        cfg.grid = GridSpec::Auto { step: 0.01 };
        let result = sweep(&returns, &cfg).unwrap();
        assert!(result.grid[0] <= result.correlation_range.0);
        assert_eq!(*result.grid.last().unwrap(), 1.0);
        // matrix diffs shared across grid points: length m - 1
        assert_eq!(result.diff_w.len(), result.window_starts.len() - 1);
    }

    #[test]
    fn rendered_table_lists_every_grid_point() {
        let returns = synthetic_returns(8, 140, 21);
        let cfg = small_config();
        let result = sweep(&returns, &cfg).unwrap();
        let mut buf = Vec::new();
        render_sweep_table(&result, &[("norm", "frobenius".into())], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 2 + result.grid.len());
        assert!(text.starts_with("# norm = frobenius\ntheta,g_theta,defined\n"));
    }
}
