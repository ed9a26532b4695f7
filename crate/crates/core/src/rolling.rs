//! Moving windows, per-window correlation matrices, and matrix differences.

use std::io::{Read, Write};

use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};
use crate::ingest::ReturnSeries;
use crate::numeric::{pairwise_sum, pairwise_sum_by};

/// Moving-window geometry in trading days.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WindowSpec {
    pub width: usize,
    pub step: usize,
}

impl WindowSpec {
    pub fn new(width: usize, step: usize) -> Result<Self> {
        if width < 2 {
            return Err(Error::InvalidConfig {
                reason: format!("window width must be >= 2, got {width}"),
            });
        }
        if step < 1 {
            return Err(Error::InvalidConfig {
                reason: "window step must be >= 1".into(),
            });
        }
        Ok(Self { width, step })
    }
}

/// Start indices of every full window: `0, step, 2*step, ...` with
/// `floor((t_obs - width) / step) + 1` entries.
pub fn window_starts(t_obs: usize, spec: WindowSpec) -> Result<Vec<usize>> {
    if t_obs < spec.width {
        return Err(Error::WindowTooWide {
            width: spec.width,
            observations: t_obs,
        });
    }
    let count = (t_obs - spec.width) / spec.step + 1;
    Ok((0..count).map(|k| k * spec.step).collect())
}

/// Symmetric correlation matrix for one window, entries clamped to `[-1, 1]`
/// with an exactly-unit diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrMatrix {
    entries: Array2<f64>,
    window_index: usize,
}

impl CorrMatrix {
    /// Wraps a precomputed matrix; checks symmetry, the unit diagonal, and
    /// the `[-1, 1]` range (1e-12 slack before clamping).
    pub fn new(mut entries: Array2<f64>, window_index: usize) -> Result<Self> {
        let n = entries.nrows();
        if entries.ncols() != n {
            return Err(Error::SizeMismatch {
                left: n,
                right: entries.ncols(),
            });
        }
        for i in 0..n {
            if entries[(i, i)] != 1.0 {
                return Err(Error::InvalidConfig {
                    reason: format!(
                        "diagonal entry ({i},{i}) is {}, expected 1",
                        entries[(i, i)]
                    ),
                });
            }
            for j in 0..i {
                let (a, b) = (entries[(i, j)], entries[(j, i)]);
                if (a - b).abs() > 1e-12 || !a.is_finite() {
                    return Err(Error::InvalidConfig {
                        reason: format!("entries ({i},{j})={a} and ({j},{i})={b} break symmetry"),
                    });
                }
                if a.abs() > 1.0 + 1e-12 {
                    return Err(Error::InvalidConfig {
                        reason: format!("entry ({i},{j})={a} outside [-1, 1]"),
                    });
                }
            }
        }
        entries.mapv_inplace(|v| v.clamp(-1.0, 1.0));
        Ok(Self {
            entries,
            window_index,
        })
    }

    pub fn size(&self) -> usize {
        self.entries.nrows()
    }

    pub fn window_index(&self) -> usize {
        self.window_index
    }

    pub fn entries(&self) -> ArrayView2<'_, f64> {
        self.entries.view()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[(i, j)]
    }
}

/// Pearson correlation matrix over the window `[start, start + width)` of
/// the return series.
///
/// Sums use a fixed pairwise order, so the result is reproducible
/// independent of threading. Entries are clamped to `[-1, 1]` and the
/// diagonal is set to exactly 1.
pub fn correlation_matrix(
    returns: &ReturnSeries,
    start: usize,
    width: usize,
    window_index: usize,
) -> Result<CorrMatrix> {
    let r = returns.returns();
    let n = r.nrows();
    if start + width > r.ncols() || width < 2 {
        return Err(Error::WindowTooWide {
            width: start + width,
            observations: r.ncols(),
        });
    }

    // two-pass centering per instrument
    let mut centered = Array2::zeros((n, width));
    let mut vars = vec![0.0f64; n];
    for i in 0..n {
        let mu = pairwise_sum_by(width, |t| r[(i, start + t)]) / width as f64;
        for t in 0..width {
            centered[(i, t)] = r[(i, start + t)] - mu;
        }
        let var = pairwise_sum_by(width, |t| centered[(i, t)] * centered[(i, t)]) / width as f64;
        if var == 0.0 {
            return Err(Error::ZeroVariance {
                instrument: returns.instrument_ids()[i].clone(),
                window: window_index,
            });
        }
        vars[i] = var;
    }

    let mut w = Array2::zeros((n, n));
    for i in 0..n {
        w[(i, i)] = 1.0;
        for j in 0..i {
            let cov =
                pairwise_sum_by(width, |t| centered[(i, t)] * centered[(j, t)]) / width as f64;
            let c = (cov / (vars[i] * vars[j]).sqrt()).clamp(-1.0, 1.0);
            w[(i, j)] = c;
            w[(j, i)] = c;
        }
    }
    Ok(CorrMatrix {
        entries: w,
        window_index,
    })
}

/// Mean off-diagonal correlation (both orderings, which equals the mean over
/// unordered pairs by symmetry).
pub fn avg_correlation(w: &CorrMatrix) -> Result<f64> {
    let n = w.size();
    if n < 2 {
        return Err(Error::TooFewVertices {
            op: "avg_correlation",
            min: 2,
            n,
        });
    }
    let mut uppers = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in 0..i {
            uppers.push(w.get(i, j));
        }
    }
    Ok(2.0 * pairwise_sum(&uppers) / (n * (n - 1)) as f64)
}

/// Which norm `matrix_difference` applies to `W_a - W_b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MatrixNorm {
    /// Entrywise root-sum-of-squares (default).
    #[default]
    Frobenius,
    /// Largest singular value, via power iteration at 1e-9 relative
    /// tolerance.
    Spectral,
}

impl MatrixNorm {
    pub fn as_str(&self) -> &'static str {
        match self {
            MatrixNorm::Frobenius => "frobenius",
            MatrixNorm::Spectral => "spectral",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "frobenius" => Ok(MatrixNorm::Frobenius),
            "spectral" => Ok(MatrixNorm::Spectral),
            other => Err(Error::InvalidConfig {
                reason: format!("unknown norm '{other}' (expected frobenius|spectral)"),
            }),
        }
    }
}

/// Norm of the entrywise difference of two equally sized matrices.
pub fn matrix_difference(a: &CorrMatrix, b: &CorrMatrix, norm: MatrixNorm) -> Result<f64> {
    let n = a.size();
    if b.size() != n {
        return Err(Error::SizeMismatch {
            left: n,
            right: b.size(),
        });
    }
    let mut diff = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            diff[(i, j)] = a.get(i, j) - b.get(i, j);
        }
    }
    Ok(match norm {
        MatrixNorm::Frobenius => pairwise_sum_by(n * n, |k| {
            let v = diff[(k / n, k % n)];
            v * v
        })
        .sqrt(),
        MatrixNorm::Spectral => spectral_norm_symmetric(&diff),
    })
}

/// Largest singular value of a symmetric matrix by power iteration on the
/// squared operator, so paired `+/-` eigenvalues of equal magnitude cannot
/// stall convergence. Deterministic start vector from a fixed SplitMix64
/// stream; stops when the residual of the squared-operator eigenpair drops
/// below 1e-9 of the Rayleigh quotient.
fn spectral_norm_symmetric(m: &Array2<f64>) -> f64 {
    let n = m.nrows();
    if n == 0 {
        return 0.0;
    }
    let matvec = |v: &[f64], out: &mut Vec<f64>| {
        out.clear();
        for i in 0..n {
            out.push(pairwise_sum_by(n, |j| m[(i, j)] * v[j]));
        }
    };

    let mut sm = crate::rng::SplitMix64::new(0xD1FF_5EED_0000_0001);
    let mut v: Vec<f64> = (0..n)
        .map(|_| (sm.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64) - 0.5)
        .collect();
    let norm0 = pairwise_sum_by(n, |i| v[i] * v[i]).sqrt();
    for x in &mut v {
        *x /= norm0;
    }

    let mut av = Vec::with_capacity(n);
    let mut aav = Vec::with_capacity(n);
    let mut sigma = 0.0;
    for _ in 0..100_000 {
        matvec(&v, &mut av);
        let sigma_sq = pairwise_sum_by(n, |i| av[i] * av[i]); // v' A A v with ||v|| = 1
        if sigma_sq == 0.0 {
            return 0.0;
        }
        sigma = sigma_sq.sqrt();
        matvec(&av, &mut aav); // A^2 v
        let residual = pairwise_sum_by(n, |i| {
            let r = aav[i] - sigma_sq * v[i];
            r * r
        })
        .sqrt();
        if residual <= 1e-9 * sigma_sq {
            return sigma;
        }
        let nrm = pairwise_sum_by(n, |i| aav[i] * aav[i]).sqrt();
        if nrm == 0.0 {
            return sigma;
        }
        for (x, &y) in v.iter_mut().zip(&aav) {
            *x = y / nrm;
        }
    }
    sigma
}

const DUMP_MAGIC: &[u8; 4] = b"TNCM";

/// Writes one matrix in the documented binary layout: magic `TNCM`, `n` as
/// little-endian u32, window index as little-endian u32, then the strict
/// upper triangle (`i < j`, row-major) as little-endian f64.
pub fn write_matrix_dump<W: Write>(w: &CorrMatrix, mut out: W) -> Result<()> {
    out.write_all(DUMP_MAGIC)?;
    out.write_all(&(w.size() as u32).to_le_bytes())?;
    out.write_all(&(w.window_index() as u32).to_le_bytes())?;
    for i in 0..w.size() {
        for j in (i + 1)..w.size() {
            out.write_all(&w.get(i, j).to_le_bytes())?;
        }
    }
    Ok(())
}

/// Reads a matrix written by [`write_matrix_dump`].
pub fn read_matrix_dump<R: Read>(mut input: R) -> Result<CorrMatrix> {
    let mut magic = [0u8; 4];
    input.read_exact(&mut magic)?;
    if &magic != DUMP_MAGIC {
        return Err(Error::CorruptDump {
            reason: "bad magic".into(),
        });
    }
    let mut word = [0u8; 4];
    input.read_exact(&mut word)?;
    let n = u32::from_le_bytes(word) as usize;
    input.read_exact(&mut word)?;
    let window_index = u32::from_le_bytes(word) as usize;
    let mut entries = Array2::zeros((n, n));
    let mut buf = [0u8; 8];
    for i in 0..n {
        entries[(i, i)] = 1.0;
        for j in (i + 1)..n {
            input.read_exact(&mut buf).map_err(|_| Error::CorruptDump {
                reason: "truncated body".into(),
            })?;
            let v = f64::from_le_bytes(buf);
            entries[(i, j)] = v;
            entries[(j, i)] = v;
        }
    }
    CorrMatrix::new(entries, window_index)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::ReturnSeries;
    use ndarray::array;

    fn series(rows: Vec<Vec<f64>>) -> ReturnSeries {
        let n = rows.len();
        let t = rows[0].len();
        let flat: Vec<f64> = rows.into_iter().flatten().collect();
        ReturnSeries::from_raw(
            (0..n).map(|i| format!("S{i}")).collect(),
            1,
            Array2::from_shape_vec((n, t), flat).unwrap(),
        )
        .unwrap()
    }

    fn corr(entries: Array2<f64>) -> CorrMatrix {
        CorrMatrix::new(entries, 0).unwrap()
    }

    #[test]
    fn six_year_daily_panel_window_count() {
        let spec = WindowSpec::new(250, 5).unwrap();
        assert_eq!(window_starts(1511, spec).unwrap().len(), 253);
    }

    #[test]
    fn single_window_at_exact_width() {
        let spec = WindowSpec::new(10, 3).unwrap();
        assert_eq!(window_starts(10, spec).unwrap(), vec![0]);
    }

    #[test]
    fn window_starts_enumeration() {
        // oracle: enumerate all starts s with s % 3 == 0 and s + 5 <= 12
        let spec = WindowSpec::new(5, 3).unwrap();
        assert_eq!(window_starts(12, spec).unwrap(), vec![0, 3, 6]);
    }

    #[test]
    fn window_starts_rejects_short_series() {
        let spec = WindowSpec::new(5, 1).unwrap();
        assert!(matches!(
            window_starts(4, spec),
            Err(Error::WindowTooWide { .. })
        ));
    }

    #[test]
    fn window_starts_fit_inside_series() {
        for (t, w, s) in [(100, 7, 3), (57, 11, 5), (250, 250, 9)] {
            let spec = WindowSpec::new(w, s).unwrap();
            let starts = window_starts(t, spec).unwrap();
            assert!(starts.windows(2).all(|p| p[0] < p[1]));
            assert!(starts.last().unwrap() + w <= t);
            assert_eq!(starts.len(), (t - w) / s + 1);
        }
    }

    #[test]
    fn duplicated_series_is_perfectly_correlated() {
        let r = series(vec![
            vec![0.01, -0.02, 0.03, 0.005],
            vec![0.01, -0.02, 0.03, 0.005],
        ]);
        let w = correlation_matrix(&r, 0, 4, 0).unwrap();
        assert!((w.get(0, 1) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn negated_series_is_perfectly_anticorrelated() {
        let r = series(vec![
            vec![0.01, -0.02, 0.03, 0.005],
            vec![-0.01, 0.02, -0.03, -0.005],
        ]);
        let w = correlation_matrix(&r, 0, 4, 0).unwrap();
        assert!((w.get(0, 1) + 1.0).abs() < 1e-15);
    }

    #[test]
    fn three_by_four_matches_textbook_pearson() {
        // frozen from a high-precision evaluation of the standard formula
        let r = series(vec![
            vec![0.01, -0.02, 0.03, 0.005],
            vec![0.02, -0.01, 0.025, -0.015],
            vec![-0.005, 0.015, -0.02, 0.01],
        ]);
        let w = correlation_matrix(&r, 0, 4, 0).unwrap();
        let expected = [
            (0, 1, 0.754363333817907),
            (0, 2, -0.9226220933261874),
            (1, 2, -0.9295160030897801),
        ];
        for (i, j, v) in expected {
            assert!((w.get(i, j) - v).abs() < 1e-12, "({i},{j}) {}", w.get(i, j));
            assert_eq!(w.get(i, j), w.get(j, i));
        }
        for i in 0..3 {
            assert_eq!(w.get(i, i), 1.0);
        }
    }

    #[test]
    fn zero_variance_instrument_is_reported() {
        let r = series(vec![vec![0.01, 0.01, 0.01, 0.01], vec![0.0, 0.1, 0.2, 0.3]]);
        match correlation_matrix(&r, 0, 4, 7) {
            Err(Error::ZeroVariance { instrument, window }) => {
                assert_eq!(instrument, "S0");
                assert_eq!(window, 7);
            }
            other => panic!("expected ZeroVariance, got {other:?}"),
        }
    }

    #[test]
    fn correlation_invariant_under_positive_affine_transforms() {
        let base = series(vec![
            vec![0.013, -0.021, 0.035, 0.002, -0.007, 0.019],
            vec![0.002, 0.011, -0.009, 0.024, -0.013, 0.001],
            vec![-0.004, 0.009, 0.017, -0.022, 0.005, -0.001],
        ]);
        let transformed = series(vec![
            base.returns()
                .row(0)
                .iter()
                .map(|x| 3.0 * x + 0.5)
                .collect(),
            base.returns()
                .row(1)
                .iter()
                .map(|x| 0.2 * x - 1.0)
                .collect(),
            base.returns().row(2).iter().map(|x| 11.0 * x).collect(),
        ]);
        let wa = correlation_matrix(&base, 0, 6, 0).unwrap();
        let wb = correlation_matrix(&transformed, 0, 6, 0).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert!((wa.get(i, j) - wb.get(i, j)).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn avg_correlation_examples() {
        let w = corr(array![[1.0, 0.2, 0.4], [0.2, 1.0, 0.6], [0.4, 0.6, 1.0]]);
        assert!((avg_correlation(&w).unwrap() - 0.4).abs() < 1e-15);

        let ones = corr(array![[1.0, 1.0], [1.0, 1.0]]);
        assert_eq!(avg_correlation(&ones).unwrap(), 1.0);

        let eye = corr(Array2::eye(4));
        assert_eq!(avg_correlation(&eye).unwrap(), 0.0);
    }

    #[test]
    fn difference_of_equal_matrices_is_zero() {
        let w = corr(array![[1.0, 0.3], [0.3, 1.0]]);
        assert_eq!(
            matrix_difference(&w, &w, MatrixNorm::Frobenius).unwrap(),
            0.0
        );
        assert_eq!(
            matrix_difference(&w, &w, MatrixNorm::Spectral).unwrap(),
            0.0
        );
    }

    #[test]
    fn two_by_two_closed_form() {
        let a = corr(array![[1.0, 0.5], [0.5, 1.0]]);
        let b = corr(array![[1.0, 0.2], [0.2, 1.0]]);
        // difference ((0, 0.3), (0.3, 0)): frobenius sqrt(0.18), spectral 0.3
        let fro = matrix_difference(&a, &b, MatrixNorm::Frobenius).unwrap();
        let spec = matrix_difference(&a, &b, MatrixNorm::Spectral).unwrap();
        assert!((fro - 0.4242640687119285).abs() < 1e-12);
        assert!((spec - 0.3).abs() < 1e-9);
    }

    #[test]
    fn norms_are_homogeneous_in_the_difference() {
        // difference = c * I via two diagonal-perturbed... not possible for
        // CorrMatrix (unit diagonal); instead scale one off-diagonal pattern
        let mk = |c: f64| {
            corr(Array2::from_shape_fn((4, 4), |(i, j)| {
                if i == j {
                    1.0
                } else {
                    c * 0.1 * ((i + j) % 3) as f64 / 2.0
                }
            }))
        };
        let base = mk(0.0);
        let one = matrix_difference(&mk(1.0), &base, MatrixNorm::Frobenius).unwrap();
        let three = matrix_difference(&mk(3.0), &base, MatrixNorm::Frobenius).unwrap();
        assert!((three - 3.0 * one).abs() < 1e-12);
        let one_s = matrix_difference(&mk(1.0), &base, MatrixNorm::Spectral).unwrap();
        let three_s = matrix_difference(&mk(3.0), &base, MatrixNorm::Spectral).unwrap();
        assert!((three_s - 3.0 * one_s).abs() < 1e-8);
    }

    #[test]
    fn spectral_norm_matches_svd_oracle() {
        for seed in 0..25 {
            let n = 3 + (seed as usize * 3) % 28;
            let a = crate::netgraph::tests::random_corr(n, 9000 + seed);
            let b = crate::netgraph::tests::random_corr(n, 9100 + seed);
            let ours = matrix_difference(&a, &b, MatrixNorm::Spectral).unwrap();
            let diff = nalgebra::DMatrix::from_fn(n, n, |i, j| a.get(i, j) - b.get(i, j));
            let oracle = diff.svd(false, false).singular_values[0];
            assert!(
                (ours - oracle).abs() <= 1e-8 * oracle.max(1.0),
                "n={n} seed={seed}: {ours} vs svd {oracle}"
            );
        }
    }

    #[test]
    fn matrix_dump_round_trips() {
        let w = corr(array![
            [1.0, 0.25, -0.5],
            [0.25, 1.0, 0.75],
            [-0.5, 0.75, 1.0]
        ]);
        let mut buf = Vec::new();
        write_matrix_dump(&w, &mut buf).unwrap();
        assert_eq!(buf.len(), 4 + 4 + 4 + 3 * 8);
        let back = read_matrix_dump(buf.as_slice()).unwrap();
        assert_eq!(back, w);
    }

    #[test]
    fn matrix_dump_rejects_garbage() {
        assert!(matches!(
            read_matrix_dump(&b"NOPE\x00\x00\x00\x00\x00\x00\x00\x00"[..]),
            Err(Error::CorruptDump { .. })
        ));
    }
}
