//! Small numeric helpers shared across modules.

/// Pairwise (cascade) summation with a fixed recursion order.
///
/// Used everywhere a sum feeds a reproducibility contract: the order is a
/// pure function of the slice length, so results do not depend on thread
/// count or iteration scheduling.
pub(crate) fn pairwise_sum(xs: &[f64]) -> f64 {
    const BASE: usize = 32;
    if xs.len() <= BASE {
        let mut acc = 0.0;
        for &x in xs {
            acc += x;
        }
        return acc;
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Pairwise summation over a mapped index range, avoiding a temporary
/// buffer for entrywise reductions.
pub(crate) fn pairwise_sum_by<F: Fn(usize) -> f64 + Copy>(len: usize, f: F) -> f64 {
    fn go<F: Fn(usize) -> f64 + Copy>(lo: usize, hi: usize, f: F) -> f64 {
        const BASE: usize = 32;
        if hi - lo <= BASE {
            let mut acc = 0.0;
            for i in lo..hi {
                acc += f(i);
            }
            return acc;
        }
        let mid = lo + (hi - lo) / 2;
        go(lo, mid, f) + go(mid, hi, f)
    }
    go(0, len, f)
}
