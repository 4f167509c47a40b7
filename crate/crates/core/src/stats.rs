//! Order-statistics helpers for the Monte Carlo harness: one-sample
//! Kolmogorov–Smirnov distances and deterministic quantiles.

/// One-sample KS statistic `sup_t |F_N(t) − G(t)|` of `values` against a
/// continuous CDF `g`. Sorts a copy; O(N log N).
pub fn ks_statistic(values: &[f64], g: impl Fn(f64) -> f64) -> f64 {
    assert!(!values.is_empty(), "KS statistic of an empty sample");
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("non-NaN samples"));
    let n = sorted.len() as f64;
    let mut d = 0.0f64;
    for (i, &v) in sorted.iter().enumerate() {
        let gv = g(v);
        // Empirical CDF jumps from i/N to (i+1)/N at v.
        let below = gv - i as f64 / n;
        let above = (i + 1) as f64 / n - gv;
        d = d.max(below).max(above);
    }
    d
}

/// KS statistic against the Uniform(0,1) CDF.
pub fn ks_uniform(values: &[f64]) -> f64 {
    ks_statistic(values, |t| t.clamp(0.0, 1.0))
}

/// Linear-interpolation quantile (the common "type 7" rule) of an already
/// sorted slice; `p ∈ [0, 1]`.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of an empty sample");
    assert!((0.0..=1.0).contains(&p), "p must lie in [0,1], got {p}");
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let frac = h - lo as f64;
    if frac == 0.0 || lo + 1 == sorted.len() {
        sorted[lo]
    } else {
        sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
    }
}

/// Sorts a copy and returns the requested quantiles in order.
pub fn quantiles(values: &[f64], ps: &[f64]) -> Vec<f64> {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("non-NaN samples"));
    ps.iter().map(|&p| quantile_sorted(&sorted, p)).collect()
}
