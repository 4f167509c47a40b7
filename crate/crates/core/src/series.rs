//! Finite-range classification of nonnegative series.
//!
//! Everything here is a *finite-range heuristic*: we scan `a_1..a_n_max`,
//! fit a tail exponent over the last decade of indices, and look at how the
//! partial sums grow per decade. The verdict records the evidence so a
//! caller can always see why a class was assigned. The classifier never
//! claims both convergence and divergence; when neither test is decisive it
//! says so.

use serde::Serialize;
use std::fmt;
use std::sync::Arc;
use thiserror::Error;

/// Smallest scan range the classifier accepts.
pub const MIN_RANGE: u64 = 100;
/// Minimum number of positive terms in the fit window for a slope fit.
const FIT_MIN_POINTS: usize = 10;
/// Fraction of zero terms in the window above which the fit is abandoned.
const ZERO_DOMINANT_FRACTION: f64 = 0.5;
/// Largest log-residual tolerated for the power-law envelope (tail bound).
const RESIDUAL_CAP: f64 = 1.0;
/// Per-decade increment below this is treated as a stabilized partial sum.
const STABILIZED_INCREMENT: f64 = 1e-15;
/// Per-decade increment must exceed this floor to count as divergence.
const INCREMENT_FLOOR: f64 = 1e-9;
/// Later decade increment must be at least this fraction of the earlier one.
const INCREMENT_RATIO_MIN: f64 = 0.95;

#[derive(Debug, Error, PartialEq)]
pub enum SeriesError {
    #[error("term a_{0} is negative")]
    NegativeTerm(u64),
    #[error("term a_{0} is not finite")]
    NonFiniteTerm(u64),
    #[error("scan range n_max={0} is below the minimum {MIN_RANGE}")]
    InsufficientRange(u64),
    #[error("margin {0} outside (0, 0.5)")]
    InvalidMargin(f64),
    #[error("scan range n_max={requested} exceeds tabulated terms ({available} available)")]
    BeyondTable { requested: u64, available: u64 },
}

/// A nonnegative term sequence `n >= 1 -> a_n`, evaluated lazily.
#[derive(Clone)]
pub struct TermSequence {
    eval: Arc<dyn Fn(u64) -> f64 + Send + Sync>,
    label: String,
    max_index: Option<u64>,
}

impl TermSequence {
    /// Terms given by a closure; defined for every `n >= 1`.
    pub fn from_fn(
        label: impl Into<String>,
        f: impl Fn(u64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            eval: Arc::new(f),
            label: label.into(),
            max_index: None,
        }
    }

    /// Terms from a table; `table[0]` is `a_1`.
    pub fn from_table(label: impl Into<String>, table: Vec<f64>) -> Self {
        let max_index = Some(table.len() as u64);
        Self {
            eval: Arc::new(move |n| table[(n - 1) as usize]),
            label: label.into(),
            max_index,
        }
    }

    /// `a_n`. Panics if `n` is past the end of a tabulated sequence;
    /// the scanning entry points check `max_index` first.
    pub fn term(&self, n: u64) -> f64 {
        debug_assert!(n >= 1, "term index must be >= 1");
        (self.eval)(n)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Largest defined index for tabulated sequences, `None` for closures.
    pub fn max_index(&self) -> Option<u64> {
        self.max_index
    }

    fn check_range(&self, n_max: u64) -> Result<(), SeriesError> {
        match self.max_index {
            Some(available) if n_max > available => Err(SeriesError::BeyondTable {
                requested: n_max,
                available,
            }),
            _ => Ok(()),
        }
    }
}

impl fmt::Debug for TermSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TermSequence")
            .field("label", &self.label)
            .field("max_index", &self.max_index)
            .finish()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SeriesClass {
    Convergent,
    Divergent,
    Inconclusive,
}

impl fmt::Display for SeriesClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SeriesClass::Convergent => "convergent",
            SeriesClass::Divergent => "divergent",
            SeriesClass::Inconclusive => "inconclusive",
        };
        f.write_str(s)
    }
}

/// Outcome of [`classify`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesVerdict {
    pub class: SeriesClass,
    /// Compensated partial sum over `1..=n_scanned`.
    pub partial_sum: f64,
    pub n_scanned: u64,
    /// Least-squares slope of `log a_n` vs `log n` over the last decade,
    /// negated so that `a_n ~ n^{-s}` reports `s`. Absent when too few
    /// positive terms fall in the window.
    pub tail_exponent: Option<f64>,
    /// Human-readable record of which rule decided the class and why.
    pub evidence: String,
}

/// Neumaier-compensated summation: tracks the low-order bits lost by
/// naive accumulation, including when a term exceeds the running sum.
#[derive(Debug, Default, Clone, Copy)]
struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Compensated sum of `a_1 + ... + a_n_max`, scanned in ascending order.
///
/// Errors on the first negative or non-finite term encountered.
pub fn partial_sum(terms: &TermSequence, n_max: u64) -> Result<f64, SeriesError> {
    terms.check_range(n_max)?;
    let mut acc = CompensatedSum::default();
    for n in 1..=n_max {
        let a = terms.term(n);
        validate_term(a, n)?;
        acc.add(a);
    }
    Ok(acc.value())
}

fn validate_term(a: f64, n: u64) -> Result<(), SeriesError> {
    if !a.is_finite() {
        return Err(SeriesError::NonFiniteTerm(n));
    }
    if a < 0.0 {
        return Err(SeriesError::NegativeTerm(n));
    }
    Ok(())
}

struct TailFit {
    exponent: f64,
    max_residual: f64,
    intercept: f64,
}

/// Classify `sum a_n` from a finite scan.
///
/// Requires `n_max >= 100` and `0 < margin < 0.5`. The verdict is:
///
/// * `Convergent` when the fitted tail exponent `s` exceeds `1 + margin`
///   and the fitted power law genuinely envelopes the window (bounded
///   log-residuals), so the integral comparison bounds the tail; or when
///   the window is zero-dominated and the partial sum has stabilized.
/// * `Divergent` when `s < 1 - margin`, or when the per-decade partial-sum
///   increments stay bounded below (the harmonic-style signature).
/// * `Inconclusive` otherwise.
pub fn classify(
    terms: &TermSequence,
    n_max: u64,
    margin: f64,
) -> Result<SeriesVerdict, SeriesError> {
    if n_max < MIN_RANGE {
        return Err(SeriesError::InsufficientRange(n_max));
    }
    if !(margin > 0.0 && margin < 0.5) {
        return Err(SeriesError::InvalidMargin(margin));
    }
    terms.check_range(n_max)?;

    let window_lo = (n_max / 10).max(1);
    let boundary_0 = (n_max / 100).max(1);

    let mut acc = CompensatedSum::default();
    let mut sum_at_b0 = 0.0;
    let mut sum_at_b1 = 0.0;
    let mut window_points: Vec<(f64, f64)> = Vec::new();
    let mut window_zeros = 0u64;

    for n in 1..=n_max {
        let a = terms.term(n);
        validate_term(a, n)?;
        acc.add(a);
        if n >= window_lo {
            if a > 0.0 {
                window_points.push(((n as f64).ln(), a.ln()));
            } else {
                window_zeros += 1;
            }
        }
        if n == boundary_0 {
            sum_at_b0 = acc.value();
        }
        if n == window_lo {
            sum_at_b1 = acc.value();
        }
    }

    let total = acc.value();
    let d1 = sum_at_b1 - sum_at_b0;
    let d2 = total - sum_at_b1;
    let window_len = n_max - window_lo + 1;
    let zero_frac = window_zeros as f64 / window_len as f64;
    let stabilized = d2.abs() < STABILIZED_INCREMENT;
    let grows_per_decade = d2 > INCREMENT_FLOOR && d2 >= INCREMENT_RATIO_MIN * d1;

    let fit = fit_tail(&window_points);
    let tail_exponent = fit.as_ref().map(|f| f.exponent);

    let (class, evidence) = decide(
        &fit,
        margin,
        zero_frac,
        stabilized,
        grows_per_decade,
        d1,
        d2,
        window_lo,
        n_max,
    );

    Ok(SeriesVerdict {
        class,
        partial_sum: total,
        n_scanned: n_max,
        tail_exponent,
        evidence,
    })
}

fn fit_tail(points: &[(f64, f64)]) -> Option<TailFit> {
    if points.len() < FIT_MIN_POINTS {
        return None;
    }
    let n = points.len() as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (x, y) in points {
        sxx += (x - mean_x) * (x - mean_x);
        sxy += (x - mean_x) * (y - mean_y);
    }
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let max_residual = points
        .iter()
        .map(|(x, y)| (y - (mean_y + slope * (x - mean_x))).abs())
        .fold(0.0, f64::max);
    Some(TailFit {
        exponent: -slope,
        max_residual,
        intercept: mean_y - slope * mean_x,
    })
}

#[allow(clippy::too_many_arguments)]
fn decide(
    fit: &Option<TailFit>,
    margin: f64,
    zero_frac: f64,
    stabilized: bool,
    grows_per_decade: bool,
    d1: f64,
    d2: f64,
    window_lo: u64,
    n_max: u64,
) -> (SeriesClass, String) {
    let heur = "finite-range heuristic";
    if zero_frac > ZERO_DOMINANT_FRACTION {
        return if stabilized {
            (
                SeriesClass::Convergent,
                format!(
                    "window [{window_lo},{n_max}] is {:.0}% zero terms and the last-decade \
                     increment {d2:.3e} is below {STABILIZED_INCREMENT:.0e} (partial sum \
                     stabilized); {heur}",
                    zero_frac * 100.0
                ),
            )
        } else {
            (
                SeriesClass::Inconclusive,
                format!(
                    "window [{window_lo},{n_max}] is {:.0}% zero terms with last-decade \
                     increment {d2:.3e}; no reliable tail fit; {heur}",
                    zero_frac * 100.0
                ),
            )
        };
    }

    // Faster-than-power-law decay (geometric and beyond) defeats the log-log
    // fit; a numerically flat partial sum is decisive on its own.
    if stabilized {
        return (
            SeriesClass::Convergent,
            format!(
                "last-decade increment {d2:.3e} is below {STABILIZED_INCREMENT:.0e} \
                 (partial sum stabilized over [{window_lo},{n_max}]); {heur}"
            ),
        );
    }

    if let Some(f) = fit {
        let s = f.exponent;
        if s > 1.0 + margin && f.max_residual <= RESIDUAL_CAP {
            // Envelope a_n <= C n^{-s} with C inflated by the worst residual;
            // the integral comparison then bounds the tail beyond n_max.
            let ln_c = f.intercept + f.max_residual;
            let tail_bound = (ln_c + (1.0 - s) * (n_max as f64).ln()).exp() / (s - 1.0);
            return (
                SeriesClass::Convergent,
                format!(
                    "tail fit s={s:.4} > {:.3} over [{window_lo},{n_max}] with max \
                     log-residual {:.3}; envelope tail bound {tail_bound:.3e} beyond \
                     n={n_max}; {heur}",
                    1.0 + margin,
                    f.max_residual
                ),
            );
        }
        if s < 1.0 - margin {
            return (
                SeriesClass::Divergent,
                format!(
                    "tail fit s={s:.4} < {:.3} over [{window_lo},{n_max}]; {heur}",
                    1.0 - margin
                ),
            );
        }
        if grows_per_decade {
            return (
                SeriesClass::Divergent,
                format!(
                    "per-decade partial-sum increments {d1:.4e} -> {d2:.4e} stay bounded \
                     below (ratio >= {INCREMENT_RATIO_MIN}, floor {INCREMENT_FLOOR:.0e}); \
                     tail fit s={s:.4}; {heur}"
                ),
            );
        }
        return (
            SeriesClass::Inconclusive,
            format!(
                "tail fit s={s:.4} inside margin band [{:.3},{:.3}] and per-decade \
                 increments decay ({d1:.4e} -> {d2:.4e}); {heur}",
                1.0 - margin,
                1.0 + margin
            ),
        );
    }

    // Too few positive terms for a fit but not zero-dominated (only possible
    // for very short windows).
    if grows_per_decade {
        (
            SeriesClass::Divergent,
            format!("no tail fit; per-decade increments {d1:.4e} -> {d2:.4e} persist; {heur}"),
        )
    } else {
        (
            SeriesClass::Inconclusive,
            format!("no tail fit and no decisive partial-sum signature; {heur}"),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p_series(s: f64) -> TermSequence {
        TermSequence::from_fn(format!("n^-{s}"), move |n| (n as f64).powf(-s))
    }

    #[test]
    fn compensated_sum_of_tenths() {
        let terms = TermSequence::from_fn("0.1", |_| 0.1);
        let sum = partial_sum(&terms, 10_000_000).unwrap();
        let rel = (sum - 1.0e6).abs() / 1.0e6;
        assert!(rel < 1e-12, "rel error {rel:.3e}");
    }

    #[test]
    fn geometric_partial_sum_is_exact() {
        let terms = TermSequence::from_fn("2^-n", |n| 0.5f64.powi(n as i32));
        let sum = partial_sum(&terms, 60).unwrap();
        let expected = 1.0 - 0.5f64.powi(60);
        let rel = (sum - expected).abs() / expected;
        assert!(rel < 1e-14, "rel error {rel:.3e}");
    }

    #[test]
    fn geometric_decay_converges_via_stabilized_sums() {
        // Not a power law: the log-log fit has a huge residual, so the
        // stabilized-increment route has to carry this one.
        let terms = TermSequence::from_fn("2^-n", |n| 0.5f64.powi(n.min(2000) as i32));
        let v = classify(&terms, 600, 0.1).unwrap();
        assert_eq!(v.class, SeriesClass::Convergent, "{}", v.evidence);
        assert!(v.evidence.contains("stabilized"), "{}", v.evidence);
        assert!((v.partial_sum - 1.0).abs() < 1e-15);
    }

    // Independent oracle for sum 1/n^2 over 1..N: the full limit pi^2/6
    // minus the Euler-Maclaurin tail 1/N - 1/(2N^2) + 1/(6N^3) + O(N^-5).
    fn basel_partial_oracle(n: f64) -> f64 {
        std::f64::consts::PI.powi(2) / 6.0 - 1.0 / n + 1.0 / (2.0 * n * n)
            - 1.0 / (6.0 * n * n * n)
    }

    #[test]
    fn basel_partial_sum_matches_oracle() {
        let sum = partial_sum(&p_series(2.0), 1_000_000).unwrap();
        let oracle = basel_partial_oracle(1.0e6);
        assert!(
            (sum - oracle).abs() < 1e-12,
            "sum {sum:.15} vs oracle {oracle:.15}"
        );
        // Box from the coarser first-order tail estimate.
        let coarse = std::f64::consts::PI.powi(2) / 6.0 - 1e-6;
        assert!((sum - coarse).abs() < 1e-6);
    }

    #[test]
    fn all_zero_series_converges() {
        let terms = TermSequence::from_fn("0", |_| 0.0);
        let v = classify(&terms, 1000, 0.1).unwrap();
        assert_eq!(v.class, SeriesClass::Convergent);
        assert_eq!(v.partial_sum, 0.0);
        assert_eq!(v.tail_exponent, None);
    }

    #[test]
    fn p_series_calibration_suite() {
        for s in [1.3, 1.5, 2.0, 3.0] {
            let v = classify(&p_series(s), 100_000, 0.1).unwrap();
            assert_eq!(v.class, SeriesClass::Convergent, "s={s}: {}", v.evidence);
            let fitted = v.tail_exponent.unwrap();
            assert!((fitted - s).abs() < 1e-6, "s={s} fitted {fitted}");
        }
        for s in [0.5, 0.8, 1.0] {
            let v = classify(&p_series(s), 100_000, 0.1).unwrap();
            assert_eq!(v.class, SeriesClass::Divergent, "s={s}: {}", v.evidence);
        }
    }

    #[test]
    fn harmonic_diverges_by_increments() {
        let v = classify(&p_series(1.0), 100_000, 0.1).unwrap();
        assert_eq!(v.class, SeriesClass::Divergent);
        assert!(v.evidence.contains("per-decade"), "{}", v.evidence);
        let fitted = v.tail_exponent.unwrap();
        assert!((fitted - 1.0).abs() < 1e-6);
    }

    #[test]
    fn near_critical_exponent_is_inconclusive() {
        let v = classify(&p_series(1.05), 100_000, 0.1).unwrap();
        assert_eq!(v.class, SeriesClass::Inconclusive, "{}", v.evidence);
    }

    #[test]
    fn rejects_short_range_and_bad_margin() {
        assert_eq!(
            classify(&p_series(2.0), 99, 0.1),
            Err(SeriesError::InsufficientRange(99))
        );
        assert_eq!(
            classify(&p_series(2.0), 1000, 0.0),
            Err(SeriesError::InvalidMargin(0.0))
        );
        assert_eq!(
            classify(&p_series(2.0), 1000, 0.5),
            Err(SeriesError::InvalidMargin(0.5))
        );
    }

    #[test]
    fn reports_offending_index() {
        let terms = TermSequence::from_fn("bad", |n| if n == 37 { -1.0 } else { 1.0 });
        assert_eq!(partial_sum(&terms, 100), Err(SeriesError::NegativeTerm(37)));
        let terms = TermSequence::from_fn("nan", |n| if n == 41 { f64::NAN } else { 1.0 });
        assert_eq!(
            partial_sum(&terms, 100),
            Err(SeriesError::NonFiniteTerm(41))
        );
    }

    #[test]
    fn table_bounds_are_checked() {
        let terms = TermSequence::from_table("t", vec![0.5; 200]);
        assert!(classify(&terms, 200, 0.1).is_ok());
        assert_eq!(
            classify(&terms, 201, 0.1),
            Err(SeriesError::BeyondTable {
                requested: 201,
                available: 200
            })
        );
    }

    #[test]
    fn classification_is_deterministic() {
        let a = classify(&p_series(1.3), 10_000, 0.1).unwrap();
        let b = classify(&p_series(1.3), 10_000, 0.1).unwrap();
        assert_eq!(a, b);
    }

    proptest! {
        #[test]
        fn partial_sums_monotone_in_range(table in proptest::collection::vec(0.0f64..1.0, 150..260)) {
            let len = table.len() as u64;
            let terms = TermSequence::from_table("t", table);
            let s1 = partial_sum(&terms, len - 50).unwrap();
            let s2 = partial_sum(&terms, len).unwrap();
            prop_assert!(s2 >= s1);
        }

        #[test]
        fn classify_total_matches_partial_sum(table in proptest::collection::vec(0.0f64..1.0, 150..260)) {
            let len = table.len() as u64;
            let terms = TermSequence::from_table("t", table);
            let v = classify(&terms, len, 0.1).unwrap();
            let s = partial_sum(&terms, len).unwrap();
            prop_assert!((v.partial_sum - s).abs() <= 1e-12 * s.max(1.0));
        }
    }
}
