//! Infinitely-often verdicts for event sequences.
//!
//! The inputs are the marginal probabilities `p(n) = P(A_n)` and, optionally,
//! the consecutive-pair probabilities `q(n) = P(A_n ∩ A_{n+1})`. From these
//! we form four nonnegative series and hand them to the series classifier:
//!
//! * **event-sum** — terms `p(n)`; convergence gives the direct
//!   Borel–Cantelli conclusion, divergence feeds the independence rule and
//!   the pair rules.
//! * **pair-sum** — terms `q(n)`.
//! * **exit-sum** — terms `p(n) - q(n) = P(A_n ∩ A_{n+1}^c)`: the chance the
//!   event holds at `n` but has exited by `n + 1`.
//! * **entry-sum** — terms `p(n+1) - q(n) = P(A_n^c ∩ A_{n+1})`: the chance
//!   the event is freshly entered at `n + 1`.
//!
//! Exit-sum and entry-sum always converge or diverge together in exact
//! arithmetic (their partial sums differ by a telescoping, bounded amount),
//! but the finite-range classifier can certify one and not the other, which
//! is why both routes exist.
//!
//! [`evaluate`] applies the rules in a fixed priority and reports which one
//! fired. Verdicts are one-sided: `Unknown` never contradicts a definite
//! conclusion, it only means no rule applied at this range.

use crate::series::{self, SeriesError, SeriesVerdict, TermSequence};
use serde::Serialize;
use std::fmt;
use std::sync::Arc;
use thiserror::Error;

/// Numeric tolerance for "P(A_n) -> 0": the last-decade maximum of `p` must
/// sit below this and must not exceed the previous decade's maximum.
const TO_ZERO_TOL: f64 = 1e-3;

/// Default absolute tolerance for the Fréchet bounds on `q`.
pub const DEFAULT_FRECHET_TOL: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum LemmaError {
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error("p({0}) is outside [0, 1]")]
    OutOfRangeProbability(u64),
    #[error(
        "q({n}) = {q} violates the Fréchet bounds [{lower}, {upper}] \
         for p({n}) = {p_n}, p({m}) = {p_next}",
        m = n + 1
    )]
    FrechetViolation {
        n: u64,
        q: f64,
        p_n: f64,
        p_next: f64,
        lower: f64,
        upper: f64,
    },
    #[error("evaluation needs terms up to n={needed} but the table ends at {available}")]
    InsufficientData { needed: u64, available: u64 },
}

/// Marginal event probabilities `n >= 1 -> P(A_n)`.
#[derive(Clone)]
pub struct ProbSeq {
    eval: Arc<dyn Fn(u64) -> f64 + Send + Sync>,
    label: String,
    max_index: Option<u64>,
    certified_to_zero: bool,
}

impl ProbSeq {
    pub fn from_fn(
        label: impl Into<String>,
        f: impl Fn(u64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            eval: Arc::new(f),
            label: label.into(),
            max_index: None,
            certified_to_zero: false,
        }
    }

    /// Probabilities from a table; `table[0]` is `p(1)`.
    pub fn from_table(label: impl Into<String>, table: Vec<f64>) -> Self {
        let max_index = Some(table.len() as u64);
        Self {
            eval: Arc::new(move |n| table[(n - 1) as usize]),
            label: label.into(),
            max_index,
            certified_to_zero: false,
        }
    }

    /// Caller certifies analytically that `p(n) -> 0`. Without this the
    /// evaluator falls back to a numeric (heuristic) check.
    pub fn certify_tends_to_zero(mut self) -> Self {
        self.certified_to_zero = true;
        self
    }

    pub fn p(&self, n: u64) -> f64 {
        (self.eval)(n)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn max_index(&self) -> Option<u64> {
        self.max_index
    }

    pub fn is_certified_to_zero(&self) -> bool {
        self.certified_to_zero
    }
}

impl fmt::Debug for ProbSeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProbSeq")
            .field("label", &self.label)
            .field("max_index", &self.max_index)
            .field("certified_to_zero", &self.certified_to_zero)
            .finish()
    }
}

/// Consecutive-pair probabilities `n >= 1 -> P(A_n ∩ A_{n+1})`.
#[derive(Clone)]
pub struct PairSeq {
    eval: Arc<dyn Fn(u64) -> f64 + Send + Sync>,
    label: String,
    max_index: Option<u64>,
}

impl PairSeq {
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

    pub fn from_table(label: impl Into<String>, table: Vec<f64>) -> Self {
        let max_index = Some(table.len() as u64);
        Self {
            eval: Arc::new(move |n| table[(n - 1) as usize]),
            label: label.into(),
            max_index,
        }
    }

    pub fn q(&self, n: u64) -> f64 {
        (self.eval)(n)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn max_index(&self) -> Option<u64> {
        self.max_index
    }
}

impl fmt::Debug for PairSeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PairSeq")
            .field("label", &self.label)
            .field("max_index", &self.max_index)
            .finish()
    }
}

/// Fréchet bounds for `q(n)` given the two marginals it couples.
pub fn frechet_bounds(p_n: f64, p_next: f64) -> (f64, f64) {
    ((p_n + p_next - 1.0).max(0.0), p_n.min(p_next))
}

/// The four series the evaluator can classify.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConditionId {
    /// Terms `p(n)`; one classification answers both the "converges" and
    /// the "diverges" questions about `sum P(A_n)`.
    EventSum,
    /// Terms `q(n)`.
    PairSum,
    /// Terms `p(n) - q(n)`.
    ExitSum,
    /// Terms `p(n+1) - q(n)`.
    EntrySum,
}

impl fmt::Display for ConditionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ConditionId::EventSum => "event-sum",
            ConditionId::PairSum => "pair-sum",
            ConditionId::ExitSum => "exit-sum",
            ConditionId::EntrySum => "entry-sum",
        };
        f.write_str(s)
    }
}

/// Which rule produced the conclusion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rule {
    /// `sum P(A_n) < ∞` forces finitely many occurrences.
    Bc1,
    /// Independent events with `sum P(A_n) = ∞` occur infinitely often.
    Bc2,
    /// `P(A_n) -> 0` with summable exit probabilities.
    BarndorffNielsen,
    /// `P(A_n) -> 0` with summable entry probabilities.
    BalakrishnanStepanov,
    /// Divergent event and pair sums, yet summable exits: the events die
    /// out even though their total mass diverges.
    PairDifference,
    /// Same regime certified through the shifted (entry) differences.
    PairDifferenceShifted,
    /// Decreasing events with probabilities tending to zero.
    DecreasingEvents,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Rule::Bc1 => "bc1",
            Rule::Bc2 => "bc2",
            Rule::BarndorffNielsen => "barndorff-nielsen",
            Rule::BalakrishnanStepanov => "balakrishnan-stepanov",
            Rule::PairDifference => "pair-difference",
            Rule::PairDifferenceShifted => "pair-difference-shifted",
            Rule::DecreasingEvents => "decreasing-events",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Conclusion {
    /// Almost surely only finitely many events occur.
    IoZero,
    /// Almost surely infinitely many events occur.
    IoOne,
    /// No rule applied at this scan range.
    Unknown,
}

impl fmt::Display for Conclusion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Conclusion::IoZero => "io-zero",
            Conclusion::IoOne => "io-one",
            Conclusion::Unknown => "unknown",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionReport {
    pub id: ConditionId,
    pub verdict: SeriesVerdict,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LemmaVerdict {
    pub conclusion: Conclusion,
    pub fired_by: Option<Rule>,
    /// Every series classification that was computed, regardless of which
    /// rule fired.
    pub condition_reports: Vec<ConditionReport>,
    /// Free-form record: how `p -> 0` was established, skipped branches, etc.
    pub notes: Vec<String>,
}

impl LemmaVerdict {
    pub fn report(&self, id: ConditionId) -> Option<&SeriesVerdict> {
        self.condition_reports
            .iter()
            .find(|r| r.id == id)
            .map(|r| &r.verdict)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LemmaOptions {
    pub independent: bool,
    pub monotone_decreasing: bool,
    pub n_max: u64,
    pub margin: f64,
    pub frechet_tol: f64,
}

impl Default for LemmaOptions {
    fn default() -> Self {
        Self {
            independent: false,
            monotone_decreasing: false,
            n_max: 100_000,
            margin: 0.1,
            frechet_tol: DEFAULT_FRECHET_TOL,
        }
    }
}

impl LemmaOptions {
    pub fn with_range(n_max: u64) -> Self {
        Self {
            n_max,
            ..Self::default()
        }
    }
}

/// Terms `p(n)` as a classifiable series.
pub fn event_terms(p: &ProbSeq) -> TermSequence {
    let p = p.clone();
    let label = format!("sum p(n) [{}]", p.label());
    TermSequence::from_fn(label, move |n| p.p(n))
}

/// Terms `q(n)` as a classifiable series.
pub fn pair_terms(q: &PairSeq) -> TermSequence {
    let q = q.clone();
    let label = format!("sum q(n) [{}]", q.label());
    TermSequence::from_fn(label, move |n| q.q(n))
}

/// Terms `p(n) - q(n)`, the exit probabilities.
///
/// Values within the Fréchet tolerance below zero are rounding debris from
/// the subtraction and are clamped to zero; run [`validate_frechet`] first
/// to reject genuine violations.
pub fn exit_terms(p: &ProbSeq, q: &PairSeq) -> TermSequence {
    let (p, q) = (p.clone(), q.clone());
    let label = format!("sum p(n)-q(n) [{}]", p.label());
    TermSequence::from_fn(label, move |n| (p.p(n) - q.q(n)).max(0.0))
}

/// Terms `p(n+1) - q(n)`, the entry probabilities.
pub fn entry_terms(p: &ProbSeq, q: &PairSeq) -> TermSequence {
    let (p, q) = (p.clone(), q.clone());
    let label = format!("sum p(n+1)-q(n) [{}]", p.label());
    TermSequence::from_fn(label, move |n| (p.p(n + 1) - q.q(n)).max(0.0))
}

/// Check `p(n) ∈ [0, 1]` for `n = 1..=up_to`.
pub fn validate_probs(p: &ProbSeq, up_to: u64) -> Result<(), LemmaError> {
    if let Some(available) = p.max_index() {
        if up_to > available {
            return Err(LemmaError::InsufficientData {
                needed: up_to,
                available,
            });
        }
    }
    for n in 1..=up_to {
        let v = p.p(n);
        if !v.is_finite() || !(0.0..=1.0).contains(&v) {
            return Err(LemmaError::OutOfRangeProbability(n));
        }
    }
    Ok(())
}

/// Check the Fréchet bounds `max(0, p(n)+p(n+1)-1) <= q(n) <= min(p(n), p(n+1))`
/// to absolute tolerance `tol`, for `n = 1..=up_to`.
pub fn validate_frechet(p: &ProbSeq, q: &PairSeq, up_to: u64, tol: f64) -> Result<(), LemmaError> {
    if let Some(available) = q.max_index() {
        if up_to > available {
            return Err(LemmaError::InsufficientData {
                needed: up_to,
                available,
            });
        }
    }
    for n in 1..=up_to {
        let (p_n, p_next, q_n) = (p.p(n), p.p(n + 1), q.q(n));
        let (lower, upper) = frechet_bounds(p_n, p_next);
        if !q_n.is_finite() || q_n < lower - tol || q_n > upper + tol {
            return Err(LemmaError::FrechetViolation {
                n,
                q: q_n,
                p_n,
                p_next,
                lower,
                upper,
            });
        }
    }
    Ok(())
}

/// Outcome of the numeric / certified "p -> 0" determination.
struct ToZero {
    accepted: bool,
    note: String,
}

fn tends_to_zero(p: &ProbSeq, n_max: u64) -> ToZero {
    if p.is_certified_to_zero() {
        return ToZero {
            accepted: true,
            note: "p(n)->0 accepted: caller certificate".into(),
        };
    }
    let b0 = (n_max / 100).max(1);
    let b1 = (n_max / 10).max(1);
    let max_over = |lo: u64, hi: u64| (lo..=hi).map(|n| p.p(n)).fold(0.0f64, f64::max);
    let prev = max_over(b0 + 1, b1);
    let last = max_over(b1 + 1, n_max);
    let accepted = last < TO_ZERO_TOL && last <= prev;
    let note = if accepted {
        format!(
            "p(n)->0 accepted numerically: max over ({b1},{n_max}] = {last:.3e} < \
             {TO_ZERO_TOL:.0e} and non-increasing across decades (heuristic)"
        )
    } else {
        format!(
            "p(n)->0 not established numerically: max over ({b1},{n_max}] = {last:.3e}, \
             previous decade {prev:.3e} (heuristic); rules that need it were skipped"
        )
    };
    ToZero { accepted, note }
}

/// Apply the infinitely-often rules in priority order.
///
/// Priority: direct summability (`Bc1`); decreasing events; the
/// pair-difference rules in the divergent regime (`PairDifference`, then its
/// shifted form); plain summable exits (`BarndorffNielsen`); plain summable
/// entries (`BalakrishnanStepanov`); independence (`Bc2`). The
/// pair-difference rules are consulted before the plain exit/entry rules so
/// that a verdict in the divergent regime is attributed to the hypothesis
/// set that actually distinguishes it; the conclusion is the same either
/// way.
///
/// When `q` is supplied, `p` must be defined up to `n_max + 1`.
pub fn evaluate(
    p: &ProbSeq,
    q: Option<&PairSeq>,
    opts: &LemmaOptions,
) -> Result<LemmaVerdict, LemmaError> {
    use crate::series::SeriesClass::{Convergent, Divergent};

    let p_needed = if q.is_some() {
        opts.n_max + 1
    } else {
        opts.n_max
    };
    validate_probs(p, p_needed)?;
    if let Some(q) = q {
        validate_frechet(p, q, opts.n_max, opts.frechet_tol)?;
    }

    let mut notes = Vec::new();
    let mut reports = Vec::new();

    let event = series::classify(&event_terms(p), opts.n_max, opts.margin)?;
    reports.push(ConditionReport {
        id: ConditionId::EventSum,
        verdict: event.clone(),
    });

    let to_zero = tends_to_zero(p, opts.n_max);
    notes.push(to_zero.note.clone());
    let p_to_zero = to_zero.accepted;

    let pair_reports = match q {
        Some(q) => {
            let pair = series::classify(&pair_terms(q), opts.n_max, opts.margin)?;
            let exit = series::classify(&exit_terms(p, q), opts.n_max, opts.margin)?;
            let entry = series::classify(&entry_terms(p, q), opts.n_max, opts.margin)?;
            reports.push(ConditionReport {
                id: ConditionId::PairSum,
                verdict: pair.clone(),
            });
            reports.push(ConditionReport {
                id: ConditionId::ExitSum,
                verdict: exit.clone(),
            });
            reports.push(ConditionReport {
                id: ConditionId::EntrySum,
                verdict: entry.clone(),
            });
            Some((pair, exit, entry))
        }
        None => {
            notes.push(
                "pair probabilities not supplied; exit/entry/pair-difference rules skipped"
                    .into(),
            );
            None
        }
    };

    let (conclusion, fired_by) = {
        let pair_div = pair_reports
            .as_ref()
            .is_some_and(|(pair, _, _)| pair.class == Divergent);
        let exit_conv = pair_reports
            .as_ref()
            .is_some_and(|(_, exit, _)| exit.class == Convergent);
        let entry_conv = pair_reports
            .as_ref()
            .is_some_and(|(_, _, entry)| entry.class == Convergent);
        let event_div = event.class == Divergent;

        if event.class == Convergent {
            (Conclusion::IoZero, Some(Rule::Bc1))
        } else if opts.monotone_decreasing && p_to_zero {
            (Conclusion::IoZero, Some(Rule::DecreasingEvents))
        } else if p_to_zero && event_div && pair_div && exit_conv {
            (Conclusion::IoZero, Some(Rule::PairDifference))
        } else if p_to_zero && event_div && pair_div && entry_conv {
            (Conclusion::IoZero, Some(Rule::PairDifferenceShifted))
        } else if p_to_zero && exit_conv {
            (Conclusion::IoZero, Some(Rule::BarndorffNielsen))
        } else if p_to_zero && entry_conv {
            (Conclusion::IoZero, Some(Rule::BalakrishnanStepanov))
        } else if opts.independent && event_div {
            (Conclusion::IoOne, Some(Rule::Bc2))
        } else {
            (Conclusion::Unknown, None)
        }
    };

    Ok(LemmaVerdict {
        conclusion,
        fired_by,
        condition_reports: reports,
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::SeriesClass;
    use proptest::prelude::*;

    fn p_inv(label: &str, s: f64) -> ProbSeq {
        ProbSeq::from_fn(label, move |n| (n as f64).powf(-s).min(1.0))
    }

    /// p(n) = (2^k)^{-s} on the dyadic block n in [2^k, 2^{k+1}).
    fn dyadic_staircase(s: f64) -> ProbSeq {
        ProbSeq::from_fn(format!("dyadic staircase s={s}"), move |n| {
            let k = n.ilog2();
            (2f64.powi(k as i32)).powf(-s)
        })
    }

    #[test]
    fn bc1_fires_on_summable_events() {
        let p = p_inv("n^-2", 2.0);
        let v = evaluate(&p, None, &LemmaOptions::with_range(10_000)).unwrap();
        assert_eq!(v.conclusion, Conclusion::IoZero);
        assert_eq!(v.fired_by, Some(Rule::Bc1));
        assert_eq!(
            v.report(ConditionId::EventSum).unwrap().class,
            SeriesClass::Convergent
        );
    }

    #[test]
    fn bc2_needs_the_independence_flag() {
        let p = p_inv("1/n", 1.0);
        let mut opts = LemmaOptions::with_range(10_000);
        let v = evaluate(&p, None, &opts).unwrap();
        assert_eq!(v.conclusion, Conclusion::Unknown);
        assert_eq!(v.fired_by, None);
        assert!(v.notes.iter().any(|n| n.contains("not supplied")));

        opts.independent = true;
        let v = evaluate(&p, None, &opts).unwrap();
        assert_eq!(v.conclusion, Conclusion::IoOne);
        assert_eq!(v.fired_by, Some(Rule::Bc2));
    }

    #[test]
    fn bc1_outranks_pair_rules() {
        // Independent summable events: both Bc1 and the exit route conclude
        // io-zero; the report must name Bc1.
        let p = p_inv("n^-2", 2.0);
        let pc = p.clone();
        let q = PairSeq::from_fn("independent pairs", move |n| {
            pc.p(n) * pc.p(n + 1)
        });
        let v = evaluate(&p, Some(&q), &LemmaOptions::with_range(10_000)).unwrap();
        assert_eq!(v.fired_by, Some(Rule::Bc1));
        assert_eq!(v.condition_reports.len(), 4);
    }

    #[test]
    fn decreasing_events_rule() {
        let p = p_inv("1/n", 1.0);
        let mut opts = LemmaOptions::with_range(100_000);
        opts.monotone_decreasing = true;
        let v = evaluate(&p, None, &opts).unwrap();
        assert_eq!(v.conclusion, Conclusion::IoZero);
        assert_eq!(v.fired_by, Some(Rule::DecreasingEvents));
    }

    #[test]
    fn pair_difference_fires_in_divergent_regime() {
        // Nested-tail coupling q(n) = p(n+1) with harmonic marginals:
        // event and pair sums diverge, exits ~ 1/n^2 converge.
        let p = p_inv("1/n", 1.0);
        let q = PairSeq::from_fn("q=p(n+1)", |n| 1.0 / (n as f64 + 1.0));
        let v = evaluate(&p, Some(&q), &LemmaOptions::with_range(100_000)).unwrap();
        assert_eq!(v.conclusion, Conclusion::IoZero);
        assert_eq!(v.fired_by, Some(Rule::PairDifference), "notes: {:?}", v.notes);
        assert_eq!(
            v.report(ConditionId::EventSum).unwrap().class,
            SeriesClass::Divergent
        );
        assert_eq!(
            v.report(ConditionId::PairSum).unwrap().class,
            SeriesClass::Divergent
        );
        assert_eq!(
            v.report(ConditionId::ExitSum).unwrap().class,
            SeriesClass::Convergent
        );
    }

    #[test]
    fn shifted_pair_difference_when_exits_are_lumpy() {
        // Staircase marginals concentrate the exit mass on block boundaries,
        // so the exit series cannot be classified, while the entry series is
        // identically zero under q(n) = p(n+1).
        let p = dyadic_staircase(1.0);
        let pc = p.clone();
        let q = PairSeq::from_fn("q=p(n+1)", move |n| pc.p(n + 1));
        let v = evaluate(&p, Some(&q), &LemmaOptions::with_range(100_000)).unwrap();
        assert_eq!(v.conclusion, Conclusion::IoZero);
        assert_eq!(v.fired_by, Some(Rule::PairDifferenceShifted));
        assert_eq!(
            v.report(ConditionId::ExitSum).unwrap().class,
            SeriesClass::Inconclusive
        );
        assert_eq!(
            v.report(ConditionId::EntrySum).unwrap().class,
            SeriesClass::Convergent
        );
    }

    #[test]
    fn barndorff_nielsen_outside_divergent_regime() {
        // Slightly-supercritical marginals: the event sum is inconclusive at
        // this range, so the pair-difference rules cannot fire, but the exit
        // series is cleanly summable.
        let p = p_inv("n^-1.05", 1.05);
        let q = PairSeq::from_fn("q=p(n+1)", |n| ((n + 1) as f64).powf(-1.05));
        let v = evaluate(&p, Some(&q), &LemmaOptions::with_range(100_000)).unwrap();
        assert_eq!(v.conclusion, Conclusion::IoZero);
        assert_eq!(v.fired_by, Some(Rule::BarndorffNielsen));
        assert_eq!(
            v.report(ConditionId::EventSum).unwrap().class,
            SeriesClass::Inconclusive
        );
    }

    #[test]
    fn entry_route_fires_where_lumpy_exits_block_the_exit_route() {
        // With q(n) = p(n+1) on a staircase, the entry terms vanish while
        // the exit mass piles up on block boundaries, so only the entry
        // route can certify the verdict.
        let p = dyadic_staircase(1.05);
        let pc = p.clone();
        let q = PairSeq::from_fn("q=p(n+1)", move |n| pc.p(n + 1));
        let v = evaluate(&p, Some(&q), &LemmaOptions::with_range(100_000)).unwrap();
        assert_eq!(v.fired_by, Some(Rule::BalakrishnanStepanov), "{:?}", v.notes);
        assert_eq!(
            v.report(ConditionId::ExitSum).unwrap().class,
            SeriesClass::Inconclusive
        );
    }

    #[test]
    fn entry_terms_are_exit_terms_of_the_advanced_sequence() {
        // The two routes are the same series read one index apart:
        // p(n+1) - q(n) is exactly the exit term of n -> p(n+1) against the
        // same q. (Only the term identity holds in general: reusing q with
        // a shifted p usually breaks the Fréchet bounds, so the verdicts
        // are probed on separate inputs above.)
        for p in [dyadic_staircase(1.05), p_inv("n^-1.05", 1.05)] {
            let pc = p.clone();
            let q = PairSeq::from_fn("q=p(n+1)", move |n| pc.p(n + 1));
            let pc = p.clone();
            let advanced = ProbSeq::from_fn("advanced", move |n| pc.p(n + 1));
            let entry = entry_terms(&p, &q);
            let exit_advanced = exit_terms(&advanced, &q);
            for n in (1..200).chain([999, 16_383, 16_384, 65_535]) {
                assert_eq!(entry.term(n), exit_advanced.term(n), "n={n}");
            }
        }
    }

    #[test]
    fn probability_range_is_enforced() {
        let p = ProbSeq::from_fn("bad", |n| if n == 52 { 1.5 } else { 0.1 });
        let err = evaluate(&p, None, &LemmaOptions::with_range(1000)).unwrap_err();
        assert_eq!(err, LemmaError::OutOfRangeProbability(52));
    }

    #[test]
    fn short_tables_are_rejected() {
        let p = ProbSeq::from_table("t", vec![0.1; 500]);
        let q = PairSeq::from_table("t", vec![0.05; 500]);
        // q present: p must reach n_max + 1 = 501.
        let err = evaluate(&p, Some(&q), &LemmaOptions::with_range(500)).unwrap_err();
        assert_eq!(
            err,
            LemmaError::InsufficientData {
                needed: 501,
                available: 500
            }
        );
    }

    #[test]
    fn frechet_violation_is_pinpointed() {
        let p = ProbSeq::from_fn("0.3", |_| 0.3);
        let q = PairSeq::from_fn("bad", |n| if n == 77 { 0.3 + 1e-6 } else { 0.2 });
        let err = evaluate(&p, Some(&q), &LemmaOptions::with_range(1000)).unwrap_err();
        match err {
            LemmaError::FrechetViolation { n, .. } => assert_eq!(n, 77),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn nested_events_have_zero_exit_terms() {
        // A_n ⊆ A_{n+1}: q attains the upper bound p(n).
        let p = ProbSeq::from_fn("const", |_| 0.5);
        let q = PairSeq::from_fn("nested", |_| 0.5);
        validate_frechet(&p, &q, 1000, DEFAULT_FRECHET_TOL).unwrap();
        let terms = exit_terms(&p, &q);
        assert!((1..=1000).all(|n| terms.term(n) == 0.0));
    }

    proptest! {
        /// Random valid (p, q) tables pass validation, and the defining
        /// identity (p - q) + q - p = 0 holds to 1e-15 absolutely.
        #[test]
        fn frechet_sandwich_and_identity(
            ps in proptest::collection::vec(0.0f64..=1.0, 151..200),
            us in proptest::collection::vec(0.0f64..=1.0, 150..=150),
        ) {
            let n_pairs = ps.len() - 1;
            let qs: Vec<f64> = (0..n_pairs.min(us.len()))
                .map(|i| {
                    let (lo, hi) = frechet_bounds(ps[i], ps[i + 1]);
                    lo + us[i] * (hi - lo)
                })
                .collect();
            let count = qs.len() as u64;
            let p = ProbSeq::from_table("p", ps.clone());
            let q = PairSeq::from_table("q", qs.clone());
            validate_frechet(&p, &q, count, DEFAULT_FRECHET_TOL).unwrap();

            let exits = exit_terms(&p, &q);
            for n in 1..=count {
                let residual = exits.term(n) + q.q(n) - p.p(n);
                prop_assert!(residual.abs() <= 1e-15, "n={n} residual={residual:.3e}");
            }
        }

        /// An io-zero verdict is stable under flipping the independence flag.
        #[test]
        fn independence_flag_never_flips_io_zero(s in 1.2f64..3.0) {
            let p = ProbSeq::from_fn("p", move |n| (n as f64).powf(-s).min(1.0));
            let mut opts = LemmaOptions::with_range(2000);
            // Classifier needs n_max >= 100; 2000 keeps proptest fast.
            let base = evaluate(&p, None, &opts).unwrap();
            opts.independent = true;
            let flagged = evaluate(&p, None, &opts).unwrap();
            if base.conclusion == Conclusion::IoZero {
                prop_assert_eq!(flagged.conclusion, Conclusion::IoZero);
                prop_assert_eq!(flagged.fired_by, base.fired_by);
            }
        }
    }
}
