//! Almost-sure convergence laboratory.
//!
//! The analytic route turns "X_n -> mu a.s." into a family of
//! infinitely-often problems: for each ε in a descending grid, classify the
//! events `{X_n outside [mu−ε, mu+ε]}` through [`crate::lemmas::evaluate`].
//! If every ε yields io-zero, the report is `ASConvergent`. The grid is a
//! finitization — "for all small ε" cannot be enumerated — so the report
//! records the grid it actually used.
//!
//! The empirical route simulates paths and watches tail suprema
//! `sup_{n ≥ N} |X_n − mu|` shrink across geometric checkpoints, plus a
//! direct frequency-vs-formula comparison at selected `n`. Neither observes
//! "infinitely often"; they are finite-sample corroboration, kept separate
//! from the analytic verdict.

use crate::clayton::{ClaytonError, ClaytonParams, ClaytonPath, ScaledMaxEvent};
use crate::lemmas::{self, Conclusion, LemmaError, LemmaOptions, LemmaVerdict, PairSeq, ProbSeq};
use crate::stats;
use rayon::prelude::*;
use serde::Serialize;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum LabError {
    #[error("epsilon grid is empty")]
    EmptyEpsilonGrid,
    #[error("epsilon grid must be strictly positive and strictly descending: {0}")]
    BadEpsilonGrid(String),
    #[error("experiment needs n_max >= 100, got {0}")]
    ShortHorizon(u64),
    #[error("experiment needs at least one path")]
    NoPaths,
    #[error("checkpoints must be strictly increasing within [1, n_max]: {0}")]
    BadCheckpoints(String),
    #[error("n list must be strictly increasing within [1, n_max]: {0}")]
    BadNList(String),
    #[error("the monotone route requires a model that asserts decreasing events")]
    MonotonicityNotAsserted,
    #[error(transparent)]
    Lemma(#[from] LemmaError),
    #[error(transparent)]
    Clayton(#[from] ClaytonError),
}

/// A convergence question: limit constant, ε-grid, scan horizon, and the
/// Monte Carlo budget.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitExperiment {
    mu: f64,
    epsilons: Vec<f64>,
    n_max: u64,
    paths: u64,
    seed: u64,
}

impl LimitExperiment {
    pub fn new(
        mu: f64,
        epsilons: Vec<f64>,
        n_max: u64,
        paths: u64,
        seed: u64,
    ) -> Result<Self, LabError> {
        if epsilons.is_empty() {
            return Err(LabError::EmptyEpsilonGrid);
        }
        let descending = epsilons.windows(2).all(|w| w[0] > w[1]);
        if !descending || epsilons.iter().any(|&e| !(e.is_finite() && e > 0.0)) {
            return Err(LabError::BadEpsilonGrid(format!("{epsilons:?}")));
        }
        if n_max < 100 {
            return Err(LabError::ShortHorizon(n_max));
        }
        if paths == 0 {
            return Err(LabError::NoPaths);
        }
        Ok(Self {
            mu,
            epsilons,
            n_max,
            paths,
            seed,
        })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn epsilons(&self) -> &[f64] {
        &self.epsilons
    }

    pub fn n_max(&self) -> u64 {
        self.n_max
    }

    pub fn paths(&self) -> u64 {
        self.paths
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

/// A model pluggable into the analytic route: closed forms for the
/// deviation-event probabilities at a given ε.
pub trait EventModel {
    /// `p(n) = P(X_n outside [mu−ε, mu+ε])`.
    fn prob_seq(&self, eps: f64) -> ProbSeq;
    /// `q(n) = P(both deviation events at n and n+1)`, when available.
    fn pair_seq(&self, eps: f64) -> Option<PairSeq>;
    /// Whether the deviation events are decreasing in n (for every ε).
    fn monotone_decreasing(&self) -> bool;
    /// Whether the underlying variables are independent.
    fn independent(&self) -> bool {
        false
    }
    fn mu(&self) -> f64;
    fn describe(&self) -> String;
}

/// The rescaled Clayton maxima `X_n = M_n^{n^α}` with limit 1. Deviations
/// are one-sided — `M_n^{n^α} ≤ 1` always — so the two-sided event reduces
/// to `{M_n^{n^α} ≤ 1 − ε}`, and both p and q have exact closed forms.
#[derive(Debug, Clone)]
pub struct ClaytonScaledMax {
    params: ClaytonParams,
    alpha: f64,
}

impl ClaytonScaledMax {
    pub fn new(params: ClaytonParams, alpha: f64) -> Result<Self, LabError> {
        if !(alpha.is_finite() && (0.0..1.0).contains(&alpha)) {
            return Err(ClaytonError::InvalidAlpha(alpha).into());
        }
        Ok(Self { params, alpha })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn params(&self) -> ClaytonParams {
        self.params
    }

    fn event(&self, eps: f64) -> Option<ScaledMaxEvent> {
        // eps >= 1 swallows the whole range of M_n^{n^α}: the deviation
        // event is empty and p ≡ 0.
        ScaledMaxEvent::new(1.0 - eps, self.alpha).ok()
    }
}

impl EventModel for ClaytonScaledMax {
    fn prob_seq(&self, eps: f64) -> ProbSeq {
        let label = format!("clayton scaled-max p(n), eps={eps}");
        let seq = match self.event(eps) {
            Some(ev) => {
                let params = self.params;
                ProbSeq::from_fn(label, move |n| params.scaled_max_cdf(n, &ev))
            }
            None => ProbSeq::from_fn(label, |_| 0.0),
        };
        // p(n) = psi(n·g(n)) with n·g(n) ~ θ(−ln x)·n^{1−α} -> ∞, so the
        // limit is analytic fact, not a numeric observation.
        seq.certify_tends_to_zero()
    }

    fn pair_seq(&self, eps: f64) -> Option<PairSeq> {
        let label = format!("clayton scaled-max q(n), eps={eps}");
        Some(match self.event(eps) {
            Some(ev) => {
                let params = self.params;
                PairSeq::from_fn(label, move |n| params.pair_joint_scaled(n, &ev))
            }
            None => PairSeq::from_fn(label, |_| 0.0),
        })
    }

    fn monotone_decreasing(&self) -> bool {
        // Only the unscaled maxima (α = 0) have a fixed threshold and hence
        // genuinely shrinking events.
        self.alpha == 0.0
    }

    fn mu(&self) -> f64 {
        1.0
    }

    fn describe(&self) -> String {
        format!(
            "rescaled Clayton maxima M_n^(n^alpha), theta={}, alpha={}; deviations are \
             one-sided (M_n^(n^alpha) <= 1), so events reduce to the lower tail",
            self.params.theta(),
            self.alpha
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Overall {
    ASConvergent,
    NotEstablished,
}

impl fmt::Display for Overall {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Overall::ASConvergent => "as-convergent",
            Overall::NotEstablished => "not-established",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ASReport {
    pub mu: f64,
    pub per_epsilon: Vec<(f64, LemmaVerdict)>,
    pub overall: Overall,
    pub empirical: Option<TailSupTable>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailSupRow {
    pub checkpoint: u64,
    pub median: f64,
    pub p90: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailSupTable {
    pub alpha: f64,
    pub paths: u64,
    pub n_max: u64,
    pub seed: u64,
    pub rows: Vec<TailSupRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalVsExactRow {
    pub n: u64,
    pub empirical: f64,
    pub exact: f64,
    pub std_error: f64,
    pub z: f64,
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalVsExactTable {
    pub x: f64,
    pub alpha: f64,
    pub paths: u64,
    pub seed: u64,
    pub rows: Vec<EmpiricalVsExactRow>,
}

fn finish_report(
    mu: f64,
    per_epsilon: Vec<(f64, LemmaVerdict)>,
    mut notes: Vec<String>,
) -> ASReport {
    let all_zero = per_epsilon
        .iter()
        .all(|(_, v)| v.conclusion == Conclusion::IoZero);
    let overall = if all_zero {
        Overall::ASConvergent
    } else {
        Overall::NotEstablished
    };
    let smallest = per_epsilon.last().map(|(e, _)| *e).unwrap_or(f64::NAN);
    notes.push(format!(
        "epsilon grid of {} values down to {smallest}; the \"for all small eps\" \
         quantifier is finitized to this grid",
        per_epsilon.len()
    ));
    ASReport {
        mu,
        per_epsilon,
        overall,
        empirical: None,
        notes,
    }
}

/// The analytic route: evaluate the infinitely-often rules for every ε in
/// the grid; `ASConvergent` iff all verdicts are io-zero.
pub fn as_convergence_report(
    model: &dyn EventModel,
    exp: &LimitExperiment,
) -> Result<ASReport, LabError> {
    let opts = LemmaOptions {
        independent: model.independent(),
        monotone_decreasing: model.monotone_decreasing(),
        n_max: exp.n_max(),
        ..LemmaOptions::default()
    };
    let mut per_epsilon = Vec::with_capacity(exp.epsilons().len());
    for &eps in exp.epsilons() {
        let p = model.prob_seq(eps);
        let q = model.pair_seq(eps);
        let verdict = lemmas::evaluate(&p, q.as_ref(), &opts)?;
        per_epsilon.push((eps, verdict));
    }
    Ok(finish_report(
        model.mu(),
        per_epsilon,
        vec![model.describe()],
    ))
}

/// The shortcut for decreasing event families: only `p(n) -> 0` is needed,
/// no summability at all. Errors unless the model asserts monotonicity.
pub fn monotone_convergence_report(
    model: &dyn EventModel,
    exp: &LimitExperiment,
) -> Result<ASReport, LabError> {
    if !model.monotone_decreasing() {
        return Err(LabError::MonotonicityNotAsserted);
    }
    let opts = LemmaOptions {
        monotone_decreasing: true,
        n_max: exp.n_max(),
        ..LemmaOptions::default()
    };
    let mut per_epsilon = Vec::with_capacity(exp.epsilons().len());
    for &eps in exp.epsilons() {
        let p = model.prob_seq(eps);
        let verdict = lemmas::evaluate(&p, None, &opts)?;
        per_epsilon.push((eps, verdict));
    }
    let notes = vec![
        model.describe(),
        "monotone route: decreasing events need only p(n) -> 0".into(),
    ];
    Ok(finish_report(model.mu(), per_epsilon, notes))
}

fn validate_increasing(list: &[u64], n_max: u64) -> bool {
    !list.is_empty()
        && list.windows(2).all(|w| w[0] < w[1])
        && list[0] >= 1
        && *list.last().unwrap() <= n_max
}

/// Simulate Clayton paths and tabulate, for each checkpoint `N`, the median
/// and 90th percentile over paths of `sup_{N ≤ n ≤ n_max} |M_n^{n^α} − 1|`.
/// Deterministic in (seed, parameters): path `i` uses RNG stream `i`, and
/// the aggregation does not depend on scheduling order.
pub fn empirical_tail_sup(
    params: &ClaytonParams,
    alpha: f64,
    exp: &LimitExperiment,
    checkpoints: &[u64],
) -> Result<TailSupTable, LabError> {
    if !(alpha.is_finite() && (0.0..1.0).contains(&alpha)) {
        return Err(ClaytonError::InvalidAlpha(alpha).into());
    }
    if !validate_increasing(checkpoints, exp.n_max()) {
        return Err(LabError::BadCheckpoints(format!("{checkpoints:?}")));
    }

    let k = checkpoints.len();
    let n_max = exp.n_max();
    let seed = exp.seed();
    let per_path: Vec<Vec<f64>> = (0..exp.paths())
        .into_par_iter()
        .map(|stream| {
            let mut path = ClaytonPath::with_stream(params, seed, stream);
            let mut seg_max = vec![0.0f64; k];
            let mut seg = 0usize;
            for n in 1..=n_max {
                path.step();
                if n < checkpoints[0] {
                    continue;
                }
                while seg + 1 < k && n >= checkpoints[seg + 1] {
                    seg += 1;
                }
                let dev = path
                    .scaled_deviation(alpha)
                    .expect("stepped at least once");
                if dev > seg_max[seg] {
                    seg_max[seg] = dev;
                }
            }
            // Suffix-combine the segment maxima into tail suprema.
            for j in (0..k.saturating_sub(1)).rev() {
                seg_max[j] = seg_max[j].max(seg_max[j + 1]);
            }
            seg_max
        })
        .collect();

    let rows = checkpoints
        .iter()
        .enumerate()
        .map(|(j, &checkpoint)| {
            let column: Vec<f64> = per_path.iter().map(|sups| sups[j]).collect();
            let qs = stats::quantiles(&column, &[0.5, 0.9]);
            TailSupRow {
                checkpoint,
                median: qs[0],
                p90: qs[1],
            }
        })
        .collect();

    Ok(TailSupTable {
        alpha,
        paths: exp.paths(),
        n_max,
        seed,
        rows,
    })
}

/// For each `n` in `n_list`, compare the simulated frequency of
/// `{M_n^{n^α} ≤ x}` with the closed form, with the binomial standard
/// error computed from the exact probability; flags `|z| > 4`.
pub fn empirical_vs_exact(
    params: &ClaytonParams,
    ev: &ScaledMaxEvent,
    n_list: &[u64],
    exp: &LimitExperiment,
) -> Result<EmpiricalVsExactTable, LabError> {
    if !validate_increasing(n_list, exp.n_max()) {
        return Err(LabError::BadNList(format!("{n_list:?}")));
    }

    let k = n_list.len();
    let last_n = *n_list.last().unwrap();
    let thresholds: Vec<f64> = n_list.iter().map(|&n| ev.threshold(n)).collect();
    let seed = exp.seed();

    let counts = (0..exp.paths())
        .into_par_iter()
        .fold(
            || vec![0u64; k],
            |mut acc, stream| {
                let mut path = ClaytonPath::with_stream(params, seed, stream);
                let mut idx = 0usize;
                for n in 1..=last_n {
                    let (_, m) = path.step();
                    if n == n_list[idx] {
                        if m <= thresholds[idx] {
                            acc[idx] += 1;
                        }
                        idx += 1;
                        if idx == k {
                            break;
                        }
                    }
                }
                acc
            },
        )
        .reduce(
            || vec![0u64; k],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                a
            },
        );

    let paths = exp.paths();
    let rows = n_list
        .iter()
        .zip(&counts)
        .map(|(&n, &count)| {
            let empirical = count as f64 / paths as f64;
            let exact = params.scaled_max_cdf(n, ev);
            let std_error = (exact * (1.0 - exact) / paths as f64).sqrt();
            let z = if std_error > 0.0 {
                (empirical - exact) / std_error
            } else if empirical == exact {
                0.0
            } else {
                f64::INFINITY
            };
            EmpiricalVsExactRow {
                n,
                empirical,
                exact,
                std_error,
                z,
                flagged: z.abs() > 4.0,
            }
        })
        .collect();

    Ok(EmpiricalVsExactTable {
        x: ev.x(),
        alpha: ev.alpha(),
        paths,
        seed,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lemmas::Rule;

    struct FnModel {
        p: fn(u64) -> f64,
        monotone: bool,
        independent: bool,
        certified: bool,
    }

    impl EventModel for FnModel {
        fn prob_seq(&self, _eps: f64) -> ProbSeq {
            let seq = ProbSeq::from_fn("test model", self.p);
            if self.certified {
                seq.certify_tends_to_zero()
            } else {
                seq
            }
        }
        fn pair_seq(&self, _eps: f64) -> Option<PairSeq> {
            None
        }
        fn monotone_decreasing(&self) -> bool {
            self.monotone
        }
        fn independent(&self) -> bool {
            self.independent
        }
        fn mu(&self) -> f64 {
            0.0
        }
        fn describe(&self) -> String {
            "test model".into()
        }
    }

    fn exp_small() -> LimitExperiment {
        LimitExperiment::new(0.0, vec![0.5, 0.1], 100_000, 1, 0).unwrap()
    }

    #[test]
    fn experiment_validation() {
        assert_eq!(
            LimitExperiment::new(1.0, vec![], 1000, 1, 0).unwrap_err(),
            LabError::EmptyEpsilonGrid
        );
        assert!(matches!(
            LimitExperiment::new(1.0, vec![0.1, 0.5], 1000, 1, 0).unwrap_err(),
            LabError::BadEpsilonGrid(_)
        ));
        assert!(matches!(
            LimitExperiment::new(1.0, vec![0.5, -0.1], 1000, 1, 0).unwrap_err(),
            LabError::BadEpsilonGrid(_)
        ));
        assert_eq!(
            LimitExperiment::new(1.0, vec![0.5], 99, 1, 0).unwrap_err(),
            LabError::ShortHorizon(99)
        );
        assert_eq!(
            LimitExperiment::new(1.0, vec![0.5], 1000, 0, 0).unwrap_err(),
            LabError::NoPaths
        );
    }

    #[test]
    fn clayton_model_is_as_convergent_by_pair_difference() {
        let model =
            ClaytonScaledMax::new(ClaytonParams::default(), 0.5).unwrap();
        let exp =
            LimitExperiment::new(1.0, vec![0.5, 0.1], 100_000, 1, 0).unwrap();
        let report = as_convergence_report(&model, &exp).unwrap();
        assert_eq!(report.overall, Overall::ASConvergent);
        assert_eq!(report.mu, 1.0);
        for (eps, verdict) in &report.per_epsilon {
            assert_eq!(
                verdict.fired_by,
                Some(Rule::PairDifference),
                "eps={eps}: {:?}",
                verdict.notes
            );
        }
        assert!(report.notes.iter().any(|n| n.contains("one-sided")));
    }

    #[test]
    fn trivially_summable_model_fires_bc1_for_every_eps() {
        let model = FnModel {
            p: |n| (n as f64).powi(-2),
            monotone: false,
            independent: false,
            certified: false,
        };
        let report = as_convergence_report(&model, &exp_small()).unwrap();
        assert_eq!(report.overall, Overall::ASConvergent);
        assert!(report
            .per_epsilon
            .iter()
            .all(|(_, v)| v.fired_by == Some(Rule::Bc1)));
    }

    #[test]
    fn harmonic_without_structure_is_not_established() {
        let model = FnModel {
            p: |n| 1.0 / n as f64,
            monotone: false,
            independent: false,
            certified: false,
        };
        let report = as_convergence_report(&model, &exp_small()).unwrap();
        assert_eq!(report.overall, Overall::NotEstablished);
        assert!(report
            .per_epsilon
            .iter()
            .all(|(_, v)| v.conclusion == Conclusion::Unknown));
    }

    #[test]
    fn monotone_route_demands_the_assertion() {
        let model = FnModel {
            p: |n| 1.0 / n as f64,
            monotone: false,
            independent: false,
            certified: false,
        };
        assert_eq!(
            monotone_convergence_report(&model, &exp_small()).unwrap_err(),
            LabError::MonotonicityNotAsserted
        );
    }

    #[test]
    fn monotone_route_beats_a_divergent_sum() {
        let model = FnModel {
            p: |n| 1.0 / n as f64,
            monotone: true,
            independent: false,
            certified: false,
        };
        let report = monotone_convergence_report(&model, &exp_small()).unwrap();
        assert_eq!(report.overall, Overall::ASConvergent);
        assert!(report
            .per_epsilon
            .iter()
            .all(|(_, v)| v.fired_by == Some(Rule::DecreasingEvents)));
    }

    #[test]
    fn monotone_route_still_needs_vanishing_probabilities() {
        let model = FnModel {
            p: |_| 0.3,
            monotone: true,
            independent: false,
            certified: false,
        };
        let report = monotone_convergence_report(&model, &exp_small()).unwrap();
        assert_eq!(report.overall, Overall::NotEstablished);
    }

    #[test]
    fn unscaled_clayton_goes_through_the_monotone_route() {
        let model = ClaytonScaledMax::new(ClaytonParams::default(), 0.0).unwrap();
        let exp = LimitExperiment::new(1.0, vec![0.5], 10_000, 1, 0).unwrap();
        let report = monotone_convergence_report(&model, &exp).unwrap();
        assert_eq!(report.overall, Overall::ASConvergent);
        assert_eq!(
            report.per_epsilon[0].1.fired_by,
            Some(Rule::DecreasingEvents)
        );
    }

    #[test]
    fn oversized_epsilon_gives_empty_events_and_bc1() {
        let model = ClaytonScaledMax::new(ClaytonParams::default(), 0.5).unwrap();
        let exp = LimitExperiment::new(1.0, vec![1.5], 1_000, 1, 0).unwrap();
        let report = as_convergence_report(&model, &exp).unwrap();
        assert_eq!(report.overall, Overall::ASConvergent);
        assert_eq!(report.per_epsilon[0].1.fired_by, Some(Rule::Bc1));
    }

    #[test]
    fn tail_sup_is_deterministic_and_ordered() {
        let params = ClaytonParams::default();
        let exp = LimitExperiment::new(1.0, vec![0.5], 500, 16, 9).unwrap();
        let a = empirical_tail_sup(&params, 0.5, &exp, &[10, 100]).unwrap();
        let b = empirical_tail_sup(&params, 0.5, &exp, &[10, 100]).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.rows.len(), 2);
        // Tail suprema over nested ranges are ordered pathwise, hence so are
        // their medians.
        assert!(a.rows[0].median >= a.rows[1].median);
        assert!(a.rows.iter().all(|r| r.median > 0.0 && r.p90 >= r.median));
    }

    #[test]
    fn tail_sup_rejects_bad_checkpoints() {
        let params = ClaytonParams::default();
        let exp = LimitExperiment::new(1.0, vec![0.5], 500, 2, 0).unwrap();
        for bad in [vec![], vec![10, 10], vec![100, 10], vec![10, 501]] {
            assert!(matches!(
                empirical_tail_sup(&params, 0.5, &exp, &bad).unwrap_err(),
                LabError::BadCheckpoints(_)
            ));
        }
        assert!(matches!(
            empirical_tail_sup(&params, 1.0, &exp, &[10]).unwrap_err(),
            LabError::Clayton(ClaytonError::InvalidAlpha(_))
        ));
    }

    #[test]
    fn empirical_matches_exact_at_moderate_budget() {
        let params = ClaytonParams::default();
        let ev = ScaledMaxEvent::new(0.5, 0.0).unwrap();
        let exp = LimitExperiment::new(1.0, vec![0.5], 1_000, 4_000, 1).unwrap();
        let table = empirical_vs_exact(&params, &ev, &[50, 200], &exp).unwrap();
        assert_eq!(table.rows.len(), 2);
        let first = &table.rows[0];
        assert_eq!(first.exact, params.max_cdf(50, 0.5).unwrap());
        for row in &table.rows {
            assert!(!row.flagged, "n={}: z={}", row.n, row.z);
            assert!(row.std_error > 0.0);
        }
    }

    #[test]
    fn empirical_vs_exact_rejects_bad_n_list() {
        let params = ClaytonParams::default();
        let ev = ScaledMaxEvent::new(0.5, 0.0).unwrap();
        let exp = LimitExperiment::new(1.0, vec![0.5], 1_000, 2, 0).unwrap();
        for bad in [vec![], vec![0, 10], vec![10, 10], vec![10, 1_001]] {
            assert!(matches!(
                empirical_vs_exact(&params, &ev, &bad, &exp).unwrap_err(),
                LabError::BadNList(_)
            ));
        }
    }
}
