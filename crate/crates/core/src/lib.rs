//! Decide whether a sequence of events happens infinitely often, and turn
//! that decision into almost-sure convergence statements for dependent
//! maxima.
//!
//! The crate is organized in four layers:
//!
//! * [`series`] — a finite-range classifier for nonnegative series: compensated
//!   partial sums, a tail-exponent fit, and a three-way
//!   convergent/divergent/inconclusive verdict with recorded evidence.
//! * [`lemmas`] — the event layer. Given the marginal probabilities
//!   `p(n) = P(A_n)` and optionally the consecutive-pair probabilities
//!   `q(n) = P(A_n ∩ A_{n+1})`, it applies a fixed priority of
//!   infinitely-often rules (direct Borel–Cantelli, decreasing events,
//!   pair-difference rules, independence) and reports which rule fired
//!   together with every underlying series verdict.
//! * [`clayton`] — a concrete dependent model: the Clayton copula with
//!   uniform marginals. Closed forms for the joint CDF, running-maximum CDF,
//!   scaled-maximum CDF and consecutive-pair quantities, plus an O(1)-memory
//!   streaming path sampler.
//! * [`lab`] — experiments that tie the layers together: analytic
//!   almost-sure convergence reports over an epsilon grid, and Monte Carlo
//!   checks (tail suprema, empirical vs. exact CDF values).
//!
//! Shared report types are re-exported at the crate root so downstream
//! binaries only need one import path.

pub mod clayton;
pub mod lab;
pub mod lemmas;
pub mod series;
pub mod stats;
pub mod tabular;

pub use clayton::{ClaytonError, ClaytonParams, ClaytonPath, ScaledMaxEvent};
pub use lab::{
    ASReport, EmpiricalVsExactRow, EmpiricalVsExactTable, EventModel, LabError, LimitExperiment,
    Overall, TailSupRow, TailSupTable,
};
pub use lemmas::{
    Conclusion, ConditionId, ConditionReport, LemmaError, LemmaOptions, LemmaVerdict, PairSeq,
    ProbSeq, Rule,
};
pub use series::{SeriesClass, SeriesError, SeriesVerdict, TermSequence};
