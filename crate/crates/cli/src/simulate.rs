//! `limsup simulate` — Monte-Carlo cross-checks of the closed forms: the
//! running-maximum law at the moving threshold, and quantiles of the
//! deviation tail-sup along the paths.
//!
//! Output is a pure function of the flags: fixed seed, no timing lines, and
//! order-independent parallel reductions underneath.

use clap::Args;
use limsup_core::lab;
use limsup_core::{ClaytonParams, LimitExperiment, ScaledMaxEvent};
use serde_json::json;

use crate::output::{self, OutputFormat};
use crate::{Failure, EXIT_FAIL, EXIT_OK};

/// Refuse (without --force) runs costing more than this many path-steps.
const STEP_BUDGET: u64 = 10_000_000_000;

#[derive(Args)]
pub struct SimulateArgs {
    /// Deviation threshold in (0,1)
    #[arg(long, default_value_t = 0.5)]
    pub x: f64,

    /// Scaling exponent in [0,1)
    #[arg(long, default_value_t = 0.5)]
    pub alpha: f64,

    /// Clayton dependence parameter (> 0)
    #[arg(long, default_value_t = 1.0)]
    pub theta: f64,

    /// Steps per path (at least 100)
    #[arg(long, default_value_t = 100_000)]
    pub n_max: u64,

    /// Number of independent paths
    #[arg(long, default_value_t = 10_000)]
    pub paths: u64,

    /// Seed for the path generator
    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Run even when paths * n_max exceeds the step budget
    #[arg(long)]
    pub force: bool,

    #[arg(long, value_enum, default_value_t = OutputFormat::Table)]
    pub output_format: OutputFormat,
}

pub fn run(args: SimulateArgs) -> Result<u8, Failure> {
    let params = ClaytonParams::new(args.theta)?;
    let ev = ScaledMaxEvent::new(args.x, args.alpha)?;
    let cost = args.paths.checked_mul(args.n_max).unwrap_or(u64::MAX);
    if cost > STEP_BUDGET && !args.force {
        return Err(Failure::Usage(format!(
            "paths * n_max = {cost} path-steps exceeds the budget of {STEP_BUDGET}; \
             pass --force to run anyway"
        )));
    }

    let exp = LimitExperiment::new(1.0, vec![1.0 - args.x], args.n_max, args.paths, args.seed)?;

    // Law checks at round sample sizes spanning the horizon, plus n = 50 as
    // a small-sample anchor.
    let mut n_list: Vec<u64> = vec![50];
    let mut d = 10u64;
    loop {
        n_list.push(d);
        if d > args.n_max / 10 {
            break;
        }
        d *= 10;
    }
    n_list.sort_unstable();
    n_list.dedup();

    // Tail-sup checkpoints: three decades below the horizon.
    let mut checkpoints: Vec<u64> = [args.n_max / 1000, args.n_max / 100, args.n_max / 10]
        .into_iter()
        .filter(|&c| c >= 1)
        .collect();
    checkpoints.dedup();

    let law = lab::empirical_vs_exact(&params, &ev, &n_list, &exp)?;
    let tail = lab::empirical_tail_sup(&params, args.alpha, &exp, &checkpoints)?;

    let any_flagged = law.rows.iter().any(|r| r.flagged);
    let medians_ok = tail.rows.windows(2).all(|w| w[1].median <= w[0].median);

    match args.output_format {
        OutputFormat::Table => {
            println!(
                "clayton(theta = {}), x = {}, alpha = {}",
                params.theta(),
                args.x,
                args.alpha
            );
            println!(
                "paths = {}, n_max = {}, seed = {}",
                args.paths, args.n_max, args.seed
            );
            println!("running-maximum law at the moving threshold:");
            println!(
                "  {:>9} {:>13} {:>13} {:>13} {:>8}",
                "n", "empirical", "exact", "std-error", "z"
            );
            for r in &law.rows {
                println!(
                    "  {:>9} {:>13.6} {:>13.6} {:>13.6e} {:>8.2}{}",
                    r.n,
                    r.empirical,
                    r.exact,
                    r.std_error,
                    r.z,
                    if r.flagged { "  OUTSIDE 4 SIGMA" } else { "" }
                );
            }
            println!("deviation tail-sup quantiles (sup over k >= n of |M_k^(k^alpha) - 1|):");
            println!("  {:>9} {:>13} {:>13}", "n", "median", "p90");
            for r in &tail.rows {
                println!("  {:>9} {:>13.6} {:>13.6}", r.checkpoint, r.median, r.p90);
            }
            println!(
                "result: law checks {}; tail-sup medians {}",
                if any_flagged { "FAILED" } else { "ok" },
                if medians_ok {
                    "nonincreasing"
                } else {
                    "NOT nonincreasing"
                }
            );
        }
        OutputFormat::JsonLines => {
            output::emit(json!({
                "record": "run",
                "command": "simulate",
                "x": args.x,
                "alpha": args.alpha,
                "theta": params.theta(),
                "n_max": args.n_max,
                "paths": args.paths,
                "seed": args.seed,
            }));
            for r in &law.rows {
                output::emit(json!({
                    "record": "max-law",
                    "n": r.n,
                    "empirical": r.empirical,
                    "exact": r.exact,
                    "std_error": r.std_error,
                    "z": r.z,
                    "flagged": r.flagged,
                }));
            }
            for r in &tail.rows {
                output::emit(json!({
                    "record": "tail-sup",
                    "n": r.checkpoint,
                    "median": r.median,
                    "p90": r.p90,
                }));
            }
            output::emit(json!({
                "record": "summary",
                "law_ok": !any_flagged,
                "medians_nonincreasing": medians_ok,
            }));
        }
    }

    Ok(if any_flagged || !medians_ok {
        EXIT_FAIL
    } else {
        EXIT_OK
    })
}
