//! `limsup analyze` — closed-form treatment of the scaled-running-maximum
//! events of the Clayton model: condition classifications, asymptotic-rate
//! diagnostics, verdict, optional epsilon-grid limit report, optional term
//! table export.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use clap::Args;
use limsup_core::lab::{self, ClaytonScaledMax};
use limsup_core::lemmas::{self};
use limsup_core::{
    tabular, ClaytonParams, Conclusion, LemmaOptions, LimitExperiment, Overall, PairSeq, ProbSeq,
    ScaledMaxEvent,
};
use serde_json::json;

use crate::output::{self, OutputFormat};
use crate::{Failure, EXIT_INCONCLUSIVE, EXIT_OK};

#[derive(Args)]
pub struct AnalyzeArgs {
    /// Deviation threshold in (0,1): the n-th event is M_n <= x^(n^-alpha)
    #[arg(long, default_value_t = 0.5)]
    pub x: f64,

    /// Scaling exponent in [0,1); alpha = 0 keeps the threshold at x and
    /// makes the events decreasing
    #[arg(long, default_value_t = 0.5)]
    pub alpha: f64,

    /// Clayton dependence parameter (> 0)
    #[arg(long, default_value_t = 1.0)]
    pub theta: f64,

    /// Truncation index for the condition sums (at least 100)
    #[arg(long, default_value_t = 1_000_000)]
    pub n_max: u64,

    /// Comma-separated strictly descending deviation thresholds; adds a
    /// per-epsilon report on M_n^(n^alpha) -> 1
    #[arg(long, value_name = "E1,E2,...")]
    pub epsilons: Option<String>,

    /// Write the generated probability table (rows 1..=n_max+1) here; it
    /// round-trips through `classify` to the same verdict
    #[arg(long, value_name = "FILE")]
    pub emit_terms: Option<PathBuf>,

    #[arg(long, value_enum, default_value_t = OutputFormat::Table)]
    pub output_format: OutputFormat,
}

pub fn run(args: AnalyzeArgs) -> Result<u8, Failure> {
    let params = ClaytonParams::new(args.theta)?;
    let ev = ScaledMaxEvent::new(args.x, args.alpha)?;
    if args.n_max < 100 {
        return Err(Failure::Usage(format!(
            "--n-max {} is too small; the series classifier needs at least 100",
            args.n_max
        )));
    }

    let p = ProbSeq::from_fn("p", move |n| params.scaled_max_cdf(n, &ev)).certify_tends_to_zero();
    let q = PairSeq::from_fn("q", move |n| params.pair_joint_scaled(n, &ev));
    let opts = LemmaOptions {
        // Fixed threshold, growing sample: the events genuinely shrink.
        monotone_decreasing: args.alpha == 0.0,
        ..LemmaOptions::with_range(args.n_max)
    };
    let verdict = lemmas::evaluate(&p, Some(&q), &opts)?;

    // Rate diagnostics: for theta = 1 and alpha > 0 both normalized ratios
    // tend to 1, so their distance from 1 shows how asymptotic the chosen
    // horizon actually is.
    let diagnostics = (params.theta() == 1.0 && args.alpha > 0.0).then(|| {
        let n = args.n_max;
        let nf = n as f64;
        let rate = -args.x.ln();
        let p_ratio = params.scaled_max_cdf(n, &ev) * nf.powf(1.0 - args.alpha) * rate;
        let d_ratio = params.diff_term(n, &ev) * nf.powf(2.0 - args.alpha) * rate;
        (p_ratio, d_ratio)
    });

    let grid = match &args.epsilons {
        Some(spec) => Some(run_grid(spec, params, args.alpha, args.n_max)?),
        None => None,
    };

    if let Some(path) = &args.emit_terms {
        write_terms(path, params, &ev, args.n_max)?;
    }

    match args.output_format {
        OutputFormat::Table => {
            println!(
                "model: clayton(theta = {}) running maximum, threshold x^(n^-alpha), \
                 x = {}, alpha = {}",
                params.theta(),
                args.x,
                args.alpha
            );
            println!("horizon: n_max = {}", args.n_max);
            output::print_verdict_table(&verdict);
            match diagnostics {
                Some((p_ratio, d_ratio)) => {
                    println!("rate diagnostics at n = {} (both -> 1):", args.n_max);
                    println!("  p(n) * n^(1-alpha) * (-ln x)          = {p_ratio:.6}");
                    println!("  (p(n) - q(n)) * n^(2-alpha) * (-ln x) = {d_ratio:.6}");
                }
                None => println!(
                    "rate diagnostics: closed-form constants cover theta = 1, alpha > 0 \
                     only; skipped"
                ),
            }
            if let Some(report) = &grid {
                println!("limit report (M_n^(n^alpha) -> {}):", report.mu);
                for (eps, v) in &report.per_epsilon {
                    let rule = v
                        .fired_by
                        .map(|r| r.to_string())
                        .unwrap_or_else(|| "-".to_string());
                    println!("  eps {eps:<8} {:<9} {rule}", v.conclusion.to_string());
                }
                println!("  overall: {}", report.overall);
                for n in &report.notes {
                    println!("  - {n}");
                }
            }
            if let Some(path) = &args.emit_terms {
                println!("wrote {} rows to {}", args.n_max + 1, path.display());
            }
        }
        OutputFormat::JsonLines => {
            output::emit(json!({
                "record": "run",
                "command": "analyze",
                "x": args.x,
                "alpha": args.alpha,
                "theta": params.theta(),
                "n_max": args.n_max,
            }));
            output::emit_verdict_json(&verdict);
            if let Some((p_ratio, d_ratio)) = diagnostics {
                output::emit(json!({
                    "record": "rate-diagnostic",
                    "name": "event-prob-rate",
                    "ratio": p_ratio,
                    "limit": 1.0,
                }));
                output::emit(json!({
                    "record": "rate-diagnostic",
                    "name": "pair-difference-rate",
                    "ratio": d_ratio,
                    "limit": 1.0,
                }));
            }
            if let Some(report) = &grid {
                for (eps, v) in &report.per_epsilon {
                    output::emit(json!({
                        "record": "epsilon-verdict",
                        "epsilon": eps,
                        "conclusion": v.conclusion,
                        "rule": v.fired_by,
                    }));
                }
                output::emit(json!({
                    "record": "limit-report",
                    "mu": report.mu,
                    "overall": report.overall,
                    "notes": report.notes,
                }));
            }
            if let Some(path) = &args.emit_terms {
                output::emit(json!({
                    "record": "terms-written",
                    "path": path.display().to_string(),
                    "rows": args.n_max + 1,
                }));
            }
        }
    }

    let inconclusive = verdict.conclusion == Conclusion::Unknown
        || grid
            .as_ref()
            .is_some_and(|r| r.overall != Overall::ASConvergent);
    Ok(if inconclusive {
        EXIT_INCONCLUSIVE
    } else {
        EXIT_OK
    })
}

fn run_grid(
    spec: &str,
    params: ClaytonParams,
    alpha: f64,
    n_max: u64,
) -> Result<lab::ASReport, Failure> {
    let epsilons = spec
        .split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<f64>()
                .map_err(|e| Failure::Usage(format!("--epsilons: {t:?}: {e}")))
        })
        .collect::<Result<Vec<f64>, Failure>>()?;
    let model = ClaytonScaledMax::new(params, alpha)?;
    let exp = LimitExperiment::new(1.0, epsilons, n_max, 1, 0)?;
    let report = if alpha == 0.0 {
        lab::monotone_convergence_report(&model, &exp)?
    } else {
        lab::as_convergence_report(&model, &exp)?
    };
    Ok(report)
}

fn write_terms(
    path: &PathBuf,
    params: ClaytonParams,
    ev: &ScaledMaxEvent,
    n_max: u64,
) -> Result<(), Failure> {
    let rows = n_max + 1;
    let mut p = Vec::with_capacity(rows as usize);
    let mut q = Vec::with_capacity(rows as usize);
    for n in 1..=rows {
        p.push(params.scaled_max_cdf(n, ev));
        q.push(params.pair_joint_scaled(n, ev));
    }
    let file = fs::File::create(path)
        .map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))?;
    let mut out = BufWriter::new(file);
    tabular::write_table(&mut out, &p, Some(&q), true)?;
    out.flush()?;
    Ok(())
}
