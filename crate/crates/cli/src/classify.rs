//! `limsup classify` — run the infinitely-often rules over a probability
//! table read from disk.

use std::fs;
use std::path::PathBuf;

use clap::Args;
use limsup_core::lemmas::{self, DEFAULT_FRECHET_TOL};
use limsup_core::{tabular, Conclusion, LemmaOptions};
use serde_json::json;

use crate::output::{self, OutputFormat};
use crate::{Failure, EXIT_INCONCLUSIVE, EXIT_OK};

#[derive(Args)]
pub struct ClassifyArgs {
    /// Table with `n p` or `n p q` rows, 1-based contiguous n; `#` starts a
    /// comment and `# certify: tends-to-zero` asserts p(n) -> 0
    #[arg(long, value_name = "FILE")]
    pub input: PathBuf,

    /// Truncation index for the sums; defaults to the deepest index the
    /// table supports (rows - 1 when a pair column is present)
    #[arg(long, value_name = "N")]
    pub n_max: Option<u64>,

    /// Treat the events as mutually independent (enables the
    /// divergence-side verdict)
    #[arg(long)]
    pub independent: bool,

    /// Assert the events are nonincreasing: together with p(n) -> 0 this
    /// settles the verdict without any summability
    #[arg(long)]
    pub monotone_decreasing: bool,

    /// Slack allowed when checking q against its Frechet envelope
    #[arg(long, value_name = "TOL", default_value_t = DEFAULT_FRECHET_TOL)]
    pub frechet_tolerance: f64,

    #[arg(long, value_enum, default_value_t = OutputFormat::Table)]
    pub output_format: OutputFormat,
}

pub fn run(args: ClassifyArgs) -> Result<u8, Failure> {
    let text = fs::read_to_string(&args.input)
        .map_err(|e| Failure::Runtime(format!("{}: {e}", args.input.display())))?;
    let table = tabular::parse_table(&text)?;
    let rows = table.rows();
    // The pair-difference rules look at p(n_max + 1), so a pair column
    // costs one row of horizon.
    let deepest = if table.q.is_some() { rows - 1 } else { rows };
    let n_max = args.n_max.unwrap_or(deepest);
    if n_max == 0 || n_max > deepest {
        return Err(Failure::Usage(format!(
            "--n-max must be in 1..={deepest} for this table ({rows} rows{})",
            if table.q.is_some() {
                "; the pair rules need p up to n_max + 1"
            } else {
                ""
            }
        )));
    }

    let opts = LemmaOptions {
        independent: args.independent,
        monotone_decreasing: args.monotone_decreasing,
        frechet_tol: args.frechet_tolerance,
        ..LemmaOptions::with_range(n_max)
    };
    let p = table.prob_seq("p");
    let q = table.pair_seq("q");
    let verdict = lemmas::evaluate(&p, q.as_ref(), &opts)?;

    match args.output_format {
        OutputFormat::Table => {
            println!(
                "input: {} ({rows} rows{}{})",
                args.input.display(),
                if table.q.is_some() {
                    ", pair column"
                } else {
                    ""
                },
                if table.certified_to_zero {
                    ", certified p -> 0"
                } else {
                    ""
                }
            );
            println!("horizon: n_max = {n_max}");
            output::print_verdict_table(&verdict);
        }
        OutputFormat::JsonLines => {
            output::emit(json!({
                "record": "run",
                "command": "classify",
                "input": args.input.display().to_string(),
                "rows": rows,
                "pair_column": table.q.is_some(),
                "certified_to_zero": table.certified_to_zero,
                "n_max": n_max,
            }));
            output::emit_verdict_json(&verdict);
        }
    }

    Ok(match verdict.conclusion {
        Conclusion::Unknown => EXIT_INCONCLUSIVE,
        _ => EXIT_OK,
    })
}
