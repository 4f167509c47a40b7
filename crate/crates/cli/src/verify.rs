//! `limsup verify` — self-checks on the analytic identities the other
//! subcommands lean on. One line per check; any failure exits 1.

use clap::Args;
use limsup_core::lemmas::{self, PairSeq, ProbSeq};
use limsup_core::stats;
use limsup_core::{ClaytonParams, ClaytonPath, ScaledMaxEvent};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::output::{self, OutputFormat};
use crate::{Failure, EXIT_FAIL, EXIT_OK};

#[derive(Args)]
pub struct VerifyArgs {
    /// Push the generated pair column this far above its upper Frechet
    /// bound; the envelope check must then fail
    #[arg(long, value_name = "EPS")]
    pub perturb: Option<f64>,

    /// Smaller grids and no sampler check
    #[arg(long)]
    pub quick: bool,

    #[arg(long, value_enum, default_value_t = OutputFormat::Table)]
    pub output_format: OutputFormat,
}

enum Outcome {
    Pass(String),
    Fail(String),
    Skip(String),
}

struct Caps {
    /// Largest index probed on doubling grids.
    grid_n: u64,
    /// Dense Frechet sweep length.
    frechet_n: u64,
    /// Random (p, p', q) triples for the telescoping identity.
    triples: u64,
}

const FULL: Caps = Caps {
    grid_n: 100_000,
    frechet_n: 30_000,
    triples: 10_000,
};
const QUICK: Caps = Caps {
    grid_n: 1_000,
    frechet_n: 1_000,
    triples: 1_000,
};

pub fn run(args: VerifyArgs) -> Result<u8, Failure> {
    let caps = if args.quick { QUICK } else { FULL };
    let mut checks: Vec<(&'static str, Outcome)> = vec![
        ("generator-roundtrip", generator_roundtrip(&caps)),
        ("max-via-joint", max_via_joint()),
        ("scaled-threshold-substitution", scaled_substitution(&caps)),
        (
            "pair-frechet-envelope",
            pair_frechet(&caps, args.perturb),
        ),
        ("exit-telescoping", exit_telescoping(&caps)),
        ("pair-difference-identity", diff_identity(&caps)),
    ];
    checks.push((
        "sampler-location",
        if args.quick {
            Outcome::Skip("not run under --quick".to_string())
        } else {
            sampler_location()
        },
    ));

    let mut failed = 0u32;
    let mut skipped = 0u32;
    for (name, outcome) in &checks {
        let (status, detail) = match outcome {
            Outcome::Pass(d) => ("ok", d),
            Outcome::Fail(d) => {
                failed += 1;
                ("FAIL", d)
            }
            Outcome::Skip(d) => {
                skipped += 1;
                ("skip", d)
            }
        };
        match args.output_format {
            OutputFormat::Table => println!("{status:<5} {name:<30} {detail}"),
            OutputFormat::JsonLines => output::emit(json!({
                "record": "check",
                "name": name,
                "status": status.to_lowercase(),
                "detail": detail,
            })),
        }
    }
    let ok = checks.len() as u32 - failed - skipped;
    match args.output_format {
        OutputFormat::Table => println!(
            "{} checks: {ok} ok, {failed} failed, {skipped} skipped",
            checks.len()
        ),
        OutputFormat::JsonLines => output::emit(json!({
            "record": "summary",
            "ok": ok,
            "failed": failed,
            "skipped": skipped,
        })),
    }
    Ok(if failed > 0 { EXIT_FAIL } else { EXIT_OK })
}

/// psi(psi_inv(u)) == u across the generator family.
fn generator_roundtrip(caps: &Caps) -> Outcome {
    let probes = if caps.triples < FULL.triples { 99 } else { 999 };
    let thetas = [0.5, 1.0, 2.0, 5.0];
    let mut worst = 0.0f64;
    let mut at = (0.0, 0.0);
    for &theta in &thetas {
        let params = ClaytonParams::new(theta).expect("positive theta");
        for i in 1..=probes {
            let u = i as f64 / (probes + 1) as f64;
            let rel = (params.psi(params.psi_inv(u)) - u).abs() / u;
            if rel > worst {
                worst = rel;
                at = (theta, u);
            }
        }
    }
    if worst < 1e-12 {
        Outcome::Pass(format!(
            "max rel err {worst:.2e} ({} thetas x {probes} probes)",
            thetas.len()
        ))
    } else {
        Outcome::Fail(format!(
            "rel err {worst:.2e} at theta = {}, u = {} (tolerance 1e-12)",
            at.0, at.1
        ))
    }
}

/// The running-maximum CDF equals the joint CDF at equal coordinates.
fn max_via_joint() -> Outcome {
    let mut worst = 0.0f64;
    let mut at = (0.0, 0u64, 0.0);
    for theta in [1.0, 2.5] {
        let params = ClaytonParams::new(theta).expect("positive theta");
        for n in [1u64, 2, 10, 100] {
            for x in [0.1, 0.5, 0.9] {
                let joint = params
                    .joint_cdf(&vec![x; n as usize])
                    .expect("x in (0,1)");
                let max = params.max_cdf(n, x).expect("x in (0,1)");
                let rel = (joint - max).abs() / max;
                if rel > worst {
                    worst = rel;
                    at = (theta, n, x);
                }
            }
        }
    }
    if worst < 1e-12 {
        Outcome::Pass(format!("max rel err {worst:.2e} (24 combinations)"))
    } else {
        Outcome::Fail(format!(
            "rel err {worst:.2e} at theta = {}, n = {}, x = {} (tolerance 1e-12)",
            at.0, at.1, at.2
        ))
    }
}

/// scaled_max_cdf(n) equals max_cdf at the materialized moving threshold.
/// Materializing the threshold rounds it once, which costs about
/// eps / |ln threshold| of relative error downstream; the tolerance carries
/// that term.
fn scaled_substitution(caps: &Caps) -> Outcome {
    let mut worst = 0.0f64; // in units of the local tolerance
    let mut detail = String::new();
    let mut count = 0u64;
    for theta in [1.0, 2.0] {
        let params = ClaytonParams::new(theta).expect("positive theta");
        for alpha in [0.3, 0.5, 0.7] {
            for x in [0.5, 0.9] {
                let ev = ScaledMaxEvent::new(x, alpha).expect("valid event");
                let mut n = 1u64;
                while n <= caps.grid_n {
                    let thr = ev.threshold(n);
                    let direct = params.max_cdf(n, thr).expect("threshold in (0,1)");
                    let scaled = params.scaled_max_cdf(n, &ev);
                    let log_thr = (n as f64).powf(-alpha) * (-x.ln());
                    let tol = 1e-12 + 8.0 * f64::EPSILON / log_thr;
                    let score = ((scaled - direct).abs() / direct) / tol;
                    if score > worst {
                        worst = score;
                        detail = format!(
                            "rel err {:.2e} vs tol {tol:.2e} at theta = {theta}, \
                             alpha = {alpha}, x = {x}, n = {n}",
                            (scaled - direct).abs() / direct
                        );
                    }
                    count += 1;
                    n *= 2;
                }
            }
        }
    }
    if worst < 1.0 {
        Outcome::Pass(format!(
            "worst error at {:.0}% of its roundoff budget ({count} probes)",
            worst * 100.0
        ))
    } else {
        Outcome::Fail(detail)
    }
}

/// The generated pair column stays inside [max(0, p+p'-1), min(p, p')].
fn pair_frechet(caps: &Caps, perturb: Option<f64>) -> Outcome {
    for theta in [1.0, 2.0] {
        let params = ClaytonParams::new(theta).expect("positive theta");
        for (x, alpha) in [(0.5, 0.5), (0.9, 0.7)] {
            let ev = ScaledMaxEvent::new(x, alpha).expect("valid event");
            let p = ProbSeq::from_fn("p", move |n| params.scaled_max_cdf(n, &ev));
            let q = match perturb {
                None => PairSeq::from_fn("q", move |n| params.pair_joint_scaled(n, &ev)),
                Some(eps) => PairSeq::from_fn("q", move |n| {
                    let hi = params
                        .scaled_max_cdf(n, &ev)
                        .min(params.scaled_max_cdf(n + 1, &ev));
                    hi + eps
                }),
            };
            if let Err(e) = lemmas::validate_frechet(&p, &q, caps.frechet_n, 1e-12) {
                let tag = match perturb {
                    Some(eps) => format!(" (pair column offset by {eps})"),
                    None => String::new(),
                };
                return Outcome::Fail(format!("{e}{tag}"));
            }
        }
    }
    Outcome::Pass(format!(
        "4 parameter sets swept densely to n = {}",
        caps.frechet_n
    ))
}

/// exit + q - p telescopes to zero, on random triples and on the generated
/// tables.
fn exit_telescoping(caps: &Caps) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut worst = 0.0f64;
    for _ in 0..caps.triples {
        let p1: f64 = rng.random();
        let p2: f64 = rng.random();
        let (lo, hi) = lemmas::frechet_bounds(p1, p2);
        let q = lo + rng.random::<f64>() * (hi - lo);
        let exit = (p1 - q).max(0.0);
        worst = worst.max((exit + q - p1).abs());
    }
    let params = ClaytonParams::new(1.0).expect("positive theta");
    let ev = ScaledMaxEvent::new(0.5, 0.5).expect("valid event");
    let mut n = 1u64;
    while n <= caps.grid_n {
        let p = params.scaled_max_cdf(n, &ev);
        let q = params.pair_joint_scaled(n, &ev);
        let exit = (p - q).max(0.0);
        worst = worst.max((exit + q - p).abs());
        n *= 2;
    }
    if worst <= 1e-15 {
        Outcome::Pass(format!(
            "max residual {worst:.2e} over {} random triples + generated tables",
            caps.triples
        ))
    } else {
        Outcome::Fail(format!("residual {worst:.2e} exceeds 1e-15"))
    }
}

/// The stable pair-difference form agrees with direct subtraction. The
/// direct form loses roughly p/diff in relative precision, hence the mixed
/// tolerance.
fn diff_identity(caps: &Caps) -> Outcome {
    let mut worst = 0.0f64;
    let mut detail = String::new();
    let mut count = 0u64;
    for theta in [1.0, 2.0] {
        let params = ClaytonParams::new(theta).expect("positive theta");
        for alpha in [0.3, 0.5, 0.7] {
            for x in [0.5, 0.9] {
                let ev = ScaledMaxEvent::new(x, alpha).expect("valid event");
                let mut n = 1u64;
                while n <= caps.grid_n {
                    let d = params.diff_term(n, &ev);
                    let p = params.scaled_max_cdf(n, &ev);
                    let direct = p - params.pair_joint_scaled(n, &ev);
                    let tol = 1e-13 * d + 4.0 * f64::EPSILON * p;
                    let score = (d - direct).abs() / tol;
                    if score > worst {
                        worst = score;
                        detail = format!(
                            "|stable - direct| = {:.2e} vs tol {tol:.2e} at theta = {theta}, \
                             alpha = {alpha}, x = {x}, n = {n}",
                            (d - direct).abs()
                        );
                    }
                    count += 1;
                    n *= 2;
                }
            }
        }
    }
    if worst < 1.0 {
        Outcome::Pass(format!(
            "worst deviation at {:.0}% of its mixed tolerance ({count} probes)",
            worst * 100.0
        ))
    } else {
        Outcome::Fail(detail)
    }
}

/// The path generator's frailty mean and first-coordinate law.
fn sampler_location() -> Outcome {
    let params = ClaytonParams::new(1.0).expect("positive theta");
    let paths = 20_000u64;
    let mut v_sum = 0.0;
    let mut first = Vec::with_capacity(paths as usize);
    for stream in 0..paths {
        let mut path = ClaytonPath::with_stream(&params, 1234, stream);
        v_sum += path.v();
        first.push(path.step().0);
    }
    let mean = v_sum / paths as f64;
    let ks = stats::ks_uniform(&first);
    // V is standard exponential at theta = 1: mean 1, standard error
    // 1/sqrt(paths) ~ 0.007, so 0.03 is a 4-sigma band.
    if (mean - 1.0).abs() < 0.03 && ks < 0.012 {
        Outcome::Pass(format!(
            "frailty mean {mean:.4}, first-coordinate KS {ks:.4} ({paths} paths)"
        ))
    } else {
        Outcome::Fail(format!(
            "frailty mean {mean:.4} (want within 0.03 of 1) or KS {ks:.4} (want < 0.012)"
        ))
    }
}
