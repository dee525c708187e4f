//! Batch verification front-end: load a model file, run named check suites,
//! and emit a deterministic report.
//!
//! Exit codes: 0 all checks pass, 1 any check fails, 2 usage or model
//! errors, 3 no failures but at least one indeterminate verdict.

// index loops mirror the component formulas of the underlying checks
#![allow(clippy::needless_range_loop)]

mod checks;
mod model;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;
use dualmetric::equiv::SamplePlan;
use dualmetric::Convention;

use checks::{run_check, CheckContext, CATALOG};
use report::{Format, Report};

#[derive(Parser)]
#[command(name = "dualmetric", version, about = "Verification suites for models with independent covariant and contravariant metrics")]
struct Args {
    /// Model file path
    #[arg(long)]
    model: PathBuf,

    /// Comma-separated check names from the catalog
    #[arg(long, value_delimiter = ',')]
    suite: Vec<String>,

    /// Run every catalog check the model supports
    #[arg(long)]
    all: bool,

    /// Samples per equivalence decision
    #[arg(long, default_value_t = 200)]
    samples: usize,

    /// Relative tolerance for equivalence decisions
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,

    /// Seed for the sampling stream
    #[arg(long, default_value_t = 42)]
    seed: u64,

    /// Truncation order for the elliptic sums
    #[arg(long, default_value_t = 40)]
    truncation: usize,

    /// Also write the report to this file
    #[arg(long)]
    report: Option<PathBuf>,

    /// Output format
    #[arg(long, value_enum, default_value_t = Format::Table)]
    format: Format,

    /// Index (anti)symmetrization convention: plain two-term expansion or
    /// with the 1/2 factor
    #[arg(long, value_enum, default_value_t = ConventionArg::Paper)]
    convention: ConventionArg,

    /// Write per-check sampled |residual| tables (TSV) for plotting
    #[arg(long)]
    table: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
enum ConventionArg {
    Paper,
    Halved,
}

impl From<ConventionArg> for Convention {
    fn from(c: ConventionArg) -> Convention {
        match c {
            ConventionArg::Paper => Convention::Paper,
            ConventionArg::Halved => Convention::Halved,
        }
    }
}

fn main() -> ExitCode {
    let args = Args::parse();

    if !args.all && args.suite.is_empty() {
        eprintln!("error: pass --suite NAME[,NAME...] or --all");
        return ExitCode::from(2);
    }
    let mut selected: Vec<&'static str> = Vec::new();
    if args.all {
        selected.extend(CATALOG);
    } else {
        for name in &args.suite {
            match CATALOG.iter().find(|&&c| c == name.as_str()) {
                Some(&c) => {
                    if !selected.contains(&c) {
                        selected.push(c);
                    }
                }
                None => {
                    eprintln!(
                        "error: unknown suite `{name}`; catalog: {}",
                        CATALOG.join(", ")
                    );
                    return ExitCode::from(2);
                }
            }
        }
    }
    // report order always follows the catalog
    selected.sort_by_key(|name| CATALOG.iter().position(|c| c == name).unwrap());

    let text = match std::fs::read_to_string(&args.model) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", args.model.display());
            return ExitCode::from(2);
        }
    };
    let model = match model::load_model(&text) {
        Ok(m) => m,
        Err(errors) => {
            eprintln!("model errors in {}:", args.model.display());
            for e in errors {
                eprintln!("  {e}");
            }
            return ExitCode::from(2);
        }
    };

    let plan = SamplePlan {
        sample_count: args.samples,
        seed: args.seed,
        tol: args.tol,
        abs_floor: 1e-12,
    };
    let ctx = CheckContext {
        model: &model,
        plan,
        convention: args.convention.into(),
        truncation: args.truncation,
    };

    let started = Instant::now();
    let records = selected.iter().map(|name| run_check(name, &ctx)).collect();
    let elapsed = started.elapsed();

    let report = Report {
        records,
        seed: args.seed,
        tol: args.tol,
        samples: args.samples,
    };
    let rendered = report.render(args.format);
    print!("{rendered}");
    if let Some(path) = &args.report {
        if let Err(e) = std::fs::write(path, &rendered) {
            eprintln!("error: cannot write report {}: {e}", path.display());
            return ExitCode::from(2);
        }
    }
    if let Some(path) = &args.table {
        match render_tables(&model, &ctx, &report) {
            Ok(tsv) => {
                if let Err(e) = std::fs::write(path, tsv) {
                    eprintln!("error: cannot write table {}: {e}", path.display());
                    return ExitCode::from(2);
                }
            }
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
        }
    }
    // timing stays out of the report so bytes are reproducible
    eprintln!("wall time: {:.3}s", elapsed.as_secs_f64());

    ExitCode::from(report.exit_code() as u8)
}

/// Plot-ready TSV: one row per (check, sample) with the sampled residual of
/// the check's headline quantity. Only sampled checks contribute rows.
fn render_tables(
    model: &model::ModelSpec,
    ctx: &CheckContext,
    report: &Report,
) -> Result<String, String> {
    use dualmetric::algebraic::{reparam_residual_general, ScalarContraction};
    use dualmetric::equiv::sample_points;
    use dualmetric::geometry::{christoffel_second, ricci};

    let mut out = String::from("check\tsample\tvalue\n");
    let points = sample_points(&model.chart, &ctx.plan);
    for rec in &report.records {
        let exprs: Vec<dualmetric::Expr> = match rec.name {
            "ricci" => match &model.metric {
                Some(g) => {
                    let conn = christoffel_second(g).map_err(|e| e.to_string())?;
                    ricci(&conn).into_iter().flatten().collect()
                }
                None => continue,
            },
            "reparam-general" => match (&model.metric, &model.contravariant) {
                (Some(g), Some(gt)) if !gt.is_factorized() => {
                    vec![reparam_residual_general(
                        g,
                        gt,
                        ctx.convention,
                        ScalarContraction::WithContravariant,
                    )
                    .map_err(|e| e.to_string())?]
                }
                _ => continue,
            },
            _ => continue,
        };
        for (si, p) in points.iter().enumerate() {
            let mut worst = 0.0f64;
            let mut ok = false;
            for e in &exprs {
                if let Ok(v) = e.eval_shared(p) {
                    if v.is_finite() {
                        worst = worst.max(v.abs());
                        ok = true;
                    }
                }
            }
            if ok {
                out.push_str(&format!("{}\t{}\t{:e}\n", rec.name, si, worst));
            }
        }
    }
    Ok(out)
}
