use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use intrisk_core::duality::{default_dual_sample, VERTEX_ENUMERATION_MAX};
use intrisk_core::input::{load_dual_sample, load_scenarios, ScenarioFile, SetConfig};
use intrisk_core::props::{run_property_suite, PropertyOutcome};
use intrisk_core::{
    build_report, intrinsic_dual, intrinsic_risk, monetary_risk, AcceptanceKind, AcceptanceSet,
    EligibleAsset, Position, RiskError,
};
use serde_json::json;

// Write errors (a closed pipe) are ignored rather than panicking.
macro_rules! out {
    ($($arg:tt)*) => {{
        let _ = writeln!(std::io::stdout(), $($arg)*);
    }};
}

/// Gap tolerance when the dual sample contains every vertex.
const EXACT_TOL: f64 = 1e-6;
/// Gap tolerance for sampled dual sets.
const SAMPLED_TOL: f64 = 5e-3;

#[derive(Parser)]
#[command(name = "intrisk", version, about = "Intrinsic and monetary risk on scenario sets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fraction of the position to swap into the eligible asset.
    Intrinsic(Common),
    /// Capital to add in the eligible asset.
    Monetary(Common),
    /// Full comparison report of both actions.
    Compare {
        #[command(flatten)]
        common: Common,
        /// Benchmark asset for Sharpe ratios; defaults to the eligible asset.
        #[arg(long)]
        benchmark: Option<String>,
    },
    /// Primal bisection against the dual representation.
    DualCheck {
        #[command(flatten)]
        common: Common,
        /// JSON file with {"measures": [[..], ..]}; defaults to vertices or random draws.
        #[arg(long)]
        measures: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Allowed gap; defaults to 1e-6 for exact vertex sets and 5e-3 otherwise.
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Run the property suite on seeded random instances.
    Props {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Instances per property.
        #[arg(long, default_value_t = 1000)]
        count: usize,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
}

#[derive(Args)]
struct Common {
    /// Scenario file (.json, or .csv with a sidecar).
    #[arg(long)]
    scenarios: PathBuf,
    /// Sidecar with initial values for CSV scenarios; defaults to <name>.meta.json.
    #[arg(long)]
    sidecar: Option<PathBuf>,
    /// Acceptance-set configuration file.
    #[arg(long)]
    set: PathBuf,
    #[arg(long)]
    position: Option<String>,
    #[arg(long)]
    asset: Option<String>,
    /// Overrides the level of a VaR or ES set.
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Table,
}

enum Failure {
    Risk(RiskError),
    Tolerance(String),
    Violations(usize),
}

impl From<RiskError> for Failure {
    fn from(e: RiskError) -> Self {
        Failure::Risk(e)
    }
}

struct Loaded {
    file: ScenarioFile,
    set: AcceptanceSet,
    position: Position,
    asset: EligibleAsset,
}

fn pick<'a, T>(
    items: &'a std::collections::BTreeMap<String, T>,
    name: Option<&str>,
    what: &str,
) -> Result<&'a T, RiskError> {
    match name {
        Some(n) => items.get(n).ok_or_else(|| RiskError::Input {
            source_name: format!("--{what}"),
            message: format!(
                "no {what} named {n:?}; available: {}",
                items.keys().cloned().collect::<Vec<_>>().join(", ")
            ),
        }),
        None if items.len() == 1 => Ok(items.values().next().expect("one item")),
        None => Err(RiskError::Input {
            source_name: format!("--{what}"),
            message: format!(
                "choose one of: {}",
                items.keys().cloned().collect::<Vec<_>>().join(", ")
            ),
        }),
    }
}

fn load(c: &Common) -> Result<Loaded, RiskError> {
    let file = load_scenarios(&c.scenarios, c.sidecar.as_deref())?;
    let mut config = SetConfig::load(&c.set)?;
    if let Some(a) = c.alpha {
        config = config.with_alpha(a)?;
    }
    let set = config.build(&file.space, &c.set.display().to_string())?;
    let position = pick(&file.positions, c.position.as_deref(), "position")?.clone();
    let asset = pick(&file.assets, c.asset.as_deref(), "asset")?.clone();
    Ok(Loaded {
        file,
        set,
        position,
        asset,
    })
}

fn print_json(value: &serde_json::Value) {
    out!("{}", serde_json::to_string_pretty(value).expect("serializable"));
}

fn print_table(rows: &[(&str, String)]) {
    let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
    for (k, v) in rows {
        out!("{k:<width$}  {v}");
    }
}

fn fmt_values(values: &[f64]) -> String {
    let parts: Vec<String> = values.iter().map(|v| format!("{v:.6}")).collect();
    format!("[{}]", parts.join(", "))
}

fn run_intrinsic(c: &Common) -> Result<(), Failure> {
    let l = load(c)?;
    let r = intrinsic_risk(&l.set, &l.asset, &l.position)?;
    match c.format {
        Format::Json => print_json(&json!({
            "set": l.set.label(),
            "intrinsic": r,
            "capital": r.capital(&l.position),
        })),
        Format::Table => print_table(&[
            ("set", l.set.label()),
            ("intrinsic risk", format!("{:.12}", r.value)),
            ("capital X0*R", format!("{:.12}", r.capital(&l.position))),
            (
                "bracket",
                format!("[{:e}, {:e}]", r.certificate.lower, r.certificate.upper),
            ),
        ]),
    }
    Ok(())
}

fn run_monetary(c: &Common) -> Result<(), Failure> {
    let l = load(c)?;
    let rho = monetary_risk(&l.set, &l.asset, l.position.payoff())?;
    match c.format {
        Format::Json => print_json(&json!({ "set": l.set.label(), "monetary": rho })),
        Format::Table => print_table(&[
            ("set", l.set.label()),
            ("monetary risk", format!("{:.12}", rho.value)),
            ("finite", rho.finite.to_string()),
        ]),
    }
    Ok(())
}

fn run_compare(c: &Common, benchmark: Option<&str>) -> Result<(), Failure> {
    let l = load(c)?;
    let bench = match benchmark {
        Some(_) => pick(&l.file.assets, benchmark, "benchmark")?.clone(),
        None => l.asset.clone(),
    };
    let rep = build_report(&l.set, &l.asset, &l.position, &bench)?;
    match c.format {
        Format::Json => out!("{}", rep.to_json()),
        Format::Table => {
            let sharpe = |s: Option<f64>| s.map_or("degenerate".to_string(), |v| format!("{v:.6}"));
            let mut rows = vec![
                ("set", rep.set.clone()),
                ("intrinsic risk", format!("{:.12}", rep.intrinsic)),
                ("monetary risk", format!("{:.12}", rep.monetary)),
                ("capital intrinsic", format!("{:.6}", rep.capital.intrinsic)),
                ("capital traditional", format!("{:.6}", rep.capital.traditional)),
                ("returns intrinsic", fmt_values(rep.returns.intrinsic.values())),
                ("sharpe intrinsic", sharpe(rep.sharpe.intrinsic.value)),
            ];
            if let Some(t) = &rep.returns.traditional {
                rows.push(("returns traditional", fmt_values(t.values())));
            }
            if let Some(t) = rep.sharpe.traditional {
                rows.push(("sharpe traditional", sharpe(t.value)));
            }
            print_table(&rows);
        }
    }
    Ok(())
}

fn run_dual_check(
    c: &Common,
    measures: Option<&PathBuf>,
    seed: u64,
    tol: Option<f64>,
) -> Result<(), Failure> {
    let l = load(c)?;
    let (sample, source, exact) = match measures {
        Some(path) => (load_dual_sample(path, &l.file.space)?, "file", false),
        None => {
            let exact = matches!(l.set.kind(), AcceptanceKind::ExpectedShortfall { .. })
                && l.file.space.len() <= VERTEX_ENUMERATION_MAX;
            let source = if exact { "vertices" } else { "random" };
            (default_dual_sample(&l.set, seed)?, source, exact)
        }
    };
    let tol = tol.unwrap_or(if exact { EXACT_TOL } else { SAMPLED_TOL });
    let primal = intrinsic_risk(&l.set, &l.asset, &l.position)?;
    let dual = intrinsic_dual(&l.set, &l.asset, &l.position, &sample)?;
    let gap = (primal.value - dual.value).abs();
    match c.format {
        Format::Json => print_json(&json!({
            "set": l.set.label(),
            "primal": primal.value,
            "dual": dual.value,
            "gap": gap,
            "tol": tol,
            "sample": source,
            "measures": sample.len(),
            "evaluated": dual.evaluated,
            "skipped_infinite": dual.skipped_infinite,
            "skipped_degenerate": dual.skipped_degenerate,
        })),
        Format::Table => print_table(&[
            ("set", l.set.label()),
            ("primal", format!("{:.12}", primal.value)),
            ("dual", format!("{:.12}", dual.value)),
            ("gap", format!("{gap:e}")),
            ("tolerance", format!("{tol:e}")),
            ("sample", format!("{source} ({} measures)", sample.len())),
        ]),
    }
    if gap > tol {
        return Err(Failure::Tolerance(format!("gap {gap:e} exceeds {tol:e}")));
    }
    Ok(())
}

fn run_props(seed: u64, count: usize, format: Format) -> Result<(), Failure> {
    let outcomes: Vec<PropertyOutcome> = run_property_suite(seed, count);
    match format {
        Format::Json => print_json(&json!({ "seed": seed, "count": count, "properties": outcomes })),
        Format::Table => {
            for o in &outcomes {
                let status = if o.passed() { "PASS" } else { "FAIL" };
                out!(
                    "{status}  {:<30} checked {:>5}  skipped {:>5}  violations {}",
                    o.name, o.checked, o.skipped, o.violations
                );
                if let Some(v) = &o.first_violation {
                    out!("      {v}");
                }
            }
        }
    }
    let violations: usize = outcomes.iter().map(|o| o.violations).sum();
    if violations > 0 {
        return Err(Failure::Violations(violations));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Intrinsic(c) => run_intrinsic(c),
        Command::Monetary(c) => run_monetary(c),
        Command::Compare { common, benchmark } => run_compare(common, benchmark.as_deref()),
        Command::DualCheck {
            common,
            measures,
            seed,
            tol,
        } => run_dual_check(common, measures.as_ref(), *seed, *tol),
        Command::Props {
            seed,
            count,
            format,
        } => run_props(*seed, *count, *format),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Risk(e)) => {
            eprintln!("error: {e}");
            match e {
                RiskError::Precondition(_) | RiskError::Size { .. } => ExitCode::from(3),
                RiskError::Numerical(_) => ExitCode::from(1),
                _ => ExitCode::from(2),
            }
        }
        Err(Failure::Tolerance(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(4)
        }
        Err(Failure::Violations(n)) => {
            eprintln!("error: {n} property violations");
            ExitCode::from(1)
        }
    }
}
