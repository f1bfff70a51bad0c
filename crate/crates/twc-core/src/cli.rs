//! Command-line front end: probabilities, model verification, sampling,
//! CHSH evaluation and scans, the validity threshold and the normalisation
//! audit, with reproducible seeded runs and machine-readable output.

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;
use std::f64::consts::PI;
use std::path::PathBuf;

use crate::analysis::{self, ThresholdMethod};
use crate::io::{fmt_float, fmt_optional, to_json_text, CsvWriter};
use crate::lhv::{self, LhvError};
use crate::quantum::{self, QuantumError};
use crate::types::{events_up_to, Event, OscillatorStrength, Settings};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID_CONFIG: i32 = 2;
pub const EXIT_MODEL_INVALID: i32 = 3;
pub const EXIT_TOLERANCE_FAILURE: i32 = 4;

/// Relative --output paths resolve against this directory when it is set.
pub const OUTPUT_DIR_ENV: &str = "TWC_OUTPUT_DIR";

const DEFAULT_CUTOFF: u32 = 20;
const DEFAULT_TOLERANCE: f64 = 1e-9;

/// Settings pairs used by `verify`: theta2 anchored off zero, theta12
/// sweeping both signs and the phase-free points.
const VERIFY_THETA2: f64 = 0.3;
const VERIFY_THETA12: [f64; 12] = [
    0.0,
    PI / 6.0,
    -PI / 6.0,
    PI / 4.0,
    -PI / 4.0,
    PI / 3.0,
    -PI / 3.0,
    PI / 2.0,
    -PI / 2.0,
    2.0 * PI / 3.0,
    -2.0 * PI / 3.0,
    PI,
];

#[derive(Debug, Parser)]
#[command(
    name = "twc",
    version,
    about = "Quantum statistics of the TWC single-photon homodyne experiment \
             and the local-hidden-variable model that reproduces them"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Truncated quantum event distribution with a certified tail bound.
    Probs(ProbsArgs),
    /// Build the local model and compare it against the quantum
    /// probabilities over a settings grid.
    Verify(VerifyArgs),
    /// Draw detection events from the local model.
    Sample(SampleArgs),
    /// CHSH combination: explicit settings, optimised settings, or a scan
    /// over oscillator strengths.
    Chsh(ChshArgs),
    /// Model validity threshold in alpha^2 by both methods.
    Threshold(ThresholdArgs),
    /// Audit the normalisation identities of the submodel weights.
    Audit(AuditArgs),
    /// Emit the full model in its documented JSON layout.
    Model(ModelArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Args)]
struct OutputArgs {
    /// Output format.
    #[arg(long, value_enum, default_value = "csv")]
    format: OutputFormat,
    /// Output file; stdout when omitted. Relative paths resolve against
    /// TWC_OUTPUT_DIR when that variable is set.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct AngleArgs {
    /// Alice's local oscillator phase.
    #[arg(long, default_value_t = 0.0)]
    theta1: f64,
    /// Bob's local oscillator phase.
    #[arg(long, default_value_t = 0.0)]
    theta2: f64,
    /// Interpret all angle flags as degrees (stored artifacts stay in
    /// radians).
    #[arg(long)]
    degrees: bool,
}

impl AngleArgs {
    fn settings(&self) -> Result<Settings, CliError> {
        let scale = if self.degrees { PI / 180.0 } else { 1.0 };
        Settings::new(self.theta1 * scale, self.theta2 * scale)
            .map_err(|e| CliError::invalid_config(e.to_string()))
    }
}

#[derive(Debug, Args)]
struct ProbsArgs {
    /// Squared oscillator amplitude alpha^2 (> 0).
    #[arg(long)]
    alpha_sq: f64,
    #[command(flatten)]
    angles: AngleArgs,
    /// Largest event total kept in the table.
    #[arg(long, default_value_t = DEFAULT_CUTOFF)]
    cutoff: u32,
    /// Add the brute-force amplitude cross-check column.
    #[arg(long)]
    oracle: bool,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[arg(long)]
    alpha_sq: f64,
    #[arg(long, default_value_t = DEFAULT_CUTOFF)]
    cutoff: u32,
    /// Maximum |model - quantum| accepted per event.
    #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
    tolerance: f64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct SampleArgs {
    #[arg(long)]
    alpha_sq: f64,
    #[command(flatten)]
    angles: AngleArgs,
    #[arg(long, default_value_t = DEFAULT_CUTOFF)]
    cutoff: u32,
    /// Number of events to draw.
    #[arg(long)]
    samples: u64,
    /// Stream seed; identical seeds reproduce identical draws.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Emit per-event counts instead of one row per draw.
    #[arg(long)]
    aggregate: bool,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct ChshArgs {
    #[arg(long)]
    alpha_sq: Option<f64>,
    #[arg(long)]
    theta1: Option<f64>,
    #[arg(long)]
    theta1_prime: Option<f64>,
    #[arg(long)]
    theta2: Option<f64>,
    #[arg(long)]
    theta2_prime: Option<f64>,
    #[arg(long)]
    degrees: bool,
    /// Optimise the settings instead of evaluating explicit ones.
    #[arg(long)]
    optimize: bool,
    /// Scan a grid of oscillator strengths with optimised settings.
    #[arg(long)]
    scan: bool,
    #[arg(long, default_value_t = 0.30)]
    grid_start: f64,
    #[arg(long, default_value_t = 0.59)]
    grid_end: f64,
    #[arg(long, default_value_t = 30)]
    grid_points: u32,
    /// Worker pool size for the scan; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    threads: usize,
    #[arg(long, default_value_t = DEFAULT_CUTOFF)]
    cutoff: u32,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct ThresholdArgs {
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct AuditArgs {
    #[arg(long)]
    alpha_sq: f64,
    #[arg(long, default_value_t = DEFAULT_CUTOFF)]
    cutoff: u32,
    #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
    tolerance: f64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct ModelArgs {
    #[arg(long)]
    alpha_sq: f64,
    #[arg(long, default_value_t = DEFAULT_CUTOFF)]
    cutoff: u32,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug)]
struct CliError {
    code: i32,
    message: String,
}

impl CliError {
    fn invalid_config(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_INVALID_CONFIG,
            message: message.into(),
        }
    }

    fn tolerance(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_TOLERANCE_FAILURE,
            message: message.into(),
        }
    }
}

impl From<LhvError> for CliError {
    fn from(e: LhvError) -> Self {
        let code = match e {
            LhvError::ModelInvalid { .. } => EXIT_MODEL_INVALID,
            _ => EXIT_INVALID_CONFIG,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

impl From<QuantumError> for CliError {
    fn from(e: QuantumError) -> Self {
        Self::invalid_config(e.to_string())
    }
}

impl From<analysis::AnalysisError> for CliError {
    fn from(e: analysis::AnalysisError) -> Self {
        match e {
            analysis::AnalysisError::Lhv(inner) => inner.into(),
            other => Self::invalid_config(other.to_string()),
        }
    }
}

/// Parse arguments and run; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version land on stdout with success; real parse
            // errors keep clap's exit code 2.
            let _ = e.print();
            return if e.use_stderr() { EXIT_INVALID_CONFIG } else { EXIT_OK };
        }
    };
    match dispatch(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Probs(args) => cmd_probs(args),
        Command::Verify(args) => cmd_verify(args),
        Command::Sample(args) => cmd_sample(args),
        Command::Chsh(args) => cmd_chsh(args),
        Command::Threshold(args) => cmd_threshold(args),
        Command::Audit(args) => cmd_audit(args),
        Command::Model(args) => cmd_model(args),
    }
}

fn oscillator(alpha_sq: f64) -> Result<OscillatorStrength, CliError> {
    OscillatorStrength::from_alpha_sq(alpha_sq)
        .map_err(|e| CliError::invalid_config(e.to_string()))
}

fn emit(output: &OutputArgs, text: String) -> Result<(), CliError> {
    match &output.output {
        None => {
            print!("{text}");
            Ok(())
        }
        Some(path) => {
            let resolved = if path.is_relative() {
                match std::env::var_os(OUTPUT_DIR_ENV) {
                    Some(dir) => PathBuf::from(dir).join(path),
                    None => path.clone(),
                }
            } else {
                path.clone()
            };
            std::fs::write(&resolved, text).map_err(|e| CliError {
                code: 1,
                message: format!("cannot write {}: {e}", resolved.display()),
            })
        }
    }
}

fn event_fields(n: &Event) -> [String; 4] {
    [
        n.k.to_string(),
        n.l.to_string(),
        n.r.to_string(),
        n.s.to_string(),
    ]
}

fn cmd_probs(args: ProbsArgs) -> Result<(), CliError> {
    let alpha = oscillator(args.alpha_sq)?;
    let settings = args.angles.settings()?;
    let table = quantum::distribution(alpha, settings, args.cutoff)?;
    let oracle = if args.oracle {
        Some(
            quantum::AmplitudeOracle::new(alpha, settings, args.cutoff)
                .map_err(CliError::from)?,
        )
    } else {
        None
    };

    let mut max_deviation = 0.0_f64;
    let mut rows = Vec::with_capacity(table.entries().len());
    for (n, p) in table.entries() {
        let oracle_p = oracle
            .as_ref()
            .map(|o| o.probability(*n).expect("event within the oracle table"));
        if let Some(q) = oracle_p {
            max_deviation = max_deviation.max((p - q).abs());
        }
        rows.push((*n, *p, oracle_p));
    }

    let text = match args.output.format {
        OutputFormat::Csv => {
            let mut w = if args.oracle {
                CsvWriter::new(&["k", "l", "r", "s", "probability", "oracle_probability", "abs_deviation"])
            } else {
                CsvWriter::new(&["k", "l", "r", "s", "probability"])
            };
            for (n, p, oracle_p) in &rows {
                let mut fields: Vec<String> = event_fields(n).into_iter().collect();
                fields.push(fmt_float(*p));
                if let Some(q) = oracle_p {
                    fields.push(fmt_float(*q));
                    fields.push(fmt_float((p - q).abs()));
                }
                w.row(fields);
            }
            eprintln!(
                "probs: {} events, sum = {}, certified tail bound = {}{}",
                rows.len(),
                fmt_float(table.sum()),
                fmt_float(table.tail_bound()),
                if args.oracle {
                    format!(", max oracle deviation = {}", fmt_float(max_deviation))
                } else {
                    String::new()
                }
            );
            w.finish()
        }
        OutputFormat::Json => {
            let entries: Vec<_> = rows
                .iter()
                .map(|(n, p, oracle_p)| {
                    let mut entry = json!({
                        "k": n.k, "l": n.l, "r": n.r, "s": n.s,
                        "probability": p,
                    });
                    if let Some(q) = oracle_p {
                        entry["oracle_probability"] = json!(q);
                    }
                    entry
                })
                .collect();
            let mut results = json!({
                "sum": table.sum(),
                "tail_bound": table.tail_bound(),
                "entries": entries,
            });
            if args.oracle {
                results["max_oracle_deviation"] = json!(max_deviation);
            }
            to_json_text(&json!({
                "command": "probs",
                "parameters": {
                    "alpha_sq": args.alpha_sq,
                    "theta1": settings.theta1(),
                    "theta2": settings.theta2(),
                    "cutoff": args.cutoff,
                    "oracle": args.oracle,
                },
                "results": results,
            }))
        }
    };
    emit(&args.output, text)
}

struct VerifyOutcome {
    per_settings: Vec<(Settings, f64, Event)>,
    max_error: f64,
    worst_event: Event,
    worst_theta12: f64,
    checked_events: usize,
}

fn verify_model(
    alpha: OscillatorStrength,
    cutoff: u32,
) -> Result<VerifyOutcome, CliError> {
    let model = lhv::build_full_model(alpha, cutoff)?;
    let mut per_settings = Vec::with_capacity(VERIFY_THETA12.len());
    let mut max_error = 0.0_f64;
    let mut worst_event = Event::new(0, 0, 0, 0).expect("valid");
    let mut worst_theta12 = 0.0;
    let mut checked_events = 0usize;
    for theta12 in VERIFY_THETA12 {
        let settings = Settings::new(VERIFY_THETA2 + theta12, VERIFY_THETA2)
            .expect("grid angles are finite");
        let mut grid_max = 0.0_f64;
        let mut grid_worst = worst_event;
        for n in events_up_to(cutoff) {
            let p = quantum::event_probability(alpha, settings, n);
            let q = lhv::lhv_event_probability(&model, settings, n)?;
            let err = (p - q).abs();
            if err > grid_max {
                grid_max = err;
                grid_worst = n;
            }
            checked_events += 1;
        }
        if grid_max > max_error {
            max_error = grid_max;
            worst_event = grid_worst;
            worst_theta12 = theta12;
        }
        per_settings.push((settings, grid_max, grid_worst));
    }
    Ok(VerifyOutcome {
        per_settings,
        max_error,
        worst_event,
        worst_theta12,
        checked_events,
    })
}

fn cmd_verify(args: VerifyArgs) -> Result<(), CliError> {
    let alpha = oscillator(args.alpha_sq)?;
    if !(args.tolerance > 0.0) {
        return Err(CliError::invalid_config("tolerance must be positive"));
    }
    let outcome = verify_model(alpha, args.cutoff)?;
    let pass = outcome.max_error < args.tolerance;

    let text = match args.output.format {
        OutputFormat::Csv => {
            let mut w = CsvWriter::new(&[
                "theta1",
                "theta2",
                "theta12",
                "max_abs_error",
                "worst_k",
                "worst_l",
                "worst_r",
                "worst_s",
            ]);
            for (settings, err, worst) in &outcome.per_settings {
                let mut fields = vec![
                    fmt_float(settings.theta1()),
                    fmt_float(settings.theta2()),
                    fmt_float(settings.theta12()),
                    fmt_float(*err),
                ];
                fields.extend(event_fields(worst));
                w.row(fields);
            }
            eprintln!(
                "verify: alpha_sq = {}, max |lhv - quantum| = {} at event {} (theta12 = {}), tolerance = {}: {}",
                args.alpha_sq,
                fmt_float(outcome.max_error),
                outcome.worst_event,
                fmt_float(outcome.worst_theta12),
                fmt_float(args.tolerance),
                if pass { "PASS" } else { "FAIL" }
            );
            w.finish()
        }
        OutputFormat::Json => to_json_text(&json!({
            "command": "verify",
            "parameters": {
                "alpha_sq": args.alpha_sq,
                "cutoff": args.cutoff,
                "tolerance": args.tolerance,
                "theta2": VERIFY_THETA2,
                "theta12_grid": VERIFY_THETA12,
            },
            "results": {
                "max_error": outcome.max_error,
                "max_error_event": {
                    "k": outcome.worst_event.k,
                    "l": outcome.worst_event.l,
                    "r": outcome.worst_event.r,
                    "s": outcome.worst_event.s,
                },
                "max_error_theta12": outcome.worst_theta12,
                "checked_events": outcome.checked_events,
                "pass": pass,
            },
        })),
    };
    emit(&args.output, text)?;
    if pass {
        Ok(())
    } else {
        Err(CliError::tolerance(format!(
            "max |lhv - quantum| = {} exceeds tolerance {}",
            fmt_float(outcome.max_error),
            fmt_float(args.tolerance)
        )))
    }
}

fn cmd_sample(args: SampleArgs) -> Result<(), CliError> {
    let alpha = oscillator(args.alpha_sq)?;
    let settings = args.angles.settings()?;
    let model = lhv::build_full_model(alpha, args.cutoff)?;
    let mut sampler = model.sampler(args.seed)?;
    let draws: Vec<Event> = (0..args.samples).map(|_| sampler.sample(settings)).collect();

    let text = match (args.output.format, args.aggregate) {
        (OutputFormat::Csv, false) => {
            let mut w = CsvWriter::new(&["index", "k", "l", "r", "s"]);
            for (i, n) in draws.iter().enumerate() {
                let mut fields = vec![i.to_string()];
                fields.extend(event_fields(n));
                w.row(fields);
            }
            w.finish()
        }
        (OutputFormat::Csv, true) => {
            let mut counts = std::collections::BTreeMap::new();
            for n in &draws {
                *counts.entry(*n).or_insert(0u64) += 1;
            }
            let mut w = CsvWriter::new(&["k", "l", "r", "s", "count", "frequency"]);
            for (n, count) in counts {
                let mut fields: Vec<String> = event_fields(&n).into_iter().collect();
                fields.push(count.to_string());
                fields.push(fmt_float(count as f64 / args.samples.max(1) as f64));
                w.row(fields);
            }
            w.finish()
        }
        (OutputFormat::Json, aggregate) => {
            let results = if aggregate {
                let mut counts = std::collections::BTreeMap::new();
                for n in &draws {
                    *counts.entry(*n).or_insert(0u64) += 1;
                }
                let rows: Vec<_> = counts
                    .into_iter()
                    .map(|(n, count)| {
                        json!({
                            "k": n.k, "l": n.l, "r": n.r, "s": n.s,
                            "count": count,
                            "frequency": count as f64 / args.samples.max(1) as f64,
                        })
                    })
                    .collect();
                json!({ "aggregated": rows })
            } else {
                let rows: Vec<_> = draws
                    .iter()
                    .map(|n| json!([n.k, n.l, n.r, n.s]))
                    .collect();
                json!({ "events": rows })
            };
            to_json_text(&json!({
                "command": "sample",
                "parameters": {
                    "alpha_sq": args.alpha_sq,
                    "theta1": settings.theta1(),
                    "theta2": settings.theta2(),
                    "cutoff": args.cutoff,
                    "samples": args.samples,
                    "seed": args.seed,
                    "aggregate": args.aggregate,
                },
                "results": results,
            }))
        }
    };
    emit(&args.output, text)
}

fn cmd_chsh(args: ChshArgs) -> Result<(), CliError> {
    if args.scan {
        let points = args.grid_points.max(1) as usize;
        if !(args.grid_start > 0.0) || args.grid_end < args.grid_start {
            return Err(CliError::invalid_config(
                "scan grid must satisfy 0 < grid-start <= grid-end",
            ));
        }
        let grid: Vec<f64> = (0..points)
            .map(|i| {
                if points == 1 {
                    args.grid_start
                } else {
                    args.grid_start
                        + (args.grid_end - args.grid_start) * i as f64 / (points - 1) as f64
                }
            })
            .collect();
        let scan = analysis::violation_window(args.cutoff, &grid, args.threads)?;
        let text = match args.output.format {
            OutputFormat::Csv => {
                let mut w = CsvWriter::new(&[
                    "alpha_sq",
                    "chsh_value",
                    "violation",
                    "visibility",
                    "lhv_max_error",
                    "model_valid",
                ]);
                for row in &scan.rows {
                    w.row([
                        fmt_float(row.alpha_sq),
                        fmt_float(row.chsh_value),
                        row.violation.to_string(),
                        fmt_float(row.visibility),
                        fmt_optional(row.lhv_max_error),
                        row.model_valid.to_string(),
                    ]);
                }
                w.finish()
            }
            OutputFormat::Json => to_json_text(&json!({
                "command": "chsh",
                "parameters": {
                    "mode": "scan",
                    "cutoff": args.cutoff,
                    "grid_start": args.grid_start,
                    "grid_end": args.grid_end,
                    "grid_points": points,
                },
                "results": serde_json::to_value(&scan).expect("serializable"),
            })),
        };
        return emit(&args.output, text);
    }

    let alpha_sq = args
        .alpha_sq
        .ok_or_else(|| CliError::invalid_config("--alpha-sq is required"))?;
    let alpha = oscillator(alpha_sq)?;
    let (settings, value) = if args.optimize {
        analysis::optimize_chsh(alpha, args.cutoff)?
    } else {
        let scale = if args.degrees { PI / 180.0 } else { 1.0 };
        let need = |v: Option<f64>, name: &str| {
            v.map(|x| x * scale).ok_or_else(|| {
                CliError::invalid_config(format!(
                    "--{name} is required unless --optimize or --scan is given"
                ))
            })
        };
        let settings = analysis::ChshSettings::new(
            need(args.theta1, "theta1")?,
            need(args.theta1_prime, "theta1-prime")?,
            need(args.theta2, "theta2")?,
            need(args.theta2_prime, "theta2-prime")?,
        )?;
        let value = analysis::chsh_value(alpha, settings, args.cutoff)?;
        (settings, value)
    };

    let kernel = quantum::CorrelationKernel::new(alpha, args.cutoff)?;
    let correlate = |t1: f64, t2: f64| -> Result<f64, CliError> {
        Ok(kernel.evaluate(t1 - t2).map_err(CliError::from)?.value)
    };
    let e11 = correlate(settings.theta1, settings.theta2)?;
    let e21 = correlate(settings.theta1_prime, settings.theta2)?;
    let e12 = correlate(settings.theta1, settings.theta2_prime)?;
    let e22 = correlate(settings.theta1_prime, settings.theta2_prime)?;

    let text = match args.output.format {
        OutputFormat::Csv => {
            let mut w = CsvWriter::new(&[
                "theta1",
                "theta1_prime",
                "theta2",
                "theta2_prime",
                "e11",
                "e21",
                "e12",
                "e22",
                "chsh_value",
                "violation",
            ]);
            w.row([
                fmt_float(settings.theta1),
                fmt_float(settings.theta1_prime),
                fmt_float(settings.theta2),
                fmt_float(settings.theta2_prime),
                fmt_float(e11),
                fmt_float(e21),
                fmt_float(e12),
                fmt_float(e22),
                fmt_float(value),
                (value.abs() > 2.0).to_string(),
            ]);
            w.finish()
        }
        OutputFormat::Json => to_json_text(&json!({
            "command": "chsh",
            "parameters": {
                "mode": if args.optimize { "optimize" } else { "explicit" },
                "alpha_sq": alpha_sq,
                "cutoff": args.cutoff,
            },
            "results": {
                "settings": {
                    "theta1": settings.theta1,
                    "theta1_prime": settings.theta1_prime,
                    "theta2": settings.theta2,
                    "theta2_prime": settings.theta2_prime,
                },
                "correlations": { "e11": e11, "e21": e21, "e12": e12, "e22": e22 },
                "chsh_value": value,
                "violation": value.abs() > 2.0,
            },
        })),
    };
    emit(&args.output, text)
}

fn cmd_threshold(args: ThresholdArgs) -> Result<(), CliError> {
    let closed = analysis::threshold_alpha_sq(ThresholdMethod::ClosedForm);
    let root = analysis::threshold_alpha_sq(ThresholdMethod::RootFind);
    let difference = (closed - root).abs();
    let text = match args.output.format {
        OutputFormat::Csv => {
            let mut w = CsvWriter::new(&["method", "alpha_sq"]);
            w.row(["closed_form".to_string(), fmt_float(closed)]);
            w.row(["root_find".to_string(), fmt_float(root)]);
            eprintln!(
                "threshold: methods agree to {} (consistent at 1e-9: {})",
                fmt_float(difference),
                difference < 1e-9
            );
            w.finish()
        }
        OutputFormat::Json => to_json_text(&json!({
            "command": "threshold",
            "parameters": {},
            "results": {
                "closed_form": closed,
                "root_find": root,
                "difference": difference,
                "consistent": difference < 1e-9,
            },
        })),
    };
    emit(&args.output, text)
}

fn cmd_audit(args: AuditArgs) -> Result<(), CliError> {
    let alpha = oscillator(args.alpha_sq)?;
    if !(args.tolerance > 0.0) {
        return Err(CliError::invalid_config("tolerance must be positive"));
    }
    let report = analysis::normalization_audit(alpha, args.cutoff, args.tolerance)?;
    let text = match args.output.format {
        OutputFormat::Csv => {
            let mut w = CsvWriter::new(&["identity", "lhs", "rhs", "residual", "pass"]);
            for line in &report.lines {
                w.row([
                    line.name.clone(),
                    fmt_float(line.lhs),
                    fmt_float(line.rhs),
                    fmt_float(line.residual),
                    line.pass.to_string(),
                ]);
            }
            w.finish()
        }
        OutputFormat::Json => to_json_text(&json!({
            "command": "audit",
            "parameters": {
                "alpha_sq": args.alpha_sq,
                "cutoff": args.cutoff,
                "tolerance": args.tolerance,
            },
            "results": serde_json::to_value(&report).expect("serializable"),
        })),
    };
    emit(&args.output, text)?;
    if report.pass {
        Ok(())
    } else {
        let failing: Vec<String> = report
            .lines
            .iter()
            .filter(|l| !l.pass)
            .map(|l| format!("{} (residual {})", l.name, fmt_float(l.residual)))
            .collect();
        Err(CliError::tolerance(format!(
            "normalisation identities failed: {}",
            failing.join("; ")
        )))
    }
}

fn cmd_model(args: ModelArgs) -> Result<(), CliError> {
    let alpha = oscillator(args.alpha_sq)?;
    let model = lhv::build_full_model(alpha, args.cutoff)?;
    let text = match args.output.format {
        OutputFormat::Csv => {
            let mut w = CsvWriter::new(&["kind", "k", "l", "r", "s", "weight"]);
            for sub in model.submodels() {
                let kind = match sub.kind {
                    lhv::SubmodelKind::Larsson => "larsson",
                    lhv::SubmodelKind::Trivial => "trivial",
                };
                let mut fields = vec![kind.to_string()];
                fields.extend(event_fields(&sub.index));
                fields.push(fmt_float(sub.weight));
                w.row(fields);
            }
            eprintln!(
                "model: alpha_sq = {}, cutoff = {}, submodels = {}, weight tail = {}",
                fmt_float(model.alpha_sq()),
                model.cutoff(),
                model.submodels().len(),
                fmt_float(model.weight_tail())
            );
            w.finish()
        }
        OutputFormat::Json => to_json_text(&json!({
            "command": "model",
            "parameters": {
                "alpha_sq": args.alpha_sq,
                "cutoff": args.cutoff,
            },
            "results": model.to_json_value(),
        })),
    };
    emit(&args.output, text)
}
