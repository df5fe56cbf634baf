//! `sdilab` — simulate prepare-and-measure scenarios, certify statistics,
//! evaluate random-access codes, search detection-loophole attacks, and
//! re-derive every headline number in one command.
//!
//! Exit codes: 0 success, 1 reproduction failure, 2 parse error,
//! 3 scenario invariant violation, 4 insufficient data.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use sdilab_core::attacks::{
    dl_worst_case_search, verify_worst_case_immunity, AttackScenario, ImmunityReport, SearchMode,
    SearchOutcome,
};
use sdilab_core::audit::{
    audit, estimate_from_log, statistical_tolerance, EventLog, RoundOutcome, EXACT_CONDITION_TOL,
};
use sdilab_core::error::Error;
use sdilab_core::rac::{
    brute_force_classical_optimum, factorized_worst_case_optimum, nayak_upper_bound,
    success_report, OptimizationCriterion, RACSpec, SuccessReport,
};
use sdilab_core::reproduce;
use sdilab_core::scenario::{click_table, simulate_dl_full, simulate_ideal};
use sdilab_core::schema::{
    clicks_to_rows, AuditReportDto, ScenarioFile, StatisticsFile, TableDto,
};
use sdilab_core::tables::{ClickTable, ConditionalDistribution, ScenarioDims};

#[derive(Parser)]
#[command(
    name = "sdilab",
    version,
    about = "Semi-device-independent prepare-and-measure lab: simulation, certification, and detection-loophole analysis"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute lossless and post-selected statistics of a scenario file.
    Simulate {
        /// Scenario file (JSON).
        #[arg(long = "in")]
        input: PathBuf,
        /// Report destination; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Audit a statistics file or an event log for loss-robust
    /// non-classicality.
    Certify {
        /// Statistics file (JSON) or event log (`a b outcome` lines).
        #[arg(long = "in")]
        input: PathBuf,
        /// Message dimension to test against.
        #[arg(long, default_value_t = 2)]
        d: usize,
        /// Click-independence tolerance; defaults to 1e-6 for exact tables
        /// and three binomial standard errors for event logs.
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate random-access success figures of a statistics or scenario
    /// file.
    Rac {
        #[arg(long = "in")]
        input: PathBuf,
        /// Also compute brute-force classical optima at this dimension.
        #[arg(long)]
        d: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Search measurement-side efficiency assignments for the strongest
    /// post-selection attack on a scenario.
    Attack {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = ModeArg::Vertex)]
        mode: ModeArg,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-derive every headline number and property suite; prints one
    /// PASS/FAIL line per item.
    Reproduce {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Vertex,
    Grid,
}

impl From<ModeArg> for SearchMode {
    fn from(mode: ModeArg) -> Self {
        match mode {
            ModeArg::Vertex => SearchMode::Vertex,
            ModeArg::Grid => SearchMode::Grid,
        }
    }
}

enum CliError {
    Core(Error),
    Io(PathBuf, std::io::Error),
    Json(PathBuf, serde_json::Error),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(path, e) => write!(f, "{}: {e}", path.display()),
            CliError::Json(path, e) => write!(f, "{}: {e}", path.display()),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

fn exit_code(err: &CliError) -> u8 {
    match err {
        CliError::Io(..) | CliError::Json(..) => 2,
        CliError::Core(Error::Schema(_)) | CliError::Core(Error::LogParse { .. }) => 2,
        CliError::Core(Error::EmptyCell { .. }) => 4,
        CliError::Core(_) => 3,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}

fn run(command: Command) -> Result<u8, CliError> {
    match command {
        Command::Simulate { input, out } => cmd_simulate(&input, out.as_deref()),
        Command::Certify { input, d, tol, out } => cmd_certify(&input, d, tol, out.as_deref()),
        Command::Rac { input, d, out } => cmd_rac(&input, d, out.as_deref()),
        Command::Attack {
            input,
            mode,
            tol,
            out,
        } => cmd_attack(&input, mode.into(), tol, out.as_deref()),
        Command::Reproduce { seed, out } => cmd_reproduce(seed, out.as_deref()),
    }
}

fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Io(path.to_path_buf(), e))
}

fn parse_json<T: serde::de::DeserializeOwned>(path: &Path, text: &str) -> Result<T, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::Json(path.to_path_buf(), e))
}

fn emit<T: Serialize>(report: &T, out: Option<&Path>) -> Result<(), CliError> {
    let mut json = serde_json::to_string_pretty(report)
        .expect("report types serialize without fallible keys");
    json.push('\n');
    match out {
        Some(path) => fs::write(path, json).map_err(|e| CliError::Io(path.to_path_buf(), e)),
        None => {
            print!("{json}");
            Ok(())
        }
    }
}

// ── simulate ────────────────────────────────────────────────────────────

#[derive(Serialize)]
struct SimulateReport {
    ideal: TableDto,
    post_selected: TableDto,
    clicks: Vec<Vec<f64>>,
}

fn cmd_simulate(input: &Path, out: Option<&Path>) -> Result<u8, CliError> {
    let file: ScenarioFile = parse_json(input, &read_text(input)?)?;
    let report = if file.has_quantum_block() {
        // A quantum protocol has no loss channel in this format: the
        // post-selected table equals the Born-rule table.
        let table = sdilab_core::quantum::quantum_statistics(&file.to_quantum()?)?;
        let dims = table.dims();
        SimulateReport {
            ideal: TableDto::from_distribution(&table),
            post_selected: TableDto::from_distribution(&table),
            clicks: vec![vec![1.0; dims.bob_inputs]; dims.alice_inputs],
        }
    } else {
        let scenario = file.to_scenario()?;
        SimulateReport {
            ideal: TableDto::from_distribution(&simulate_ideal(&scenario)?),
            post_selected: TableDto::from_distribution(&simulate_dl_full(&scenario)?),
            clicks: clicks_to_rows(&click_table(&scenario)?),
        }
    };
    emit(&report, out)?;
    Ok(0)
}

// ── certify ─────────────────────────────────────────────────────────────

fn looks_like_json(text: &str) -> bool {
    text.trim_start().starts_with('{')
}

fn infer_log_dims(log: &EventLog, d: usize) -> Result<ScenarioDims, CliError> {
    let mut n_a = 0;
    let mut n_b = 0;
    let mut n_out = 2;
    for round in &log.rounds {
        n_a = n_a.max(round.a + 1);
        n_b = n_b.max(round.b + 1);
        if let RoundOutcome::Click(outcome) = round.outcome {
            n_out = n_out.max(outcome + 1);
        }
    }
    Ok(ScenarioDims::new(n_a.max(1), n_b.max(1), d.max(1), n_out)?)
}

fn cmd_certify(
    input: &Path,
    d: usize,
    tol: Option<f64>,
    out: Option<&Path>,
) -> Result<u8, CliError> {
    let text = read_text(input)?;
    let (table, clicks, default_tol): (ConditionalDistribution, ClickTable, f64) =
        if looks_like_json(&text) {
            let file: StatisticsFile = parse_json(input, &text)?;
            let (table, clicks) = file.to_parts()?;
            (table, clicks, EXACT_CONDITION_TOL)
        } else {
            let log = EventLog::parse(&text)?;
            let dims = infer_log_dims(&log, d)?;
            let (table, clicks) = estimate_from_log(&log, dims)?;
            let mut min_rounds = u64::MAX;
            let mut counts = vec![0u64; dims.cells()];
            for round in &log.rounds {
                counts[round.a * dims.bob_inputs + round.b] += 1;
            }
            for c in counts {
                min_rounds = min_rounds.min(c);
            }
            (table, clicks, statistical_tolerance(min_rounds.max(1)))
        };
    let report = audit(&table, &clicks, d, tol.unwrap_or(default_tol))?;
    emit(&AuditReportDto::from_report(&report), out)?;
    Ok(0)
}

// ── rac ─────────────────────────────────────────────────────────────────

#[derive(Serialize)]
struct RacReport {
    bits: usize,
    message_dim: usize,
    success: SuccessReport,
    /// Worst-case ceiling from the binary-entropy information bound at
    /// m = log2(message_dim).
    information_bound: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    classical: Option<ClassicalReport>,
}

#[derive(Serialize)]
struct ClassicalReport {
    dimension: usize,
    /// Optimal worst case without shared randomness, when known.
    baseline_worst_case: Option<f64>,
    vertex_worst_case: f64,
    hull_worst_case: f64,
    vertex_average: f64,
}

fn rac_task_for(dims: ScenarioDims) -> Result<RACSpec, CliError> {
    let n = dims.bob_inputs;
    let spec = RACSpec::new(n, dims.message_dim)?;
    if spec.dims().alice_inputs != dims.alice_inputs || dims.outcomes != 2 {
        return Err(CliError::Core(Error::DimensionMismatch(format!(
            "dims {dims:?} do not describe an n-bit random access task"
        ))));
    }
    Ok(spec)
}

fn statistics_from_file(path: &Path, text: &str) -> Result<ConditionalDistribution, CliError> {
    let probe: serde_json::Value = parse_json(path, text)?;
    if probe.get("table").is_some() {
        let file: StatisticsFile = parse_json(path, text)?;
        Ok(file.to_parts()?.0)
    } else {
        let file: ScenarioFile = parse_json(path, text)?;
        if file.has_quantum_block() {
            Ok(sdilab_core::quantum::quantum_statistics(&file.to_quantum()?)?)
        } else {
            Ok(simulate_dl_full(&file.to_scenario()?)?)
        }
    }
}

fn cmd_rac(input: &Path, d: Option<usize>, out: Option<&Path>) -> Result<u8, CliError> {
    let table = statistics_from_file(input, &read_text(input)?)?;
    let spec = rac_task_for(table.dims())?;
    let success = success_report(&table, &spec)?;
    let information_bound =
        nayak_upper_bound(spec.bits() as f64, (spec.message_dim() as f64).log2());
    let classical = match d {
        None => None,
        Some(dim) => {
            let worst =
                brute_force_classical_optimum(&spec, dim, OptimizationCriterion::WorstCase)?;
            let average =
                brute_force_classical_optimum(&spec, dim, OptimizationCriterion::Average)?;
            Some(ClassicalReport {
                dimension: dim,
                baseline_worst_case: factorized_worst_case_optimum(&spec, dim),
                vertex_worst_case: worst.vertex_value,
                hull_worst_case: worst.hull_value,
                vertex_average: average.vertex_value,
            })
        }
    };
    let report = RacReport {
        bits: spec.bits(),
        message_dim: spec.message_dim(),
        success,
        information_bound,
        classical,
    };
    emit(&report, out)?;
    Ok(0)
}

// ── attack ──────────────────────────────────────────────────────────────

#[derive(Serialize)]
struct AttackReport {
    verify: ImmunityReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    search: Option<SearchOutcome>,
    #[serde(skip_serializing_if = "Option::is_none")]
    search_note: Option<String>,
}

fn cmd_attack(
    input: &Path,
    mode: SearchMode,
    tol: f64,
    out: Option<&Path>,
) -> Result<u8, CliError> {
    let file: ScenarioFile = parse_json(input, &read_text(input)?)?;
    let scenario = file.to_scenario()?;
    let spec = rac_task_for(scenario.dims())?;
    let tag = input
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "scenario".into());
    let attack = AttackScenario::new(scenario, spec, tag)?;
    let verify = verify_worst_case_immunity(std::slice::from_ref(&attack), tol);
    let (search, search_note) = match dl_worst_case_search(&attack, mode) {
        Ok(outcome) => (Some(outcome), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let report = AttackReport {
        verify,
        search,
        search_note,
    };
    emit(&report, out)?;
    Ok(0)
}

// ── reproduce ───────────────────────────────────────────────────────────

fn cmd_reproduce(seed: u64, out: Option<&Path>) -> Result<u8, CliError> {
    let report = reproduce::run(seed)?;
    print!("{}", report.render_text());
    if out.is_some() {
        emit(&report, out)?;
    }
    Ok(if report.all_passed { 0 } else { 1 })
}
