//! Command-line entry point: batch experiments over JSON scenario files.
//!
//! Output policy: the primary document of every subcommand goes to stdout as
//! JSON, compact by default and pretty-printed with `--pretty`. Diagnostics
//! go to stderr as single-line JSON. Exit codes: 0 success, 1 domain error
//! (for example a non-substitutable model where substitutability is
//! required), 2 usage or scenario-parse error.

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DMatrix;
use serde_json::{json, Value};
use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use crate::analysis::{compare, AnalysisError, CostReport};
use crate::decentralized::{StrategyError, StrategyProfile};
use crate::kalman::{solve_kalman, KalmanError};
use crate::lqr::{solve_centralized_lqr, GainSchedule, LqrError};
use crate::model::{load_scenario, ScenarioConfig, ScenarioError, StrategyKind};
use crate::sim::{save_trace, simulate_with_jobs, SimError};
use crate::substitution::{check_substitutable, generate_substitutable, GeneratorConfig};

#[derive(Parser)]
#[command(
    name = "sublqg",
    version,
    about = "Decentralized LQG synthesis and verification for substitutable systems",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a scenario and report per-controller substitutability
    Check(CheckArgs),
    /// Solve the centralized gain (and optionally filter) schedules
    Solve(SolveArgs),
    /// Run seeded closed-loop simulations and record traces
    Simulate(SimulateArgs),
    /// Compare centralized, decentralized, and zero-baseline costs
    Compare(CompareArgs),
    /// Generate a random substitutable scenario file
    Generate(GenerateArgs),
}

#[derive(Args)]
struct CheckArgs {
    /// Scenario JSON file
    scenario: PathBuf,
    /// Pretty-print the JSON report
    #[arg(long)]
    pretty: bool,
}

#[derive(Args)]
struct SolveArgs {
    /// Scenario JSON file
    scenario: PathBuf,
    /// Also emit the Kalman gain schedule (output-feedback scenarios)
    #[arg(long)]
    filter: bool,
    /// Emit controller i's substituted products Lambda^i K_t alongside K_t
    #[arg(long, value_name = "i")]
    controller: Option<usize>,
    /// Also write the schedules JSON to this file
    #[arg(long, value_name = "path")]
    out: Option<PathBuf>,
    /// Pretty-print the JSON output
    #[arg(long)]
    pretty: bool,
}

#[derive(Args)]
struct SimulateArgs {
    /// Scenario JSON file
    scenario: PathBuf,
    /// Strategy for every controller (overrides the scenario's profile)
    #[arg(long, value_enum)]
    profile: Option<ProfileArg>,
    /// Noise seed (overrides the scenario's seed)
    #[arg(long)]
    seed: Option<u64>,
    /// Number of independent runs (overrides the scenario's num_runs)
    #[arg(long)]
    runs: Option<u32>,
    /// Trace CSV destination (overrides the scenario's outputs.trace_csv)
    #[arg(long, value_name = "path")]
    out: Option<PathBuf>,
    /// Worker threads; 1 keeps runs sequential
    #[arg(long, default_value_t = 1)]
    jobs: u32,
    /// Pretty-print the JSON summary
    #[arg(long)]
    pretty: bool,
}

#[derive(Args)]
struct CompareArgs {
    /// Scenario JSON file
    scenario: PathBuf,
    /// Noise seed shared by all compared profiles
    #[arg(long)]
    seed: Option<u64>,
    /// Number of paired runs per profile (at least 2)
    #[arg(long)]
    runs: Option<u32>,
    /// Per-run paired-cost CSV destination
    #[arg(long, value_name = "path")]
    out: Option<PathBuf>,
    /// Worker threads; 1 keeps runs sequential
    #[arg(long, default_value_t = 1)]
    jobs: u32,
    /// Pretty-print the JSON report
    #[arg(long)]
    pretty: bool,
}

#[derive(Args)]
struct GenerateArgs {
    /// State dimension
    #[arg(long)]
    dx: usize,
    /// Cost output dimension (rows of M and N)
    #[arg(long)]
    dc: usize,
    /// Action block width shared by all controllers
    #[arg(long)]
    w: usize,
    /// Number of controllers
    #[arg(long)]
    n: usize,
    /// Observation rows per controller; omitting keeps state feedback
    #[arg(long)]
    dy: Option<usize>,
    /// Horizon length
    #[arg(long, default_value_t = 10)]
    horizon: usize,
    /// Generator seed
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Scenario JSON destination
    #[arg(long, value_name = "path")]
    out: Option<PathBuf>,
    /// Pretty-print the scenario JSON
    #[arg(long)]
    pretty: bool,
}

/// CLI spelling of [`StrategyKind`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ProfileArg {
    CentralizedSf,
    DecentralizedSf,
    CentralizedOf,
    DecentralizedOf,
    Zero,
}

impl From<ProfileArg> for StrategyKind {
    fn from(arg: ProfileArg) -> Self {
        match arg {
            ProfileArg::CentralizedSf => StrategyKind::CentralizedSf,
            ProfileArg::DecentralizedSf => StrategyKind::DecentralizedSf,
            ProfileArg::CentralizedOf => StrategyKind::CentralizedOf,
            ProfileArg::DecentralizedOf => StrategyKind::DecentralizedOf,
            ProfileArg::Zero => StrategyKind::Zero,
        }
    }
}

/// A failed invocation: exit code plus the single-line JSON diagnostic.
#[derive(Debug)]
struct Failure {
    code: u8,
    kind: &'static str,
    detail: String,
}

impl Failure {
    fn usage(detail: impl Into<String>) -> Self {
        Failure { code: 2, kind: "usage", detail: detail.into() }
    }

    fn parse(detail: impl Into<String>) -> Self {
        Failure { code: 2, kind: "parse", detail: detail.into() }
    }

    fn domain(detail: impl Into<String>) -> Self {
        Failure { code: 1, kind: "domain", detail: detail.into() }
    }

    fn io(detail: impl Into<String>) -> Self {
        Failure { code: 1, kind: "io", detail: detail.into() }
    }
}

impl From<ScenarioError> for Failure {
    fn from(err: ScenarioError) -> Self {
        Failure::parse(err.to_string())
    }
}

impl From<StrategyError> for Failure {
    fn from(err: StrategyError) -> Self {
        Failure::domain(err.to_string())
    }
}

impl From<SimError> for Failure {
    fn from(err: SimError) -> Self {
        Failure::domain(err.to_string())
    }
}

impl From<AnalysisError> for Failure {
    fn from(err: AnalysisError) -> Self {
        Failure::domain(err.to_string())
    }
}

impl From<KalmanError> for Failure {
    fn from(err: KalmanError) -> Self {
        Failure::domain(err.to_string())
    }
}

impl From<LqrError> for Failure {
    fn from(err: LqrError) -> Self {
        Failure::domain(err.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(err: std::io::Error) -> Self {
        Failure::io(err.to_string())
    }
}

/// Parses `argv` and runs the selected subcommand, returning the process
/// exit code. Identical argv and input files produce identical bytes on
/// stdout and in every written artifact.
pub fn run<I, T>(argv: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    ExitCode::from(run_code(argv))
}

fn run_code<I, T>(argv: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(err) if matches!(err.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{err}");
            return 0;
        }
        Err(err) => {
            let failure = Failure::usage(err.to_string());
            eprintln!("{}", json!({ "error": failure.kind, "detail": failure.detail }));
            return failure.code;
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(failure) => {
            eprintln!("{}", json!({ "error": failure.kind, "detail": failure.detail }));
            failure.code
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Check(args) => run_check(args),
        Command::Solve(args) => run_solve(args),
        Command::Simulate(args) => run_simulate(args),
        Command::Compare(args) => run_compare(args),
        Command::Generate(args) => run_generate(args),
    }
}

fn emit_stdout(doc: &Value, pretty: bool) {
    if pretty {
        println!("{}", serde_json::to_string_pretty(doc).expect("serializable"));
    } else {
        println!("{}", serde_json::to_string(doc).expect("serializable"));
    }
}

fn write_json(path: &Path, doc: &Value, pretty: bool) -> Result<(), Failure> {
    let mut text = if pretty {
        serde_json::to_string_pretty(doc).expect("serializable")
    } else {
        serde_json::to_string(doc).expect("serializable")
    };
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

fn matrix_value(m: &DMatrix<f64>) -> Value {
    Value::Array(
        (0..m.nrows())
            .map(|r| Value::Array((0..m.ncols()).map(|c| json!(m[(r, c)])).collect()))
            .collect(),
    )
}

fn matrices_value(ms: &[DMatrix<f64>]) -> Value {
    Value::Array(ms.iter().map(matrix_value).collect())
}

fn to_value<T: serde::Serialize>(doc: &T) -> Value {
    serde_json::to_value(doc).expect("serializable")
}

fn run_check(args: CheckArgs) -> Result<(), Failure> {
    let scenario = load_scenario(&args.scenario)?;
    let model = &scenario.model;
    let subs = check_substitutable(model);
    let per_controller: Vec<Value> = (0..model.num_controllers)
        .map(|i| {
            json!({
                "controller": i,
                "residual": subs.residuals[i],
                "substitutable": subs.per_controller[i],
            })
        })
        .collect();
    let report = json!({
        "mode": to_value(&model.mode()),
        "num_controllers": model.num_controllers,
        "horizon": model.horizon,
        "substitutable": subs.substitutable,
        "tolerance": subs.tolerance,
        "per_controller": per_controller,
    });
    emit_stdout(&report, args.pretty);
    Ok(())
}

fn gain_schedule_value(gains: &GainSchedule) -> Value {
    json!({
        "k": matrices_value(&gains.k),
        "p": matrices_value(&gains.p),
        "singular_steps": gains.singular_steps,
    })
}

fn run_solve(args: SolveArgs) -> Result<(), Failure> {
    let scenario = load_scenario(&args.scenario)?;
    let model = &scenario.model;
    let gains = solve_centralized_lqr(model);
    let mut doc = json!({
        "horizon": model.horizon,
        "mode": to_value(&model.mode()),
        "gain": gain_schedule_value(&gains),
    });
    if args.filter {
        let filter = solve_kalman(model)?;
        doc["filter"] = json!({
            "l": matrices_value(&filter.l),
            "sigma": matrices_value(&filter.sigma),
        });
    }
    if let Some(i) = args.controller {
        if i >= model.num_controllers {
            return Err(Failure::domain(format!(
                "controller index {i} out of range for {} controllers",
                model.num_controllers
            )));
        }
        let subs = check_substitutable(model);
        let lambda = subs.require(i).map_err(StrategyError::from)?;
        let products: Vec<DMatrix<f64>> = gains.k.iter().map(|k| lambda * k).collect();
        doc["controller"] = json!({
            "index": i,
            "residual": subs.residuals[i],
            "lambda": matrix_value(lambda),
            "products": matrices_value(&products),
        });
    }
    emit_stdout(&doc, args.pretty);
    if let Some(path) = &args.out {
        write_json(path, &doc, args.pretty)?;
    }
    Ok(())
}

/// The scenario's strategy, unless the flag overrides it.
fn resolve_profile(
    flag: Option<ProfileArg>,
    scenario: &ScenarioConfig,
) -> Result<StrategyKind, Failure> {
    flag.map(StrategyKind::from)
        .or(scenario.profile)
        .ok_or_else(|| {
            Failure::usage("no profile: pass --profile or set \"profile\" in the scenario")
        })
}

fn run_simulate(args: SimulateArgs) -> Result<(), Failure> {
    let scenario = load_scenario(&args.scenario)?;
    let model = &scenario.model;
    let kind = resolve_profile(args.profile, &scenario)?;
    let seed = args.seed.unwrap_or(scenario.seed);
    let runs = args.runs.unwrap_or(scenario.num_runs);
    let profile = StrategyProfile::build(model, kind)?;
    let set = simulate_with_jobs(model, &profile, seed, runs, args.jobs.max(1) as usize)?;
    let summary = set.summary();
    let doc = to_value(&summary);
    emit_stdout(&doc, args.pretty);
    let trace_path = args
        .out
        .clone()
        .or_else(|| scenario.outputs.trace_csv.as_ref().map(PathBuf::from));
    if let Some(path) = trace_path {
        save_trace(&set, path)?;
    }
    if let Some(path) = &scenario.outputs.summary {
        write_json(Path::new(path), &doc, args.pretty)?;
    }
    Ok(())
}

fn save_paired_costs(report: &CostReport, path: &Path) -> Result<(), Failure> {
    use std::io::Write;
    let file = std::fs::File::create(path)?;
    let mut out = std::io::BufWriter::new(file);
    writeln!(out, "run,centralized,decentralized,zero")?;
    for p in &report.paired {
        writeln!(out, "{},{},{},{}", p.run, p.centralized, p.decentralized, p.zero)?;
    }
    out.flush()?;
    Ok(())
}

fn run_compare(args: CompareArgs) -> Result<(), Failure> {
    let scenario = load_scenario(&args.scenario)?;
    let seed = args.seed.unwrap_or(scenario.seed);
    let runs = args.runs.unwrap_or(scenario.num_runs);
    if runs < 2 {
        return Err(Failure::usage(format!(
            "compare needs --runs of at least 2, got {runs}"
        )));
    }
    let report = compare(&scenario.model, seed, runs, args.jobs.max(1) as usize)?;
    let doc = to_value(&report);
    emit_stdout(&doc, args.pretty);
    if let Some(path) = &args.out {
        save_paired_costs(&report, path)?;
    }
    if let Some(path) = &scenario.outputs.report {
        write_json(Path::new(path), &doc, args.pretty)?;
    }
    Ok(())
}

fn run_generate(args: GenerateArgs) -> Result<(), Failure> {
    for (name, value) in [("--dx", args.dx), ("--dc", args.dc), ("--w", args.w), ("--n", args.n)] {
        if value == 0 {
            return Err(Failure::usage(format!("{name} must be positive")));
        }
    }
    if args.horizon == 0 {
        return Err(Failure::usage("--horizon must be positive"));
    }
    if args.dy == Some(0) {
        return Err(Failure::usage("--dy must be positive when given"));
    }
    let mut config = match args.dy {
        Some(dy) => {
            let mut c = GeneratorConfig::output_feedback(args.dx, args.dc, args.w, args.n);
            c.observation_sizes = Some(vec![dy; args.n]);
            c
        }
        None => GeneratorConfig::state_feedback(args.dx, args.dc, args.w, args.n),
    };
    config.horizon = args.horizon;
    let model = generate_substitutable(&config, args.seed).map_err(StrategyError::from)?;
    let scenario = ScenarioConfig::from_model(model);
    let doc = to_value(&scenario);
    emit_stdout(&doc, args.pretty);
    if let Some(path) = &args.out {
        write_json(path, &doc, args.pretty)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::testutil::{sum_example_of, sum_example_sf};
    use crate::model::{save_scenario, SystemModel};

    fn scenario_file(dir: &tempfile::TempDir, model: SystemModel, name: &str) -> PathBuf {
        let path = dir.path().join(name);
        save_scenario(&ScenarioConfig::from_model(model), &path).unwrap();
        path
    }

    #[test]
    fn profile_arg_values_match_the_documented_spelling() {
        use clap::ValueEnum;
        let spellings: Vec<String> = ProfileArg::value_variants()
            .iter()
            .map(|v| v.to_possible_value().unwrap().get_name().to_string())
            .collect();
        assert_eq!(
            spellings,
            [
                "centralized-sf",
                "decentralized-sf",
                "centralized-of",
                "decentralized-of",
                "zero"
            ]
        );
    }

    #[test]
    fn check_reports_substitutable_models() {
        let dir = tempfile::tempdir().unwrap();
        let path = scenario_file(&dir, sum_example_sf(), "sf.json");
        let args = CheckArgs { scenario: path, pretty: false };
        run_check(args).unwrap();
    }

    #[test]
    fn missing_scenario_is_a_parse_failure() {
        let args = CheckArgs { scenario: PathBuf::from("/nonexistent/x.json"), pretty: false };
        let failure = run_check(args).unwrap_err();
        assert_eq!(failure.code, 2);
        assert_eq!(failure.kind, "parse");
    }

    #[test]
    fn solve_rejects_out_of_range_controllers() {
        let dir = tempfile::tempdir().unwrap();
        let path = scenario_file(&dir, sum_example_sf(), "sf.json");
        let args = SolveArgs {
            scenario: path,
            filter: false,
            controller: Some(7),
            out: None,
            pretty: false,
        };
        let failure = run_solve(args).unwrap_err();
        assert_eq!(failure.code, 1);
    }

    #[test]
    fn solve_filter_needs_an_observation_channel() {
        let dir = tempfile::tempdir().unwrap();
        let path = scenario_file(&dir, sum_example_sf(), "sf.json");
        let args = SolveArgs {
            scenario: path,
            filter: true,
            controller: None,
            out: None,
            pretty: false,
        };
        let failure = run_solve(args).unwrap_err();
        assert_eq!(failure.code, 1);
    }

    #[test]
    fn simulate_needs_some_profile_source() {
        let dir = tempfile::tempdir().unwrap();
        let path = scenario_file(&dir, sum_example_of(), "of.json");
        let args = SimulateArgs {
            scenario: path,
            profile: None,
            seed: None,
            runs: None,
            out: None,
            jobs: 1,
            pretty: false,
        };
        let failure = run_simulate(args).unwrap_err();
        assert_eq!(failure.code, 2);
        assert_eq!(failure.kind, "usage");
    }

    #[test]
    fn compare_insists_on_two_runs() {
        let dir = tempfile::tempdir().unwrap();
        let path = scenario_file(&dir, sum_example_sf(), "sf.json");
        let args = CompareArgs {
            scenario: path,
            seed: None,
            runs: None,
            out: None,
            jobs: 1,
            pretty: false,
        };
        let failure = run_compare(args).unwrap_err();
        assert_eq!(failure.code, 2);
    }

    #[test]
    fn generate_writes_a_loadable_scenario() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("generated.json");
        let args = GenerateArgs {
            dx: 3,
            dc: 2,
            w: 2,
            n: 2,
            dy: Some(1),
            horizon: 5,
            seed: 4,
            out: Some(out.clone()),
            pretty: true,
        };
        run_generate(args).unwrap();
        let scenario = load_scenario(&out).unwrap();
        assert_eq!(scenario.model.horizon, 5);
        assert!(scenario.model.c.is_some());
        let subs = check_substitutable(&scenario.model);
        assert!(subs.substitutable);
    }

    #[test]
    fn help_and_usage_errors_have_their_exit_codes() {
        assert_eq!(run_code(["sublqg", "--help"]), 0);
        assert_eq!(run_code(["sublqg", "frobnicate"]), 2);
        assert_eq!(run_code(["sublqg", "simulate"]), 2);
    }
}
