//! The `tripletflow` command line: the Rellich run, verification suites and family indices.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use tripletflow_core::famindex::{
    relation_family_index, verify_index_theorem, FlowReport, IndexReport, LoopLiteral, RobinLoop, DEFAULT_BUDGET,
};
use tripletflow_core::relspace::DEFAULT_TOL;
use tripletflow_core::suites::{run_suite, SuiteConfig, SuiteReport};
use tripletflow_core::sturm::DEFAULT_LAMBDA_MAX;
use tripletflow_core::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

pub const BRANCHES_CSV: &str = "rellich_branches.csv";
pub const BRANCHES_JSON: &str = "rellich_branches.json";
pub const INDEX_JSON: &str = "rellich_index.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "tripletflow", version, about = "Boundary triplets, Weyl functions and spectral flow of self-adjoint families")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Number of base samples on the circle
    #[arg(long, global = true, default_value_t = 720, value_parser = clap::value_parser!(u64).range(8..))]
    pub samples: u64,
    /// Upper end of the eigenvalue window
    #[arg(long, global = true, default_value_t = DEFAULT_LAMBDA_MAX)]
    pub lambda_max: f64,
    /// Tolerance override
    #[arg(long, global = true, env = "TRIPLETFLOW_TOL")]
    pub tol: Option<f64>,
    #[arg(long, global = true, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, global = true, default_value_t = 50, value_parser = clap::value_parser!(u64).range(1..))]
    pub trials: u64,
    /// Output directory for `rellich`, output file for `verify` and `index`
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Spectral flow and Cayley winding of the Rellich family
    Rellich,
    /// Run a verification suite
    Verify {
        #[arg(long, default_value = "all")]
        suite: String,
    },
    /// Index of a built-in Robin loop or of a loop file
    Index {
        #[arg(long)]
        family: String,
    },
}

#[derive(Debug)]
pub enum CliError {
    Input(String),
    Failure(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => EXIT_INPUT,
            CliError::Failure(_) => EXIT_FAIL,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Input(m) => write!(f, "input error: {m}"),
            CliError::Failure(m) => write!(f, "error: {m}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Input(_) | Error::Dimension(_) | Error::NotSelfAdjoint(_) => CliError::Input(e.to_string()),
            _ => CliError::Failure(e.to_string()),
        }
    }
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Input(format!("{}: {e}", path.display()))
}

/// Text written to stdout and the exit code.
#[derive(Debug)]
pub struct Outcome {
    pub stdout: String,
    pub code: i32,
}

fn check_tol(tol: Option<f64>) -> Result<(), CliError> {
    match tol {
        Some(t) if !(t > 0.0 && t.is_finite()) => Err(CliError::Input(format!("tolerance must be positive, got {t}"))),
        _ => Ok(()),
    }
}

pub fn run(cli: &Cli) -> Result<Outcome, CliError> {
    check_tol(cli.tol)?;
    if !(cli.lambda_max > 0.0 && cli.lambda_max.is_finite()) {
        return Err(CliError::Input(format!("lambda-max must be positive, got {}", cli.lambda_max)));
    }
    match &cli.command {
        Command::Rellich => cmd_rellich(cli),
        Command::Verify { suite } => cmd_verify(cli, suite),
        Command::Index { family } => cmd_index(cli, family),
    }
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("serializable report") + "\n"
}

fn float(x: f64) -> String {
    if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

#[derive(Serialize)]
struct BranchRow {
    theta: f64,
    kappa: Option<f64>,
    branch_id: usize,
    lambda: f64,
}

pub fn branches_csv(fam: &RobinLoop, flow: &FlowReport) -> String {
    let mut out = String::from("theta,kappa,branch_id,lambda\n");
    for s in &flow.samples {
        let k = fam.kappa(s.theta);
        for &(id, l) in &s.points {
            let _ = writeln!(out, "{},{},{},{}", float(s.theta), float(k), id, float(l));
        }
    }
    out
}

fn branches_json(fam: &RobinLoop, flow: &FlowReport) -> String {
    let rows: Vec<BranchRow> = flow
        .samples
        .iter()
        .flat_map(|s| {
            let k = fam.kappa(s.theta);
            s.points.iter().map(move |&(id, l)| BranchRow {
                theta: s.theta,
                kappa: k.is_finite().then_some(k),
                branch_id: id,
                lambda: l,
            })
        })
        .collect();
    to_json(&rows)
}

/// Index report and branch data of the Rellich family at the given resolution.
pub fn rellich_report(samples: usize, lambda_max: f64) -> Result<(RobinLoop, IndexReport, FlowReport), CliError> {
    let fam = RobinLoop::rellich(lambda_max);
    let (report, flow) = verify_index_theorem(&fam, samples, DEFAULT_BUDGET)?;
    Ok((fam, report, flow))
}

fn rellich_ok(r: &IndexReport) -> bool {
    r.consistent && r.spectral_flow.map(i64::abs) == Some(1) && r.winding.map(i64::abs) == Some(1)
}

pub fn cmd_rellich(cli: &Cli) -> Result<Outcome, CliError> {
    let (fam, report, flow) = rellich_report(cli.samples as usize, cli.lambda_max)?;
    let dir = cli.out.clone().unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir).map_err(|e| io_err(&dir, e))?;
    let (name, body) = match cli.format {
        Format::Csv => (BRANCHES_CSV, branches_csv(&fam, &flow)),
        Format::Json => (BRANCHES_JSON, branches_json(&fam, &flow)),
    };
    let bpath = dir.join(name);
    fs::write(&bpath, body).map_err(|e| io_err(&bpath, e))?;
    let json = to_json(&report);
    let ipath = dir.join(INDEX_JSON);
    fs::write(&ipath, &json).map_err(|e| io_err(&ipath, e))?;
    Ok(Outcome { stdout: json, code: if rellich_ok(&report) { EXIT_OK } else { EXIT_FAIL } })
}

#[derive(Serialize)]
struct VerifyOutput<'a> {
    suites: &'a [SuiteReport],
    pass: bool,
}

pub fn verify_csv(reports: &[SuiteReport]) -> String {
    let mut out = String::from("suite,check,residual,tol,pass\n");
    for r in reports {
        for c in &r.checks {
            let name = c.name.replace('"', "'");
            let _ = writeln!(out, "{},\"{}\",{},{},{}", r.suite, name, float(c.residual), float(c.tol), c.pass);
        }
    }
    out
}

pub fn cmd_verify(cli: &Cli, suite: &str) -> Result<Outcome, CliError> {
    let cfg = SuiteConfig { seed: cli.seed, trials: cli.trials as usize, tol: cli.tol };
    let reports = run_suite(suite, &cfg)?;
    let pass = reports.iter().all(|r| r.pass);
    let body = match cli.format {
        Format::Json => to_json(&VerifyOutput { suites: &reports, pass }),
        Format::Csv => verify_csv(&reports),
    };
    emit(cli, body, if pass { EXIT_OK } else { EXIT_FAIL })
}

fn emit(cli: &Cli, body: String, code: i32) -> Result<Outcome, CliError> {
    match &cli.out {
        Some(p) => {
            fs::write(p, &body).map_err(|e| io_err(p, e))?;
            Ok(Outcome { stdout: String::new(), code })
        }
        None => Ok(Outcome { stdout: body, code }),
    }
}

/// Built-in loops are computed with both spectral flow and winding; loop files give the winding only.
pub fn family_index(family: &str, samples: usize, lambda_max: f64, tol: Option<f64>) -> Result<IndexReport, CliError> {
    if RobinLoop::NAMES.contains(&family) {
        let fam = RobinLoop::by_name(family, lambda_max)?;
        let (report, _) = verify_index_theorem(&fam, samples, DEFAULT_BUDGET)?;
        return Ok(report);
    }
    let path = Path::new(family);
    if !path.exists() {
        return Err(CliError::Input(format!(
            "'{family}' is neither a built-in family ({}) nor a readable file",
            RobinLoop::NAMES.join(", ")
        )));
    }
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let lit: LoopLiteral =
        serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let lp = lit.to_loop(tol.unwrap_or(DEFAULT_TOL))?;
    let w = relation_family_index(&lp)?;
    Ok(IndexReport::new(None, Some(w)))
}

pub fn cmd_index(cli: &Cli, family: &str) -> Result<Outcome, CliError> {
    let report = family_index(family, cli.samples as usize, cli.lambda_max, cli.tol)?;
    let code = if report.consistent { EXIT_OK } else { EXIT_FAIL };
    emit(cli, to_json(&report), code)
}

/// Parses arguments, runs and reports; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    match run(&cli) {
        Ok(o) => {
            print!("{}", o.stdout);
            o.code
        }
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}
