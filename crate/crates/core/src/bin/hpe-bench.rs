//! `hpe-bench`: run and compare configured experiments.
//!
//! Exit status: 0 success, 2 bad arguments or config, 3 solver or capability
//! failure, 4 certificate violation.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hpe_accel::bench::{self, merge_traces, read_trace_csv, BenchError, CsvRow, RunSpec};

#[derive(Parser)]
#[command(name = "hpe-bench", version, about = "Run accelerated inexact proximal methods from TOML configs")]
struct Cli {
    /// Directory for trace, summary and report files.
    #[arg(long, global = true, env = "HPE_BENCH_OUT_DIR")]
    out_dir: Option<PathBuf>,
    /// Overrides the problem seed of every config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides the iteration limit of every config.
    #[arg(long, global = true)]
    max_iter: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one config.
    Run { config: PathBuf },
    /// Run several configs on the same problem and merge their traces by k.
    Compare {
        #[arg(required = true)]
        configs: Vec<PathBuf>,
    },
}

struct Loaded {
    path: PathBuf,
    name: String,
    spec: RunSpec,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn config(message: String) -> Self {
        Failure { code: 2, message }
    }
}

impl From<BenchError> for Failure {
    fn from(e: BenchError) -> Self {
        Failure {
            code: e.exit_code() as u8,
            message: e.to_string(),
        }
    }
}

fn load(cli: &Cli, path: &Path) -> Result<Loaded, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::config(format!("{}: {e}", path.display())))?;
    let mut spec = RunSpec::from_toml(&text).map_err(|e| Failure::config(format!("{}: {e}", path.display())))?;
    if let Some(s) = cli.seed {
        *spec.problem.seed_mut() = s;
    }
    if let Some(n) = cli.max_iter {
        spec.stopping.max_iter = n;
    }
    let name = spec.output.name.clone().unwrap_or_else(|| {
        path.file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "run".into())
    });
    Ok(Loaded {
        path: path.to_path_buf(),
        name,
        spec,
    })
}

fn out_dir(cli: &Cli, spec: &RunSpec) -> PathBuf {
    cli.out_dir
        .clone()
        .or_else(|| spec.output.dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}

fn write(path: &Path, contents: &str) -> Result<(), Failure> {
    fs::write(path, contents).map_err(|e| Failure {
        code: 3,
        message: format!("cannot write {}: {e}", path.display()),
    })
}

/// Runs one config, writes its files and returns the trace path and exit status.
fn run_one(cli: &Cli, job: &Loaded) -> Result<(PathBuf, u8), Failure> {
    let dir = out_dir(cli, &job.spec);
    fs::create_dir_all(&dir).map_err(|e| Failure {
        code: 3,
        message: format!("cannot create {}: {e}", dir.display()),
    })?;
    let outcome = bench::execute(job.spec.clone())?;
    let trace_path = dir.join(format!("{}.trace.csv", job.name));
    let csv = bench::trace_csv(&outcome.trace).map_err(|e| Failure {
        code: 3,
        message: e.to_string(),
    })?;
    write(&trace_path, &csv)?;
    let config_path = job.path.display().to_string();
    let summary = bench::summary_json(&outcome, &job.name, Some(&config_path));
    write(
        &dir.join(format!("{}.summary.json", job.name)),
        &serde_json::to_string_pretty(&summary).expect("json"),
    )?;
    let report = bench::report_json(&outcome, &job.name);
    write(
        &dir.join(format!("{}.report.json", job.name)),
        &serde_json::to_string_pretty(&report).expect("json"),
    )?;

    let last_gap = outcome
        .trace
        .records
        .last()
        .and_then(|r| r.value_gap)
        .map_or("n/a".to_string(), |g| format!("{g:.3e}"));
    println!(
        "{}: {} iterations={} termination={:?} final_gap={} violations={}",
        job.name,
        job.spec.algorithm.name(),
        outcome.trace.len(),
        outcome.trace.termination,
        last_gap,
        outcome.certificates.total_violations()
    );
    for name in outcome.certificates.failing() {
        let r = outcome.certificates.report(name).expect("failing report exists");
        let k = r.first_violation().map(|c| c.k).unwrap_or(0);
        eprintln!("bound violated: {name} ({} violations, first at k={k})", r.violations());
    }
    Ok((trace_path, outcome.exit_code() as u8))
}

fn cmd_run(cli: &Cli, config: &Path) -> Result<u8, Failure> {
    let job = load(cli, config)?;
    run_one(cli, &job).map(|(_, code)| code)
}

/// Smallest `K0` with `a[k] <= b[k]` for every common `k >= K0`.
fn dominance_start(a: &[CsvRow], b: &[CsvRow]) -> Option<usize> {
    let n = a.len().min(b.len());
    let mut start = None;
    for i in (0..n).rev() {
        match (a[i].value_gap, b[i].value_gap) {
            (Some(x), Some(y)) if x <= y => start = Some(a[i].k),
            _ => break,
        }
    }
    start
}

fn cmd_compare(cli: &Cli, configs: &[PathBuf]) -> Result<u8, Failure> {
    if configs.len() < 2 {
        return Err(Failure::config("compare needs at least two configs".into()));
    }
    let mut jobs = configs.iter().map(|p| load(cli, p)).collect::<Result<Vec<_>, _>>()?;
    let first = jobs[0].spec.problem.clone();
    if let Some(j) = jobs.iter().find(|j| j.spec.problem != first) {
        return Err(Failure::config(format!(
            "{} describes a different problem than {}",
            j.path.display(),
            jobs[0].path.display()
        )));
    }
    for i in 1..jobs.len() {
        if jobs[..i].iter().any(|j| j.name == jobs[i].name) {
            jobs[i].name = format!("{}_{}", jobs[i].name, i + 1);
        }
    }
    let mut code = 0;
    let mut runs = Vec::new();
    for job in &jobs {
        let (trace_path, c) = run_one(cli, job)?;
        code = code.max(c);
        let file = fs::File::open(&trace_path).map_err(|e| Failure {
            code: 3,
            message: format!("cannot read {}: {e}", trace_path.display()),
        })?;
        let rows = read_trace_csv(file).map_err(|e| Failure {
            code: 3,
            message: format!("{}: {e}", trace_path.display()),
        })?;
        runs.push((job.name.clone(), rows));
    }
    let merged = merge_traces(&runs).map_err(|e| Failure {
        code: 3,
        message: e.to_string(),
    })?;
    let dir = cli.out_dir.clone().unwrap_or_else(|| out_dir(cli, &jobs[0].spec));
    let path = dir.join("compare.csv");
    write(&path, &merged)?;
    for (name, rows) in &runs[1..] {
        match dominance_start(&runs[0].1, rows) {
            Some(k0) => println!("{} value gap <= {} for all k >= {k0}", runs[0].0, name),
            None => println!("{} value gap is not below {} at the last common k", runs[0].0, name),
        }
    }
    println!("merged traces written to {}", path.display());
    Ok(code)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run { config } => cmd_run(&cli, config),
        Command::Compare { configs } => cmd_compare(&cli, configs),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
