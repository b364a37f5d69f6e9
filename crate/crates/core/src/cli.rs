//! `erasure-sim` command line.
//!
//! Exit status: 0 success, 1 acceptance failure or I/O error, 2 config or
//! usage error, 3 integration blowup, 4 inconclusive.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::acceptance::{self, Status, ALL, DEFAULT_SEED, QUICK};
use crate::config::{parse_config, RunConfig};
use crate::error::{Error, Result};
use crate::records::{execute, parse_jsonl, to_csv, to_jsonl, to_plot, to_table};

#[derive(Debug, Parser)]
#[command(
    name = "erasure-sim",
    version,
    about = "Thermodynamics of memory erasure: ensembles, sweeps and acceptance checks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one experiment and write its result record.
    Run(RunArgs),
    /// Run a parameter sweep and write one record per grid value.
    Sweep(RunArgs),
    /// Run the built-in acceptance suite.
    Validate(ValidateArgs),
    /// Render a result file as a table, CSV or plot columns.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Override `run.master_seed`.
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,
    /// Worker threads (0 = all cores); never changes results.
    #[arg(long, value_name = "N", default_value_t = 0)]
    workers: usize,
    /// Output file; defaults to `run.output`, else stdout.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ValidateArgs {
    /// Only A1, A4 and A6.
    #[arg(long, conflicts_with = "only")]
    quick: bool,
    /// Comma-separated criterion ids, e.g. `A3,A7`.
    #[arg(long, value_delimiter = ',', value_name = "IDS")]
    only: Vec<String>,
    #[arg(long, value_name = "U64", default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long, value_name = "N", default_value_t = 0)]
    workers: usize,
    /// Also write the result lines here.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Table,
    Csv,
    Plot,
}

#[derive(Debug, Args)]
struct ReportArgs {
    /// Line-delimited result file.
    input: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    format: Format,
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn write_text(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| Error::Io(format!("{}: {e}", p.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
            Ok(())
        }
    }
}

fn load_config(args: &RunArgs, sweep: bool) -> Result<RunConfig> {
    let text = read_text(&args.config).map_err(|e| Error::Config {
        key: "<file>".into(),
        message: e.to_string(),
    })?;
    let mut cfg = parse_config(&text)?;
    if let Some(seed) = args.seed {
        cfg.run.master_seed = seed;
    }
    let exp = cfg.run.experiment;
    if exp.is_sweep() != sweep {
        let (want, have) = if sweep {
            ("sweep", "run")
        } else {
            ("run", "sweep")
        };
        return Err(Error::Usage(format!(
            "`{}` is a {have} experiment; use `erasure-sim {have}` instead of `{want}`",
            exp.as_str()
        )));
    }
    Ok(cfg)
}

fn cmd_run(args: &RunArgs, sweep: bool) -> Result<i32> {
    let cfg = load_config(args, sweep)?;
    let records = execute(&cfg, args.workers)?;
    let out = args
        .out
        .clone()
        .or_else(|| cfg.run.output.as_ref().map(PathBuf::from));
    write_text(out.as_deref(), &to_jsonl(&records)?)?;
    if out.is_some() {
        eprint!("{}", to_table(&records));
    }
    if records.iter().any(|r| r.inconclusive) {
        eprintln!("inconclusive: some grid points lack enough crossings");
        return Ok(4);
    }
    Ok(0)
}

fn cmd_validate(args: &ValidateArgs) -> Result<i32> {
    let ids: Vec<&str> = if args.quick {
        QUICK.to_vec()
    } else if args.only.is_empty() {
        ALL.to_vec()
    } else {
        args.only.iter().map(|s| s.trim()).collect()
    };
    let mut lines = String::new();
    let results = acceptance::run_suite(&ids, args.seed, args.workers, |r| {
        println!("{r}");
        lines.push_str(&format!("{r}\n"));
    })?;
    if let Some(p) = &args.out {
        write_text(Some(p), &lines)?;
    }
    let code = if results.iter().any(|r| r.status == Status::Fail) {
        1
    } else if results.iter().any(|r| r.status == Status::Inconclusive) {
        4
    } else {
        0
    };
    Ok(code)
}

fn cmd_report(args: &ReportArgs) -> Result<i32> {
    let records = parse_jsonl(&read_text(&args.input)?)?;
    let text = match args.format {
        Format::Table => to_table(&records),
        Format::Csv => to_csv(&records),
        Format::Plot => to_plot(&records),
    };
    write_text(args.out.as_deref(), &text)?;
    Ok(0)
}

/// Parse `args` (including the program name), run and return the exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let outcome = match &cli.command {
        Command::Run(a) => cmd_run(a, false),
        Command::Sweep(a) => cmd_run(a, true),
        Command::Validate(a) => cmd_validate(a),
        Command::Report(a) => cmd_report(a),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("erasure-sim: {e}");
            e.exit_code()
        }
    }
}
