use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lltrunc::TruncatedLogLogistic;
use lltrunc::gof::{CriticalTables, Level, TestKind};
use lltrunc::montecarlo::{SimConfig, emit_table, run_cell};
use lltrunc_cli::{CliError, OutputFormat, ReportRow, Result, read_values, render, truncate};

/// Left-truncated log-logistic fitting and goodness-of-fit testing.
#[derive(Parser)]
#[command(name = "lltrunc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit by maximum likelihood at one or more truncation points.
    Fit(FitArgs),
    /// Fit and run the Kolmogorov-Smirnov and Anderson-Darling tests.
    Gof(GofArgs),
    /// Draw a sample by inverse transform.
    Sample(SampleArgs),
    /// Simulate critical values over an (N, p) grid.
    McCritical(McArgs),
}

#[derive(Args)]
struct Common {
    /// Data file: one decimal per line, optional header line.
    #[arg(long)]
    input: PathBuf,
    /// Truncation points; values at or below x_L are dropped.
    #[arg(long, value_delimiter = ',', default_value = "0")]
    xl: Vec<f64>,
    #[arg(long, value_enum, default_value = "table")]
    format: OutputFormat,
    /// Confidence levels in percent.
    #[arg(long, value_delimiter = ',', default_value = "95")]
    levels: Vec<Level>,
    /// Write to this file instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FitArgs {
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct GofArgs {
    #[command(flatten)]
    common: Common,
    /// Critical-value table replacing the embedded one.
    #[arg(long)]
    tables: Option<PathBuf>,
}

#[derive(Args)]
struct SampleArgs {
    #[arg(long)]
    alpha: f64,
    #[arg(long)]
    beta: f64,
    #[arg(long, default_value = "0")]
    xl: f64,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value = "1")]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct McArgs {
    /// Sample sizes.
    #[arg(long, value_delimiter = ',', required = true)]
    n: Vec<usize>,
    /// Truncation fractions p in [0, 1).
    #[arg(long, value_delimiter = ',', default_value = "0")]
    p_grid: Vec<f64>,
    #[arg(long, default_value = "10000")]
    reps: usize,
    #[arg(long, default_value = "1")]
    seed: u64,
    /// Shape of the generating distribution.
    #[arg(long, default_value = "1")]
    beta_gen: f64,
    #[arg(long, value_delimiter = ',', default_value = "85,90,95,99")]
    levels: Vec<Level>,
    #[arg(long, default_value_t = default_workers())]
    workers: usize,
    /// Where to write the critical-value table.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Directory for raw statistics, one value per line per file.
    #[arg(long)]
    raw: Option<PathBuf>,
    /// Suppress progress on standard error.
    #[arg(long)]
    quiet: bool,
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn write_output(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|source| CliError::Io {
            path: path.display().to_string(),
            source,
        }),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .map_err(|source| CliError::Io {
                    path: "<stdout>".into(),
                    source,
                })
        }
    }
}

fn report(common: &Common, tables: Option<&CriticalTables>) -> Result<()> {
    let values = read_values(&common.input)?;
    let name = common.input.display().to_string();
    let mut rows = Vec::with_capacity(common.xl.len());
    for &x_l in &common.xl {
        let ing = truncate(&values, x_l, &name)?;
        if ing.dropped > 0 {
            eprintln!("x_L = {x_l}: dropped {} of {} values", ing.dropped, values.len());
        }
        rows.push(ReportRow::build(&ing, tables)?);
    }
    let text = render(&rows, &common.levels, common.format);
    write_output(common.out.as_deref(), &text)
}

fn load_tables(path: &Path) -> Result<CriticalTables> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(CriticalTables::parse(&text)?)
}

fn cmd_sample(a: &SampleArgs) -> Result<()> {
    let d = TruncatedLogLogistic::new(a.alpha, a.beta, a.xl)?;
    let mut text = String::with_capacity(a.n * 20);
    for x in d.sample(a.n, a.seed)? {
        text.push_str(&x.to_string());
        text.push('\n');
    }
    write_output(a.out.as_deref(), &text)
}

fn cmd_mc(a: &McArgs) -> Result<()> {
    let mut cells = Vec::new();
    let mut summary = String::from("N\tp\tkept\tdiscarded\tfailed\tdiscard_frac");
    for l in &a.levels {
        summary += &format!("\tKS{p}\tAD{p}", p = l.percent());
    }
    summary.push('\n');
    for &p in &a.p_grid {
        for &n in &a.n {
            let cfg = SimConfig {
                n,
                reps: a.reps,
                p,
                beta_gen: a.beta_gen,
                levels: a.levels.clone(),
                master_seed: a.seed,
                workers: a.workers,
                progress: !a.quiet,
            };
            let cell = run_cell(&cfg)?;
            summary += &format!(
                "{n}\t{p}\t{}\t{}\t{}\t{:.4}",
                cell.kept,
                cell.discarded,
                cell.failed,
                cell.discarded_fraction()
            );
            for &l in &a.levels {
                for t in TestKind::ALL {
                    let e = cell.estimate(t, l).expect("level was simulated");
                    summary += &format!("\t{:.4}±{:.4}", e.quantile, e.std_err);
                }
            }
            summary.push('\n');
            if let Some(dir) = &a.raw {
                write_raw(dir, &cell)?;
            }
            cells.push(cell);
        }
    }
    let (table, missing) = emit_table(&cells);
    for (p, n) in missing {
        eprintln!("warning: grid point p = {p}, N = {n} was not simulated");
    }
    write_output(None, &summary)?;
    let asset = table.to_string();
    match &a.out {
        Some(path) => write_output(Some(path), &asset),
        None => write_output(None, &asset),
    }
}

fn write_raw(dir: &Path, cell: &lltrunc::montecarlo::CellResult) -> Result<()> {
    let io = |source| CliError::Io {
        path: dir.display().to_string(),
        source,
    };
    std::fs::create_dir_all(dir).map_err(io)?;
    let c = &cell.config;
    for (name, values) in [("ks", &cell.ks_values), ("ad", &cell.ad_values)] {
        let text: String = values.iter().map(|v| format!("{v}\n")).collect();
        let path = dir.join(format!("{name}_n{}_p{}.txt", c.n, c.p));
        std::fs::write(&path, text).map_err(|source| CliError::Io {
            path: path.display().to_string(),
            source,
        })?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Fit(a) => report(&a.common, None),
        Command::Gof(a) => match &a.tables {
            Some(path) => report(&a.common, Some(&load_tables(path)?)),
            None => report(&a.common, Some(CriticalTables::embedded())),
        },
        Command::Sample(a) => cmd_sample(&a),
        Command::McCritical(a) => cmd_mc(&a),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
