use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use cuckoo_paging::harness::{
    self, write_csv, write_fit_json, write_json, write_series_csv, ExperimentKind, ExperimentReport,
    ExperimentSpec, LoadGrid,
};
use cuckoo_paging::{Config, Error, WalkParams};

/// Experiments for cuckoo hashing with primary and backup pages.
#[derive(Parser)]
#[command(name = "cuckoo-paging", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Offline failure rate over a load sweep, with a sigmoid fit.
    Threshold(Common),
    /// Offline primary fractions and backup spill per page.
    Offline(Common),
    /// Online random-walk insertion runs.
    Randomwalk(Common),
    /// Random-walk runs over a grid of coin biases.
    BiasSweep(Common),
    /// Insertions followed by alternating deletions and insertions.
    Dynamics(Common),
    /// Offline solves on single-cell pages of capacity ell; loads are given
    /// per key slot (c / ell).
    Smallpages(Common),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct Common {
    /// Load factor(s), comma separated.
    #[arg(long, value_delimiter = ',')]
    c: Vec<f64>,
    /// First load factor of a sweep.
    #[arg(long, requires_all = ["c_end", "c_step"], conflicts_with = "c")]
    c_start: Option<f64>,
    /// Last load factor of a sweep.
    #[arg(long, requires = "c_start")]
    c_end: Option<f64>,
    /// Sweep step.
    #[arg(long, requires = "c_start")]
    c_step: Option<f64>,
    /// Number of cells.
    #[arg(long, default_value_t = 100_000)]
    m: u32,
    /// Page size in cells.
    #[arg(long)]
    s: Option<u32>,
    /// Primary choices per key.
    #[arg(long)]
    kp: Option<u32>,
    /// Backup choices per key.
    #[arg(long)]
    kb: Option<u32>,
    /// Keys per cell.
    #[arg(long)]
    ell: Option<u32>,
    /// Probability that a blocked walk stays on the primary page.
    #[arg(long)]
    a_bias: Option<f64>,
    /// Coin biases for bias-sweep, comma separated.
    #[arg(long, value_delimiter = ',')]
    a_values: Vec<f64>,
    /// Step budget per key; `inf` for no budget.
    #[arg(long, value_parser = parse_factor)]
    b_factor: Option<f64>,
    /// Trials per point.
    #[arg(long, default_value_t = 30)]
    trials: u32,
    /// Seed of trial 0; trial i uses seed + i.
    #[arg(long, default_value_t = 1)]
    seed: u32,
    /// Output file; standard output when absent. Fits and dynamics curves
    /// go to `<out>.fit.json` and `<out>.series.csv`.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Failure probability to test when a random-walk run has no failures.
    #[arg(long)]
    hypothesis_p: Option<f64>,
    /// Delete-insert pairs in the dynamics phase (default n).
    #[arg(long)]
    pairs: Option<u32>,
    /// Check table legality after every dynamics operation.
    #[arg(long)]
    check_legality: bool,
    /// Hash functions of the per-page filters.
    #[arg(long, default_value_t = 3)]
    hashes: u32,
}

fn parse_factor(s: &str) -> Result<f64, String> {
    match s {
        "inf" | "infinity" | "∞" => Ok(f64::INFINITY),
        _ => s.parse::<f64>().map_err(|e| e.to_string()),
    }
}

/// Per-command defaults: (c, s, kp, kb, ell, a, b).
struct Defaults {
    c: &'static [f64],
    s: u32,
    kp: u32,
    kb: u32,
    ell: u32,
    a: f64,
    b: f64,
}

fn defaults(kind: ExperimentKind) -> Defaults {
    let base = Defaults {
        c: &[0.95],
        s: 1000,
        kp: 3,
        kb: 1,
        ell: 1,
        a: 0.97,
        b: 30.0,
    };
    match kind {
        ExperimentKind::ThresholdSweep => Defaults { s: 100, ..base },
        ExperimentKind::RandomWalk => Defaults {
            b: f64::INFINITY,
            ..base
        },
        ExperimentKind::SmallPages => Defaults {
            s: 1,
            kp: 1,
            ell: 10,
            ..base
        },
        _ => base,
    }
}

fn build_spec(kind: ExperimentKind, args: &Common) -> Result<ExperimentSpec, Error> {
    let d = defaults(kind);
    let ell = args.ell.unwrap_or(d.ell);
    // Small-page loads are per key slot; the table works in keys per cell.
    let scale = if kind == ExperimentKind::SmallPages {
        f64::from(ell)
    } else {
        1.0
    };
    let loads = match (args.c_start, args.c_end, args.c_step) {
        (Some(start), Some(end), Some(step)) => LoadGrid::Sweep {
            c_start: start * scale,
            c_end: end * scale,
            c_step: step * scale,
        },
        _ if !args.c.is_empty() => LoadGrid::List(args.c.iter().map(|c| c * scale).collect()),
        _ if kind == ExperimentKind::ThresholdSweep => LoadGrid::Sweep {
            c_start: 0.96,
            c_end: 0.99,
            c_step: 0.001,
        },
        _ => LoadGrid::List(d.c.iter().map(|c| c * scale).collect()),
    };
    let first = loads.points().first().copied().unwrap_or(0.0);
    let config = Config {
        c: first,
        m: args.m,
        s: args.s.unwrap_or(d.s),
        kp: args.kp.unwrap_or(d.kp),
        kb: args.kb.unwrap_or(d.kb),
        ell,
    };
    let mut spec = ExperimentSpec::new(kind, config);
    spec.loads = loads;
    if kind.is_online() {
        spec.walk = Some(WalkParams::new(
            args.a_bias.unwrap_or(d.a),
            args.b_factor.unwrap_or(d.b),
        )?);
    }
    if kind == ExperimentKind::BiasSweep {
        spec.a_values = if args.a_values.is_empty() {
            (70..=99).map(|i| f64::from(i) / 100.0).collect()
        } else {
            args.a_values.clone()
        };
    }
    spec.trials = args.trials;
    spec.seed_base = args.seed;
    spec.hypothesis_p = args.hypothesis_p;
    spec.dynamics_pairs = args.pairs;
    spec.check_legality = args.check_legality;
    spec.filter_hashes = args.hashes;
    spec.validate()?;
    Ok(spec)
}

fn sidecar(out: &Path, suffix: &str) -> PathBuf {
    let mut name = out.file_stem().unwrap_or_default().to_os_string();
    name.push(suffix);
    out.with_file_name(name)
}

fn write_outputs(report: &ExperimentReport, out: Option<&Path>, format: Format) -> Result<(), Error> {
    let write_main = |w: &mut dyn Write| -> Result<(), Error> {
        match format {
            Format::Csv => write_csv(report, w),
            Format::Json => write_json(report, w),
        }
    };
    match out {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path)?);
            write_main(&mut w)?;
            w.flush()?;
            if matches!(format, Format::Csv) {
                if report.fit.is_some() {
                    let mut f = BufWriter::new(File::create(sidecar(path, ".fit.json"))?);
                    write_fit_json(report, &mut f)?;
                    f.flush()?;
                }
                if report.dynamics.is_some() {
                    let mut f = BufWriter::new(File::create(sidecar(path, ".series.csv"))?);
                    write_series_csv(report, &mut f)?;
                    f.flush()?;
                }
            }
        }
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            write_main(&mut w)?;
            if matches!(format, Format::Csv) {
                write_fit_json(report, io::stderr())?;
            }
            w.flush()?;
        }
    }
    Ok(())
}

fn summarize(report: &ExperimentReport) {
    let seconds: f64 = report.points.iter().map(|p| p.seconds).sum();
    eprintln!(
        "{}: {} point(s), {} trial(s) each, {seconds:.1}s",
        report.spec.kind,
        report.points.len(),
        report.spec.trials
    );
    if let Some(err) = &report.fit_error {
        eprintln!("fit refused: {err}");
    }
    if let Some(fit) = &report.fit {
        eprintln!("transition x = {:.6} (y = {:.3e})", fit.x, fit.y);
    }
    if let Some(sig) = &report.significance {
        eprintln!(
            "no failures in {} trials: (1-p)^a = {:.3e}, exp(-p a) = {:.3e}",
            sig.trials, sig.exact, sig.bound
        );
    }
    if let Some(d) = &report.dynamics {
        eprintln!(
            "steps per key: end of insertion phase {:.2}, alternating phase {:.2}",
            d.phase1_final_st_key, d.phase2_mean_st_key
        );
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, args) = match &cli.command {
        Command::Threshold(a) => (ExperimentKind::ThresholdSweep, a),
        Command::Offline(a) => (ExperimentKind::OfflineFrac, a),
        Command::Randomwalk(a) => (ExperimentKind::RandomWalk, a),
        Command::BiasSweep(a) => (ExperimentKind::BiasSweep, a),
        Command::Dynamics(a) => (ExperimentKind::Dynamics, a),
        Command::Smallpages(a) => (ExperimentKind::SmallPages, a),
    };
    let spec = match build_spec(kind, args) {
        Ok(spec) => spec,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let report = match harness::run(&spec) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    summarize(&report);
    if let Err(e) = write_outputs(&report, args.out.as_deref(), args.format) {
        eprintln!("error: {e}");
        return ExitCode::FAILURE;
    }
    ExitCode::SUCCESS
}
