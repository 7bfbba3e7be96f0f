//! Command-line companion to `stokeslab-core`: loads system definitions
//! from JSON, runs the numbered analyses, and writes deterministic report
//! bundles (report.json, summary.txt, and per-grid CSV files).

pub mod analyses;
pub mod casestudy;
pub mod commands;
pub mod config;
pub mod format;

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use commands::{OptionSet, RunOutput};
use config::{CliError, CliResult, OverrideFile, ProbeSpecFile, SystemFile};

#[derive(Parser, Debug)]
#[command(
    name = "stokeslab",
    version,
    about = "Formal solutions, Borel-Laplace resummation, and Stokes \
             diagnostics for irregular singular ODE systems",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Default)]
struct CommonOpts {
    /// Truncation order (coefficient count); default depends on the command.
    #[arg(long)]
    order: Option<usize>,
    /// Quadrature and integrator tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// Laplace ray direction in radians (resum only).
    #[arg(long)]
    theta: Option<f64>,
    /// Smallest grid point.
    #[arg(long)]
    grid_min: Option<f64>,
    /// Largest grid point.
    #[arg(long)]
    grid_max: Option<f64>,
    /// Number of grid points.
    #[arg(long)]
    grid_points: Option<usize>,
    /// Directory the report files are written into.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Worker threads for grid parallelism; 0 uses all cores.
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Seed recorded in the report (reserved for randomized probes).
    #[arg(long)]
    seed: Option<u64>,
    /// JSON file with numeric options; its values override the flags.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Compute the formal power-series solution of a system.
    Solve {
        /// System definition JSON file.
        system: PathBuf,
        #[command(flatten)]
        opts: CommonOpts,
    },
    /// Estimate the Gevrey order from coefficient growth.
    Gevrey {
        system: PathBuf,
        #[command(flatten)]
        opts: CommonOpts,
    },
    /// Borel-transform the formal solution and locate Pade poles.
    Borel {
        system: PathBuf,
        #[command(flatten)]
        opts: CommonOpts,
    },
    /// Laplace-resum the Borel transform along rays over an x grid.
    Resum {
        system: PathBuf,
        #[command(flatten)]
        opts: CommonOpts,
    },
    /// Measure Stokes jumps across every singular direction.
    Stokes {
        system: PathBuf,
        #[command(flatten)]
        opts: CommonOpts,
    },
    /// Decide the nonresonance criterion from measured jumps.
    SdCheck {
        system: PathBuf,
        #[command(flatten)]
        opts: CommonOpts,
    },
    /// Integrate a trajectory seeded by a partial sum and record
    /// asymptotic diagnostics.
    Trajectory {
        system: PathBuf,
        #[command(flatten)]
        opts: CommonOpts,
    },
    /// Run a quasianalyticity (SQA) or transcendence (SAT) probe.
    Probe {
        system: PathBuf,
        /// Probe specification JSON file.
        spec: PathBuf,
        #[command(flatten)]
        opts: CommonOpts,
    },
    /// Reproduce a named case study with fixed inputs.
    Casestudy {
        /// One of: euler, euler2d, euler-pair, odd-pump, linking,
        /// counterexample.
        name: String,
        #[command(flatten)]
        opts: CommonOpts,
    },
}

impl Command {
    fn common(&self) -> &CommonOpts {
        match self {
            Command::Solve { opts, .. }
            | Command::Gevrey { opts, .. }
            | Command::Borel { opts, .. }
            | Command::Resum { opts, .. }
            | Command::Stokes { opts, .. }
            | Command::SdCheck { opts, .. }
            | Command::Trajectory { opts, .. }
            | Command::Probe { opts, .. }
            | Command::Casestudy { opts, .. } => opts,
        }
    }
}

/// Resolved numeric options plus the execution-environment knobs.
struct Resolved {
    set: OptionSet,
    out: PathBuf,
    threads: usize,
}

fn resolve(common: &CommonOpts) -> CliResult<Resolved> {
    let mut set = OptionSet {
        order: common.order,
        tol: common.tol,
        theta: common.theta,
        grid_min: common.grid_min,
        grid_max: common.grid_max,
        grid_points: common.grid_points,
        seed: common.seed,
    };
    let mut threads = common.threads;
    if let Some(path) = &common.config {
        let overrides = OverrideFile::load(path)?;
        if let Some(t) = overrides.threads {
            threads = t;
        }
        set = set.overlay(&overrides);
    }
    Ok(Resolved { set, out: common.out.clone(), threads })
}

fn dispatch(command: &Command, set: &OptionSet) -> CliResult<RunOutput> {
    match command {
        Command::Solve { system, .. } => {
            commands::solve(&SystemFile::load(system)?, set)
        }
        Command::Gevrey { system, .. } => {
            commands::gevrey(&SystemFile::load(system)?, set)
        }
        Command::Borel { system, .. } => {
            commands::borel(&SystemFile::load(system)?, set)
        }
        Command::Resum { system, .. } => {
            commands::resum(&SystemFile::load(system)?, set)
        }
        Command::Stokes { system, .. } => {
            commands::stokes(&SystemFile::load(system)?, set)
        }
        Command::SdCheck { system, .. } => {
            commands::sd_check(&SystemFile::load(system)?, set)
        }
        Command::Trajectory { system, .. } => {
            commands::trajectory(&SystemFile::load(system)?, set)
        }
        Command::Probe { system, spec, .. } => {
            let sys_file = SystemFile::load(system)?;
            let spec_file = ProbeSpecFile::load(spec)?;
            let origin = spec.display().to_string();
            commands::probe(&sys_file, &spec_file, &origin, set)
        }
        Command::Casestudy { name, .. } => casestudy::run(name, set),
    }
}

fn write_output(out_dir: &Path, output: &RunOutput) -> CliResult<()> {
    fs::create_dir_all(out_dir).map_err(|e| {
        CliError::validation(format!(
            "cannot create output directory {}: {e}",
            out_dir.display()
        ))
    })?;
    let write = |name: &str, content: &str| -> CliResult<()> {
        let path = out_dir.join(name);
        fs::write(&path, content).map_err(|e| {
            CliError::validation(format!("cannot write {}: {e}", path.display()))
        })
    };
    write("report.json", &output.report.render())?;
    write("summary.txt", &output.summary)?;
    for (name, content) in &output.csvs {
        write(name, content)?;
    }
    Ok(())
}

fn execute(cli: &Cli) -> CliResult<()> {
    let resolved = resolve(cli.command.common())?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(resolved.threads)
        .build()
        .map_err(|e| CliError::validation(format!("thread pool: {e}")))?;
    let output = pool.install(|| dispatch(&cli.command, &resolved.set))?;
    write_output(&resolved.out, &output)?;
    print!("{}", output.summary);
    Ok(())
}

/// Parses `args` (including the program name) and runs one command,
/// returning the process exit code: 0 on success, 2 on validation errors,
/// 3 on numeric failures.
pub fn run<I>(args: I) -> i32
where
    I: IntoIterator<Item = String>,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.exit_code()
        }
    }
}
