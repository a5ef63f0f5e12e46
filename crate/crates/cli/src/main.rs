//! `junction`: single runs and parameter sweeps from a TOML config.

mod sweep;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use junction_core::config::{load_config_with_defaults, Config};
use junction_core::error::Category;
use junction_core::model::{NumericsSpec, AMPERES_PER_EV};
use junction_core::transport::{Solution, Solver};
use junction_core::Error;
use serde::Serialize;

use sweep::{Axis, Output, SweepOptions};

/// Overrides the default numerical tolerance; an explicit `numerics.tolerance` wins.
const TOLERANCE_ENV: &str = "JUNCTION_TOLERANCE";

#[derive(Parser)]
#[command(name = "junction", version, about = "Steady-state current through a vibronic molecular chain")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Current, occupation and diagnostics at one parameter point.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Print a JSON report instead of the summary.
        #[arg(long)]
        json: bool,
        /// Write the left-lead correlation function as CSV (tau, re, im).
        #[arg(long, value_name = "PATH")]
        dump_correlation: Option<PathBuf>,
    },
    /// Evaluate a one- or two-axis grid and write CSV.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// NAME:START:STOP:COUNT[:log]; NAME is V, lambda, gamma, T_kelvin, n_sites or rabi_ratio.
        #[arg(long = "axis", value_name = "SPEC")]
        axes: Vec<String>,
        #[arg(long)]
        out: PathBuf,
        /// Worker threads; defaults to the available cores.
        #[arg(long)]
        jobs: Option<usize>,
        /// Recompute correlation functions and resonances at every point.
        #[arg(long)]
        no_cache: bool,
        /// Add current columns in amperes.
        #[arg(long)]
        amperes: bool,
        /// Report failures as JSON on stderr.
        #[arg(long)]
        json: bool,
    },
}

/// Failure carried to the exit code.
struct Failure {
    category: Category,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure {
            category: e.category(),
            message: e.to_string(),
        }
    }
}

impl Failure {
    fn config(message: impl Into<String>) -> Self {
        Failure {
            category: Category::Config,
            message: message.into(),
        }
    }

    fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        Failure::config(format!("{}: {e}", path.display()))
    }

    fn exit_code(&self) -> u8 {
        match self.category {
            Category::Config => 2,
            Category::Quadrature | Category::Eigensolver => 3,
        }
    }
}

fn default_numerics() -> Result<NumericsSpec, Failure> {
    let mut numerics = NumericsSpec::default();
    if let Ok(raw) = std::env::var(TOLERANCE_ENV) {
        numerics.tolerance = raw
            .trim()
            .parse()
            .map_err(|_| Failure::config(format!("{TOLERANCE_ENV}=`{raw}` is not a number")))?;
        numerics
            .validate()
            .map_err(|e| Failure::config(format!("{TOLERANCE_ENV}: {e}")))?;
    }
    Ok(numerics)
}

fn read_config(path: &Path) -> Result<Config, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::io(path, e))?;
    Ok(load_config_with_defaults(&text, &default_numerics()?)?)
}

#[derive(Serialize)]
struct RunReport<'a> {
    j_left_ev: f64,
    j_right_ev: f64,
    j_left_a: f64,
    j_right_a: f64,
    occupation: f64,
    residual: f64,
    converged: bool,
    diagnostics: &'a junction_core::transport::Diagnostics,
}

fn print_summary(s: &Solution) {
    let r = &s.result;
    let d = &r.diagnostics;
    println!("J_L        {} eV  ({} A)", r.j_left, r.j_left * AMPERES_PER_EV);
    println!("J_R        {} eV  ({} A)", r.j_right, r.j_right * AMPERES_PER_EV);
    println!("occupation {}", r.occupation_site1);
    println!("residual   {}", r.conservation_residual);
    println!("converged  {}", d.converged);
    println!("window     [{}, {}] eV, {} points", d.energy_window[0], d.energy_window[1], d.energy_points);
    println!("time step  {}, horizon {}", d.time_step, d.time_horizon);
    println!("errors     correlation {}, tail {}, edge {}", d.correlation_error, d.tail_error, d.window_edge_ratio);
}

fn dump_correlation(path: &Path, s: &Solution) -> Result<(), Failure> {
    let file = File::create(path).map_err(|e| Failure::io(path, e))?;
    let mut w = BufWriter::new(file);
    let c = &s.left_correlation;
    let write = |w: &mut BufWriter<File>| -> std::io::Result<()> {
        writeln!(w, "tau,re,im")?;
        for (k, v) in c.values.iter().enumerate() {
            writeln!(w, "{:?},{:?},{:?}", k as f64 * c.step, v.re, v.im)?;
        }
        w.flush()
    };
    write(&mut w).map_err(|e| Failure::io(path, e))
}

fn run(config: &Path, json: bool, dump: Option<&Path>) -> Result<(), Failure> {
    let cfg = read_config(config)?;
    let solution = Solver::new(cfg.numerics).solve_with_cavity(&cfg.model, cfg.cavity.as_ref())?;
    if !solution.result.diagnostics.converged {
        log::warn!("result did not meet the tolerance; see diagnostics");
    }
    if let Some(path) = dump {
        dump_correlation(path, &solution)?;
    }
    if json {
        let r = &solution.result;
        let report = RunReport {
            j_left_ev: r.j_left,
            j_right_ev: r.j_right,
            j_left_a: r.j_left * AMPERES_PER_EV,
            j_right_a: r.j_right * AMPERES_PER_EV,
            occupation: r.occupation_site1,
            residual: r.conservation_residual,
            converged: r.diagnostics.converged,
            diagnostics: &r.diagnostics,
        };
        println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
    } else {
        print_summary(&solution);
    }
    Ok(())
}

struct SweepArgs {
    config: PathBuf,
    axes: Vec<String>,
    out: PathBuf,
    jobs: Option<usize>,
    no_cache: bool,
    amperes: bool,
}

fn sweep(args: SweepArgs) -> Result<(), Failure> {
    let cfg = read_config(&args.config)?;
    let section = cfg.sweep.clone().unwrap_or_default();
    let specs = if args.axes.is_empty() { &section.axes } else { &args.axes };
    let axes: Vec<Axis> = specs
        .iter()
        .map(|s| s.parse().map_err(Failure::config))
        .collect::<Result<_, _>>()?;
    if !(1..=2).contains(&axes.len()) {
        return Err(Failure::config("a sweep needs one or two axes"));
    }
    if axes.len() == 2 && axes[0].param == axes[1].param {
        return Err(Failure::config("sweep axes must differ"));
    }
    let outputs = match &section.outputs {
        Some(names) => names
            .iter()
            .map(|s| s.parse().map_err(Failure::config))
            .collect::<Result<Vec<Output>, _>>()?,
        None => Output::ALL.to_vec(),
    };
    let jobs = match args.jobs {
        Some(0) => return Err(Failure::config("--jobs must be at least 1")),
        Some(n) => n,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    let solver = if args.no_cache {
        Solver::uncached(cfg.numerics)
    } else {
        Solver::new(cfg.numerics)
    };
    let file = File::create(&args.out).map_err(|e| Failure::io(&args.out, e))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Failure::config(format!("thread pool: {e}")))?;
    let options = SweepOptions {
        outputs,
        amperes: args.amperes,
    };
    let failures = pool
        .install(|| sweep::run_sweep(&cfg, &axes, &solver, &options, BufWriter::new(file)))
        .map_err(|e| Failure::io(&args.out, e))?;
    if failures > 0 {
        log::warn!("{failures} grid point(s) failed; see the error column");
    }
    Ok(())
}

fn report_failure(f: &Failure, json: bool) {
    if json {
        let v = serde_json::json!({ "error": { "category": f.category.as_str(), "message": f.message } });
        eprintln!("{v}");
    } else {
        eprintln!("error[{}]: {}", f.category.as_str(), f.message);
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let (outcome, json) = match cli.command {
        Command::Run {
            config,
            json,
            dump_correlation,
        } => (run(&config, json, dump_correlation.as_deref()), json),
        Command::Sweep {
            config,
            axes,
            out,
            jobs,
            no_cache,
            amperes,
            json,
        } => (
            sweep(SweepArgs {
                config,
                axes,
                out,
                jobs,
                no_cache,
                amperes,
            }),
            json,
        ),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            report_failure(&f, json);
            ExitCode::from(f.exit_code())
        }
    }
}
