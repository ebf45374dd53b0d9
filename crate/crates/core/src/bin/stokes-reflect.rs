use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use stokes_reflect::config::ExperimentConfig;
use stokes_reflect::experiments;
use stokes_reflect::{Error, ParticleCloud, Result};

/// Thread-count override, read when `--threads` is absent.
const THREADS_ENV: &str = "STOKES_REFLECT_THREADS";

#[derive(Parser)]
#[command(name = "stokes-reflect", version, about = "Method of reflections and effective viscosity experiments")]
struct Cli {
    /// JSON experiment configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Bit-reproducible summation order.
    #[arg(long, global = true)]
    deterministic: bool,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (defaults to $STOKES_REFLECT_THREADS, then all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Directory for output files.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a particle cloud and print its statistics.
    Generate {
        /// Cloud file to write (default: <out-dir>/cloud.json).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the reflection series on a cloud.
    Reflect {
        /// Cloud file; generated from the configuration when absent.
        #[arg(long)]
        cloud: Option<PathBuf>,
        /// Also solve the dense system and report the deviation.
        #[arg(long)]
        oracle: bool,
        /// Ignore the a³/d³ gate.
        #[arg(long)]
        force: bool,
        #[arg(long)]
        tol: Option<f64>,
        /// Keep exactly this many reflection levels.
        #[arg(long)]
        fixed_n: Option<usize>,
    },
    /// Sweep the Einstein coefficient over volume fractions.
    Einstein {
        #[arg(long, value_delimiter = ',')]
        phis: Option<Vec<f64>>,
    },
    /// Compare the particle system with the homogenized model.
    Compare {
        #[arg(long, value_delimiter = ',')]
        phis: Option<Vec<f64>>,
        #[arg(long)]
        p: Option<f64>,
        #[arg(long)]
        grid_n: Option<usize>,
    },
    /// Check a cloud (if given) and run the built-in invariant suite.
    Validate {
        #[arg(long)]
        cloud: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn init_threads(threads: Option<usize>) -> Result<()> {
    let threads = match threads {
        Some(t) => Some(t),
        None => match std::env::var(THREADS_ENV) {
            Ok(v) => Some(v.parse().map_err(|_| Error::InvalidParameter(format!("{THREADS_ENV}={v} is not a count")))?),
            Err(_) => None,
        },
    };
    if let Some(t) = threads {
        if t == 0 {
            return Err(Error::InvalidParameter("thread count must be >= 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    }
    Ok(())
}

fn output(dir: &Option<PathBuf>, name: &str) -> Result<Option<PathBuf>> {
    match dir {
        Some(d) => {
            std::fs::create_dir_all(d)?;
            Ok(Some(d.join(name)))
        }
        None => Ok(None),
    }
}

fn write_to<F: FnOnce(&mut dyn Write) -> Result<()>>(path: Option<&Path>, f: F) -> Result<()> {
    match path {
        Some(p) => {
            let mut w = BufWriter::new(File::create(p)?);
            f(&mut w)?;
            w.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            f(&mut lock)?;
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<u8> {
    init_threads(cli.threads)?;
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::read(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if cli.deterministic {
        cfg.solver.deterministic = true;
    }
    if cli.out_dir.is_some() {
        cfg.output.dir = cli.out_dir.clone();
    }
    let dir = cfg.output.dir.clone();

    match cli.command {
        Command::Generate { out } => {
            cfg.check()?;
            let (cloud, stats) = experiments::generate(&cfg)?;
            let path = match out {
                Some(p) => p,
                None => output(&dir, "cloud.json")?.unwrap_or_else(|| PathBuf::from("cloud.json")),
            };
            cloud.write(&path)?;
            println!("{}", serde_json::to_string_pretty(&stats)?);
        }
        Command::Reflect { cloud, oracle, force, tol, fixed_n } => {
            if force {
                cfg.solver.force = true;
            }
            if let Some(t) = tol {
                cfg.solver.tol = t;
            }
            if fixed_n.is_some() {
                cfg.solver.fixed_n = fixed_n;
            }
            cfg.check()?;
            let cloud = match cloud {
                Some(p) => ParticleCloud::read(&p)?,
                None => experiments::generate(&cfg)?.0,
            };
            let report = experiments::reflect(&cfg, &cloud, oracle)?;
            let solution = report.solution.to_json()?;
            match output(&dir, "solution.json")? {
                Some(p) => {
                    std::fs::write(&p, solution + "\n")?;
                    write_to(output(&dir, "history.csv")?.as_deref(), |w| experiments::write_history_csv(&report, w))?;
                }
                None => {
                    println!("{solution}");
                    experiments::write_history_csv(&report, io::stderr())?;
                }
            }
            if let Some(dev) = report.oracle_deviation {
                eprintln!("oracle max deviation: {dev:e}");
            }
        }
        Command::Einstein { phis } => {
            if let Some(p) = phis {
                cfg.einstein.phis = p;
            }
            cfg.check()?;
            let rows = experiments::einstein_sweep(&cfg)?;
            write_to(output(&dir, "einstein.csv")?.as_deref(), |w| experiments::write_einstein_csv(&rows, w))?;
        }
        Command::Compare { phis, p, grid_n } => {
            if let Some(v) = phis {
                cfg.compare.phis = v;
            }
            if let Some(v) = p {
                cfg.compare.p = v;
            }
            if let Some(v) = grid_n {
                cfg.grid.n = v;
            }
            cfg.check()?;
            let report = experiments::compare(&cfg)?;
            let json = serde_json::to_string_pretty(&report)?;
            match output(&dir, "compare.json")? {
                Some(path) => {
                    std::fs::write(&path, json + "\n")?;
                    write_to(output(&dir, "compare.csv")?.as_deref(), |w| experiments::write_compare_csv(&report, w))?;
                }
                None => println!("{json}"),
            }
        }
        Command::Validate { cloud } => {
            let mut ok = true;
            if let Some(p) = cloud {
                let cloud = ParticleCloud::read(&p)?;
                let stats = stokes_reflect::cloud::validate(&cloud)?;
                println!("{}", serde_json::to_string_pretty(&stats)?);
            }
            for check in experiments::invariant_suite()? {
                ok &= check.passed;
                println!(
                    "{} {}: error {:e} (tolerance {:e})",
                    if check.passed { "PASS" } else { "FAIL" },
                    check.name,
                    check.error,
                    check.tolerance
                );
            }
            return Ok(if ok { 0 } else { 1 });
        }
    }
    Ok(0)
}
