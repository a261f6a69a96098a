use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context as _};
use clap::{Parser, Subcommand, ValueEnum};
use compactlab::container::{read_array, read_frame, write_array, Array, DType};
use compactlab::families::gaussian_state;
use compactlab::magweyl::opweyl::{op_weyl, Symbol};
use compactlab::magweyl::weyl::weyl_family;
use compactlab::sigma::SigmaFunction;
use compactlab::Complex64;
use compactlab_cli::config::{parse, validate, ExperimentConfig, SetupConfig};
use compactlab_cli::runner::{render, run, RunError};
use compactlab_cli::scenarios::{find, SCENARIOS};

/// Compactness diagnostics for magnetic Weyl frames and quantizations.
#[derive(Parser)]
#[command(name = "compactlab", version)]
struct Cli {
    /// Worker threads for parallel kernels.
    #[arg(long, global = true, env = "COMPACTLAB_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Run a configuration file or a built-in scenario.
    Run {
        #[arg(long, conflicts_with = "scenario", required_unless_present = "scenario")]
        config: Option<PathBuf>,
        #[arg(long)]
        scenario: Option<String>,
        /// Overrides the configured seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the configured output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Frame container (with its `.sigma.json` sidecar) used instead of
        /// the calibrated Weyl frame.
        #[arg(long)]
        frame: Option<PathBuf>,
    },
    /// Check a configuration file without running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// List the built-in scenarios.
    ListScenarios {
        /// Print the full configuration of each scenario.
        #[arg(long)]
        json: bool,
    },
    /// Quantize a coefficient function on the calibrated Weyl frame index space.
    Quantize {
        /// Setup configuration (JSON, same schema as the `setup` block).
        #[arg(long)]
        pi: PathBuf,
        /// Container holding one coefficient per phase-space lattice point.
        #[arg(long)]
        symbol: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = DTypeArg::C64)]
        dtype: DTypeArg,
        /// Gaussian window width used for calibration.
        #[arg(long, default_value_t = 1.0)]
        window_width: f64,
    },
    /// Magnetic Weyl calculus tools.
    Magweyl {
        #[command(subcommand)]
        command: MagweylCommand,
    },
    /// Run an experiment file and report its diagnostics.
    Diagnose {
        #[arg(long)]
        experiment: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        frame: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum MagweylCommand {
    /// Matrix of the magnetic Weyl quantization of a symbol.
    Op {
        /// Setup configuration (JSON, same schema as the `setup` block).
        #[arg(long)]
        config: PathBuf,
        /// Container with symbol samples on the midpoint lattice; a Gaussian
        /// `exp(-(|x|^2 + |xi|^2) / 2)` when absent.
        #[arg(long)]
        symbol: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = DTypeArg::C64)]
        dtype: DTypeArg,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum DTypeArg {
    C64,
    C128,
}

impl From<DTypeArg> for DType {
    fn from(d: DTypeArg) -> Self {
        match d {
            DTypeArg::C64 => DType::Complex64,
            DTypeArg::C128 => DType::Complex128,
        }
    }
}

enum Failure {
    Config(Vec<String>),
    Assertions(Vec<String>),
    Other(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Other(e)
    }
}

impl From<compactlab::Error> for Failure {
    fn from(e: compactlab::Error) -> Self {
        Failure::Other(e.into())
    }
}

impl From<RunError> for Failure {
    fn from(e: RunError) -> Self {
        match e {
            RunError::Config(d) => Failure::Config(d),
            other => Failure::Other(other.into()),
        }
    }
}

fn load_config(path: &Path) -> Result<ExperimentConfig, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::Config(vec![format!("{}: {e}", path.display())]))?;
    parse(&text).map_err(Failure::Config)
}

fn load_setup(path: &Path) -> Result<SetupConfig, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::Config(vec![format!("{}: {e}", path.display())]))?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    serde_path_to_error::deserialize(de).map_err(|e| Failure::Config(vec![format!("{}: {}", e.path(), e.inner())]))
}

fn execute(cfg: ExperimentConfig, frame: Option<PathBuf>) -> Result<(), Failure> {
    let frame = match frame {
        Some(p) => Some(read_frame(&p).with_context(|| format!("reading frame {}", p.display()))?),
        None => None,
    };
    let report = run(&cfg, frame)?;
    print!("{}", render(&report));
    println!("wrote {}", cfg.output_dir.display());
    if report.passed {
        Ok(())
    } else {
        Err(Failure::Assertions(report.failures()))
    }
}

fn list(json: bool) {
    for s in SCENARIOS {
        if json {
            println!("{}", s.json());
        } else {
            println!("{:<36} {}", s.name, s.summary);
        }
    }
}

fn dispatch(command: Option<Command>) -> Result<(), Failure> {
    match command {
        None => {
            list(false);
            Ok(())
        }
        Some(Command::ListScenarios { json }) => {
            list(json);
            Ok(())
        }
        Some(Command::Run { config, scenario, seed, out, frame }) => {
            let mut cfg = match (config, scenario) {
                (Some(path), _) => load_config(&path)?,
                (None, Some(name)) => match find(&name) {
                    Some(s) => s.config(),
                    None => return Err(Failure::Config(vec![format!("unknown scenario {name:?}")])),
                },
                (None, None) => return Err(Failure::Config(vec!["one of --config, --scenario is required".into()])),
            };
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            if let Some(out) = out {
                cfg.output_dir = out;
            }
            execute(cfg, frame)
        }
        Some(Command::Diagnose { experiment, out, frame }) => {
            let mut cfg = load_config(&experiment)?;
            if let Some(out) = out {
                cfg.output_dir = out;
            }
            execute(cfg, frame)
        }
        Some(Command::Validate { config }) => {
            let cfg = load_config(&config)?;
            let problems = validate(&cfg);
            if problems.is_empty() {
                println!("{}: valid", config.display());
                Ok(())
            } else {
                Err(Failure::Config(problems))
            }
        }
        Some(Command::Quantize { pi, symbol, out, dtype, window_width }) => {
            let setup = load_setup(&pi)?.build().context("building setup")?;
            let raw = weyl_family(&setup, 1)?;
            let window = gaussian_state(setup.grid(), window_width)?;
            let (_, cal) = raw.frame(&window)?.calibrate()?;
            let family = raw.rescaled(1.0 / cal.constant)?;
            let f = read_array(&symbol).with_context(|| format!("reading {}", symbol.display()))?;
            if f.data.len() != family.len() {
                return Err(anyhow!("{} holds {} coefficients, the index space has {}", symbol.display(), f.data.len(), family.len()).into());
            }
            let t = family.quantize(&SigmaFunction::from_vec(f.data))?;
            write_array(&out, &Array::from_matrix(&t), dtype.into())?;
            println!("wrote {} ({}x{})", out.display(), t.nrows(), t.ncols());
            Ok(())
        }
        Some(Command::Magweyl { command: MagweylCommand::Op { config, symbol, out, dtype } }) => {
            let setup = load_setup(&config)?.build().context("building setup")?;
            let g = setup.grid();
            let a = match symbol {
                Some(path) => Symbol::from_values(g, read_array(&path)?.data)?,
                None => Symbol::from_fn(g, |x, xi| {
                    let r2: f64 = (0..g.n()).map(|j| x[j] * x[j] + xi[j] * xi[j]).sum();
                    Complex64::new((-r2 / 2.0).exp(), 0.0)
                }),
            };
            let m = op_weyl(&setup, &a)?;
            write_array(&out, &Array::from_matrix(&m), dtype.into())?;
            println!("wrote {} ({}x{})", out.display(), m.nrows(), m.ncols());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("warning: {e}");
        }
    }
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(problems)) => {
            eprintln!("configuration error:");
            for p in problems {
                eprintln!("  {p}");
            }
            ExitCode::from(2)
        }
        Err(Failure::Assertions(failed)) => {
            eprintln!("assertions failed:");
            for f in failed {
                eprintln!("  {f}");
            }
            ExitCode::from(3)
        }
        Err(Failure::Other(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
