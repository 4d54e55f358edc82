use clap::{Parser, Subcommand};
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use wittlab_cli::compare::{compare_dir, write_comparison};
use wittlab_cli::config::{ExperimentConfig, Pipeline};
use wittlab_cli::pipelines::run;
use wittlab_cli::THREADS_ENV;

#[derive(Parser)]
#[command(name = "wittlab", version, about = "Witten Laplacian and Morse flow experiments")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the pipelines of a JSON experiment config.
    Run {
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Comma-separated subset overriding the config's pipelines.
        #[arg(long, value_delimiter = ',')]
        pipelines: Option<Vec<String>>,
    },
    /// Match −λ_j from spectrum.csv to resonances.csv in a run directory.
    Compare { dir: PathBuf },
}

fn setup_threads() -> Result<(), String> {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v.parse().map_err(|_| format!("{THREADS_ENV} must be a positive integer, got {v:?}"))?;
        if n == 0 {
            return Err(format!("{THREADS_ENV} must be positive"));
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| e.to_string())?;
    }
    Ok(())
}

fn load(path: &PathBuf, overrides: Option<Vec<String>>) -> Result<ExperimentConfig, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let mut cfg: ExperimentConfig = serde_json::from_str(&text).map_err(|e| e.to_string())?;
    if let Some(list) = overrides {
        cfg.pipelines = list
            .iter()
            .map(|s| Pipeline::parse(s.trim()).ok_or_else(|| format!("unknown pipeline {s:?}")))
            .collect::<Result<_, _>>()?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    env_logger::Builder::new().filter_level(log::LevelFilter::Warn).init();
    let cli = Cli::parse();
    if let Err(e) = setup_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    match cli.cmd {
        Cmd::Run { config, out, pipelines } => {
            let cfg = match load(&config, pipelines) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("error: invalid configuration: {e}");
                    return ExitCode::from(2);
                }
            };
            match run(&cfg, &out) {
                Ok(rep) => {
                    if let Some(e) = &rep.error {
                        eprintln!("error: {e}");
                    }
                    if !rep.warnings.is_empty() {
                        eprintln!("{} warning(s), see summary.json", rep.warnings.len());
                    }
                    println!("wrote {} files to {}", rep.files.len(), out.display());
                    ExitCode::from(rep.exit_code as u8)
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(e.exit_code() as u8)
                }
            }
        }
        Cmd::Compare { dir } => match compare_dir(&dir) {
            Ok(matches) => {
                let mut stdout = std::io::stdout().lock();
                for m in &matches {
                    let fmt = |x: Option<f64>| x.map_or("-".to_string(), |v| format!("{v:.6e}"));
                    let line = writeln!(
                        stdout,
                        "degree {} hbar {} level {} j {}: -lambda {:.6e} -> {} (deviation {})",
                        m.degree,
                        m.hbar,
                        m.mesh_level,
                        m.j,
                        m.neg_lambda,
                        fmt(m.resonance),
                        fmt(m.deviation)
                    );
                    if line.is_err() {
                        break;
                    }
                }
                if let Err(e) = write_comparison(&dir, &matches) {
                    eprintln!("error: {e}");
                    return ExitCode::from(5);
                }
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(2)
            }
        },
    }
}
