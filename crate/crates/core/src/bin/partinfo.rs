use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use partinfo::experiment::{self, ExperimentConfig, Kind, Overrides, RawConfig};
use partinfo::Error;

#[derive(Parser)]
#[command(
    name = "partinfo",
    version,
    about = "Detection bounds with partial codebook information"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compare random transforms against the optimal one.
    RandomVsOpt(Common),
    /// Sweep SNR, m or n (the kind comes from the config file).
    Sweep(Common),
    /// Report diagnostics for a single (Σx, Σe, T) instance.
    Inspect(InspectArgs),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    workers: Option<u64>,
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            trials: self.trials,
            out: self.out.clone(),
            workers: self.workers,
        }
    }
}

#[derive(Args)]
struct InspectArgs {
    #[arg(long, required_unless_present_all = ["sigma_x", "sigma_e", "transform"])]
    config: Option<PathBuf>,
    #[arg(long)]
    sigma_x: Option<PathBuf>,
    #[arg(long)]
    sigma_e: Option<PathBuf>,
    #[arg(long)]
    transform: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn run(cli: Cli) -> partinfo::Result<()> {
    match cli.command {
        Command::RandomVsOpt(args) => {
            let cfg = load(Some(Kind::RandomVsOpt), &args)?;
            let table = experiment::run_random_vs_opt(&cfg)?;
            experiment::write_output(cfg.output_path.as_deref(), &table.to_csv())?;
            eprintln!("{}", table.summary());
        }
        Command::Sweep(args) => {
            let cfg = load(None, &args)?;
            if !cfg.kind.is_sweep() {
                return Err(Error::Config(format!("'{}' is not a sweep kind", cfg.kind)));
            }
            let table = experiment::run_sweep(&cfg)?;
            experiment::write_output(cfg.output_path.as_deref(), &table.to_csv())?;
        }
        Command::Inspect(args) => {
            let mut raw = match &args.config {
                Some(p) => RawConfig::load(p)?,
                None => RawConfig::default(),
            };
            raw.sigma_x = args.sigma_x.or(raw.sigma_x);
            raw.sigma_e = args.sigma_e.or(raw.sigma_e);
            raw.transform = args.transform.or(raw.transform);
            let ov = Overrides {
                out: args.out,
                ..Overrides::default()
            };
            let cfg = ExperimentConfig::resolve(Some(Kind::Inspect), raw, ov)?;
            let report = experiment::inspect(&cfg)?;
            experiment::write_output(cfg.output_path.as_deref(), &report.to_string())?;
        }
    }
    Ok(())
}

fn load(kind: Option<Kind>, args: &Common) -> partinfo::Result<ExperimentConfig> {
    let raw = RawConfig::load(&args.config)?;
    ExperimentConfig::resolve(kind, raw, args.overrides())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_config() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
