use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use magnon_epr::sweep::{self, Command, Format, Overrides, Threads};

#[derive(Parser)]
#[command(name = "magnon-epr", version, about = "Magnon entanglement and EPR read-out sweeps over a k-path")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Bare and hybrid magnon dispersions, |Gamma|, r and phi
    Dispersion(Common),
    /// Entanglement entropies of the ground and excited states
    Entanglement {
        #[command(flatten)]
        common: Common,
        /// Report entropies in bits instead of nats
        #[arg(long)]
        bits: bool,
    },
    /// Ground-state EPR function and regime along the path
    EprPath(Common),
    /// Simulated cavity read-out and reconstruction of the EPR function
    Experiment(Common),
    /// Check a configuration and print diagnostics
    Validate(Common),
}

#[derive(Args)]
struct Common {
    /// Run configuration (TOML)
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides output.directory)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads, a number or "auto"
    #[arg(long, env = "MAGNON_EPR_THREADS")]
    threads: Option<Threads>,
    /// Comma-separated output formats: csv, json
    #[arg(long, value_delimiter = ',')]
    format: Option<Vec<Format>>,
    /// Master seed for shot noise (overrides acquisition.seed)
    #[arg(long)]
    seed: Option<u64>,
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides { out: self.out.clone(), threads: self.threads, formats: self.format.clone(), seed: self.seed }
    }
}

fn run(common: &Common, command: Command) -> ExitCode {
    let result = sweep::load_plan(&common.config, &common.overrides()).and_then(|plan| sweep::execute(command, &plan));
    match result {
        Ok(summary) => {
            for file in &summary.files {
                log::info!("wrote {}", file.display());
            }
            if summary.flagged > 0 {
                eprintln!("{} of {} k-points flagged (see status column)", summary.flagged, summary.points);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match cli.command {
        Cmd::Dispersion(c) => run(&c, Command::Dispersion),
        Cmd::Entanglement { common, bits } => run(&common, Command::Entanglement { bits }),
        Cmd::EprPath(c) => run(&c, Command::EprPath),
        Cmd::Experiment(c) => run(&c, Command::Experiment),
        Cmd::Validate(c) => {
            let text = match std::fs::read_to_string(&c.config) {
                Ok(t) => t,
                Err(e) => {
                    println!("error: cannot read {}: {e}", c.config.display());
                    return ExitCode::from(1);
                }
            };
            let report = sweep::validate(&text, &c.overrides());
            for line in &report.lines {
                println!("{line}");
            }
            ExitCode::from(report.exit_code as u8)
        }
    }
}
