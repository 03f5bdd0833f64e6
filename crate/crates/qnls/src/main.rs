use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use qnls::cli::{check_scenario, parse_config, preset, run_scenario, sweep, PRESETS};

#[derive(Parser)]
#[command(name = "qnls", version, about = "Radial simulations and criteria for quasilinear Schrödinger equations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write its series and summary.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Print the criteria report of a scenario as JSON.
    Check {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run every `*.cfg` in a directory on a bounded worker pool.
    Sweep {
        #[arg(long)]
        dir: PathBuf,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// List the built-in presets, or print one as config text.
    Presets { name: Option<String> },
}

fn load(path: &PathBuf) -> qnls::error::Result<qnls::cli::Scenario> {
    parse_config(&std::fs::read_to_string(path)?)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, out } => load(&config).and_then(|s| run_scenario(&s)).and_then(|r| {
            r.write(&out)?;
            println!("{} {} ({} records)", r.scenario.id, r.outcome.status.label(), r.outcome.series.len());
            for b in r.bounds.iter().filter(|b| b.asserted) {
                let mark = if b.satisfied { "ok" } else { "VIOLATED" };
                println!("  {:<16} {:.6e} <= {:.6e}  {mark}", b.name, b.computed_lhs, b.paper_rhs);
            }
            Ok(r.exit_code() as u8)
        }),
        Command::Check { config } => load(&config).and_then(|s| check_scenario(&s)).map(|c| {
            println!("{}", serde_json::to_string_pretty(&c.to_json()).expect("json"));
            0
        }),
        Command::Sweep { dir, jobs } => sweep(&dir, jobs).map(|failed| {
            println!("{failed} scenario(s) failed");
            u8::from(failed > 0)
        }),
        Command::Presets { name: None } => {
            for p in PRESETS {
                println!("{p}");
            }
            Ok(0)
        }
        Command::Presets { name: Some(n) } => match preset(&n) {
            Some(s) => {
                print!("{}", s.to_config_text());
                Ok(0)
            }
            None => Err(qnls::error::Error::Validation(format!("unknown preset {n:?}"))),
        },
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("qnls: {e}");
            ExitCode::from(2)
        }
    }
}
