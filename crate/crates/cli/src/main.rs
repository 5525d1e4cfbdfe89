use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use polariton::workbench::output::{replay, write_bandwidth, write_design, write_phase_map, write_single_run};
use polariton::workbench::report::summarize_run;
use polariton::workbench::ExperimentConfig;

/// Designs three-pulse trains for a rotor in a cavity and checks them by propagation.
#[derive(Parser)]
#[command(name = "polariton", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the designed pulse train and its first-order Magnus state.
    Design(RunArgs),
    /// Propagate one designed train and measure orientation and populations.
    Propagate(RunArgs),
    /// Sweep the pulse bandwidth.
    SweepBandwidth(RunArgs),
    /// Map the maximum orientation over two carrier phases.
    SweepPhase {
        #[command(flatten)]
        run: RunArgs,
        /// Only the two cut lines, not the full map.
        #[arg(long)]
        cuts_only: bool,
    },
    /// Summarize a run directory and check its manifests.
    Report {
        #[arg(long)]
        run: PathBuf,
        /// Re-run every product and compare the files byte for byte.
        #[arg(long)]
        replay: bool,
    },
}

#[derive(clap::Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides output.dir from the config.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl RunArgs {
    fn load(&self) -> Result<(ExperimentConfig, PathBuf)> {
        let cfg = ExperimentConfig::load(&self.config).with_context(|| format!("reading {}", self.config.display()))?;
        let dir = self.out.clone().unwrap_or_else(|| cfg.output.dir.clone());
        Ok((cfg, dir))
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Design(args) => {
            let (cfg, dir) = args.load()?;
            write_design(&cfg, &dir)?;
            print!("{}", summarize_run(&dir)?);
        }
        Command::Propagate(args) => {
            let (cfg, dir) = args.load()?;
            let (_, s) = write_single_run(&cfg, &dir)?;
            println!("max |<cos theta>| = {:.6} at {:.3} tau0 ({} steps, dt {:.5})", s.max_orientation, s.t_max_tau0, s.steps, s.dt);
            println!("wrote {}", dir.display());
        }
        Command::SweepBandwidth(args) => {
            let (cfg, dir) = args.load()?;
            let (_, res) = write_bandwidth(&cfg, &dir)?;
            for r in &res.rows {
                match &r.error {
                    None => println!("dw = {:.3} g  max {:.5}", r.coords[0], r.max_orientation),
                    Some(e) => println!("dw = {:.3} g  failed: {e}", r.coords[0]),
                }
            }
            println!("wrote {}", dir.display());
        }
        Command::SweepPhase { run, cuts_only } => {
            let (cfg, dir) = run.load()?;
            let (_, res) = write_phase_map(&cfg, &dir, !cuts_only)?;
            for c in &res.cuts {
                if let Some((x, v)) = c.argmax() {
                    println!("cut along {} ({} = {:.4} rad): argmax {:.4} rad, max {:.5}", c.along, c.held, c.held_value, x, v);
                }
            }
            if res.failures() > 0 {
                println!("{} points failed; see the error column", res.failures());
            }
            println!("wrote {}", dir.display());
        }
        Command::Report { run, replay: again } => {
            print!("{}", summarize_run(&run)?);
            if again {
                replay_run(&run)?;
            }
        }
    }
    Ok(())
}

fn replay_run(dir: &Path) -> Result<()> {
    let scratch = dir.join(".replay");
    let checks = replay(dir, &scratch);
    std::fs::remove_dir_all(&scratch).ok();
    let checks = checks?;
    let differing: Vec<_> = checks.iter().filter(|c| !c.identical).collect();
    for c in &checks {
        println!("replay {} {}: {}", c.product.name(), c.file, if c.identical { "identical" } else { "DIFFERS" });
    }
    if !differing.is_empty() {
        bail!("{} file(s) differ on replay", differing.len());
    }
    Ok(())
}
