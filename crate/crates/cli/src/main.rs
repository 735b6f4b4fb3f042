use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use dsa_cli::config::SweepAxis;
use dsa_cli::{report, CliError, Loaded, Outcome};
use dsa_core::Exec;

#[derive(Parser)]
#[command(name = "dsa", version, about = "Dynamic scattering array scenarios")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Scenario file (TOML).
    #[arg(long, short)]
    config: PathBuf,
    /// Output directory; defaults to `output.dir` or `out/`.
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Overrides the root seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Single-threaded inner loops.
    #[arg(long)]
    sequential: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario.
    Run(Common),
    /// Re-run a scenario over the values of one field.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// One of ring_spacing, rings, disks, sigma_rel, noise.
        #[arg(long)]
        axis: Option<String>,
        /// Comma-separated values, with units where the field has one.
        #[arg(long, value_delimiter = ',')]
        values: Option<Vec<String>>,
        /// Sweep points evaluated at once.
        #[arg(long, default_value_t = 1)]
        workers: usize,
    },
    /// Evaluate the general network and the layered SIM chain side by side.
    CompareSim(Common),
    /// Check a scenario file without running it.
    Validate {
        #[arg(long, short)]
        config: PathBuf,
    },
}

fn exec(c: &Common) -> Exec {
    if c.sequential {
        Exec::Sequential
    } else {
        Exec::default()
    }
}

fn out_dir(c: &Common, l: &Loaded) -> PathBuf {
    c.out
        .clone()
        .or_else(|| l.config.output.dir.as_ref().map(|d| l.base.join(d)))
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn finish(dir: &Path, o: &Outcome) -> Result<(), CliError> {
    let written = report::write_outputs(dir, o)?;
    println!("{}", report::report_text(o).trim_end());
    log::info!("wrote {} files to {}", written.len(), dir.display());
    Ok(())
}

fn main_inner(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run(c) => {
            let l = Loaded::from_file(&c.config, c.seed)?;
            let o = dsa_cli::run(&l, exec(&c))?;
            finish(&out_dir(&c, &l), &o)
        }
        Command::CompareSim(c) => {
            let l = Loaded::from_file(&c.config, c.seed)?;
            let o = dsa_cli::compare_sim(&l, exec(&c))?;
            finish(&out_dir(&c, &l), &o)
        }
        Command::Sweep {
            common,
            axis,
            values,
            workers,
        } => {
            let l = Loaded::from_file(&common.config, common.seed)?;
            let section = l.config.sweep.clone();
            let axis = axis
                .or_else(|| section.as_ref().map(|s| s.axis.clone()))
                .ok_or_else(|| CliError::Usage("no sweep axis: pass --axis or add a [sweep] section".into()))?;
            let axis = SweepAxis::parse(&axis).map_err(CliError::Usage)?;
            let values = values
                .or_else(|| section.map(|s| s.values))
                .ok_or_else(|| CliError::Usage("no sweep values: pass --values or add a [sweep] section".into()))?;
            let o = dsa_cli::sweep(&l, axis, &values, workers)?;
            finish(&out_dir(&common, &l), &o)
        }
        Command::Validate { config } => {
            let l = Loaded::from_file(&config, None)?;
            let g = dsa_cli::config::build_geometry(&l.resolved.geometry, &l.resolved)?;
            println!(
                "ok: {} scenario, {} active, {} scatterers, {} subcarrier(s)",
                l.config.scenario.name(),
                g.n_active(),
                g.n_scatterers(),
                l.resolved.frequencies.len()
            );
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match main_inner(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
