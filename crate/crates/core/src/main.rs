use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use pnp_etd::harness::{self, ConfigFile, Overrides, RunConfig};
use pnp_etd::presets::PresetKind;
use pnp_etd::stepper::Scheme;
use pnp_etd::{PnpError, Result};

#[derive(Parser)]
#[command(name = "pnp", version, about = "Exponential time differencing for periodic Poisson-Nernst-Planck")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one trajectory and write diagnostics and snapshots.
    Run(Common),
    /// Temporal convergence against a fine-step ETD2 reference.
    ConvergeTime {
        #[command(flatten)]
        common: Common,
        /// Step divisors d (tau = T/d); defaults to 8,16,...,256 (4,...,512 at paper scale).
        #[arg(long, value_delimiter = ',')]
        ladder: Vec<usize>,
        #[arg(long, default_value_t = 1024)]
        reference_divisor: usize,
    },
    /// Spatial convergence of one ETD1 step of length T.
    ConvergeSpace {
        #[command(flatten)]
        common: Common,
        /// Nodes per axis; defaults to 8,...,128 (8,...,512 at paper scale).
        #[arg(long, value_delimiter = ',')]
        ladder: Vec<usize>,
        /// Reference nodes per axis; defaults to 512 (1024 at paper scale).
        #[arg(long)]
        reference_n: Option<usize>,
    },
    /// List presets and their constants.
    Presets,
}

#[derive(Args, Clone, Default)]
struct Common {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    preset: Option<String>,
    /// Nodes per axis.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    scheme: Option<String>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    t_final: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    rho0: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    #[arg(long)]
    paper_scale: bool,
    #[arg(long)]
    project_compatibility: bool,
}

impl Common {
    fn overrides(&self) -> Result<Overrides> {
        Ok(Overrides {
            preset: self.preset.as_deref().map(str::parse).transpose()?,
            n: self.n,
            scheme: self.scheme.as_deref().map(str::parse::<Scheme>).transpose()?,
            tau: self.tau,
            t_final: self.t_final,
            epsilon: self.epsilon,
            rho0: self.rho0,
            seed: self.seed,
            output_dir: self.output_dir.clone(),
            project_compatibility: self.project_compatibility,
        })
    }

    fn file(&self) -> Result<ConfigFile> {
        match &self.config {
            Some(path) => ConfigFile::from_path(path),
            None => Ok(ConfigFile::default()),
        }
    }

    /// Config for a convergence study: the convergence preset unless the
    /// file says otherwise, on `default_n` nodes unless a size is given.
    fn study_config(&self, default_n: usize) -> Result<RunConfig> {
        let file = self.file()?;
        let mut ov = self.overrides()?;
        if file.initial_data.is_none() {
            let section = file.preset.as_ref();
            if ov.preset.is_none() && section.and_then(|s| s.name).is_none() {
                ov.preset = Some(PresetKind::Convergence);
            }
            if ov.n.is_none() && section.and_then(|s| s.n).is_none() {
                ov.n = Some(default_n);
            }
        }
        RunConfig::resolve(file, &ov)
    }
}

fn execute(cli: Cli) -> Result<()> {
    harness::init_thread_pool()?;
    match cli.command {
        Command::Run(common) => {
            if common.paper_scale {
                return Err(PnpError::Config("--paper-scale applies to convergence studies".into()));
            }
            let config = RunConfig::resolve(common.file()?, &common.overrides()?)?;
            let summary = harness::cmd_run(&config)?;
            println!(
                "{} steps, {} diagnostics rows, {} snapshot files in {}",
                summary.steps,
                summary.records,
                summary.snapshots,
                config.output_dir.display()
            );
        }
        Command::ConvergeTime { common, ladder, reference_divisor } => {
            let paper = common.paper_scale;
            let config = common.study_config(if paper { 256 } else { 64 })?;
            let ladder = if !ladder.is_empty() {
                ladder
            } else if paper {
                (2..=9).map(|k| 1 << k).collect()
            } else {
                (3..=8).map(|k| 1 << k).collect()
            };
            let base = config.materialize()?;
            let report = harness::converge_time(&base, config.scheme, &ladder, reference_divisor)?;
            let name = format!("converge_time_{}.csv", config.scheme);
            print!("{}", harness::write_report(&report, &config.output_dir, &name)?);
        }
        Command::ConvergeSpace { common, ladder, reference_n } => {
            let paper = common.paper_scale;
            if common.tau.is_some() {
                return Err(PnpError::Config("the spatial study always uses tau = T".into()));
            }
            let reference_n = reference_n.unwrap_or(if paper { 1024 } else { 512 });
            let config = common.study_config(reference_n)?;
            let ladder = if !ladder.is_empty() {
                ladder
            } else if paper {
                (3..=9).map(|k| 1 << k).collect()
            } else {
                (3..=7).map(|k| 1 << k).collect()
            };
            let report = harness::converge_space(&config, &ladder, reference_n)?;
            print!("{}", harness::write_report(&report, &config.output_dir, "converge_space.csv")?);
        }
        Command::Presets => print!("{}", harness::preset_listing()),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let line = serde_json::json!({
                "error": e.kind(),
                "message": e.to_string(),
                "exit_code": e.exit_code(),
            });
            eprintln!("{line}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
