use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use dcsim::commands::{self, OutputFormat, Outputs, SweepSpec, TimingRequest};
use dcsim::report::read_moves_csv;
use dcsim::scenario::{parse_scenario, Scenario};
use dcsim::CliError;
use dcsim_core::consolidation::MigrationMode;
use dcsim_core::placement::PlacementMode;

#[derive(Debug, Parser)]
#[command(
    name = "dcsim",
    version,
    about = "Container/VM placement and consolidation simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Algo {
    Ffd,
    Random,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Mode {
    Vm,
    Container,
}

#[derive(Debug, clap::Args)]
struct Common {
    /// Scenario file (JSON)
    #[arg(long)]
    scenario: PathBuf,
    /// Directory receiving the output files
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = OutputFormat::Both)]
    format: OutputFormat,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Pack the scenario's containers into VMs and count the VMs needed
    Place {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = Algo::Ffd)]
        algo: Algo,
        /// Overrides the scenario threshold
        #[arg(long)]
        threshold: Option<f64>,
        /// Overrides the scenario seed
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Drain underused hosts of a scenario layout by VM or container migration
    Consolidate {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        mode: Mode,
        #[arg(long)]
        threshold: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Lower bound and FFD VM count over a threshold range
    Sweep {
        #[command(flatten)]
        common: Common,
        /// FROM:TO:STEP, inclusive
        #[arg(long, default_value = "0.7:1.0:0.05")]
        thresholds: SweepSpec,
    },
    /// Migration time and downtime of single VMs/containers or a saved plan
    Timing {
        #[command(flatten)]
        common: Common,
        /// VM id from the scenario
        #[arg(long = "vm")]
        vms: Vec<String>,
        /// Container id from the scenario
        #[arg(long = "container")]
        containers: Vec<String>,
        /// Bare VM size in MB
        #[arg(long = "vm-mb")]
        vm_mb: Vec<u64>,
        /// Bare container resident size in MB
        #[arg(long = "container-mb")]
        container_mb: Vec<u64>,
        /// moves.csv written by `consolidate`
        #[arg(long)]
        plan: Option<PathBuf>,
    },
}

fn load(path: &Path) -> Result<Scenario, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(parse_scenario(&text)?)
}

fn run(cli: Cli) -> Result<Vec<PathBuf>, CliError> {
    match cli.command {
        Command::Place {
            common,
            algo,
            threshold,
            seed,
        } => {
            let scenario = load(&common.scenario)?;
            let algo = match algo {
                Algo::Ffd => PlacementMode::Ffd,
                Algo::Random => PlacementMode::Random,
            };
            let out = commands::run_place(&scenario, algo, threshold, seed)?;
            commands::write_outputs(&common.out, common.format, Outputs::Place(&out))
        }
        Command::Consolidate {
            common,
            mode,
            threshold,
            seed,
        } => {
            let scenario = load(&common.scenario)?;
            let mode = match mode {
                Mode::Vm => MigrationMode::Vm,
                Mode::Container => MigrationMode::Container,
            };
            let out = commands::run_consolidate(&scenario, mode, threshold, seed)?;
            commands::write_outputs(&common.out, common.format, Outputs::Consolidate(&out))
        }
        Command::Sweep { common, thresholds } => {
            let scenario = load(&common.scenario)?;
            let rows = commands::run_sweep(&scenario, &thresholds)?;
            commands::write_outputs(&common.out, common.format, Outputs::Sweep(&rows))
        }
        Command::Timing {
            common,
            vms,
            containers,
            vm_mb,
            container_mb,
            plan,
        } => {
            let scenario = load(&common.scenario)?;
            let requests: Vec<TimingRequest> = vms
                .into_iter()
                .map(TimingRequest::Vm)
                .chain(containers.into_iter().map(TimingRequest::Container))
                .chain(vm_mb.into_iter().map(TimingRequest::VmSize))
                .chain(container_mb.into_iter().map(TimingRequest::ContainerSize))
                .collect();
            let mut rows = commands::run_timing(&scenario, &requests)?;
            if let Some(path) = plan {
                let file = std::fs::File::open(&path).map_err(|source| CliError::Io {
                    path: path.clone(),
                    source,
                })?;
                let plan = read_moves_csv(file)
                    .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
                rows.extend(commands::run_plan_timing(&scenario, &plan)?);
            }
            if rows.is_empty() {
                return Err(CliError::Usage(
                    "nothing to time: pass --vm, --container, --vm-mb, --container-mb or --plan"
                        .into(),
                ));
            }
            commands::write_outputs(&common.out, common.format, Outputs::Timing(&rows))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("dcsim: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
