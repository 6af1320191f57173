//! The experiment commands. Each `run_*` function is pure and returns the
//! data behind a command; [`write_outputs`] puts it on disk.

use std::fs;
use std::path::{Path, PathBuf};

use dcsim_core::consolidation::{consolidate, ConsolidationPolicy, MigrationMode, MigrationPlan};
use dcsim_core::metrics::{build_report, ReportContext, RunReport};
use dcsim_core::model::{ContainerId, DatacenterState, MoveKind, ThresholdPolicy, VmId};
use dcsim_core::placement::{
    ffd_place, lower_bound, place_vms_on_hosts, random_place, BinSupply, ContainerPlacement,
    PlacementMode, VmPlacement,
};
use dcsim_core::timing::{container_migration_time, plan_timing, vm_migration_time, PlanTiming};
use serde_json::json;

use crate::error::CliError;
use crate::report::{self, SweepRow, TimingRow};
use crate::scenario::Scenario;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum OutputFormat {
    Csv,
    Json,
    Both,
}

impl OutputFormat {
    fn csv(self) -> bool {
        matches!(self, OutputFormat::Csv | OutputFormat::Both)
    }

    fn json(self) -> bool {
        matches!(self, OutputFormat::Json | OutputFormat::Both)
    }
}

fn threshold_or(scenario: &Scenario, over: Option<f64>) -> Result<ThresholdPolicy, CliError> {
    match over {
        Some(t) => {
            ThresholdPolicy::new(t).map_err(|e| CliError::Usage(format!("--threshold: {e}")))
        }
        None => Ok(scenario.policy()),
    }
}

/// Host-level draws use a seed distinct from the container-level one.
fn host_seed(seed: u64) -> u64 {
    seed ^ 0x9e37_79b9_7f4a_7c15
}

#[derive(Debug, Clone)]
pub struct PlaceOutcome {
    pub containers: ContainerPlacement,
    pub vms: VmPlacement,
    pub report: RunReport,
}

/// Places every container on VMs (scenario VMs first, more opened from a
/// pool of the first VM type when needed), then the used VMs on hosts.
pub fn run_place(
    scenario: &Scenario,
    algo: PlacementMode,
    threshold: Option<f64>,
    seed: Option<u64>,
) -> Result<PlaceOutcome, CliError> {
    let policy = threshold_or(scenario, threshold)?;
    let seed = seed.unwrap_or(scenario.seed);
    let vms = scenario.vms()?;
    let hosts = scenario.hosts()?;
    let template = vms
        .first()
        .cloned()
        .ok_or_else(|| CliError::Usage("placement needs at least one vm group".into()))?;
    let supply = BinSupply::extendable(vms, template, "pool-vm-");
    let containers = scenario.containers()?;
    let placed = match algo {
        PlacementMode::Ffd => ffd_place(&containers, &supply, policy),
        PlacementMode::Random => random_place(&containers, &supply, policy, seed),
    };
    if let Some(c) = placed.leftover.first() {
        return Err(CliError::Infeasible(format!(
            "container {c} fits no VM at threshold {}",
            policy.upper()
        )));
    }

    let used_vms: Vec<_> = placed.used_bins().cloned().collect();
    let host_supply = BinSupply::extendable(hosts.clone(), hosts[0].clone(), "pool-host-");
    let on_hosts = place_vms_on_hosts(&used_vms, &host_supply, policy, algo, host_seed(seed));
    if let Some(v) = on_hosts.leftover.first() {
        return Err(CliError::Infeasible(format!("vm {v} fits no host")));
    }

    let ctx = ReportContext {
        scenario: scenario.name.clone(),
        mode: algo_label(algo).into(),
        threshold: policy.upper(),
        seed,
    };
    let report = RunReport::for_placement(
        &ctx,
        placed.bins_used,
        on_hosts.bins_used,
        &scenario.sla_spec(),
        &scenario.power_model(),
    );
    Ok(PlaceOutcome {
        containers: placed,
        vms: on_hosts,
        report,
    })
}

pub fn algo_label(algo: PlacementMode) -> &'static str {
    match algo {
        PlacementMode::Ffd => "ffd",
        PlacementMode::Random => "random",
    }
}

#[derive(Debug, Clone)]
pub struct ConsolidateOutcome {
    pub before: DatacenterState,
    pub after: DatacenterState,
    pub plan: MigrationPlan,
    pub timing: PlanTiming,
    pub report: RunReport,
}

pub fn run_consolidate(
    scenario: &Scenario,
    mode: MigrationMode,
    threshold: Option<f64>,
    seed: Option<u64>,
) -> Result<ConsolidateOutcome, CliError> {
    let before = scenario.state()?.ok_or_else(|| {
        CliError::Usage(format!(
            "scenario `{}` has no explicit vm/host layout to consolidate",
            scenario.name
        ))
    })?;
    let threshold = threshold_or(scenario, threshold)?;
    if let Some(v) = before.validate(&threshold).first() {
        return Err(CliError::Infeasible(v.to_string()));
    }
    let policy = ConsolidationPolicy::new(threshold, mode);
    let (after, plan) = consolidate(&before, &policy)?;
    let timing = plan_timing(&plan, &before, &scenario.timing_params()?)?;
    let ctx = ReportContext {
        scenario: scenario.name.clone(),
        mode: mode.label().into(),
        threshold: threshold.upper(),
        seed: seed.unwrap_or(scenario.seed),
    };
    let report = build_report(
        &ctx,
        &before,
        &after,
        &plan,
        &timing,
        &scenario.sla_spec(),
        &scenario.power_model(),
    )?;
    Ok(ConsolidateOutcome {
        before,
        after,
        plan,
        timing,
        report,
    })
}

/// Inclusive threshold range `from:to:step`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSpec {
    pub from: f64,
    pub to: f64,
    pub step: f64,
}

impl std::str::FromStr for SweepSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let [from, to, step] = parts[..] else {
            return Err(format!("expected FROM:TO:STEP, got `{s}`"));
        };
        let num = |p: &str| p.trim().parse::<f64>().map_err(|e| format!("`{p}`: {e}"));
        Ok(Self {
            from: num(from)?,
            to: num(to)?,
            step: num(step)?,
        })
    }
}

impl SweepSpec {
    /// Thresholds in ascending order; each is rounded to 1e-9 so that
    /// accumulated steps land exactly on values such as 1.0.
    pub fn thresholds(&self) -> Result<Vec<f64>, CliError> {
        if !(self.from > 0.0 && self.from <= self.to && self.to <= 1.0) {
            return Err(CliError::Usage(format!(
                "threshold range must satisfy 0 < from <= to <= 1, got {}:{}",
                self.from, self.to
            )));
        }
        if !(self.step > 0.0) {
            return Err(CliError::Usage("threshold step must be positive".into()));
        }
        let n = ((self.to - self.from) / self.step + 1e-9).floor() as usize;
        Ok((0..=n)
            .map(|i| ((self.from + i as f64 * self.step) * 1e9).round() / 1e9)
            .map(|t| t.min(self.to))
            .collect())
    }
}

/// Lower bound and FFD VM count per threshold.
pub fn run_sweep(scenario: &Scenario, sweep: &SweepSpec) -> Result<Vec<SweepRow>, CliError> {
    let vms = scenario.vms()?;
    let template = vms
        .first()
        .cloned()
        .ok_or_else(|| CliError::Usage("sweep needs at least one vm group".into()))?;
    let containers = scenario.containers()?;
    let total: u64 = containers.iter().map(|c| c.spec.ram_mb).sum();
    let supply = BinSupply::extendable(vms, template.clone(), "pool-vm-");
    let mut rows = Vec::new();
    for t in sweep.thresholds()? {
        let policy = ThresholdPolicy::new(t).map_err(|e| CliError::Usage(e.to_string()))?;
        let placed = ffd_place(&containers, &supply, policy);
        if let Some(c) = placed.leftover.first() {
            return Err(CliError::Infeasible(format!(
                "container {c} fits no VM at threshold {t}"
            )));
        }
        rows.push(SweepRow {
            threshold: t,
            lower_bound: lower_bound(total, template.spec.ram_mb, t)?,
            ffd_bins: placed.bins_used,
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub enum TimingRequest {
    Vm(String),
    Container(String),
    VmSize(u64),
    ContainerSize(u64),
}

/// Times individual migrations of scenario entities or bare sizes.
pub fn run_timing(
    scenario: &Scenario,
    requests: &[TimingRequest],
) -> Result<Vec<TimingRow>, CliError> {
    let params = scenario.timing_params()?;
    let vms = scenario.vms()?;
    let containers = scenario.containers()?;
    let mut rows = Vec::new();
    for req in requests {
        let (label, kind, timing) = match req {
            TimingRequest::Vm(id) => {
                let vm = vms.iter().find(|v| v.id.as_str() == id).ok_or_else(|| {
                    CliError::Core(dcsim_core::Error::UnknownVm(VmId(id.clone())))
                })?;
                (
                    id.clone(),
                    MoveKind::Vm,
                    vm_migration_time(vm.spec.ram_mb as f64, &params)?,
                )
            }
            TimingRequest::Container(id) => {
                let c = containers
                    .iter()
                    .find(|c| c.id.as_str() == id)
                    .ok_or_else(|| {
                        CliError::Core(dcsim_core::Error::UnknownContainer(ContainerId(id.clone())))
                    })?;
                (
                    id.clone(),
                    MoveKind::Cnt,
                    container_migration_time(c.resident_mb as f64, &params)?,
                )
            }
            TimingRequest::VmSize(mb) => (
                format!("vm@{mb}mb"),
                MoveKind::Vm,
                vm_migration_time(*mb as f64, &params)?,
            ),
            TimingRequest::ContainerSize(mb) => (
                format!("cnt@{mb}mb"),
                MoveKind::Cnt,
                container_migration_time(*mb as f64, &params)?,
            ),
        };
        rows.push(TimingRow {
            label,
            kind: kind.label().into(),
            rounds: timing.rounds.len(),
            downtime_s: timing.downtime_s,
            total_s: timing.total_s,
        });
    }
    Ok(rows)
}

/// Times a saved plan against the scenario's starting layout.
pub fn run_plan_timing(
    scenario: &Scenario,
    plan: &MigrationPlan,
) -> Result<Vec<TimingRow>, CliError> {
    let before = scenario
        .state()?
        .ok_or_else(|| CliError::Usage("timing a plan needs a scenario with a layout".into()))?;
    let timing = plan_timing(plan, &before, &scenario.timing_params()?)?;
    Ok(plan_rows(&timing))
}

pub fn plan_rows(timing: &PlanTiming) -> Vec<TimingRow> {
    timing
        .moves
        .iter()
        .map(|m| TimingRow {
            label: m.step.to_string(),
            kind: m.kind.label().into(),
            rounds: m.timing.rounds.len(),
            downtime_s: m.timing.downtime_s,
            total_s: m.timing.total_s,
        })
        .collect()
}

fn create(path: &Path) -> Result<fs::File, CliError> {
    fs::File::create(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn csv_err(path: &Path, e: csv::Error) -> CliError {
    CliError::Io {
        path: path.to_path_buf(),
        source: e.into(),
    }
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).expect("json value serializes");
    fs::write(path, text + "\n").map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// What a command leaves on disk.
pub enum Outputs<'a> {
    Place(&'a PlaceOutcome),
    Consolidate(&'a ConsolidateOutcome),
    Sweep(&'a [SweepRow]),
    Timing(&'a [TimingRow]),
}

/// Writes command outputs into `dir`, returning the files written.
pub fn write_outputs(
    dir: &Path,
    format: OutputFormat,
    outputs: Outputs<'_>,
) -> Result<Vec<PathBuf>, CliError> {
    fs::create_dir_all(dir).map_err(|source| CliError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut written = Vec::new();
    match outputs {
        Outputs::Place(out) => {
            if format.csv() {
                let p = dir.join("place.csv");
                report::write_report_csv(create(&p)?, std::slice::from_ref(&out.report))
                    .map_err(|e| csv_err(&p, e))?;
                written.push(p);
            }
            if format.json() {
                let p = dir.join("place.json");
                let placement: serde_json::Map<String, serde_json::Value> = out
                    .containers
                    .placement
                    .iter()
                    .map(|(c, v)| (c.0.clone(), json!(v.0)))
                    .collect();
                let hosts: serde_json::Map<String, serde_json::Value> = out
                    .vms
                    .placement
                    .iter()
                    .map(|(v, h)| (v.0.clone(), json!(h.0)))
                    .collect();
                let v = report::report_json(
                    &out.report,
                    vec![("vm_of", placement.into()), ("host_of", hosts.into())],
                );
                write_json(&p, &v)?;
                written.push(p);
            }
        }
        Outputs::Consolidate(out) => {
            if format.csv() {
                let p = dir.join("consolidate.csv");
                report::write_report_csv(create(&p)?, std::slice::from_ref(&out.report))
                    .map_err(|e| csv_err(&p, e))?;
                written.push(p);
            }
            if format.json() {
                let p = dir.join("consolidate.json");
                let v = report::report_json(
                    &out.report,
                    vec![
                        (
                            "moves",
                            serde_json::to_value(&out.plan.moves).expect("moves serialize"),
                        ),
                        (
                            "timing",
                            serde_json::to_value(&out.timing).expect("timing serializes"),
                        ),
                    ],
                );
                write_json(&p, &v)?;
                written.push(p);
            }
            let p = dir.join("moves.csv");
            report::write_moves_csv(create(&p)?, &out.plan).map_err(|e| csv_err(&p, e))?;
            written.push(p);
            let p = dir.join("timing.csv");
            report::write_timing_csv(create(&p)?, &plan_rows(&out.timing))
                .map_err(|e| csv_err(&p, e))?;
            written.push(p);
        }
        Outputs::Sweep(rows) => {
            let p = dir.join("sweep.csv");
            report::write_sweep_csv(create(&p)?, rows).map_err(|e| csv_err(&p, e))?;
            written.push(p);
        }
        Outputs::Timing(rows) => {
            let p = dir.join("timing.csv");
            report::write_timing_csv(create(&p)?, rows).map_err(|e| csv_err(&p, e))?;
            written.push(p);
        }
    }
    Ok(written)
}
