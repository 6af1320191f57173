//! JSON scenario files.
//!
//! A scenario lists hosts, VMs and containers in groups. A group either
//! names its members (`ids`) or gives a `count`, in which case members are
//! called `{name}-001`, `{name}-002`, ... VM groups may pin their members to
//! a host and container groups to a VM, either all members to one target
//! (`"host": "host1"`) or one target per member (`"vm": ["vm1", "vm1", ...]`).
//! Consolidation needs a complete layout; placement ignores it.

use std::collections::BTreeSet;

use dcsim_core::metrics::{Horizon, PowerModel, SlaSpec};
use dcsim_core::model::{
    Container, DatacenterState, Host, HostId, ResourceSpec, ThresholdPolicy, Vm, VmId,
    DEFAULT_RESIDENT_MB,
};
use dcsim_core::timing::{ContainerMode, TimingParams};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("{path}: {message}")]
    Schema { path: String, message: String },
    #[error("infeasible scenario: {0}")]
    Infeasible(String),
}

fn schema(path: impl Into<String>, message: impl Into<String>) -> ScenarioError {
    ScenarioError::Schema {
        path: path.into(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Assignment {
    All(String),
    Each(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HostGroup {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ids: Option<Vec<String>>,
    pub ram_mb: u64,
    pub pes: u32,
    pub mips: u64,
    #[serde(default)]
    pub bw: u64,
    pub max_power_w: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VmGroup {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ids: Option<Vec<String>>,
    pub ram_mb: u64,
    pub pes: u32,
    pub mips: u64,
    #[serde(default)]
    pub bw: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub host: Option<Assignment>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContainerGroup {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ids: Option<Vec<String>>,
    pub ram_mb: u64,
    pub pes: u32,
    pub mips: u64,
    #[serde(default)]
    pub bw: u64,
    /// Defaults to `min(32, ram_mb)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resident_mb: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vm: Option<Assignment>,
}

/// Overrides for [`TimingParams`]; unset fields keep their defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimingOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bandwidth_mb_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vm_dirty_rate_mb_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cnt_dirty_rate_mb_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stop_threshold_mb: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_rounds: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reservation_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vm_resume_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cnt_freeze_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cnt_restore_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cnt_mode: Option<ContainerMode>,
}

impl TimingOverrides {
    pub fn apply(&self, base: TimingParams) -> TimingParams {
        TimingParams {
            bandwidth_mb_s: self.bandwidth_mb_s.unwrap_or(base.bandwidth_mb_s),
            vm_dirty_rate_mb_s: self.vm_dirty_rate_mb_s.unwrap_or(base.vm_dirty_rate_mb_s),
            cnt_dirty_rate_mb_s: self.cnt_dirty_rate_mb_s.unwrap_or(base.cnt_dirty_rate_mb_s),
            stop_threshold_mb: self.stop_threshold_mb.unwrap_or(base.stop_threshold_mb),
            max_rounds: self.max_rounds.unwrap_or(base.max_rounds),
            reservation_s: self.reservation_s.unwrap_or(base.reservation_s),
            vm_resume_s: self.vm_resume_s.unwrap_or(base.vm_resume_s),
            cnt_freeze_s: self.cnt_freeze_s.unwrap_or(base.cnt_freeze_s),
            cnt_restore_s: self.cnt_restore_s.unwrap_or(base.cnt_restore_s),
            cnt_mode: self.cnt_mode.unwrap_or(base.cnt_mode),
        }
    }
}

fn default_level() -> f64 {
    0.9999
}

fn default_horizon() -> Horizon {
    Horizon::Year
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlaConfig {
    #[serde(default = "default_level")]
    pub level: f64,
    #[serde(default = "default_horizon")]
    pub horizon: Horizon,
}

impl Default for SlaConfig {
    fn default() -> Self {
        Self {
            level: default_level(),
            horizon: default_horizon(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub threshold: f64,
    #[serde(default)]
    pub seed: u64,
    pub hosts: Vec<HostGroup>,
    #[serde(default)]
    pub vms: Vec<VmGroup>,
    #[serde(default)]
    pub containers: Vec<ContainerGroup>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timing: Option<TimingOverrides>,
    #[serde(default)]
    pub sla: SlaConfig,
}

fn member_ids(
    path: &str,
    name: &str,
    count: Option<u32>,
    ids: &Option<Vec<String>>,
) -> Result<Vec<String>, ScenarioError> {
    match (count, ids) {
        (Some(n), None) => Ok((1..=n).map(|i| format!("{name}-{i:03}")).collect()),
        (None, Some(ids)) => Ok(ids.clone()),
        (Some(n), Some(ids)) if n as usize == ids.len() => Ok(ids.clone()),
        (Some(_), Some(_)) => Err(schema(path, "count disagrees with the number of ids")),
        (None, None) => Err(schema(path, "group needs `count` or `ids`")),
    }
}

fn targets(
    path: &str,
    a: &Option<Assignment>,
    n: usize,
) -> Result<Option<Vec<String>>, ScenarioError> {
    match a {
        None => Ok(None),
        Some(Assignment::All(t)) => Ok(Some(vec![t.clone(); n])),
        Some(Assignment::Each(ts)) if ts.len() == n => Ok(Some(ts.clone())),
        Some(Assignment::Each(ts)) => Err(schema(
            path,
            format!("{} targets for {n} members", ts.len()),
        )),
    }
}

/// Parses and validates a scenario, reporting the JSON path of schema errors.
pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let scenario: Scenario = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        schema(path, e.into_inner().to_string())
    })?;
    scenario.validate()?;
    Ok(scenario)
}

/// Pretty JSON that [`parse_scenario`] reads back to an equal value.
pub fn emit_scenario(scenario: &Scenario) -> String {
    serde_json::to_string_pretty(scenario).expect("scenario serializes")
}

impl Scenario {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        ThresholdPolicy::new(self.threshold).map_err(|e| schema("threshold", e.to_string()))?;
        SlaSpec::new(self.sla.level, self.sla.horizon)
            .map_err(|e| schema("sla.level", e.to_string()))?;
        self.timing_params()?;
        if self.hosts.is_empty() {
            return Err(schema("hosts", "at least one host group is required"));
        }
        let hosts = self.hosts()?;
        let vms = self.vms()?;
        let containers = self.containers()?;

        let mut seen = BTreeSet::new();
        let all_ids = hosts
            .iter()
            .map(|h| h.id.0.as_str())
            .chain(vms.iter().map(|v| v.id.0.as_str()))
            .chain(containers.iter().map(|c| c.id.0.as_str()));
        for id in all_ids {
            if !seen.insert(id) {
                return Err(schema("", format!("duplicate id `{id}`")));
            }
        }
        let power = hosts[0].max_power_w;
        if hosts.iter().any(|h| h.max_power_w != power) {
            return Err(schema("hosts", "all hosts must share one max_power_w"));
        }

        let vm_pinned = self.vms.iter().filter(|g| g.host.is_some()).count();
        let cnt_pinned = self.containers.iter().filter(|g| g.vm.is_some()).count();
        if vm_pinned != 0 && vm_pinned != self.vms.len() {
            return Err(schema("vms", "either every vm group or none has a `host`"));
        }
        if cnt_pinned != 0 && cnt_pinned != self.containers.len() {
            return Err(schema(
                "containers",
                "either every container group or none has a `vm`",
            ));
        }
        if cnt_pinned > 0 && vm_pinned == 0 {
            return Err(schema(
                "containers",
                "containers are pinned but vms are not",
            ));
        }
        self.state()?;
        Ok(())
    }

    pub fn policy(&self) -> ThresholdPolicy {
        ThresholdPolicy::new(self.threshold).expect("validated threshold")
    }

    pub fn timing_params(&self) -> Result<TimingParams, ScenarioError> {
        let params = self
            .timing
            .as_ref()
            .map(|o| o.apply(TimingParams::default()))
            .unwrap_or_default();
        params
            .check()
            .map_err(|e| schema("timing", e.to_string()))?;
        Ok(params)
    }

    pub fn sla_spec(&self) -> SlaSpec {
        SlaSpec::new(self.sla.level, self.sla.horizon).expect("validated sla")
    }

    pub fn power_model(&self) -> PowerModel {
        PowerModel::new(self.hosts[0].max_power_w).expect("validated power")
    }

    pub fn hosts(&self) -> Result<Vec<Host>, ScenarioError> {
        let mut out = Vec::new();
        for (i, g) in self.hosts.iter().enumerate() {
            let path = format!("hosts[{i}]");
            let spec = ResourceSpec::new(g.pes, g.mips, g.ram_mb, g.bw)
                .map_err(|e| schema(&path, e.to_string()))?;
            for id in member_ids(&path, &g.name, g.count, &g.ids)? {
                out.push(
                    Host::new(id, spec, g.max_power_w).map_err(|e| schema(&path, e.to_string()))?,
                );
            }
        }
        Ok(out)
    }

    pub fn vms(&self) -> Result<Vec<Vm>, ScenarioError> {
        let mut out = Vec::new();
        for (i, g) in self.vms.iter().enumerate() {
            let path = format!("vms[{i}]");
            let spec = ResourceSpec::new(g.pes, g.mips, g.ram_mb, g.bw)
                .map_err(|e| schema(&path, e.to_string()))?;
            for id in member_ids(&path, &g.name, g.count, &g.ids)? {
                out.push(Vm::new(id, spec).map_err(|e| schema(&path, e.to_string()))?);
            }
        }
        Ok(out)
    }

    pub fn containers(&self) -> Result<Vec<Container>, ScenarioError> {
        let mut out = Vec::new();
        for (i, g) in self.containers.iter().enumerate() {
            let path = format!("containers[{i}]");
            let spec = ResourceSpec::new(g.pes, g.mips, g.ram_mb, g.bw)
                .map_err(|e| schema(&path, e.to_string()))?;
            let resident = g.resident_mb.unwrap_or(g.ram_mb.min(DEFAULT_RESIDENT_MB));
            for id in member_ids(&path, &g.name, g.count, &g.ids)? {
                out.push(
                    Container::new(id, spec, resident).map_err(|e| schema(&path, e.to_string()))?,
                );
            }
        }
        Ok(out)
    }

    /// Whether the scenario pins every VM to a host.
    pub fn has_layout(&self) -> bool {
        !self.vms.is_empty() && self.vms.iter().all(|g| g.host.is_some())
    }

    /// The pinned starting layout, if any. Errors if it breaks the threshold.
    pub fn state(&self) -> Result<Option<DatacenterState>, ScenarioError> {
        if !self.has_layout() {
            return Ok(None);
        }
        let mut state = DatacenterState::new();
        for h in self.hosts()? {
            state
                .insert_host(h)
                .map_err(|e| schema("hosts", e.to_string()))?;
        }
        let vms = self.vms()?;
        let mut next = 0;
        for (i, g) in self.vms.iter().enumerate() {
            let path = format!("vms[{i}].host");
            let n = member_ids(&path, &g.name, g.count, &g.ids)?.len();
            let hosts = targets(&path, &g.host, n)?.unwrap_or_default();
            for host in hosts {
                state
                    .insert_vm(vms[next].clone(), &HostId(host))
                    .map_err(|e| schema(&path, e.to_string()))?;
                next += 1;
            }
        }
        let containers = self.containers()?;
        let mut next = 0;
        for (i, g) in self.containers.iter().enumerate() {
            let path = format!("containers[{i}].vm");
            let n = member_ids(&path, &g.name, g.count, &g.ids)?.len();
            let vms = targets(&path, &g.vm, n)?.unwrap_or_default();
            for vm in vms {
                state
                    .insert_container(containers[next].clone(), &VmId(vm))
                    .map_err(|e| schema(&path, e.to_string()))?;
                next += 1;
            }
        }
        let violations = state.validate(&self.policy());
        if let Some(v) = violations.first() {
            return Err(ScenarioError::Infeasible(v.to_string()));
        }
        Ok(Some(state))
    }
}
