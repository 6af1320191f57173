//! Resource hierarchy, placement maps and RAM capacity arithmetic.
//!
//! Only RAM constrains placement; PEs, MIPS and bandwidth are carried for
//! reporting. A VM reserves its full nominal RAM on its host regardless of
//! how many containers it runs.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

macro_rules! id_type {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub String);

        impl $name {
            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                Self(String::from(s))
            }
        }

        impl From<String> for $name {
            fn from(s: String) -> Self {
                Self(s)
            }
        }
    };
}

id_type!(
    /// Identifier of a physical machine.
    HostId
);
id_type!(
    /// Identifier of a virtual machine.
    VmId
);
id_type!(
    /// Identifier of a container.
    ContainerId
);

/// Processing elements, MIPS, RAM and bandwidth of a host, VM or container.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResourceSpec {
    pub pes: u32,
    pub mips: u64,
    pub ram_mb: u64,
    /// Abstract bandwidth units. Timing uses a scenario-level MB/s figure.
    pub bw: u64,
}

impl ResourceSpec {
    pub fn new(pes: u32, mips: u64, ram_mb: u64, bw: u64) -> Result<Self> {
        let spec = Self {
            pes,
            mips,
            ram_mb,
            bw,
        };
        spec.check()?;
        Ok(spec)
    }

    /// A spec with one PE and no MIPS/bandwidth, for RAM-only fixtures.
    pub fn ram(ram_mb: u64) -> Self {
        Self {
            pes: 1,
            mips: 0,
            ram_mb,
            bw: 0,
        }
    }

    pub fn check(&self) -> Result<()> {
        if self.pes < 1 {
            return Err(Error::Domain("pes must be at least 1".into()));
        }
        if self.ram_mb < 1 {
            return Err(Error::Domain("ram_mb must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Host {
    pub id: HostId,
    pub spec: ResourceSpec,
    pub max_power_w: f64,
    pub active: bool,
}

impl Host {
    pub fn new(id: impl Into<HostId>, spec: ResourceSpec, max_power_w: f64) -> Result<Self> {
        spec.check()?;
        if !(max_power_w > 0.0) {
            return Err(Error::Domain("max_power_w must be positive".into()));
        }
        Ok(Self {
            id: id.into(),
            spec,
            max_power_w,
            active: true,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vm {
    pub id: VmId,
    pub spec: ResourceSpec,
}

impl Vm {
    pub fn new(id: impl Into<VmId>, spec: ResourceSpec) -> Result<Self> {
        spec.check()?;
        Ok(Self {
            id: id.into(),
            spec,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Container {
    pub id: ContainerId,
    pub spec: ResourceSpec,
    /// Size of the checkpointable state moved by a freeze/restore migration.
    pub resident_mb: u64,
}

impl Container {
    pub fn new(id: impl Into<ContainerId>, spec: ResourceSpec, resident_mb: u64) -> Result<Self> {
        spec.check()?;
        if resident_mb == 0 || resident_mb > spec.ram_mb {
            return Err(Error::Domain(format!(
                "resident_mb must be in 1..={}, got {resident_mb}",
                spec.ram_mb
            )));
        }
        Ok(Self {
            id: id.into(),
            spec,
            resident_mb,
        })
    }

    /// Resident set defaults to `min(32, ram_mb)`.
    pub fn with_default_resident(id: impl Into<ContainerId>, spec: ResourceSpec) -> Result<Self> {
        let resident = spec.ram_mb.min(DEFAULT_RESIDENT_MB);
        Self::new(id, spec, resident)
    }
}

pub const DEFAULT_RESIDENT_MB: u64 = 32;

/// Upper RAM threshold shared by VMs and hosts.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct ThresholdPolicy {
    upper: f64,
}

impl ThresholdPolicy {
    pub fn new(upper: f64) -> Result<Self> {
        if !(upper > 0.0 && upper <= 1.0) {
            return Err(Error::Domain(format!(
                "threshold must be in (0, 1], got {upper}"
            )));
        }
        Ok(Self { upper })
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    /// Usable capacity, `upper × capacity_mb`, as a real number.
    pub fn cap(&self, capacity_mb: u64) -> f64 {
        self.upper * capacity_mb as f64
    }

    /// Whether `used_mb + add_mb` stays within the usable capacity.
    pub fn fits(&self, used_mb: u64, add_mb: u64, capacity_mb: u64) -> bool {
        (used_mb + add_mb) as f64 <= self.cap(capacity_mb)
    }
}

impl TryFrom<f64> for ThresholdPolicy {
    type Error = Error;

    fn try_from(v: f64) -> Result<Self> {
        Self::new(v)
    }
}

impl From<ThresholdPolicy> for f64 {
    fn from(p: ThresholdPolicy) -> f64 {
        p.upper
    }
}

/// Free RAM fraction, `(total - used) / total`.
///
/// Despite the usual name "RAM utilization" this is the *free* share; use
/// [`used_fraction`] for threshold comparisons.
pub fn ram_utilization(total_mb: u64, used_mb: u64) -> Result<f64> {
    if total_mb == 0 {
        return Err(Error::Domain("total RAM must be positive".into()));
    }
    if used_mb > total_mb {
        return Err(Error::Domain(format!(
            "used RAM {used_mb} exceeds total {total_mb}"
        )));
    }
    Ok((total_mb - used_mb) as f64 / total_mb as f64)
}

pub fn used_fraction(total_mb: u64, used_mb: u64) -> Result<f64> {
    ram_utilization(total_mb, used_mb).map(|free| 1.0 - free)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MoveKind {
    /// A VM moves between hosts.
    Vm,
    /// A container moves between VMs.
    Cnt,
}

impl MoveKind {
    pub fn label(self) -> &'static str {
        match self {
            MoveKind::Vm => "vm",
            MoveKind::Cnt => "cnt",
        }
    }
}

/// One live migration. For [`MoveKind::Vm`] the endpoints are host ids, for
/// [`MoveKind::Cnt`] they are VM ids.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Move {
    pub kind: MoveKind,
    pub subject_id: String,
    pub from_id: String,
    pub to_id: String,
}

impl Move {
    pub fn vm(vm: &VmId, from: &HostId, to: &HostId) -> Self {
        Self {
            kind: MoveKind::Vm,
            subject_id: vm.0.clone(),
            from_id: from.0.clone(),
            to_id: to.0.clone(),
        }
    }

    pub fn container(cnt: &ContainerId, from: &VmId, to: &VmId) -> Self {
        Self {
            kind: MoveKind::Cnt,
            subject_id: cnt.0.clone(),
            from_id: from.0.clone(),
            to_id: to.0.clone(),
        }
    }
}

/// A broken invariant found by [`DatacenterState::validate`].
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    VmOverThreshold {
        vm: VmId,
        used_mb: u64,
        cap_mb: f64,
    },
    HostOverThreshold {
        host: HostId,
        used_mb: u64,
        cap_mb: f64,
    },
    UnplacedContainer(ContainerId),
    UnplacedVm(VmId),
    DanglingVmRef {
        container: ContainerId,
        vm: VmId,
    },
    DanglingHostRef {
        vm: VmId,
        host: HostId,
    },
    UnknownMappedContainer(ContainerId),
    UnknownMappedVm(VmId),
    InactiveHostInUse(HostId),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::VmOverThreshold {
                vm,
                used_mb,
                cap_mb,
            } => {
                write!(
                    f,
                    "vm {vm} holds {used_mb} MB, above its cap of {cap_mb} MB"
                )
            }
            Violation::HostOverThreshold {
                host,
                used_mb,
                cap_mb,
            } => write!(
                f,
                "host {host} holds {used_mb} MB, above its cap of {cap_mb} MB"
            ),
            Violation::UnplacedContainer(c) => write!(f, "container {c} has no vm"),
            Violation::UnplacedVm(v) => write!(f, "vm {v} has no host"),
            Violation::DanglingVmRef { container, vm } => {
                write!(f, "container {container} maps to unknown vm {vm}")
            }
            Violation::DanglingHostRef { vm, host } => {
                write!(f, "vm {vm} maps to unknown host {host}")
            }
            Violation::UnknownMappedContainer(c) => {
                write!(f, "map entry for unknown container {c}")
            }
            Violation::UnknownMappedVm(v) => write!(f, "map entry for unknown vm {v}"),
            Violation::InactiveHostInUse(h) => write!(f, "inactive host {h} hosts vms"),
        }
    }
}

/// Snapshot of hosts, VMs, containers and the two placement maps.
///
/// Operations that change placement take `&self` and return a new state.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DatacenterState {
    hosts: BTreeMap<HostId, Host>,
    vms: BTreeMap<VmId, Vm>,
    containers: BTreeMap<ContainerId, Container>,
    vm_of: BTreeMap<ContainerId, VmId>,
    host_of: BTreeMap<VmId, HostId>,
}

impl DatacenterState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert_host(&mut self, host: Host) -> Result<()> {
        if self.hosts.contains_key(&host.id) {
            return Err(Error::DuplicateId(host.id.0));
        }
        self.hosts.insert(host.id.clone(), host);
        Ok(())
    }

    /// Adds `vm` on `host`. Capacity is not checked here; use [`Self::validate`].
    pub fn insert_vm(&mut self, vm: Vm, host: &HostId) -> Result<()> {
        if self.vms.contains_key(&vm.id) {
            return Err(Error::DuplicateId(vm.id.0));
        }
        if !self.hosts.contains_key(host) {
            return Err(Error::UnknownHost(host.clone()));
        }
        self.host_of.insert(vm.id.clone(), host.clone());
        self.vms.insert(vm.id.clone(), vm);
        Ok(())
    }

    pub fn insert_container(&mut self, container: Container, vm: &VmId) -> Result<()> {
        if self.containers.contains_key(&container.id) {
            return Err(Error::DuplicateId(container.id.0));
        }
        if !self.vms.contains_key(vm) {
            return Err(Error::UnknownVm(vm.clone()));
        }
        self.vm_of.insert(container.id.clone(), vm.clone());
        self.containers.insert(container.id.clone(), container);
        Ok(())
    }

    /// Removes a VM that holds no containers.
    pub(crate) fn deallocate_vm(&mut self, vm: &VmId) -> Result<()> {
        if self.vm_of.values().any(|v| v == vm) {
            return Err(Error::Domain(format!("vm {vm} still holds containers")));
        }
        self.vms
            .remove(vm)
            .ok_or_else(|| Error::UnknownVm(vm.clone()))?;
        self.host_of.remove(vm);
        Ok(())
    }

    pub(crate) fn set_host_active(&mut self, host: &HostId, active: bool) -> Result<()> {
        let h = self
            .hosts
            .get_mut(host)
            .ok_or_else(|| Error::UnknownHost(host.clone()))?;
        h.active = active;
        Ok(())
    }

    pub fn hosts(&self) -> impl Iterator<Item = &Host> {
        self.hosts.values()
    }

    pub fn vms(&self) -> impl Iterator<Item = &Vm> {
        self.vms.values()
    }

    pub fn containers(&self) -> impl Iterator<Item = &Container> {
        self.containers.values()
    }

    pub fn host(&self, id: &HostId) -> Result<&Host> {
        self.hosts
            .get(id)
            .ok_or_else(|| Error::UnknownHost(id.clone()))
    }

    pub fn vm(&self, id: &VmId) -> Result<&Vm> {
        self.vms.get(id).ok_or_else(|| Error::UnknownVm(id.clone()))
    }

    pub fn container(&self, id: &ContainerId) -> Result<&Container> {
        self.containers
            .get(id)
            .ok_or_else(|| Error::UnknownContainer(id.clone()))
    }

    pub fn vm_of(&self, container: &ContainerId) -> Option<&VmId> {
        self.vm_of.get(container)
    }

    pub fn host_of(&self, vm: &VmId) -> Option<&HostId> {
        self.host_of.get(vm)
    }

    pub fn host_count(&self) -> usize {
        self.hosts.len()
    }

    pub fn vm_count(&self) -> usize {
        self.vms.len()
    }

    pub fn container_count(&self) -> usize {
        self.containers.len()
    }

    /// VMs placed on `host`, in id order.
    pub fn vms_on<'a>(&'a self, host: &'a HostId) -> impl Iterator<Item = &'a Vm> + 'a {
        self.host_of
            .iter()
            .filter(move |(_, h)| *h == host)
            .filter_map(|(v, _)| self.vms.get(v))
    }

    /// Containers placed on `vm`, in id order.
    pub fn containers_on<'a>(&'a self, vm: &'a VmId) -> impl Iterator<Item = &'a Container> + 'a {
        self.vm_of
            .iter()
            .filter(move |(_, v)| *v == vm)
            .filter_map(|(c, _)| self.containers.get(c))
    }

    /// Sum of container RAM on `vm`.
    pub fn vm_used_ram(&self, vm: &VmId) -> Result<u64> {
        self.vm(vm)?;
        Ok(self.containers_on(vm).map(|c| c.spec.ram_mb).sum())
    }

    /// Sum of nominal RAM of the VMs on `host`.
    pub fn host_used_ram(&self, host: &HostId) -> Result<u64> {
        self.host(host)?;
        Ok(self.vms_on(host).map(|v| v.spec.ram_mb).sum())
    }

    pub fn vm_used_fraction(&self, vm: &VmId) -> Result<f64> {
        let total = self.vm(vm)?.spec.ram_mb;
        Ok(self.vm_used_ram(vm)? as f64 / total as f64)
    }

    pub fn host_used_fraction(&self, host: &HostId) -> Result<f64> {
        let total = self.host(host)?.spec.ram_mb;
        let used = self.host_used_ram(host)?;
        // Overcommitted hosts (only reachable by lowering the threshold after
        // placement or by hand-built states) report fractions above 1.
        Ok(used as f64 / total as f64)
    }

    /// Whether `host` runs at least one VM.
    pub fn is_host_in_use(&self, host: &HostId) -> bool {
        self.host_of.values().any(|h| h == host)
    }

    /// Every invariant breach, in a deterministic order. Empty means valid.
    pub fn validate(&self, policy: &ThresholdPolicy) -> Vec<Violation> {
        let mut out = Vec::new();
        for (c, v) in &self.vm_of {
            if !self.containers.contains_key(c) {
                out.push(Violation::UnknownMappedContainer(c.clone()));
            }
            if !self.vms.contains_key(v) {
                out.push(Violation::DanglingVmRef {
                    container: c.clone(),
                    vm: v.clone(),
                });
            }
        }
        for (v, h) in &self.host_of {
            if !self.vms.contains_key(v) {
                out.push(Violation::UnknownMappedVm(v.clone()));
            }
            if !self.hosts.contains_key(h) {
                out.push(Violation::DanglingHostRef {
                    vm: v.clone(),
                    host: h.clone(),
                });
            }
        }
        for c in self.containers.keys() {
            if !self.vm_of.contains_key(c) {
                out.push(Violation::UnplacedContainer(c.clone()));
            }
        }
        for vm in self.vms.values() {
            if !self.host_of.contains_key(&vm.id) {
                out.push(Violation::UnplacedVm(vm.id.clone()));
            }
            let used: u64 = self.containers_on(&vm.id).map(|c| c.spec.ram_mb).sum();
            if used as f64 > policy.cap(vm.spec.ram_mb) {
                out.push(Violation::VmOverThreshold {
                    vm: vm.id.clone(),
                    used_mb: used,
                    cap_mb: policy.cap(vm.spec.ram_mb),
                });
            }
        }
        for host in self.hosts.values() {
            let used: u64 = self.vms_on(&host.id).map(|v| v.spec.ram_mb).sum();
            if used as f64 > policy.cap(host.spec.ram_mb) {
                out.push(Violation::HostOverThreshold {
                    host: host.id.clone(),
                    used_mb: used,
                    cap_mb: policy.cap(host.spec.ram_mb),
                });
            }
            if !host.active && used > 0 {
                out.push(Violation::InactiveHostInUse(host.id.clone()));
            }
        }
        out
    }

    pub fn is_valid(&self, policy: &ThresholdPolicy) -> bool {
        self.validate(policy).is_empty()
    }

    /// Number of hosts running at least one VM.
    pub fn active_hosts(&self) -> usize {
        self.hosts.keys().filter(|h| self.is_host_in_use(h)).count()
    }

    /// Applies `mv` and returns the new state.
    ///
    /// Only the receiving VM or host is checked against `policy`: a move never
    /// adds load anywhere else, so a valid input stays valid, and an
    /// overloaded source can still be relieved.
    pub fn apply_move(&self, mv: &Move, policy: &ThresholdPolicy) -> Result<Self> {
        if mv.from_id == mv.to_id {
            return Err(Error::NoOpMove(mv.subject_id.clone()));
        }
        let mut next = self.clone();
        match mv.kind {
            MoveKind::Cnt => {
                let cid = ContainerId(mv.subject_id.clone());
                let container = self.container(&cid)?;
                let current = self.vm_of(&cid).ok_or_else(|| Error::StaleMove {
                    subject: mv.subject_id.clone(),
                    expected: mv.from_id.clone(),
                })?;
                if current.0 != mv.from_id {
                    return Err(Error::StaleMove {
                        subject: mv.subject_id.clone(),
                        expected: mv.from_id.clone(),
                    });
                }
                let target = VmId(mv.to_id.clone());
                let target_vm = self.vm(&target)?;
                let used = self.vm_used_ram(&target)?;
                if !policy.fits(used, container.spec.ram_mb, target_vm.spec.ram_mb) {
                    return Err(Error::RejectedMove {
                        target: mv.to_id.clone(),
                        needed_mb: used + container.spec.ram_mb,
                        cap_mb: policy.cap(target_vm.spec.ram_mb),
                    });
                }
                next.vm_of.insert(cid, target);
            }
            MoveKind::Vm => {
                let vid = VmId(mv.subject_id.clone());
                let vm = self.vm(&vid)?;
                let current = self.host_of(&vid).ok_or_else(|| Error::StaleMove {
                    subject: mv.subject_id.clone(),
                    expected: mv.from_id.clone(),
                })?;
                if current.0 != mv.from_id {
                    return Err(Error::StaleMove {
                        subject: mv.subject_id.clone(),
                        expected: mv.from_id.clone(),
                    });
                }
                let target = HostId(mv.to_id.clone());
                let target_host = self.host(&target)?;
                let used = self.host_used_ram(&target)?;
                if !policy.fits(used, vm.spec.ram_mb, target_host.spec.ram_mb) {
                    return Err(Error::RejectedMove {
                        target: mv.to_id.clone(),
                        needed_mb: used + vm.spec.ram_mb,
                        cap_mb: policy.cap(target_host.spec.ram_mb),
                    });
                }
                next.host_of.insert(vid, target.clone());
                next.set_host_active(&target, true)?;
            }
        }
        Ok(next)
    }

    /// Applies `mv` with structural checks only (no threshold check).
    pub(crate) fn apply_move_unchecked(&self, mv: &Move) -> Result<Self> {
        let relaxed = ThresholdPolicy {
            upper: f64::INFINITY,
        };
        self.apply_move(mv, &relaxed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn host(id: &str, ram: u64) -> Host {
        Host::new(id, ResourceSpec::ram(ram), 250.0).unwrap()
    }

    fn vm(id: &str, ram: u64) -> Vm {
        Vm::new(id, ResourceSpec::ram(ram)).unwrap()
    }

    fn cnt(id: &str, ram: u64) -> Container {
        Container::with_default_resident(id, ResourceSpec::ram(ram)).unwrap()
    }

    fn p(t: f64) -> ThresholdPolicy {
        ThresholdPolicy::new(t).unwrap()
    }

    #[test]
    fn ram_utilization_is_the_free_share() {
        assert_eq!(ram_utilization(65536, 0).unwrap(), 1.0);
        assert_eq!(ram_utilization(1024, 1024).unwrap(), 0.0);
        assert_eq!(ram_utilization(2048, 512).unwrap(), 0.75);
        assert_eq!(used_fraction(2048, 512).unwrap(), 0.25);
        assert!(ram_utilization(1024, 1025).is_err());
        assert!(ram_utilization(0, 0).is_err());
    }

    #[test]
    fn spec_invariants() {
        assert!(ResourceSpec::new(0, 1, 1, 0).is_err());
        assert!(ResourceSpec::new(1, 0, 0, 0).is_err());
        assert!(ResourceSpec::new(1, 0, 1, 0).is_ok());
        assert!(Container::new("c", ResourceSpec::ram(512), 0).is_err());
        assert!(Container::new("c", ResourceSpec::ram(512), 513).is_err());
        assert_eq!(cnt("c", 16).resident_mb, 16);
        assert_eq!(cnt("c", 512).resident_mb, 32);
        assert!(Host::new("h", ResourceSpec::ram(1), 0.0).is_err());
        assert!(ThresholdPolicy::new(0.0).is_err());
        assert!(ThresholdPolicy::new(1.5).is_err());
        assert!(ThresholdPolicy::new(f64::NAN).is_err());
        assert!(ThresholdPolicy::new(1.0).is_ok());
    }

    fn one_vm_state(containers: &[u64]) -> DatacenterState {
        let mut s = DatacenterState::new();
        s.insert_host(host("h1", 65536)).unwrap();
        s.insert_vm(vm("v1", 1024), &"h1".into()).unwrap();
        for (i, ram) in containers.iter().enumerate() {
            s.insert_container(cnt(&format!("c{i}"), *ram), &"v1".into())
                .unwrap();
        }
        s
    }

    #[test]
    fn vm_used_ram_sums_containers() {
        let s = one_vm_state(&[512, 256, 128]);
        assert_eq!(s.vm_used_ram(&"v1".into()).unwrap(), 896);
        assert_eq!(one_vm_state(&[]).vm_used_ram(&"v1".into()).unwrap(), 0);
        assert_eq!(
            one_vm_state(&[512, 512]).vm_used_ram(&"v1".into()).unwrap(),
            1024
        );
        assert_eq!(
            s.vm_used_ram(&"nope".into()),
            Err(Error::UnknownVm("nope".into()))
        );
    }

    #[test]
    fn host_used_ram_counts_nominal_vm_ram() {
        let mut s = DatacenterState::new();
        s.insert_host(host("h1", 8192)).unwrap();
        s.insert_host(host("h2", 8192)).unwrap();
        s.insert_host(host("h3", 8192)).unwrap();
        for i in 0..3 {
            s.insert_vm(vm(&format!("a{i}"), 2048), &"h1".into())
                .unwrap();
        }
        for i in 0..4 {
            s.insert_vm(vm(&format!("b{i}"), 2048), &"h2".into())
                .unwrap();
        }
        assert_eq!(s.host_used_ram(&"h1".into()).unwrap(), 6144);
        assert_eq!(s.host_used_ram(&"h2".into()).unwrap(), 8192);
        assert_eq!(s.host_used_ram(&"h3".into()).unwrap(), 0);
        assert!(s.host_used_ram(&"h9".into()).is_err());
        assert_eq!(s.active_hosts(), 2);
    }

    #[test]
    fn validate_threshold_bounds() {
        assert!(one_vm_state(&[512, 256, 128]).is_valid(&p(0.9)));
        let v = one_vm_state(&[512, 512]).validate(&p(0.9));
        assert_eq!(v.len(), 1);
        assert!(
            matches!(&v[0], Violation::VmOverThreshold { vm, used_mb: 1024, .. } if vm.as_str() == "v1")
        );
        assert!(DatacenterState::new().is_valid(&p(0.9)));
        assert_eq!(DatacenterState::new().active_hosts(), 0);
    }

    #[test]
    fn validate_flags_inactive_host_with_vms() {
        let mut s = one_vm_state(&[]);
        s.set_host_active(&"h1".into(), false).unwrap();
        assert_eq!(
            s.validate(&p(1.0)),
            vec![Violation::InactiveHostInUse("h1".into())]
        );
    }

    fn two_vm_state() -> DatacenterState {
        let mut s = one_vm_state(&[512]);
        s.insert_vm(vm("v7", 1024), &"h1".into()).unwrap();
        s.insert_container(cnt("c1", 256), &"v7".into()).unwrap();
        s
    }

    #[test]
    fn apply_move_updates_map_and_keeps_input() {
        let s = two_vm_state();
        let mv = Move::container(&"c1".into(), &"v7".into(), &"v1".into());
        let next = s.apply_move(&mv, &p(0.9)).unwrap();
        assert_eq!(next.vm_of(&"c1".into()).unwrap().as_str(), "v1");
        assert_eq!(s.vm_of(&"c1".into()).unwrap().as_str(), "v7");
        assert!(next.is_valid(&p(0.9)));
    }

    #[test]
    fn apply_move_rejections() {
        let mut s = two_vm_state();
        s.insert_container(cnt("big", 512), &"v7".into()).unwrap();
        let over = Move::container(&"big".into(), &"v7".into(), &"v1".into());
        assert!(matches!(
            s.apply_move(&over, &p(0.9)),
            Err(Error::RejectedMove {
                needed_mb: 1024,
                ..
            })
        ));
        let noop = Move::container(&"c1".into(), &"v7".into(), &"v7".into());
        assert_eq!(
            s.apply_move(&noop, &p(0.9)),
            Err(Error::NoOpMove("c1".into()))
        );
        let stale = Move::container(&"c1".into(), &"v1".into(), &"v7".into());
        assert!(matches!(
            s.apply_move(&stale, &p(0.9)),
            Err(Error::StaleMove { .. })
        ));
    }

    #[test]
    fn vm_move_respects_host_threshold() {
        let mut s = DatacenterState::new();
        s.insert_host(host("h1", 8192)).unwrap();
        s.insert_host(host("h2", 8192)).unwrap();
        for i in 0..3 {
            s.insert_vm(vm(&format!("a{i}"), 2048), &"h1".into())
                .unwrap();
        }
        s.insert_vm(vm("b", 2048), &"h2".into()).unwrap();
        let mv = Move::vm(&"b".into(), &"h2".into(), &"h1".into());
        assert!(matches!(
            s.apply_move(&mv, &p(0.9)),
            Err(Error::RejectedMove { .. })
        ));
        let next = s.apply_move(&mv, &p(1.0)).unwrap();
        assert_eq!(next.active_hosts(), 1);
    }

    #[test]
    fn duplicate_and_unknown_refs() {
        let mut s = one_vm_state(&[]);
        assert!(matches!(
            s.insert_host(host("h1", 1)),
            Err(Error::DuplicateId(_))
        ));
        assert!(matches!(
            s.insert_vm(vm("v2", 1), &"hx".into()),
            Err(Error::UnknownHost(_))
        ));
        assert!(matches!(
            s.insert_container(cnt("c", 1), &"vx".into()),
            Err(Error::UnknownVm(_))
        ));
    }
}
