//! Threshold-driven consolidation: drain coldspots so they can be powered
//! off, relieve hotspots, and admit new containers.
//!
//! Draining works at one of two granularities. VM migration moves whole VMs
//! between hosts and is limited by host RAM (a VM reserves its full nominal
//! RAM). Container migration moves containers into VMs on other hosts and is
//! limited only by VM headroom; the emptied VMs are then deallocated, which
//! is what lets their host power off.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::model::{
    Container, DatacenterState, HostId, Move, ResourceSpec, ThresholdPolicy, Vm, VmId,
};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MigrationMode {
    Vm,
    Container,
}

impl MigrationMode {
    pub fn label(self) -> &'static str {
        match self {
            MigrationMode::Vm => "vm",
            MigrationMode::Container => "container",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConsolidationPolicy {
    pub threshold: ThresholdPolicy,
    pub mode: MigrationMode,
    /// All-or-nothing host evacuation.
    pub atomic_drain: bool,
}

impl ConsolidationPolicy {
    pub fn new(threshold: ThresholdPolicy, mode: MigrationMode) -> Self {
        Self {
            threshold,
            mode,
            atomic_drain: true,
        }
    }
}

/// Ordered moves plus what they free up once committed.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MigrationPlan {
    pub moves: Vec<Move>,
    pub freed_hosts: Vec<HostId>,
    pub freed_vms: Vec<VmId>,
    pub committed: bool,
}

impl MigrationPlan {
    pub fn empty_committed() -> Self {
        Self {
            committed: true,
            ..Self::default()
        }
    }

    fn rejected(tentative: Vec<Move>) -> Self {
        Self {
            moves: tentative,
            ..Self::default()
        }
    }

    pub fn vm_moves(&self) -> usize {
        self.moves
            .iter()
            .filter(|m| m.kind == crate::model::MoveKind::Vm)
            .count()
    }

    pub fn container_moves(&self) -> usize {
        self.moves.len() - self.vm_moves()
    }

    fn extend(&mut self, other: MigrationPlan) {
        self.moves.extend(other.moves);
        self.freed_hosts.extend(other.freed_hosts);
        self.freed_vms.extend(other.freed_vms);
    }

    /// Re-applies a committed plan to the state it was computed from: the
    /// moves in order, then VM deallocation and host power-off.
    pub fn replay(&self, before: &DatacenterState) -> Result<DatacenterState> {
        if !self.committed {
            return Err(Error::Uncommitted);
        }
        let mut state = before.clone();
        for mv in &self.moves {
            state = state.apply_move_unchecked(mv)?;
        }
        for vm in &self.freed_vms {
            state.deallocate_vm(vm)?;
        }
        for host in &self.freed_hosts {
            state.set_host_active(host, false)?;
        }
        Ok(state)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdmissionDecision {
    pub accepted: bool,
    pub target_vm: Option<VmId>,
    pub reason: String,
}

/// Result of [`distribute_hotspot`].
#[derive(Debug, Clone, PartialEq)]
pub struct HotspotOutcome {
    pub state: DatacenterState,
    pub plan: MigrationPlan,
    pub still_overloaded: bool,
}

fn by_fraction_desc(a: (f64, &str), b: (f64, &str)) -> Ordering {
    b.0.total_cmp(&a.0).then_with(|| a.1.cmp(b.1))
}

/// Hosts in use other than `exclude`, fullest first.
fn target_hosts(state: &DatacenterState, exclude: &HostId) -> Result<Vec<HostId>> {
    let mut out: Vec<(f64, HostId)> = Vec::new();
    for h in state.hosts() {
        if &h.id != exclude && state.is_host_in_use(&h.id) {
            out.push((state.host_used_fraction(&h.id)?, h.id.clone()));
        }
    }
    out.sort_by(|a, b| by_fraction_desc((a.0, a.1.as_str()), (b.0, b.1.as_str())));
    Ok(out.into_iter().map(|(_, h)| h).collect())
}

/// VMs on hosts in use other than `exclude`, fullest first.
fn target_vms(state: &DatacenterState, exclude: &HostId) -> Result<Vec<VmId>> {
    let mut out: Vec<(f64, VmId)> = Vec::new();
    for vm in state.vms() {
        match state.host_of(&vm.id) {
            Some(h) if h != exclude => out.push((state.vm_used_fraction(&vm.id)?, vm.id.clone())),
            _ => {}
        }
    }
    out.sort_by(|a, b| by_fraction_desc((a.0, a.1.as_str()), (b.0, b.1.as_str())));
    Ok(out.into_iter().map(|(_, v)| v).collect())
}

/// Hosts in use, least loaded first (ties by id).
pub fn find_coldspots(state: &DatacenterState) -> Result<Vec<HostId>> {
    let mut hosts: Vec<(f64, HostId)> = Vec::new();
    for h in state.hosts() {
        if state.is_host_in_use(&h.id) {
            hosts.push((state.host_used_fraction(&h.id)?, h.id.clone()));
        }
    }
    hosts.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
    Ok(hosts.into_iter().map(|(_, h)| h).collect())
}

/// Deallocates the empty VMs on `host` and powers it off if nothing is left.
fn release(state: &mut DatacenterState, host: &HostId, plan: &mut MigrationPlan) -> Result<()> {
    let empty: Vec<VmId> = state
        .vms_on(host)
        .filter(|vm| state.containers_on(&vm.id).next().is_none())
        .map(|vm| vm.id.clone())
        .collect();
    for vm in empty {
        state.deallocate_vm(&vm)?;
        plan.freed_vms.push(vm);
    }
    if !state.is_host_in_use(host) {
        state.set_host_active(host, false)?;
        plan.freed_hosts.push(host.clone());
    }
    Ok(())
}

/// Evacuates `host` by moving its VMs, largest first, onto the fullest other
/// host that stays under the threshold.
pub fn drain_host_by_vm_migration(
    state: &DatacenterState,
    host: &HostId,
    policy: &ConsolidationPolicy,
) -> Result<(DatacenterState, MigrationPlan)> {
    state.host(host)?;
    if !state.is_host_in_use(host) {
        return Ok((state.clone(), MigrationPlan::empty_committed()));
    }
    let mut vms: Vec<Vm> = state.vms_on(host).cloned().collect();
    vms.sort_by(|a, b| {
        b.spec
            .ram_mb
            .cmp(&a.spec.ram_mb)
            .then_with(|| a.id.cmp(&b.id))
    });

    let mut cur = state.clone();
    let mut moves = Vec::new();
    for vm in &vms {
        let mut chosen = None;
        for target in target_hosts(&cur, host)? {
            let cap = cur.host(&target)?.spec.ram_mb;
            if policy
                .threshold
                .fits(cur.host_used_ram(&target)?, vm.spec.ram_mb, cap)
            {
                chosen = Some(target);
                break;
            }
        }
        match chosen {
            Some(target) => {
                let mv = Move::vm(&vm.id, host, &target);
                cur = cur.apply_move(&mv, &policy.threshold)?;
                moves.push(mv);
            }
            None if policy.atomic_drain => {
                return Ok((state.clone(), MigrationPlan::rejected(moves)));
            }
            None => {}
        }
    }
    let mut plan = MigrationPlan {
        moves,
        committed: true,
        ..MigrationPlan::default()
    };
    if !cur.is_host_in_use(host) {
        cur.set_host_active(host, false)?;
        plan.freed_hosts.push(host.clone());
    }
    Ok((cur, plan))
}

/// Evacuates `host` container by container, largest first, each into the
/// fullest VM on another host with headroom under the threshold. On success
/// the emptied VMs are deallocated and the host is powered off.
pub fn drain_host_by_container_migration(
    state: &DatacenterState,
    host: &HostId,
    policy: &ConsolidationPolicy,
) -> Result<(DatacenterState, MigrationPlan)> {
    state.host(host)?;
    if !state.is_host_in_use(host) {
        return Ok((state.clone(), MigrationPlan::empty_committed()));
    }
    let mut containers: Vec<(Container, VmId)> = Vec::new();
    for vm in state.vms_on(host) {
        for c in state.containers_on(&vm.id) {
            containers.push((c.clone(), vm.id.clone()));
        }
    }
    containers.sort_by(|a, b| {
        b.0.spec
            .ram_mb
            .cmp(&a.0.spec.ram_mb)
            .then_with(|| a.0.id.cmp(&b.0.id))
    });

    let mut cur = state.clone();
    let mut moves = Vec::new();
    for (c, from) in &containers {
        let mut chosen = None;
        for target in target_vms(&cur, host)? {
            let cap = cur.vm(&target)?.spec.ram_mb;
            if policy
                .threshold
                .fits(cur.vm_used_ram(&target)?, c.spec.ram_mb, cap)
            {
                chosen = Some(target);
                break;
            }
        }
        match chosen {
            Some(target) => {
                let mv = Move::container(&c.id, from, &target);
                cur = cur.apply_move(&mv, &policy.threshold)?;
                moves.push(mv);
            }
            None if policy.atomic_drain => {
                return Ok((state.clone(), MigrationPlan::rejected(moves)));
            }
            None => {}
        }
    }
    let mut plan = MigrationPlan {
        moves,
        committed: true,
        ..MigrationPlan::default()
    };
    release(&mut cur, host, &mut plan)?;
    Ok((cur, plan))
}

fn drain(
    state: &DatacenterState,
    host: &HostId,
    policy: &ConsolidationPolicy,
) -> Result<(DatacenterState, MigrationPlan)> {
    match policy.mode {
        MigrationMode::Vm => drain_host_by_vm_migration(state, host, policy),
        MigrationMode::Container => drain_host_by_container_migration(state, host, policy),
    }
}

/// Moves VMs off an overloaded host, smallest first, until it is back under
/// the threshold or nothing else fits anywhere.
///
/// Targets are other powered hosts that stay under the threshold after the
/// move, fullest first.
pub fn distribute_hotspot(
    state: &DatacenterState,
    host: &HostId,
    threshold: &ThresholdPolicy,
) -> Result<HotspotOutcome> {
    let ram = state.host(host)?.spec.ram_mb;
    let overloaded = |s: &DatacenterState| -> Result<bool> {
        Ok(s.host_used_ram(host)? as f64 > threshold.cap(ram))
    };
    if !overloaded(state)? {
        return Err(Error::NotOverloaded {
            host: host.clone(),
            used_fraction: state.host_used_fraction(host)?,
        });
    }
    let mut cur = state.clone();
    let mut plan = MigrationPlan::empty_committed();
    while overloaded(&cur)? {
        let mut vms: Vec<Vm> = cur.vms_on(host).cloned().collect();
        vms.sort_by(|a, b| {
            a.spec
                .ram_mb
                .cmp(&b.spec.ram_mb)
                .then_with(|| a.id.cmp(&b.id))
        });

        let mut targets: Vec<(f64, HostId)> = Vec::new();
        for h in cur.hosts() {
            if &h.id != host && h.active {
                targets.push((cur.host_used_fraction(&h.id)?, h.id.clone()));
            }
        }
        targets.sort_by(|a, b| by_fraction_desc((a.0, a.1.as_str()), (b.0, b.1.as_str())));

        let mut next = None;
        'search: for vm in &vms {
            for (_, t) in &targets {
                let cap = cur.host(t)?.spec.ram_mb;
                if threshold.fits(cur.host_used_ram(t)?, vm.spec.ram_mb, cap) {
                    next = Some(Move::vm(&vm.id, host, t));
                    break 'search;
                }
            }
        }
        match next {
            Some(mv) => {
                cur = cur.apply_move(&mv, threshold)?;
                plan.moves.push(mv);
            }
            None => {
                return Ok(HotspotOutcome {
                    state: cur,
                    plan,
                    still_overloaded: true,
                });
            }
        }
    }
    Ok(HotspotOutcome {
        state: cur,
        plan,
        still_overloaded: false,
    })
}

/// Repeatedly drains the coldest drainable host until none can be freed.
///
/// Only drains that power a host off are kept, so every iteration strictly
/// reduces the number of hosts in use.
pub fn consolidate(
    state: &DatacenterState,
    policy: &ConsolidationPolicy,
) -> Result<(DatacenterState, MigrationPlan)> {
    let mut cur = state.clone();
    let mut combined = MigrationPlan::empty_committed();
    'outer: loop {
        for host in find_coldspots(&cur)? {
            let (next, plan) = drain(&cur, &host, policy)?;
            if plan.committed && plan.freed_hosts.contains(&host) {
                cur = next;
                combined.extend(plan);
                continue 'outer;
            }
        }
        break;
    }
    Ok((cur, combined))
}

/// Accepts a container request if some VM has headroom for it, trying the
/// fullest VMs first.
pub fn admit_request(
    state: &DatacenterState,
    spec: &ResourceSpec,
    threshold: &ThresholdPolicy,
) -> Result<AdmissionDecision> {
    let mut vms: Vec<(f64, VmId)> = Vec::new();
    for vm in state.vms() {
        vms.push((state.vm_used_fraction(&vm.id)?, vm.id.clone()));
    }
    vms.sort_by(|a, b| by_fraction_desc((a.0, a.1.as_str()), (b.0, b.1.as_str())));
    for (_, id) in vms {
        let used = state.vm_used_ram(&id)?;
        let cap = state.vm(&id)?.spec.ram_mb;
        if threshold.fits(used, spec.ram_mb, cap) {
            return Ok(AdmissionDecision {
                accepted: true,
                reason: format!(
                    "vm {id}: {} MB of {} MB cap",
                    used + spec.ram_mb,
                    threshold.cap(cap)
                ),
                target_vm: Some(id),
            });
        }
    }
    Ok(AdmissionDecision {
        accepted: false,
        target_vm: None,
        reason: format!("no VM headroom for {} MB", spec.ram_mb),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Host;

    fn p(t: f64) -> ThresholdPolicy {
        ThresholdPolicy::new(t).unwrap()
    }

    /// 3 hosts, 7 VMs of 2048 placed 3/3/1, two 512 MB containers per VM.
    fn demo(host_ram: u64) -> DatacenterState {
        let mut s = DatacenterState::new();
        for h in 1..=3 {
            s.insert_host(
                Host::new(format!("host{h}"), ResourceSpec::ram(host_ram), 250.0).unwrap(),
            )
            .unwrap();
        }
        let layout = [1, 1, 1, 2, 2, 2, 3];
        for (i, h) in layout.iter().enumerate() {
            let vm = VmId(format!("vm{}", i + 1));
            s.insert_vm(
                Vm::new(vm.clone(), ResourceSpec::ram(2048)).unwrap(),
                &HostId(format!("host{h}")),
            )
            .unwrap();
            for k in 0..2 {
                let c =
                    Container::new(format!("c{}-{k}", i + 1), ResourceSpec::ram(512), 32).unwrap();
                s.insert_container(c, &vm).unwrap();
            }
        }
        s
    }

    fn policy(mode: MigrationMode) -> ConsolidationPolicy {
        ConsolidationPolicy::new(p(0.9), mode)
    }

    #[test]
    fn coldspots_order() {
        let s = demo(8192);
        assert_eq!(
            find_coldspots(&s).unwrap(),
            ["host3", "host1", "host2"].map(HostId::from)
        );
        assert!(find_coldspots(&DatacenterState::new()).unwrap().is_empty());
    }

    #[test]
    fn vm_drain_of_demo_fails_atomically() {
        let s = demo(8192);
        let (next, plan) =
            drain_host_by_vm_migration(&s, &"host3".into(), &policy(MigrationMode::Vm)).unwrap();
        assert!(!plan.committed);
        assert!(plan.freed_hosts.is_empty());
        assert_eq!(next, s);
        assert_eq!(next.active_hosts(), 3);
    }

    #[test]
    fn container_drain_of_demo_frees_host3() {
        let s = demo(8192);
        let pol = policy(MigrationMode::Container);
        let (next, plan) = drain_host_by_container_migration(&s, &"host3".into(), &pol).unwrap();
        assert!(plan.committed);
        assert_eq!(plan.moves.len(), 2);
        assert_eq!(plan.moves[0].to_id, "vm1");
        assert_eq!(plan.moves[1].to_id, "vm2");
        assert_eq!(plan.freed_vms, [VmId::from("vm7")]);
        assert_eq!(plan.freed_hosts, [HostId::from("host3")]);
        assert_eq!(next.active_hosts(), 2);
        assert!(next.is_valid(&pol.threshold));
        assert_eq!(plan.replay(&s).unwrap(), next);
    }

    #[test]
    fn container_drain_without_headroom_leaves_state() {
        let mut s = demo(8192);
        // fill every remote VM to 1536 so 512 more would exceed 1843.2
        for i in 1..=6 {
            let c = Container::new(format!("fill{i}"), ResourceSpec::ram(512), 32).unwrap();
            s.insert_container(c, &VmId(format!("vm{i}"))).unwrap();
        }
        let pol = policy(MigrationMode::Container);
        let (next, plan) = drain_host_by_container_migration(&s, &"host3".into(), &pol).unwrap();
        assert!(!plan.committed);
        assert_eq!(next, s);
    }

    #[test]
    fn drain_of_host_without_containers_powers_it_off() {
        let mut s = DatacenterState::new();
        s.insert_host(Host::new("h1", ResourceSpec::ram(8192), 250.0).unwrap())
            .unwrap();
        s.insert_host(Host::new("h2", ResourceSpec::ram(8192), 250.0).unwrap())
            .unwrap();
        s.insert_vm(Vm::new("a", ResourceSpec::ram(2048)).unwrap(), &"h1".into())
            .unwrap();
        s.insert_vm(Vm::new("b", ResourceSpec::ram(2048)).unwrap(), &"h2".into())
            .unwrap();
        let pol = policy(MigrationMode::Container);
        let (next, plan) = drain_host_by_container_migration(&s, &"h2".into(), &pol).unwrap();
        assert!(plan.committed);
        assert!(plan.moves.is_empty());
        assert_eq!(plan.freed_hosts, [HostId::from("h2")]);
        assert!(!next.host(&"h2".into()).unwrap().active);
        assert_eq!(next.active_hosts(), 1);
    }

    #[test]
    fn single_vm_drain_commits() {
        let mut s = DatacenterState::new();
        s.insert_host(Host::new("h1", ResourceSpec::ram(8192), 250.0).unwrap())
            .unwrap();
        s.insert_host(Host::new("h2", ResourceSpec::ram(8192), 250.0).unwrap())
            .unwrap();
        s.insert_vm(Vm::new("a", ResourceSpec::ram(2048)).unwrap(), &"h1".into())
            .unwrap();
        s.insert_vm(Vm::new("b", ResourceSpec::ram(2048)).unwrap(), &"h2".into())
            .unwrap();
        let (next, plan) =
            drain_host_by_vm_migration(&s, &"h2".into(), &policy(MigrationMode::Vm)).unwrap();
        assert!(plan.committed);
        assert_eq!(
            plan.moves,
            [Move::vm(&"b".into(), &"h2".into(), &"h1".into())]
        );
        assert_eq!(next.active_hosts(), 1);
        assert_eq!(plan.replay(&s).unwrap(), next);

        // draining an idle host is a no-op
        let (again, plan) =
            drain_host_by_vm_migration(&next, &"h2".into(), &policy(MigrationMode::Vm)).unwrap();
        assert!(plan.committed && plan.moves.is_empty());
        assert_eq!(again, next);
        assert!(
            drain_host_by_vm_migration(&s, &"nope".into(), &policy(MigrationMode::Vm)).is_err()
        );
    }

    #[test]
    fn non_atomic_drain_keeps_partial_moves() {
        let mut s = demo(8192);
        // one remote VM keeps a single free slot
        for i in 2..=6 {
            let c = Container::new(format!("fill{i}"), ResourceSpec::ram(512), 32).unwrap();
            s.insert_container(c, &VmId(format!("vm{i}"))).unwrap();
        }
        let pol = ConsolidationPolicy {
            atomic_drain: false,
            ..policy(MigrationMode::Container)
        };
        let (next, plan) = drain_host_by_container_migration(&s, &"host3".into(), &pol).unwrap();
        assert!(plan.committed);
        assert_eq!(plan.moves.len(), 1);
        assert!(plan.freed_hosts.is_empty());
        assert_eq!(next.active_hosts(), 3);
        assert!(next.is_valid(&pol.threshold));
    }

    #[test]
    fn consolidate_demo_by_mode() {
        let s = demo(8192);
        let (after, plan) = consolidate(&s, &policy(MigrationMode::Container)).unwrap();
        assert_eq!(plan.container_moves(), 2);
        assert_eq!(plan.vm_moves(), 0);
        assert_eq!(after.active_hosts(), 2);

        let (after, plan) = consolidate(&s, &policy(MigrationMode::Vm)).unwrap();
        assert!(plan.moves.is_empty());
        assert!(plan.committed);
        assert_eq!(after, s);
    }

    #[test]
    fn host_ram_9192_lets_vm_mode_succeed() {
        let s = demo(9192);
        let (after, plan) = consolidate(&s, &policy(MigrationMode::Vm)).unwrap();
        assert_eq!(plan.vm_moves(), 1);
        assert_eq!(after.active_hosts(), 2);
    }

    #[test]
    fn consolidate_is_a_fixpoint() {
        let s = demo(8192);
        let pol = policy(MigrationMode::Container);
        let (after, _) = consolidate(&s, &pol).unwrap();
        let (again, plan) = consolidate(&after, &pol).unwrap();
        assert!(plan.moves.is_empty());
        assert_eq!(again, after);
    }

    fn hot_pair() -> DatacenterState {
        // h1 holds 7 + 1 GB VMs out of 8 GB
        let mut s = DatacenterState::new();
        s.insert_host(Host::new("h1", ResourceSpec::ram(8192), 250.0).unwrap())
            .unwrap();
        s.insert_host(Host::new("h2", ResourceSpec::ram(8192), 250.0).unwrap())
            .unwrap();
        s.insert_vm(
            Vm::new("big", ResourceSpec::ram(6758)).unwrap(),
            &"h1".into(),
        )
        .unwrap();
        s.insert_vm(
            Vm::new("small", ResourceSpec::ram(1024)).unwrap(),
            &"h1".into(),
        )
        .unwrap();
        s.insert_vm(
            Vm::new("peer", ResourceSpec::ram(4096)).unwrap(),
            &"h2".into(),
        )
        .unwrap();
        s
    }

    #[test]
    fn hotspot_relief() {
        let s = hot_pair();
        let frac = s.host_used_fraction(&"h1".into()).unwrap();
        assert!(frac > 0.94 && frac < 0.96);
        let out = distribute_hotspot(&s, &"h1".into(), &p(0.9)).unwrap();
        assert!(!out.still_overloaded);
        assert_eq!(
            out.plan.moves,
            [Move::vm(&"small".into(), &"h1".into(), &"h2".into())]
        );
        assert!(out.state.host_used_fraction(&"h1".into()).unwrap() <= 0.9);
    }

    #[test]
    fn hotspot_without_room_is_flagged() {
        let mut s = hot_pair();
        s.insert_vm(
            Vm::new("peer2", ResourceSpec::ram(3000)).unwrap(),
            &"h2".into(),
        )
        .unwrap();
        let out = distribute_hotspot(&s, &"h1".into(), &p(0.9)).unwrap();
        assert!(out.still_overloaded);
        assert!(out.plan.moves.is_empty());
        assert!(out.plan.committed);
    }

    #[test]
    fn hotspot_precondition() {
        let mut s = DatacenterState::new();
        s.insert_host(Host::new("h1", ResourceSpec::ram(10000), 250.0).unwrap())
            .unwrap();
        s.insert_vm(Vm::new("v", ResourceSpec::ram(9000)).unwrap(), &"h1".into())
            .unwrap();
        assert!(matches!(
            distribute_hotspot(&s, &"h1".into(), &p(0.9)),
            Err(Error::NotOverloaded { .. })
        ));
    }

    fn admission_state(used: &[u64]) -> DatacenterState {
        let mut s = DatacenterState::new();
        s.insert_host(Host::new("h", ResourceSpec::ram(65536), 250.0).unwrap())
            .unwrap();
        for (i, u) in used.iter().enumerate() {
            let vm = VmId(format!("v{i}"));
            s.insert_vm(
                Vm::new(vm.clone(), ResourceSpec::ram(1024)).unwrap(),
                &"h".into(),
            )
            .unwrap();
            if *u > 0 {
                let c = Container::new(format!("c{i}"), ResourceSpec::ram(*u), 1).unwrap();
                s.insert_container(c, &vm).unwrap();
            }
        }
        s
    }

    #[test]
    fn admission() {
        let req = ResourceSpec::ram(512);
        let d = admit_request(&admission_state(&[256]), &req, &p(0.9)).unwrap();
        assert!(d.accepted);
        assert_eq!(d.target_vm, Some("v0".into()));

        let d = admit_request(&admission_state(&[512, 600]), &req, &p(0.9)).unwrap();
        assert!(!d.accepted);
        assert!(d.target_vm.is_none());
        assert!(d.reason.starts_with("no VM headroom"));

        let d = admit_request(&admission_state(&[0]), &ResourceSpec::ram(1024), &p(1.0)).unwrap();
        assert!(d.accepted);

        // fullest VM with room wins
        let d = admit_request(
            &admission_state(&[128, 384, 900]),
            &ResourceSpec::ram(256),
            &p(0.9),
        )
        .unwrap();
        assert_eq!(d.target_vm, Some("v1".into()));
    }
}
