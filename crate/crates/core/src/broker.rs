//! Admission, monitoring and consolidation behind one handle.
//!
//! The broker owns the current [`DatacenterState`]: requests are admitted
//! into VM headroom, the monitor reports per-host load and invariant
//! breaches, and rebalancing runs the consolidation loop.

use alloc::vec::Vec;

use crate::consolidation::{
    admit_request, consolidate, AdmissionDecision, ConsolidationPolicy, MigrationPlan,
};
use crate::model::{Container, DatacenterState, HostId, Violation};
use crate::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct MonitorSnapshot {
    /// `(host, used fraction)` for every host, in id order.
    pub host_load: Vec<(HostId, f64)>,
    pub active_hosts: usize,
    pub violations: Vec<Violation>,
}

#[derive(Debug, Clone)]
pub struct Broker {
    state: DatacenterState,
    policy: ConsolidationPolicy,
}

impl Broker {
    pub fn new(state: DatacenterState, policy: ConsolidationPolicy) -> Self {
        Self { state, policy }
    }

    pub fn state(&self) -> &DatacenterState {
        &self.state
    }

    /// Admits `container` into the fullest VM with headroom, or refuses it.
    pub fn submit(&mut self, container: Container) -> Result<AdmissionDecision> {
        let decision = admit_request(&self.state, &container.spec, &self.policy.threshold)?;
        if let Some(vm) = &decision.target_vm {
            self.state.insert_container(container, vm)?;
        }
        Ok(decision)
    }

    pub fn monitor(&self) -> Result<MonitorSnapshot> {
        let mut host_load = Vec::new();
        for h in self.state.hosts() {
            host_load.push((h.id.clone(), self.state.host_used_fraction(&h.id)?));
        }
        Ok(MonitorSnapshot {
            host_load,
            active_hosts: self.state.active_hosts(),
            violations: self.state.validate(&self.policy.threshold),
        })
    }

    /// Runs consolidation and adopts the resulting state.
    pub fn rebalance(&mut self) -> Result<MigrationPlan> {
        let (next, plan) = consolidate(&self.state, &self.policy)?;
        self.state = next;
        Ok(plan)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::consolidation::MigrationMode;
    use crate::model::{Host, ResourceSpec, ThresholdPolicy, Vm};

    #[test]
    fn admit_then_rebalance() {
        let mut s = DatacenterState::new();
        for h in ["h1", "h2"] {
            s.insert_host(Host::new(h, ResourceSpec::ram(4096), 250.0).unwrap())
                .unwrap();
        }
        s.insert_vm(Vm::new("a", ResourceSpec::ram(1024)).unwrap(), &"h1".into())
            .unwrap();
        s.insert_vm(Vm::new("b", ResourceSpec::ram(1024)).unwrap(), &"h2".into())
            .unwrap();
        let policy =
            ConsolidationPolicy::new(ThresholdPolicy::new(0.9).unwrap(), MigrationMode::Container);
        let mut broker = Broker::new(s, policy);

        let c = Container::new("c1", ResourceSpec::ram(512), 32).unwrap();
        let d = broker.submit(c).unwrap();
        assert!(d.accepted);
        let big = Container::new("c2", ResourceSpec::ram(1000), 32).unwrap();
        assert!(!broker.submit(big).unwrap().accepted);
        assert_eq!(broker.state().container_count(), 1);

        let snap = broker.monitor().unwrap();
        assert_eq!(snap.active_hosts, 2);
        assert!(snap.violations.is_empty());
        assert_eq!(snap.host_load[0], ("h1".into(), 0.25));

        let plan = broker.rebalance().unwrap();
        assert!(plan.committed);
        assert_eq!(broker.monitor().unwrap().active_hosts, 1);
    }
}
