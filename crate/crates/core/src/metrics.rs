//! Power, migration counts and SLA downtime budgets.
//!
//! Power is `Pmax × active hosts`: every host running at least one VM is
//! charged its full rated power, idle hosts nothing. An SLA level turns into a
//! downtime budget over a horizon; a container violates the SLA when the
//! downtime it accumulates from migrations exceeds that budget.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::consolidation::MigrationPlan;
use crate::model::{ContainerId, DatacenterState, MoveKind, VmId};
use crate::timing::PlanTiming;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerModel {
    pmax_w: f64,
}

impl PowerModel {
    pub fn new(pmax_w: f64) -> Result<Self> {
        if !(pmax_w > 0.0 && pmax_w.is_finite()) {
            return Err(Error::Domain(format!(
                "pmax must be positive, got {pmax_w}"
            )));
        }
        Ok(Self { pmax_w })
    }

    pub fn pmax_w(&self) -> f64 {
        self.pmax_w
    }
}

pub fn power(active_hosts: usize, model: &PowerModel) -> f64 {
    model.pmax_w * active_hosts as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Horizon {
    Day,
    Month,
    Year,
}

/// 365.25 days.
pub const DEFAULT_YEAR_MINUTES: f64 = 525_960.0;
const DAY_S: f64 = 86_400.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlaSpec {
    level: f64,
    pub horizon: Horizon,
    year_minutes: f64,
}

impl SlaSpec {
    pub fn new(level: f64, horizon: Horizon) -> Result<Self> {
        Self::with_year_minutes(level, horizon, DEFAULT_YEAR_MINUTES)
    }

    pub fn with_year_minutes(level: f64, horizon: Horizon, year_minutes: f64) -> Result<Self> {
        if !(level > 0.0 && level < 1.0) {
            return Err(Error::Domain(format!(
                "SLA level must be in (0, 1), got {level}"
            )));
        }
        if !(year_minutes > 0.0 && year_minutes.is_finite()) {
            return Err(Error::Domain("year length must be positive".into()));
        }
        Ok(Self {
            level,
            horizon,
            year_minutes,
        })
    }

    pub fn level(&self) -> f64 {
        self.level
    }

    pub fn year_minutes(&self) -> f64 {
        self.year_minutes
    }

    /// Horizon length in seconds; a month is a twelfth of a year.
    pub fn horizon_s(&self) -> f64 {
        let year_s = self.year_minutes * 60.0;
        match self.horizon {
            Horizon::Day => DAY_S,
            Horizon::Month => year_s / 12.0,
            Horizon::Year => year_s,
        }
    }
}

/// Downtime budget in seconds: `(1 - level) × horizon`.
pub fn allowed_downtime(sla: &SlaSpec) -> f64 {
    (1.0 - sla.level) * sla.horizon_s()
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SlaViolations {
    pub count: usize,
    pub offenders: Vec<ContainerId>,
}

pub fn sla_violations(downtime_s: &BTreeMap<ContainerId, f64>, sla: &SlaSpec) -> SlaViolations {
    let budget = allowed_downtime(sla);
    let offenders: Vec<ContainerId> = downtime_s
        .iter()
        .filter(|(_, &d)| d > budget)
        .map(|(c, _)| c.clone())
        .collect();
    SlaViolations {
        count: offenders.len(),
        offenders,
    }
}

/// Downtime each container sees from a timed plan. A VM move stalls every
/// container inside that VM at the time of the move.
pub fn container_downtimes(
    plan: &MigrationPlan,
    timing: &PlanTiming,
    before: &DatacenterState,
) -> Result<BTreeMap<ContainerId, f64>> {
    if timing.moves.len() != plan.moves.len() {
        return Err(Error::Integrity(format!(
            "{} timed moves for a plan of {}",
            timing.moves.len(),
            plan.moves.len()
        )));
    }
    let mut out: BTreeMap<ContainerId, f64> = BTreeMap::new();
    let mut state = before.clone();
    for (mv, t) in plan.moves.iter().zip(&timing.moves) {
        if mv.subject_id != t.subject_id || mv.kind != t.kind {
            return Err(Error::Integrity(format!(
                "timing row {} does not match move of {}",
                t.step, mv.subject_id
            )));
        }
        match mv.kind {
            MoveKind::Cnt => {
                *out.entry(ContainerId(mv.subject_id.clone())).or_default() += t.timing.downtime_s;
            }
            MoveKind::Vm => {
                let vm = VmId(mv.subject_id.clone());
                let inside: Vec<ContainerId> =
                    state.containers_on(&vm).map(|c| c.id.clone()).collect();
                for c in inside {
                    *out.entry(c).or_default() += t.timing.downtime_s;
                }
            }
        }
        state = state.apply_move_unchecked(mv)?;
    }
    Ok(out)
}

/// Labels identifying a run.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportContext {
    pub scenario: String,
    pub mode: String,
    pub threshold: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub scenario: String,
    pub mode: String,
    pub threshold: f64,
    pub seed: u64,
    pub bins_used: usize,
    pub hosts_before: usize,
    pub hosts_after: usize,
    pub power_w_before: f64,
    pub power_w_after: f64,
    pub vm_moves: usize,
    pub cnt_moves: usize,
    pub total_migration_s: f64,
    pub sum_downtime_s: f64,
    pub max_downtime_s: f64,
    pub sla_level: f64,
    pub sla_violations: usize,
    pub sla_offenders: Vec<ContainerId>,
}

impl RunReport {
    /// Report for a placement run: nothing migrates, `hosts_used` hosts run.
    pub fn for_placement(
        ctx: &ReportContext,
        bins_used: usize,
        hosts_used: usize,
        sla: &SlaSpec,
        model: &PowerModel,
    ) -> Self {
        Self {
            scenario: ctx.scenario.clone(),
            mode: ctx.mode.clone(),
            threshold: ctx.threshold,
            seed: ctx.seed,
            bins_used,
            hosts_before: hosts_used,
            hosts_after: hosts_used,
            power_w_before: power(hosts_used, model),
            power_w_after: power(hosts_used, model),
            vm_moves: 0,
            cnt_moves: 0,
            total_migration_s: 0.0,
            sum_downtime_s: 0.0,
            max_downtime_s: 0.0,
            sla_level: sla.level(),
            sla_violations: 0,
            sla_offenders: Vec::new(),
        }
    }

    /// Recomputes this report from `before` and the plan and checks that
    /// every field matches.
    pub fn verify(
        &self,
        before: &DatacenterState,
        plan: &MigrationPlan,
        timing: &PlanTiming,
        sla: &SlaSpec,
        model: &PowerModel,
    ) -> Result<()> {
        let ctx = ReportContext {
            scenario: self.scenario.clone(),
            mode: self.mode.clone(),
            threshold: self.threshold,
            seed: self.seed,
        };
        let after = plan.replay(before)?;
        let again = build_report(&ctx, before, &after, plan, timing, sla, model)?;
        if &again != self {
            return Err(Error::Integrity("recomputed report differs".into()));
        }
        Ok(())
    }
}

/// Assembles a consolidation report. `after` must be what `plan` produces
/// from `before`.
pub fn build_report(
    ctx: &ReportContext,
    before: &DatacenterState,
    after: &DatacenterState,
    plan: &MigrationPlan,
    timing: &PlanTiming,
    sla: &SlaSpec,
    model: &PowerModel,
) -> Result<RunReport> {
    let replayed = plan.replay(before)?;
    if &replayed != after {
        return Err(Error::Integrity(
            "plan does not transform `before` into `after`".into(),
        ));
    }
    let downtimes = container_downtimes(plan, timing, before)?;
    let violations = sla_violations(&downtimes, sla);
    let hosts_before = before.active_hosts();
    let hosts_after = after.active_hosts();
    Ok(RunReport {
        scenario: ctx.scenario.clone(),
        mode: ctx.mode.clone(),
        threshold: ctx.threshold,
        seed: ctx.seed,
        bins_used: after.vm_count(),
        hosts_before,
        hosts_after,
        power_w_before: power(hosts_before, model),
        power_w_after: power(hosts_after, model),
        vm_moves: plan.vm_moves(),
        cnt_moves: plan.container_moves(),
        total_migration_s: timing.total_s,
        sum_downtime_s: timing.sum_downtime_s,
        max_downtime_s: timing.max_downtime_s,
        sla_level: sla.level(),
        sla_violations: violations.count,
        sla_offenders: violations.offenders,
    })
}
