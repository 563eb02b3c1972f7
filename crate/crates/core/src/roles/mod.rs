//! Role abstraction and the concrete V&V roles.

pub mod performance;
pub mod prediction;
pub mod recovery;
pub mod safety;
pub mod security;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::planner::Planner;
use crate::scenario::ScenarioSpec;
use crate::state::{
    cap_rationale, FaultDirective, GroundTruthWorld, Maneuver, PerceivedState, RoleOutput,
    TickStore,
};

pub use performance::{performance_check, performance_flags, PerfFlags, PerfThresholds};
pub use prediction::{predict_trajectory, Kinematics, MotionModel};
pub use recovery::recovery_decide;
pub use safety::{safety_check, SafetyParams};
pub use security::{security_plan, AssessorState, AttackEntry, AttackSchedule, FaultTemplate, Trigger};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoleKind {
    Generator,
    SafetyMonitor,
    SecurityAssessor,
    FaultInjector,
    PerformanceOracle,
    RecoveryPlanner,
}

impl RoleKind {
    /// Phase order within a tick.
    pub const ORDER: [RoleKind; 6] = [
        RoleKind::Generator,
        RoleKind::SafetyMonitor,
        RoleKind::SecurityAssessor,
        RoleKind::FaultInjector,
        RoleKind::PerformanceOracle,
        RoleKind::RecoveryPlanner,
    ];

    pub fn default_id(self) -> &'static str {
        match self {
            RoleKind::Generator => "generator",
            RoleKind::SafetyMonitor => "safety_monitor",
            RoleKind::SecurityAssessor => "security_assessor",
            RoleKind::FaultInjector => "fault_injector",
            RoleKind::PerformanceOracle => "performance_oracle",
            RoleKind::RecoveryPlanner => "recovery_planner",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{0}")]
pub struct RoleError(pub String);

/// Read-only view handed to a role. Only the performance oracle is meant
/// to look at `world`; everything else works from `perceived`.
pub struct RoleContext<'a> {
    pub tick: u64,
    pub perceived: &'a PerceivedState,
    pub world: &'a GroundTruthWorld,
    pub store: &'a TickStore,
    pub active_faults: &'a [FaultDirective],
    pub spec: &'a ScenarioSpec,
}

pub trait Role: Send {
    fn kind(&self) -> RoleKind;
    fn execute(&mut self, ctx: &RoleContext<'_>) -> Result<RoleOutput, RoleError>;
}

pub struct GeneratorRole {
    pub planner: Box<dyn Planner>,
}

impl Role for GeneratorRole {
    fn kind(&self) -> RoleKind {
        RoleKind::Generator
    }

    fn execute(&mut self, ctx: &RoleContext<'_>) -> Result<RoleOutput, RoleError> {
        let (maneuver, rationale) = self
            .planner
            .plan(ctx.perceived)
            .map_err(|e| RoleError(e.to_string()))?;
        Ok(RoleOutput::Proposal {
            maneuver,
            rationale: cap_rationale(rationale),
        })
    }
}

#[derive(Debug, Default)]
pub struct SafetyMonitorRole;

impl Role for SafetyMonitorRole {
    fn kind(&self) -> RoleKind {
        RoleKind::SafetyMonitor
    }

    fn execute(&mut self, ctx: &RoleContext<'_>) -> Result<RoleOutput, RoleError> {
        let (proposed, _) = ctx
            .store
            .proposal()
            .ok_or_else(|| RoleError("no generator proposal to check".into()))?;
        Ok(RoleOutput::Verdict(safety_check(
            ctx.perceived,
            proposed,
            &ctx.spec.safety,
            &ctx.world.intersection,
            &ctx.spec.sim,
        )))
    }
}

#[derive(Debug, Default)]
pub struct SecurityAssessorRole {
    pub schedule: AttackSchedule,
    pub state: AssessorState,
}

impl Role for SecurityAssessorRole {
    fn kind(&self) -> RoleKind {
        RoleKind::SecurityAssessor
    }

    fn execute(&mut self, ctx: &RoleContext<'_>) -> Result<RoleOutput, RoleError> {
        let route = &ctx.world.ego_route;
        let ego_distance = route.zone_entry_s - ctx.perceived.ego.route_progress_m;
        let directive = security_plan(
            ctx.tick,
            ctx.perceived,
            ego_distance,
            ctx.world.intersection.conflict_zone.center(),
            ctx.spec.base,
            &self.schedule,
            &mut self.state,
            ctx.active_faults,
        );
        Ok(RoleOutput::Directive { directive })
    }
}

/// Activates the assessor's directive; runs only when one was issued.
#[derive(Debug, Default)]
pub struct FaultInjectorRole;

impl Role for FaultInjectorRole {
    fn kind(&self) -> RoleKind {
        RoleKind::FaultInjector
    }

    fn execute(&mut self, ctx: &RoleContext<'_>) -> Result<RoleOutput, RoleError> {
        let d = ctx
            .store
            .assessor_directive()
            .ok_or_else(|| RoleError("no directive to inject".into()))?;
        d.validate().map_err(RoleError)?;
        if d.window.start <= ctx.tick {
            return Err(RoleError(format!(
                "directive window starts at {} but must start after tick {}",
                d.window.start, ctx.tick
            )));
        }
        Ok(RoleOutput::Activated(d.clone()))
    }
}

#[derive(Debug, Default)]
pub struct PerformanceOracleRole;

impl Role for PerformanceOracleRole {
    fn kind(&self) -> RoleKind {
        RoleKind::PerformanceOracle
    }

    fn execute(&mut self, ctx: &RoleContext<'_>) -> Result<RoleOutput, RoleError> {
        Ok(RoleOutput::Perf(performance_check(
            ctx.store.history(),
            ctx.world,
            &ctx.spec.perf,
        )))
    }
}

/// Emergency-brake override. By default it reuses the monitor's verdict;
/// with `recompute` it re-runs the geometric check itself.
#[derive(Debug, Default)]
pub struct RecoveryPlannerRole {
    pub recompute: bool,
}

impl Role for RecoveryPlannerRole {
    fn kind(&self) -> RoleKind {
        RoleKind::RecoveryPlanner
    }

    fn execute(&mut self, ctx: &RoleContext<'_>) -> Result<RoleOutput, RoleError> {
        let (proposed, _) = ctx
            .store
            .proposal()
            .ok_or_else(|| RoleError("no generator proposal".into()))?;
        let verdict = if self.recompute {
            safety_check(
                ctx.perceived,
                proposed,
                &ctx.spec.safety,
                &ctx.world.intersection,
                &ctx.spec.sim,
            )
        } else {
            *ctx.store
                .verdict()
                .ok_or_else(|| RoleError("no safety verdict".into()))?
        };
        Ok(RoleOutput::Recovery {
            maneuver: recovery_decide(&verdict, proposed),
        })
    }
}

/// Convenience: is this maneuver one a generator may emit?
pub fn generator_may_emit(m: Maneuver) -> bool {
    m != Maneuver::EmergencyBrake
}
