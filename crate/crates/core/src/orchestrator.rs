//! The orchestration controller: fixed per-tick role sequence, decision
//! rule, action execution and termination.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metrics::{summarize_run, ActiveFault, IterationRecord, RunSummary};
use crate::planner::build_planner;
use crate::rng::stream;
use crate::roles::{
    FaultInjectorRole, GeneratorRole, PerformanceOracleRole, RecoveryPlannerRole, Role,
    RoleContext, RoleKind, SafetyMonitorRole, SecurityAssessorRole,
};
use crate::scenario::ScenarioSpec;
use crate::sim::{
    build_perceived_state, command_for_world, detect_collision, spawn_scenario, step_dynamics,
};
use crate::state::{
    FaultDirective, FaultKind, GroundTruthWorld, Maneuver, PerceivedState, Provenance, RoleOutput,
    StoreError, TickStore, VerdictLevel, CONTROLLER_ID,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminationStatus {
    Running,
    /// Ego fully past the conflict zone for the grace period.
    Cleared,
    Collision,
    /// `max_ticks` reached.
    Timeout,
    HaltOnViolation,
}

impl TerminationStatus {
    pub fn is_terminal(self) -> bool {
        self != TerminationStatus::Running
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunOptions {
    pub recovery_enabled: bool,
    pub halt_on_violation: bool,
    /// Recovery planner re-runs the geometric check instead of reusing the
    /// monitor's verdict.
    pub recovery_recompute: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            recovery_enabled: true,
            halt_on_violation: false,
            recovery_recompute: false,
        }
    }
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error("role `{role}` panicked at tick {tick}: {message}")]
    RolePanic { role: String, tick: u64, message: String },
    #[error("role `{role}` failed at tick {tick}: {message}")]
    RoleFailure { role: String, tick: u64, message: String },
    #[error("invalid scenario: {0}")]
    InvalidSpec(String),
    #[error("invalid role set: {0}")]
    InvalidRoleSet(String),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("run already terminated ({0:?})")]
    AlreadyTerminated(TerminationStatus),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoleBinding {
    pub role_id: String,
    pub role_kind: RoleKind,
    pub sequence_position: u32,
    pub enabled: bool,
}

/// Validated, ordered set of role bindings.
pub struct RoleSet {
    entries: Vec<(RoleBinding, Box<dyn Role>)>,
}

impl RoleSet {
    /// Exactly one enabled generator; unique sequence positions that order
    /// the kinds as the fixed phase sequence does; at most one binding per
    /// kind.
    pub fn new(mut entries: Vec<(RoleBinding, Box<dyn Role>)>) -> Result<Self, RunError> {
        entries.sort_by_key(|(b, _)| b.sequence_position);
        let gens = entries
            .iter()
            .filter(|(b, _)| b.role_kind == RoleKind::Generator && b.enabled)
            .count();
        if gens != 1 {
            return Err(RunError::InvalidRoleSet(format!(
                "exactly one enabled generator required, found {gens}"
            )));
        }
        for w in entries.windows(2) {
            let (a, b) = (&w[0].0, &w[1].0);
            if a.sequence_position == b.sequence_position {
                return Err(RunError::InvalidRoleSet(format!(
                    "roles `{}` and `{}` share sequence position {}",
                    a.role_id, b.role_id, a.sequence_position
                )));
            }
            if a.role_kind >= b.role_kind {
                return Err(RunError::InvalidRoleSet(format!(
                    "role `{}` ({:?}) cannot be sequenced before `{}` ({:?})",
                    a.role_id, a.role_kind, b.role_id, b.role_kind
                )));
            }
        }
        for (b, r) in &entries {
            if b.role_kind != r.kind() {
                return Err(RunError::InvalidRoleSet(format!(
                    "binding `{}` declares {:?} but the role is {:?}",
                    b.role_id,
                    b.role_kind,
                    r.kind()
                )));
            }
        }
        Ok(Self { entries })
    }

    /// The standard six-role configuration for a scenario.
    pub fn standard(spec: &ScenarioSpec, options: &RunOptions, world: &GroundTruthWorld) -> Result<Self, RunError> {
        let planner = build_planner(&spec.planner, &world.intersection).map_err(|e| RunError::RoleFailure {
            role: RoleKind::Generator.default_id().into(),
            tick: 0,
            message: e.to_string(),
        })?;
        let roles: Vec<Box<dyn Role>> = vec![
            Box::new(GeneratorRole { planner }),
            Box::new(SafetyMonitorRole),
            Box::new(SecurityAssessorRole {
                schedule: spec.attack_schedule(&world.ego_route),
                state: Default::default(),
            }),
            Box::new(FaultInjectorRole),
            Box::new(PerformanceOracleRole),
            Box::new(RecoveryPlannerRole {
                recompute: options.recovery_recompute,
            }),
        ];
        Self::new(
            roles
                .into_iter()
                .enumerate()
                .map(|(i, r)| {
                    let kind = r.kind();
                    (
                        RoleBinding {
                            role_id: kind.default_id().into(),
                            role_kind: kind,
                            sequence_position: i as u32,
                            enabled: kind != RoleKind::RecoveryPlanner || options.recovery_enabled,
                        },
                        r,
                    )
                })
                .collect(),
        )
    }

    pub fn bindings(&self) -> impl Iterator<Item = &RoleBinding> {
        self.entries.iter().map(|(b, _)| b)
    }

    fn index_of(&self, kind: RoleKind) -> Option<usize> {
        self.entries
            .iter()
            .position(|(b, _)| b.role_kind == kind && b.enabled)
    }
}

/// Termination check after action execution. Priority:
/// Collision > Cleared > Timeout > Running.
pub fn check_termination(world: &GroundTruthWorld, spec: &ScenarioSpec) -> TerminationStatus {
    if world.collision.is_some() {
        TerminationStatus::Collision
    } else if world.ticks_past_zone >= spec.grace_ticks {
        TerminationStatus::Cleared
    } else if world.clock.tick >= spec.max_ticks {
        TerminationStatus::Timeout
    } else {
        TerminationStatus::Running
    }
}

fn panic_message(p: Box<dyn std::any::Any + Send>) -> String {
    if let Some(s) = p.downcast_ref::<&str>() {
        (*s).to_string()
    } else if let Some(s) = p.downcast_ref::<String>() {
        s.clone()
    } else {
        "non-string panic payload".into()
    }
}

fn active_fault_entry(d: &FaultDirective) -> ActiveFault {
    let (provenance, object_id) = match &d.fault {
        FaultKind::GhostObstacle { spawn } => (Provenance::Ghost, spawn.id),
        FaultKind::TrajectorySpoof { target_id, .. } => (Provenance::Spoofed, *target_id),
    };
    ActiveFault {
        kind: d.fault.label().to_string(),
        provenance,
        object_id,
        window: d.window,
    }
}

/// Drives one run.
pub struct Controller {
    spec: ScenarioSpec,
    options: RunOptions,
    seed: u64,
    roles: RoleSet,
    store: TickStore,
    world: GroundTruthWorld,
    faults: Vec<FaultDirective>,
    status: TerminationStatus,
    last_commit_order: Vec<String>,
    last_perceived: Option<PerceivedState>,
}

impl Controller {
    pub fn new(spec: &ScenarioSpec, seed: u64, options: RunOptions) -> Result<Self, RunError> {
        spec.validate().map_err(|e| RunError::InvalidSpec(e.to_string()))?;
        let world = spawn_scenario(spec, seed).map_err(|e| RunError::InvalidSpec(e.to_string()))?;
        let roles = RoleSet::standard(spec, &options, &world)?;
        Ok(Self::with_roles(spec, seed, options, world, roles))
    }

    pub fn with_roles(
        spec: &ScenarioSpec,
        seed: u64,
        options: RunOptions,
        world: GroundTruthWorld,
        roles: RoleSet,
    ) -> Self {
        Self {
            spec: spec.clone(),
            options,
            seed,
            roles,
            store: TickStore::new(),
            world,
            faults: Vec::new(),
            status: TerminationStatus::Running,
            last_commit_order: Vec::new(),
            last_perceived: None,
        }
    }

    pub fn world(&self) -> &GroundTruthWorld {
        &self.world
    }

    pub fn status(&self) -> TerminationStatus {
        self.status
    }

    pub fn history(&self) -> &[IterationRecord] {
        self.store.history()
    }

    /// Role ids in commit order during the last completed tick.
    pub fn last_commit_order(&self) -> &[String] {
        &self.last_commit_order
    }

    /// Perceived state handed to the generator in the last completed tick.
    pub fn last_perceived(&self) -> Option<&PerceivedState> {
        self.last_perceived.as_ref()
    }

    fn invoke(&mut self, idx: usize, perceived: &PerceivedState) -> Result<RoleOutput, RunError> {
        let tick = self.world.clock.tick;
        let (binding, role) = &mut self.roles.entries[idx];
        let ctx = RoleContext {
            tick,
            perceived,
            world: &self.world,
            store: &self.store,
            active_faults: &self.faults,
            spec: &self.spec,
        };
        let started = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(|| role.execute(&ctx)));
        let elapsed = started.elapsed().as_nanos() as u64;
        let role_id = binding.role_id.clone();
        let output = match result {
            Err(p) => {
                return Err(RunError::RolePanic {
                    role: role_id,
                    tick,
                    message: panic_message(p),
                })
            }
            Ok(Err(e)) => {
                return Err(RunError::RoleFailure {
                    role: role_id,
                    tick,
                    message: e.0,
                })
            }
            Ok(Ok(o)) => o,
        };
        self.store
            .annotations_mut()
            .role_timings_ns
            .insert(role_id.clone(), elapsed);
        self.store.commit(&role_id, output.clone())?;
        Ok(output)
    }

    /// Executes one tick: environment update, generator, safety monitor,
    /// security assessor, fault injector (if a directive was issued),
    /// performance oracle, decision, action execution.
    pub fn run_tick(&mut self) -> Result<IterationRecord, RunError> {
        if self.status.is_terminal() {
            return Err(RunError::AlreadyTerminated(self.status));
        }
        let tick = self.world.clock.tick;

        // 1. environment update
        self.faults.retain(|d| d.window.end >= tick);
        let live: Vec<FaultDirective> = self
            .faults
            .iter()
            .filter(|d| d.window.contains(tick))
            .cloned()
            .collect();
        let mut rng = stream(self.seed, tick, "perception");
        let report = build_perceived_state(&self.world, &live, &self.spec.sim, &mut rng);
        let perceived = report.perceived;
        {
            let ann = self.store.annotations_mut();
            ann.ego_position = self.world.ego.position;
            ann.ego_velocity = self.world.ego.velocity;
            ann.ego_speed = self.world.ego_speed;
            ann.ego_progress_m = self.world.ego_progress_m;
            ann.perceived = perceived.objects.clone();
            ann.ground_truth_in_range = report.ground_truth_in_range;
            ann.active_faults = live.iter().map(active_fault_entry).collect();
            ann.notes = report.warnings.iter().map(|w| w.to_string()).collect();
        }

        // 2. generator
        let gen = self
            .roles
            .index_of(RoleKind::Generator)
            .expect("role set validated");
        let proposal = match self.invoke(gen, &perceived)? {
            RoleOutput::Proposal { maneuver, .. } => maneuver,
            other => {
                return Err(RunError::RoleFailure {
                    role: RoleKind::Generator.default_id().into(),
                    tick,
                    message: format!("expected a proposal, got {other:?}"),
                })
            }
        };
        if proposal == Maneuver::EmergencyBrake {
            return Err(RunError::RoleFailure {
                role: RoleKind::Generator.default_id().into(),
                tick,
                message: "generators may not propose emergency_brake".into(),
            });
        }

        // 3-6. assessment roles
        for kind in [RoleKind::SafetyMonitor, RoleKind::SecurityAssessor] {
            if let Some(i) = self.roles.index_of(kind) {
                self.invoke(i, &perceived)?;
            }
        }
        if self.store.assessor_directive().is_some() {
            if let Some(i) = self.roles.index_of(RoleKind::FaultInjector) {
                if let RoleOutput::Activated(d) = self.invoke(i, &perceived)? {
                    self.faults.push(d);
                }
            }
        }
        if let Some(i) = self.roles.index_of(RoleKind::PerformanceOracle) {
            self.invoke(i, &perceived)?;
        }

        // 7. decision
        let is_unsafe = self
            .store
            .verdict()
            .is_some_and(|v| v.level == VerdictLevel::Unsafe);
        let mut final_maneuver = proposal;
        if is_unsafe && self.options.recovery_enabled {
            if let Some(i) = self.roles.index_of(RoleKind::RecoveryPlanner) {
                if let RoleOutput::Recovery { maneuver } = self.invoke(i, &perceived)? {
                    final_maneuver = maneuver;
                }
            }
        }
        let recovery_active = final_maneuver == Maneuver::EmergencyBrake;
        self.store.commit(
            CONTROLLER_ID,
            RoleOutput::Final {
                maneuver: final_maneuver,
                recovery_active,
            },
        )?;

        // 8. action execution
        let cmd = command_for_world(final_maneuver, &self.world, &self.spec.sim);
        let mut next = step_dynamics(&self.world, &cmd);
        if next.collision.is_none() {
            next.collision = detect_collision(&next);
        }
        let mut status = check_termination(&next, &self.spec);
        if self.options.halt_on_violation && is_unsafe && status != TerminationStatus::Collision {
            status = TerminationStatus::HaltOnViolation;
        }
        self.last_commit_order = self.store.committed().map(|(r, _)| r.to_string()).collect();
        let record = self.store.finalize_tick(&next, status)?;
        self.world = next;
        self.status = status;
        self.last_perceived = Some(perceived);
        Ok(record)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub termination: TerminationStatus,
    pub records: Vec<IterationRecord>,
    pub summary: RunSummary,
}

/// Runs `spec` with `seed` to termination.
pub fn run_scenario(spec: &ScenarioSpec, seed: u64, options: &RunOptions) -> Result<RunResult, RunError> {
    let mut c = Controller::new(spec, seed, *options)?;
    while !c.status().is_terminal() {
        c.run_tick()?;
    }
    let termination = c.status();
    let records = c.store.into_history();
    let summary = summarize_run(&spec.id, seed, &records, termination)
        .expect("a terminated run has at least one record");
    Ok(RunResult {
        termination,
        records,
        summary,
    })
}

/// Re-simulates ground truth under a fixed final-maneuver sequence with no
/// roles and no faults. Element `k`
/// is the world at the start of tick `k`; the last element is the world
/// after the final maneuver.
pub fn replay_ground_truth(
    spec: &ScenarioSpec,
    seed: u64,
    maneuvers: &[Maneuver],
) -> Result<Vec<GroundTruthWorld>, RunError> {
    let mut world = spawn_scenario(spec, seed).map_err(|e| RunError::InvalidSpec(e.to_string()))?;
    let mut out = vec![world.clone()];
    for m in maneuvers {
        let cmd = command_for_world(*m, &world, &spec.sim);
        let mut next = step_dynamics(&world, &cmd);
        if next.collision.is_none() {
            next.collision = detect_collision(&next);
        }
        world = next;
        out.push(world.clone());
    }
    Ok(out)
}
