//! Attack scheduling (security assessor) and fault activation.

use serde::{Deserialize, Serialize};

use crate::scenario::BaseScenario;
use crate::state::{
    AgentKind, FaultDirective, FaultKind, PerceivedObject, PerceivedState, TickWindow,
};

/// Ids at or above this value are reserved for injected ghosts.
pub const GHOST_ID_BASE: u32 = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "trigger", rename_all = "snake_case")]
pub enum Trigger {
    /// Fires once, on the first tick the ego center is within this many
    /// meters of the conflict-zone entry.
    EgoWithinDistance { meters: f64 },
    /// Fires once, at this tick.
    AtTick { tick: u64 },
    /// Fires on every tick divisible by `period`.
    Periodic { period: u64 },
}

/// Directive template; the spoof target is resolved when the trigger fires.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FaultTemplate {
    GhostObstacle { spawn: PerceivedObject },
    TrajectorySpoof { velocity_scale: f64, heading_bias: f64 },
}

impl FaultTemplate {
    fn label(&self) -> &'static str {
        match self {
            FaultTemplate::GhostObstacle { .. } => "ghost_obstacle",
            FaultTemplate::TrajectorySpoof { .. } => "trajectory_spoof",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackEntry {
    /// Only armed when the run's base scenario matches (any if `None`).
    pub applies_to: Option<BaseScenario>,
    pub template: FaultTemplate,
    pub trigger: Trigger,
    pub duration_ticks: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AttackSchedule {
    pub entries: Vec<AttackEntry>,
}

/// Per-run assessor memory: which one-shot triggers already fired.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AssessorState {
    fired: Vec<bool>,
    was_within: Vec<bool>,
    ghosts_issued: u32,
}

/// Nearest perceived vehicle whose velocity points toward the zone center.
pub fn oncoming_target(perceived: &PerceivedState, zone_center: crate::Vec2) -> Option<u32> {
    perceived
        .objects
        .iter()
        .filter(|o| o.kind == AgentKind::Vehicle)
        .filter(|o| o.velocity.dot(&(zone_center - o.position)) > 0.0)
        .min_by(|a, b| {
            let da = (a.position - perceived.ego.position).norm();
            let db = (b.position - perceived.ego.position).norm();
            da.total_cmp(&db).then(a.id.cmp(&b.id))
        })
        .map(|o| o.id)
}

/// First schedule entry whose trigger fires at `tick` and whose kind has no
/// directive still pending or active. The returned window is
/// `[tick + 1, tick + duration]`.
#[allow(clippy::too_many_arguments)]
pub fn security_plan(
    tick: u64,
    perceived: &PerceivedState,
    ego_distance_to_entry: f64,
    zone_center: crate::Vec2,
    base: BaseScenario,
    schedule: &AttackSchedule,
    state: &mut AssessorState,
    active: &[FaultDirective],
) -> Option<FaultDirective> {
    let n = schedule.entries.len();
    state.fired.resize(n, false);
    state.was_within.resize(n, false);
    let mut result = None;
    for (i, entry) in schedule.entries.iter().enumerate() {
        if entry.applies_to.is_some_and(|b| b != base) {
            continue;
        }
        let fires = match entry.trigger {
            Trigger::EgoWithinDistance { meters } => {
                let within = ego_distance_to_entry <= meters;
                let edge = within && !state.was_within[i];
                state.was_within[i] = within;
                edge && !state.fired[i]
            }
            Trigger::AtTick { tick: at } => at == tick && !state.fired[i],
            Trigger::Periodic { period } => period > 0 && tick.is_multiple_of(period),
        };
        if !fires || result.is_some() {
            continue;
        }
        let busy = active
            .iter()
            .any(|d| d.fault.label() == entry.template.label() && d.window.end > tick);
        if busy {
            continue;
        }
        let fault = match &entry.template {
            FaultTemplate::GhostObstacle { spawn } => {
                let mut spawn = spawn.clone();
                spawn.id = GHOST_ID_BASE + state.ghosts_issued;
                state.ghosts_issued += 1;
                FaultKind::GhostObstacle { spawn }
            }
            FaultTemplate::TrajectorySpoof {
                velocity_scale,
                heading_bias,
            } => match oncoming_target(perceived, zone_center) {
                Some(target_id) => FaultKind::TrajectorySpoof {
                    target_id,
                    velocity_scale: *velocity_scale,
                    heading_bias: *heading_bias,
                },
                None => continue,
            },
        };
        state.fired[i] = true;
        result = Some(FaultDirective {
            fault,
            window: TickWindow {
                start: tick + 1,
                end: tick + entry.duration_ticks.max(1),
            },
        });
    }
    result
}
