//! Shared domain types and the per-tick state manager.

mod store;

use serde::{Deserialize, Serialize};

use crate::sim::traffic::ScriptedAgent;
use crate::Vec2;

pub use crate::sim::geometry::{Approach, IntersectionGeometry, Route, RouteGoal};
pub use store::{RoleOutput, StoreError, TickStore, CONTROLLER_ID};

/// Simulated clock. `sim_time` is always derived as `tick * dt`, never
/// accumulated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimClock {
    pub tick: u64,
    pub dt: f64,
}

impl SimClock {
    pub const DEFAULT_DT: f64 = 0.1;

    pub fn new(dt: f64) -> Self {
        Self { tick: 0, dt }
    }

    pub fn sim_time(&self) -> f64 {
        self.tick as f64 * self.dt
    }

    pub fn advanced(self) -> Self {
        Self {
            tick: self.tick + 1,
            dt: self.dt,
        }
    }
}

impl Default for SimClock {
    fn default() -> Self {
        Self::new(Self::DEFAULT_DT)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentKind {
    EgoVehicle,
    Vehicle,
    Pedestrian,
}

/// Ground-truth kinematic state of one agent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentState {
    pub id: u32,
    pub kind: AgentKind,
    pub position: Vec2,
    pub velocity: Vec2,
    pub acceleration: Vec2,
    /// Radians, normalized to `[-pi, pi]`.
    pub heading: f64,
    /// Bounding-box half sizes (longitudinal, lateral), meters.
    pub half_extent: Vec2,
}

impl AgentState {
    pub fn speed(&self) -> f64 {
        self.velocity.norm()
    }

    /// Radius of the disc that covers the footprint's longest half axis.
    pub fn footprint_radius(&self) -> f64 {
        self.half_extent.x.max(self.half_extent.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollisionEvent {
    pub tick: u64,
    pub agent_a: u32,
    pub agent_b: u32,
    pub overlap_depth: f64,
}

/// Authoritative physical state. Faults never touch it.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthWorld {
    pub clock: SimClock,
    pub ego: AgentState,
    pub ego_route: Route,
    pub ego_goal: RouteGoal,
    /// Arc length of the ego center along `ego_route`.
    pub ego_progress_m: f64,
    /// Longitudinal speed along the route (never negative).
    pub ego_speed: f64,
    /// Longitudinal acceleration applied over the last step.
    pub ego_accel: f64,
    /// Consecutive ticks the ego has spent fully past the conflict zone.
    pub ticks_past_zone: u32,
    /// Background agents present at `clock`.
    pub agents: Vec<AgentState>,
    pub background: Vec<ScriptedAgent>,
    pub intersection: IntersectionGeometry,
    pub collision: Option<CollisionEvent>,
}

impl GroundTruthWorld {
    /// Ego center to conflict-zone entry along the route; negative once past.
    pub fn ego_distance_to_entry(&self) -> f64 {
        self.ego_route.zone_entry_s - self.ego_progress_m
    }

    pub fn agent(&self, id: u32) -> Option<&AgentState> {
        if id == self.ego.id {
            Some(&self.ego)
        } else {
            self.agents.iter().find(|a| a.id == id)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Real,
    Ghost,
    Spoofed,
}

/// One entry of the perceived object list. `provenance` is trace metadata
/// and is never consulted by a generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerceivedObject {
    pub id: u32,
    pub kind: AgentKind,
    pub position: Vec2,
    pub velocity: Vec2,
    pub half_extent: Vec2,
    pub provenance: Provenance,
}

impl PerceivedObject {
    pub fn footprint_radius(&self) -> f64 {
        self.half_extent.x.max(self.half_extent.y)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EgoOdometry {
    pub position: Vec2,
    pub velocity: Vec2,
    pub heading: f64,
    /// Longitudinal speed along the route.
    pub speed: f64,
    /// Arc length along the ego route.
    pub route_progress_m: f64,
    pub half_extent: Vec2,
}

/// What the generator sees this tick.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerceivedState {
    pub clock: SimClock,
    pub ego: EgoOdometry,
    pub objects: Vec<PerceivedObject>,
    pub goal: RouteGoal,
}

/// Tactical maneuver vocabulary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Maneuver {
    Wait,
    Yield,
    ProceedCautiously,
    Proceed,
    Accelerate,
    EmergencyBrake,
}

impl Maneuver {
    pub const GENERATOR_VOCABULARY: [Maneuver; 5] = [
        Maneuver::Wait,
        Maneuver::Yield,
        Maneuver::ProceedCautiously,
        Maneuver::Proceed,
        Maneuver::Accelerate,
    ];

    /// Rank on the caution scale `Wait < Yield < ProceedCautiously <
    /// Proceed < Accelerate`. Emergency braking is outside the scale.
    pub fn aggressiveness(self) -> Option<u8> {
        match self {
            Maneuver::Wait => Some(0),
            Maneuver::Yield => Some(1),
            Maneuver::ProceedCautiously => Some(2),
            Maneuver::Proceed => Some(3),
            Maneuver::Accelerate => Some(4),
            Maneuver::EmergencyBrake => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Maneuver::Wait => "wait",
            Maneuver::Yield => "yield",
            Maneuver::ProceedCautiously => "proceed_cautiously",
            Maneuver::Proceed => "proceed",
            Maneuver::Accelerate => "accelerate",
            Maneuver::EmergencyBrake => "emergency_brake",
        }
    }

    pub fn parse(text: &str) -> Option<Self> {
        let norm = text.trim().to_ascii_lowercase().replace([' ', '-'], "_");
        [
            Maneuver::Wait,
            Maneuver::Yield,
            Maneuver::ProceedCautiously,
            Maneuver::Proceed,
            Maneuver::Accelerate,
            Maneuver::EmergencyBrake,
        ]
        .into_iter()
        .find(|m| m.as_str() == norm)
    }
}

impl std::fmt::Display for Maneuver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictLevel {
    Safe,
    Warning,
    Unsafe,
}

/// Safety monitor outcome.
///
/// `level` is `Unsafe` iff `min_predicted_separation < d_unsafe + margin_m`
/// and `Warning` iff it lies in `[d_unsafe + margin_m, d_warn + margin_m)`,
/// where `margin_m` is the closing-speed margin of the binding object.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub level: VerdictLevel,
    pub min_predicted_separation: f64,
    pub time_of_min: f64,
    pub offending_object: Option<u32>,
    pub margin_m: f64,
}

impl Verdict {
    pub fn vacuous() -> Self {
        Self {
            level: VerdictLevel::Safe,
            min_predicted_separation: f64::INFINITY,
            time_of_min: 0.0,
            offending_object: None,
            margin_m: 0.0,
        }
    }
}

/// Inclusive tick window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TickWindow {
    pub start: u64,
    pub end: u64,
}

impl TickWindow {
    pub fn contains(&self, tick: u64) -> bool {
        self.start <= tick && tick <= self.end
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FaultKind {
    GhostObstacle {
        spawn: PerceivedObject,
    },
    TrajectorySpoof {
        target_id: u32,
        velocity_scale: f64,
        heading_bias: f64,
    },
}

impl FaultKind {
    pub fn label(&self) -> &'static str {
        match self {
            FaultKind::GhostObstacle { .. } => "ghost_obstacle",
            FaultKind::TrajectorySpoof { .. } => "trajectory_spoof",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaultDirective {
    pub fault: FaultKind,
    pub window: TickWindow,
}

impl FaultDirective {
    pub fn validate(&self) -> Result<(), String> {
        if self.window.start > self.window.end {
            return Err(format!(
                "fault window start {} exceeds end {}",
                self.window.start, self.window.end
            ));
        }
        if let FaultKind::TrajectorySpoof { velocity_scale, .. } = self.fault {
            if !(velocity_scale > 0.0) {
                return Err(format!("velocity_scale must be > 0, got {velocity_scale}"));
            }
        }
        Ok(())
    }
}

/// Maximum rationale length in characters.
pub const RATIONALE_CAP: usize = 1024;
const TRUNCATION_MARKER: &str = "...[truncated]";

/// Caps rationale text at [`RATIONALE_CAP`] characters, marker included.
pub fn cap_rationale(text: String) -> String {
    if text.chars().count() <= RATIONALE_CAP {
        return text;
    }
    let keep = RATIONALE_CAP - TRUNCATION_MARKER.len();
    let mut out: String = text.chars().take(keep).collect();
    out.push_str(TRUNCATION_MARKER);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sim_time_is_exact_product() {
        let mut c = SimClock::default();
        for _ in 0..1234 {
            c = c.advanced();
        }
        assert_eq!(c.sim_time(), 1234.0 * 0.1);
    }

    #[test]
    fn rationale_is_capped() {
        let long = "x".repeat(5000);
        let capped = cap_rationale(long);
        assert_eq!(capped.chars().count(), RATIONALE_CAP);
        assert!(capped.ends_with(TRUNCATION_MARKER));
        assert_eq!(cap_rationale("short".into()), "short");
    }

    #[test]
    fn maneuver_parsing() {
        assert_eq!(Maneuver::parse("Proceed Cautiously"), Some(Maneuver::ProceedCautiously));
        assert_eq!(Maneuver::parse("emergency_brake"), Some(Maneuver::EmergencyBrake));
        assert_eq!(Maneuver::parse("swerve"), None);
    }

    #[test]
    fn directive_validation() {
        let d = FaultDirective {
            fault: FaultKind::TrajectorySpoof {
                target_id: 1,
                velocity_scale: 0.0,
                heading_bias: 0.0,
            },
            window: TickWindow { start: 1, end: 2 },
        };
        assert!(d.validate().is_err());
        let d = FaultDirective {
            window: TickWindow { start: 3, end: 2 },
            ..d
        };
        assert!(d.validate().is_err());
    }
}
