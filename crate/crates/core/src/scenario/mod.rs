//! Scenario definitions, scenario files and campaigns.

mod campaign;
mod parse;

use serde::{Deserialize, Serialize};

use crate::planner::PlannerConfig;
use crate::roles::{AttackEntry, AttackSchedule, FaultTemplate, PerfThresholds, SafetyParams, Trigger};
use crate::sim::spawn::VEHICLE_HALF_EXTENT;
use crate::sim::SimParams;
use crate::state::{AgentKind, PerceivedObject, Provenance, Route, RouteGoal};
use crate::Vec2;

pub use campaign::{
    load_scenario_dir, report_from_traces, run_campaign, CampaignError, CampaignPlan,
    CampaignResult,
};
pub use parse::{parse_scenario_file, ScenarioError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaseScenario {
    Nominal,
    Congested,
    ConflictingTraffic,
    PedestrianCrossing,
}

impl BaseScenario {
    pub const ALL: [BaseScenario; 4] = [
        BaseScenario::Nominal,
        BaseScenario::Congested,
        BaseScenario::ConflictingTraffic,
        BaseScenario::PedestrianCrossing,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            BaseScenario::Nominal => "nominal",
            BaseScenario::Congested => "congested",
            BaseScenario::ConflictingTraffic => "conflicting_traffic",
            BaseScenario::PedestrianCrossing => "pedestrian_crossing",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AttackSpec {
    GhostObstacle {
        /// Ghost center this far before the conflict-zone entry on the ego
        /// route.
        distance_before_entry_m: f64,
        /// Lateral shift to the left of the ego route.
        lateral_offset_m: f64,
        /// Speed toward the ego (0 = stationary).
        speed_mps: f64,
        duration_ticks: u64,
        trigger: Trigger,
    },
    TrajectorySpoof {
        velocity_scale: f64,
        heading_bias_rad: f64,
        duration_ticks: u64,
        trigger: Trigger,
    },
}

impl AttackSpec {
    pub fn default_ghost() -> Self {
        AttackSpec::GhostObstacle {
            distance_before_entry_m: 8.0,
            lateral_offset_m: 0.0,
            speed_mps: 0.0,
            duration_ticks: 30,
            trigger: Trigger::EgoWithinDistance { meters: 25.0 },
        }
    }

    /// On for 1 s out of every 2: an always-on spoof just makes the planner
    /// wait it out, the on/off switching is what catches it mid-commit.
    pub fn default_spoof() -> Self {
        AttackSpec::TrajectorySpoof {
            velocity_scale: 2.0,
            heading_bias_rad: 0.0,
            duration_ticks: 10,
            trigger: Trigger::Periodic { period: 20 },
        }
    }

    /// Base scenario this attack is paired with by default.
    pub fn paired_base(&self) -> BaseScenario {
        match self {
            AttackSpec::GhostObstacle { .. } => BaseScenario::Nominal,
            AttackSpec::TrajectorySpoof { .. } => BaseScenario::Congested,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            AttackSpec::GhostObstacle { .. } => "ghost",
            AttackSpec::TrajectorySpoof { .. } => "spoof",
        }
    }

    fn trigger(&self) -> Trigger {
        match self {
            AttackSpec::GhostObstacle { trigger, .. } | AttackSpec::TrajectorySpoof { trigger, .. } => *trigger,
        }
    }

    fn duration(&self) -> u64 {
        match self {
            AttackSpec::GhostObstacle { duration_ticks, .. }
            | AttackSpec::TrajectorySpoof { duration_ticks, .. } => *duration_ticks,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub id: String,
    pub base: BaseScenario,
    pub attack: Option<AttackSpec>,
    pub ego_goal: RouteGoal,
    pub max_ticks: u64,
    pub grace_ticks: u32,
    pub allow_custom_pairing: bool,
    pub safety: SafetyParams,
    pub perf: PerfThresholds,
    pub planner: PlannerConfig,
    pub sim: SimParams,
}

impl Default for ScenarioSpec {
    fn default() -> Self {
        Self::for_base(BaseScenario::Nominal)
    }
}

impl ScenarioSpec {
    pub fn for_base(base: BaseScenario) -> Self {
        Self {
            id: base.as_str().to_string(),
            base,
            attack: None,
            ego_goal: RouteGoal::Straight,
            max_ticks: 600,
            grace_ticks: 10,
            allow_custom_pairing: false,
            safety: SafetyParams::default(),
            perf: PerfThresholds::default(),
            planner: PlannerConfig::default(),
            sim: SimParams::default(),
        }
    }

    /// Ghost attack on the nominal base.
    pub fn ghost_attack() -> Self {
        Self {
            id: "ghost_obstacle_attack".into(),
            attack: Some(AttackSpec::default_ghost()),
            ..Self::for_base(BaseScenario::Nominal)
        }
    }

    /// Trajectory spoof on the congested base.
    pub fn spoof_attack() -> Self {
        Self {
            id: "trajectory_spoof_attack".into(),
            attack: Some(AttackSpec::default_spoof()),
            ..Self::for_base(BaseScenario::Congested)
        }
    }

    /// The six reference scenarios.
    pub fn reference_set() -> Vec<Self> {
        vec![
            Self::for_base(BaseScenario::Nominal),
            Self::for_base(BaseScenario::Congested),
            Self::for_base(BaseScenario::ConflictingTraffic),
            Self::for_base(BaseScenario::PedestrianCrossing),
            Self::ghost_attack(),
            Self::spoof_attack(),
        ]
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let v = |m: String| Err(ScenarioError::Validation(m));
        if self.id.is_empty()
            || !self
                .id
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
        {
            return v(format!(
                "scenario id `{}` must be non-empty and use only [A-Za-z0-9_-]",
                self.id
            ));
        }
        if self.max_ticks == 0 {
            return v("max_ticks must be >= 1".into());
        }
        if let Some(a) = &self.attack {
            if !self.allow_custom_pairing && a.paired_base() != self.base {
                return v(format!(
                    "attack `{}` requires base `{}` (set allow_custom_pairing = true to override), got `{}`",
                    a.label(),
                    a.paired_base().as_str(),
                    self.base.as_str()
                ));
            }
            if a.duration() == 0 {
                return v("attack duration_ticks must be >= 1".into());
            }
            match a.trigger() {
                Trigger::Periodic { period: 0 } => return v("trigger_period_ticks must be >= 1".into()),
                Trigger::EgoWithinDistance { meters } if !meters.is_finite() => {
                    return v("trigger_distance_m must be finite".into())
                }
                _ => {}
            }
            if let AttackSpec::TrajectorySpoof { velocity_scale, heading_bias_rad, .. } = a {
                if !(*velocity_scale > 0.0 && velocity_scale.is_finite()) {
                    return v(format!("velocity_scale must be > 0, got {velocity_scale}"));
                }
                if !heading_bias_rad.is_finite() {
                    return v("heading_bias_rad must be finite".into());
                }
            }
            if let AttackSpec::GhostObstacle { distance_before_entry_m, lateral_offset_m, speed_mps, .. } = a {
                if !(distance_before_entry_m.is_finite() && lateral_offset_m.is_finite()) {
                    return v("ghost placement must be finite".into());
                }
                if !(*speed_mps >= 0.0 && speed_mps.is_finite()) {
                    return v(format!("ghost_speed_mps must be >= 0, got {speed_mps}"));
                }
            }
        }
        self.sim.validate().map_err(ScenarioError::Validation)?;
        self.safety.validate(self.sim.dt).map_err(ScenarioError::Validation)?;
        self.perf.validate().map_err(ScenarioError::Validation)?;
        self.planner.validate().map_err(ScenarioError::Validation)?;
        Ok(())
    }

    /// Attack schedule for this scenario (empty without an attack).
    pub fn attack_schedule(&self, ego_route: &Route) -> AttackSchedule {
        let Some(attack) = &self.attack else {
            return AttackSchedule::default();
        };
        let applies_to = (!self.allow_custom_pairing).then(|| attack.paired_base());
        let template = match *attack {
            AttackSpec::GhostObstacle {
                distance_before_entry_m,
                lateral_offset_m,
                speed_mps,
                ..
            } => {
                let s = ego_route.zone_entry_s - distance_before_entry_m;
                let t = ego_route.tangent_at(s);
                let left = Vec2::new(-t.y, t.x);
                FaultTemplate::GhostObstacle {
                    spawn: PerceivedObject {
                        id: crate::roles::security::GHOST_ID_BASE,
                        kind: AgentKind::Vehicle,
                        position: ego_route.point_at(s) + left * lateral_offset_m,
                        velocity: -t * speed_mps,
                        half_extent: Vec2::new(VEHICLE_HALF_EXTENT.0, VEHICLE_HALF_EXTENT.1),
                        provenance: Provenance::Ghost,
                    },
                }
            }
            AttackSpec::TrajectorySpoof {
                velocity_scale,
                heading_bias_rad,
                ..
            } => FaultTemplate::TrajectorySpoof {
                velocity_scale,
                heading_bias: heading_bias_rad,
            },
        };
        AttackSchedule {
            entries: vec![AttackEntry {
                applies_to,
                template,
                trigger: attack.trigger(),
                duration_ticks: attack.duration(),
            }],
        }
    }
}
