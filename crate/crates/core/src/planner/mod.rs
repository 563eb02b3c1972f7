//! Tactical planners (the component under test) behind one interface.

mod external;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sim::conflict::{route_conflict, Obstacle, LATERAL_MARGIN};
use crate::sim::spawn::EGO_APPROACH;
use crate::state::{IntersectionGeometry, Maneuver, PerceivedState};

pub use external::{ExternalPlanner, EXTERNAL_TIMEOUT};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlannerKind {
    GapAcceptance,
    OverCautious,
    Aggressive,
}

impl PlannerKind {
    pub fn caution_factor(self) -> f64 {
        match self {
            PlannerKind::GapAcceptance => 1.0,
            PlannerKind::OverCautious => 2.5,
            PlannerKind::Aggressive => 0.4,
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().replace(['-', ' '], "_").as_str() {
            "gap_acceptance" | "gapacceptance" => Some(PlannerKind::GapAcceptance),
            "over_cautious" | "overcautious" => Some(PlannerKind::OverCautious),
            "aggressive" => Some(PlannerKind::Aggressive),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannerConfig {
    pub kind: PlannerKind,
    pub caution: f64,
    pub reaction_time: f64,
    /// Fixed true: the planner believes its perception.
    pub trust_perception: bool,
    /// Only conflicts predicted within this many seconds are considered.
    pub lookahead_s: f64,
    /// When set, proposals come from this external program instead.
    pub external_command: Option<String>,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            kind: PlannerKind::GapAcceptance,
            caution: 1.0,
            reaction_time: 0.5,
            trust_perception: true,
            lookahead_s: 8.0,
            external_command: None,
        }
    }
}

impl PlannerConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.caution > 0.0 && self.caution.is_finite()) {
            return Err(format!("caution must be > 0, got {}", self.caution));
        }
        if !(self.reaction_time >= 0.0 && self.reaction_time.is_finite()) {
            return Err(format!("reaction_time_s must be >= 0, got {}", self.reaction_time));
        }
        if !(self.lookahead_s > 0.0 && self.lookahead_s.is_finite()) {
            return Err(format!("lookahead_s must be > 0, got {}", self.lookahead_s));
        }
        if !self.trust_perception {
            return Err("trust_perception = false is not supported".into());
        }
        Ok(())
    }

    /// Caution after applying the planner kind's factor.
    pub fn effective_caution(&self) -> f64 {
        self.caution * self.kind.caution_factor()
    }
}

/// Gap (seconds) the ego needs to cross `crossing_distance` meters:
/// `caution * distance / max(speed, 1) + reaction_time`.
pub fn required_gap(ego_speed: f64, crossing_distance: f64, caution: f64, reaction_time: f64) -> f64 {
    caution * (crossing_distance / ego_speed.max(1.0)) + reaction_time
}

#[derive(Debug, Error)]
pub enum PlannerError {
    #[error("external planner: {0}")]
    External(String),
}

pub trait Planner: Send {
    /// Maneuver and free-text rationale for this tick.
    fn plan(&mut self, perceived: &PerceivedState) -> Result<(Maneuver, String), PlannerError>;
}

/// Deterministic gap-acceptance planner. `OverCautious` and `Aggressive`
/// are the same law with scaled caution.
#[derive(Debug, Clone)]
pub struct GapAcceptance {
    pub cfg: PlannerConfig,
    pub geometry: IntersectionGeometry,
}

impl GapAcceptance {
    pub fn new(cfg: PlannerConfig, geometry: IntersectionGeometry) -> Self {
        Self { cfg, geometry }
    }

    pub fn decide(&self, perceived: &PerceivedState) -> (Maneuver, String) {
        let route = self.geometry.route(EGO_APPROACH, perceived.goal);
        let ego = &perceived.ego;
        let s = ego.route_progress_m;
        let v = ego.speed;
        let half_len = ego.half_extent.x;
        let limit = self.geometry.speed_limit;
        let caution = self.cfg.effective_caution();
        let reaction = self.cfg.reaction_time;
        let committed = s + half_len > route.zone_entry_s;
        let go = if v < 0.5 * limit {
            Maneuver::Accelerate
        } else {
            Maneuver::Proceed
        };

        let mut choice: Option<(Maneuver, String)> = None;
        for obj in &perceived.objects {
            let radius = obj.footprint_radius();
            let ob = Obstacle {
                id: obj.id,
                position: obj.position,
                velocity: obj.velocity,
                radius,
            };
            let Some(c) = route_conflict(
                &route,
                s,
                route.zone_exit_s + 5.0,
                ego.half_extent.y + radius + LATERAL_MARGIN,
                &ob,
                self.cfg.lookahead_s,
            ) else {
                continue;
            };
            let gap = c.time_to_enter;
            let d = (c.crossing_s - s).max(0.0) + half_len + radius;
            let r = required_gap(v, d, caution, reaction);
            let m = if committed {
                if gap == 0.0 {
                    Maneuver::Wait
                } else {
                    continue;
                }
            } else if gap < reaction {
                Maneuver::Wait
            } else if gap < 0.5 * r {
                Maneuver::Yield
            } else if gap < r {
                Maneuver::ProceedCautiously
            } else {
                go
            };
            let more_cautious = choice
                .as_ref()
                .is_none_or(|(cur, _)| m.aggressiveness() < cur.aggressiveness());
            if more_cautious {
                let why = format!(
                    "object {} enters path in {:.2} s, crossing {:.1} m ahead; required gap {:.2} s -> {}",
                    obj.id, gap, d, r, m
                );
                choice = Some((m, why));
            }
        }
        choice.unwrap_or_else(|| {
            if committed {
                (go, "committed inside conflict zone; path clear".to_string())
            } else {
                (go, "no conflicts".to_string())
            }
        })
    }
}

impl Planner for GapAcceptance {
    fn plan(&mut self, perceived: &PerceivedState) -> Result<(Maneuver, String), PlannerError> {
        Ok(self.decide(perceived))
    }
}

/// Planner for a configuration: external when a command is given,
/// otherwise the built-in law.
pub fn build_planner(cfg: &PlannerConfig, geometry: &IntersectionGeometry) -> Result<Box<dyn Planner>, PlannerError> {
    match &cfg.external_command {
        Some(cmd) => Ok(Box::new(ExternalPlanner::spawn(cmd)?)),
        None => Ok(Box::new(GapAcceptance::new(cfg.clone(), geometry.clone()))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::{AgentKind, EgoOdometry, PerceivedObject, Provenance, RouteGoal, SimClock};
    use crate::Vec2;
    use approx::assert_relative_eq;

    pub(crate) fn perceived(progress: f64, speed: f64, objects: Vec<PerceivedObject>) -> PerceivedState {
        let g = IntersectionGeometry::standard();
        let route = g.route(EGO_APPROACH, RouteGoal::Straight);
        PerceivedState {
            clock: SimClock::default(),
            ego: EgoOdometry {
                position: route.point_at(progress),
                velocity: route.tangent_at(progress) * speed,
                heading: route.heading_at(progress),
                speed,
                route_progress_m: progress,
                half_extent: Vec2::new(2.25, 1.0),
            },
            objects,
            goal: RouteGoal::Straight,
        }
    }

    fn obj(id: u32, position: Vec2, velocity: Vec2, provenance: Provenance) -> PerceivedObject {
        PerceivedObject {
            id,
            kind: AgentKind::Vehicle,
            position,
            velocity,
            half_extent: Vec2::new(2.25, 1.0),
            provenance,
        }
    }

    fn planner() -> GapAcceptance {
        GapAcceptance::new(PlannerConfig::default(), IntersectionGeometry::standard())
    }

    #[test]
    fn required_gap_examples() {
        assert_relative_eq!(required_gap(5.0, 15.0, 1.0, 0.5), 3.5);
        assert_relative_eq!(required_gap(0.0, 10.0, 1.0, 0.5), 10.5);
        assert_relative_eq!(required_gap(5.0, 15.0, 2.5, 0.5), 8.0);
    }

    #[test]
    fn no_conflicts() {
        let (m, why) = planner().decide(&perceived(350.0, 8.0, vec![]));
        assert!(matches!(m, Maneuver::Proceed | Maneuver::Accelerate));
        assert_eq!(why, "no conflicts");
    }

    #[test]
    fn ghost_on_path_means_wait() {
        let ghost = obj(1000, Vec2::new(3.5, -18.0), Vec2::zeros(), Provenance::Ghost);
        let (m, _) = planner().decide(&perceived(365.0, 8.0, vec![ghost]));
        assert_eq!(m, Maneuver::Wait);
    }

    #[test]
    fn spoof_flips_proceed_to_yield() {
        // ego 30 m (incl. footprints) from the crossing at 3 m/s; westbound
        // car 9 s from the corridor at 5 m/s -> outside lookahead
        let s = 403.5 + 4.5 - 30.0;
        let hw = 1.0 + 2.25 + LATERAL_MARGIN;
        let x0 = 3.5 + hw + 9.0 * 5.0;
        let real = obj(7, Vec2::new(x0, 3.5), Vec2::new(-5.0, 0.0), Provenance::Real);
        let p = perceived(s, 3.0, vec![real.clone()]);
        let (m, _) = planner().decide(&p);
        assert!(matches!(m, Maneuver::Proceed | Maneuver::Accelerate), "{m}");
        let spoofed = PerceivedObject {
            velocity: Vec2::new(-10.0, 0.0),
            provenance: Provenance::Spoofed,
            ..real
        };
        let (m, why) = planner().decide(&perceived(s, 3.0, vec![spoofed]));
        assert_eq!(m, Maneuver::Yield, "{why}");
    }

    #[test]
    fn provenance_is_ignored() {
        let base = obj(4, Vec2::new(-20.0, -3.5), Vec2::new(6.0, 0.0), Provenance::Real);
        let mut outs = Vec::new();
        for p in [Provenance::Real, Provenance::Ghost, Provenance::Spoofed] {
            let o = PerceivedObject {
                provenance: p,
                ..base.clone()
            };
            outs.push(planner().decide(&perceived(375.0, 6.0, vec![o])));
        }
        assert!(outs.windows(2).all(|w| w[0] == w[1]));
    }
}
