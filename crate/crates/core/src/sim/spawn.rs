//! Scenario spawning: geometry, ego placement and seeded background traffic.

use rand::Rng;
use thiserror::Error;

use super::traffic::{ScriptedAgent, SpeedProfile, StopScript};
use crate::rng::stream;
use crate::scenario::{BaseScenario, ScenarioSpec};
use crate::state::{
    AgentKind, AgentState, Approach, GroundTruthWorld, IntersectionGeometry, Route, SimClock,
};
use crate::sim::geometry::Rect;
use crate::Vec2;

pub const EGO_ID: u32 = 0;
pub const EGO_APPROACH: Approach = Approach::South;
/// Ego center starts this far before the conflict-zone entry.
pub const EGO_START_BEFORE_ENTRY_M: f64 = 40.0;
pub const EGO_START_SPEED: f64 = 8.0;
pub const VEHICLE_HALF_EXTENT: (f64, f64) = (2.25, 1.0);
pub const PEDESTRIAN_HALF_EXTENT: (f64, f64) = (0.3, 0.3);
/// Background vehicles are placed this far before the zone entry at their
/// spawn time.
const SPAWN_BEFORE_ENTRY_M: f64 = 120.0;
const TIME_JITTER_S: f64 = 2.0;
const SPEED_JITTER: f64 = 0.2;
const PEDESTRIAN_SPEED: f64 = 1.4;
const PEDESTRIAN_HALF_WALK_M: f64 = 25.0;
/// Stop-and-go cross traffic: braking and pull-out rates, dwell range.
const STOP_DECEL: f64 = 3.0;
const PULL_OUT_ACCEL: f64 = 2.5;
const STOP_DWELL_S: (f64, f64) = (0.5, 2.0);

#[derive(Debug, Error, PartialEq)]
pub enum SpawnError {
    #[error("invalid scenario spec: {0}")]
    InvalidSpec(String),
}

struct Jitter<R: Rng> {
    rng: R,
}

impl<R: Rng> Jitter<R> {
    fn time(&mut self, nominal: f64) -> f64 {
        nominal + self.rng.random_range(-TIME_JITTER_S..=TIME_JITTER_S)
    }

    fn speed(&mut self, nominal: f64) -> f64 {
        nominal * (1.0 + self.rng.random_range(-SPEED_JITTER..=SPEED_JITTER))
    }

    fn coin(&mut self) -> bool {
        self.rng.random_bool(0.5)
    }

    fn cross_approach(&mut self) -> Approach {
        if self.coin() {
            Approach::East
        } else {
            Approach::West
        }
    }
}

fn vehicle(id: u32, route: &Route, arrival_s: f64, speed: f64) -> ScriptedAgent {
    let spawn_s = route.zone_entry_s - SPAWN_BEFORE_ENTRY_M;
    ScriptedAgent {
        id,
        kind: AgentKind::Vehicle,
        route: route.clone(),
        spawn_time_s: arrival_s - SPAWN_BEFORE_ENTRY_M / speed,
        spawn_s,
        profile: SpeedProfile::cruise(speed),
        half_extent: Vec2::new(VEHICLE_HALF_EXTENT.0, VEHICLE_HALF_EXTENT.1),
    }
}

/// Background traffic for `base`. Draw order is fixed so a given seed
/// always produces the same agents.
fn background(
    base: BaseScenario,
    geometry: &IntersectionGeometry,
    ego_route: &Route,
    seed: u64,
) -> Vec<ScriptedAgent> {
    let mut j = Jitter {
        rng: stream(seed, 0, "spawn"),
    };
    let limit = geometry.speed_limit;
    let mut out = Vec::new();
    let mut next_id = 1u32;
    let mut push = |out: &mut Vec<ScriptedAgent>, approach: Approach, arrival: f64, speed: f64| {
        out.push(vehicle(next_id, geometry.lane(approach), arrival, speed));
        next_id += 1;
    };
    match base {
        BaseScenario::Nominal => {
            let cross = j.cross_approach();
            let (t, v) = (j.time(12.0), j.speed(limit));
            push(&mut out, cross, t, v);
            if j.coin() {
                let (t, v) = (j.time(3.0), j.speed(limit));
                push(&mut out, Approach::North, t, v);
            }
        }
        BaseScenario::Congested => {
            let n = j.rng.random_range(4..=6);
            for k in 0..n {
                let approach = j.cross_approach();
                let (t, v) = (j.time(2.0 + 10.0 * k as f64), j.speed(0.5 * limit));
                push(&mut out, approach, t, v);
            }
        }
        BaseScenario::ConflictingTraffic => {
            // each cross car either rolls through or stops at the line and
            // pulls out after a short dwell
            for approach in [Approach::East, Approach::West] {
                let (t, v) = (j.time(4.5), j.speed(limit));
                push(&mut out, approach, t, v);
                if j.coin() {
                    let dwell = j.rng.random_range(STOP_DWELL_S.0..=STOP_DWELL_S.1);
                    let car = out.last_mut().expect("just pushed");
                    car.profile.stop = Some(StopScript {
                        stop_distance: SPAWN_BEFORE_ENTRY_M - 1.0 - VEHICLE_HALF_EXTENT.0,
                        decel: STOP_DECEL,
                        dwell_s: dwell,
                        accel: PULL_OUT_ACCEL,
                    });
                }
            }
            if j.coin() {
                let (t, v) = (j.time(4.5), j.speed(limit));
                push(&mut out, Approach::North, t, v);
            }
        }
        BaseScenario::PedestrianCrossing => {
            let y = if j.coin() { -7.0 } else { -8.0 };
            let from_east = j.coin();
            let speed = j.speed(PEDESTRIAN_SPEED);
            // crossing the ego lane roughly when the ego reaches the zone
            let ego_arrival = EGO_START_BEFORE_ENTRY_M / EGO_START_SPEED;
            let t_cross = j.time(ego_arrival + 0.5);
            let lane_x = ego_route.point_at(ego_route.zone_entry_s).x;
            let (start, end) = if from_east {
                (Vec2::new(lane_x + PEDESTRIAN_HALF_WALK_M, y), Vec2::new(lane_x - PEDESTRIAN_HALF_WALK_M, y))
            } else {
                (Vec2::new(lane_x - PEDESTRIAN_HALF_WALK_M, y), Vec2::new(lane_x + PEDESTRIAN_HALF_WALK_M, y))
            };
            let route = Route::new(vec![start, end], &geometry.conflict_zone);
            out.push(ScriptedAgent {
                id: next_id,
                kind: AgentKind::Pedestrian,
                route,
                spawn_time_s: t_cross - PEDESTRIAN_HALF_WALK_M / speed,
                spawn_s: 0.0,
                profile: SpeedProfile::cruise(speed),
                half_extent: Vec2::new(PEDESTRIAN_HALF_EXTENT.0, PEDESTRIAN_HALF_EXTENT.1),
            });
        }
    }
    out
}

/// Builds the initial world for `(spec, seed)`. Attack scenarios share the
/// traffic of their base scenario; only the attack schedule differs.
pub fn spawn_scenario(spec: &ScenarioSpec, seed: u64) -> Result<GroundTruthWorld, SpawnError> {
    spec.validate().map_err(|e| SpawnError::InvalidSpec(e.to_string()))?;
    let geometry = IntersectionGeometry::new(
        IntersectionGeometry::DEFAULT_HALF_SIZE,
        IntersectionGeometry::DEFAULT_LANE_OFFSET,
        spec.sim.speed_limit,
    );
    let ego_route = geometry.route(EGO_APPROACH, spec.ego_goal);
    let progress = ego_route.zone_entry_s - EGO_START_BEFORE_ENTRY_M;
    let speed = EGO_START_SPEED.min(geometry.speed_limit);
    let tangent = ego_route.tangent_at(progress);
    let ego = AgentState {
        id: EGO_ID,
        kind: AgentKind::EgoVehicle,
        position: ego_route.point_at(progress),
        velocity: tangent * speed,
        acceleration: Vec2::zeros(),
        heading: tangent.y.atan2(tangent.x),
        half_extent: Vec2::new(VEHICLE_HALF_EXTENT.0, VEHICLE_HALF_EXTENT.1),
    };
    let background = background(spec.base, &geometry, &ego_route, seed);
    let clock = SimClock::new(spec.sim.dt);
    let agents = background.iter().filter_map(|a| a.state_at(0.0)).collect();
    Ok(GroundTruthWorld {
        clock,
        ego,
        ego_route,
        ego_goal: spec.ego_goal,
        ego_progress_m: progress,
        ego_speed: speed,
        ego_accel: 0.0,
        ticks_past_zone: 0,
        agents,
        background,
        intersection: geometry,
        collision: None,
    })
}

/// True if the segment `a -> b` passes through `zone`.
pub fn crosses_zone(a: Vec2, b: Vec2, zone: &Rect) -> bool {
    let steps = 200;
    (0..=steps).any(|k| zone.contains(a + (b - a) * (k as f64 / steps as f64)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::AttackSpec;

    #[test]
    fn seeds_change_timing_not_geometry() {
        let spec = ScenarioSpec::for_base(BaseScenario::Nominal);
        let a = spawn_scenario(&spec, 1).unwrap();
        let b = spawn_scenario(&spec, 2).unwrap();
        assert_eq!(a.intersection, b.intersection);
        assert_ne!(
            a.background.iter().map(|x| x.spawn_time_s).collect::<Vec<_>>(),
            b.background.iter().map(|x| x.spawn_time_s).collect::<Vec<_>>()
        );
    }

    #[test]
    fn ghost_reuses_nominal_traffic() {
        let nominal = ScenarioSpec::for_base(BaseScenario::Nominal);
        let mut ghost = nominal.clone();
        ghost.id = "ghost".into();
        ghost.attack = Some(AttackSpec::default_ghost());
        for seed in 0..10 {
            assert_eq!(
                spawn_scenario(&nominal, seed).unwrap().background,
                spawn_scenario(&ghost, seed).unwrap().background
            );
        }
    }

    #[test]
    fn pedestrian_crosses_ego_lane_inside_zone() {
        let spec = ScenarioSpec::for_base(BaseScenario::PedestrianCrossing);
        for seed in 0..20 {
            let w = spawn_scenario(&spec, seed).unwrap();
            let peds: Vec<_> = w
                .background
                .iter()
                .filter(|a| a.kind == AgentKind::Pedestrian)
                .collect();
            assert_eq!(peds.len(), 1);
            let r = &peds[0].route;
            assert!(crosses_zone(r.points[0], r.points[1], &w.intersection.conflict_zone));
            let lane_x = w.ego_route.point_at(w.ego_route.zone_entry_s).x;
            assert!(r.points[0].x.min(r.points[1].x) < lane_x && lane_x < r.points[0].x.max(r.points[1].x));
            assert!(peds[0].profile.cruise <= 3.0);
        }
    }

    #[test]
    fn densities_match_base() {
        for seed in 0..20 {
            let n = spawn_scenario(&ScenarioSpec::for_base(BaseScenario::Nominal), seed)
                .unwrap()
                .background
                .len();
            assert!((1..=2).contains(&n));
            let c = spawn_scenario(&ScenarioSpec::for_base(BaseScenario::Congested), seed)
                .unwrap()
                .background
                .len();
            assert!((4..=6).contains(&c));
            let w = spawn_scenario(&ScenarioSpec::for_base(BaseScenario::ConflictingTraffic), seed).unwrap();
            assert!(w.background.len() >= 2);
        }
    }
}
