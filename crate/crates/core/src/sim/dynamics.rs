//! Maneuver actuation and longitudinal ego kinematics.

use serde::{Deserialize, Serialize};

use super::collision::{sat_overlap, Obb};
use super::conflict::{route_conflict, Obstacle, LATERAL_MARGIN};
use super::SimParams;
use crate::normalize_angle;
use crate::state::{GroundTruthWorld, IntersectionGeometry, Maneuver, Route};

/// Comfortable deceleration used by `Wait` and speed tracking, m/s^2.
pub const COMFORT_DECEL: f64 = 3.0;
/// Comfortable acceleration used by speed tracking, m/s^2.
pub const COMFORT_ACCEL: f64 = 2.0;
/// Gap kept between the ego front and the conflict-zone entry when stopping.
pub const STOP_BUFFER: f64 = 1.0;
/// `Yield` stops for crossing agents predicted to enter the corridor within
/// this many seconds.
pub const YIELD_ENVELOPE_S: f64 = 4.0;

/// Longitudinal command for the ego.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EgoCommand {
    /// Signed acceleration along the route, m/s^2.
    pub target_accel: f64,
    pub lane_follow: bool,
    /// Speed at which `target_accel` would be released (the tracked target,
    /// or zero for stopping commands). Used for open-loop prediction.
    pub settle_speed: f64,
}

impl EgoCommand {
    fn hold(speed: f64) -> Self {
        Self {
            target_accel: 0.0,
            lane_follow: true,
            settle_speed: speed,
        }
    }
}

/// Ego longitudinal state as seen by whoever issues the command.
#[derive(Debug, Clone, Copy)]
pub struct EgoLongitudinal<'a> {
    pub route: &'a Route,
    pub progress: f64,
    pub speed: f64,
    /// Half length of the ego footprint.
    pub half_length: f64,
    pub half_width: f64,
}

impl EgoLongitudinal<'_> {
    /// Arc length at which the ego center must rest to keep its front
    /// `STOP_BUFFER` short of the conflict zone.
    pub fn stop_point(&self) -> f64 {
        self.route.zone_entry_s - STOP_BUFFER - self.half_length
    }
}

/// Maps a maneuver onto a longitudinal command. Only `Yield` consults
/// `obstacles`.
pub fn maneuver_to_command(
    maneuver: Maneuver,
    ego: &EgoLongitudinal<'_>,
    obstacles: &[Obstacle],
    geometry: &IntersectionGeometry,
    params: &SimParams,
) -> EgoCommand {
    let v = ego.speed;
    let limit = geometry.speed_limit;
    let track = |target: f64, max_accel: f64| {
        let a = ((target - v) / params.dt).clamp(-COMFORT_DECEL, max_accel);
        if a == 0.0 {
            EgoCommand::hold(v)
        } else {
            EgoCommand {
                target_accel: a,
                lane_follow: true,
                settle_speed: target,
            }
        }
    };
    match maneuver {
        Maneuver::Wait => stop_before_line(ego, params),
        Maneuver::Yield => {
            if crossing_within_envelope(ego, obstacles) {
                stop_before_line(ego, params)
            } else {
                track(0.4 * limit, COMFORT_ACCEL)
            }
        }
        Maneuver::ProceedCautiously => track(0.6 * limit, COMFORT_ACCEL),
        Maneuver::Proceed => track(limit, COMFORT_ACCEL),
        Maneuver::Accelerate => track(limit, params.a_accel_max),
        Maneuver::EmergencyBrake => {
            if v > 0.0 {
                EgoCommand {
                    target_accel: -params.a_brake_max,
                    lane_follow: true,
                    settle_speed: 0.0,
                }
            } else {
                EgoCommand::hold(0.0)
            }
        }
    }
}

fn stop_before_line(ego: &EgoLongitudinal<'_>, params: &SimParams) -> EgoCommand {
    let v = ego.speed;
    if v <= 0.0 {
        return EgoCommand::hold(0.0);
    }
    let d = ego.stop_point() - ego.progress;
    // comfort braking, harder only when comfort would overrun the line
    let decel = if d > 0.05 {
        (v * v / (2.0 * d)).max(COMFORT_DECEL).min(params.a_brake_max)
    } else {
        COMFORT_DECEL
    };
    EgoCommand {
        target_accel: -decel,
        lane_follow: true,
        settle_speed: 0.0,
    }
}

fn crossing_within_envelope(ego: &EgoLongitudinal<'_>, obstacles: &[Obstacle]) -> bool {
    obstacles.iter().any(|ob| {
        route_conflict(
            ego.route,
            ego.progress,
            ego.route.zone_exit_s + ego.half_length,
            ego.half_width + ob.radius + LATERAL_MARGIN,
            ob,
            YIELD_ENVELOPE_S,
        )
        .is_some()
    })
}

/// Command for the ego of `world`. `Yield` stops for real agents within
/// sensing range, so faults in perception can change which maneuver gets
/// picked but never how a given maneuver is carried out.
pub fn command_for_world(maneuver: Maneuver, world: &GroundTruthWorld, params: &SimParams) -> EgoCommand {
    let obstacles: Vec<Obstacle> = world
        .agents
        .iter()
        .filter(|a| (a.position - world.ego.position).norm() <= params.sensing_range)
        .map(|a| Obstacle {
            id: a.id,
            position: a.position,
            velocity: a.velocity,
            radius: a.footprint_radius(),
        })
        .collect();
    let ego = EgoLongitudinal {
        route: &world.ego_route,
        progress: world.ego_progress_m,
        speed: world.ego_speed,
        half_length: world.ego.half_extent.x,
        half_width: world.ego.half_extent.y,
    };
    maneuver_to_command(maneuver, &ego, &obstacles, &world.intersection, params)
}

/// Distance covered and final speed after `t` seconds from speed `v0` under
/// constant acceleration `a`, never reversing.
pub fn step_longitudinal(v0: f64, a: f64, t: f64) -> (f64, f64) {
    let v1 = v0 + a * t;
    if v1 < 0.0 {
        (v0 * v0 / (2.0 * -a), 0.0)
    } else {
        (v0 * t + 0.5 * a * t * t, v1)
    }
}

/// Open-loop prediction of the ego under a held command: constant
/// acceleration until the speed reaches `settle_speed` (or zero), constant
/// speed afterwards.
pub fn predicted_progress(v0: f64, cmd: &EgoCommand, t: f64) -> (f64, f64) {
    let a = cmd.target_accel;
    if a == 0.0 {
        return (v0 * t, v0);
    }
    let settle = if a > 0.0 {
        cmd.settle_speed.max(v0)
    } else {
        cmd.settle_speed.clamp(0.0, v0)
    };
    let t_sat = (settle - v0) / a;
    if t <= t_sat {
        (v0 * t + 0.5 * a * t * t, v0 + a * t)
    } else {
        let d_sat = v0 * t_sat + 0.5 * a * t_sat * t_sat;
        (d_sat + settle * (t - t_sat), settle)
    }
}

/// Advances the world one `dt`: the ego moves along its route under `cmd`
/// with piecewise-constant acceleration; background agents follow their
/// scripts. Collision detection is left to the caller.
pub fn step_dynamics(world: &GroundTruthWorld, cmd: &EgoCommand) -> GroundTruthWorld {
    let dt = world.clock.dt;
    let mut next = world.clone();
    next.clock = world.clock.advanced();
    let (advance, v1) = step_longitudinal(world.ego_speed, cmd.target_accel, dt);
    next.ego_progress_m = world.ego_progress_m + advance;
    next.ego_speed = v1;
    next.ego_accel = cmd.target_accel;
    let tangent = next.ego_route.tangent_at(next.ego_progress_m);
    next.ego.position = next.ego_route.point_at(next.ego_progress_m);
    next.ego.velocity = tangent * v1;
    next.ego.acceleration = tangent * cmd.target_accel;
    next.ego.heading = normalize_angle(tangent.y.atan2(tangent.x));

    let t = next.clock.sim_time();
    next.agents = next.background.iter().filter_map(|a| a.state_at(t)).collect();

    next.ticks_past_zone = if ego_past_zone(&next) {
        world.ticks_past_zone + 1
    } else {
        0
    };
    next
}

/// Ego rectangle is entirely beyond the zone along its route.
pub fn ego_past_zone(world: &GroundTruthWorld) -> bool {
    if world.ego_progress_m - world.ego.half_extent.x < world.ego_route.zone_exit_s {
        return false;
    }
    let zone = &world.intersection.conflict_zone;
    let zone_box = Obb {
        center: zone.center(),
        half_extent: zone.half_extent(),
        heading: 0.0,
    };
    sat_overlap(&Obb::of(&world.ego), &zone_box).is_none()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::ScenarioSpec;
    use crate::sim::spawn_scenario;
    use approx::assert_relative_eq;

    fn ego_at(route: &Route, progress: f64, speed: f64) -> EgoLongitudinal<'_> {
        EgoLongitudinal {
            route,
            progress,
            speed,
            half_length: 2.25,
            half_width: 1.0,
        }
    }

    #[test]
    fn emergency_brake_maps_to_max_decel() {
        let g = IntersectionGeometry::standard();
        let r = g.lane(crate::state::Approach::South).clone();
        let p = SimParams::default();
        let cmd = maneuver_to_command(Maneuver::EmergencyBrake, &ego_at(&r, 300.0, 6.0), &[], &g, &p);
        assert_eq!(cmd.target_accel, -8.0);
    }

    #[test]
    fn wait_when_stopped_holds() {
        let g = IntersectionGeometry::standard();
        let r = g.lane(crate::state::Approach::South).clone();
        let p = SimParams::default();
        let cmd = maneuver_to_command(Maneuver::Wait, &ego_at(&r, 380.0, 0.0), &[], &g, &p);
        assert_eq!(cmd.target_accel, 0.0);
    }

    #[test]
    fn wait_brakes_at_comfort_or_harder_to_make_the_line() {
        let g = IntersectionGeometry::standard();
        let r = g.lane(crate::state::Approach::South).clone();
        let p = SimParams::default();
        let far = ego_at(&r, 360.0, 8.0);
        let cmd = maneuver_to_command(Maneuver::Wait, &far, &[], &g, &p);
        assert_eq!(cmd.target_accel, -COMFORT_DECEL);
        let (d, v) = predicted_progress(8.0, &cmd, 100.0);
        assert_eq!(v, 0.0);
        assert_relative_eq!(d, 64.0 / 6.0, epsilon = 1e-9);

        let near = ego_at(&r, far.stop_point() - 5.0, 8.0);
        let cmd = maneuver_to_command(Maneuver::Wait, &near, &[], &g, &p);
        assert_relative_eq!(cmd.target_accel, -6.4, epsilon = 1e-12);
        let (d, _) = predicted_progress(8.0, &cmd, 100.0);
        assert_relative_eq!(near.progress + d, near.stop_point(), epsilon = 1e-9);
    }

    #[test]
    fn accelerate_saturates_at_limit() {
        let g = IntersectionGeometry::standard();
        let r = g.lane(crate::state::Approach::South).clone();
        let p = SimParams::default();
        let cmd = maneuver_to_command(Maneuver::Accelerate, &ego_at(&r, 300.0, 10.0), &[], &g, &p);
        assert_eq!(cmd.target_accel, 0.0);
        let cmd = maneuver_to_command(Maneuver::Accelerate, &ego_at(&r, 300.0, 2.0), &[], &g, &p);
        assert_eq!(cmd.target_accel, 3.0);
    }

    #[test]
    fn tracking_targets() {
        let g = IntersectionGeometry::standard();
        let r = g.lane(crate::state::Approach::South).clone();
        let p = SimParams::default();
        let pc = maneuver_to_command(Maneuver::ProceedCautiously, &ego_at(&r, 300.0, 10.0), &[], &g, &p);
        assert_eq!(pc.target_accel, -3.0);
        assert_eq!(pc.settle_speed, 6.0);
        let y = maneuver_to_command(Maneuver::Yield, &ego_at(&r, 300.0, 3.95), &[], &g, &p);
        assert_relative_eq!(y.target_accel, 0.5, epsilon = 1e-9);
    }

    #[test]
    fn yield_stops_for_crossing_agent() {
        let g = IntersectionGeometry::standard();
        let r = g.lane(crate::state::Approach::South).clone();
        let p = SimParams::default();
        let crossing = Obstacle {
            id: 4,
            position: crate::Vec2::new(-15.0, -3.5),
            velocity: crate::Vec2::new(8.0, 0.0),
            radius: 2.25,
        };
        let cmd = maneuver_to_command(Maneuver::Yield, &ego_at(&r, 370.0, 4.0), &[crossing], &g, &p);
        assert!(cmd.target_accel < 0.0);
        assert_eq!(cmd.settle_speed, 0.0);
    }

    #[test]
    fn closed_form_steps() {
        let (d, v) = step_longitudinal(5.0, 1.0, 0.1);
        assert_relative_eq!(v, 5.1, epsilon = 1e-12);
        assert_relative_eq!(d, 0.505, epsilon = 1e-12);
        let (d, v) = step_longitudinal(0.3, -8.0, 0.1);
        assert_eq!(v, 0.0);
        assert_relative_eq!(d, 0.005625, epsilon = 1e-12);
        let (d, _) = step_longitudinal(7.3, 0.0, 0.1);
        assert_eq!(d, 7.3 * 0.1);
    }

    #[test]
    fn step_advances_clock_and_ego() {
        let w = spawn_scenario(&ScenarioSpec::default(), 3).unwrap();
        let cmd = EgoCommand {
            target_accel: 1.0,
            lane_follow: true,
            settle_speed: 20.0,
        };
        let n = step_dynamics(&w, &cmd);
        assert_eq!(n.clock.tick, 1);
        assert_relative_eq!(n.ego_speed, w.ego_speed + 0.1, epsilon = 1e-12);
        assert_relative_eq!(
            n.ego_progress_m - w.ego_progress_m,
            w.ego_speed * 0.1 + 0.005,
            epsilon = 1e-12
        );
    }
}
