//! Constant-velocity conflict search between an object and the ego route.

use crate::state::Route;
use crate::Vec2;

/// Extra lateral clearance added to the corridor around the ego route.
pub const LATERAL_MARGIN: f64 = 0.5;
const SEARCH_STEP: f64 = 0.05;
const BISECTION_STEPS: usize = 30;

/// Minimal kinematic description of something the ego must avoid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Obstacle {
    pub id: u32,
    pub position: Vec2,
    pub velocity: Vec2,
    pub radius: f64,
}

/// First predicted entry of an obstacle into the ego corridor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RouteConflict {
    pub id: u32,
    /// Zero when the obstacle is already inside the corridor.
    pub time_to_enter: f64,
    /// Route arc length closest to the obstacle at entry.
    pub crossing_s: f64,
    pub radius: f64,
}

/// Corridor of half width `half_width` around the route section
/// `[s_lo, s_hi]`; the obstacle moves at constant velocity for `horizon`
/// seconds.
pub fn route_conflict(
    route: &Route,
    s_lo: f64,
    s_hi: f64,
    half_width: f64,
    obstacle: &Obstacle,
    horizon: f64,
) -> Option<RouteConflict> {
    if s_hi <= s_lo {
        return None;
    }
    let at = |t: f64| obstacle.position + obstacle.velocity * t;
    let inside = |t: f64| {
        route
            .project_within(at(t), s_lo, s_hi)
            .filter(|p| p.distance <= half_width)
    };
    if let Some(p) = inside(0.0) {
        return Some(RouteConflict {
            id: obstacle.id,
            time_to_enter: 0.0,
            crossing_s: p.s,
            radius: obstacle.radius,
        });
    }
    if obstacle.velocity.norm_squared() == 0.0 {
        return None;
    }
    let steps = (horizon / SEARCH_STEP).ceil() as usize;
    let mut prev = 0.0;
    for k in 1..=steps {
        let t = (k as f64 * SEARCH_STEP).min(horizon);
        if inside(t).is_some() {
            let (mut lo, mut hi) = (prev, t);
            for _ in 0..BISECTION_STEPS {
                let mid = 0.5 * (lo + hi);
                if inside(mid).is_some() {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            let p = inside(hi).expect("bisection keeps `hi` inside");
            return Some(RouteConflict {
                id: obstacle.id,
                time_to_enter: hi,
                crossing_s: p.s,
                radius: obstacle.radius,
            });
        }
        prev = t;
    }
    None
}
