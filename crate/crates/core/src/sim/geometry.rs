//! Intersection layout and route polylines.
//!
//! The conflict zone is centered on the origin. Traffic drives on the right:
//! northbound traffic uses `x = +lane_offset`, southbound `x = -lane_offset`,
//! westbound `y = +lane_offset`, eastbound `y = -lane_offset`.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::Vec2;

/// Side of the intersection a route enters from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Approach {
    North,
    South,
    East,
    West,
}

impl Approach {
    pub const ALL: [Approach; 4] = [Approach::North, Approach::South, Approach::East, Approach::West];

    /// Rotation taking the canonical south approach (heading +y) onto this one.
    fn rotation(self) -> f64 {
        match self {
            Approach::South => 0.0,
            Approach::East => FRAC_PI_2,
            Approach::North => PI,
            Approach::West => -FRAC_PI_2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RouteGoal {
    Straight,
    LeftTurn,
    RightTurn,
}

/// Axis-aligned rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub min: Vec2,
    pub max: Vec2,
}

impl Rect {
    pub fn contains(&self, p: Vec2) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }

    pub fn center(&self) -> Vec2 {
        (self.min + self.max) * 0.5
    }

    pub fn half_extent(&self) -> Vec2 {
        (self.max - self.min) * 0.5
    }
}

/// Piecewise-linear path parameterized by arc length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Route {
    pub points: Vec<Vec2>,
    cumulative: Vec<f64>,
    /// Arc length at which the route first enters the conflict zone.
    pub zone_entry_s: f64,
    /// Arc length at which the route finally leaves the conflict zone.
    pub zone_exit_s: f64,
}

/// Closest-point query result against a route.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    pub s: f64,
    pub distance: f64,
}

impl Route {
    pub fn new(points: Vec<Vec2>, zone: &Rect) -> Self {
        assert!(points.len() >= 2, "route needs at least two points");
        let mut cumulative = Vec::with_capacity(points.len());
        let mut acc = 0.0;
        cumulative.push(0.0);
        for w in points.windows(2) {
            acc += (w[1] - w[0]).norm();
            cumulative.push(acc);
        }
        let mut entry = f64::INFINITY;
        let mut exit = f64::NEG_INFINITY;
        for (i, w) in points.windows(2).enumerate() {
            if let Some((t0, t1)) = clip_segment(w[0], w[1], zone) {
                let len = cumulative[i + 1] - cumulative[i];
                entry = entry.min(cumulative[i] + t0 * len);
                exit = exit.max(cumulative[i] + t1 * len);
            }
        }
        Self {
            points,
            cumulative,
            zone_entry_s: entry,
            zone_exit_s: exit,
        }
    }

    pub fn length(&self) -> f64 {
        *self.cumulative.last().unwrap()
    }

    fn segment_at(&self, s: f64) -> usize {
        let n = self.points.len() - 1;
        match self
            .cumulative
            .binary_search_by(|c| c.partial_cmp(&s).unwrap_or(std::cmp::Ordering::Less))
        {
            Ok(i) => i.min(n - 1),
            Err(i) => i.saturating_sub(1).min(n - 1),
        }
    }

    /// Point at arc length `s`; extrapolates linearly past either end.
    pub fn point_at(&self, s: f64) -> Vec2 {
        let i = self.segment_at(s);
        let a = self.points[i];
        let b = self.points[i + 1];
        let len = self.cumulative[i + 1] - self.cumulative[i];
        a + (b - a) * ((s - self.cumulative[i]) / len)
    }

    /// Unit tangent at arc length `s`.
    pub fn tangent_at(&self, s: f64) -> Vec2 {
        let i = self.segment_at(s);
        (self.points[i + 1] - self.points[i]).normalize()
    }

    pub fn heading_at(&self, s: f64) -> f64 {
        let t = self.tangent_at(s);
        t.y.atan2(t.x)
    }

    /// Closest point on the route restricted to arc lengths in `[s_lo, s_hi]`.
    pub fn project_within(&self, p: Vec2, s_lo: f64, s_hi: f64) -> Option<Projection> {
        let mut best: Option<Projection> = None;
        for (i, w) in self.points.windows(2).enumerate() {
            let c0 = self.cumulative[i];
            let c1 = self.cumulative[i + 1];
            if c1 < s_lo || c0 > s_hi {
                continue;
            }
            let len = c1 - c0;
            let lo = ((s_lo - c0) / len).clamp(0.0, 1.0);
            let hi = ((s_hi - c0) / len).clamp(0.0, 1.0);
            let d = w[1] - w[0];
            let t = ((p - w[0]).dot(&d) / (len * len)).clamp(lo, hi);
            let q = w[0] + d * t;
            let dist = (p - q).norm();
            if best.is_none_or(|b| dist < b.distance) {
                best = Some(Projection {
                    s: c0 + t * len,
                    distance: dist,
                });
            }
        }
        best
    }
}

/// Liang-Barsky clip of segment `a -> b` against `r`, as parameters in [0, 1].
fn clip_segment(a: Vec2, b: Vec2, r: &Rect) -> Option<(f64, f64)> {
    let d = b - a;
    let mut t0 = 0.0_f64;
    let mut t1 = 1.0_f64;
    for (p, q) in [
        (-d.x, a.x - r.min.x),
        (d.x, r.max.x - a.x),
        (-d.y, a.y - r.min.y),
        (d.y, r.max.y - a.y),
    ] {
        if p == 0.0 {
            if q < 0.0 {
                return None;
            }
        } else {
            let t = q / p;
            if p < 0.0 {
                t0 = t0.max(t);
            } else {
                t1 = t1.min(t);
            }
        }
    }
    (t0 <= t1).then_some((t0, t1))
}

/// Four-way intersection geometry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntersectionGeometry {
    pub conflict_zone: Rect,
    /// Inbound straight-through centerlines, indexed like [`Approach::ALL`].
    pub approach_lanes: [Route; 4],
    pub speed_limit: f64,
    pub lane_offset: f64,
    /// Distance from the intersection center to the start of every route.
    pub extent: f64,
}

const ARC_SEGMENTS: usize = 16;

impl IntersectionGeometry {
    pub const DEFAULT_HALF_SIZE: f64 = 10.0;
    pub const DEFAULT_LANE_OFFSET: f64 = 3.5;
    pub const DEFAULT_EXTENT: f64 = 400.0;
    pub const DEFAULT_SPEED_LIMIT: f64 = 10.0;

    pub fn new(half_size: f64, lane_offset: f64, speed_limit: f64) -> Self {
        let zone = Rect {
            min: Vec2::new(-half_size, -half_size),
            max: Vec2::new(half_size, half_size),
        };
        let extent = Self::DEFAULT_EXTENT;
        let lanes = Approach::ALL.map(|a| {
            Route::new(
                canonical_route(RouteGoal::Straight, half_size, lane_offset, extent)
                    .into_iter()
                    .map(|p| rotate(p, a.rotation()))
                    .collect(),
                &zone,
            )
        });
        Self {
            conflict_zone: zone,
            approach_lanes: lanes,
            speed_limit,
            lane_offset,
            extent,
        }
    }

    pub fn standard() -> Self {
        Self::new(
            Self::DEFAULT_HALF_SIZE,
            Self::DEFAULT_LANE_OFFSET,
            Self::DEFAULT_SPEED_LIMIT,
        )
    }

    /// Route entering from `approach` and leaving according to `goal`.
    pub fn route(&self, approach: Approach, goal: RouteGoal) -> Route {
        let half = self.conflict_zone.half_extent().x;
        Route::new(
            canonical_route(goal, half, self.lane_offset, self.extent)
                .into_iter()
                .map(|p| rotate(p, approach.rotation()))
                .collect(),
            &self.conflict_zone,
        )
    }

    pub fn lane(&self, approach: Approach) -> &Route {
        let idx = Approach::ALL.iter().position(|a| *a == approach).unwrap();
        &self.approach_lanes[idx]
    }
}

fn rotate(p: Vec2, theta: f64) -> Vec2 {
    let (s, c) = theta.sin_cos();
    Vec2::new(c * p.x - s * p.y, s * p.x + c * p.y)
}

/// Route polyline for a vehicle entering from the south (heading +y).
fn canonical_route(goal: RouteGoal, half: f64, lane: f64, extent: f64) -> Vec<Vec2> {
    let start = Vec2::new(lane, -extent);
    let entry = Vec2::new(lane, -half);
    match goal {
        RouteGoal::Straight => vec![start, Vec2::new(lane, extent)],
        RouteGoal::RightTurn => {
            let center = Vec2::new(half, -half);
            let r = half - lane;
            let mut pts = vec![start, entry];
            for k in 1..=ARC_SEGMENTS {
                let ang = PI - FRAC_PI_2 * k as f64 / ARC_SEGMENTS as f64;
                pts.push(center + Vec2::new(r * ang.cos(), r * ang.sin()));
            }
            pts.push(Vec2::new(extent, -lane));
            pts
        }
        RouteGoal::LeftTurn => {
            let center = Vec2::new(-half, -half);
            let r = half + lane;
            let mut pts = vec![start, entry];
            for k in 1..=ARC_SEGMENTS {
                let ang = FRAC_PI_2 * k as f64 / ARC_SEGMENTS as f64;
                pts.push(center + Vec2::new(r * ang.cos(), r * ang.sin()));
            }
            pts.push(Vec2::new(-extent, lane));
            pts
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn all_lanes_cross_the_zone() {
        let g = IntersectionGeometry::standard();
        for lane in &g.approach_lanes {
            assert!(lane.zone_entry_s.is_finite());
            assert_relative_eq!(lane.zone_entry_s, 390.0, epsilon = 1e-9);
            assert_relative_eq!(lane.zone_exit_s, 410.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn lanes_follow_right_hand_traffic() {
        let g = IntersectionGeometry::standard();
        let south = g.lane(Approach::South);
        assert_relative_eq!(south.point_at(400.0).x, 3.5, epsilon = 1e-9);
        assert_relative_eq!(south.heading_at(0.0), FRAC_PI_2, epsilon = 1e-9);
        let east = g.lane(Approach::East);
        let p = east.point_at(400.0);
        assert_relative_eq!(p.y, 3.5, epsilon = 1e-9);
        assert!(east.tangent_at(0.0).x < -0.99);
        let west = g.lane(Approach::West);
        assert_relative_eq!(west.point_at(400.0).y, -3.5, epsilon = 1e-9);
        let north = g.lane(Approach::North);
        assert_relative_eq!(north.point_at(400.0).x, -3.5, epsilon = 1e-9);
    }

    #[test]
    fn turns_end_in_the_right_lanes() {
        let g = IntersectionGeometry::standard();
        let right = g.route(Approach::South, RouteGoal::RightTurn);
        let end = right.point_at(right.length());
        assert_relative_eq!(end.y, -3.5, epsilon = 1e-9);
        assert!(end.x > 100.0);
        let left = g.route(Approach::South, RouteGoal::LeftTurn);
        let end = left.point_at(left.length());
        assert_relative_eq!(end.y, 3.5, epsilon = 1e-9);
        assert!(end.x < -100.0);
        assert!(left.zone_exit_s > left.zone_entry_s);
    }

    #[test]
    fn projection_and_extrapolation() {
        let g = IntersectionGeometry::standard();
        let r = g.lane(Approach::South);
        let p = r.project_within(Vec2::new(0.0, 0.0), 0.0, r.length()).unwrap();
        assert_relative_eq!(p.s, 400.0, epsilon = 1e-9);
        assert_relative_eq!(p.distance, 3.5, epsilon = 1e-9);
        assert_relative_eq!(r.point_at(-5.0).y, -405.0, epsilon = 1e-9);
    }
}
