//! Brute-force oracles and random generators shared by the integration
//! tests.
#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use vvloop::roles::safety::{closing_speed_at, ego_prediction, separation_at};
use vvloop::roles::SafetyParams;
use vvloop::sim::spawn::{EGO_APPROACH, PEDESTRIAN_HALF_EXTENT, VEHICLE_HALF_EXTENT};
use vvloop::sim::{Obb, SimParams};
use vvloop::state::{
    AgentKind, EgoOdometry, IntersectionGeometry, PerceivedObject, PerceivedState, Provenance,
    RouteGoal, SimClock,
};
use vvloop::{Maneuver, Vec2, Verdict};

pub const ORACLE_DT: f64 = 1e-3;

/// Per-object minimum over a uniform 1 ms grid; binding object by
/// `sep - margin`, margin from the closing speed at the grid minimum.
pub fn oracle_verdict(
    perceived: &PerceivedState,
    proposed: Maneuver,
    params: &SafetyParams,
    geometry: &IntersectionGeometry,
    sim: &SimParams,
) -> Verdict {
    if perceived.objects.is_empty() {
        return Verdict::vacuous();
    }
    let ego = ego_prediction(perceived, proposed, geometry, sim);
    let n = (params.horizon / ORACLE_DT).round() as usize;
    let mut best: Option<(f64, Verdict)> = None;
    for obj in &perceived.objects {
        let mut m = (f64::INFINITY, 0.0);
        for k in 0..=n {
            let t = (k as f64 * ORACLE_DT).min(params.horizon);
            let s = separation_at(&ego, obj, t);
            if s < m.0 {
                m = (s, t);
            }
        }
        let margin = params.margin_speed_gain * closing_speed_at(&ego, obj, m.1);
        let score = m.0 - margin;
        if best.as_ref().is_none_or(|(b, _)| score < *b) {
            best = Some((
                score,
                Verdict {
                    level: params.classify(m.0, margin),
                    min_predicted_separation: m.0,
                    time_of_min: m.1,
                    offending_object: Some(obj.id),
                    margin_m: margin,
                },
            ));
        }
    }
    best.expect("non-empty").1
}

pub fn random_object(rng: &mut ChaCha8Rng, id: u32, near: Vec2) -> PerceivedObject {
    let pedestrian = rng.random_bool(0.2);
    let (kind, he, vmax) = if pedestrian {
        (AgentKind::Pedestrian, PEDESTRIAN_HALF_EXTENT, 2.0)
    } else {
        (AgentKind::Vehicle, VEHICLE_HALF_EXTENT, 12.0)
    };
    let offset = Vec2::new(rng.random_range(-25.0..25.0), rng.random_range(-25.0..25.0));
    let heading: f64 = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
    let speed = rng.random_range(0.0..vmax);
    PerceivedObject {
        id,
        kind,
        position: near + offset,
        velocity: Vec2::new(heading.cos(), heading.sin()) * speed,
        half_extent: Vec2::new(he.0, he.1),
        provenance: Provenance::Real,
    }
}

/// Ego somewhere on its approach/zone, 1-4 objects scattered around it.
pub fn random_config(rng: &mut ChaCha8Rng) -> (PerceivedState, Maneuver) {
    let g = IntersectionGeometry::standard();
    let route = g.route(EGO_APPROACH, RouteGoal::Straight);
    let progress = route.zone_entry_s + rng.random_range(-30.0..15.0);
    let speed = rng.random_range(0.0..10.0);
    let ego = EgoOdometry {
        position: route.point_at(progress),
        velocity: route.tangent_at(progress) * speed,
        heading: route.heading_at(progress),
        speed,
        route_progress_m: progress,
        half_extent: Vec2::new(VEHICLE_HALF_EXTENT.0, VEHICLE_HALF_EXTENT.1),
    };
    let n = rng.random_range(1..=4);
    let objects = (0..n)
        .map(|i| random_object(rng, i + 1, ego.position))
        .collect();
    let m = Maneuver::GENERATOR_VOCABULARY[rng.random_range(0..5)];
    (
        PerceivedState {
            clock: SimClock::default(),
            ego,
            objects,
            goal: RouteGoal::Straight,
        },
        m,
    )
}

/// Overlap by sampling both boundaries densely (corners included) and the
/// centers: two rectangles intersect iff a boundary point of one lies in
/// the other or one contains the other.
pub fn grid_overlap(a: &Obb, b: &Obb, per_edge: usize) -> bool {
    let sample = |r: &Obb, other: &Obb| {
        let c = r.corners();
        (0..4).any(|e| {
            let (p, q) = (c[e], c[(e + 1) % 4]);
            (0..=per_edge).any(|k| other.contains(p + (q - p) * (k as f64 / per_edge as f64)))
        })
    };
    sample(a, b) || sample(b, a) || a.contains(b.center) || b.contains(a.center)
}

pub fn random_obb(rng: &mut ChaCha8Rng) -> Obb {
    Obb {
        center: Vec2::new(rng.random_range(-4.0..4.0), rng.random_range(-4.0..4.0)),
        half_extent: Vec2::new(rng.random_range(0.3..2.5), rng.random_range(0.3..1.2)),
        heading: rng.random_range(-std::f64::consts::PI..std::f64::consts::PI),
    }
}
