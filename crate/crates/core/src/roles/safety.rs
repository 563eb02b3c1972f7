//! Predicted-trajectory separation monitor.

use serde::{Deserialize, Serialize};

use crate::sim::conflict::Obstacle;
use crate::sim::dynamics::{maneuver_to_command, predicted_progress, EgoCommand, EgoLongitudinal};
use crate::sim::spawn::EGO_APPROACH;
use crate::sim::SimParams;
use crate::state::{
    IntersectionGeometry, Maneuver, PerceivedObject, PerceivedState, Route, Verdict, VerdictLevel,
};
use crate::Vec2;

use super::prediction::sample_times;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SafetyParams {
    pub horizon: f64,
    pub sample_dt: f64,
    pub d_unsafe: f64,
    pub d_warn: f64,
    /// Seconds; the thresholds grow by `gain * closing_speed`.
    pub margin_speed_gain: f64,
    /// Golden-section refinement around sampled local minima.
    pub refine: bool,
}

impl Default for SafetyParams {
    fn default() -> Self {
        Self {
            horizon: 3.0,
            sample_dt: 0.05,
            d_unsafe: 2.0,
            d_warn: 4.0,
            margin_speed_gain: 0.25,
            refine: true,
        }
    }
}

impl SafetyParams {
    pub fn validate(&self, dt: f64) -> Result<(), String> {
        if !(self.d_unsafe > 0.0 && self.d_unsafe < self.d_warn) {
            return Err(format!(
                "require 0 < d_unsafe_m < d_warn_m, got d_unsafe_m={} d_warn_m={}",
                self.d_unsafe, self.d_warn
            ));
        }
        if !(self.sample_dt > 0.0 && self.sample_dt <= dt) {
            return Err(format!(
                "require 0 < sample_dt_s <= dt_s ({dt}), got {}",
                self.sample_dt
            ));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(format!("horizon_s must be > 0, got {}", self.horizon));
        }
        if !(self.margin_speed_gain >= 0.0 && self.margin_speed_gain.is_finite()) {
            return Err(format!(
                "margin_speed_gain_s must be >= 0, got {}",
                self.margin_speed_gain
            ));
        }
        Ok(())
    }

    pub fn classify(&self, separation: f64, margin: f64) -> VerdictLevel {
        if separation < self.d_unsafe + margin {
            VerdictLevel::Unsafe
        } else if separation < self.d_warn + margin {
            VerdictLevel::Warning
        } else {
            VerdictLevel::Safe
        }
    }
}

/// Ego motion under a held longitudinal command along its route.
#[derive(Debug, Clone)]
pub struct EgoPrediction {
    pub route: Route,
    pub s0: f64,
    pub v0: f64,
    pub cmd: EgoCommand,
    pub radius: f64,
}

impl EgoPrediction {
    pub fn position_at(&self, t: f64) -> Vec2 {
        self.route.point_at(self.s0 + predicted_progress(self.v0, &self.cmd, t).0)
    }

    pub fn velocity_at(&self, t: f64) -> Vec2 {
        let (d, v) = predicted_progress(self.v0, &self.cmd, t);
        self.route.tangent_at(self.s0 + d) * v
    }
}

pub fn obstacles_of(objects: &[PerceivedObject]) -> Vec<Obstacle> {
    objects
        .iter()
        .map(|o| Obstacle {
            id: o.id,
            position: o.position,
            velocity: o.velocity,
            radius: o.footprint_radius(),
        })
        .collect()
}

/// Ego prediction for `proposed` using the same maneuver semantics as
/// actuation, fed with perceived objects.
pub fn ego_prediction(
    perceived: &PerceivedState,
    proposed: Maneuver,
    geometry: &IntersectionGeometry,
    sim: &SimParams,
) -> EgoPrediction {
    let route = geometry.route(EGO_APPROACH, perceived.goal);
    let e = &perceived.ego;
    let ego = EgoLongitudinal {
        route: &route,
        progress: e.route_progress_m,
        speed: e.speed,
        half_length: e.half_extent.x,
        half_width: e.half_extent.y,
    };
    let cmd = maneuver_to_command(proposed, &ego, &obstacles_of(&perceived.objects), geometry, sim);
    EgoPrediction {
        s0: e.route_progress_m,
        v0: e.speed,
        cmd,
        radius: e.half_extent.x.max(e.half_extent.y),
        route,
    }
}

/// Disc-to-disc separation at time `t`, objects at constant velocity.
pub fn separation_at(ego: &EgoPrediction, obj: &PerceivedObject, t: f64) -> f64 {
    let p = obj.position + obj.velocity * t;
    (ego.position_at(t) - p).norm() - (ego.radius + obj.footprint_radius())
}

/// Rate at which the center distance shrinks at `t` (zero if opening).
pub fn closing_speed_at(ego: &EgoPrediction, obj: &PerceivedObject, t: f64) -> f64 {
    let dp = ego.position_at(t) - (obj.position + obj.velocity * t);
    let dv = ego.velocity_at(t) - obj.velocity;
    let n = dp.norm();
    if n == 0.0 {
        return dv.norm();
    }
    (-dp.dot(&dv) / n).max(0.0)
}

/// Minimum separation against one object and the time it occurs.
pub fn min_separation(
    ego: &EgoPrediction,
    ego_samples: &[(f64, Vec2)],
    obj: &PerceivedObject,
    params: &SafetyParams,
) -> (f64, f64) {
    let r = ego.radius + obj.footprint_radius();
    let seps: Vec<f64> = ego_samples
        .iter()
        .map(|(t, pe)| (pe - (obj.position + obj.velocity * *t)).norm() - r)
        .collect();
    let mut best = (seps[0], ego_samples[0].0);
    for (k, s) in seps.iter().enumerate() {
        if *s < best.0 {
            best = (*s, ego_samples[k].0);
        }
    }
    if params.refine && seps.len() > 1 {
        let last = seps.len() - 1;
        for k in 0..=last {
            let left_ok = k == 0 || seps[k] <= seps[k - 1];
            let right_ok = k == last || seps[k] <= seps[k + 1];
            if !(left_ok && right_ok) {
                continue;
            }
            let lo = ego_samples[k.saturating_sub(1)].0;
            let hi = ego_samples[(k + 1).min(last)].0;
            let (t, s) = golden_min(|t| separation_at(ego, obj, t), lo, hi);
            if s < best.0 {
                best = (s, t);
            }
        }
    }
    best
}

fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..48 {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    if fc <= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Verdict for the proposed maneuver over this tick's perceived state.
///
/// Each object's threshold is shifted by `margin_speed_gain` times the
/// closing speed at its time of minimum separation; the binding object is
/// the one with the smallest `separation - margin`.
pub fn safety_check(
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
    let ego_samples: Vec<(f64, Vec2)> = sample_times(params.horizon, params.sample_dt)
        .map(|t| (t, ego.position_at(t)))
        .collect();
    let mut verdict = Verdict::vacuous();
    let mut best_score = f64::INFINITY;
    for obj in &perceived.objects {
        let (sep, t) = min_separation(&ego, &ego_samples, obj, params);
        let margin = params.margin_speed_gain * closing_speed_at(&ego, obj, t);
        let score = sep - margin;
        if score < best_score {
            best_score = score;
            verdict = Verdict {
                level: params.classify(sep, margin),
                min_predicted_separation: sep,
                time_of_min: t,
                offending_object: Some(obj.id),
                margin_m: margin,
            };
        }
    }
    verdict
}
