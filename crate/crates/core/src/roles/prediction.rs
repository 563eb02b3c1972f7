//! Open-loop motion prediction.

use serde::{Deserialize, Serialize};

use crate::Vec2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MotionModel {
    ConstantVelocity,
    /// Constant acceleration; motion freezes once the velocity would
    /// reverse (braking never drives an object backwards).
    ConstantAccel,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Kinematics {
    pub position: Vec2,
    pub velocity: Vec2,
    pub acceleration: Vec2,
}

impl Kinematics {
    pub fn position_at(&self, model: MotionModel, t: f64) -> Vec2 {
        match model {
            MotionModel::ConstantVelocity => self.position + self.velocity * t,
            MotionModel::ConstantAccel => {
                let va = self.velocity.dot(&self.acceleration);
                let t = if va < 0.0 {
                    t.min(-self.velocity.norm_squared() / va)
                } else {
                    t
                };
                self.position + self.velocity * t + self.acceleration * (0.5 * t * t)
            }
        }
    }
}

/// Sample times `0, dt, 2dt, ..., horizon` (the last sample is exactly
/// `horizon`).
pub fn sample_times(horizon: f64, sample_dt: f64) -> impl Iterator<Item = f64> {
    let n = (horizon / sample_dt - 1e-9).ceil().max(0.0) as usize;
    (0..=n).map(move |k| (k as f64 * sample_dt).min(horizon))
}

pub fn predict_trajectory(
    obj: &Kinematics,
    model: MotionModel,
    horizon: f64,
    sample_dt: f64,
) -> Vec<(f64, Vec2)> {
    sample_times(horizon, sample_dt)
        .map(|t| (t, obj.position_at(model, t)))
        .collect()
}
