//! Built-in four-way unsignalized intersection micro-simulator.

pub mod collision;
pub mod conflict;
pub mod dynamics;
pub mod geometry;
pub mod perception;
pub mod spawn;
pub mod traffic;

use serde::{Deserialize, Serialize};

pub use collision::{detect_collision, sat_overlap, Obb};
pub use dynamics::{command_for_world, maneuver_to_command, step_dynamics, EgoCommand};
pub use perception::{build_perceived_state, PerceptionReport, PerceptionWarning};
pub use spawn::{spawn_scenario, SpawnError, EGO_ID};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimParams {
    /// Seconds per tick.
    pub dt: f64,
    pub sensing_range: f64,
    /// Magnitude of emergency braking, m/s^2.
    pub a_brake_max: f64,
    pub a_accel_max: f64,
    /// Std of Gaussian position noise on perceived objects, meters.
    pub perception_noise_std: f64,
    pub speed_limit: f64,
}

impl Default for SimParams {
    fn default() -> Self {
        Self {
            dt: 0.1,
            sensing_range: 60.0,
            a_brake_max: 8.0,
            a_accel_max: 3.0,
            perception_noise_std: 0.0,
            speed_limit: 10.0,
        }
    }
}

impl SimParams {
    pub fn validate(&self) -> Result<(), String> {
        let positive = [
            ("dt_s", self.dt),
            ("sensing_range_m", self.sensing_range),
            ("a_brake_max_mps2", self.a_brake_max),
            ("a_accel_max_mps2", self.a_accel_max),
            ("speed_limit_mps", self.speed_limit),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(format!("{name} must be finite and > 0, got {v}"));
            }
        }
        if !(self.perception_noise_std.is_finite() && self.perception_noise_std >= 0.0) {
            return Err(format!(
                "perception_noise_std_m must be finite and >= 0, got {}",
                self.perception_noise_std
            ));
        }
        Ok(())
    }
}
