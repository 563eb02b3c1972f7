//! Non-reactive scripted background agents.
//!
//! Each agent follows its route with a closed-form longitudinal profile, so
//! its state at any tick is a pure function of time.

use serde::{Deserialize, Serialize};

use crate::state::{AgentKind, AgentState, Route};
use crate::Vec2;

/// Stop at a line, dwell, then accelerate back to cruise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StopScript {
    /// Arc length (from spawn) at which the agent comes to rest.
    pub stop_distance: f64,
    pub decel: f64,
    pub dwell_s: f64,
    pub accel: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeedProfile {
    pub cruise: f64,
    pub stop: Option<StopScript>,
}

/// Distance, speed and acceleration after `tau` seconds on the profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileSample {
    pub distance: f64,
    pub speed: f64,
    pub accel: f64,
}

impl SpeedProfile {
    pub fn cruise(speed: f64) -> Self {
        Self {
            cruise: speed,
            stop: None,
        }
    }

    pub fn sample(&self, tau: f64) -> ProfileSample {
        let v = self.cruise;
        let Some(stop) = self.stop else {
            return ProfileSample {
                distance: v * tau,
                speed: v,
                accel: 0.0,
            };
        };
        let brake_len = v * v / (2.0 * stop.decel);
        let t_brake = ((stop.stop_distance - brake_len) / v).max(0.0);
        let brake_start = v * t_brake;
        let t_stop = t_brake + v / stop.decel;
        let t_go = t_stop + stop.dwell_s;
        let t_cruise = t_go + v / stop.accel;
        let rest = brake_start + brake_len;
        if tau <= t_brake {
            ProfileSample {
                distance: v * tau,
                speed: v,
                accel: 0.0,
            }
        } else if tau <= t_stop {
            let u = tau - t_brake;
            ProfileSample {
                distance: brake_start + v * u - 0.5 * stop.decel * u * u,
                speed: v - stop.decel * u,
                accel: -stop.decel,
            }
        } else if tau <= t_go {
            ProfileSample {
                distance: rest,
                speed: 0.0,
                accel: 0.0,
            }
        } else if tau <= t_cruise {
            let u = tau - t_go;
            ProfileSample {
                distance: rest + 0.5 * stop.accel * u * u,
                speed: stop.accel * u,
                accel: stop.accel,
            }
        } else {
            let u = t_cruise - t_go;
            ProfileSample {
                distance: rest + 0.5 * stop.accel * u * u + v * (tau - t_cruise),
                speed: v,
                accel: 0.0,
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScriptedAgent {
    pub id: u32,
    pub kind: AgentKind,
    pub route: Route,
    /// Time at which the agent is at `spawn_s`. May be negative, in which
    /// case the agent is already under way when the run starts.
    pub spawn_time_s: f64,
    pub spawn_s: f64,
    pub profile: SpeedProfile,
    pub half_extent: Vec2,
}

impl ScriptedAgent {
    /// State at simulated time `t`, or `None` before spawn / after the
    /// route ends.
    pub fn state_at(&self, t: f64) -> Option<AgentState> {
        let tau = t - self.spawn_time_s;
        if tau < 0.0 {
            return None;
        }
        let sample = self.profile.sample(tau);
        let s = self.spawn_s + sample.distance;
        if s > self.route.length() {
            return None;
        }
        let tangent = self.route.tangent_at(s);
        Some(AgentState {
            id: self.id,
            kind: self.kind,
            position: self.route.point_at(s),
            velocity: tangent * sample.speed,
            acceleration: tangent * sample.accel,
            heading: tangent.y.atan2(tangent.x),
            half_extent: self.half_extent,
        })
    }

    /// Time at which the agent's center reaches arc length `s` when
    /// cruising (ignores any stop script).
    pub fn cruise_arrival(&self, s: f64) -> f64 {
        self.spawn_time_s + (s - self.spawn_s) / self.profile.cruise
    }
}
