//! Comfort and clearance checks over the run history.

use serde::{Deserialize, Serialize};

use crate::metrics::IterationRecord;
use crate::sim::dynamics::ego_past_zone;
use crate::state::GroundTruthWorld;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerfThresholds {
    pub max_clearance: f64,
    pub max_abs_accel: f64,
    pub max_abs_jerk: f64,
}

impl Default for PerfThresholds {
    fn default() -> Self {
        Self {
            max_clearance: 30.0,
            max_abs_accel: 3.0,
            max_abs_jerk: 5.0,
        }
    }
}

impl PerfThresholds {
    pub fn validate(&self) -> Result<(), String> {
        for (name, v) in [
            ("max_clearance_s", self.max_clearance),
            ("max_abs_accel_mps2", self.max_abs_accel),
            ("max_abs_jerk_mps3", self.max_abs_jerk),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(format!("{name} must be > 0, got {v}"));
            }
        }
        Ok(())
    }
}

/// Performance flags for one tick. A violation is still flagged when it
/// occurred under recovery braking; the matching `*_exempt` bit says so.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PerfFlags {
    pub accel_violation: bool,
    pub jerk_violation: bool,
    pub clearance_exceeded: bool,
    pub accel_exempt: bool,
    pub jerk_exempt: bool,
}

impl PerfFlags {
    pub fn any_fail(&self) -> bool {
        self.accel_violation || self.jerk_violation || self.clearance_exceeded
    }
}

/// Commanded-acceleration history as `(accel, under_recovery)` pairs.
pub fn performance_flags(
    accel_history: &[(f64, bool)],
    dt: f64,
    sim_time: f64,
    cleared: bool,
    thresholds: &PerfThresholds,
) -> PerfFlags {
    let mut f = PerfFlags::default();
    if let Some(&(a, rec)) = accel_history.last() {
        if a.abs() > thresholds.max_abs_accel {
            f.accel_violation = true;
            f.accel_exempt = rec;
        }
    }
    if let [.., (a0, r0), (a1, r1)] = accel_history {
        if ((a1 - a0) / dt).abs() > thresholds.max_abs_jerk {
            f.jerk_violation = true;
            f.jerk_exempt = *r0 || *r1;
        }
    }
    f.clearance_exceeded = sim_time > thresholds.max_clearance && !cleared;
    f
}

/// Flags from the finalized history so far and the current world.
pub fn performance_check(
    history: &[IterationRecord],
    world: &GroundTruthWorld,
    thresholds: &PerfThresholds,
) -> PerfFlags {
    let tail = &history[history.len().saturating_sub(2)..];
    let accels: Vec<(f64, bool)> = tail.iter().map(|r| (r.ego_accel, r.recovery_active)).collect();
    performance_flags(
        &accels,
        world.clock.dt,
        world.clock.sim_time(),
        ego_past_zone(world),
        thresholds,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn below_threshold() {
        let h = [(0.0, false), (1.0, false), (2.9, false)];
        let f = performance_flags(&h, 0.1, 1.0, false, &PerfThresholds::default());
        assert!(!f.accel_violation);
    }

    #[test]
    fn jerk_by_finite_difference() {
        let h = [(0.0, false), (2.0, false)];
        let f = performance_flags(&h, 0.1, 1.0, false, &PerfThresholds::default());
        assert!(f.jerk_violation);
        assert!(!f.jerk_exempt);
    }

    #[test]
    fn recovery_braking_is_exempt() {
        let h = [(0.0, false), (-8.0, true)];
        let f = performance_flags(&h, 0.1, 1.0, false, &PerfThresholds::default());
        assert!(f.accel_violation && f.accel_exempt);
        assert!(f.jerk_violation && f.jerk_exempt);
    }

    #[test]
    fn clearance_exceeded_after_limit() {
        let f = performance_flags(&[], 0.1, 30.1, false, &PerfThresholds::default());
        assert!(f.clearance_exceeded);
        let f = performance_flags(&[], 0.1, 30.1, true, &PerfThresholds::default());
        assert!(!f.clearance_exceeded);
    }
}
