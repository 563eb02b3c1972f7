//! Multi-role verification & validation orchestration for AI-enabled
//! cyber-physical systems, instantiated on a deterministic four-way
//! unsignalized-intersection simulator.
//!
//! The controller in [`orchestrator`] drives a fixed per-tick role sequence
//! (generator, safety monitor, security assessor, fault injector, performance
//! oracle, recovery planner) over the world simulated by [`sim`]. Per-tick
//! records and run/campaign aggregates live in [`metrics`]; scenario files,
//! seeding and campaigns live in [`scenario`].

pub mod metrics;
pub mod orchestrator;
pub mod planner;
pub mod rng;
pub mod roles;
pub mod scenario;
pub mod sim;
pub mod state;

/// Planar vector in meters (positions) or meters per second (velocities).
pub type Vec2 = nalgebra::Vector2<f64>;

/// Wraps an angle into `[-pi, pi]`.
pub fn normalize_angle(theta: f64) -> f64 {
    use std::f64::consts::PI;
    let mut a = theta % (2.0 * PI);
    if a > PI {
        a -= 2.0 * PI;
    } else if a < -PI {
        a += 2.0 * PI;
    }
    a
}

pub use orchestrator::{run_scenario, RunOptions, RunResult, TerminationStatus};
pub use scenario::{parse_scenario_file, ScenarioSpec};
pub use state::{Maneuver, Verdict, VerdictLevel};
