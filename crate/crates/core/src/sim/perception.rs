//! Object-list perception with fault application.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::SimParams;
use crate::state::{
    EgoOdometry, FaultDirective, FaultKind, GroundTruthWorld, PerceivedObject, PerceivedState,
    Provenance,
};
use crate::Vec2;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PerceptionWarning {
    #[error("spoof target {target_id} not perceived at tick {tick}; directive skipped")]
    SpoofTargetMissing { target_id: u32, tick: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerceptionReport {
    pub perceived: PerceivedState,
    /// Ground-truth agents within sensing range.
    pub ground_truth_in_range: usize,
    pub warnings: Vec<PerceptionWarning>,
}

/// Builds this tick's perceived state. `active_faults` must already be
/// filtered to directives that are live at the current tick. Ground truth is
/// only read.
pub fn build_perceived_state<R: Rng>(
    world: &GroundTruthWorld,
    active_faults: &[FaultDirective],
    params: &SimParams,
    stream: &mut R,
) -> PerceptionReport {
    let ego = &world.ego;
    let mut in_range: Vec<_> = world
        .agents
        .iter()
        .filter(|a| (a.position - ego.position).norm() <= params.sensing_range)
        .collect();
    in_range.sort_by_key(|a| a.id);
    let ground_truth_in_range = in_range.len();

    let mut objects: Vec<PerceivedObject> = in_range
        .into_iter()
        .map(|a| PerceivedObject {
            id: a.id,
            kind: a.kind,
            position: a.position,
            velocity: a.velocity,
            half_extent: a.half_extent,
            provenance: Provenance::Real,
        })
        .collect();

    if params.perception_noise_std > 0.0 {
        let normal = Normal::new(0.0, params.perception_noise_std)
            .expect("noise std validated positive and finite");
        for o in &mut objects {
            o.position += Vec2::new(normal.sample(stream), normal.sample(stream));
        }
    }

    let mut warnings = Vec::new();
    for directive in active_faults {
        match &directive.fault {
            FaultKind::TrajectorySpoof {
                target_id,
                velocity_scale,
                heading_bias,
            } => match objects.iter_mut().find(|o| o.id == *target_id) {
                Some(o) => {
                    let (s, c) = heading_bias.sin_cos();
                    let v = o.velocity * *velocity_scale;
                    o.velocity = Vec2::new(c * v.x - s * v.y, s * v.x + c * v.y);
                    o.provenance = Provenance::Spoofed;
                }
                None => warnings.push(PerceptionWarning::SpoofTargetMissing {
                    target_id: *target_id,
                    tick: world.clock.tick,
                }),
            },
            FaultKind::GhostObstacle { spawn } => {
                let mut ghost = spawn.clone();
                ghost.provenance = Provenance::Ghost;
                objects.push(ghost);
            }
        }
    }

    PerceptionReport {
        perceived: PerceivedState {
            clock: world.clock,
            ego: EgoOdometry {
                position: ego.position,
                velocity: ego.velocity,
                heading: ego.heading,
                speed: world.ego_speed,
                route_progress_m: world.ego_progress_m,
                half_extent: ego.half_extent,
            },
            objects,
            goal: world.ego_goal,
        },
        ground_truth_in_range,
        warnings,
    }
}
