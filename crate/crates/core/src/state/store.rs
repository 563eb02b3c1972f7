use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{FaultDirective, GroundTruthWorld, Maneuver, PerceivedObject, Verdict};
use crate::metrics::{ActiveFault, IterationRecord};
use crate::orchestrator::TerminationStatus;
use crate::roles::PerfFlags;
use crate::Vec2;

/// Role id under which the controller commits the final maneuver.
pub const CONTROLLER_ID: &str = "controller";

/// Tagged union of everything a role can commit in a tick.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum RoleOutput {
    Proposal { maneuver: Maneuver, rationale: String },
    Verdict(Verdict),
    Directive { directive: Option<FaultDirective> },
    Activated(FaultDirective),
    Perf(PerfFlags),
    Recovery { maneuver: Maneuver },
    Final { maneuver: Maneuver, recovery_active: bool },
    Text { text: String },
}

#[derive(Debug, Error, PartialEq)]
pub enum StoreError {
    #[error("role `{role}` already committed in tick {tick}")]
    DuplicateCommit { role: String, tick: u64 },
    #[error("tick {tick} is missing mandatory output: {what}")]
    MissingMandatoryOutput { tick: u64, what: &'static str },
}

/// Per-tick context the controller records alongside role outputs.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TickAnnotations {
    pub ego_position: Vec2,
    pub ego_velocity: Vec2,
    pub ego_speed: f64,
    pub ego_progress_m: f64,
    pub perceived: Vec<PerceivedObject>,
    pub ground_truth_in_range: usize,
    pub active_faults: Vec<ActiveFault>,
    pub notes: Vec<String>,
    pub role_timings_ns: BTreeMap<String, u64>,
}

#[derive(Debug, Clone)]
struct Entry {
    role: String,
    output: RoleOutput,
}

/// State manager: write-once role outputs for the current tick plus the
/// finalized history of the run.
#[derive(Debug, Clone, Default)]
pub struct TickStore {
    tick: u64,
    current: Vec<Entry>,
    annotations: TickAnnotations,
    history: Vec<IterationRecord>,
}

impl TickStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn tick(&self) -> u64 {
        self.tick
    }

    /// Commits `output` for `role`. A role commits at most once per tick.
    pub fn commit(&mut self, role: &str, output: RoleOutput) -> Result<(), StoreError> {
        if self.current.iter().any(|e| e.role == role) {
            return Err(StoreError::DuplicateCommit {
                role: role.to_string(),
                tick: self.tick,
            });
        }
        self.current.push(Entry {
            role: role.to_string(),
            output,
        });
        Ok(())
    }

    /// Output committed by `role` this tick, if any.
    pub fn read(&self, role: &str) -> Option<&RoleOutput> {
        self.current.iter().find(|e| e.role == role).map(|e| &e.output)
    }

    /// Commit order of `role` within the current tick.
    pub fn sequence_index(&self, role: &str) -> Option<usize> {
        self.current.iter().position(|e| e.role == role)
    }

    /// Current-tick outputs in commit order.
    pub fn committed(&self) -> impl Iterator<Item = (&str, &RoleOutput)> {
        self.current.iter().map(|e| (e.role.as_str(), &e.output))
    }

    pub fn proposal(&self) -> Option<(Maneuver, &str)> {
        self.current.iter().find_map(|e| match &e.output {
            RoleOutput::Proposal {
                maneuver,
                rationale,
            } => Some((*maneuver, rationale.as_str())),
            _ => None,
        })
    }

    pub fn verdict(&self) -> Option<&Verdict> {
        self.current.iter().find_map(|e| match &e.output {
            RoleOutput::Verdict(v) => Some(v),
            _ => None,
        })
    }

    pub fn assessor_directive(&self) -> Option<&FaultDirective> {
        self.current.iter().find_map(|e| match &e.output {
            RoleOutput::Directive { directive } => directive.as_ref(),
            _ => None,
        })
    }

    pub fn activated(&self) -> Option<&FaultDirective> {
        self.current.iter().find_map(|e| match &e.output {
            RoleOutput::Activated(d) => Some(d),
            _ => None,
        })
    }

    pub fn perf_flags(&self) -> Option<&PerfFlags> {
        self.current.iter().find_map(|e| match &e.output {
            RoleOutput::Perf(p) => Some(p),
            _ => None,
        })
    }

    pub fn final_maneuver(&self) -> Option<(Maneuver, bool)> {
        self.current.iter().find_map(|e| match &e.output {
            RoleOutput::Final {
                maneuver,
                recovery_active,
            } => Some((*maneuver, *recovery_active)),
            _ => None,
        })
    }

    pub fn annotations(&self) -> &TickAnnotations {
        &self.annotations
    }

    pub fn annotations_mut(&mut self) -> &mut TickAnnotations {
        &mut self.annotations
    }

    pub fn history(&self) -> &[IterationRecord] {
        &self.history
    }

    pub fn into_history(self) -> Vec<IterationRecord> {
        self.history
    }

    /// Composes the tick's record, appends it to history and opens the
    /// next tick. `world` is the state after action execution.
    pub fn finalize_tick(
        &mut self,
        world: &GroundTruthWorld,
        status: TerminationStatus,
    ) -> Result<IterationRecord, StoreError> {
        let (proposed, rationale) = self.proposal().ok_or(StoreError::MissingMandatoryOutput {
            tick: self.tick,
            what: "generator proposal",
        })?;
        let rationale = rationale.to_string();
        let (final_maneuver, recovery_active) =
            self.final_maneuver()
                .ok_or(StoreError::MissingMandatoryOutput {
                    tick: self.tick,
                    what: "final maneuver",
                })?;
        let verdict = self.verdict().copied();
        let ann = std::mem::take(&mut self.annotations);
        let record = IterationRecord {
            tick: self.tick,
            sim_time_s: world.clock.dt * self.tick as f64,
            ego_position: ann.ego_position,
            ego_velocity: ann.ego_velocity,
            ego_speed: ann.ego_speed,
            ego_accel: world.ego_accel,
            ego_progress_m: ann.ego_progress_m,
            proposed_maneuver: proposed,
            rationale,
            verdict_level: verdict.map(|v| v.level),
            min_predicted_separation: verdict.map_or(f64::INFINITY, |v| v.min_predicted_separation),
            time_of_min: verdict.map_or(0.0, |v| v.time_of_min),
            offending_object: verdict.and_then(|v| v.offending_object),
            active_faults: ann.active_faults,
            injected_fault: self.activated().map(|d| d.fault.label().to_string()),
            perf: self.perf_flags().copied().unwrap_or_default(),
            final_maneuver,
            recovery_active,
            collision: world.collision.is_some(),
            perceived_objects: ann.perceived.len(),
            ground_truth_in_range: ann.ground_truth_in_range,
            notes: ann.notes,
            status,
            role_timings_ns: ann.role_timings_ns,
        };
        self.history.push(record.clone());
        self.current.clear();
        self.tick += 1;
        Ok(record)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::ScenarioSpec;
    use crate::state::VerdictLevel;

    fn world() -> GroundTruthWorld {
        crate::sim::spawn_scenario(&ScenarioSpec::default(), 1).unwrap()
    }

    fn unsafe_verdict() -> Verdict {
        Verdict {
            level: VerdictLevel::Unsafe,
            min_predicted_separation: 0.5,
            time_of_min: 1.2,
            offending_object: Some(3),
            margin_m: 0.0,
        }
    }

    #[test]
    fn write_then_read() {
        let mut s = TickStore::new();
        s.commit(
            "generator",
            RoleOutput::Proposal {
                maneuver: Maneuver::Proceed,
                rationale: String::new(),
            },
        )
        .unwrap();
        assert_eq!(s.proposal().unwrap().0, Maneuver::Proceed);
        assert!(matches!(
            s.read("generator"),
            Some(RoleOutput::Proposal {
                maneuver: Maneuver::Proceed,
                ..
            })
        ));
    }

    #[test]
    fn duplicate_commit_rejected() {
        let mut s = TickStore::new();
        let out = RoleOutput::Text { text: "a".into() };
        s.commit("generator", out.clone()).unwrap();
        assert_eq!(
            s.commit("generator", out),
            Err(StoreError::DuplicateCommit {
                role: "generator".into(),
                tick: 0
            })
        );
    }

    #[test]
    fn absent_before_commit_and_after_finalize() {
        let mut s = TickStore::new();
        assert!(s.read("safety_monitor").is_none());
        s.commit(
            "generator",
            RoleOutput::Proposal {
                maneuver: Maneuver::Proceed,
                rationale: String::new(),
            },
        )
        .unwrap();
        s.commit("safety_monitor", RoleOutput::Verdict(unsafe_verdict()))
            .unwrap();
        s.commit(
            CONTROLLER_ID,
            RoleOutput::Final {
                maneuver: Maneuver::Proceed,
                recovery_active: false,
            },
        )
        .unwrap();
        s.finalize_tick(&world(), TerminationStatus::Running).unwrap();
        // no stale values leak into the next tick
        assert!(s.read("safety_monitor").is_none());
        assert_eq!(s.history().len(), 1);
        assert_eq!(s.tick(), 1);
    }

    #[test]
    fn finalize_pass_through() {
        let mut s = TickStore::new();
        s.commit(
            "generator",
            RoleOutput::Proposal {
                maneuver: Maneuver::Proceed,
                rationale: "clear".into(),
            },
        )
        .unwrap();
        s.commit("safety_monitor", RoleOutput::Verdict(Verdict::vacuous()))
            .unwrap();
        s.commit(
            CONTROLLER_ID,
            RoleOutput::Final {
                maneuver: Maneuver::Proceed,
                recovery_active: false,
            },
        )
        .unwrap();
        let rec = s.finalize_tick(&world(), TerminationStatus::Running).unwrap();
        assert_eq!(rec.final_maneuver, Maneuver::Proceed);
        assert!(!rec.recovery_active);
        assert_eq!(rec.verdict_level, Some(VerdictLevel::Safe));
    }

    #[test]
    fn finalize_recovery_override() {
        let mut s = TickStore::new();
        s.commit(
            "generator",
            RoleOutput::Proposal {
                maneuver: Maneuver::Accelerate,
                rationale: String::new(),
            },
        )
        .unwrap();
        s.commit("safety_monitor", RoleOutput::Verdict(unsafe_verdict()))
            .unwrap();
        s.commit(
            CONTROLLER_ID,
            RoleOutput::Final {
                maneuver: Maneuver::EmergencyBrake,
                recovery_active: true,
            },
        )
        .unwrap();
        let rec = s.finalize_tick(&world(), TerminationStatus::Running).unwrap();
        assert_eq!(rec.final_maneuver, Maneuver::EmergencyBrake);
        assert!(rec.recovery_active);
    }

    #[test]
    fn finalize_requires_generator() {
        let mut s = TickStore::new();
        s.commit(
            CONTROLLER_ID,
            RoleOutput::Final {
                maneuver: Maneuver::Wait,
                recovery_active: false,
            },
        )
        .unwrap();
        assert!(matches!(
            s.finalize_tick(&world(), TerminationStatus::Running),
            Err(StoreError::MissingMandatoryOutput { tick: 0, .. })
        ));
    }
}
