use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::orchestrator::TerminationStatus;
use crate::roles::PerfFlags;
use crate::state::{Maneuver, Provenance, TickWindow, VerdictLevel};
use crate::Vec2;

/// A fault directive live in perception during a tick.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActiveFault {
    pub kind: String,
    pub provenance: Provenance,
    /// Ghost id or spoofed target id.
    pub object_id: u32,
    pub window: TickWindow,
}

/// One row of a run trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub tick: u64,
    pub sim_time_s: f64,
    pub ego_position: Vec2,
    pub ego_velocity: Vec2,
    pub ego_speed: f64,
    /// Commanded longitudinal acceleration applied this tick.
    pub ego_accel: f64,
    pub ego_progress_m: f64,
    pub proposed_maneuver: Maneuver,
    pub rationale: String,
    pub verdict_level: Option<VerdictLevel>,
    #[serde(with = "inf_codec")]
    pub min_predicted_separation: f64,
    pub time_of_min: f64,
    pub offending_object: Option<u32>,
    pub active_faults: Vec<ActiveFault>,
    /// Fault activated by the injector this tick (effective next tick).
    pub injected_fault: Option<String>,
    pub perf: PerfFlags,
    pub final_maneuver: Maneuver,
    pub recovery_active: bool,
    pub collision: bool,
    pub perceived_objects: usize,
    pub ground_truth_in_range: usize,
    pub notes: Vec<String>,
    /// `Running` except on the last record of a run.
    pub status: TerminationStatus,
    /// Wall-clock per role. Not deterministic; excluded from hashing.
    pub role_timings_ns: BTreeMap<String, u64>,
}

impl IterationRecord {
    pub fn is_unsafe(&self) -> bool {
        self.verdict_level == Some(VerdictLevel::Unsafe)
    }

    /// Copy with the non-deterministic channel cleared.
    pub fn deterministic(&self) -> Self {
        Self {
            role_timings_ns: BTreeMap::new(),
            ..self.clone()
        }
    }
}

/// JSON has no infinities: they travel as the strings `"inf"` / `"-inf"`.
pub mod inf_codec {
    use serde::de::{self, Deserializer, Visitor};
    use serde::Serializer;

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_nan() {
            Err(serde::ser::Error::custom("NaN is not allowed in traces"))
        } else if *v == f64::INFINITY {
            s.serialize_str("inf")
        } else if *v == f64::NEG_INFINITY {
            s.serialize_str("-inf")
        } else {
            s.serialize_f64(*v)
        }
    }

    struct F64OrInf;

    impl Visitor<'_> for F64OrInf {
        type Value = f64;

        fn expecting(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
            f.write_str("a number or \"inf\"")
        }

        fn visit_f64<E: de::Error>(self, v: f64) -> Result<f64, E> {
            Ok(v)
        }

        fn visit_i64<E: de::Error>(self, v: i64) -> Result<f64, E> {
            Ok(v as f64)
        }

        fn visit_u64<E: de::Error>(self, v: u64) -> Result<f64, E> {
            Ok(v as f64)
        }

        fn visit_str<E: de::Error>(self, v: &str) -> Result<f64, E> {
            match v {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                _ => Err(E::custom(format!("unexpected string `{v}`"))),
            }
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        d.deserialize_any(F64OrInf)
    }
}
