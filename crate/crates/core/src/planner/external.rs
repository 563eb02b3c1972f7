//! Line-delimited JSON adapter for an out-of-process planner.
//!
//! Request (one line per tick):
//! `{"tick": u64, "ego": {...odometry...}, "objects": [...], "goal": "straight"}`
//! Response (one line): `{"maneuver": "yield", "rationale": "..."}`.
//! No response within [`EXTERNAL_TIMEOUT`] means `Wait`.

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{Planner, PlannerError};
use crate::state::{EgoOdometry, Maneuver, PerceivedState, RouteGoal};

pub const EXTERNAL_TIMEOUT: Duration = Duration::from_secs(2);

/// Provenance is deliberately not part of the request.
#[derive(Serialize)]
struct WireObject {
    id: u32,
    kind: crate::state::AgentKind,
    position: [f64; 2],
    velocity: [f64; 2],
    half_extent: [f64; 2],
}

#[derive(Serialize)]
struct Request<'a> {
    tick: u64,
    ego: &'a EgoOdometry,
    objects: Vec<WireObject>,
    goal: RouteGoal,
}

#[derive(Deserialize)]
struct Response {
    maneuver: String,
    #[serde(default)]
    rationale: String,
}

pub struct ExternalPlanner {
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<std::io::Result<String>>,
    timeout: Duration,
}

impl ExternalPlanner {
    /// Spawns `command` (whitespace-separated program and arguments).
    pub fn spawn(command: &str) -> Result<Self, PlannerError> {
        Self::spawn_with_timeout(command, EXTERNAL_TIMEOUT)
    }

    pub fn spawn_with_timeout(command: &str, timeout: Duration) -> Result<Self, PlannerError> {
        let mut parts = command.split_whitespace();
        let program = parts
            .next()
            .ok_or_else(|| PlannerError::External("empty command".into()))?;
        let mut child = Command::new(program)
            .args(parts)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| PlannerError::External(format!("cannot start `{program}`: {e}")))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let (tx, rx) = mpsc::channel();
        std::thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        Ok(Self {
            child,
            stdin,
            lines: rx,
            timeout,
        })
    }

    fn request_line(perceived: &PerceivedState) -> String {
        let req = Request {
            tick: perceived.clock.tick,
            ego: &perceived.ego,
            objects: perceived
                .objects
                .iter()
                .map(|o| WireObject {
                    id: o.id,
                    kind: o.kind,
                    position: [o.position.x, o.position.y],
                    velocity: [o.velocity.x, o.velocity.y],
                    half_extent: [o.half_extent.x, o.half_extent.y],
                })
                .collect(),
            goal: perceived.goal,
        };
        serde_json::to_string(&req).expect("request serializes")
    }
}

impl Planner for ExternalPlanner {
    fn plan(&mut self, perceived: &PerceivedState) -> Result<(Maneuver, String), PlannerError> {
        let line = Self::request_line(perceived);
        // discard late answers to requests that already timed out
        while let Ok(Ok(_)) = self.lines.try_recv() {}
        writeln!(self.stdin, "{line}")
            .and_then(|_| self.stdin.flush())
            .map_err(|e| PlannerError::External(format!("write failed: {e}")))?;
        let reply = match self.lines.recv_timeout(self.timeout) {
            Ok(Ok(reply)) => reply,
            Ok(Err(e)) => return Err(PlannerError::External(format!("read failed: {e}"))),
            Err(RecvTimeoutError::Timeout) => {
                return Ok((Maneuver::Wait, "planner fault: planner timeout".into()))
            }
            Err(RecvTimeoutError::Disconnected) => {
                return Err(PlannerError::External("planner exited".into()))
            }
        };
        let resp: Response = match serde_json::from_str(&reply) {
            Ok(r) => r,
            Err(e) => {
                return Ok((
                    Maneuver::Wait,
                    format!("planner fault: unparseable response ({e})"),
                ))
            }
        };
        match Maneuver::parse(&resp.maneuver).filter(|m| *m != Maneuver::EmergencyBrake) {
            Some(m) => Ok((m, resp.rationale)),
            None => Ok((
                Maneuver::Wait,
                format!("planner fault: unmapped maneuver `{}`", resp.maneuver),
            )),
        }
    }
}

impl Drop for ExternalPlanner {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

#[cfg(all(test, unix))]
mod tests {
    use super::*;
    use crate::state::SimClock;

    fn perceived() -> PerceivedState {
        PerceivedState {
            clock: SimClock::default(),
            ego: EgoOdometry {
                position: crate::Vec2::zeros(),
                velocity: crate::Vec2::zeros(),
                heading: 0.0,
                speed: 0.0,
                route_progress_m: 0.0,
                half_extent: crate::Vec2::new(2.25, 1.0),
            },
            objects: vec![],
            goal: RouteGoal::Straight,
        }
    }

    fn script(body: &str) -> (tempfile::TempDir, String) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("planner.sh");
        std::fs::write(&path, format!("#!/bin/sh\n{body}\n")).unwrap();
        (dir, format!("sh {}", path.display()))
    }

    #[test]
    fn round_trip_and_mapping() {
        let (_d, cmd) = script(
            r#"while read line; do echo '{"maneuver": "Proceed Cautiously", "rationale": "ok"}'; done"#,
        );
        let mut p = ExternalPlanner::spawn(&cmd).unwrap();
        assert_eq!(p.plan(&perceived()).unwrap(), (Maneuver::ProceedCautiously, "ok".into()));
    }

    #[test]
    fn unmapped_text_waits() {
        let (_d, cmd) = script(r#"while read line; do echo '{"maneuver": "swerve"}'; done"#);
        let mut p = ExternalPlanner::spawn(&cmd).unwrap();
        let (m, why) = p.plan(&perceived()).unwrap();
        assert_eq!(m, Maneuver::Wait);
        assert!(why.contains("unmapped"));
    }

    #[test]
    fn timeout_waits() {
        let (_d, cmd) = script("sleep 5");
        let mut p = ExternalPlanner::spawn_with_timeout(&cmd, Duration::from_millis(200)).unwrap();
        let (m, why) = p.plan(&perceived()).unwrap();
        assert_eq!(m, Maneuver::Wait);
        assert_eq!(why, "planner fault: planner timeout");
    }
}
