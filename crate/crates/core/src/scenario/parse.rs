//! INI-style scenario files.
//!
//! ```ini
//! [scenario]
//! base = nominal          # nominal | congested | conflicting_traffic | pedestrian_crossing
//! attack = ghost          # none | ghost | spoof
//!
//! [safety]
//! d_unsafe_m = 2.0
//! ```
//!
//! Keys carry their unit in the name. Keys before the first section header
//! belong to `[scenario]`. Unknown sections or keys, duplicate keys and
//! malformed values are errors with 1-based line numbers. Everything not
//! given takes its default.

use std::collections::BTreeMap;

use thiserror::Error;

use super::{AttackSpec, BaseScenario, ScenarioSpec};
use crate::planner::PlannerKind;
use crate::roles::Trigger;
use crate::state::RouteGoal;

#[derive(Debug, Error, PartialEq)]
pub enum ScenarioError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid scenario: {0}")]
    Validation(String),
}

fn perr<T>(line: usize, message: impl Into<String>) -> Result<T, ScenarioError> {
    Err(ScenarioError::Parse {
        line,
        message: message.into(),
    })
}

const SECTIONS: [&str; 6] = ["scenario", "safety", "performance", "planner", "attack", "sim"];

struct Entry {
    value: String,
    line: usize,
}

type Table = BTreeMap<(String, String), Entry>;

fn tokenize(text: &str) -> Result<Table, ScenarioError> {
    let mut section = "scenario".to_string();
    let mut table = Table::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = match raw.find(['#', ';']) {
            Some(k) => &raw[..k],
            None => raw,
        }
        .trim();
        if content.is_empty() {
            continue;
        }
        if let Some(rest) = content.strip_prefix('[') {
            let Some(name) = rest.strip_suffix(']') else {
                return perr(line, format!("malformed section header `{content}`"));
            };
            let name = name.trim().to_ascii_lowercase();
            if !SECTIONS.contains(&name.as_str()) {
                return perr(line, format!("unknown section `[{name}]`"));
            }
            section = name;
            continue;
        }
        let Some((k, v)) = content.split_once('=') else {
            return perr(line, format!("expected `key = value`, got `{content}`"));
        };
        let key = k.trim().to_ascii_lowercase();
        if key.is_empty() {
            return perr(line, "empty key");
        }
        let value = v.trim().trim_matches('"').to_string();
        if let Some(prev) = table.get(&(section.clone(), key.clone())) {
            return perr(
                line,
                format!("duplicate key `{key}` in [{section}] (first set on line {})", prev.line),
            );
        }
        table.insert((section.clone(), key), Entry { value, line });
    }
    Ok(table)
}

struct Reader {
    table: Table,
}

impl Reader {
    fn take(&mut self, section: &str, key: &str) -> Option<Entry> {
        self.table.remove(&(section.to_string(), key.to_string()))
    }

    fn f64(&mut self, section: &str, key: &str, slot: &mut f64) -> Result<(), ScenarioError> {
        if let Some(e) = self.take(section, key) {
            match e.value.parse::<f64>() {
                Ok(x) if x.is_finite() => *slot = x,
                _ => return perr(e.line, format!("`{key}` expects a finite number, got `{}`", e.value)),
            }
        }
        Ok(())
    }

    fn u64(&mut self, section: &str, key: &str, slot: &mut u64) -> Result<(), ScenarioError> {
        if let Some(e) = self.take(section, key) {
            match e.value.parse::<u64>() {
                Ok(x) => *slot = x,
                Err(_) => {
                    return perr(e.line, format!("`{key}` expects a non-negative integer, got `{}`", e.value))
                }
            }
        }
        Ok(())
    }

    fn bool(&mut self, section: &str, key: &str, slot: &mut bool) -> Result<(), ScenarioError> {
        if let Some(e) = self.take(section, key) {
            *slot = match e.value.to_ascii_lowercase().as_str() {
                "true" | "yes" | "on" | "1" => true,
                "false" | "no" | "off" | "0" => false,
                _ => return perr(e.line, format!("`{key}` expects true/false, got `{}`", e.value)),
            };
        }
        Ok(())
    }

    fn parse_enum<T>(
        &mut self,
        section: &str,
        key: &str,
        allowed: &str,
        f: impl Fn(&str) -> Option<T>,
    ) -> Result<Option<(T, usize)>, ScenarioError> {
        match self.take(section, key) {
            None => Ok(None),
            Some(e) => match f(&e.value.to_ascii_lowercase().replace('-', "_")) {
                Some(v) => Ok(Some((v, e.line))),
                None => perr(e.line, format!("`{key}` must be one of {allowed}, got `{}`", e.value)),
            },
        }
    }
}

fn parse_base(s: &str) -> Option<BaseScenario> {
    BaseScenario::ALL.into_iter().find(|b| b.as_str() == s)
}

fn parse_goal(s: &str) -> Option<RouteGoal> {
    match s {
        "straight" => Some(RouteGoal::Straight),
        "left" | "left_turn" => Some(RouteGoal::LeftTurn),
        "right" | "right_turn" => Some(RouteGoal::RightTurn),
        _ => None,
    }
}

#[derive(Clone, Copy)]
enum AttackKind {
    None,
    Ghost,
    Spoof,
}

/// Parses and validates a scenario file.
pub fn parse_scenario_file(text: &str) -> Result<ScenarioSpec, ScenarioError> {
    let mut r = Reader { table: tokenize(text)? };

    let base = r
        .parse_enum("scenario", "base", "nominal|congested|conflicting_traffic|pedestrian_crossing", parse_base)?
        .map(|(b, _)| b);
    let attack_kind = r
        .parse_enum("scenario", "attack", "none|ghost|spoof", |s| match s {
            "none" => Some(AttackKind::None),
            "ghost" | "ghost_obstacle" => Some(AttackKind::Ghost),
            "spoof" | "trajectory_spoof" => Some(AttackKind::Spoof),
            _ => None,
        })?
        .map(|(k, _)| k)
        .unwrap_or(AttackKind::None);

    let mut attack = match attack_kind {
        AttackKind::None => None,
        AttackKind::Ghost => Some(AttackSpec::default_ghost()),
        AttackKind::Spoof => Some(AttackSpec::default_spoof()),
    };
    // an attack without an explicit base gets its paired base
    let base = base
        .or(attack.as_ref().map(AttackSpec::paired_base))
        .unwrap_or(BaseScenario::Nominal);

    let mut spec = ScenarioSpec::for_base(base);
    spec.id = match (&attack, base) {
        (Some(AttackSpec::GhostObstacle { .. }), _) => "ghost_obstacle_attack".into(),
        (Some(AttackSpec::TrajectorySpoof { .. }), _) => "trajectory_spoof_attack".into(),
        (None, b) => b.as_str().into(),
    };
    if let Some(e) = r.take("scenario", "id") {
        spec.id = e.value;
    }
    if let Some((g, _)) = r.parse_enum("scenario", "ego_goal", "straight|left|right", parse_goal)? {
        spec.ego_goal = g;
    }
    r.u64("scenario", "max_ticks", &mut spec.max_ticks)?;
    let mut grace = u64::from(spec.grace_ticks);
    r.u64("scenario", "grace_ticks", &mut grace)?;
    spec.grace_ticks = u32::try_from(grace)
        .map_err(|_| ScenarioError::Validation(format!("grace_ticks {grace} is too large")))?;
    r.bool("scenario", "allow_custom_pairing", &mut spec.allow_custom_pairing)?;

    let s = &mut spec.safety;
    r.f64("safety", "horizon_s", &mut s.horizon)?;
    r.f64("safety", "sample_dt_s", &mut s.sample_dt)?;
    r.f64("safety", "d_unsafe_m", &mut s.d_unsafe)?;
    r.f64("safety", "d_warn_m", &mut s.d_warn)?;
    r.f64("safety", "margin_speed_gain_s", &mut s.margin_speed_gain)?;
    r.bool("safety", "refine", &mut s.refine)?;

    let p = &mut spec.perf;
    r.f64("performance", "max_clearance_s", &mut p.max_clearance)?;
    r.f64("performance", "max_abs_accel_mps2", &mut p.max_abs_accel)?;
    r.f64("performance", "max_abs_jerk_mps3", &mut p.max_abs_jerk)?;

    if let Some((k, _)) = r.parse_enum("planner", "kind", "gap_acceptance|over_cautious|aggressive", PlannerKind::parse)? {
        spec.planner.kind = k;
    }
    let pl = &mut spec.planner;
    r.f64("planner", "caution", &mut pl.caution)?;
    r.f64("planner", "reaction_time_s", &mut pl.reaction_time)?;
    r.f64("planner", "lookahead_s", &mut pl.lookahead_s)?;
    r.bool("planner", "trust_perception", &mut pl.trust_perception)?;
    if let Some(e) = r.take("planner", "external_command") {
        pl.external_command = (!e.value.is_empty()).then_some(e.value);
    }

    let sm = &mut spec.sim;
    r.f64("sim", "dt_s", &mut sm.dt)?;
    r.f64("sim", "sensing_range_m", &mut sm.sensing_range)?;
    r.f64("sim", "a_brake_max_mps2", &mut sm.a_brake_max)?;
    r.f64("sim", "a_accel_max_mps2", &mut sm.a_accel_max)?;
    r.f64("sim", "perception_noise_std_m", &mut sm.perception_noise_std)?;
    r.f64("sim", "speed_limit_mps", &mut sm.speed_limit)?;

    if let Some(a) = attack.as_mut() {
        read_attack(&mut r, a)?;
    }

    // whatever is left was not consumed by anything
    if let Some(((section, key), e)) = r.table.into_iter().min_by_key(|(_, e)| e.line) {
        let hint = if section == "attack" && attack.is_none() {
            " (no attack selected; set `attack = ghost|spoof` in [scenario])"
        } else {
            ""
        };
        return perr(e.line, format!("unknown key `{key}` in [{section}]{hint}"));
    }
    spec.attack = attack;
    spec.validate()?;
    Ok(spec)
}

fn read_attack(r: &mut Reader, a: &mut AttackSpec) -> Result<(), ScenarioError> {
    let (duration, trigger) = match a {
        AttackSpec::GhostObstacle {
            distance_before_entry_m,
            lateral_offset_m,
            speed_mps,
            duration_ticks,
            trigger,
        } => {
            r.f64("attack", "ghost_distance_before_entry_m", distance_before_entry_m)?;
            r.f64("attack", "ghost_lateral_offset_m", lateral_offset_m)?;
            r.f64("attack", "ghost_speed_mps", speed_mps)?;
            (duration_ticks, trigger)
        }
        AttackSpec::TrajectorySpoof {
            velocity_scale,
            heading_bias_rad,
            duration_ticks,
            trigger,
        } => {
            r.f64("attack", "velocity_scale", velocity_scale)?;
            r.f64("attack", "heading_bias_rad", heading_bias_rad)?;
            (duration_ticks, trigger)
        }
    };
    r.u64("attack", "duration_ticks", duration)?;

    #[derive(Clone, Copy)]
    enum T {
        Within,
        At,
        Periodic,
    }
    let kind = r
        .parse_enum("attack", "trigger", "ego_within_distance|at_tick|periodic", |s| match s {
            "ego_within_distance" => Some(T::Within),
            "at_tick" => Some(T::At),
            "periodic" => Some(T::Periodic),
            _ => None,
        })?
        .map(|(k, _)| k);
    let mut distance = match trigger {
        Trigger::EgoWithinDistance { meters } => *meters,
        _ => 25.0,
    };
    let mut tick = match trigger {
        Trigger::AtTick { tick } => *tick,
        _ => 0,
    };
    let mut period = match trigger {
        Trigger::Periodic { period } => *period,
        _ => 20,
    };
    r.f64("attack", "trigger_distance_m", &mut distance)?;
    r.u64("attack", "trigger_tick", &mut tick)?;
    r.u64("attack", "trigger_period_ticks", &mut period)?;
    let kind = kind.unwrap_or(match trigger {
        Trigger::EgoWithinDistance { .. } => T::Within,
        Trigger::AtTick { .. } => T::At,
        Trigger::Periodic { .. } => T::Periodic,
    });
    *trigger = match kind {
        T::Within => Trigger::EgoWithinDistance { meters: distance },
        T::At => Trigger::AtTick { tick },
        T::Periodic => Trigger::Periodic { period },
    };
    Ok(())
}
