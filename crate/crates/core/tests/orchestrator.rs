use vvloop::metrics::trace_hash;
use vvloop::orchestrator::{Controller, RoleBinding, RoleSet, RunError};
use vvloop::roles::{Role, RoleContext, RoleError, RoleKind};
use vvloop::state::RoleOutput;
use vvloop::sim::spawn_scenario;
use vvloop::{run_scenario, Maneuver, RunOptions, ScenarioSpec, TerminationStatus, VerdictLevel};

const PHASES: [&str; 7] = [
    "generator",
    "safety_monitor",
    "security_assessor",
    "fault_injector",
    "performance_oracle",
    "recovery_planner",
    "controller",
];

#[test]
fn commits_follow_the_phase_order() {
    let spec = ScenarioSpec::ghost_attack();
    let mut seen_injector = false;
    let mut seen_recovery = false;
    for seed in 0..5 {
        let mut c = Controller::new(&spec, seed, RunOptions::default()).unwrap();
        while !c.status().is_terminal() {
            c.run_tick().unwrap();
            let order = c.last_commit_order();
            let idx: Vec<usize> = order
                .iter()
                .map(|r| PHASES.iter().position(|p| p == r).expect("known role"))
                .collect();
            assert!(idx.windows(2).all(|w| w[0] < w[1]), "{order:?}");
            assert_eq!(order.first().map(String::as_str), Some("generator"));
            assert_eq!(order.last().map(String::as_str), Some("controller"));
            for always in ["safety_monitor", "security_assessor", "performance_oracle"] {
                assert!(order.iter().any(|r| r == always));
            }
            seen_injector |= order.iter().any(|r| r == "fault_injector");
            seen_recovery |= order.iter().any(|r| r == "recovery_planner");
        }
    }
    assert!(seen_injector && seen_recovery);
}

#[test]
fn exactly_one_terminal_record() {
    let spec = ScenarioSpec::for_base(vvloop::scenario::BaseScenario::ConflictingTraffic);
    for seed in 0..10 {
        let res = run_scenario(&spec, seed, &RunOptions::default()).unwrap();
        let (last, rest) = res.records.split_last().unwrap();
        assert_eq!(last.status, res.termination);
        assert!(res.termination.is_terminal());
        assert!(rest.iter().all(|r| r.status == TerminationStatus::Running));
        assert!(res.records.windows(2).all(|w| w[1].tick == w[0].tick + 1));
    }
    let mut c = Controller::new(&spec, 0, RunOptions::default()).unwrap();
    while !c.status().is_terminal() {
        c.run_tick().unwrap();
    }
    let frozen = c.world().clone();
    assert!(matches!(c.run_tick(), Err(RunError::AlreadyTerminated(_))));
    assert_eq!(c.world(), &frozen);
}

#[test]
fn halt_on_violation_stops_at_the_first_unsafe_tick() {
    let spec = ScenarioSpec::ghost_attack();
    let opts = RunOptions { halt_on_violation: true, ..RunOptions::default() };
    let res = run_scenario(&spec, 2, &opts).unwrap();
    assert_eq!(res.termination, TerminationStatus::HaltOnViolation);
    let first_unsafe = res
        .records
        .iter()
        .position(|r| r.verdict_level == Some(VerdictLevel::Unsafe))
        .unwrap();
    assert_eq!(first_unsafe, res.records.len() - 1);
}

#[test]
fn traces_hash_the_same_for_the_same_inputs() {
    let spec = ScenarioSpec::spoof_attack();
    let a = run_scenario(&spec, 11, &RunOptions::default()).unwrap();
    let b = run_scenario(&spec, 11, &RunOptions::default()).unwrap();
    let c = run_scenario(&spec, 12, &RunOptions::default()).unwrap();
    assert_eq!(trace_hash(&a.records), trace_hash(&b.records));
    assert_ne!(trace_hash(&a.records), trace_hash(&c.records));
}

#[test]
fn recovery_recompute_changes_nothing() {
    let spec = ScenarioSpec::for_base(vvloop::scenario::BaseScenario::ConflictingTraffic);
    for seed in 0..5 {
        let a = run_scenario(&spec, seed, &RunOptions::default()).unwrap();
        let opts = RunOptions { recovery_recompute: true, ..RunOptions::default() };
        let b = run_scenario(&spec, seed, &opts).unwrap();
        assert_eq!(trace_hash(&a.records), trace_hash(&b.records));
    }
}

struct Panicky;

impl Role for Panicky {
    fn kind(&self) -> RoleKind {
        RoleKind::Generator
    }
    fn execute(&mut self, ctx: &RoleContext<'_>) -> Result<RoleOutput, RoleError> {
        if ctx.tick == 3 {
            panic!("boom");
        }
        Ok(RoleOutput::Proposal {
            maneuver: Maneuver::Proceed,
            rationale: String::new(),
        })
    }
}

#[test]
fn a_panicking_role_becomes_a_run_error() {
    let spec = ScenarioSpec::default();
    let binding = RoleBinding {
        role_id: "generator".into(),
        role_kind: RoleKind::Generator,
        sequence_position: 0,
        enabled: true,
    };
    let roles = RoleSet::new(vec![(binding, Box::new(Panicky) as Box<dyn Role>)]).unwrap();
    let world = spawn_scenario(&spec, 0).unwrap();
    let mut c = Controller::with_roles(&spec, 0, RunOptions::default(), world, roles);
    for _ in 0..3 {
        c.run_tick().unwrap();
    }
    match c.run_tick() {
        Err(RunError::RolePanic { role, tick, message }) => {
            assert_eq!((role.as_str(), tick), ("generator", 3));
            assert!(message.contains("boom"));
        }
        other => panic!("expected RolePanic, got {other:?}"),
    }
}
