//! Emergency-brake override.

use crate::state::{Maneuver, Verdict, VerdictLevel};

/// `EmergencyBrake` on an `Unsafe` verdict, otherwise the proposal.
pub fn recovery_decide(verdict: &Verdict, proposed: Maneuver) -> Maneuver {
    if verdict.level == VerdictLevel::Unsafe {
        Maneuver::EmergencyBrake
    } else {
        proposed
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(level: VerdictLevel) -> Verdict {
        Verdict {
            level,
            ..Verdict::vacuous()
        }
    }

    #[test]
    fn decision_rule() {
        assert_eq!(recovery_decide(&v(VerdictLevel::Unsafe), Maneuver::Accelerate), Maneuver::EmergencyBrake);
        assert_eq!(recovery_decide(&v(VerdictLevel::Safe), Maneuver::Yield), Maneuver::Yield);
        assert_eq!(recovery_decide(&v(VerdictLevel::Warning), Maneuver::Proceed), Maneuver::Proceed);
    }
}
