//! Critical-path estimation with unbounded parallelism and one timestep per
//! gate.

mod compose;
mod remodularize;
mod schedule;
mod validate;

use std::fmt;
use std::str::FromStr;

pub use compose::{compose_critical_path, CpEstimate};
pub use remodularize::remodularize;
pub use schedule::{
    forall_block, schedule_asap, schedule_body, schedule_center_aligned, Block, CalleeSummaries,
    LoopSchedule, ModuleSchedule,
};
pub use validate::{oracle_critical_path, validate_schedule, ScheduleCheck, TimedChecker};

/// How a callee is summarized for its callers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SchedulingMode {
    /// Opaque box: every operand busy for the whole callee.
    Modular,
    /// Operands are released at their last ASAP use.
    BottomSlack,
    /// Operands are held from their first to their last use in a schedule
    /// whose first half is pushed late.
    CenterAligned,
}

impl SchedulingMode {
    pub const ALL: [SchedulingMode; 3] = [
        SchedulingMode::Modular,
        SchedulingMode::BottomSlack,
        SchedulingMode::CenterAligned,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SchedulingMode::Modular => "modular",
            SchedulingMode::BottomSlack => "bottom-slack",
            SchedulingMode::CenterAligned => "center",
        }
    }
}

impl fmt::Display for SchedulingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SchedulingMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "modular" => Ok(SchedulingMode::Modular),
            "bottom-slack" | "bottom" => Ok(SchedulingMode::BottomSlack),
            "center" | "center-aligned" => Ok(SchedulingMode::CenterAligned),
            other => Err(format!(
                "unknown scheduling mode `{other}` (expected modular, bottom-slack or center)"
            )),
        }
    }
}

#[cfg(test)]
mod tests;
