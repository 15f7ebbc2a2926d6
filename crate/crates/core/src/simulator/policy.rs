use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sched_mdp::{AociState, MdpSpec, PolicyTable};

pub const ZW_NAME: &str = "ZW";
pub const SAC_NAME: &str = "SAC";

/// Scheduling rule used by the simulator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SchedulePolicy {
    /// Never update.
    Idle,
    /// Update in every slot.
    ZeroWait,
    /// Genie rule: update exactly when the PT state differs from the last
    /// delivered one.
    SampleAtChange,
    /// Update iff `Δ ≥ thresholds[δ - 1]`; `None` never updates. δ beyond
    /// the table uses the last entry.
    Thresholds(Vec<Option<u32>>),
    Table(PolicyTable),
}

impl SchedulePolicy {
    pub fn decide(&self, ages: AociState, differs: bool) -> bool {
        match self {
            SchedulePolicy::Idle => false,
            SchedulePolicy::ZeroWait => true,
            SchedulePolicy::SampleAtChange => differs,
            SchedulePolicy::Thresholds(t) => {
                let i = (ages.aoi.max(1) as usize - 1).min(t.len() - 1);
                t[i].is_some_and(|th| ages.aoci >= th)
            }
            SchedulePolicy::Table(p) => p.action(ages),
        }
    }

    /// Threshold rule read off a policy table, one entry per δ.
    pub fn thresholds_of(table: &PolicyTable) -> Self {
        SchedulePolicy::Thresholds((1..=table.aoi_cap()).map(|d| table.threshold(d)).collect())
    }

    pub fn name(&self) -> &'static str {
        match self {
            SchedulePolicy::Idle => "idle",
            SchedulePolicy::ZeroWait => ZW_NAME,
            SchedulePolicy::SampleAtChange => SAC_NAME,
            SchedulePolicy::Thresholds(_) => "threshold",
            SchedulePolicy::Table(_) => "table",
        }
    }

    pub fn validate(&self, spec: &MdpSpec) -> Result<()> {
        match self {
            SchedulePolicy::Thresholds(t) if t.is_empty() => {
                Err(Error::invalid("thresholds", "need at least one entry"))
            }
            SchedulePolicy::Table(p) if !p.matches(spec) => {
                Err(Error::invalid("policy", "policy grid does not match the simulation caps"))
            }
            _ => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thresholds_match_table() {
        let spec = MdpSpec::new(6, 0.8, 0.3, 2.0, 1.0).unwrap();
        let table = PolicyTable::from_thresholds(&spec, |d| (d < 5).then_some(d + 1));
        let th = SchedulePolicy::thresholds_of(&table);
        for s in spec.states() {
            assert_eq!(th.decide(s, false), table.action(s), "{s:?}");
        }
    }

    #[test]
    fn sac_follows_the_genie() {
        let s = AociState::new(3, 2);
        assert!(SchedulePolicy::SampleAtChange.decide(s, true));
        assert!(!SchedulePolicy::SampleAtChange.decide(s, false));
    }
}
