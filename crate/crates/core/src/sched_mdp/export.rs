//! Policy and solution CSVs.
//!
//! Policy file columns: `delta,aoci,action` where `delta` is the AoI δ.
//! Solution file columns: `delta,aoci,bias`, preceded by a
//! `# gain=<θ> iterations=<n>` comment line.

use super::model::{MdpSpec, PolicyTable};
use super::solve::SolveResult;
use crate::error::{Error, Result};
use crate::export::{fmt_f64, CsvTable, Provenance};

pub fn policy_table_csv(policy: &PolicyTable, spec: &MdpSpec, provenance: &Provenance) -> CsvTable {
    let mut t = CsvTable::new(provenance, &["delta", "aoci", "action"]);
    t.comment(format!("aoci_cap={} aoi_cap={}", spec.aoci_cap, spec.aoi_cap));
    for (i, s) in spec.states().enumerate() {
        t.push_row([s.aoi.to_string(), s.aoci.to_string(), u8::from(policy.action_at(i)).to_string()]);
    }
    t
}

pub fn solve_result_csv(result: &SolveResult, spec: &MdpSpec, provenance: &Provenance) -> CsvTable {
    let mut t = CsvTable::new(provenance, &["delta", "aoci", "bias"]);
    t.comment(format!("gain={} iterations={}", fmt_f64(result.gain), result.iterations));
    for (i, s) in spec.states().enumerate() {
        t.push_row([s.aoi.to_string(), s.aoci.to_string(), fmt_f64(result.bias[i])]);
    }
    t
}

/// Rebuilds a policy from its CSV; every grid cell must appear exactly once.
pub fn policy_from_csv(table: &CsvTable, spec: &MdpSpec) -> Result<PolicyTable> {
    let (ci, ca, cx) = (table.column("delta")?, table.column("aoci")?, table.column("action")?);
    let mut actions = vec![None; spec.num_states()];
    for (line, row) in table.rows.iter().enumerate() {
        let parse = |c: usize| -> Result<u32> {
            row[c]
                .parse()
                .map_err(|_| Error::Config(format!("policy row {line}: bad integer `{}`", row[c])))
        };
        let state = super::model::AociState::new(parse(ca)?, parse(ci)?);
        if !spec.contains(state) {
            return Err(Error::Config(format!("policy row {line}: {state:?} outside the grid")));
        }
        let action = match parse(cx)? {
            0 => false,
            1 => true,
            other => return Err(Error::Config(format!("policy row {line}: action {other}"))),
        };
        let slot = &mut actions[spec.index(state)];
        if slot.replace(action).is_some() {
            return Err(Error::Config(format!("policy row {line}: duplicate state {state:?}")));
        }
    }
    let actions = actions
        .into_iter()
        .enumerate()
        .map(|(i, a)| a.ok_or_else(|| Error::Config(format!("policy missing state {:?}", spec.state(i)))))
        .collect::<Result<Vec<bool>>>()?;
    PolicyTable::from_actions(spec, actions)
}
