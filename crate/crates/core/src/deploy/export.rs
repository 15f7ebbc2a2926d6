use super::solution::DeploymentSolution;
use crate::export::{fmt_f64, CsvTable, Provenance};

/// `(iteration, deployment_cost)`, iterations counted from 1.
pub fn cost_curve_csv(curve: &[f64], provenance: &Provenance) -> CsvTable {
    let mut t = CsvTable::new(provenance, &["iteration", "deployment_cost"]);
    for (i, &c) in curve.iter().enumerate() {
        t.push_row([(i + 1).to_string(), fmt_f64(c)]);
    }
    t
}

/// `(device, host_bs)`.
pub fn solution_csv(sol: &DeploymentSolution, provenance: &Provenance) -> CsvTable {
    let mut t = CsvTable::new(provenance, &["device", "host_bs"]);
    for k in 0..sol.num_devices() {
        let host = sol.host_of(k).map_or_else(String::new, |m| m.to_string());
        t.push_row([k.to_string(), host]);
    }
    t
}
