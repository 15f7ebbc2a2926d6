//! Evaluation of policies whose chain has several closed classes.
//!
//! With certain delivery some policies split the state space (e.g. updating
//! only at δ = 1 never leaves that column while idling elsewhere drifts to
//! the corner). Policy iteration then needs a gain per state: each closed
//! class gets its own gain and bias (anchored at `(1, 1)` when the class
//! holds it, else at its smallest index), and transient states inherit
//! absorption-weighted values.

use nalgebra::{DMatrix, DVector};

use super::evaluate::{solve_dense, solve_sweeps, EvalOptions, EvalStats, DENSE_STATE_LIMIT};
use super::model::SparseChain;
use crate::error::{Error, Result};

/// Closed communicating classes, each sorted, found with Tarjan's SCC
/// algorithm (iterative).
pub(crate) fn closed_classes(chain: &SparseChain) -> Vec<Vec<usize>> {
    const UNSEEN: usize = usize::MAX;
    let n = chain.num_states();
    let mut index = vec![UNSEEN; n];
    let mut low = vec![0; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut comp = vec![UNSEEN; n];
    let mut components: Vec<Vec<usize>> = Vec::new();
    let mut counter = 0;
    // Call stack frames: (node, position within its row).
    let mut frames: Vec<(usize, usize)> = Vec::new();
    for root in 0..n {
        if index[root] != UNSEEN {
            continue;
        }
        frames.push((root, 0));
        index[root] = counter;
        low[root] = counter;
        counter += 1;
        stack.push(root);
        on_stack[root] = true;
        while let Some(&mut (v, ref mut pos)) = frames.last_mut() {
            let row = chain.offsets[v]..chain.offsets[v + 1];
            if *pos < row.len() {
                let w = chain.targets[row.start + *pos];
                *pos += 1;
                if index[w] == UNSEEN {
                    index[w] = counter;
                    low[w] = counter;
                    counter += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    frames.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
                continue;
            }
            frames.pop();
            if let Some(&(parent, _)) = frames.last() {
                low[parent] = low[parent].min(low[v]);
            }
            if low[v] == index[v] {
                let id = components.len();
                let mut members = Vec::new();
                loop {
                    let w = stack.pop().expect("tarjan stack");
                    on_stack[w] = false;
                    comp[w] = id;
                    members.push(w);
                    if w == v {
                        break;
                    }
                }
                members.sort_unstable();
                components.push(members);
            }
        }
    }
    components
        .into_iter()
        .enumerate()
        .filter(|(id, members)| members.iter().all(|&i| chain.row(i).all(|(j, _)| comp[j] == *id)))
        .map(|(_, members)| members)
        .collect()
}

#[derive(Debug, Clone)]
pub struct MultichainEvaluation {
    /// Long-run average cost from each state.
    pub gains: Vec<f64>,
    pub bias: Vec<f64>,
    pub classes: Vec<Vec<usize>>,
    pub stats: EvalStats,
}

/// Gain and bias vectors solving `g = P g` and `g + h = c + P h`.
pub(crate) fn evaluate_multichain(
    chain: &SparseChain,
    reference: usize,
    opts: &EvalOptions,
) -> Result<MultichainEvaluation> {
    let n = chain.num_states();
    let classes = closed_classes(chain);
    let mut gains = vec![f64::NAN; n];
    let mut bias = vec![f64::NAN; n];
    let mut recurrent = vec![false; n];
    let mut stats = EvalStats::default();
    for members in &classes {
        let sub = chain.restrict(members);
        let anchor = members.binary_search(&reference).unwrap_or(0);
        let ev = if members.len() <= DENSE_STATE_LIMIT {
            solve_dense(&sub, anchor, opts.tolerance)?
        } else {
            solve_sweeps(&sub, anchor, opts, None)?
        };
        stats.dense |= ev.stats.dense;
        stats.sweeps += ev.stats.sweeps;
        stats.total_entries += ev.stats.total_entries;
        stats.max_entries_per_sweep = stats.max_entries_per_sweep.max(ev.stats.max_entries_per_sweep);
        for (local, &i) in members.iter().enumerate() {
            gains[i] = ev.gain;
            bias[i] = ev.bias[local];
            recurrent[i] = true;
        }
    }
    let transient: Vec<usize> = (0..n).filter(|&i| !recurrent[i]).collect();
    if !transient.is_empty() {
        let g_rhs: Vec<f64> = transient
            .iter()
            .map(|&i| chain.row(i).filter(|&(j, _)| recurrent[j]).map(|(j, p)| p * gains[j]).sum())
            .collect();
        let g_t = solve_transient(chain, &transient, &recurrent, &g_rhs, opts)?;
        for (&i, &g) in transient.iter().zip(&g_t) {
            gains[i] = g;
        }
        let h_rhs: Vec<f64> = transient
            .iter()
            .map(|&i| {
                chain.cost(i) - gains[i]
                    + chain
                        .row(i)
                        .filter(|&(j, _)| recurrent[j])
                        .map(|(j, p)| p * bias[j])
                        .sum::<f64>()
            })
            .collect();
        let h_t = solve_transient(chain, &transient, &recurrent, &h_rhs, opts)?;
        for (&i, &h) in transient.iter().zip(&h_t) {
            bias[i] = h;
        }
    }
    Ok(MultichainEvaluation {
        gains,
        bias,
        classes,
        stats,
    })
}

/// Solves `(I − P_TT) x = b` over the transient states.
fn solve_transient(
    chain: &SparseChain,
    transient: &[usize],
    recurrent: &[bool],
    b: &[f64],
    opts: &EvalOptions,
) -> Result<Vec<f64>> {
    let m = transient.len();
    let pos = |state: usize| transient.binary_search(&state).ok();
    if m <= DENSE_STATE_LIMIT {
        let mut a = DMatrix::<f64>::identity(m, m);
        for (r, &i) in transient.iter().enumerate() {
            for (j, p) in chain.row(i) {
                if !recurrent[j] {
                    a[(r, pos(j).expect("transient index"))] -= p;
                }
            }
        }
        let x = a
            .lu()
            .solve(&DVector::from_column_slice(b))
            .ok_or_else(|| Error::SolverFailure("singular transient system".into()))?;
        return Ok(x.iter().copied().collect());
    }
    // Gauss-Seidel, highest index first: idle moves go up in index, so
    // this order propagates values in few passes.
    let mut x = vec![0.0; m];
    for _ in 0..opts.max_sweeps {
        let mut change: f64 = 0.0;
        let mut scale: f64 = 1.0;
        for r in (0..m).rev() {
            let i = transient[r];
            let mut acc = b[r];
            let mut self_loop = 0.0;
            for (j, p) in chain.row(i) {
                if j == i {
                    self_loop += p;
                } else if !recurrent[j] {
                    acc += p * x[pos(j).expect("transient index")];
                }
            }
            let v = acc / (1.0 - self_loop);
            change = change.max((v - x[r]).abs());
            scale = scale.max(v.abs());
            x[r] = v;
        }
        if change <= opts.tolerance * 1e-2 * scale {
            return Ok(x);
        }
    }
    Err(Error::NonConvergence {
        iterations: opts.max_sweeps,
        context: "transient values of a multichain policy".into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sched_mdp::chain::long_run;
    use crate::sched_mdp::model::{AociState, MdpSpec, PolicyTable};

    #[test]
    fn idle_has_a_single_closed_class() {
        let spec = MdpSpec::new(5, 0.7, 0.3, 1.0, 1.0).unwrap();
        let chain = SparseChain::build(&PolicyTable::idle(&spec), &spec);
        assert_eq!(closed_classes(&chain), vec![vec![spec.index(AociState::new(5, 5))]]);
    }

    #[test]
    fn split_chain_gains_match_long_run() {
        let spec = MdpSpec::new(5, 1.0, 0.3, 1.0, 1.0).unwrap();
        let policy = PolicyTable::from_fn(&spec, |s| s.aoi == 1 || s.aoci == 3);
        let chain = SparseChain::build(&policy, &spec);
        let ev = evaluate_multichain(&chain, 0, &EvalOptions::default()).unwrap();
        assert!(ev.classes.len() > 1);
        for s in spec.states() {
            let lr = long_run(&policy, &spec, s).unwrap();
            let g = ev.gains[spec.index(s)];
            assert!((g - lr.gain).abs() < 1e-9, "{s:?}: {g} vs {}", lr.gain);
        }
        // Bias equations hold everywhere.
        for i in 0..spec.num_states() {
            let future: f64 = chain.row(i).map(|(j, p)| p * ev.bias[j]).sum();
            assert!((chain.cost(i) + future - ev.bias[i] - ev.gains[i]).abs() < 1e-8);
        }
    }
}
