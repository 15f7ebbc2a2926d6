//! Long-run behaviour of the chain a policy induces from a given start:
//! recurrent classes, limiting distribution and average cost.
//!
//! Small chains are handled exactly (class decomposition, absorption
//! probabilities and per-class stationary laws by Gaussian elimination);
//! larger ones by power iteration of the lazy chain from the start state.

use super::model::{AociState, MdpSpec, PolicyTable, SparseChain};
use crate::error::{Error, Result};

/// Above this many states the power-iteration path is used.
pub const EXACT_STATE_LIMIT: usize = 400;

#[derive(Debug, Clone)]
pub struct LongRun {
    /// Average cost per slot.
    pub gain: f64,
    /// Limiting (Cesàro) state distribution from the start state.
    pub distribution: Vec<f64>,
    /// States in a closed class reachable from the start state.
    pub recurrent: Vec<bool>,
}

/// Long-run average cost of `policy` started from `(1, 1)`.
pub fn average_cost_of(policy: &PolicyTable, spec: &MdpSpec) -> Result<f64> {
    Ok(long_run(policy, spec, AociState::ORIGIN)?.gain)
}

pub fn long_run(policy: &PolicyTable, spec: &MdpSpec, start: AociState) -> Result<LongRun> {
    spec.validate()?;
    if !policy.matches(spec) {
        return Err(Error::invalid("policy", "policy grid does not match the MDP caps"));
    }
    let chain = SparseChain::build(policy, spec);
    let start = spec.index(start);
    if chain.num_states() <= EXACT_STATE_LIMIT {
        exact(&chain, start)
    } else {
        power_iteration(&chain, start)
    }
}

fn reachable_from(chain: &SparseChain, start: usize) -> Vec<bool> {
    let mut seen = vec![false; chain.num_states()];
    let mut stack = vec![start];
    seen[start] = true;
    while let Some(i) = stack.pop() {
        for (j, _) in chain.row(i) {
            if !seen[j] {
                seen[j] = true;
                stack.push(j);
            }
        }
    }
    seen
}

/// Closed communicating classes among the reachable states. A reachable
/// state is recurrent iff every state it reaches can reach it back.
fn closed_classes(chain: &SparseChain, reachable: &[bool]) -> Vec<Vec<usize>> {
    let n = chain.num_states();
    let reach: Vec<Vec<bool>> = (0..n)
        .map(|i| if reachable[i] { reachable_from(chain, i) } else { Vec::new() })
        .collect();
    let mut assigned = vec![false; n];
    let mut classes = Vec::new();
    for i in (0..n).filter(|&i| reachable[i]) {
        if assigned[i] {
            continue;
        }
        let closed = (0..n).filter(|&j| reach[i][j]).all(|j| reach[j][i]);
        if closed {
            let members: Vec<usize> = (0..n).filter(|&j| reach[i][j]).collect();
            for &j in &members {
                assigned[j] = true;
            }
            classes.push(members);
        }
    }
    classes
}

/// Solves `a x = b` in place by Gaussian elimination with partial pivoting.
fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Result<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))
            .expect("non-empty pivot range");
        if a[piv][col].abs() < 1e-300 {
            return Err(Error::SolverFailure(format!("singular system at column {col}")));
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            if f != 0.0 {
                for c in col..n {
                    a[r][c] -= f * a[col][c];
                }
                b[r] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let tail: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - tail) / a[r][r];
    }
    Ok(x)
}

/// Stationary law of a closed class.
fn class_stationary(chain: &SparseChain, class: &[usize]) -> Result<Vec<f64>> {
    let m = class.len();
    let pos = |state: usize| class.iter().position(|&c| c == state);
    // Rows: balance equations π_j = Σ_i π_i P_ij, last one replaced by Σ π = 1.
    let mut a = vec![vec![0.0; m]; m];
    for (col, &i) in class.iter().enumerate() {
        for (j, p) in chain.row(i) {
            let row = pos(j).expect("closed class has no exits");
            a[row][col] += p;
        }
        a[col][col] -= 1.0;
    }
    a[m - 1] = vec![1.0; m];
    let mut b = vec![0.0; m];
    b[m - 1] = 1.0;
    gauss_solve(a, b)
}

fn exact(chain: &SparseChain, start: usize) -> Result<LongRun> {
    let n = chain.num_states();
    let reachable = reachable_from(chain, start);
    let classes = closed_classes(chain, &reachable);
    let mut class_of = vec![usize::MAX; n];
    for (c, members) in classes.iter().enumerate() {
        for &i in members {
            class_of[i] = c;
        }
    }
    // Absorption probabilities into each class from the transient states.
    let transient: Vec<usize> = (0..n).filter(|&i| reachable[i] && class_of[i] == usize::MAX).collect();
    let mut weight = vec![0.0; classes.len()];
    if class_of[start] != usize::MAX {
        weight[class_of[start]] = 1.0;
    } else {
        let t_pos = |state: usize| transient.iter().position(|&t| t == state);
        let m = transient.len();
        for (c, w) in weight.iter_mut().enumerate() {
            let mut a = vec![vec![0.0; m]; m];
            let mut b = vec![0.0; m];
            for (r, &i) in transient.iter().enumerate() {
                a[r][r] += 1.0;
                for (j, p) in chain.row(i) {
                    if let Some(col) = t_pos(j) {
                        a[r][col] -= p;
                    } else if class_of[j] == c {
                        b[r] += p;
                    }
                }
            }
            let x = gauss_solve(a, b)?;
            *w = x[t_pos(start).expect("start is transient")];
        }
    }
    let mut distribution = vec![0.0; n];
    for (c, members) in classes.iter().enumerate() {
        if weight[c] == 0.0 {
            continue;
        }
        let pi = class_stationary(chain, members)?;
        for (&i, &p) in members.iter().zip(&pi) {
            distribution[i] = weight[c] * p;
        }
    }
    let gain = distribution.iter().enumerate().map(|(i, &p)| p * chain.cost(i)).sum();
    let recurrent = (0..n).map(|i| class_of[i] != usize::MAX).collect();
    Ok(LongRun {
        gain,
        distribution,
        recurrent,
    })
}

fn power_iteration(chain: &SparseChain, start: usize) -> Result<LongRun> {
    const LAZY: f64 = 0.5;
    const MAX_STEPS: usize = 20_000_000;
    let n = chain.num_states();
    let mut mu = vec![0.0; n];
    mu[start] = 1.0;
    let mut next = vec![0.0; n];
    for _ in 0..MAX_STEPS {
        next.iter_mut().zip(&mu).for_each(|(d, &m)| *d = LAZY * m);
        for (i, &m) in mu.iter().enumerate() {
            if m != 0.0 {
                for (j, p) in chain.row(i) {
                    next[j] += (1.0 - LAZY) * m * p;
                }
            }
        }
        let change: f64 = next.iter().zip(&mu).map(|(a, b)| (a - b).abs()).sum();
        std::mem::swap(&mut mu, &mut next);
        if change < 1e-15 {
            let gain = mu.iter().enumerate().map(|(i, &p)| p * chain.cost(i)).sum();
            let recurrent = mu.iter().map(|&p| p > 1e-12).collect();
            return Ok(LongRun {
                gain,
                distribution: mu,
                recurrent,
            });
        }
    }
    Err(Error::NonConvergence {
        iterations: MAX_STEPS,
        context: "power iteration for the limiting distribution".into(),
    })
}
