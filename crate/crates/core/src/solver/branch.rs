//! Best-first branch-and-bound over LP relaxations.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::Instant;

use super::{
    relax, to_solution, Relaxation, Solution, SolveStats, SolveStatus, DEFAULT_ITERATION_LIMIT,
    INTEGRALITY_TOL, OBJECTIVE_TOL,
};
use crate::model::{to_standard_form, LinearModel};

struct Node {
    bound: f64,
    seq: u64,
    l_x: Vec<f64>,
    u_x: Vec<f64>,
    x: Vec<f64>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    // max-heap: reverse so the smallest bound (then oldest node) pops first
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

/// Index of the most fractional integer variable, ties to the lowest ordinal.
fn branching_variable(x: &[f64], integer: &[bool]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (j, (&v, &is_int)) in x.iter().zip(integer).enumerate() {
        if !is_int {
            continue;
        }
        let frac = (v - v.round()).abs();
        if frac > INTEGRALITY_TOL && best.is_none_or(|(_, f)| frac > f + 1e-12) {
            best = Some((j, frac));
        }
    }
    best.map(|(j, _)| j)
}

/// Solves `model` honouring integrality, exploring at most `node_limit` nodes.
pub fn solve_milp(model: &LinearModel, node_limit: u64) -> Solution {
    solve_milp_with(model, node_limit, DEFAULT_ITERATION_LIMIT)
}

pub(crate) fn solve_milp_with(
    model: &LinearModel,
    node_limit: u64,
    iteration_limit: u64,
) -> Solution {
    let start = Instant::now();
    let lp = to_standard_form(model);
    let integer = model.integer_mask();
    let mut iterations = 0u64;
    let mut nodes = 0u64;
    let stats = |iterations, nodes, start: Instant| SolveStats {
        iterations,
        nodes,
        wall_time_us: start.elapsed().as_micros() as u64,
    };

    let mut heap = BinaryHeap::new();
    let mut seq = 0u64;
    match relax(&lp, &lp.l_x, &lp.u_x, iteration_limit, &mut iterations) {
        Relaxation::Optimal { x, value } => heap.push(Node {
            bound: value,
            seq,
            l_x: lp.l_x.clone(),
            u_x: lp.u_x.clone(),
            x,
        }),
        Relaxation::Infeasible => {
            return to_solution(
                &lp,
                SolveStatus::Infeasible,
                None,
                stats(iterations, 1, start),
            )
        }
        Relaxation::Unbounded => {
            return to_solution(
                &lp,
                SolveStatus::Unbounded,
                None,
                stats(iterations, 1, start),
            )
        }
        Relaxation::Limit => {
            return to_solution(&lp, SolveStatus::Limit, None, stats(iterations, 1, start))
        }
    }

    let mut incumbent: Option<(f64, Vec<f64>)> = None;
    let mut exhausted = false;
    while let Some(node) = heap.pop() {
        if let Some((best, _)) = &incumbent {
            if node.bound >= best - OBJECTIVE_TOL {
                continue;
            }
        }
        if nodes >= node_limit {
            exhausted = true;
            break;
        }
        nodes += 1;
        let Some(j) = branching_variable(&node.x, &integer) else {
            let mut x = node.x;
            for (v, &is_int) in x.iter_mut().zip(&integer) {
                if is_int {
                    *v = v.round();
                }
            }
            let value: f64 = lp.c.iter().zip(&x).map(|(c, x)| c * x).sum();
            if incumbent
                .as_ref()
                .is_none_or(|(best, _)| value < best - OBJECTIVE_TOL)
            {
                incumbent = Some((value, x));
            }
            continue;
        };
        let v = node.x[j];
        let children = [
            (node.l_x[j], v.floor().min(node.u_x[j])),
            (v.ceil().max(node.l_x[j]), node.u_x[j]),
        ];
        for (lo, hi) in children {
            let mut l_x = node.l_x.clone();
            let mut u_x = node.u_x.clone();
            l_x[j] = lo;
            u_x[j] = hi;
            match relax(&lp, &l_x, &u_x, iteration_limit, &mut iterations) {
                Relaxation::Optimal { x, value } => {
                    if incumbent
                        .as_ref()
                        .is_none_or(|(best, _)| value < best - OBJECTIVE_TOL)
                    {
                        seq += 1;
                        heap.push(Node {
                            bound: value,
                            seq,
                            l_x,
                            u_x,
                            x,
                        });
                    }
                }
                Relaxation::Infeasible => {}
                // a restriction of a bounded relaxation stays bounded
                Relaxation::Unbounded => {}
                Relaxation::Limit => {
                    exhausted = true;
                }
            }
        }
        if exhausted {
            break;
        }
    }

    let stats = stats(iterations, nodes, start);
    match (incumbent, exhausted) {
        (Some((_, x)), false) => to_solution(&lp, SolveStatus::Optimal, Some(&x), stats),
        (Some((_, x)), true) => to_solution(&lp, SolveStatus::Limit, Some(&x), stats),
        (None, false) => to_solution(&lp, SolveStatus::Infeasible, None, stats),
        (None, true) => to_solution(&lp, SolveStatus::Limit, None, stats),
    }
}
