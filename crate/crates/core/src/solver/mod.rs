//! Exact desk-scale solving: a two-phase simplex for [`StandardFormLP`] and
//! best-first branch-and-bound for models with integer variables.

mod branch;
mod simplex;

use std::time::Instant;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::model::{LinearModel, StandardFormLP};

pub use branch::solve_milp;

/// Feasibility tolerance for constraint rows and variable bounds.
pub const FEASIBILITY_TOL: f64 = 1e-7;
/// Distance from the nearest integer below which a value counts as integral.
pub const INTEGRALITY_TOL: f64 = 1e-6;
/// Tolerance for comparing objective values.
pub const OBJECTIVE_TOL: f64 = 1e-9;

pub const DEFAULT_ITERATION_LIMIT: u64 = 100_000;
pub const DEFAULT_NODE_LIMIT: u64 = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    /// Iteration or node budget exhausted.
    Limit,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveStats {
    pub iterations: u64,
    pub nodes: u64,
    pub wall_time_us: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub status: SolveStatus,
    /// Objective in the model's own sense; absent when no point was found.
    pub objective: Option<f64>,
    pub assignment: IndexMap<String, f64>,
    pub stats: SolveStats,
}

impl Solution {
    fn without_point(status: SolveStatus, stats: SolveStats) -> Self {
        Solution {
            status,
            objective: None,
            assignment: IndexMap::new(),
            stats,
        }
    }

    /// Deterministic plain-text rendering (no timing data).
    pub fn summary(&self) -> String {
        let mut out = format!("{:?}", self.status);
        if let Some(obj) = self.objective {
            out.push_str(&format!(" objective {}", crate::model::format_number(obj)));
        }
        for (name, v) in &self.assignment {
            out.push_str(&format!("\n{name} = {}", crate::model::format_number(*v)));
        }
        out
    }
}

/// Pluggable backend seam. Only the built-in branch-and-bound ships.
pub trait ModelSolver: Send + Sync {
    fn solve(&self, model: &LinearModel) -> Solution;
}

#[derive(Debug, Clone, Copy)]
pub struct BranchAndBound {
    pub node_limit: u64,
    pub iteration_limit: u64,
}

impl Default for BranchAndBound {
    fn default() -> Self {
        BranchAndBound {
            node_limit: DEFAULT_NODE_LIMIT,
            iteration_limit: DEFAULT_ITERATION_LIMIT,
        }
    }
}

impl ModelSolver for BranchAndBound {
    fn solve(&self, model: &LinearModel) -> Solution {
        branch::solve_milp_with(model, self.node_limit, self.iteration_limit)
    }
}

/// How an original column is recovered from the nonnegative columns.
#[derive(Debug, Clone, Copy)]
enum ColumnMap {
    /// `x = offset + p`
    Shift { col: usize, offset: f64 },
    /// `x = offset - p`
    Mirror { col: usize, offset: f64 },
    /// `x = p - q`
    Split { pos: usize, neg: usize },
}

#[derive(Debug)]
pub(crate) struct Lowered {
    ef: simplex::EqualityForm,
    columns: Vec<ColumnMap>,
    objective_offset: f64,
}

impl Lowered {
    fn recover(&self, y: &[f64]) -> Vec<f64> {
        self.columns
            .iter()
            .map(|m| match *m {
                ColumnMap::Shift { col, offset } => offset + y[col],
                ColumnMap::Mirror { col, offset } => offset - y[col],
                ColumnMap::Split { pos, neg } => y[pos] - y[neg],
            })
            .collect()
    }
}

/// Rewrites `lp` with the given variable bounds into equality form.
/// Returns `None` when some variable has an empty domain.
pub(crate) fn lower(lp: &StandardFormLP, l_x: &[f64], u_x: &[f64]) -> Option<Lowered> {
    let mut ncols = 0;
    let mut columns = Vec::with_capacity(lp.n);
    // extra rows for finite boxes: (col, width)
    let mut box_rows = Vec::new();
    for j in 0..lp.n {
        let (l, u) = (l_x[j], u_x[j]);
        if l > u {
            return None;
        }
        let map = if l.is_finite() {
            let col = ncols;
            ncols += 1;
            if u.is_finite() {
                box_rows.push((col, u - l));
            }
            ColumnMap::Shift { col, offset: l }
        } else if u.is_finite() {
            let col = ncols;
            ncols += 1;
            ColumnMap::Mirror { col, offset: u }
        } else {
            ncols += 2;
            ColumnMap::Split {
                pos: ncols - 2,
                neg: ncols - 1,
            }
        };
        columns.push(map);
    }

    // each row as (coefficients over structural columns, constant)
    let substitute = |row: &[(usize, f64)]| {
        let mut coeffs = vec![0.0; ncols];
        let mut constant = 0.0;
        for &(j, a) in row {
            match columns[j] {
                ColumnMap::Shift { col, offset } => {
                    coeffs[col] += a;
                    constant += a * offset;
                }
                ColumnMap::Mirror { col, offset } => {
                    coeffs[col] -= a;
                    constant += a * offset;
                }
                ColumnMap::Split { pos, neg } => {
                    coeffs[pos] += a;
                    coeffs[neg] -= a;
                }
            }
        }
        (coeffs, constant)
    };

    // (coefficients, rhs, slack sign: 0 none, +1 `<=`, -1 `>=`)
    let mut equations: Vec<(Vec<f64>, f64, f64)> = Vec::new();
    for i in 0..lp.m {
        let (coeffs, k) = substitute(&lp.rows[i]);
        let (l, u) = (lp.l_s[i], lp.u_s[i]);
        if l == u {
            equations.push((coeffs, l - k, 0.0));
            continue;
        }
        if l.is_finite() {
            equations.push((coeffs.clone(), l - k, -1.0));
        }
        if u.is_finite() {
            equations.push((coeffs, u - k, 1.0));
        }
    }
    for &(col, width) in &box_rows {
        let mut coeffs = vec![0.0; ncols];
        coeffs[col] = 1.0;
        equations.push((coeffs, width, 1.0));
    }

    let slacks = equations.iter().filter(|e| e.2 != 0.0).count();
    let total = ncols + slacks;
    let mut a = Vec::with_capacity(equations.len());
    let mut b = Vec::with_capacity(equations.len());
    let mut next_slack = ncols;
    for (mut coeffs, rhs, slack) in equations {
        coeffs.resize(total, 0.0);
        if slack != 0.0 {
            coeffs[next_slack] = slack;
            next_slack += 1;
        }
        a.push(coeffs);
        b.push(rhs);
    }
    let (obj, objective_offset) = substitute(
        &lp.c
            .iter()
            .copied()
            .enumerate()
            .filter(|(_, c)| *c != 0.0)
            .collect::<Vec<_>>(),
    );
    let mut c = obj;
    c.resize(total, 0.0);
    Some(Lowered {
        ef: simplex::EqualityForm { a, b, c },
        columns,
        objective_offset,
    })
}

/// Outcome of one LP relaxation in min orientation.
#[derive(Debug, Clone)]
pub(crate) enum Relaxation {
    Optimal { x: Vec<f64>, value: f64 },
    Infeasible,
    Unbounded,
    Limit,
}

pub(crate) fn relax(
    lp: &StandardFormLP,
    l_x: &[f64],
    u_x: &[f64],
    budget: u64,
    iterations: &mut u64,
) -> Relaxation {
    let Some(lowered) = lower(lp, l_x, u_x) else {
        return Relaxation::Infeasible;
    };
    let remaining = budget.saturating_sub(*iterations);
    let mut used = 0;
    let outcome = simplex::solve(&lowered.ef, remaining, &mut used);
    *iterations += used;
    match outcome {
        simplex::LpOutcome::Optimal { x, objective, .. } => Relaxation::Optimal {
            x: lowered.recover(&x),
            value: objective + lowered.objective_offset,
        },
        simplex::LpOutcome::Infeasible => Relaxation::Infeasible,
        simplex::LpOutcome::Unbounded => Relaxation::Unbounded,
        simplex::LpOutcome::Limit => Relaxation::Limit,
    }
}

pub(crate) fn to_solution(
    lp: &StandardFormLP,
    status: SolveStatus,
    point: Option<&[f64]>,
    stats: SolveStats,
) -> Solution {
    match point {
        None => Solution::without_point(status, stats),
        Some(x) => Solution {
            status,
            objective: Some(lp.original_objective(x)),
            assignment: lp
                .var_names
                .iter()
                .cloned()
                .zip(x.iter().copied())
                .collect(),
            stats,
        },
    }
}

/// Solves the continuous problem; integrality is ignored.
pub fn solve_lp(lp: &StandardFormLP, iteration_limit: u64) -> Solution {
    let start = Instant::now();
    let mut iterations = 0;
    let outcome = relax(lp, &lp.l_x, &lp.u_x, iteration_limit, &mut iterations);
    let stats = SolveStats {
        iterations,
        nodes: 0,
        wall_time_us: start.elapsed().as_micros() as u64,
    };
    match outcome {
        Relaxation::Optimal { x, .. } => to_solution(lp, SolveStatus::Optimal, Some(&x), stats),
        Relaxation::Infeasible => to_solution(lp, SolveStatus::Infeasible, None, stats),
        Relaxation::Unbounded => to_solution(lp, SolveStatus::Unbounded, None, stats),
        Relaxation::Limit => to_solution(lp, SolveStatus::Limit, None, stats),
    }
}

/// Primal and dual objective of the LP in equality form, for certificate checks.
pub fn lp_duality_pair(lp: &StandardFormLP, iteration_limit: u64) -> Option<(f64, f64)> {
    let lowered = lower(lp, &lp.l_x, &lp.u_x)?;
    let mut it = 0;
    match simplex::solve(&lowered.ef, iteration_limit, &mut it) {
        simplex::LpOutcome::Optimal {
            duals, objective, ..
        } => {
            let dual: f64 = duals.iter().zip(&lowered.ef.b).map(|(y, b)| y * b).sum();
            // dual feasibility: reduced costs must be nonnegative
            let ef = &lowered.ef;
            for j in 0..ef.c.len() {
                let reduced = ef.c[j] - (0..ef.b.len()).map(|i| duals[i] * ef.a[i][j]).sum::<f64>();
                if reduced < -1e-7 {
                    return None;
                }
            }
            Some((
                objective + lowered.objective_offset,
                dual + lowered.objective_offset,
            ))
        }
        _ => None,
    }
}

/// Largest violation of rows and bounds by `x`.
pub fn max_violation(lp: &StandardFormLP, x: &[f64]) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..lp.m {
        let act = lp.row_activity(i, x);
        worst = worst.max(lp.l_s[i] - act).max(act - lp.u_s[i]);
    }
    for j in 0..lp.n {
        worst = worst.max(lp.l_x[j] - x[j]).max(x[j] - lp.u_x[j]);
    }
    worst
}
