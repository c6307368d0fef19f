//! Dense two-phase primal simplex on `min cᵀx, Ax = b, x ≥ 0` with Bland's rule.

const PIVOT_EPS: f64 = 1e-9;
const COST_EPS: f64 = 1e-9;
const FEASIBILITY_TOL: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct EqualityForm {
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum LpOutcome {
    Optimal {
        x: Vec<f64>,
        /// Simplex multipliers, one per equality row.
        duals: Vec<f64>,
        objective: f64,
    },
    Infeasible,
    Unbounded,
    Limit,
}

struct Tableau {
    rows: Vec<Vec<f64>>,
    basis: Vec<usize>,
    /// Reduced costs for every column, plus the negated objective in the last slot.
    cost_row: Vec<f64>,
    width: usize,
}

impl Tableau {
    fn rhs(&self, i: usize) -> f64 {
        self.rows[i][self.width]
    }

    fn price(&mut self, costs: &[f64]) {
        let mut row = costs.to_vec();
        row.push(0.0);
        for (i, &bi) in self.basis.iter().enumerate() {
            let cb = costs[bi];
            if cb != 0.0 {
                for (r, t) in row.iter_mut().zip(&self.rows[i]) {
                    *r -= cb * t;
                }
            }
        }
        self.cost_row = row;
    }

    fn pivot(&mut self, r: usize, e: usize) {
        let p = self.rows[r][e];
        for v in self.rows[r].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[e];
            if f != 0.0 {
                for (v, pv) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
                row[e] = 0.0;
            }
        }
        let f = self.cost_row[e];
        if f != 0.0 {
            for (v, pv) in self.cost_row.iter_mut().zip(&pivot_row) {
                *v -= f * pv;
            }
            self.cost_row[e] = 0.0;
        }
        self.basis[r] = e;
    }

    /// Runs Bland-rule pivots over columns `< allowed`.
    fn optimize(
        &mut self,
        allowed: usize,
        iterations: &mut u64,
        budget: u64,
    ) -> Result<(), LpOutcome> {
        loop {
            let Some(e) = (0..allowed).find(|&j| self.cost_row[j] < -COST_EPS) else {
                return Ok(());
            };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.rows.len() {
                let a = self.rows[i][e];
                if a > PIVOT_EPS {
                    let ratio = self.rhs(i) / a;
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((k, best)) => {
                            if ratio < best - 1e-12
                                || ((ratio - best).abs() <= 1e-12 && self.basis[i] < self.basis[k])
                            {
                                Some((i, ratio))
                            } else {
                                Some((k, best))
                            }
                        }
                    };
                }
            }
            let Some((r, _)) = leave else {
                return Err(LpOutcome::Unbounded);
            };
            if *iterations >= budget {
                return Err(LpOutcome::Limit);
            }
            *iterations += 1;
            self.pivot(r, e);
        }
    }
}

pub(crate) fn solve(ef: &EqualityForm, budget: u64, iterations: &mut u64) -> LpOutcome {
    let m = ef.b.len();
    let n = ef.c.len();
    let width = n + m;
    let mut signs = vec![1.0; m];
    let mut rows = Vec::with_capacity(m);
    for i in 0..m {
        let s = if ef.b[i] < 0.0 { -1.0 } else { 1.0 };
        signs[i] = s;
        let mut row = Vec::with_capacity(width + 1);
        row.extend(ef.a[i].iter().map(|v| s * v));
        row.extend((0..m).map(|k| if k == i { 1.0 } else { 0.0 }));
        row.push(s * ef.b[i]);
        rows.push(row);
    }
    let mut t = Tableau {
        rows,
        basis: (n..n + m).collect(),
        cost_row: Vec::new(),
        width,
    };

    // phase 1: minimise the sum of artificials
    let phase1: Vec<f64> = (0..width).map(|j| if j < n { 0.0 } else { 1.0 }).collect();
    t.price(&phase1);
    if let Err(o) = t.optimize(width, iterations, budget) {
        return match o {
            LpOutcome::Unbounded => unreachable!("phase 1 is bounded below by zero"),
            other => other,
        };
    }
    let scale = ef.b.iter().fold(1.0f64, |acc, v| acc.max(v.abs()));
    if -t.cost_row[width] > FEASIBILITY_TOL * scale {
        return LpOutcome::Infeasible;
    }
    // drive zero-level artificials out of the basis where possible
    for r in 0..m {
        if t.basis[r] >= n {
            if let Some(e) = (0..n).find(|&j| t.rows[r][j].abs() > PIVOT_EPS) {
                t.pivot(r, e);
            }
        }
    }

    // phase 2
    let mut phase2 = ef.c.clone();
    phase2.resize(width, 0.0);
    t.price(&phase2);
    if let Err(o) = t.optimize(n, iterations, budget) {
        return o;
    }

    let mut x = vec![0.0; n];
    for (i, &bi) in t.basis.iter().enumerate() {
        if bi < n {
            let v = t.rhs(i);
            x[bi] = if v.abs() < 1e-12 { 0.0 } else { v };
        }
    }
    // reduced cost of artificial k is -y_k in the sign-adjusted system
    let duals = (0..m).map(|k| -t.cost_row[n + k] * signs[k]).collect();
    let objective = ef.c.iter().zip(&x).map(|(c, x)| c * x).sum();
    LpOutcome::Optimal {
        x,
        duals,
        objective,
    }
}
