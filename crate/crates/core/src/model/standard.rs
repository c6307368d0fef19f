use super::{LinearModel, Sense};

/// Sparse row of the constraint matrix: `(column, coefficient)` by column.
pub type SparseRow = Vec<(usize, f64)>;

/// `min cᵀx  s.t.  l_s ≤ Ax ≤ u_s,  l_x ≤ x ≤ u_x`.
///
/// Integrality is not part of this form; see [`LinearModel::integer_mask`].
#[derive(Debug, Clone, PartialEq)]
pub struct StandardFormLP {
    pub n: usize,
    pub m: usize,
    pub c: Vec<f64>,
    pub rows: Vec<SparseRow>,
    pub l_s: Vec<f64>,
    pub u_s: Vec<f64>,
    pub l_x: Vec<f64>,
    pub u_x: Vec<f64>,
    /// The source model maximized; `c` holds the negated objective.
    pub negated_objective: bool,
    pub var_names: Vec<String>,
    pub con_names: Vec<String>,
}

impl StandardFormLP {
    /// Objective value of `x` in the source model's sense.
    pub fn original_objective(&self, x: &[f64]) -> f64 {
        let v: f64 = self.c.iter().zip(x).map(|(c, x)| c * x).sum();
        if self.negated_objective {
            -v
        } else {
            v
        }
    }

    pub fn row_activity(&self, i: usize, x: &[f64]) -> f64 {
        self.rows[i].iter().map(|&(j, a)| a * x[j]).sum()
    }
}

/// Flips a row so its first nonzero coefficient is positive.
pub(crate) fn normalize_row(row: &mut SparseRow, lower: &mut f64, upper: &mut f64) {
    if let Some(&(_, first)) = row.first() {
        if first < 0.0 {
            for (_, a) in row.iter_mut() {
                *a = -*a;
            }
            let (l, u) = (*lower, *upper);
            *lower = -u;
            *upper = -l;
        }
    }
}

pub fn to_standard_form(model: &LinearModel) -> StandardFormLP {
    let sign = match model.sense {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };
    let index = |name: &str| {
        model
            .variables
            .iter()
            .position(|v| v.name == name)
            .expect("constraint term references a declared variable")
    };
    let mut rows = Vec::with_capacity(model.constraints.len());
    let mut l_s = Vec::with_capacity(model.constraints.len());
    let mut u_s = Vec::with_capacity(model.constraints.len());
    for con in &model.constraints {
        let mut row: SparseRow = con
            .terms
            .iter()
            .filter(|(_, a)| *a != 0.0)
            .map(|(n, a)| (index(n), *a))
            .collect();
        row.sort_by_key(|&(j, _)| j);
        let (mut l, mut u) = (con.lower, con.upper);
        normalize_row(&mut row, &mut l, &mut u);
        rows.push(row);
        l_s.push(l);
        u_s.push(u);
    }
    StandardFormLP {
        n: model.variables.len(),
        m: model.constraints.len(),
        c: model
            .variables
            .iter()
            .map(|v| {
                if v.objective_coeff == 0.0 {
                    0.0
                } else {
                    sign * v.objective_coeff
                }
            })
            .collect(),
        rows,
        l_s,
        u_s,
        l_x: model.variables.iter().map(|v| v.lower).collect(),
        u_x: model.variables.iter().map(|v| v.upper).collect(),
        negated_objective: model.sense == Sense::Maximize,
        var_names: model.variables.iter().map(|v| v.name.clone()).collect(),
        con_names: model.constraints.iter().map(|c| c.name.clone()).collect(),
    }
}
