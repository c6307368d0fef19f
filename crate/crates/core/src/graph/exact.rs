//! Exact GED by depth-first branch-and-bound over kind-respecting matchings.
//!
//! Variables are assigned first so that every edge cost is known the moment
//! its constraint is assigned.

use super::{
    edge_edits, evaluate, ged_named, BipartiteGraph, GedReport, GraphError, Indexed, VertexKind,
    CONSTRAINT_ATTRS, VARIABLE_ATTRS,
};

pub const DEFAULT_SIZE_CAP: usize = 8;

struct Search<'a> {
    u: &'a Indexed<'a>,
    o: &'a Indexed<'a>,
    vmap: Vec<Option<usize>>,
    cmap: Vec<Option<usize>>,
    v_used: Vec<bool>,
    c_used: Vec<bool>,
    best: u64,
    best_maps: (Vec<Option<usize>>, Vec<Option<usize>>),
}

/// `Σ min(attr, cheapest match)` over pending vertices plus the surplus of
/// free original vertices, or the plain surplus bound if larger.
fn vertex_bound(
    pending: impl Iterator<Item = usize>,
    free: &[usize],
    attr: u64,
    cost: impl Fn(usize, usize) -> u64,
) -> u64 {
    let mut sum = 0;
    let mut count = 0;
    for a in pending {
        count += 1;
        sum += free.iter().map(|&k| cost(a, k)).fold(attr, u64::min);
    }
    let surplus_o = free.len().saturating_sub(count) as u64;
    let surplus_u = count.saturating_sub(free.len()) as u64;
    (sum + surplus_o * attr).max((surplus_u + surplus_o) * attr)
}

impl Search<'_> {
    fn free(used: &[bool]) -> Vec<usize> {
        (0..used.len()).filter(|k| !used[*k]).collect()
    }

    fn constraint_bound(&self, from: usize) -> u64 {
        let free = Self::free(&self.c_used);
        let vb = vertex_bound(from..self.cmap.len(), &free, CONSTRAINT_ATTRS, |i, k| {
            self.u.constraint_cost(i, self.o, k)
        });
        let deg_u: usize = (from..self.cmap.len()).map(|i| self.u.adj[i].len()).sum();
        let deg_o: usize = free.iter().map(|&k| self.o.adj[k].len()).sum();
        vb + deg_u.abs_diff(deg_o) as u64
    }

    fn lower_bound_vars(&self, from: usize) -> u64 {
        let free = Self::free(&self.v_used);
        let vb = vertex_bound(from..self.vmap.len(), &free, VARIABLE_ATTRS, |j, k| {
            self.u.variable_cost(j, self.o, k)
        });
        vb + self.constraint_bound(0)
    }

    fn vars(&mut self, j: usize, cost: u64) {
        if cost + self.lower_bound_vars(j) >= self.best {
            return;
        }
        if j == self.vmap.len() {
            let leftover = self.v_used.iter().filter(|u| !**u).count() as u64;
            self.cons(0, cost + leftover * VARIABLE_ATTRS);
            return;
        }
        let mut options: Vec<(u64, Option<usize>)> = Self::free(&self.v_used)
            .into_iter()
            .map(|k| (self.u.variable_cost(j, self.o, k), Some(k)))
            .collect();
        options.push((VARIABLE_ATTRS, None));
        options.sort();
        for (step, k) in options {
            self.vmap[j] = k;
            if let Some(k) = k {
                self.v_used[k] = true;
            }
            self.vars(j + 1, cost + step);
            if let Some(k) = k {
                self.v_used[k] = false;
            }
        }
        self.vmap[j] = None;
    }

    fn cons(&mut self, i: usize, cost: u64) {
        if cost + self.constraint_bound(i) >= self.best {
            return;
        }
        if i == self.cmap.len() {
            let leftover: u64 = (0..self.c_used.len())
                .filter(|k| !self.c_used[*k])
                .map(|k| CONSTRAINT_ATTRS + self.o.adj[k].len() as u64)
                .sum();
            let total = cost + leftover;
            if total < self.best {
                self.best = total;
                self.best_maps = (self.cmap.clone(), self.vmap.clone());
            }
            return;
        }
        let mut options: Vec<(u64, Option<usize>)> = Self::free(&self.c_used)
            .into_iter()
            .map(|k| {
                let (ins, del, sub) = edge_edits(self.u, i, self.o, k, &self.vmap);
                (
                    self.u.constraint_cost(i, self.o, k) + ins + del + sub,
                    Some(k),
                )
            })
            .collect();
        options.push((CONSTRAINT_ATTRS + self.u.adj[i].len() as u64, None));
        options.sort();
        for (step, k) in options {
            self.cmap[i] = k;
            if let Some(k) = k {
                self.c_used[k] = true;
            }
            self.cons(i + 1, cost + step);
            if let Some(k) = k {
                self.c_used[k] = false;
            }
        }
        self.cmap[i] = None;
    }
}

/// Minimum GED over all kind-respecting vertex matchings. Names play no
/// part in the cost.
pub fn ged_exact(
    updated: &BipartiteGraph,
    original: &BipartiteGraph,
    size_cap: usize,
) -> Result<GedReport, GraphError> {
    for g in [updated, original] {
        for kind in [VertexKind::Constraint, VertexKind::Variable] {
            let count = g.vertex_count(kind);
            if count > size_cap {
                return Err(GraphError::SizeCapExceeded {
                    kind,
                    count,
                    cap: size_cap,
                });
            }
        }
    }
    let start = ged_named(updated, original)?;
    let (u, o) = (Indexed::new(updated), Indexed::new(original));
    let mut s = Search {
        u: &u,
        o: &o,
        vmap: vec![None; updated.variable_vertices.len()],
        cmap: vec![None; updated.constraint_vertices.len()],
        v_used: vec![false; original.variable_vertices.len()],
        c_used: vec![false; original.constraint_vertices.len()],
        best: start.ged,
        best_maps: (Vec::new(), Vec::new()),
    };
    s.vars(0, 0);
    if s.best == start.ged {
        return Ok(start);
    }
    let (cmap, vmap) = s.best_maps;
    let report = evaluate(&u, &o, &cmap, &vmap);
    debug_assert_eq!(report.ged, s.best);
    Ok(report)
}
