//! Attributed bipartite graphs of standard-form LPs and the graph edit
//! distance between them.
//!
//! Constraint vertices carry `[l_s, u_s]`, variable vertices `[l_x, u_x, c]`
//! and every edge carries its coefficient. An edit costs one unit per
//! attribute touched, so inserting or deleting a constraint costs 2, a
//! variable 3 and an edge 1.

mod exact;

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{to_standard_form, LinearModel, StandardFormLP};

pub use exact::{ged_exact, DEFAULT_SIZE_CAP};

/// Attribute count of a constraint vertex.
pub const CONSTRAINT_ATTRS: u64 = 2;
/// Attribute count of a variable vertex.
pub const VARIABLE_ATTRS: u64 = 3;
/// Attribute count of an edge.
pub const EDGE_ATTRS: u64 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintVertex {
    pub name: String,
    #[serde(with = "crate::serde_ext")]
    pub lower: f64,
    #[serde(with = "crate::serde_ext")]
    pub upper: f64,
}

impl ConstraintVertex {
    fn attrs(&self) -> [f64; 2] {
        [self.lower, self.upper]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariableVertex {
    pub name: String,
    #[serde(with = "crate::serde_ext")]
    pub lower: f64,
    #[serde(with = "crate::serde_ext")]
    pub upper: f64,
    pub cost: f64,
}

impl VariableVertex {
    fn attrs(&self) -> [f64; 3] {
        [self.lower, self.upper, self.cost]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub constraint: String,
    pub variable: String,
    pub coefficient: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BipartiteGraph {
    pub constraint_vertices: Vec<ConstraintVertex>,
    pub variable_vertices: Vec<VariableVertex>,
    pub edges: Vec<Edge>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("duplicate {kind} vertex `{name}`")]
    DuplicateName { kind: VertexKind, name: String },
    #[error(
        "edge ({constraint}, {variable}) has a missing endpoint, a duplicate or a zero coefficient"
    )]
    BadEdge {
        constraint: String,
        variable: String,
    },
    #[error("{count} {kind} vertices exceed the exact-search cap of {cap}")]
    SizeCapExceeded {
        kind: VertexKind,
        count: usize,
        cap: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VertexKind {
    Constraint,
    Variable,
}

impl std::fmt::Display for VertexKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            VertexKind::Constraint => "constraint",
            VertexKind::Variable => "variable",
        })
    }
}

/// Edit counts. Inserts are present only in the updated graph, deletes only
/// in the original.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EditBreakdown {
    pub constraint_insert: u64,
    pub constraint_delete: u64,
    /// Mismatched attributes summed over matched constraint pairs.
    pub constraint_substituted_attrs: u64,
    pub variable_substituted_attrs: u64,
    pub variable_insert: u64,
    pub variable_delete: u64,
    pub edge_insert: u64,
    pub edge_delete: u64,
    /// Matched edges whose coefficients differ.
    pub edge_substituted: u64,
}

impl EditBreakdown {
    /// Sum of the counts weighted by their unit costs.
    pub fn weighted_total(&self) -> u64 {
        CONSTRAINT_ATTRS * (self.constraint_insert + self.constraint_delete)
            + VARIABLE_ATTRS * (self.variable_insert + self.variable_delete)
            + EDGE_ATTRS * (self.edge_insert + self.edge_delete)
            + self.constraint_substituted_attrs
            + self.variable_substituted_attrs
            + self.edge_substituted
    }
}

/// One entry of the vertex correspondence; `None` stands for the empty vertex.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VertexMatch {
    pub kind: VertexKind,
    pub updated: Option<String>,
    pub original: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GedReport {
    pub ged: u64,
    pub size_original: u64,
    pub size_updated: u64,
    pub nged: f64,
    pub breakdown: EditBreakdown,
    pub matching: Vec<VertexMatch>,
}

impl GedReport {
    /// `GED=6 NGED=0.300`
    pub fn headline(&self) -> String {
        format!("GED={} NGED={:.3}", self.ged, self.nged)
    }

    /// Multi-line text used in prompts and on the command line.
    pub fn summary(&self) -> String {
        let b = &self.breakdown;
        let mut out = self.headline();
        let _ = write!(
            out,
            "\ngraph size: original {}, updated {}",
            self.size_original, self.size_updated
        );
        let rows = [
            ("constraints inserted", b.constraint_insert),
            ("constraints deleted", b.constraint_delete),
            (
                "constraint attributes changed",
                b.constraint_substituted_attrs,
            ),
            ("variables inserted", b.variable_insert),
            ("variables deleted", b.variable_delete),
            ("variable attributes changed", b.variable_substituted_attrs),
            ("edges inserted", b.edge_insert),
            ("edges deleted", b.edge_delete),
            ("edge coefficients changed", b.edge_substituted),
        ];
        for (label, count) in rows {
            if count > 0 {
                let _ = write!(out, "\n{label}: {count}");
            }
        }
        out
    }
}

impl BipartiteGraph {
    pub fn vertex_count(&self, kind: VertexKind) -> usize {
        match kind {
            VertexKind::Constraint => self.constraint_vertices.len(),
            VertexKind::Variable => self.variable_vertices.len(),
        }
    }

    /// Checks name uniqueness per kind and the edge invariants.
    pub fn validate(&self) -> Result<(), GraphError> {
        let mut cons = HashSet::new();
        for v in &self.constraint_vertices {
            if !cons.insert(v.name.as_str()) {
                return Err(GraphError::DuplicateName {
                    kind: VertexKind::Constraint,
                    name: v.name.clone(),
                });
            }
        }
        let mut vars = HashSet::new();
        for v in &self.variable_vertices {
            if !vars.insert(v.name.as_str()) {
                return Err(GraphError::DuplicateName {
                    kind: VertexKind::Variable,
                    name: v.name.clone(),
                });
            }
        }
        let mut pairs = HashSet::new();
        for e in &self.edges {
            let ok = cons.contains(e.constraint.as_str())
                && vars.contains(e.variable.as_str())
                && e.coefficient != 0.0
                && pairs.insert((e.constraint.as_str(), e.variable.as_str()));
            if !ok {
                return Err(GraphError::BadEdge {
                    constraint: e.constraint.clone(),
                    variable: e.variable.clone(),
                });
            }
        }
        Ok(())
    }
}

pub fn build_graph(lp: &StandardFormLP) -> BipartiteGraph {
    let constraint_vertices = (0..lp.m)
        .map(|i| ConstraintVertex {
            name: lp.con_names[i].clone(),
            lower: lp.l_s[i],
            upper: lp.u_s[i],
        })
        .collect();
    let variable_vertices = (0..lp.n)
        .map(|j| VariableVertex {
            name: lp.var_names[j].clone(),
            lower: lp.l_x[j],
            upper: lp.u_x[j],
            cost: lp.c[j],
        })
        .collect();
    let edges = lp
        .rows
        .iter()
        .enumerate()
        .flat_map(|(i, row)| {
            row.iter()
                .filter(|(_, a)| *a != 0.0)
                .map(move |&(j, a)| Edge {
                    constraint: lp.con_names[i].clone(),
                    variable: lp.var_names[j].clone(),
                    coefficient: a,
                })
        })
        .collect();
    BipartiteGraph {
        constraint_vertices,
        variable_vertices,
        edges,
    }
}

/// Total attribute count `|E| + 2|S| + 3|X|`.
pub fn graph_size(g: &BipartiteGraph) -> u64 {
    EDGE_ATTRS * g.edges.len() as u64
        + CONSTRAINT_ATTRS * g.constraint_vertices.len() as u64
        + VARIABLE_ATTRS * g.variable_vertices.len() as u64
}

/// Two attributes match within a relative tolerance of 1e-9; infinities
/// match only themselves.
pub fn attrs_match(a: f64, b: f64) -> bool {
    if a.is_infinite() || b.is_infinite() {
        return a == b;
    }
    (a - b).abs() <= 1e-9 * 1f64.max(a.abs()).max(b.abs())
}

fn mismatches<const N: usize>(a: [f64; N], b: [f64; N]) -> u64 {
    a.iter()
        .zip(b)
        .filter(|(x, y)| !attrs_match(**x, *y))
        .count() as u64
}

/// Index form shared by the named and exact matchers.
#[derive(Debug)]
pub(crate) struct Indexed<'g> {
    pub g: &'g BipartiteGraph,
    /// Per constraint: `(variable index, coefficient)`.
    pub adj: Vec<Vec<(usize, f64)>>,
}

impl<'g> Indexed<'g> {
    pub fn new(g: &'g BipartiteGraph) -> Self {
        let var_index: HashMap<&str, usize> = g
            .variable_vertices
            .iter()
            .enumerate()
            .map(|(j, v)| (v.name.as_str(), j))
            .collect();
        let con_index: HashMap<&str, usize> = g
            .constraint_vertices
            .iter()
            .enumerate()
            .map(|(i, v)| (v.name.as_str(), i))
            .collect();
        let mut adj = vec![Vec::new(); g.constraint_vertices.len()];
        for e in &g.edges {
            adj[con_index[e.constraint.as_str()]]
                .push((var_index[e.variable.as_str()], e.coefficient));
        }
        Indexed { g, adj }
    }

    pub fn constraint_cost(&self, i: usize, other: &Indexed, k: usize) -> u64 {
        mismatches(
            self.g.constraint_vertices[i].attrs(),
            other.g.constraint_vertices[k].attrs(),
        )
    }

    pub fn variable_cost(&self, j: usize, other: &Indexed, k: usize) -> u64 {
        mismatches(
            self.g.variable_vertices[j].attrs(),
            other.g.variable_vertices[k].attrs(),
        )
    }
}

/// Edge edits between updated constraint `i` and original constraint `k`
/// under the variable map `vmap` (updated → original).
pub(crate) fn edge_edits(
    u: &Indexed,
    i: usize,
    o: &Indexed,
    k: usize,
    vmap: &[Option<usize>],
) -> (u64, u64, u64) {
    let (mut insert, mut substituted, mut matched) = (0, 0, 0);
    for &(j, a) in &u.adj[i] {
        let partner = vmap[j].and_then(|jo| o.adj[k].iter().find(|&&(v, _)| v == jo));
        match partner {
            Some(&(_, b)) => {
                matched += 1;
                if !attrs_match(a, b) {
                    substituted += 1;
                }
            }
            None => insert += 1,
        }
    }
    let delete = o.adj[k].len() as u64 - matched;
    (insert, delete, substituted)
}

/// Edit count of a kind-respecting matching, without the report.
pub(crate) fn matching_cost(
    u: &Indexed,
    o: &Indexed,
    cmap: &[Option<usize>],
    vmap: &[Option<usize>],
) -> u64 {
    let mut total = 0;
    let mut v_matched = 0;
    for (j, m) in vmap.iter().enumerate() {
        total += match *m {
            Some(k) => {
                v_matched += 1;
                u.variable_cost(j, o, k)
            }
            None => VARIABLE_ATTRS,
        };
    }
    total += (o.g.variable_vertices.len() as u64 - v_matched) * VARIABLE_ATTRS;
    let mut c_used = vec![false; o.g.constraint_vertices.len()];
    for (i, m) in cmap.iter().enumerate() {
        total += match *m {
            Some(k) => {
                c_used[k] = true;
                let (ins, del, sub) = edge_edits(u, i, o, k, vmap);
                u.constraint_cost(i, o, k) + (ins + del + sub) * EDGE_ATTRS
            }
            None => CONSTRAINT_ATTRS + u.adj[i].len() as u64 * EDGE_ATTRS,
        };
    }
    for (k, used) in c_used.iter().enumerate() {
        if !used {
            total += CONSTRAINT_ATTRS + o.adj[k].len() as u64 * EDGE_ATTRS;
        }
    }
    total
}

/// Builds the full report for a given kind-respecting matching.
pub(crate) fn evaluate(
    u: &Indexed,
    o: &Indexed,
    cmap: &[Option<usize>],
    vmap: &[Option<usize>],
) -> GedReport {
    let mut b = EditBreakdown::default();
    let mut matching = Vec::new();
    let mut c_used = vec![false; o.g.constraint_vertices.len()];
    let mut v_used = vec![false; o.g.variable_vertices.len()];

    for (j, m) in vmap.iter().enumerate() {
        match *m {
            Some(k) => {
                v_used[k] = true;
                b.variable_substituted_attrs += u.variable_cost(j, o, k);
            }
            None => b.variable_insert += 1,
        }
        matching.push(VertexMatch {
            kind: VertexKind::Variable,
            updated: Some(u.g.variable_vertices[j].name.clone()),
            original: m.map(|k| o.g.variable_vertices[k].name.clone()),
        });
    }
    for (k, used) in v_used.iter().enumerate() {
        if !used {
            b.variable_delete += 1;
            matching.push(VertexMatch {
                kind: VertexKind::Variable,
                updated: None,
                original: Some(o.g.variable_vertices[k].name.clone()),
            });
        }
    }
    for (i, m) in cmap.iter().enumerate() {
        match *m {
            Some(k) => {
                c_used[k] = true;
                b.constraint_substituted_attrs += u.constraint_cost(i, o, k);
                let (ins, del, sub) = edge_edits(u, i, o, k, vmap);
                b.edge_insert += ins;
                b.edge_delete += del;
                b.edge_substituted += sub;
            }
            None => {
                b.constraint_insert += 1;
                b.edge_insert += u.adj[i].len() as u64;
            }
        }
        matching.push(VertexMatch {
            kind: VertexKind::Constraint,
            updated: Some(u.g.constraint_vertices[i].name.clone()),
            original: m.map(|k| o.g.constraint_vertices[k].name.clone()),
        });
    }
    for (k, used) in c_used.iter().enumerate() {
        if !used {
            b.constraint_delete += 1;
            b.edge_delete += o.adj[k].len() as u64;
            matching.push(VertexMatch {
                kind: VertexKind::Constraint,
                updated: None,
                original: Some(o.g.constraint_vertices[k].name.clone()),
            });
        }
    }

    let ged = b.weighted_total();
    let size_updated = graph_size(u.g);
    let size_original = graph_size(o.g);
    let denom = size_updated.max(size_original);
    GedReport {
        ged,
        size_original,
        size_updated,
        nged: if denom == 0 {
            0.0
        } else {
            ged as f64 / denom as f64
        },
        breakdown: b,
        matching,
    }
}

/// Largest number of leftover assignments tried exhaustively.
pub const LEFTOVER_SEARCH_LIMIT: u64 = 50_000;

/// Same-named vertices matched; everything else `None`.
fn name_anchors<T>(updated: &[T], original: &[T], name: impl Fn(&T) -> &str) -> Vec<Option<usize>> {
    let index: HashMap<&str, usize> = original
        .iter()
        .enumerate()
        .map(|(k, v)| (name(v), k))
        .collect();
    updated
        .iter()
        .map(|v| index.get(name(v)).copied())
        .collect()
}

/// (unmatched updated, unmatched original) indices.
fn leftovers(map: &[Option<usize>], original_len: usize) -> (Vec<usize>, Vec<usize>) {
    let mut used = vec![false; original_len];
    for k in map.iter().flatten() {
        used[*k] = true;
    }
    let lu = (0..map.len()).filter(|i| map[*i].is_none()).collect();
    let lo = (0..original_len).filter(|k| !used[*k]).collect();
    (lu, lo)
}

/// Partial injections from `k` items into `l`, saturating.
fn injection_count(k: usize, l: usize) -> u64 {
    let mut total: u64 = 0;
    let mut term: u64 = 1;
    for i in 0..=k.min(l) {
        total = total.saturating_add(term);
        term = term.saturating_mul(((k - i) * (l - i)) as u64) / (i as u64 + 1);
    }
    total
}

struct Completion<'a> {
    u: &'a Indexed<'a>,
    o: &'a Indexed<'a>,
    slots: Vec<(VertexKind, usize)>,
    spare_c: Vec<usize>,
    spare_v: Vec<usize>,
    cmap: Vec<Option<usize>>,
    vmap: Vec<Option<usize>>,
    best: (u64, Vec<Option<usize>>, Vec<Option<usize>>),
}

impl Completion<'_> {
    fn search(&mut self, depth: usize) {
        if depth == self.slots.len() {
            let cost = matching_cost(self.u, self.o, &self.cmap, &self.vmap);
            if cost < self.best.0 {
                self.best = (cost, self.cmap.clone(), self.vmap.clone());
            }
            return;
        }
        let (kind, i) = self.slots[depth];
        let spare = match kind {
            VertexKind::Constraint => self.spare_c.clone(),
            VertexKind::Variable => self.spare_v.clone(),
        };
        let used: Vec<usize> = match kind {
            VertexKind::Constraint => self.cmap.iter().flatten().copied().collect(),
            VertexKind::Variable => self.vmap.iter().flatten().copied().collect(),
        };
        for choice in spare
            .into_iter()
            .filter(|k| !used.contains(k))
            .map(Some)
            .chain([None])
        {
            match kind {
                VertexKind::Constraint => self.cmap[i] = choice,
                VertexKind::Variable => self.vmap[i] = choice,
            }
            self.search(depth + 1);
        }
        match kind {
            VertexKind::Constraint => self.cmap[i] = None,
            VertexKind::Variable => self.vmap[i] = None,
        }
    }
}

/// Pairs leftovers in ordinal order.
fn ordinal_pairing(map: &mut [Option<usize>], lu: &[usize], lo: &[usize]) {
    for (i, k) in lu.iter().zip(lo) {
        map[*i] = Some(*k);
    }
}

/// Matching used by [`ged_named`]: same names are kept together, and the
/// vertices left over on both sides are paired or sent to the empty vertex
/// at least cost. Large leftover sets are paired in ordinal order instead.
fn named_maps(u: &Indexed, o: &Indexed) -> (Vec<Option<usize>>, Vec<Option<usize>>) {
    let (ug, og) = (u.g, o.g);
    let mut cmap = name_anchors(&ug.constraint_vertices, &og.constraint_vertices, |v| {
        &v.name
    });
    let mut vmap = name_anchors(&ug.variable_vertices, &og.variable_vertices, |v| &v.name);
    let (cu, co) = leftovers(&cmap, og.constraint_vertices.len());
    let (vu, vo) = leftovers(&vmap, og.variable_vertices.len());
    let mut paired_c = cmap.clone();
    let mut paired_v = vmap.clone();
    ordinal_pairing(&mut paired_c, &cu, &co);
    ordinal_pairing(&mut paired_v, &vu, &vo);
    let both_sides = (!cu.is_empty() && !co.is_empty()) || (!vu.is_empty() && !vo.is_empty());
    let tries =
        injection_count(cu.len(), co.len()).saturating_mul(injection_count(vu.len(), vo.len()));
    if !both_sides || tries > LEFTOVER_SEARCH_LIMIT {
        return (paired_c, paired_v);
    }
    let start = matching_cost(u, o, &paired_c, &paired_v);
    let slots = vu
        .iter()
        .map(|j| (VertexKind::Variable, *j))
        .chain(cu.iter().map(|i| (VertexKind::Constraint, *i)))
        .collect();
    let mut c = Completion {
        u,
        o,
        slots,
        spare_c: co,
        spare_v: vo,
        cmap: std::mem::take(&mut cmap),
        vmap: std::mem::take(&mut vmap),
        best: (start, paired_c, paired_v),
    };
    c.search(0);
    (c.best.1, c.best.2)
}

/// Graph edit distance under name-based matching. The production path.
pub fn ged_named(
    updated: &BipartiteGraph,
    original: &BipartiteGraph,
) -> Result<GedReport, GraphError> {
    updated.validate()?;
    original.validate()?;
    let (u, o) = (Indexed::new(updated), Indexed::new(original));
    let (cmap, vmap) = named_maps(&u, &o);
    Ok(evaluate(&u, &o, &cmap, &vmap))
}

/// Decision information of `updated` relative to `original`.
pub fn decision_information(original: &LinearModel, updated: &LinearModel) -> GedReport {
    let go = build_graph(&to_standard_form(original));
    let gu = build_graph(&to_standard_form(updated));
    ged_named(&gu, &go).expect("graphs built from valid models have unique names")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::parse_model;

    const INF: f64 = f64::INFINITY;

    fn aircraft_with(data: &str, constraints: &str) -> LinearModel {
        let src = crate::AIRCRAFT_MODEL
            .replace("# EOR DATA END", &format!("{data}\n# EOR DATA END"))
            .replace(
                "# EOR CONSTRAINT END",
                &format!("{constraints}\n# EOR CONSTRAINT END"),
            );
        parse_model(&src).unwrap()
    }

    fn base() -> LinearModel {
        parse_model(crate::AIRCRAFT_MODEL).unwrap()
    }

    #[test]
    fn aircraft_graph_shape() {
        let g = build_graph(&to_standard_form(&base()));
        assert_eq!(g.constraint_vertices.len(), 2);
        assert_eq!(g.variable_vertices.len(), 2);
        assert_eq!(g.edges.len(), 4);
        assert_eq!(graph_size(&g), 14);
        assert_eq!(g.constraint_vertices[0].lower, 10000.0);
        assert_eq!(g.constraint_vertices[1].lower, -INF);
        assert_eq!(g.variable_vertices[0].cost, 10000.0);
    }

    #[test]
    fn query5_graph_shape() {
        let g = build_graph(&to_standard_form(&aircraft_with(
            "",
            "MaxA: A <= 15\nMaxB: B <= 30",
        )));
        assert_eq!(
            (
                g.constraint_vertices.len(),
                g.variable_vertices.len(),
                g.edges.len()
            ),
            (4, 2, 6)
        );
        assert_eq!(graph_size(&g), 20);
    }

    #[test]
    fn empty_rows_are_isolated_vertices() {
        let lp = StandardFormLP {
            n: 2,
            m: 1,
            c: vec![1.0, 0.0],
            rows: vec![vec![]],
            l_s: vec![0.0],
            u_s: vec![1.0],
            l_x: vec![0.0, 0.0],
            u_x: vec![INF, INF],
            negated_objective: false,
            var_names: vec!["x".into(), "y".into()],
            con_names: vec!["r".into()],
        };
        let g = build_graph(&lp);
        assert!(g.edges.is_empty());
        assert_eq!(graph_size(&g), 2 + 6);
    }

    #[test]
    fn identical_models_have_zero_distance() {
        let r = decision_information(&base(), &base());
        assert_eq!(r.ged, 0);
        assert_eq!(r.nged, 0.0);
    }

    #[test]
    fn query5_distance() {
        let r = decision_information(&base(), &aircraft_with("", "MaxA: A <= 15\nMaxB: B <= 30"));
        assert_eq!(r.ged, 6);
        assert_eq!(r.breakdown.constraint_insert, 2);
        assert_eq!(r.breakdown.edge_insert, 2);
        assert_eq!(r.nged, 0.3);
        assert_eq!(r.headline(), "GED=6 NGED=0.300");
    }

    #[test]
    fn query1_and_query4_distance() {
        let r = decision_information(&base(), &aircraft_with("param costA = 8000", ""));
        assert_eq!((r.ged, r.breakdown.variable_substituted_attrs), (1, 1));
        assert_eq!(r.nged, 1.0 / 14.0);
        let r = decision_information(
            &base(),
            &aircraft_with("param costA = costA * 1.1\nparam costB = costB * 1.1", ""),
        );
        assert_eq!(r.ged, 2);
        assert_eq!(r.nged, 2.0 / 14.0);
    }

    #[test]
    fn renamed_constraint_is_paired_not_replaced() {
        let a = aircraft_with("", "MaxA: A <= 15");
        let b = aircraft_with("", "LimitA: A <= 15");
        assert_eq!(decision_information(&a, &b).ged, 0);
    }

    #[test]
    fn tolerance_rules() {
        assert!(attrs_match(1.0, 1.0 + 1e-12));
        assert!(attrs_match(1e12, 1e12 + 1.0));
        assert!(!attrs_match(1.0, 1.0 + 1e-6));
        assert!(attrs_match(INF, INF));
        assert!(!attrs_match(INF, -INF));
        assert!(!attrs_match(INF, 1e300));
    }

    #[test]
    fn duplicate_names_are_rejected() {
        let mut g = build_graph(&to_standard_form(&base()));
        g.constraint_vertices[1].name = g.constraint_vertices[0].name.clone();
        assert!(matches!(
            ged_named(&g, &g),
            Err(GraphError::DuplicateName {
                kind: VertexKind::Constraint,
                ..
            })
        ));
    }

    #[test]
    fn report_serializes_infinite_free() {
        let r = decision_information(&base(), &aircraft_with("", "MaxA: A <= 15"));
        let v = serde_json::to_value(&r).unwrap();
        assert_eq!(v["ged"], 3);
        assert_eq!(v["breakdown"]["constraint_insert"], 1);
        let g = build_graph(&to_standard_form(&base()));
        let json = serde_json::to_string(&g).unwrap();
        assert!(json.contains("\"-inf\""));
        let back: BipartiteGraph = serde_json::from_str(&json).unwrap();
        assert_eq!(back, g);
    }
}
