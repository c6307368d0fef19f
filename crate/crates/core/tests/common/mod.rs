#![allow(dead_code)]

use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use whatif_core::graph::{
    build_graph, ged_exact, ged_named, BipartiteGraph, ConstraintVertex, Edge, VariableVertex,
    DEFAULT_SIZE_CAP,
};
use whatif_core::model::{parse_model, to_standard_form};

/// Small pure-integer model kept alongside its source text.
#[derive(Debug, Clone)]
pub struct IntModel {
    pub maximize: bool,
    pub cost: Vec<i64>,
    pub lower: Vec<i64>,
    pub upper: Vec<i64>,
    /// (coefficients, sense, rhs) with sense one of "<=", ">=", "==".
    pub rows: Vec<(Vec<i64>, &'static str, i64)>,
}

impl IntModel {
    pub fn random(rng: &mut StdRng) -> Self {
        let n = rng.gen_range(1..=3);
        let lower: Vec<i64> = (0..n).map(|_| rng.gen_range(-2..=1)).collect();
        let upper: Vec<i64> = lower.iter().map(|l| l + rng.gen_range(0..=5)).collect();
        let mut cost: Vec<i64> = (0..n).map(|_| rng.gen_range(-5..=5)).collect();
        if cost.iter().all(|c| *c == 0) {
            cost[0] = 1;
        }
        let rows = (0..rng.gen_range(1..=3))
            .map(|_| {
                let mut a: Vec<i64> = (0..n).map(|_| rng.gen_range(-4..=4)).collect();
                if a.iter().all(|c| *c == 0) {
                    a[rng.gen_range(0..n)] = 1;
                }
                let sense = *["<=", ">=", "=="].choose(rng).unwrap();
                (a, sense, rng.gen_range(-6..=12))
            })
            .collect();
        IntModel {
            maximize: rng.gen_bool(0.5),
            cost,
            lower,
            upper,
            rows,
        }
    }

    fn linear(coeffs: &[i64]) -> String {
        let mut out = String::new();
        for (j, c) in coeffs.iter().enumerate() {
            if *c == 0 {
                continue;
            }
            let sign = if *c < 0 {
                "-"
            } else if out.is_empty() {
                ""
            } else {
                "+"
            };
            out += &format!(
                "{}{} {} x{} ",
                if out.is_empty() { "" } else { " " },
                sign,
                c.abs(),
                j
            );
        }
        out.trim().to_string()
    }

    pub fn source(&self) -> String {
        let mut s =
            format!(
            "# EOR DATA BEGIN\n# EOR DATA END\n\n{}: {}\n\nsubject to:\n# EOR CONSTRAINT BEGIN\n",
            if self.maximize { "maximize" } else { "minimize" },
            Self::linear(&self.cost)
        );
        for (i, (a, sense, b)) in self.rows.iter().enumerate() {
            s += &format!("r{i}: {} {sense} {b}\n", Self::linear(a));
        }
        s += "# EOR CONSTRAINT END\n\nbounds:\n";
        for j in 0..self.cost.len() {
            s += &format!("{} <= x{j} <= {}\n", self.lower[j], self.upper[j]);
        }
        let names: Vec<String> = (0..self.cost.len()).map(|j| format!("x{j}")).collect();
        s += &format!("\nintegers: {}\n", names.join(" "));
        s
    }

    /// Best objective over the whole integer box, `None` when nothing fits.
    pub fn enumerate(&self) -> Option<i64> {
        let n = self.cost.len();
        let mut x = self.lower.clone();
        let mut best: Option<i64> = None;
        loop {
            let fits = self.rows.iter().all(|(a, sense, b)| {
                let lhs: i64 = a.iter().zip(&x).map(|(a, x)| a * x).sum();
                match *sense {
                    "<=" => lhs <= *b,
                    ">=" => lhs >= *b,
                    _ => lhs == *b,
                }
            });
            if fits {
                let v: i64 = self.cost.iter().zip(&x).map(|(c, x)| c * x).sum();
                best = Some(match best {
                    None => v,
                    Some(b) if self.maximize => b.max(v),
                    Some(b) => b.min(v),
                });
            }
            let mut k = 0;
            loop {
                if k == n {
                    return best;
                }
                if x[k] < self.upper[k] {
                    x[k] += 1;
                    break;
                }
                x[k] = self.lower[k];
                k += 1;
            }
        }
    }
}

fn attr(rng: &mut StdRng) -> f64 {
    rng.gen_range(-20..=20) as f64
}

fn maybe_inf(rng: &mut StdRng, sign: f64) -> f64 {
    if rng.gen_bool(0.3) {
        sign * f64::INFINITY
    } else {
        attr(rng)
    }
}

/// Graph with up to `max_per_kind` vertices of each kind and random
/// attributes; edges use nonzero coefficients.
pub fn random_graph(rng: &mut StdRng, max_per_kind: usize) -> BipartiteGraph {
    let m = rng.gen_range(1..=max_per_kind);
    let n = rng.gen_range(1..=max_per_kind);
    let mut g = BipartiteGraph::default();
    for i in 0..m {
        g.constraint_vertices.push(ConstraintVertex {
            name: format!("c{i}"),
            lower: maybe_inf(rng, -1.0),
            upper: maybe_inf(rng, 1.0),
        });
    }
    for j in 0..n {
        g.variable_vertices.push(VariableVertex {
            name: format!("v{j}"),
            lower: maybe_inf(rng, -1.0),
            upper: maybe_inf(rng, 1.0),
            cost: attr(rng),
        });
    }
    for i in 0..m {
        for j in 0..n {
            if rng.gen_bool(0.5) {
                g.edges.push(Edge {
                    constraint: format!("c{i}"),
                    variable: format!("v{j}"),
                    coefficient: nonzero(rng),
                });
            }
        }
    }
    g
}

fn nonzero(rng: &mut StdRng) -> f64 {
    loop {
        let v = attr(rng);
        if v != 0.0 {
            return v;
        }
    }
}

/// A few edits that keep every surviving vertex's name: attribute
/// changes, edge insertions, removals and coefficient changes, and added
/// or dropped vertices.
pub fn perturb(
    rng: &mut StdRng,
    g: &BipartiteGraph,
    edits: usize,
    max_per_kind: usize,
) -> BipartiteGraph {
    let mut h = g.clone();
    let mut fresh = 100;
    for _ in 0..edits {
        match rng.gen_range(0..8) {
            0 if !h.constraint_vertices.is_empty() => {
                let i = rng.gen_range(0..h.constraint_vertices.len());
                h.constraint_vertices[i].upper = maybe_inf(rng, 1.0);
            }
            1 if !h.variable_vertices.is_empty() => {
                let j = rng.gen_range(0..h.variable_vertices.len());
                h.variable_vertices[j].cost = attr(rng);
            }
            2 if !h.edges.is_empty() => {
                let e = rng.gen_range(0..h.edges.len());
                h.edges[e].coefficient = nonzero(rng);
            }
            3 if !h.edges.is_empty() => {
                let e = rng.gen_range(0..h.edges.len());
                h.edges.remove(e);
            }
            4 if !h.constraint_vertices.is_empty() && !h.variable_vertices.is_empty() => {
                let c = h.constraint_vertices.choose(rng).unwrap().name.clone();
                let v = h.variable_vertices.choose(rng).unwrap().name.clone();
                if !h.edges.iter().any(|e| e.constraint == c && e.variable == v) {
                    h.edges.push(Edge {
                        constraint: c,
                        variable: v,
                        coefficient: nonzero(rng),
                    });
                }
            }
            5 if h.constraint_vertices.len() < max_per_kind => {
                while h
                    .constraint_vertices
                    .iter()
                    .any(|c| c.name == format!("c{fresh}"))
                {
                    fresh += 1;
                }
                let name = format!("c{fresh}");
                h.constraint_vertices.push(ConstraintVertex {
                    name: name.clone(),
                    lower: maybe_inf(rng, -1.0),
                    upper: maybe_inf(rng, 1.0),
                });
                for v in h.variable_vertices.clone() {
                    if rng.gen_bool(0.5) {
                        h.edges.push(Edge {
                            constraint: name.clone(),
                            variable: v.name,
                            coefficient: nonzero(rng),
                        });
                    }
                }
            }
            6 if h.constraint_vertices.len() > 1 => {
                let i = rng.gen_range(0..h.constraint_vertices.len());
                let gone = h.constraint_vertices.remove(i).name;
                h.edges.retain(|e| e.constraint != gone);
            }
            7 if !h.variable_vertices.is_empty() => {
                let j = rng.gen_range(0..h.variable_vertices.len());
                h.variable_vertices[j].lower = maybe_inf(rng, -1.0);
            }
            _ => {}
        }
    }
    h
}

/// Continuous model in the shape patches edit: named constraints over a
/// few variables, edited through data changes, additions and deletions.
#[derive(Debug, Clone)]
pub struct PatchModel {
    /// (upper bound or None for +inf, cost)
    pub vars: Vec<(Option<i64>, i64)>,
    /// (name, coefficients, sense, rhs)
    pub cons: Vec<(String, Vec<i64>, &'static str, i64)>,
    next_name: usize,
}

fn coefficient(rng: &mut StdRng) -> i64 {
    let v = rng.gen_range(1..=60);
    if rng.gen_bool(0.3) {
        -v
    } else {
        v
    }
}

impl PatchModel {
    pub fn random(rng: &mut StdRng, max_vars: usize, max_cons: usize) -> Self {
        let n = rng.gen_range(1..=max_vars);
        let vars = (0..n)
            .map(|_| {
                let ub = rng.gen_bool(0.4).then(|| rng.gen_range(1..=500));
                (ub, coefficient(rng))
            })
            .collect();
        let mut m = PatchModel {
            vars,
            cons: Vec::new(),
            next_name: 0,
        };
        for _ in 0..rng.gen_range(1..=max_cons) {
            m.add_constraint(rng);
        }
        m
    }

    fn add_constraint(&mut self, rng: &mut StdRng) {
        let n = self.vars.len();
        let mut a: Vec<i64> = (0..n)
            .map(|_| {
                if rng.gen_bool(0.6) {
                    coefficient(rng)
                } else {
                    0
                }
            })
            .collect();
        if a.iter().all(|c| *c == 0) {
            a[rng.gen_range(0..n)] = coefficient(rng);
        }
        let sense = *["<=", ">=", "=="].choose(rng).unwrap();
        let name = format!("k{}", self.next_name);
        self.next_name += 1;
        self.cons.push((name, a, sense, rng.gen_range(1..=1000)));
    }

    /// One patch-like edit.
    pub fn edit(&mut self, rng: &mut StdRng, max_cons: usize) {
        match rng.gen_range(0..6) {
            0 => {
                let c = rng.gen_range(0..self.cons.len());
                self.cons[c].3 = rng.gen_range(1..=1000);
            }
            1 => {
                let j = rng.gen_range(0..self.vars.len());
                self.vars[j].1 = coefficient(rng);
            }
            2 => {
                let c = rng.gen_range(0..self.cons.len());
                let nz: Vec<usize> = (0..self.vars.len())
                    .filter(|j| self.cons[c].1[*j] != 0)
                    .collect();
                let j = *nz.choose(rng).unwrap();
                self.cons[c].1[j] = coefficient(rng);
            }
            3 if self.cons.len() < max_cons => self.add_constraint(rng),
            4 if self.cons.len() > 1 => {
                let c = rng.gen_range(0..self.cons.len());
                self.cons.remove(c);
            }
            _ => {
                let j = rng.gen_range(0..self.vars.len());
                self.vars[j].0 = Some(rng.gen_range(1..=500));
            }
        }
    }

    pub fn source(&self) -> String {
        let term = |c: i64, j: usize, first: bool| {
            let sign = if c < 0 {
                "- "
            } else if first {
                ""
            } else {
                "+ "
            };
            format!("{sign}{} x{j}", c.abs())
        };
        let mut obj = Vec::new();
        for (j, (_, c)) in self.vars.iter().enumerate() {
            obj.push(term(*c, j, obj.is_empty()));
        }
        let mut s = format!(
            "# EOR DATA BEGIN\n# EOR DATA END\n\nminimize: {}\n\nsubject to:\n# EOR CONSTRAINT BEGIN\n",
            obj.join(" ")
        );
        for (name, a, sense, b) in &self.cons {
            let mut lhs = Vec::new();
            for (j, c) in a.iter().enumerate() {
                if *c != 0 {
                    lhs.push(term(*c, j, lhs.is_empty()));
                }
            }
            s += &format!("{name}: {} {sense} {b}\n", lhs.join(" "));
        }
        s += "# EOR CONSTRAINT END\n\nbounds:\n";
        for (j, (ub, _)) in self.vars.iter().enumerate() {
            if let Some(ub) = ub {
                s += &format!("x{j} <= {ub}\n");
            }
        }
        s
    }
}

pub fn graph_of(src: &str) -> BipartiteGraph {
    build_graph(&to_standard_form(&parse_model(src).unwrap()))
}

/// Counts disagreements between named and exhaustive matching over `trials`
/// random patch-shaped perturbations of one to three edits each.
pub fn multi_edit_disagreements(seed: u64, trials: usize) -> usize {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut differ = 0;
    for _ in 0..trials {
        let a = PatchModel::random(&mut rng, 5, 5);
        let mut b = a.clone();
        for _ in 0..rng.gen_range(1..=3) {
            b.edit(&mut rng, 6);
        }
        let (ga, gb) = (graph_of(&a.source()), graph_of(&b.source()));
        let named = ged_named(&gb, &ga).unwrap();
        let exact = ged_exact(&gb, &ga, DEFAULT_SIZE_CAP).unwrap();
        assert!(exact.ged <= named.ged);
        differ += (named.ged != exact.ged) as usize;
    }
    differ
}
