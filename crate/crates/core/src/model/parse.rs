use std::collections::HashMap;

use super::expr::{eval_scalar, tokenize, Affine, ExprParser, Name, Tok, Token};
use super::{
    ConstraintDef, LinearModel, ModelError, ParamDef, Region, Sense, VariableDef, MARKERS,
};

#[derive(Debug, Clone, Copy, PartialEq)]
enum Section {
    None,
    Constraints,
    Bounds,
    Integers,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum MarkerRegion {
    Outside,
    Data,
    Constraint,
}

#[derive(Debug)]
enum Stmt {
    Param {
        line: usize,
        name: String,
        toks: Vec<Token>,
        end: usize,
    },
    Objective {
        line: usize,
        sense: Sense,
        toks: Vec<Token>,
        end: usize,
    },
    Constraint {
        line: usize,
        name: String,
        toks: Vec<Token>,
        end: usize,
        region: Region,
    },
    Bound {
        line: usize,
        toks: Vec<Token>,
        end: usize,
    },
    Integers {
        line: usize,
        names: Vec<(String, usize)>,
    },
}

/// Which kind of statement a single source line holds, without model context.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum LineKind {
    Blank,
    Comment,
    Marker,
    Param,
    Constraint,
    Other,
}

/// Classifies a line the way it would be read inside a marker region.
pub(crate) fn classify_line(raw: &str) -> LineKind {
    let trimmed = raw.trim();
    if trimmed.is_empty() {
        return LineKind::Blank;
    }
    if MARKERS.contains(&trimmed) {
        return LineKind::Marker;
    }
    let code = strip_comment(raw);
    if code.trim().is_empty() {
        return LineKind::Comment;
    }
    let Ok(toks) = tokenize(code, 0, 0) else {
        return LineKind::Other;
    };
    match toks.as_slice() {
        [Token {
            tok: Tok::Ident(kw),
            ..
        }, Token {
            tok: Tok::Ident(_), ..
        }, Token {
            tok: Tok::Assign, ..
        }, rest @ ..]
            if kw == "param" && !rest.is_empty() =>
        {
            LineKind::Param
        }
        [Token {
            tok: Tok::Ident(name),
            ..
        }, Token {
            tok: Tok::Colon, ..
        }, rest @ ..]
            if !is_keyword(name)
                && rest
                    .iter()
                    .any(|t| matches!(t.tok, Tok::Le | Tok::Ge | Tok::EqEq)) =>
        {
            LineKind::Constraint
        }
        _ => LineKind::Other,
    }
}

fn is_keyword(s: &str) -> bool {
    matches!(
        s,
        "param" | "minimize" | "maximize" | "subject" | "bounds" | "integers"
    )
}

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    }
}

fn ident(t: &Token) -> Option<&str> {
    match &t.tok {
        Tok::Ident(s) => Some(s),
        _ => None,
    }
}

fn syntax(line: usize, column: usize, message: impl Into<String>) -> ModelError {
    ModelError::Syntax {
        line,
        column,
        message: message.into(),
    }
}

fn check_markers(lines: &[&str]) -> Result<(), ModelError> {
    let mut seen: Vec<(usize, usize)> = Vec::new();
    for (i, raw) in lines.iter().enumerate() {
        if let Some(m) = MARKERS.iter().position(|m| *m == raw.trim()) {
            if seen.iter().any(|&(k, _)| k == m) {
                return Err(ModelError::Marker(format!(
                    "`{}` appears more than once (line {})",
                    MARKERS[m],
                    i + 1
                )));
            }
            seen.push((m, i + 1));
        }
    }
    for (k, marker) in MARKERS.iter().enumerate() {
        if !seen.iter().any(|&(m, _)| m == k) {
            return Err(ModelError::Marker(format!("missing `{marker}`")));
        }
    }
    for (pos, &(m, line)) in seen.iter().enumerate() {
        if pos != m {
            return Err(ModelError::Marker(format!(
                "`{}` at line {line} is out of order",
                MARKERS[m]
            )));
        }
    }
    Ok(())
}

fn leading_description(lines: &[&str]) -> String {
    let mut out = Vec::new();
    for raw in lines.iter().map(|l| l.trim()).skip_while(|l| l.is_empty()) {
        if !raw.starts_with('#') || MARKERS.contains(&raw) {
            break;
        }
        let body = &raw[1..];
        out.push(body.strip_prefix(' ').unwrap_or(body));
    }
    out.join("\n")
}

fn split_statements(lines: &[&str]) -> Result<Vec<Stmt>, ModelError> {
    let mut section = Section::None;
    let mut region = MarkerRegion::Outside;
    let mut stmts = Vec::new();

    for (idx, raw) in lines.iter().enumerate() {
        let line = idx + 1;
        match raw.trim() {
            m if m == MARKERS[0] => {
                region = MarkerRegion::Data;
                continue;
            }
            m if m == MARKERS[1] || m == MARKERS[3] => {
                region = MarkerRegion::Outside;
                continue;
            }
            m if m == MARKERS[2] => {
                region = MarkerRegion::Constraint;
                continue;
            }
            _ => {}
        }
        let code = strip_comment(raw);
        if code.trim().is_empty() {
            continue;
        }
        let end = code.trim_end().chars().count() + 1;
        let toks = tokenize(code, line, 0)?;
        let first = ident(&toks[0]).unwrap_or("");
        let second_is_colon = matches!(toks.get(1).map(|t| &t.tok), Some(Tok::Colon));

        if first == "param" {
            if region == MarkerRegion::Constraint {
                return Err(syntax(
                    line,
                    toks[0].column,
                    "only constraints may appear in the constraint region",
                ));
            }
            let name = toks.get(1).and_then(ident).ok_or_else(|| {
                syntax(
                    line,
                    toks.get(1).map_or(end, |t| t.column),
                    "expected parameter name",
                )
            })?;
            if !matches!(toks.get(2).map(|t| &t.tok), Some(Tok::Assign)) {
                return Err(syntax(
                    line,
                    toks.get(2).map_or(end, |t| t.column),
                    "expected `=`",
                ));
            }
            if toks.len() == 3 {
                return Err(syntax(line, end, "expected a value"));
            }
            stmts.push(Stmt::Param {
                line,
                name: name.to_string(),
                toks: toks[3..].to_vec(),
                end,
            });
            continue;
        }
        match region {
            MarkerRegion::Data => {
                return Err(syntax(
                    line,
                    toks[0].column,
                    "only `param` statements may appear in the data region",
                ))
            }
            MarkerRegion::Constraint => {
                stmts.push(constraint_stmt(line, toks, end, Region::Editable)?);
                continue;
            }
            MarkerRegion::Outside => {}
        }

        match (first, second_is_colon) {
            ("minimize", true) | ("maximize", true) => {
                let sense = if first == "minimize" {
                    Sense::Minimize
                } else {
                    Sense::Maximize
                };
                stmts.push(Stmt::Objective {
                    line,
                    sense,
                    toks: toks[2..].to_vec(),
                    end,
                });
                section = Section::None;
            }
            ("bounds", true) if toks.len() == 2 => section = Section::Bounds,
            ("integers", true) => {
                section = Section::Integers;
                stmts.push(integers_stmt(line, &toks[2..])?);
            }
            ("subject", false)
                if toks.len() == 3
                    && ident(&toks[1]) == Some("to")
                    && toks[2].tok == Tok::Colon =>
            {
                section = Section::Constraints
            }
            _ => match section {
                Section::Constraints => {
                    stmts.push(constraint_stmt(line, toks, end, Region::Fixed)?)
                }
                Section::Bounds => stmts.push(Stmt::Bound { line, toks, end }),
                Section::Integers => stmts.push(integers_stmt(line, &toks)?),
                Section::None => {
                    return Err(syntax(
                        line,
                        toks[0].column,
                        "statement outside of `subject to:`, `bounds:` or `integers:`",
                    ))
                }
            },
        }
    }
    Ok(stmts)
}

fn constraint_stmt(
    line: usize,
    toks: Vec<Token>,
    end: usize,
    region: Region,
) -> Result<Stmt, ModelError> {
    let name = match (toks.first().and_then(ident), toks.get(1).map(|t| &t.tok)) {
        (Some(name), Some(Tok::Colon)) if !is_keyword(name) => name.to_string(),
        _ => {
            return Err(syntax(
                line,
                toks[0].column,
                "expected `NAME: expression <= | >= | == expression`",
            ))
        }
    };
    Ok(Stmt::Constraint {
        line,
        name,
        toks: toks[2..].to_vec(),
        end,
        region,
    })
}

fn integers_stmt(line: usize, toks: &[Token]) -> Result<Stmt, ModelError> {
    let mut names = Vec::new();
    for t in toks {
        match ident(t) {
            Some(n) => names.push((n.to_string(), t.column)),
            None => return Err(syntax(line, t.column, "expected variable names")),
        }
    }
    Ok(Stmt::Integers { line, names })
}

/// Splits at top-level comparison operators.
fn split_comparisons(toks: &[Token]) -> (Vec<&[Token]>, Vec<(Tok, usize)>) {
    let mut parts = Vec::new();
    let mut ops = Vec::new();
    let mut start = 0;
    for (i, t) in toks.iter().enumerate() {
        if matches!(t.tok, Tok::Le | Tok::Ge | Tok::EqEq) {
            parts.push(&toks[start..i]);
            ops.push((t.tok.clone(), t.column));
            start = i + 1;
        }
    }
    parts.push(&toks[start..]);
    (parts, ops)
}

/// Parses a comparison-free token run as a complete affine expression.
fn affine<R: Fn(&str) -> Name>(
    toks: &[Token],
    line: usize,
    end: usize,
    resolve: R,
) -> Result<Affine, ModelError> {
    if toks.is_empty() {
        return Err(syntax(line, end, "missing expression"));
    }
    let mut p = ExprParser::new(toks, line, end, resolve);
    let value = p.expr()?;
    if !p.at_end() {
        return Err(p.error("unexpected token"));
    }
    if value.constant.is_nan() || value.terms.values().any(|c| !c.is_finite()) {
        return Err(syntax(
            line,
            toks[0].column,
            "expression is not a finite number",
        ));
    }
    Ok(value.pruned())
}

/// Parses model source text.
///
/// Parameter expressions see the definitions that precede them; every other
/// statement sees the last definition of each parameter.
pub fn parse_model(text: &str) -> Result<LinearModel, ModelError> {
    let lines: Vec<&str> = text.lines().collect();
    check_markers(&lines)?;
    let description = leading_description(&lines);
    let stmts = split_statements(&lines)?;

    // parameters, in order
    let mut env: HashMap<String, f64> = HashMap::new();
    let mut params = Vec::new();
    for stmt in &stmts {
        if let Stmt::Param {
            line,
            name,
            toks,
            end,
        } = stmt
        {
            let value = eval_scalar(toks, *line, *end, |n| {
                env.get(n).map_or(Name::Unknown, |&v| Name::Scalar(v))
            })?;
            params.push(ParamDef {
                name: name.clone(),
                value,
                ordinal: params.len(),
            });
            env.insert(name.clone(), value);
        }
    }

    // variable declarations: objective, bounds and integers, first appearance wins
    let mut var_index: HashMap<String, usize> = HashMap::new();
    let mut var_names: Vec<String> = Vec::new();
    let mut declare = |name: &str| {
        if !var_index.contains_key(name) {
            var_index.insert(name.to_string(), var_names.len());
            var_names.push(name.to_string());
        }
    };
    for stmt in &stmts {
        match stmt {
            Stmt::Objective { toks, .. } | Stmt::Bound { toks, .. } => {
                for t in toks {
                    if let Some(n) = ident(t) {
                        if !env.contains_key(n) && n != "inf" {
                            declare(n);
                        }
                    }
                }
            }
            Stmt::Integers { line, names } => {
                for (n, column) in names {
                    if env.contains_key(n) {
                        return Err(syntax(
                            *line,
                            *column,
                            format!("`{n}` is a parameter, not a variable"),
                        ));
                    }
                    declare(n);
                }
            }
            _ => {}
        }
    }

    let resolve = |n: &str| {
        if let Some(&v) = env.get(n) {
            Name::Scalar(v)
        } else if let Some(&i) = var_index.get(n) {
            Name::Variable(i)
        } else {
            Name::Unknown
        }
    };

    let mut variables: Vec<VariableDef> = var_names
        .iter()
        .enumerate()
        .map(|(ordinal, name)| VariableDef {
            name: name.clone(),
            lower: 0.0,
            upper: f64::INFINITY,
            objective_coeff: 0.0,
            is_integer: false,
            ordinal,
        })
        .collect();
    let mut sense = None;
    let mut constraints: Vec<ConstraintDef> = Vec::new();
    let mut bound_lines: Vec<usize> = vec![0; variables.len()];

    for stmt in &stmts {
        match stmt {
            Stmt::Param { .. } => {}
            Stmt::Objective {
                line,
                sense: s,
                toks,
                end,
            } => {
                if sense.is_some() {
                    return Err(syntax(*line, 1, "more than one objective"));
                }
                sense = Some(*s);
                if toks.is_empty() {
                    continue;
                }
                let obj = affine(toks, *line, *end, resolve)?;
                if obj.constant != 0.0 {
                    return Err(syntax(
                        *line,
                        toks[0].column,
                        "constant terms are not supported in the objective",
                    ));
                }
                for (&j, &c) in &obj.terms {
                    variables[j].objective_coeff = c;
                }
            }
            Stmt::Integers { names, .. } => {
                for (n, _) in names {
                    variables[var_index[n]].is_integer = true;
                }
            }
            Stmt::Bound { line, toks, end } => {
                let (j, lower, upper) = bound(toks, *line, *end, resolve)?;
                let v = &mut variables[j];
                if let Some(l) = lower {
                    v.lower = l;
                }
                if let Some(u) = upper {
                    v.upper = u;
                }
                bound_lines[j] = *line;
            }
            Stmt::Constraint {
                line,
                name,
                toks,
                end,
                region,
            } => {
                if constraints.iter().any(|c| &c.name == name) {
                    return Err(ModelError::DuplicateConstraint {
                        line: *line,
                        name: name.clone(),
                    });
                }
                let (terms, lower, upper) = constraint(toks, *line, *end, resolve)?;
                if lower > upper {
                    return Err(ModelError::InvalidBounds {
                        line: *line,
                        name: name.clone(),
                        lower,
                        upper,
                    });
                }
                constraints.push(ConstraintDef {
                    name: name.clone(),
                    terms: terms
                        .into_iter()
                        .map(|(j, c)| (var_names[j].clone(), c))
                        .collect(),
                    lower,
                    upper,
                    region: *region,
                    ordinal: constraints.len(),
                });
            }
        }
    }

    for (v, &line) in variables.iter().zip(&bound_lines) {
        if v.lower > v.upper {
            return Err(ModelError::InvalidBounds {
                line,
                name: v.name.clone(),
                lower: v.lower,
                upper: v.upper,
            });
        }
    }

    Ok(LinearModel {
        sense: sense.unwrap_or(Sense::Minimize),
        description,
        params,
        variables,
        constraints,
        source_text: text.to_string(),
    })
}

fn bound<R: Fn(&str) -> Name + Copy>(
    toks: &[Token],
    line: usize,
    end: usize,
    resolve: R,
) -> Result<(usize, Option<f64>, Option<f64>), ModelError> {
    let (parts, ops) = split_comparisons(toks);
    let shape_error = || {
        syntax(
            line,
            toks.first().map_or(1, |t| t.column),
            "expected `NAME >= v`, `NAME <= v`, `NAME == v` or `v <= NAME <= v`",
        )
    };
    if !(2..=3).contains(&parts.len()) {
        return Err(shape_error());
    }
    let mut values = Vec::with_capacity(parts.len());
    for p in &parts {
        values.push(affine(p, line, end, resolve)?);
    }
    let single_var = |a: &Affine| -> Option<usize> {
        match (a.constant, a.terms.len()) {
            (0.0, 1) => {
                let (&j, &coef) = a.terms.iter().next()?;
                (coef == 1.0).then_some(j)
            }
            _ => None,
        }
    };
    let scalar = |a: &Affine| a.is_constant().then_some(a.constant);

    match (values.as_slice(), ops.as_slice()) {
        ([lhs, rhs], [(op, _)]) => {
            let (j, v, op) = match (single_var(lhs), scalar(rhs), single_var(rhs), scalar(lhs)) {
                (Some(j), Some(v), _, _) => (j, v, op.clone()),
                (_, _, Some(j), Some(v)) => {
                    let flipped = match op {
                        Tok::Le => Tok::Ge,
                        Tok::Ge => Tok::Le,
                        other => other.clone(),
                    };
                    (j, v, flipped)
                }
                _ => return Err(shape_error()),
            };
            Ok(match op {
                Tok::Le => (j, None, Some(v)),
                Tok::Ge => (j, Some(v), None),
                _ => (j, Some(v), Some(v)),
            })
        }
        ([a, mid, b], [(op1, _), (op2, column)]) => {
            let (Some(j), Some(a), Some(b)) = (single_var(mid), scalar(a), scalar(b)) else {
                return Err(shape_error());
            };
            match (op1, op2) {
                (Tok::Le, Tok::Le) => Ok((j, Some(a), Some(b))),
                (Tok::Ge, Tok::Ge) => Ok((j, Some(b), Some(a))),
                _ => Err(syntax(
                    line,
                    *column,
                    "two-sided bounds need matching operators",
                )),
            }
        }
        _ => Err(shape_error()),
    }
}

fn constraint<R: Fn(&str) -> Name + Copy>(
    toks: &[Token],
    line: usize,
    end: usize,
    resolve: R,
) -> Result<(Vec<(usize, f64)>, f64, f64), ModelError> {
    let (parts, ops) = split_comparisons(toks);
    let column = toks.first().map_or(end, |t| t.column);
    let (terms, lower, upper) = match (parts.as_slice(), ops.as_slice()) {
        ([lhs, rhs], [(op, _)]) => {
            let diff = affine(lhs, line, end, resolve)?
                .sub(affine(rhs, line, end, resolve)?)
                .pruned();
            let b = -diff.constant;
            let (l, u) = match op {
                Tok::Le => (f64::NEG_INFINITY, b),
                Tok::Ge => (b, f64::INFINITY),
                _ => (b, b),
            };
            (diff.terms, l, u)
        }
        ([a, mid, b], [(op1, _), (op2, op_column)]) => {
            let a = affine(a, line, end, resolve)?;
            let mid = affine(mid, line, end, resolve)?;
            let b = affine(b, line, end, resolve)?;
            if !a.is_constant() || !b.is_constant() {
                return Err(syntax(
                    line,
                    column,
                    "outer sides of a two-sided constraint must be numeric",
                ));
            }
            let (l, u) = match (op1, op2) {
                (Tok::Le, Tok::Le) => (a.constant, b.constant),
                (Tok::Ge, Tok::Ge) => (b.constant, a.constant),
                _ => {
                    return Err(syntax(
                        line,
                        *op_column,
                        "two-sided constraints need matching `<=` or `>=` operators",
                    ))
                }
            };
            (mid.terms, l - mid.constant, u - mid.constant)
        }
        ([_], []) => return Err(syntax(line, end, "expected `<=`, `>=` or `==`")),
        _ => return Err(syntax(line, column, "too many comparison operators")),
    };
    if lower.is_infinite() && upper.is_infinite() && lower < 0.0 && upper > 0.0 {
        return Err(syntax(line, column, "constraint has no finite bound"));
    }
    if lower.is_nan() || upper.is_nan() {
        return Err(syntax(line, column, "constraint bound is not a number"));
    }
    Ok((terms.into_iter().collect(), lower, upper))
}
