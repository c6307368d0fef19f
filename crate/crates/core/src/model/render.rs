use std::fmt::Write;

use super::{
    ConstraintDef, LinearModel, Region, Sense, CONSTRAINT_BEGIN, CONSTRAINT_END, DATA_BEGIN,
    DATA_END,
};

/// Shortest round-trip decimal; infinities print as `inf` / `-inf`.
pub fn format_number(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{v}")
    }
}

fn linear_terms<'a>(terms: impl IntoIterator<Item = (&'a str, f64)>) -> String {
    let mut out = String::new();
    for (i, (name, c)) in terms.into_iter().enumerate() {
        let magnitude = c.abs();
        let coeff = if magnitude == 1.0 {
            String::new()
        } else {
            format!("{} ", format_number(magnitude))
        };
        let sign = match (i, c < 0.0) {
            (0, false) => "",
            (0, true) => "-",
            (_, false) => " + ",
            (_, true) => " - ",
        };
        let _ = write!(out, "{sign}{coeff}{name}");
    }
    if out.is_empty() {
        out.push('0');
    }
    out
}

fn constraint_line(c: &ConstraintDef) -> String {
    let expr = linear_terms(c.terms.iter().map(|(n, v)| (n.as_str(), *v)));
    let rel = if c.lower == c.upper {
        format!("{expr} == {}", format_number(c.lower))
    } else if c.lower == f64::NEG_INFINITY {
        format!("{expr} <= {}", format_number(c.upper))
    } else if c.upper == f64::INFINITY {
        format!("{expr} >= {}", format_number(c.lower))
    } else {
        format!(
            "{} <= {expr} <= {}",
            format_number(c.lower),
            format_number(c.upper)
        )
    };
    format!("{}: {rel}", c.name)
}

/// Prints a model in canonical form. Parameters print with their evaluated
/// values; every variable appears in the objective so declaration order
/// survives a re-parse.
pub fn render_model(model: &LinearModel) -> String {
    let mut out = String::new();
    for line in model.description.lines() {
        if line.is_empty() {
            out.push_str("#\n");
        } else {
            let _ = writeln!(out, "# {line}");
        }
    }
    if !model.description.is_empty() {
        out.push('\n');
    }
    for p in &model.params {
        let _ = writeln!(out, "param {} = {}", p.name, format_number(p.value));
    }
    let _ = writeln!(out, "{DATA_BEGIN}\n{DATA_END}\n");

    let keyword = match model.sense {
        Sense::Minimize => "minimize",
        Sense::Maximize => "maximize",
    };
    let objective = if model.variables.is_empty() {
        String::new()
    } else {
        // zero coefficients are kept as declarations
        let mut s = String::new();
        for (i, v) in model.variables.iter().enumerate() {
            let c = v.objective_coeff;
            let sign = match (i, c < 0.0) {
                (0, false) => "",
                (0, true) => "-",
                (_, false) => " + ",
                (_, true) => " - ",
            };
            let _ = write!(s, "{sign}{} {}", format_number(c.abs()), v.name);
        }
        format!(" {s}")
    };
    let _ = writeln!(out, "{keyword}:{objective}\n\nsubject to:");
    for c in model
        .constraints
        .iter()
        .filter(|c| c.region == Region::Fixed)
    {
        let _ = writeln!(out, "{}", constraint_line(c));
    }
    let _ = writeln!(out, "{CONSTRAINT_BEGIN}");
    for c in model
        .constraints
        .iter()
        .filter(|c| c.region == Region::Editable)
    {
        let _ = writeln!(out, "{}", constraint_line(c));
    }
    let _ = writeln!(out, "{CONSTRAINT_END}");

    let bounded: Vec<String> = model
        .variables
        .iter()
        .filter(|v| v.lower != 0.0 || v.upper != f64::INFINITY)
        .map(|v| {
            if v.lower == v.upper {
                format!("{} == {}", v.name, format_number(v.lower))
            } else if v.upper == f64::INFINITY {
                format!("{} >= {}", v.name, format_number(v.lower))
            } else if v.lower == 0.0 {
                format!("{} <= {}", v.name, format_number(v.upper))
            } else {
                format!(
                    "{} <= {} <= {}",
                    format_number(v.lower),
                    v.name,
                    format_number(v.upper)
                )
            }
        })
        .collect();
    if !bounded.is_empty() {
        let _ = writeln!(out, "\nbounds:\n{}", bounded.join("\n"));
    }
    let integers: Vec<&str> = model
        .variables
        .iter()
        .filter(|v| v.is_integer)
        .map(|v| v.name.as_str())
        .collect();
    if !integers.is_empty() {
        let _ = writeln!(out, "\nintegers: {}", integers.join(" "));
    }
    out
}
