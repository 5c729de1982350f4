//! LP text format: `Minimize`, `Subject To`, `Bounds`, `Binary`, `End`.
//!
//! Names are rewritten to the LP character set: `[` and `,` become `_`,
//! `]` is dropped and any other character outside `[A-Za-z0-9_]` becomes
//! `_`, so `x[1,2]` is written `x_1_2`. A name that collides with an
//! earlier one gets a `_dupN` suffix. Every variable is listed under
//! `Bounds` in declaration order, which the reader relies on to restore that
//! order.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;
use thiserror::Error;

use super::{Model, Sense, VarKind};
use crate::scalar::Scalar;

pub fn sanitize_name(name: &str) -> String {
    let mut out = String::with_capacity(name.len());
    for c in name.chars() {
        match c {
            ']' => {}
            '[' | ',' => out.push('_'),
            c if c.is_ascii_alphanumeric() || c == '_' => out.push(c),
            _ => out.push('_'),
        }
    }
    if out.is_empty() {
        out.push('_');
    }
    out
}

fn unique_names<'a>(names: impl Iterator<Item = &'a str>) -> Vec<String> {
    let mut seen = HashSet::new();
    names
        .map(|n| {
            let base = sanitize_name(n);
            let mut name = base.clone();
            let mut k = 1;
            while !seen.insert(name.clone()) {
                name = format!("{base}_dup{k}");
                k += 1;
            }
            name
        })
        .collect()
}

fn write_expr<S: Scalar>(out: &mut String, terms: &[(usize, S)], names: &[String]) {
    if terms.is_empty() {
        out.push('0');
        return;
    }
    for (i, (v, c)) in terms.iter().enumerate() {
        let negative = c.is_negative();
        let abs = c.abs();
        match (i, negative) {
            (0, false) => {}
            (0, true) => out.push_str("- "),
            (_, false) => out.push_str(" + "),
            (_, true) => out.push_str(" - "),
        }
        if !abs.is_one() {
            out.push_str(&abs.to_lp_string());
            out.push(' ');
        }
        out.push_str(&names[*v]);
    }
}

/// The names [`write_lp`] gives the model's variables, in declaration order.
pub fn lp_variable_names<S>(model: &Model<S>) -> Vec<String> {
    unique_names(model.variables.iter().map(|v| v.name.as_str()))
}

/// `assignment` keyed by the names [`write_lp`] uses.
pub fn rename_for_lp<S: Clone>(model: &Model<S>, assignment: &super::Assignment<S>) -> super::Assignment<S> {
    model
        .variables
        .iter()
        .zip(lp_variable_names(model))
        .filter_map(|(v, lp)| assignment.get(&v.name).map(|x| (lp, x.clone())))
        .collect()
}

/// Renders the model; output depends only on declaration order.
pub fn write_lp<S: Scalar>(model: &Model<S>) -> String {
    let vnames = unique_names(model.variables.iter().map(|v| v.name.as_str()));
    let cnames = unique_names(model.constraints.iter().map(|c| c.name.as_str()));
    let mut out = String::from("Minimize\n obj: ");
    write_expr(&mut out, &model.objective, &vnames);
    out.push_str("\nSubject To\n");
    for (c, name) in model.constraints.iter().zip(&cnames) {
        let _ = write!(out, " {name}: ");
        write_expr(&mut out, &c.terms, &vnames);
        let _ = writeln!(out, " {} {}", c.sense, c.rhs.to_lp_string());
    }
    if !model.variables.is_empty() {
        out.push_str("Bounds\n");
        for (v, name) in model.variables.iter().zip(&vnames) {
            match &v.upper {
                Some(u) => {
                    let _ = writeln!(out, " {} <= {name} <= {}", v.lower.to_lp_string(), u.to_lp_string());
                }
                None => {
                    let _ = writeln!(out, " {name} >= {}", v.lower.to_lp_string());
                }
            }
        }
    }
    if model.variables.iter().any(|v| v.kind == VarKind::Binary) {
        out.push_str("Binary\n");
        for (v, name) in model.variables.iter().zip(&vnames) {
            if v.kind == VarKind::Binary {
                let _ = writeln!(out, " {name}");
            }
        }
    }
    out.push_str("End\n");
    out
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LpError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("missing `End`")]
    MissingEnd,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Section {
    None,
    Objective,
    Constraints,
    Bounds,
    Binary,
    End,
}

fn syntax(line: usize, message: impl Into<String>) -> LpError {
    LpError::Syntax {
        line,
        message: message.into(),
    }
}

fn is_name(tok: &str) -> bool {
    tok.chars().next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        && tok.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Parses the dialect written by [`write_lp`]. Variables that appear only in
/// rows default to continuous with bounds `[0, ∞)`.
pub fn read_lp<S: Scalar>(text: &str) -> Result<Model<S>, LpError> {
    let mut objective: Option<(usize, String)> = None;
    let mut rows: Vec<(usize, String)> = Vec::new();
    let mut bounds: Vec<(usize, String)> = Vec::new();
    let mut binaries: Vec<(usize, String)> = Vec::new();
    let mut section = Section::None;

    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('\\').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let lower = line.to_ascii_lowercase();
        let next = match lower.as_str() {
            "minimize" | "minimise" | "min" => Some(Section::Objective),
            "subject to" | "st" | "s.t." => Some(Section::Constraints),
            "bounds" => Some(Section::Bounds),
            "binary" | "binaries" => Some(Section::Binary),
            "end" => Some(Section::End),
            _ => None,
        };
        if let Some(s) = next {
            section = s;
            if s == Section::End {
                break;
            }
            continue;
        }
        match section {
            Section::Objective => match &mut objective {
                None => objective = Some((line_no, line.to_string())),
                Some((_, text)) => {
                    text.push(' ');
                    text.push_str(line);
                }
            },
            Section::Constraints => rows.push((line_no, line.to_string())),
            Section::Bounds => bounds.push((line_no, line.to_string())),
            Section::Binary => binaries.extend(line.split_whitespace().map(|t| (line_no, t.to_string()))),
            Section::None => return Err(syntax(line_no, "content before `Minimize`")),
            Section::End => unreachable!(),
        }
    }
    if section != Section::End {
        return Err(LpError::MissingEnd);
    }

    let mut model: Model<S> = Model::new();
    let binary_set: HashSet<&str> = binaries.iter().map(|(_, n)| n.as_str()).collect();
    let mut declared: HashMap<String, usize> = HashMap::new();

    for (line_no, text) in &bounds {
        let toks: Vec<&str> = text.split_whitespace().collect();
        let parse = |t: &str| S::parse_lp(t).ok_or_else(|| syntax(*line_no, format!("bad number `{t}`")));
        let (name, lower, upper) = match toks.as_slice() {
            [lo, "<=", name, "<=", hi] => (*name, parse(lo)?, Some(parse(hi)?)),
            [name, ">=", lo] => (*name, parse(lo)?, None),
            [name, "<=", hi] => (*name, S::zero(), Some(parse(hi)?)),
            _ => return Err(syntax(*line_no, "unsupported bound")),
        };
        if !is_name(name) {
            return Err(syntax(*line_no, format!("bad variable name `{name}`")));
        }
        let kind = if binary_set.contains(name) {
            VarKind::Binary
        } else {
            VarKind::Continuous
        };
        if declared.contains_key(name) {
            return Err(syntax(*line_no, format!("variable `{name}` bounded twice")));
        }
        let id = model.add_var(name, kind, lower, upper);
        declared.insert(name.to_string(), id);
    }
    for (line_no, name) in &binaries {
        if !declared.contains_key(name.as_str()) {
            if !is_name(name) {
                return Err(syntax(*line_no, format!("bad variable name `{name}`")));
            }
            let id = model.binary(name.clone());
            declared.insert(name.clone(), id);
        }
    }

    let mut parse_expr = |model: &mut Model<S>, line_no: usize, toks: &[&str]| -> Result<Vec<(usize, S)>, LpError> {
        let mut terms = Vec::new();
        let mut sign = S::one();
        let mut coef: Option<S> = None;
        let mut pending = false;
        for &t in toks {
            match t {
                "+" => pending = true,
                "-" => {
                    sign = -sign;
                    pending = true;
                }
                "0" if toks.len() == 1 => return Ok(Vec::new()),
                t if is_name(t) => {
                    let id = match declared.get(t) {
                        Some(&id) => id,
                        None => {
                            let id = model.continuous(t);
                            declared.insert(t.to_string(), id);
                            id
                        }
                    };
                    let c = coef.take().unwrap_or_else(S::one);
                    terms.push((id, sign.clone() * c));
                    sign = S::one();
                    pending = false;
                }
                t => {
                    let v = S::parse_lp(t).ok_or_else(|| syntax(line_no, format!("unexpected token `{t}`")))?;
                    if coef.is_some() {
                        return Err(syntax(line_no, "two coefficients in a row"));
                    }
                    coef = Some(v);
                }
            }
        }
        if pending || coef.is_some() {
            return Err(syntax(line_no, "dangling sign or coefficient"));
        }
        Ok(terms)
    };

    if let Some((line_no, text)) = objective {
        let body = text.split_once(':').map_or(text.as_str(), |(_, b)| b);
        let toks: Vec<&str> = body.split_whitespace().collect();
        let terms = parse_expr(&mut model, line_no, &toks)?;
        model.set_objective(terms);
    }
    for (line_no, text) in &rows {
        let (name, body) = text
            .split_once(':')
            .ok_or_else(|| syntax(*line_no, "constraint without a name"))?;
        let toks: Vec<&str> = body.split_whitespace().collect();
        let pos = toks
            .iter()
            .position(|t| matches!(*t, "<=" | ">=" | "=" | "=<" | "=>"))
            .ok_or_else(|| syntax(*line_no, "constraint without a sense"))?;
        let sense = match toks[pos] {
            "<=" | "=<" => Sense::Le,
            ">=" | "=>" => Sense::Ge,
            _ => Sense::Eq,
        };
        let rhs = match &toks[pos + 1..] {
            [v] => S::parse_lp(v).ok_or_else(|| syntax(*line_no, format!("bad right-hand side `{v}`")))?,
            [sign @ ("-" | "+"), v] => {
                let v = S::parse_lp(v).ok_or_else(|| syntax(*line_no, format!("bad right-hand side `{v}`")))?;
                if *sign == "-" {
                    -v
                } else {
                    v
                }
            }
            _ => return Err(syntax(*line_no, "bad right-hand side")),
        };
        let terms = parse_expr(&mut model, *line_no, &toks[..pos])?;
        model.add_constraint(name.trim(), terms, sense, rhs);
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Rational;

    #[test]
    fn empty_model() {
        let m: Model<Rational> = Model::new();
        assert_eq!(write_lp(&m), "Minimize\n obj: 0\nSubject To\nEnd\n");
        let back: Model<Rational> = read_lp(&write_lp(&m)).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn names_are_sanitized() {
        assert_eq!(sanitize_name("x[1,2]"), "x_1_2");
        assert_eq!(sanitize_name("A.1b[3]"), "A_1b_3");
        assert_eq!(unique_names(["a b", "a.b"].into_iter()), vec!["a_b", "a_b_dup1"]);
    }

    #[test]
    fn round_trip_preserves_everything_but_names() {
        let mut m: Model<Rational> = Model::new();
        let x = m.binary("x[1,2]");
        let y = m.continuous("C[1]");
        let z = m.add_var("z", VarKind::Continuous, Rational::from_int(-2), Some(Rational::new(7, 2)));
        m.add_constraint(
            "A.1f[0,1]",
            vec![(x, Rational::from_int(-29)), (y, Rational::from_int(1)), (z, Rational::new(-1, 4))],
            Sense::Ge,
            Rational::from_int(-20),
        );
        m.add_constraint("c", vec![(y, Rational::from_int(1))], Sense::Eq, Rational::from_int(0));
        m.set_objective(vec![(y, Rational::from_int(3))]);
        let text = write_lp(&m);
        assert!(text.contains(" A_1f_0_1: - 29 x_1_2 + C_1 - 0.25 z >= -20\n"), "{text}");
        let back: Model<Rational> = read_lp(&text).unwrap();
        assert_eq!(back.variables.len(), 3);
        assert_eq!(back.constraints.len(), 2);
        assert_eq!(back.variables[0].kind, VarKind::Binary);
        assert_eq!(back.variables[2].upper, Some(Rational::new(7, 2)));
        assert_eq!(back.constraints[0].terms, m.constraints[0].terms);
        assert_eq!(back.constraints[0].rhs, Rational::from_int(-20));
        assert_eq!(back.objective, m.objective);
        // a second pass is a fixed point
        assert_eq!(write_lp(&back), text);
    }

    #[test]
    fn table1_rp_model_round_trips() {
        let inst = crate::fixtures::table1();
        let m: Model<Rational> = crate::milp::encode_rp(&inst, crate::milp::default_big_k(&inst));
        let text = write_lp(&m);
        let back: Model<Rational> = read_lp(&text).unwrap();
        assert_eq!(back.constraints.len(), m.constraints.len());
        assert_eq!(back.variables.len(), m.variables.len());
        assert_eq!(back.num_binaries(), m.num_binaries());
        for (a, b) in back.constraints.iter().zip(&m.constraints) {
            assert_eq!((&a.terms, a.sense, &a.rhs), (&b.terms, b.sense, &b.rhs));
        }
        assert_eq!(write_lp(&back), text);
    }

    #[test]
    fn rejects_garbage() {
        assert_eq!(read_lp::<f64>("Minimize\n obj: x\n"), Err(LpError::MissingEnd));
        assert!(matches!(
            read_lp::<f64>("Minimize\n obj: x\nSubject To\n c: x ?? 3\nEnd\n"),
            Err(LpError::Syntax { line: 4, .. })
        ));
    }
}
