//! Line-oriented plain-text serialization of [`MilpModel`], for debugging
//! fixtures. See `docs/milp-format.md` for the grammar. Floats are written
//! with Rust's shortest round-trip formatting, so a write/read cycle
//! reproduces the model bit for bit.

use std::collections::HashMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::model::{Direction, MilpModel, Sense};

#[derive(Debug, Error, PartialEq)]
pub enum FormatError {
    #[error("line {0}: {1}")]
    Parse(usize, String),
    #[error("line {0}: unknown variable {1}")]
    UnknownVariable(usize, String),
    #[error("missing direction line (min/max)")]
    MissingDirection,
}

pub fn to_text(model: &MilpModel) -> String {
    let mut s = String::new();
    match model.direction {
        Direction::Minimize => s.push_str("min\n"),
        Direction::Maximize => s.push_str("max\n"),
    }
    for (v, c) in model.variables.iter().zip(&model.objective) {
        let kind = if v.integral { " int" } else { "" };
        let _ = writeln!(s, "var {} {} {}{kind}", v.name, v.lower, v.upper);
        if *c != 0.0 {
            let _ = writeln!(s, "obj {} {}", *c, v.name);
        }
    }
    for row in &model.constraints {
        let sense = match row.sense {
            Sense::Le => "le",
            Sense::Ge => "ge",
            Sense::Eq => "eq",
        };
        let mut line = format!("row {} {sense} {}", row.name, row.rhs);
        for &(j, a) in &row.terms {
            let _ = write!(line, " {a} {}", model.variables[j].name);
        }
        s.push_str(&line);
        s.push('\n');
    }
    s
}

pub fn from_text(text: &str) -> Result<MilpModel, FormatError> {
    let mut direction = None;
    let mut model = MilpModel::new(Direction::Minimize);
    let mut index: HashMap<String, usize> = HashMap::new();
    for (ln, raw) in text.lines().enumerate() {
        let ln = ln + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut tok = line.split_whitespace();
        let head = tok.next().unwrap();
        let err = |msg: &str| FormatError::Parse(ln, msg.to_string());
        match head {
            "min" => direction = Some(Direction::Minimize),
            "max" => direction = Some(Direction::Maximize),
            "var" => {
                let name = tok.next().ok_or_else(|| err("var needs a name"))?;
                let lower = parse_num(tok.next(), ln)?;
                let upper = parse_num(tok.next(), ln)?;
                let integral = match tok.next() {
                    None => false,
                    Some("int") => true,
                    Some(other) => return Err(err(&format!("unexpected token {other}"))),
                };
                let idx = model.add_variable(name, lower, upper, integral, 0.0);
                index.insert(name.to_string(), idx);
            }
            "obj" => {
                let coeff = parse_num(tok.next(), ln)?;
                let name = tok.next().ok_or_else(|| err("obj needs a variable"))?;
                let &idx = index
                    .get(name)
                    .ok_or_else(|| FormatError::UnknownVariable(ln, name.to_string()))?;
                model.objective[idx] += coeff;
            }
            "row" => {
                let name = tok.next().ok_or_else(|| err("row needs a name"))?;
                let sense = match tok.next() {
                    Some("le") => Sense::Le,
                    Some("ge") => Sense::Ge,
                    Some("eq") => Sense::Eq,
                    _ => return Err(err("row sense must be le/ge/eq")),
                };
                let rhs = parse_num(tok.next(), ln)?;
                let mut terms = Vec::new();
                loop {
                    let Some(coeff_tok) = tok.next() else { break };
                    let coeff: f64 = coeff_tok
                        .parse()
                        .map_err(|_| err(&format!("bad coefficient {coeff_tok}")))?;
                    let var = tok.next().ok_or_else(|| err("dangling coefficient"))?;
                    let &idx = index
                        .get(var)
                        .ok_or_else(|| FormatError::UnknownVariable(ln, var.to_string()))?;
                    terms.push((idx, coeff));
                }
                model.add_constraint(name, terms, sense, rhs);
            }
            other => return Err(err(&format!("unknown directive {other}"))),
        }
    }
    model.direction = direction.ok_or(FormatError::MissingDirection)?;
    Ok(model)
}

fn parse_num(tok: Option<&str>, ln: usize) -> Result<f64, FormatError> {
    let tok = tok.ok_or_else(|| FormatError::Parse(ln, "expected a number".into()))?;
    tok.parse()
        .map_err(|_| FormatError::Parse(ln, format!("bad number {tok}")))
}
