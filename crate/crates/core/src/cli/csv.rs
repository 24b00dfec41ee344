//! Trajectory export.
//!
//! Header `t,k,kind,<obs...>`. One `init` row, one `flow` row per recorded
//! sample after each segment's start, and a `jump-pre`/`jump-post` pair per
//! jump. Reals carry 17 significant digits.

use std::fmt::Write;

use crate::engine::{Segment, Trajectory};
use crate::model::{eval_term, State, Term, Value, Vocabulary};
use crate::syntax::{parse_term, ParseError, Program};

/// Every nullary real dynamic symbol of the program.
pub fn default_observables(program: &Program) -> Vec<Term> {
    program
        .nullary_reals()
        .iter()
        .map(|n| Term::var(n))
        .collect()
}

/// Splits a comma-separated list at top level, so `f(1, 2),x` gives two
/// entries.
pub fn parse_observe(spec: &str, vocabulary: &Vocabulary) -> Result<Vec<Term>, ParseError> {
    let mut parts = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, c) in spec.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => {
                parts.push(&spec[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    parts.push(&spec[start..]);
    parts
        .into_iter()
        .filter(|p| !p.trim().is_empty())
        .map(|p| parse_term(p, vocabulary))
        .collect()
}

pub fn format_real(x: f64) -> String {
    format!("{x:.16e}")
}

fn cell(v: Option<Value>) -> String {
    match v {
        Some(Value::Real(x)) => format_real(x),
        Some(Value::Bool(b)) => b.to_string(),
        None => String::new(),
    }
}

fn row(out: &mut String, t: f64, k: u64, kind: &str, state: &State, observe: &[Term]) {
    let _ = write!(out, "{},{k},{kind}", format_real(t));
    for o in observe {
        let _ = write!(out, ",{}", cell(eval_term(o, state).ok()));
    }
    out.push('\n');
}

pub fn write_csv(trajectory: &Trajectory, observe: &[Term]) -> String {
    let mut out = String::from("t,k,kind");
    for o in observe {
        let name = o.to_string();
        if name.contains(',') || name.contains('"') {
            let _ = write!(out, ",\"{}\"", name.replace('"', "\"\""));
        } else {
            let _ = write!(out, ",{name}");
        }
    }
    out.push('\n');
    row(&mut out, 0.0, 0, "init", &trajectory.initial, observe);
    for seg in &trajectory.segments {
        match seg {
            Segment::Flow(f) => {
                for (t, s) in f.samples.iter().skip(1) {
                    row(&mut out, *t, f.start.k, "flow", s, observe);
                }
            }
            Segment::Jump(j) => {
                row(&mut out, j.at.t, j.at.k, "jump-pre", &j.before, observe);
                row(&mut out, j.at.t, j.at.k + 1, "jump-post", &j.after, observe);
            }
        }
    }
    out
}
