//! Initial-state files: one `name = literal` or `name(arg, ...) = literal`
//! per line, `#` comments. Sample files hold several such blocks separated
//! by `---` lines.

use std::collections::HashSet;
use std::sync::Arc;

use thiserror::Error;

use crate::model::{Location, State, Term, Value, Vocabulary};
use crate::syntax::{parse_term, ParseErrorKind};

#[derive(Clone, Debug, PartialEq, Error)]
pub enum InitError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: UnknownSymbol: {message}")]
    UnknownSymbol { line: usize, message: String },
    #[error("line {line}: SortMismatch: {message}")]
    SortMismatch { line: usize, message: String },
    #[error("line {line}: {location} is assigned twice")]
    Duplicate { line: usize, location: Location },
}

fn term(text: &str, line: usize, vocabulary: &Vocabulary) -> Result<Term, InitError> {
    parse_term(text, vocabulary).map_err(|e| {
        let message = e.message;
        match e.kind {
            ParseErrorKind::UnknownSymbol => InitError::UnknownSymbol { line, message },
            ParseErrorKind::SortMismatch => InitError::SortMismatch { line, message },
            _ => InitError::Syntax { line, message },
        }
    })
}

fn literal(t: &Term, line: usize) -> Result<Value, InitError> {
    match t {
        Term::Lit(v) => Ok(*v),
        _ => Err(InitError::Syntax {
            line,
            message: format!("`{t}` is not a literal"),
        }),
    }
}

struct Block {
    state: State,
    seen: HashSet<Location>,
}

impl Block {
    fn new(vocabulary: &Arc<Vocabulary>) -> Block {
        Block {
            state: State::new(vocabulary.clone()),
            seen: HashSet::new(),
        }
    }

    fn assign(&mut self, line: usize, text: &str) -> Result<(), InitError> {
        let vocabulary = self.state.vocabulary().clone();
        let Some((lhs, rhs)) = text.split_once('=') else {
            return Err(InitError::Syntax {
                line,
                message: format!("expected `name = literal`, found `{text}`"),
            });
        };
        let Term::App(name, args) = term(lhs, line, &vocabulary)? else {
            return Err(InitError::Syntax {
                line,
                message: format!("`{}` is not a dynamic location", lhs.trim()),
            });
        };
        let args = args
            .iter()
            .map(|a| literal(a, line))
            .collect::<Result<Vec<_>, _>>()?;
        let value = literal(&term(rhs, line, &vocabulary)?, line)?;
        let location = Location { symbol: name, args };
        if !self.seen.insert(location.clone()) {
            return Err(InitError::Duplicate { line, location });
        }
        self.state
            .set(location, value)
            .map_err(|e| InitError::SortMismatch {
                line,
                message: e.to_string(),
            })
    }
}

fn content(raw: &str) -> &str {
    raw.split('#').next().unwrap_or("").trim()
}

/// Parses one initial state over `vocabulary`. Unlisted locations keep
/// their defaults.
pub fn parse_init(text: &str, vocabulary: &Arc<Vocabulary>) -> Result<State, InitError> {
    let mut block = Block::new(vocabulary);
    for (i, raw) in text.lines().enumerate() {
        let line = content(raw);
        if !line.is_empty() {
            block.assign(i + 1, line)?;
        }
    }
    Ok(block.state)
}

/// Parses a sequence of states separated by `---` lines. Blocks without
/// assignments are ignored.
pub fn parse_samples(text: &str, vocabulary: &Arc<Vocabulary>) -> Result<Vec<State>, InitError> {
    let mut out = Vec::new();
    let mut block = Block::new(vocabulary);
    for (i, raw) in text.lines().enumerate() {
        let line = content(raw);
        if line == "---" {
            if !block.seen.is_empty() {
                out.push(block.state);
            }
            block = Block::new(vocabulary);
        } else if !line.is_empty() {
            block.assign(i + 1, line)?;
        }
    }
    if !block.seen.is_empty() {
        out.push(block.state);
    }
    Ok(out)
}
