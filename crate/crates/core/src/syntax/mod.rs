//! Concrete syntax of programs: rules, parsing, static checks and printing.
//!
//! ```text
//! program  := decl* rule
//! decl     := "dynamic" IDENT "/" NAT (":" sort)?
//! rule     := update | par | flow | cond | "skip" | dyn
//! update   := lhs ":=" term
//! par      := "par" update+ "endpar"
//! flow     := "flow" dyn+ "endflow"
//! dyn      := "Dynamic" "(" lhs "," term ")"
//! cond     := "if" term "then" rule ("else" rule)? "endif"
//! ```
//!
//! `;` may separate rules and declarations; `--` starts a line comment.

mod check;
mod lexer;
mod parser;
mod printer;

use std::collections::HashSet;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::model::{Name, Sort, Symbol, Term, Vocabulary};

pub use printer::{print, print_rule};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Pos {
    pub line: usize,
    pub column: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ParseErrorKind {
    Syntax,
    /// A `par` block holding something other than update rules.
    MixedParBlock,
    /// A `flow` block holding something other than `Dynamic` rules.
    MixedFlowBlock,
    /// Update or `Dynamic` target that is not a dynamic symbol.
    StaticAssignment,
    SortMismatch,
    UnknownSymbol,
    DuplicateDeclaration,
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("{}:{}: {kind}: {message}", pos.line, pos.column)]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub pos: Pos,
    pub message: String,
}

impl ParseError {
    pub(crate) fn new(kind: ParseErrorKind, pos: Pos, message: impl Into<String>) -> Self {
        ParseError {
            kind,
            pos,
            message: message.into(),
        }
    }
}

/// Left-hand side of an update or `Dynamic` rule: a dynamic symbol applied
/// to argument terms.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Target {
    pub symbol: Name,
    pub args: Vec<Term>,
}

impl Target {
    pub fn var(name: &str) -> Target {
        Target {
            symbol: name.into(),
            args: Vec::new(),
        }
    }

    pub fn as_term(&self) -> Term {
        Term::App(self.symbol.clone(), self.args.clone())
    }
}

/// `target := rhs`
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct UpdateRule {
    pub target: Target,
    pub rhs: Term,
}

/// `Dynamic(target, rhs)`: the derivative of `target` is `rhs`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct DynamicRule {
    pub target: Target,
    pub rhs: Term,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Rule {
    Update(UpdateRule),
    Par(Vec<UpdateRule>),
    Dynamic(DynamicRule),
    Flow(Vec<DynamicRule>),
    If {
        guard: Term,
        then: Box<Rule>,
        otherwise: Box<Rule>,
    },
    /// No-op; denotes the empty jump. An `if` without `else` has `Skip`
    /// as its else branch.
    Skip,
}

impl Rule {
    pub fn if_then_else(guard: Term, then: Rule, otherwise: Rule) -> Rule {
        Rule::If {
            guard,
            then: Box::new(then),
            otherwise: Box::new(otherwise),
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Rule::Update(_) => "update",
            Rule::Par(_) => "par",
            Rule::Dynamic(_) => "Dynamic",
            Rule::Flow(_) => "flow",
            Rule::If { .. } => "if",
            Rule::Skip => "skip",
        }
    }

    /// Guards of every `if` in the rule, outermost first.
    pub fn guards(&self) -> Vec<&Term> {
        let mut out = Vec::new();
        self.collect_guards(&mut out);
        out
    }

    fn collect_guards<'a>(&'a self, out: &mut Vec<&'a Term>) {
        if let Rule::If {
            guard,
            then,
            otherwise,
        } = self
        {
            out.push(guard);
            then.collect_guards(out);
            otherwise.collect_guards(out);
        }
    }

    /// Terms of the rule in left-to-right, outside-in order (guard, then
    /// each target followed by its right-hand side), without deduplication.
    fn visit_terms(&self, out: &mut Vec<Term>) {
        fn target_and_rhs(target: &Target, rhs: &Term, out: &mut Vec<Term>) {
            let t = target.as_term();
            out.extend(t.subterms().into_iter().cloned());
            out.extend(rhs.subterms().into_iter().cloned());
        }
        match self {
            Rule::Update(u) => target_and_rhs(&u.target, &u.rhs, out),
            Rule::Dynamic(d) => target_and_rhs(&d.target, &d.rhs, out),
            Rule::Par(us) => us
                .iter()
                .for_each(|u| target_and_rhs(&u.target, &u.rhs, out)),
            Rule::Flow(ds) => ds
                .iter()
                .for_each(|d| target_and_rhs(&d.target, &d.rhs, out)),
            Rule::If {
                guard,
                then,
                otherwise,
            } => {
                out.extend(guard.subterms().into_iter().cloned());
                then.visit_terms(out);
                otherwise.visit_terms(out);
            }
            Rule::Skip => {}
        }
    }

    /// Number of AST nodes (rules and term nodes).
    pub fn size(&self) -> usize {
        let mut terms = Vec::new();
        self.visit_terms(&mut terms);
        let rules = match self {
            Rule::Par(us) => 1 + us.len(),
            Rule::Flow(ds) => 1 + ds.len(),
            Rule::If {
                then, otherwise, ..
            } => 1 + then.size() + otherwise.size(),
            _ => 1,
        };
        rules + terms.len()
    }
}

/// A parsed and checked program.
#[derive(Clone, Debug, PartialEq)]
pub struct Program {
    /// Symbols declared with `dynamic`, in source order.
    pub declarations: Vec<Symbol>,
    /// Declared and inferred dynamic symbols.
    pub vocabulary: Arc<Vocabulary>,
    pub body: Rule,
}

impl Program {
    /// Builds a program from a body, inferring the vocabulary. Fails with
    /// the same diagnostics as `parse` (positions are 0:0).
    pub fn from_rule(declarations: Vec<Symbol>, body: Rule) -> Result<Program, ParseError> {
        check::check_rule(declarations, body)
    }

    /// Real-valued comparisons occurring in guards. These are the atoms
    /// whose truth can change while the state flows.
    pub fn guard_atoms(&self) -> Vec<Term> {
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for g in self.body.guards() {
            for t in g.subterms() {
                if let Term::Op(op, args) = t {
                    if op.is_comparison()
                        && args[0].sort(&self.vocabulary) == Some(Sort::Real)
                        && seen.insert(t.clone())
                    {
                        out.push(t.clone());
                    }
                }
            }
        }
        out
    }

    /// Nullary real-sorted dynamic symbols, in vocabulary order.
    pub fn nullary_reals(&self) -> Vec<Name> {
        self.vocabulary
            .dynamic_symbols()
            .filter(|s| s.arity == 0 && s.sort == Sort::Real)
            .map(|s| s.name.clone())
            .collect()
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print(self))
    }
}

pub fn parse(text: &str) -> Result<Program, ParseError> {
    let tokens = lexer::tokenize(text)?;
    let parsed = parser::Parser::new(tokens).program()?;
    check::check(parsed)
}

/// Parses a single term against a vocabulary (used for observation specs
/// and tests). Undeclared symbols are rejected.
pub fn parse_term(text: &str, vocabulary: &Vocabulary) -> Result<Term, ParseError> {
    let tokens = lexer::tokenize(text)?;
    let pterm = parser::Parser::new(tokens).lone_term()?;
    check::check_term(pterm, vocabulary)
}

/// Ground terms occurring in the program, closed under subterms, in order
/// of first occurrence (left to right, outside in), ending with `true` if
/// it did not occur earlier.
pub fn ground_subterms(program: &Program) -> Vec<Term> {
    let mut all = Vec::new();
    program.body.visit_terms(&mut all);
    all.push(Term::bool(true));
    let mut seen = HashSet::new();
    all.into_iter().filter(|t| seen.insert(t.clone())).collect()
}
