//! Canonical programs from behavior: critical terms, the equality relation
//! they induce in a state, similarity of states, and synthesis of a
//! nested-if program reproducing the generators of a family of samples.

use std::collections::HashMap;

use thiserror::Error;

use crate::model::{eval_term, EvalError, Op, Sort, State, Symbol, TaggedGenerator, Term, Value};
use crate::semantics::{evaluate_rule, RuleError};
use crate::syntax::{ground_subterms, DynamicRule, ParseError, Program, Rule, Target, UpdateRule};

#[derive(Clone, Debug, PartialEq, Error)]
pub enum SynthesisError {
    #[error("NonCriticalValue: {0} is not the value of any critical term")]
    NonCriticalValue(Value),
    #[error("no samples given")]
    NoSamples,
    #[error("every sample failed to evaluate")]
    NoUsableSamples,
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Program(#[from] ParseError),
}

/// The program's critical terms.
pub fn critical_terms(program: &Program) -> Vec<Term> {
    ground_subterms(program)
}

/// Partition of a term list by equal values in one state.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EqualityRelation {
    terms: Vec<Term>,
    /// Block label of each term, numbered by first occurrence.
    labels: Vec<usize>,
    sorts: Vec<Sort>,
}

impl EqualityRelation {
    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn related(&self, i: usize, j: usize) -> bool {
        self.labels[i] == self.labels[j]
    }

    /// Blocks as lists of term indices, in order of first member.
    pub fn blocks(&self) -> Vec<Vec<usize>> {
        let mut out: Vec<Vec<usize>> = Vec::new();
        for (i, &l) in self.labels.iter().enumerate() {
            if l == out.len() {
                out.push(Vec::new());
            }
            out[l].push(i);
        }
        out
    }
}

fn values(state: &State, terms: &[Term]) -> Result<Vec<Value>, EvalError> {
    terms.iter().map(|t| eval_term(t, state)).collect()
}

fn relation_of(terms: &[Term], vals: &[Value]) -> EqualityRelation {
    let mut seen: HashMap<Value, usize> = HashMap::new();
    let labels = vals
        .iter()
        .map(|v| {
            let next = seen.len();
            *seen.entry(*v).or_insert(next)
        })
        .collect();
    EqualityRelation {
        terms: terms.to_vec(),
        labels,
        sorts: vals.iter().map(Value::sort).collect(),
    }
}

pub fn equality_relation(state: &State, terms: &[Term]) -> Result<EqualityRelation, EvalError> {
    Ok(relation_of(terms, &values(state, terms)?))
}

pub fn t_similar(a: &State, b: &State, terms: &[Term]) -> Result<bool, EvalError> {
    Ok(equality_relation(a, terms)?.labels == equality_relation(b, terms)?.labels)
}

/// Conjunction over same-sort pairs `i < j` of `ti = tj` or `not (ti = tj)`,
/// true exactly in the states inducing `rel`.
pub fn guard_term(rel: &EqualityRelation) -> Term {
    let mut guard: Option<Term> = None;
    let n = rel.terms.len();
    for i in 0..n {
        for j in i + 1..n {
            if rel.sorts[i] != rel.sorts[j] {
                continue;
            }
            let eq = Term::eq(rel.terms[i].clone(), rel.terms[j].clone());
            let lit = if rel.related(i, j) {
                eq
            } else {
                Term::negation(eq)
            };
            guard = Some(match guard {
                None => lit,
                Some(g) => Term::and(g, lit),
            });
        }
    }
    guard.unwrap_or(Term::bool(true))
}

struct Representer<'a> {
    terms: &'a [Term],
    vals: Vec<Value>,
}

impl Representer<'_> {
    fn term_for(&self, v: Value) -> Result<Term, SynthesisError> {
        self.vals
            .iter()
            .position(|x| *x == v)
            .map(|i| self.terms[i].clone())
            .ok_or(SynthesisError::NonCriticalValue(v))
    }

    fn target(&self, loc: &crate::model::Location) -> Result<Target, SynthesisError> {
        Ok(Target {
            symbol: loc.symbol.clone(),
            args: loc
                .args
                .iter()
                .map(|a| self.term_for(*a))
                .collect::<Result<_, _>>()?,
        })
    }
}

/// A rule whose generator in `state` is `gen`, writing every element as the
/// first critical term that evaluates to it.
pub fn rule_from_generator(
    gen: &TaggedGenerator,
    terms: &[Term],
    state: &State,
) -> Result<Rule, SynthesisError> {
    let rep = Representer {
        terms,
        vals: values(state, terms)?,
    };
    match gen {
        TaggedGenerator::Jump(u) if u.is_empty() => Ok(Rule::Skip),
        TaggedGenerator::Jump(u) => {
            let mut updates = Vec::new();
            for (loc, v) in u {
                updates.push(UpdateRule {
                    target: rep.target(loc)?,
                    rhs: rep.term_for(*v)?,
                });
            }
            Ok(Rule::Par(updates))
        }
        TaggedGenerator::Flow(d) => {
            let mut dynamics = Vec::new();
            for (loc, v) in d {
                dynamics.push(DynamicRule {
                    target: rep.target(loc)?,
                    rhs: rep.term_for(*v)?,
                });
            }
            Ok(Rule::Flow(dynamics))
        }
    }
}

/// A sample that could not be used.
#[derive(Clone, Debug, PartialEq)]
pub struct Skipped {
    pub index: usize,
    pub error: RuleError,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Synthesis {
    pub program: Program,
    /// Indices of the samples kept as class representatives, in branch order.
    pub representatives: Vec<usize>,
    pub skipped: Vec<Skipped>,
}

/// Builds the canonical program for `samples` using the critical terms of
/// `program`. Jump classes come first, then flow classes; the last branch is
/// unguarded.
pub fn synthesize(samples: &[State], program: &Program) -> Result<Synthesis, SynthesisError> {
    if samples.is_empty() {
        return Err(SynthesisError::NoSamples);
    }
    let terms = critical_terms(program);
    let mut skipped = Vec::new();
    let mut classes: Vec<(usize, Vec<usize>, TaggedGenerator)> = Vec::new();
    for (index, s) in samples.iter().enumerate() {
        let gen = match evaluate_rule(&program.body, s) {
            Ok(g) => g,
            Err(error) => {
                skipped.push(Skipped { index, error });
                continue;
            }
        };
        let rel = match equality_relation(s, &terms) {
            Ok(r) => r,
            Err(e) => {
                skipped.push(Skipped {
                    index,
                    error: e.into(),
                });
                continue;
            }
        };
        if classes.iter().all(|(_, labels, _)| *labels != rel.labels) {
            classes.push((index, rel.labels, gen));
        }
    }
    if classes.is_empty() {
        return Err(SynthesisError::NoUsableSamples);
    }
    classes.sort_by_key(|(_, _, g)| !g.is_jump());

    let mut branches = Vec::new();
    for (index, _, gen) in &classes {
        let s = &samples[*index];
        let guard = guard_term(&equality_relation(s, &terms)?);
        branches.push((guard, rule_from_generator(gen, &terms, s)?));
    }
    let (_, mut body) = branches.pop().expect("at least one class");
    while let Some((guard, rule)) = branches.pop() {
        body = Rule::if_then_else(guard, rule, body);
    }

    let mut declarations = program.declarations.clone();
    for sym in program.vocabulary.dynamic_symbols() {
        let declared = declarations
            .iter()
            .any(|d| d.name == sym.name && d.arity == sym.arity);
        if sym.sort == Sort::Bool && !declared {
            declarations.push(Symbol::dynamic(&sym.name, sym.arity, Sort::Bool));
        }
    }
    Ok(Synthesis {
        program: Program::from_rule(declarations, body)?,
        representatives: classes.iter().map(|(i, _, _)| *i).collect(),
        skipped,
    })
}

/// Conjuncts of a guard built by [`guard_term`].
pub fn conjuncts(guard: &Term) -> Vec<&Term> {
    match guard {
        Term::Op(Op::And, args) => {
            let mut out = conjuncts(&args[0]);
            out.extend(conjuncts(&args[1]));
            out
        }
        t => vec![t],
    }
}
