//! Sort inference and static checks; lowering of the parse tree to rules.
//!
//! Undeclared symbols are inferred: each `(name, arity)` pair gets the sort
//! its uses demand, defaulting to `real`. A name that is declared is never
//! inferred at another arity.

use std::collections::{BTreeMap, HashSet};
use std::sync::Arc;

use super::parser::{PDecl, PNode, PProgram, PRule, PTarget, PTerm};
use super::{DynamicRule, ParseError, ParseErrorKind, Pos, Program, Rule, Target, UpdateRule};
use crate::model::{Sort, Symbol, Term, Vocabulary};

type Key = (String, usize);

struct Checker {
    declared: BTreeMap<Key, Sort>,
    declared_names: HashSet<String>,
    inferred: BTreeMap<Key, Option<Sort>>,
}

fn err(kind: ParseErrorKind, pos: Pos, msg: impl Into<String>) -> ParseError {
    ParseError::new(kind, pos, msg)
}

impl Checker {
    fn new(decls: &[PDecl]) -> Result<Checker, ParseError> {
        let mut declared = BTreeMap::new();
        let mut declared_names = HashSet::new();
        for d in decls {
            if declared.insert((d.name.clone(), d.arity), d.sort).is_some() {
                return Err(err(
                    ParseErrorKind::DuplicateDeclaration,
                    d.pos,
                    format!("{}/{} is declared twice", d.name, d.arity),
                ));
            }
            declared_names.insert(d.name.clone());
        }
        Ok(Checker {
            declared,
            declared_names,
            inferred: BTreeMap::new(),
        })
    }

    fn from_vocabulary(vocab: &Vocabulary) -> Checker {
        let declared: BTreeMap<Key, Sort> = vocab
            .dynamic_symbols()
            .map(|s| ((s.name.to_string(), s.arity), s.sort))
            .collect();
        let declared_names = declared.keys().map(|(n, _)| n.clone()).collect();
        Checker {
            declared,
            declared_names,
            inferred: BTreeMap::new(),
        }
    }

    fn symbol_sort(&self, name: &str, arity: usize) -> Option<Sort> {
        let key = (name.to_string(), arity);
        self.declared
            .get(&key)
            .copied()
            .or_else(|| self.inferred.get(&key).copied().flatten())
    }

    fn register(
        &mut self,
        name: &str,
        arity: usize,
        pos: Pos,
        infer: bool,
    ) -> Result<(), ParseError> {
        let key = (name.to_string(), arity);
        if self.declared.contains_key(&key) {
            return Ok(());
        }
        if !infer || self.declared_names.contains(name) {
            return Err(err(
                ParseErrorKind::UnknownSymbol,
                pos,
                format!("unknown symbol {name}/{arity}"),
            ));
        }
        self.inferred.entry(key).or_insert(None);
        Ok(())
    }

    fn register_term(&mut self, t: &PTerm, infer: bool) -> Result<(), ParseError> {
        match &t.node {
            PNode::Lit(_) => Ok(()),
            PNode::Op(_, args) => args.iter().try_for_each(|a| self.register_term(a, infer)),
            PNode::App(name, args) => {
                self.register(name, args.len(), t.pos, infer)?;
                args.iter().try_for_each(|a| self.register_term(a, infer))
            }
        }
    }

    fn register_target(&mut self, t: &PTarget) -> Result<(), ParseError> {
        self.register(&t.symbol, t.args.len(), t.pos, true)?;
        t.args.iter().try_for_each(|a| self.register_term(a, true))
    }

    fn register_rule(&mut self, r: &PRule) -> Result<(), ParseError> {
        match r {
            PRule::Update(t, rhs) | PRule::Dynamic(t, rhs) => {
                self.register_target(t)?;
                self.register_term(rhs, true)
            }
            PRule::Par(items) | PRule::Flow(items) => items.iter().try_for_each(|(t, rhs)| {
                self.register_target(t)?;
                self.register_term(rhs, true)
            }),
            PRule::If(g, a, b) => {
                self.register_term(g, true)?;
                self.register_rule(a)?;
                self.register_rule(b)
            }
            PRule::Skip => Ok(()),
        }
    }

    fn sort_of(&self, t: &PTerm) -> Option<Sort> {
        match &t.node {
            PNode::Lit(v) => Some(v.sort()),
            PNode::Op(op, _) => Some(op.result_sort()),
            PNode::App(name, args) => self.symbol_sort(name, args.len()),
        }
    }

    fn demand(&mut self, name: &str, arity: usize, sort: Option<Sort>) -> bool {
        let Some(sort) = sort else { return false };
        match self.inferred.get_mut(&(name.to_string(), arity)) {
            Some(slot @ None) => {
                *slot = Some(sort);
                true
            }
            _ => false,
        }
    }

    /// One propagation pass; returns whether any sort was learned.
    fn constrain(&mut self, t: &PTerm, expected: Option<Sort>) -> bool {
        match &t.node {
            PNode::Lit(_) => false,
            PNode::App(name, args) => {
                let mut changed = self.demand(name, args.len(), expected);
                for a in args {
                    changed |= self.constrain(a, None);
                }
                changed
            }
            PNode::Op(op, args) => {
                let want = match op.arg_sort() {
                    Some(s) => Some(s),
                    None => args.iter().find_map(|a| self.sort_of(a)),
                };
                let mut changed = false;
                for a in args {
                    changed |= self.constrain(a, want);
                }
                changed
            }
        }
    }

    fn constrain_assignment(
        &mut self,
        target: &PTarget,
        rhs: &PTerm,
        target_sort: Option<Sort>,
    ) -> bool {
        let lhs = target_sort.or_else(|| self.sort_of(rhs));
        let mut changed = self.demand(&target.symbol, target.args.len(), lhs);
        for a in &target.args {
            changed |= self.constrain(a, None);
        }
        let rhs_sort = target_sort.or_else(|| self.symbol_sort(&target.symbol, target.args.len()));
        changed | self.constrain(rhs, rhs_sort)
    }

    fn constrain_rule(&mut self, r: &PRule) -> bool {
        match r {
            PRule::Update(t, rhs) => self.constrain_assignment(t, rhs, None),
            PRule::Dynamic(t, rhs) => self.constrain_assignment(t, rhs, Some(Sort::Real)),
            PRule::Par(items) => items.iter().fold(false, |c, (t, rhs)| {
                self.constrain_assignment(t, rhs, None) | c
            }),
            PRule::Flow(items) => items.iter().fold(false, |c, (t, rhs)| {
                self.constrain_assignment(t, rhs, Some(Sort::Real)) | c
            }),
            PRule::If(g, a, b) => {
                let c = self.constrain(g, Some(Sort::Bool));
                let c = self.constrain_rule(a) | c;
                self.constrain_rule(b) | c
            }
            PRule::Skip => false,
        }
    }

    fn lower_term(&self, t: &PTerm) -> Result<(Term, Sort), ParseError> {
        match &t.node {
            PNode::Lit(v) => Ok((Term::Lit(*v), v.sort())),
            PNode::App(name, args) => {
                let sort = self.symbol_sort(name, args.len()).ok_or_else(|| {
                    err(
                        ParseErrorKind::UnknownSymbol,
                        t.pos,
                        format!("unknown symbol {name}/{}", args.len()),
                    )
                })?;
                let args = args
                    .iter()
                    .map(|a| self.lower_term(a).map(|(t, _)| t))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok((Term::App(name.as_str().into(), args), sort))
            }
            PNode::Op(op, args) => {
                let lowered = args
                    .iter()
                    .map(|a| self.lower_term(a))
                    .collect::<Result<Vec<_>, _>>()?;
                match op.arg_sort() {
                    Some(want) => {
                        for ((_, got), a) in lowered.iter().zip(args) {
                            if *got != want {
                                return Err(err(
                                    ParseErrorKind::SortMismatch,
                                    a.pos,
                                    format!(
                                        "`{}` expects {want} operands, found {got}",
                                        op.token()
                                    ),
                                ));
                            }
                        }
                    }
                    None => {
                        if lowered[0].1 != lowered[1].1 {
                            return Err(err(
                                ParseErrorKind::SortMismatch,
                                args[1].pos,
                                format!("`=` compares {} with {}", lowered[0].1, lowered[1].1),
                            ));
                        }
                    }
                }
                let terms = lowered.into_iter().map(|(t, _)| t).collect();
                Ok((Term::Op(*op, terms), op.result_sort()))
            }
        }
    }

    fn lower_target(&self, t: &PTarget) -> Result<(Target, Sort), ParseError> {
        let sort = self.symbol_sort(&t.symbol, t.args.len()).ok_or_else(|| {
            err(
                ParseErrorKind::UnknownSymbol,
                t.pos,
                format!("unknown symbol {}/{}", t.symbol, t.args.len()),
            )
        })?;
        let args = t
            .args
            .iter()
            .map(|a| self.lower_term(a).map(|(t, _)| t))
            .collect::<Result<Vec<_>, _>>()?;
        Ok((
            Target {
                symbol: t.symbol.as_str().into(),
                args,
            },
            sort,
        ))
    }

    fn lower_update(&self, t: &PTarget, rhs: &PTerm) -> Result<UpdateRule, ParseError> {
        let (target, lhs_sort) = self.lower_target(t)?;
        let (rhs_term, rhs_sort) = self.lower_term(rhs)?;
        if lhs_sort != rhs_sort {
            return Err(err(
                ParseErrorKind::SortMismatch,
                rhs.pos,
                format!(
                    "{} is {lhs_sort} but is assigned a {rhs_sort} term",
                    t.symbol
                ),
            ));
        }
        Ok(UpdateRule {
            target,
            rhs: rhs_term,
        })
    }

    fn lower_dynamic(&self, t: &PTarget, rhs: &PTerm) -> Result<DynamicRule, ParseError> {
        let (target, lhs_sort) = self.lower_target(t)?;
        if lhs_sort != Sort::Real {
            return Err(err(
                ParseErrorKind::SortMismatch,
                t.pos,
                format!("Dynamic target {} must be real, not {lhs_sort}", t.symbol),
            ));
        }
        let (rhs_term, rhs_sort) = self.lower_term(rhs)?;
        if rhs_sort != Sort::Real {
            return Err(err(
                ParseErrorKind::SortMismatch,
                rhs.pos,
                format!("derivative of {} must be real, not {rhs_sort}", t.symbol),
            ));
        }
        Ok(DynamicRule {
            target,
            rhs: rhs_term,
        })
    }

    fn lower_rule(&self, r: &PRule) -> Result<Rule, ParseError> {
        Ok(match r {
            PRule::Update(t, rhs) => Rule::Update(self.lower_update(t, rhs)?),
            PRule::Dynamic(t, rhs) => Rule::Dynamic(self.lower_dynamic(t, rhs)?),
            PRule::Par(items) => Rule::Par(
                items
                    .iter()
                    .map(|(t, rhs)| self.lower_update(t, rhs))
                    .collect::<Result<_, _>>()?,
            ),
            PRule::Flow(items) => Rule::Flow(
                items
                    .iter()
                    .map(|(t, rhs)| self.lower_dynamic(t, rhs))
                    .collect::<Result<_, _>>()?,
            ),
            PRule::If(g, a, b) => {
                let (guard, sort) = self.lower_term(g)?;
                if sort != Sort::Bool {
                    return Err(err(
                        ParseErrorKind::SortMismatch,
                        g.pos,
                        format!("guard must be bool, not {sort}"),
                    ));
                }
                Rule::if_then_else(guard, self.lower_rule(a)?, self.lower_rule(b)?)
            }
            PRule::Skip => Rule::Skip,
        })
    }

    fn vocabulary(&self) -> Vocabulary {
        let mut v = Vocabulary::new();
        for ((name, arity), sort) in &self.declared {
            v.insert(Symbol::dynamic(name, *arity, *sort));
        }
        for ((name, arity), sort) in &self.inferred {
            v.insert(Symbol::dynamic(name, *arity, sort.unwrap_or(Sort::Real)));
        }
        v
    }
}

pub(crate) fn check(p: PProgram) -> Result<Program, ParseError> {
    let mut c = Checker::new(&p.decls)?;
    c.register_rule(&p.body)?;
    while c.constrain_rule(&p.body) {}
    for slot in c.inferred.values_mut() {
        slot.get_or_insert(Sort::Real);
    }
    let body = c.lower_rule(&p.body)?;
    let declarations = p
        .decls
        .iter()
        .map(|d| Symbol::dynamic(&d.name, d.arity, d.sort))
        .collect();
    Ok(Program {
        declarations,
        vocabulary: Arc::new(c.vocabulary()),
        body,
    })
}

pub(crate) fn check_term(t: PTerm, vocab: &Vocabulary) -> Result<Term, ParseError> {
    let mut c = Checker::from_vocabulary(vocab);
    c.register_term(&t, false)?;
    c.lower_term(&t).map(|(t, _)| t)
}

const NOWHERE: Pos = Pos { line: 0, column: 0 };

fn unlower_term(t: &Term) -> PTerm {
    let node = match t {
        Term::Lit(v) => PNode::Lit(*v),
        Term::Op(op, args) => PNode::Op(*op, args.iter().map(unlower_term).collect()),
        Term::App(name, args) => {
            PNode::App(name.to_string(), args.iter().map(unlower_term).collect())
        }
    };
    PTerm { node, pos: NOWHERE }
}

fn unlower_target(t: &Target) -> PTarget {
    PTarget {
        symbol: t.symbol.to_string(),
        args: t.args.iter().map(unlower_term).collect(),
        pos: NOWHERE,
    }
}

fn unlower_rule(r: &Rule) -> PRule {
    match r {
        Rule::Update(u) => PRule::Update(unlower_target(&u.target), unlower_term(&u.rhs)),
        Rule::Dynamic(d) => PRule::Dynamic(unlower_target(&d.target), unlower_term(&d.rhs)),
        Rule::Par(us) => PRule::Par(
            us.iter()
                .map(|u| (unlower_target(&u.target), unlower_term(&u.rhs)))
                .collect(),
        ),
        Rule::Flow(ds) => PRule::Flow(
            ds.iter()
                .map(|d| (unlower_target(&d.target), unlower_term(&d.rhs)))
                .collect(),
        ),
        Rule::If {
            guard,
            then,
            otherwise,
        } => PRule::If(
            unlower_term(guard),
            Box::new(unlower_rule(then)),
            Box::new(unlower_rule(otherwise)),
        ),
        Rule::Skip => PRule::Skip,
    }
}

pub(crate) fn check_rule(declarations: Vec<Symbol>, body: Rule) -> Result<Program, ParseError> {
    fn has_empty_block(r: &Rule) -> bool {
        match r {
            Rule::Par(v) => v.is_empty(),
            Rule::Flow(v) => v.is_empty(),
            Rule::If {
                then, otherwise, ..
            } => has_empty_block(then) || has_empty_block(otherwise),
            _ => false,
        }
    }
    if has_empty_block(&body) {
        return Err(err(
            ParseErrorKind::Syntax,
            NOWHERE,
            "empty par or flow block",
        ));
    }
    let decls: Vec<PDecl> = declarations
        .iter()
        .map(|s| PDecl {
            name: s.name.to_string(),
            arity: s.arity,
            sort: s.sort,
            pos: NOWHERE,
        })
        .collect();
    let p = PProgram {
        decls,
        body: unlower_rule(&body),
    };
    let program = check(p)?;
    debug_assert_eq!(program.body, body);
    Ok(program)
}
