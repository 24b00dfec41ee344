//! State model: values, vocabulary, ground terms, locations, updates and
//! the tagged generator produced by a rule.
//!
//! The background structure is fixed: two sorts (`real`, `bool`) with the
//! usual arithmetic, comparisons and connectives as static symbols. Everything
//! else in a program is a dynamic symbol whose interpretation lives in a
//! [`State`] as a finitely supported map.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use thiserror::Error;

/// Interned identifier.
pub type Name = Arc<str>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Sort {
    Real,
    Bool,
}

impl Sort {
    pub fn default_value(self) -> Value {
        match self {
            Sort::Real => Value::Real(0.0),
            Sort::Bool => Value::Bool(false),
        }
    }
}

impl fmt::Display for Sort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sort::Real => "real",
            Sort::Bool => "bool",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("sort error: {0}")]
    Sort(String),
    #[error("unknown symbol {name}/{arity}")]
    UnknownSymbol { name: Name, arity: usize },
}

/// An element of the base set.
///
/// Reals are always finite and `-0.0` is stored as `0.0`, so equality is
/// bitwise on the payload and agrees with numeric equality. Build reals with
/// [`Value::real`] to keep that invariant.
#[derive(Clone, Copy, Debug)]
pub enum Value {
    Real(f64),
    Bool(bool),
}

impl Value {
    pub fn real(x: f64) -> Result<Value, EvalError> {
        if !x.is_finite() {
            return Err(EvalError::Domain(format!("non-finite result {x}")));
        }
        // canonical zero
        Ok(Value::Real(if x == 0.0 { 0.0 } else { x }))
    }

    pub fn sort(&self) -> Sort {
        match self {
            Value::Real(_) => Sort::Real,
            Value::Bool(_) => Sort::Bool,
        }
    }

    pub fn as_real(&self) -> Option<f64> {
        match *self {
            Value::Real(x) => Some(x),
            Value::Bool(_) => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match *self {
            Value::Bool(b) => Some(b),
            Value::Real(_) => None,
        }
    }

    fn is_default(&self) -> bool {
        *self == self.sort().default_value()
    }
}

impl PartialEq for Value {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Value::Real(a), Value::Real(b)) => a.to_bits() == b.to_bits(),
            (Value::Bool(a), Value::Bool(b)) => a == b,
            _ => false,
        }
    }
}

impl Eq for Value {}

impl Hash for Value {
    fn hash<H: Hasher>(&self, state: &mut H) {
        match self {
            Value::Real(x) => {
                0u8.hash(state);
                x.to_bits().hash(state);
            }
            Value::Bool(b) => {
                1u8.hash(state);
                b.hash(state);
            }
        }
    }
}

impl Ord for Value {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Value::Bool(a), Value::Bool(b)) => a.cmp(b),
            (Value::Bool(_), Value::Real(_)) => Ordering::Less,
            (Value::Real(_), Value::Bool(_)) => Ordering::Greater,
            (Value::Real(a), Value::Real(b)) => a.total_cmp(b),
        }
    }
}

impl PartialOrd for Value {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Real(x) => f.write_str(&format_real(*x)),
            Value::Bool(b) => write!(f, "{b}"),
        }
    }
}

/// Shortest text that parses back to exactly `x`.
pub fn format_real(x: f64) -> String {
    let plain = format!("{x}");
    if plain.len() > 20 {
        format!("{x:e}")
    } else {
        plain
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SymbolKind {
    Static,
    Dynamic,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Symbol {
    pub name: Name,
    pub arity: usize,
    pub kind: SymbolKind,
    /// Result sort. Relational symbols are exactly the `bool`-sorted ones.
    pub sort: Sort,
}

impl Symbol {
    pub fn dynamic(name: &str, arity: usize, sort: Sort) -> Symbol {
        Symbol {
            name: name.into(),
            arity,
            kind: SymbolKind::Dynamic,
            sort,
        }
    }

    pub fn relational(&self) -> bool {
        self.sort == Sort::Bool
    }
}

/// Built-in operations of the static background.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Op {
    Add,
    Sub,
    Neg,
    Mul,
    Div,
    Eq,
    Lt,
    Le,
    And,
    Or,
    Not,
}

impl Op {
    pub const ALL: [Op; 11] = [
        Op::Add,
        Op::Sub,
        Op::Neg,
        Op::Mul,
        Op::Div,
        Op::Eq,
        Op::Lt,
        Op::Le,
        Op::And,
        Op::Or,
        Op::Not,
    ];

    pub fn arity(self) -> usize {
        match self {
            Op::Neg | Op::Not => 1,
            _ => 2,
        }
    }

    pub fn token(self) -> &'static str {
        match self {
            Op::Add => "+",
            Op::Sub | Op::Neg => "-",
            Op::Mul => "*",
            Op::Div => "/",
            Op::Eq => "=",
            Op::Lt => "<",
            Op::Le => "<=",
            Op::And => "and",
            Op::Or => "or",
            Op::Not => "not",
        }
    }

    /// Sort expected of each argument; `None` for `=`, which takes any
    /// two arguments of one sort.
    pub fn arg_sort(self) -> Option<Sort> {
        match self {
            Op::Add | Op::Sub | Op::Neg | Op::Mul | Op::Div | Op::Lt | Op::Le => Some(Sort::Real),
            Op::And | Op::Or | Op::Not => Some(Sort::Bool),
            Op::Eq => None,
        }
    }

    pub fn result_sort(self) -> Sort {
        match self {
            Op::Add | Op::Sub | Op::Neg | Op::Mul | Op::Div => Sort::Real,
            _ => Sort::Bool,
        }
    }

    pub fn is_comparison(self) -> bool {
        matches!(self, Op::Eq | Op::Lt | Op::Le)
    }
}

/// Dynamic symbols of a program, keyed by `(name, arity)`. The static
/// background is implicit and shared by every vocabulary.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Vocabulary {
    dynamics: BTreeMap<(Name, usize), Symbol>,
}

impl Vocabulary {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a dynamic symbol; returns `false` if `(name, arity)` was taken.
    pub fn insert(&mut self, symbol: Symbol) -> bool {
        let key = (symbol.name.clone(), symbol.arity);
        if self.dynamics.contains_key(&key) {
            return false;
        }
        self.dynamics.insert(key, symbol);
        true
    }

    pub fn get(&self, name: &str, arity: usize) -> Option<&Symbol> {
        self.dynamics.get(&(Name::from(name), arity))
    }

    pub fn has_name(&self, name: &str) -> bool {
        self.dynamics.keys().any(|(n, _)| &**n == name)
    }

    pub fn dynamic_symbols(&self) -> impl Iterator<Item = &Symbol> {
        self.dynamics.values()
    }

    pub fn len(&self) -> usize {
        self.dynamics.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dynamics.is_empty()
    }

    /// Union of two vocabularies; fails on a `(name, arity)` present in
    /// both with different sorts.
    pub fn merged(&self, other: &Vocabulary) -> Option<Vocabulary> {
        let mut out = self.clone();
        for sym in other.dynamic_symbols() {
            match out.get(&sym.name, sym.arity) {
                Some(existing) if existing.sort != sym.sort => return None,
                Some(_) => {}
                None => {
                    out.insert(sym.clone());
                }
            }
        }
        Some(out)
    }

    /// The built-in static symbols, for display.
    pub fn static_symbols() -> Vec<Symbol> {
        let mut out: Vec<Symbol> = Op::ALL
            .iter()
            .map(|op| Symbol {
                name: op.token().into(),
                arity: op.arity(),
                kind: SymbolKind::Static,
                sort: op.result_sort(),
            })
            .collect();
        for lit in ["true", "false"] {
            out.push(Symbol {
                name: lit.into(),
                arity: 0,
                kind: SymbolKind::Static,
                sort: Sort::Bool,
            });
        }
        out
    }
}

/// A ground term. There are no variables in the language.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    /// Real literal or `true`/`false`.
    Lit(Value),
    /// Built-in operation applied to `op.arity()` arguments.
    Op(Op, Vec<Term>),
    /// Dynamic symbol application; nullary symbols have no arguments.
    App(Name, Vec<Term>),
}

impl Term {
    pub fn var(name: &str) -> Term {
        Term::App(name.into(), Vec::new())
    }

    pub fn app(name: &str, args: Vec<Term>) -> Term {
        Term::App(name.into(), args)
    }

    /// Real literal. Panics on a non-finite value.
    pub fn real(x: f64) -> Term {
        Term::Lit(Value::real(x).expect("finite literal"))
    }

    pub fn bool(b: bool) -> Term {
        Term::Lit(Value::Bool(b))
    }

    pub fn unary(op: Op, a: Term) -> Term {
        debug_assert_eq!(op.arity(), 1);
        Term::Op(op, vec![a])
    }

    pub fn binary(op: Op, a: Term, b: Term) -> Term {
        debug_assert_eq!(op.arity(), 2);
        Term::Op(op, vec![a, b])
    }

    pub fn eq(a: Term, b: Term) -> Term {
        Term::binary(Op::Eq, a, b)
    }

    pub fn and(a: Term, b: Term) -> Term {
        Term::binary(Op::And, a, b)
    }

    pub fn negation(a: Term) -> Term {
        Term::unary(Op::Not, a)
    }

    pub fn args(&self) -> &[Term] {
        match self {
            Term::Lit(_) => &[],
            Term::Op(_, args) | Term::App(_, args) => args,
        }
    }

    /// Result sort, or `None` if the head is unknown to `vocab`.
    pub fn sort(&self, vocab: &Vocabulary) -> Option<Sort> {
        match self {
            Term::Lit(v) => Some(v.sort()),
            Term::Op(op, _) => Some(op.result_sort()),
            Term::App(name, args) => vocab.get(name, args.len()).map(|s| s.sort),
        }
    }

    /// Pre-order walk: the term itself, then its arguments left to right.
    pub fn subterms(&self) -> Vec<&Term> {
        let mut out = Vec::new();
        let mut stack = vec![self];
        while let Some(t) = stack.pop() {
            out.push(t);
            stack.extend(t.args().iter().rev());
        }
        out
    }

    /// Size in nodes.
    pub fn size(&self) -> usize {
        1 + self.args().iter().map(Term::size).sum::<usize>()
    }
}

/// A dynamic symbol together with an argument tuple.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Location {
    pub symbol: Name,
    pub args: Vec<Value>,
}

impl Location {
    pub fn new(symbol: &str, args: Vec<Value>) -> Location {
        Location {
            symbol: symbol.into(),
            args,
        }
    }

    pub fn nullary(symbol: &str) -> Location {
        Location::new(symbol, Vec::new())
    }

    pub fn arity(&self) -> usize {
        self.args.len()
    }
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.symbol)?;
        if !self.args.is_empty() {
            f.write_str("(")?;
            for (i, a) in self.args.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{a}")?;
            }
            f.write_str(")")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Update {
    pub location: Location,
    pub value: Value,
}

impl fmt::Display for Update {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ↦ {}", self.location, self.value)
    }
}

/// Clash-free set of updates: at most one value per location.
pub type UpdateSet = BTreeMap<Location, Value>;

/// Interpretation of the dynamic symbols over a fixed vocabulary.
///
/// Unmapped locations read as their sort's default (`0` or `false`).
/// Entries equal to the default are never stored, so two states are equal
/// exactly when they agree at every location.
#[derive(Clone, Debug)]
pub struct State {
    vocabulary: Arc<Vocabulary>,
    values: BTreeMap<Location, Value>,
}

impl State {
    pub fn new(vocabulary: Arc<Vocabulary>) -> State {
        State {
            vocabulary,
            values: BTreeMap::new(),
        }
    }

    pub fn vocabulary(&self) -> &Arc<Vocabulary> {
        &self.vocabulary
    }

    fn symbol_for(&self, loc: &Location) -> Result<&Symbol, EvalError> {
        self.vocabulary
            .get(&loc.symbol, loc.arity())
            .ok_or_else(|| EvalError::UnknownSymbol {
                name: loc.symbol.clone(),
                arity: loc.arity(),
            })
    }

    pub fn get(&self, loc: &Location) -> Result<Value, EvalError> {
        let sym = self.symbol_for(loc)?;
        Ok(self
            .values
            .get(loc)
            .copied()
            .unwrap_or_else(|| sym.sort.default_value()))
    }

    /// Reads a nullary real; `None` if unknown or not real.
    pub fn real(&self, name: &str) -> Option<f64> {
        self.get(&Location::nullary(name)).ok()?.as_real()
    }

    /// Sort-checked write.
    pub fn set(&mut self, loc: Location, value: Value) -> Result<(), EvalError> {
        let sym = self.symbol_for(&loc)?;
        if sym.sort != value.sort() {
            return Err(EvalError::Sort(format!(
                "{loc} is {} but was given {value}",
                sym.sort
            )));
        }
        self.write(loc, value);
        Ok(())
    }

    pub fn with(mut self, name: &str, value: Value) -> Result<State, EvalError> {
        self.set(Location::nullary(name), value)?;
        Ok(self)
    }

    fn write(&mut self, loc: Location, value: Value) {
        if value.is_default() {
            self.values.remove(&loc);
        } else {
            self.values.insert(loc, value);
        }
    }

    /// Explicitly stored (non-default) locations.
    pub fn entries(&self) -> impl Iterator<Item = (&Location, &Value)> {
        self.values.iter()
    }

    /// Successor state: identical except at the listed locations.
    pub fn apply_updates(&self, updates: &UpdateSet) -> State {
        let mut next = self.clone();
        for (loc, value) in updates {
            next.write(loc.clone(), *value);
        }
        next
    }

    /// `after \ before`: every location whose value differs, with its value
    /// in `after`.
    pub fn diff(after: &State, before: &State) -> UpdateSet {
        let mut out = UpdateSet::new();
        for (loc, v) in &after.values {
            if before.values.get(loc) != Some(v) {
                out.insert(loc.clone(), *v);
            }
        }
        for (loc, v) in &before.values {
            if !after.values.contains_key(loc) {
                out.insert(loc.clone(), v.sort().default_value());
            }
        }
        out
    }

    /// Same state over another vocabulary (e.g. an extension of this one).
    pub fn with_vocabulary(&self, vocabulary: Arc<Vocabulary>) -> Result<State, EvalError> {
        let mut out = State::new(vocabulary);
        for (loc, v) in &self.values {
            out.set(loc.clone(), *v)?;
        }
        Ok(out)
    }
}

impl PartialEq for State {
    fn eq(&self, other: &Self) -> bool {
        (Arc::ptr_eq(&self.vocabulary, &other.vocabulary) || self.vocabulary == other.vocabulary)
            && self.values == other.values
    }
}

impl fmt::Display for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (loc, v)) in self.values.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{loc} = {v}")?;
        }
        f.write_str("}")
    }
}

/// Hook into term evaluation. The engine uses `override_atom` to evaluate a
/// guard atom at the root it has just crossed; tests use `visit` to record
/// which terms evaluation consults.
pub trait EvalHook {
    fn override_atom(&self, _atom: &Term) -> Option<bool> {
        None
    }

    fn visit(&mut self, _term: &Term) {}
}

/// Hook that changes nothing.
pub struct Plain;

impl EvalHook for Plain {}

pub fn eval_term(term: &Term, state: &State) -> Result<Value, EvalError> {
    eval_term_with(term, state, &mut Plain)
}

pub fn eval_term_with(
    term: &Term,
    state: &State,
    hook: &mut dyn EvalHook,
) -> Result<Value, EvalError> {
    hook.visit(term);
    match term {
        Term::Lit(v) => Ok(*v),
        Term::App(name, args) => {
            let args = args
                .iter()
                .map(|a| eval_term_with(a, state, hook))
                .collect::<Result<Vec<_>, _>>()?;
            state.get(&Location {
                symbol: name.clone(),
                args,
            })
        }
        Term::Op(op, args) => {
            if args.len() != op.arity() {
                return Err(EvalError::Sort(format!(
                    "`{}` expects {} arguments",
                    op.token(),
                    op.arity()
                )));
            }
            if let Some(forced) = hook.override_atom(term) {
                // still walk the operands so `visit` sees the same terms
                for a in args {
                    eval_term_with(a, state, hook)?;
                }
                return Ok(Value::Bool(forced));
            }
            let vals = args
                .iter()
                .map(|a| eval_term_with(a, state, hook))
                .collect::<Result<Vec<_>, _>>()?;
            apply_op(*op, &vals)
        }
    }
}

fn real_arg(op: Op, v: Value) -> Result<f64, EvalError> {
    v.as_real()
        .ok_or_else(|| EvalError::Sort(format!("`{}` applied to boolean {v}", op.token())))
}

fn bool_arg(op: Op, v: Value) -> Result<bool, EvalError> {
    v.as_bool()
        .ok_or_else(|| EvalError::Sort(format!("`{}` applied to real {v}", op.token())))
}

/// Interpretation of the static background.
pub fn apply_op(op: Op, vals: &[Value]) -> Result<Value, EvalError> {
    match op {
        Op::Neg => Value::real(-real_arg(op, vals[0])?),
        Op::Not => Ok(Value::Bool(!bool_arg(op, vals[0])?)),
        Op::Add | Op::Sub | Op::Mul | Op::Div => {
            let a = real_arg(op, vals[0])?;
            let b = real_arg(op, vals[1])?;
            let r = match op {
                Op::Add => a + b,
                Op::Sub => a - b,
                Op::Mul => a * b,
                _ => {
                    if b == 0.0 {
                        return Err(EvalError::Domain(format!("division by zero ({a} / 0)")));
                    }
                    a / b
                }
            };
            Value::real(r)
        }
        Op::Lt | Op::Le => {
            let a = real_arg(op, vals[0])?;
            let b = real_arg(op, vals[1])?;
            Ok(Value::Bool(if op == Op::Lt { a < b } else { a <= b }))
        }
        Op::Eq => {
            if vals[0].sort() != vals[1].sort() {
                return Err(EvalError::Sort(format!(
                    "`=` between {} and {}",
                    vals[0].sort(),
                    vals[1].sort()
                )));
            }
            Ok(Value::Bool(vals[0] == vals[1]))
        }
        Op::And => Ok(Value::Bool(
            bool_arg(op, vals[0])? && bool_arg(op, vals[1])?,
        )),
        Op::Or => Ok(Value::Bool(
            bool_arg(op, vals[0])? || bool_arg(op, vals[1])?,
        )),
    }
}

/// Whether `a` and `b` give every term in `terms` the same value.
pub fn coincide<'a>(
    a: &State,
    b: &State,
    terms: impl IntoIterator<Item = &'a Term>,
) -> Result<bool, EvalError> {
    for t in terms {
        if eval_term(t, a)? != eval_term(t, b)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Result of evaluating a rule in a state: a discrete update set for jump
/// states, a derivative assignment for flow states.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TaggedGenerator {
    Jump(UpdateSet),
    Flow(UpdateSet),
}

impl TaggedGenerator {
    pub fn is_jump(&self) -> bool {
        matches!(self, TaggedGenerator::Jump(_))
    }

    pub fn entries(&self) -> &UpdateSet {
        match self {
            TaggedGenerator::Jump(u) | TaggedGenerator::Flow(u) => u,
        }
    }

    pub fn updates(&self) -> impl Iterator<Item = Update> + '_ {
        self.entries().iter().map(|(l, v)| Update {
            location: l.clone(),
            value: *v,
        })
    }

    /// Every element mentioned: location arguments and assigned values.
    pub fn elements(&self) -> Vec<Value> {
        let mut out = Vec::new();
        for (loc, v) in self.entries() {
            out.extend(loc.args.iter().copied());
            out.push(*v);
        }
        out
    }
}

impl fmt::Display for TaggedGenerator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (tag, set) = match self {
            TaggedGenerator::Jump(u) => ("Jump", u),
            TaggedGenerator::Flow(u) => ("Flow", u),
        };
        write!(f, "{tag}{{")?;
        for (i, (l, v)) in set.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{l} ↦ {v}")?;
        }
        f.write_str("}")
    }
}
