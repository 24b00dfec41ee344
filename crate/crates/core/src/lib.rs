//! Hybrid abstract state machines: programs that mix discrete parallel
//! updates with continuous flows given by derivatives.
//!
//! * [`syntax`] parses and prints programs.
//! * [`semantics`] evaluates a rule in a state to a [`TaggedGenerator`].
//! * [`engine`] executes a program as a hybrid dynamical system.
//! * [`characterize`] rebuilds a canonical program from sampled behavior.

pub mod bundled;
pub mod characterize;
pub mod cli;
pub mod engine;
pub mod model;
pub mod semantics;
pub mod syntax;
pub mod time;

pub use model::{
    coincide, eval_term, EvalError, Location, Name, Op, Sort, State, Symbol, SymbolKind,
    TaggedGenerator, Term, Update, UpdateSet, Value, Vocabulary,
};
pub use semantics::{classify, evaluate_rule, RuleError, StateClass};
pub use syntax::{ground_subterms, parse, print, ParseError, ParseErrorKind, Program, Rule};
pub use time::HybridTime;
