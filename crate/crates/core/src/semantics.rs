//! Rule denotation: evaluating a rule in a state to a tagged generator.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::model::{
    eval_term_with, EvalError, EvalHook, Location, Plain, State, TaggedGenerator, Value,
};
use crate::syntax::{Program, Rule, Target};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PathStep {
    Then,
    Else,
    Child(usize),
}

/// Position of a sub-rule inside a program body.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RulePath(pub Vec<PathStep>);

impl RulePath {
    fn push(&self, step: PathStep) -> RulePath {
        let mut steps = self.0.clone();
        steps.push(step);
        RulePath(steps)
    }
}

impl fmt::Display for RulePath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("body")?;
        for s in &self.0 {
            match s {
                PathStep::Then => f.write_str("/then")?,
                PathStep::Else => f.write_str("/else")?,
                PathStep::Child(i) => write!(f, "/{i}")?,
            }
        }
        Ok(())
    }
}

/// Two rules of one block wrote different values to one location.
#[derive(Clone, Debug, PartialEq)]
pub struct ClashReport {
    pub location: Location,
    pub values: (Value, Value),
    pub provenance: (RulePath, RulePath),
}

impl fmt::Display for ClashReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} receives {} at {} and {} at {}",
            self.location, self.values.0, self.provenance.0, self.values.1, self.provenance.1
        )
    }
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum RuleError {
    #[error("ClashError: {0}")]
    Clash(ClashReport),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StateClass {
    JumpState,
    FlowState,
}

struct Collector {
    jump: bool,
    set: BTreeMap<Location, (Value, RulePath)>,
}

impl Collector {
    fn add(&mut self, loc: Location, value: Value, path: RulePath) -> Result<(), RuleError> {
        if let Some((existing, first)) = self.set.get(&loc) {
            if *existing != value {
                return Err(RuleError::Clash(ClashReport {
                    location: loc,
                    values: (*existing, value),
                    provenance: (first.clone(), path),
                }));
            }
            return Ok(());
        }
        self.set.insert(loc, (value, path));
        Ok(())
    }

    fn finish(self) -> TaggedGenerator {
        let set = self.set.into_iter().map(|(l, (v, _))| (l, v)).collect();
        if self.jump {
            TaggedGenerator::Jump(set)
        } else {
            TaggedGenerator::Flow(set)
        }
    }
}

fn location(
    target: &Target,
    state: &State,
    hook: &mut dyn EvalHook,
) -> Result<Location, EvalError> {
    let args = target
        .args
        .iter()
        .map(|a| eval_term_with(a, state, hook))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Location {
        symbol: target.symbol.clone(),
        args,
    })
}

fn collect(
    rule: &Rule,
    state: &State,
    hook: &mut dyn EvalHook,
    path: RulePath,
) -> Result<Collector, RuleError> {
    let mut out = Collector {
        jump: true,
        set: BTreeMap::new(),
    };
    match rule {
        Rule::Skip => {}
        Rule::Update(u) => {
            let loc = location(&u.target, state, hook)?;
            let v = eval_term_with(&u.rhs, state, hook)?;
            out.add(loc, v, path)?;
        }
        Rule::Par(us) => {
            for (i, u) in us.iter().enumerate() {
                let loc = location(&u.target, state, hook)?;
                let v = eval_term_with(&u.rhs, state, hook)?;
                out.add(loc, v, path.push(PathStep::Child(i)))?;
            }
        }
        Rule::Dynamic(d) => {
            out.jump = false;
            let loc = location(&d.target, state, hook)?;
            let v = eval_term_with(&d.rhs, state, hook)?;
            out.add(loc, v, path)?;
        }
        Rule::Flow(ds) => {
            out.jump = false;
            for (i, d) in ds.iter().enumerate() {
                let loc = location(&d.target, state, hook)?;
                let v = eval_term_with(&d.rhs, state, hook)?;
                out.add(loc, v, path.push(PathStep::Child(i)))?;
            }
        }
        Rule::If {
            guard,
            then,
            otherwise,
        } => {
            let g = eval_term_with(guard, state, hook)?;
            return if g == Value::Bool(true) {
                collect(then, state, hook, path.push(PathStep::Then))
            } else {
                collect(otherwise, state, hook, path.push(PathStep::Else))
            };
        }
    }
    Ok(out)
}

/// Generator of `rule` in `state`. All terms are evaluated in `state`.
pub fn evaluate_rule(rule: &Rule, state: &State) -> Result<TaggedGenerator, RuleError> {
    evaluate_rule_with(rule, state, &mut Plain)
}

pub fn evaluate_rule_with(
    rule: &Rule,
    state: &State,
    hook: &mut dyn EvalHook,
) -> Result<TaggedGenerator, RuleError> {
    Ok(collect(rule, state, hook, RulePath::default())?.finish())
}

pub fn classify(program: &Program, state: &State) -> Result<StateClass, RuleError> {
    Ok(if evaluate_rule(&program.body, state)?.is_jump() {
        StateClass::JumpState
    } else {
        StateClass::FlowState
    })
}
