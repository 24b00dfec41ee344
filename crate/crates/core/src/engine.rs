//! Hybrid execution: exact jumps, fixed-step RK4 flows, zero-crossing
//! localization on guard atoms, and Zeno protection.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::model::{
    eval_term, EvalError, EvalHook, Location, Op, State, TaggedGenerator, Term, UpdateSet, Value,
};
use crate::semantics::{evaluate_rule, evaluate_rule_with, RuleError};
use crate::syntax::Program;
use crate::time::HybridTime;

#[derive(Clone, Debug, PartialEq)]
pub struct EngineConfig {
    /// RK4 step width.
    pub step_h: f64,
    pub t_max: f64,
    /// Width of the time bracket around a located event.
    pub event_tol: f64,
    pub max_jumps_per_instant: usize,
    /// Record every n-th integration step.
    pub sample_stride: usize,
    pub max_steps: u64,
}

impl EngineConfig {
    pub fn new(t_max: f64) -> EngineConfig {
        EngineConfig {
            step_h: 1e-3,
            t_max,
            event_tol: 1e-9,
            max_jumps_per_instant: 1000,
            sample_stride: 10,
            max_steps: 100_000_000,
        }
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        let bad = |msg: &str| Err(EngineError::Config(msg.to_string()));
        if !(self.step_h > 0.0 && self.step_h.is_finite()) {
            return bad("step must be positive");
        }
        if !(self.t_max > 0.0 && self.t_max.is_finite()) {
            return bad("t_max must be positive");
        }
        if !(self.event_tol > 0.0 && self.event_tol < self.step_h) {
            return bad("event tolerance must be positive and below the step");
        }
        if self.max_jumps_per_instant == 0 || self.sample_stride == 0 || self.max_steps == 0 {
            return bad("jump limit, stride and step budget must be positive");
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum EngineError {
    #[error(transparent)]
    Rule(#[from] RuleError),
    #[error("FlowExpected: state classifies as a jump state")]
    FlowExpected,
    #[error("JumpExpected: state classifies as a flow state")]
    JumpExpected,
    #[error("ZenoError at t≈{t}: more than {limit} jumps within one instant")]
    Zeno { t: f64, limit: usize },
    #[error("StepBudgetExceeded: {steps} steps taken by t={t}")]
    StepBudgetExceeded { steps: u64, t: f64 },
    #[error("EventLocalizationFailed at t≈{t}: no guard atom changes across the bracket")]
    EventLocalizationFailed { t: f64 },
    #[error("invalid configuration: {0}")]
    Config(String),
}

impl From<EvalError> for EngineError {
    fn from(e: EvalError) -> Self {
        EngineError::Rule(RuleError::Eval(e))
    }
}

/// Samples of one continuous evolution. `k` is constant inside.
#[derive(Clone, Debug, PartialEq)]
pub struct FlowSegment {
    pub start: HybridTime,
    pub samples: Vec<(f64, State)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct JumpEvent {
    /// Moment of the state before the jump; the state after is at its
    /// successor.
    pub at: HybridTime,
    pub before: State,
    pub after: State,
    pub updates: UpdateSet,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Segment {
    Flow(FlowSegment),
    Jump(JumpEvent),
}

#[derive(Clone, Debug, PartialEq)]
pub enum Terminal {
    Quiescent,
    ReachedTMax,
    Error(EngineError),
}

impl fmt::Display for Terminal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Terminal::Quiescent => f.write_str("Quiescent"),
            Terminal::ReachedTMax => f.write_str("ReachedTMax"),
            Terminal::Error(e) => write!(f, "Error({e})"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub initial: State,
    pub segments: Vec<Segment>,
    pub terminal: Terminal,
    /// Moment of the last recorded state.
    pub end: HybridTime,
}

impl Trajectory {
    pub fn jumps(&self) -> impl Iterator<Item = &JumpEvent> {
        self.segments.iter().filter_map(|s| match s {
            Segment::Jump(j) => Some(j),
            Segment::Flow(_) => None,
        })
    }

    pub fn flows(&self) -> impl Iterator<Item = &FlowSegment> {
        self.segments.iter().filter_map(|s| match s {
            Segment::Flow(f) => Some(f),
            Segment::Jump(_) => None,
        })
    }

    /// The last recorded state.
    pub fn final_state(&self) -> &State {
        match self.segments.last() {
            Some(Segment::Jump(j)) => &j.after,
            Some(Segment::Flow(f)) => &f.samples.last().expect("segments are nonempty").1,
            None => &self.initial,
        }
    }
}

/// Successor of a jump state and the update set that produced it.
pub fn step_jump(program: &Program, state: &State) -> Result<(State, UpdateSet), EngineError> {
    match evaluate_rule(&program.body, state)? {
        TaggedGenerator::Jump(u) => Ok((state.apply_updates(&u), u)),
        TaggedGenerator::Flow(_) => Err(EngineError::JumpExpected),
    }
}

/// Runs up to `n` jumps, stopping early at a flow state or a vacuous jump.
/// Returns the reached state and the number of jumps taken.
pub fn iterate_jumps(
    program: &Program,
    state: &State,
    n: usize,
) -> Result<(State, usize), EngineError> {
    let mut s = state.clone();
    for i in 0..n {
        match evaluate_rule(&program.body, &s)? {
            TaggedGenerator::Jump(u) => {
                let next = s.apply_updates(&u);
                if next == s {
                    return Ok((s, i));
                }
                s = next;
            }
            TaggedGenerator::Flow(_) => return Ok((s, i)),
        }
    }
    Ok((s, n))
}

pub type VectorField = BTreeMap<Location, f64>;

/// Derivatives of the listed locations; every other location is constant.
pub fn vector_field(program: &Program, state: &State) -> Result<VectorField, EngineError> {
    match evaluate_rule(&program.body, state)? {
        TaggedGenerator::Flow(d) => Ok(as_field(&d)),
        TaggedGenerator::Jump(_) => Err(EngineError::FlowExpected),
    }
}

fn as_field(d: &UpdateSet) -> VectorField {
    d.iter()
        .map(|(l, v)| (l.clone(), v.as_real().expect("derivatives are real")))
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub enum StepOutcome {
    Advanced(State),
    EventInside,
}

/// One RK4 step of width `h`.
pub fn integrate_step(
    program: &Program,
    state: &State,
    h: f64,
) -> Result<StepOutcome, EngineError> {
    Integrator::new(program).step(state, h)
}

/// A guard atom that changed across an event bracket, with the truth value
/// it takes on the far side.
#[derive(Clone, Debug, PartialEq)]
pub struct Flip {
    pub atom: Term,
    pub value: bool,
}

/// An event bracketed to within the tolerance.
#[derive(Clone, Debug, PartialEq)]
pub struct Crossing {
    /// Offsets from the step start.
    pub t_lo: f64,
    pub t_hi: f64,
    /// Last state before the crossing.
    pub before: State,
    /// First state found past it.
    pub after: State,
    pub flips: Vec<Flip>,
}

/// Brackets the first event inside a step of width `h` by bisection on the
/// step width, re-integrating from `state` each time.
pub fn locate_event(
    program: &Program,
    state: &State,
    h: f64,
    tol: f64,
) -> Result<Crossing, EngineError> {
    Integrator::new(program).locate(state, h, tol)
}

enum Rk {
    Done(State),
    /// A stage state classified as a jump state.
    Stage(State),
}

struct Integrator<'a> {
    program: &'a Program,
    atoms: Vec<Term>,
}

struct Forced<'a>(&'a [Flip]);

impl EvalHook for Forced<'_> {
    fn override_atom(&self, atom: &Term) -> Option<bool> {
        self.0.iter().find(|f| f.atom == *atom).map(|f| f.value)
    }
}

fn offset(state: &State, field: &VectorField, c: f64) -> Result<State, EngineError> {
    let mut out = state.clone();
    for (loc, d) in field {
        let x = real_at(state, loc)?;
        out.set(loc.clone(), Value::real(x + c * d)?)?;
    }
    Ok(out)
}

fn real_at(state: &State, loc: &Location) -> Result<f64, EngineError> {
    state
        .get(loc)?
        .as_real()
        .ok_or_else(|| EvalError::Sort(format!("{loc} is not real")).into())
}

impl<'a> Integrator<'a> {
    fn new(program: &'a Program) -> Self {
        Integrator {
            program,
            atoms: program.guard_atoms(),
        }
    }

    fn field(&self, s: &State) -> Result<Option<VectorField>, EngineError> {
        Ok(match evaluate_rule(&self.program.body, s)? {
            TaggedGenerator::Flow(d) => Some(as_field(&d)),
            TaggedGenerator::Jump(_) => None,
        })
    }

    fn rk4(&self, s: &State, h: f64) -> Result<Rk, EngineError> {
        let k1 = self.field(s)?.ok_or(EngineError::FlowExpected)?;
        let s2 = offset(s, &k1, h / 2.0)?;
        let Some(k2) = self.field(&s2)? else {
            return Ok(Rk::Stage(s2));
        };
        let s3 = offset(s, &k2, h / 2.0)?;
        let Some(k3) = self.field(&s3)? else {
            return Ok(Rk::Stage(s3));
        };
        let s4 = offset(s, &k3, h)?;
        let Some(k4) = self.field(&s4)? else {
            return Ok(Rk::Stage(s4));
        };
        let mut locs: Vec<&Location> = k1.keys().collect();
        for k in [&k2, &k3, &k4] {
            locs.extend(k.keys());
        }
        locs.sort();
        locs.dedup();
        let mut out = s.clone();
        for loc in locs {
            let d = |k: &VectorField| k.get(loc).copied().unwrap_or(0.0);
            let x = real_at(s, loc)?;
            let slope = d(&k1) + 2.0 * d(&k2) + 2.0 * d(&k3) + d(&k4);
            out.set(loc.clone(), Value::real(x + h / 6.0 * slope)?)?;
        }
        Ok(Rk::Done(out))
    }

    /// Atoms whose truth changes from `a` to `b`. An equality atom counts
    /// only when its difference strictly changes sign, so an atom sitting
    /// on its root does not fire until it has left it.
    fn flips(&self, a: &State, b: &State) -> Result<Vec<Flip>, EngineError> {
        let mut out = Vec::new();
        for atom in &self.atoms {
            let Term::Op(op, args) = atom else { continue };
            let side = |s: &State| -> Result<(f64, f64), EngineError> {
                let l = eval_term(&args[0], s)?.as_real().unwrap_or(0.0);
                let r = eval_term(&args[1], s)?.as_real().unwrap_or(0.0);
                Ok((l, r))
            };
            let (la, ra) = side(a)?;
            let (lb, rb) = side(b)?;
            if *op == Op::Eq {
                if (la < ra && lb > rb) || (la > ra && lb < rb) {
                    out.push(Flip {
                        atom: atom.clone(),
                        value: true,
                    });
                }
            } else {
                let holds = |l: f64, r: f64| if *op == Op::Lt { l < r } else { l <= r };
                if holds(la, ra) != holds(lb, rb) {
                    out.push(Flip {
                        atom: atom.clone(),
                        value: holds(lb, rb),
                    });
                }
            }
        }
        Ok(out)
    }

    fn step(&self, s: &State, h: f64) -> Result<StepOutcome, EngineError> {
        match self.rk4(s, h)? {
            Rk::Stage(_) => Ok(StepOutcome::EventInside),
            Rk::Done(end) => {
                if self.flips(s, &end)?.is_empty() {
                    Ok(StepOutcome::Advanced(end))
                } else {
                    Ok(StepOutcome::EventInside)
                }
            }
        }
    }

    fn locate(&self, s: &State, h: f64, tol: f64) -> Result<Crossing, EngineError> {
        let (mut lo, mut hi) = (0.0, h);
        while hi - lo > tol {
            let mid = lo + (hi - lo) / 2.0;
            match self.step(s, mid)? {
                StepOutcome::EventInside => hi = mid,
                StepOutcome::Advanced(_) => lo = mid,
            }
        }
        let before = if lo == 0.0 {
            s.clone()
        } else {
            match self.rk4(s, lo)? {
                Rk::Done(x) | Rk::Stage(x) => x,
            }
        };
        let far = match self.rk4(s, hi)? {
            Rk::Done(x) | Rk::Stage(x) => x,
        };
        let flips = self.flips(&before, &far)?;
        // a short step from `before` keeps the wrong-side field out of the
        // continuation state
        let after = if lo == 0.0 {
            far
        } else {
            match self.rk4(&before, hi - lo) {
                Ok(Rk::Done(x)) | Ok(Rk::Stage(x)) => x,
                Err(EngineError::FlowExpected) => far,
                Err(e) => return Err(e),
            }
        };
        Ok(Crossing {
            t_lo: lo,
            t_hi: hi,
            before,
            after,
            flips,
        })
    }
}

/// Executes `program` from `init` until quiescence, `t_max`, or an error.
pub fn run(program: &Program, init: &State, config: &EngineConfig) -> Trajectory {
    let mut runner = Runner {
        integrator: Integrator::new(program),
        config,
        state: init.clone(),
        now: HybridTime::ZERO,
        steps: 0,
        cluster_start: 0.0,
        cluster_jumps: 0,
        segments: Vec::new(),
    };
    let terminal = match config.validate().and_then(|_| runner.go()) {
        Ok(t) => t,
        Err(e) => Terminal::Error(e),
    };
    Trajectory {
        initial: init.clone(),
        segments: runner.segments,
        terminal,
        end: runner.now,
    }
}

struct Runner<'a> {
    integrator: Integrator<'a>,
    config: &'a EngineConfig,
    state: State,
    now: HybridTime,
    steps: u64,
    cluster_start: f64,
    cluster_jumps: usize,
    segments: Vec<Segment>,
}

enum FlowEnd {
    TMax,
    /// A jump is due with these updates.
    Jump(Option<UpdateSet>),
}

impl Runner<'_> {
    fn go(&mut self) -> Result<Terminal, EngineError> {
        let mut pending: Option<UpdateSet> = None;
        loop {
            let updates = match pending.take() {
                Some(u) => u,
                None => match evaluate_rule(&self.integrator.program.body, &self.state)? {
                    TaggedGenerator::Jump(u) => u,
                    TaggedGenerator::Flow(_) => {
                        if self.now.t >= self.config.t_max {
                            return Ok(Terminal::ReachedTMax);
                        }
                        match self.flow()? {
                            FlowEnd::TMax => return Ok(Terminal::ReachedTMax),
                            FlowEnd::Jump(u) => {
                                pending = u;
                                continue;
                            }
                        }
                    }
                },
            };
            let after = self.state.apply_updates(&updates);
            if after == self.state {
                return Ok(Terminal::Quiescent);
            }
            self.count_jump()?;
            let before = std::mem::replace(&mut self.state, after.clone());
            self.segments.push(Segment::Jump(JumpEvent {
                at: self.now,
                before,
                after,
                updates,
            }));
            self.now = self.now.successor();
        }
    }

    fn count_jump(&mut self) -> Result<(), EngineError> {
        let t = self.now.t;
        if self.cluster_jumps > 0 && t - self.cluster_start <= self.config.event_tol {
            self.cluster_jumps += 1;
        } else {
            self.cluster_start = t;
            self.cluster_jumps = 1;
        }
        if self.cluster_jumps > self.config.max_jumps_per_instant {
            return Err(EngineError::Zeno {
                t,
                limit: self.config.max_jumps_per_instant,
            });
        }
        Ok(())
    }

    fn flow(&mut self) -> Result<FlowEnd, EngineError> {
        let cfg = self.config;
        let h = cfg.step_h;
        let t0 = self.now.t;
        let mut seg = FlowSegment {
            start: self.now,
            samples: vec![(t0, self.state.clone())],
        };
        let mut n: u64 = 0;
        let outcome = loop {
            let t = self.now.t;
            let remaining = cfg.t_max - t;
            if remaining <= h * 1e-9 {
                break Ok(FlowEnd::TMax);
            }
            if self.steps >= cfg.max_steps {
                break Err(EngineError::StepBudgetExceeded {
                    steps: self.steps,
                    t,
                });
            }
            let last = remaining <= h * (1.0 + 1e-9);
            let width = if last { remaining } else { h };
            let stepped = match self.integrator.step(&self.state, width) {
                Ok(s) => s,
                Err(e) => break Err(e),
            };
            match stepped {
                StepOutcome::Advanced(next) => {
                    self.steps += 1;
                    n += 1;
                    self.state = next;
                    self.now.t = if last { cfg.t_max } else { t0 + n as f64 * h };
                    if last || n.is_multiple_of(cfg.sample_stride as u64) {
                        seg.samples.push((self.now.t, self.state.clone()));
                    }
                    match evaluate_rule(&self.integrator.program.body, &self.state) {
                        Ok(g) if g.is_jump() => break Ok(FlowEnd::Jump(None)),
                        Ok(_) if last => break Ok(FlowEnd::TMax),
                        Ok(_) => {}
                        Err(e) => break Err(e.into()),
                    }
                }
                StepOutcome::EventInside => {
                    self.steps += 1;
                    break self.event(width);
                }
            }
        };
        if seg.samples.last().map(|(t, _)| *t) != Some(self.now.t) {
            seg.samples.push((self.now.t, self.state.clone()));
        }
        self.segments.push(Segment::Flow(seg));
        outcome
    }

    fn event(&mut self, width: f64) -> Result<FlowEnd, EngineError> {
        let t = self.now.t;
        let c = self
            .integrator
            .locate(&self.state, width, self.config.event_tol)?;
        if c.flips.is_empty() {
            if evaluate_rule(&self.integrator.program.body, &c.after)?.is_jump() {
                self.state = c.after;
                self.now.t = t + c.t_hi;
                return Ok(FlowEnd::Jump(None));
            }
            return Err(EngineError::EventLocalizationFailed { t: t + c.t_hi });
        }
        let forced = evaluate_rule_with(
            &self.integrator.program.body,
            &c.before,
            &mut Forced(&c.flips),
        )?;
        match forced {
            TaggedGenerator::Jump(u) => {
                self.state = c.before;
                self.now.t = t + c.t_lo;
                Ok(FlowEnd::Jump(Some(u)))
            }
            TaggedGenerator::Flow(_) => {
                // mode switch without a jump: resume past the crossing
                self.state = c.after;
                self.now.t = t + c.t_hi;
                Ok(FlowEnd::Jump(None))
            }
        }
    }
}
