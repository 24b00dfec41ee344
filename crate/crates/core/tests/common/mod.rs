//! Helpers shared by the integration tests: random states, perturbations
//! that keep or break similarity, and state collection from runs.
#![allow(dead_code)]

use std::sync::Arc;

use hybrid_asm::characterize::t_similar;
use hybrid_asm::engine::{run, EngineConfig, Segment};
use hybrid_asm::model::{eval_term, Op};
use hybrid_asm::{Location, Program, Sort, State, Symbol, Term, Value, Vocabulary};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub use rand::SeedableRng;

pub type TestRng = ChaCha8Rng;

pub fn rng(seed: u64) -> TestRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Locations outside every program vocabulary.
pub fn aux_symbols() -> Vec<Symbol> {
    vec![
        Symbol::dynamic("zz_aux0", 0, Sort::Real),
        Symbol::dynamic("zz_aux1", 0, Sort::Real),
        Symbol::dynamic("zz_flag", 0, Sort::Bool),
        Symbol::dynamic("zz_table", 1, Sort::Real),
    ]
}

/// The program vocabulary plus [`aux_symbols`].
pub fn extended_vocabulary(program: &Program) -> Arc<Vocabulary> {
    let mut aux = Vocabulary::new();
    for s in aux_symbols() {
        aux.insert(s);
    }
    Arc::new(
        program
            .vocabulary
            .merged(&aux)
            .expect("aux names are fresh"),
    )
}

/// Real literals occurring in the program, used to provoke coincidences.
pub fn literals(program: &Program) -> Vec<f64> {
    let mut out = vec![0.0, 1.0, -1.0];
    for t in hybrid_asm::ground_subterms(program) {
        if let Term::Lit(Value::Real(x)) = t {
            out.push(x);
        }
    }
    out
}

pub fn random_real(rng: &mut TestRng, pool: &[f64]) -> f64 {
    match rng.gen_range(0..4) {
        0 => *pool.choose(rng).unwrap(),
        1 => rng.gen_range(-5..=5) as f64,
        2 => rng.gen_range(-10.0..10.0),
        _ => rng.gen_range(-1e3..1e3),
    }
}

fn random_value(rng: &mut TestRng, sort: Sort, pool: &[f64]) -> Value {
    match sort {
        Sort::Real => Value::real(random_real(rng, pool)).unwrap(),
        Sort::Bool => Value::Bool(rng.gen()),
    }
}

/// Nullary dynamic locations of the program.
pub fn program_locations(program: &Program) -> Vec<(Location, Sort)> {
    program
        .vocabulary
        .dynamic_symbols()
        .filter(|s| s.arity == 0)
        .map(|s| (Location::nullary(&s.name), s.sort))
        .collect()
}

fn set_aux(rng: &mut TestRng, s: &mut State) {
    for sym in aux_symbols() {
        let args = (0..sym.arity)
            .map(|_| Value::Real(rng.gen_range(-3..=3) as f64))
            .collect();
        let v = random_value(rng, sym.sort, &[0.0, 1.0]);
        s.set(Location::new(&sym.name, args), v).unwrap();
    }
}

/// A random state over the extended vocabulary.
pub fn random_state(rng: &mut TestRng, program: &Program, vocab: &Arc<Vocabulary>) -> State {
    let pool = literals(program);
    let mut s = State::new(vocab.clone());
    for (loc, sort) in program_locations(program) {
        s.set(loc, random_value(rng, sort, &pool)).unwrap();
    }
    set_aux(rng, &mut s);
    s
}

/// A copy of `s` differing from it only outside the program vocabulary,
/// and in at least one location.
pub fn vary_outside(rng: &mut TestRng, s: &State) -> State {
    loop {
        let mut y = s.clone();
        set_aux(rng, &mut y);
        if y != *s {
            return y;
        }
    }
}

/// A state similar to `s` over `terms`, found by rejection sampling over
/// random edits of program locations; falls back to changes outside the
/// program vocabulary. The flag tells whether a program location changed.
pub fn similar_perturbation(
    rng: &mut TestRng,
    program: &Program,
    s: &State,
    terms: &[Term],
) -> (State, bool) {
    let locs = program_locations(program);
    let mut pool = literals(program);
    pool.extend(s.entries().filter_map(|(_, v)| v.as_real()));
    for _ in 0..200 {
        let mut y = vary_outside(rng, s);
        let n = rng.gen_range(1..=locs.len().max(1));
        for (loc, sort) in locs.choose_multiple(rng, n) {
            y.set(loc.clone(), random_value(rng, *sort, &pool)).unwrap();
        }
        if matches!(t_similar(s, &y, terms), Ok(true)) && y != *s {
            let changed = locs.iter().any(|(l, _)| y.get(l) != s.get(l));
            return (y, changed);
        }
    }
    (vary_outside(rng, s), false)
}

/// Every state a run records: the initial state, flow samples, and both
/// sides of each jump.
pub fn recorded_states(program: &Program, init: &State, config: &EngineConfig) -> Vec<State> {
    let tr = run(program, init, config);
    let mut out = vec![tr.initial.clone()];
    for seg in &tr.segments {
        match seg {
            Segment::Flow(f) => out.extend(f.samples.iter().map(|(_, s)| s.clone())),
            Segment::Jump(j) => {
                out.push(j.before.clone());
                out.push(j.after.clone());
            }
        }
    }
    out
}

/// For a state just before a located event, the states obtained by moving
/// a variable compared in a guard exactly onto the other side's value.
pub fn snapped_to_guards(program: &Program, s: &State) -> Vec<State> {
    let mut out = Vec::new();
    for atom in program.guard_atoms() {
        let Term::Op(op, args) = &atom else { continue };
        if !matches!(op, Op::Eq | Op::Le | Op::Lt) {
            continue;
        }
        for (var, other) in [(&args[0], &args[1]), (&args[1], &args[0])] {
            let Term::App(name, a) = var else { continue };
            if !a.is_empty() {
                continue;
            }
            if let Ok(v) = eval_term(other, s) {
                let mut y = s.clone();
                if y.set(Location::nullary(name), v).is_ok() {
                    out.push(y);
                }
            }
        }
    }
    out
}

/// Reference run configuration per bundled example.
pub fn reference_config(name: &str) -> EngineConfig {
    match name {
        "thermostat" => EngineConfig::new(30.0),
        _ => EngineConfig::new(10.0),
    }
}
