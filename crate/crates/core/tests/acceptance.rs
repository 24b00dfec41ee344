//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.

mod common;

use std::f64::consts::SQRT_2;
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::ExitCode;

use common::{
    extended_vocabulary, random_state, recorded_states, reference_config, rng,
    similar_perturbation, snapped_to_guards, vary_outside,
};
use hybrid_asm::bundled::{self, Example};
use hybrid_asm::characterize::{critical_terms, synthesize};
use hybrid_asm::engine::{iterate_jumps, run, vector_field, EngineConfig, Terminal, Trajectory};
use hybrid_asm::{eval_term, evaluate_rule, parse, print, Location, Program, State, Value};
use rand::Rng;

const GPAC_TOL: f64 = 1e-6;
const ENERGY_DRIFT_TOL: f64 = 1e-8;
const PENDULUM_TOL: f64 = 1e-6;
const FIRST_BOUNCE_TOL: f64 = 1e-4;
const ZENO_TIME_TOL: f64 = 1e-2;
const PAIRS: usize = 1000;
const STATES: usize = 1000;
const PERTURBATIONS: usize = 50;
const SPLITS: usize = 200;
const RESTART_TOL: f64 = 1e-12;
const FD_TOL: f64 = 1e-4;
const MIN_CORPUS: usize = 20;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn loaded(name: &str) -> (Program, State) {
    let ex = bundled::example(name).expect("bundled example");
    let p = ex.program();
    let s = ex.initial_state(&p);
    (p, s)
}

fn dense(name: &str) -> (Program, Trajectory) {
    let (p, s) = loaded(name);
    let config = EngineConfig {
        sample_stride: 1,
        ..EngineConfig::new(10.0)
    };
    let tr = run(&p, &s, &config);
    (p, tr)
}

fn samples(tr: &Trajectory) -> Vec<(f64, State)> {
    tr.flows().flat_map(|f| f.samples.iter().cloned()).collect()
}

fn real(s: &State, name: &str) -> f64 {
    s.real(name)
        .unwrap_or_else(|| panic!("{name} is not a real location"))
}

fn gpac() -> Outcome {
    let (_, tr) = dense("gpac");
    ensure(tr.terminal == Terminal::ReachedTMax, || {
        format!("terminal {}", tr.terminal)
    })?;
    let ss = samples(&tr);
    let (mut ex, mut ey, mut ez) = (0f64, 0f64, 0f64);
    for (t, s) in &ss {
        ex = ex.max((real(s, "x") - t.cos()).abs());
        ey = ey.max((real(s, "y") - t.sin()).abs());
        ez = ez.max((real(s, "z") + t.sin()).abs());
    }
    let last = ss.last().map_or(0.0, |(t, _)| *t);
    ensure(last == 10.0, || format!("last sample at t={last}"))?;
    let detail = format!(
        "{} samples, max errors x {ex:.2e}, y {ey:.2e}, z {ez:.2e} (tol {GPAC_TOL:e})",
        ss.len()
    );
    ensure(ex <= GPAC_TOL && ey <= GPAC_TOL && ez <= GPAC_TOL, || {
        detail.clone()
    })?;
    Ok(detail)
}

fn pendulum() -> Outcome {
    let (_, tr) = dense("pendulum");
    ensure(tr.terminal == Terminal::ReachedTMax, || {
        format!("terminal {}", tr.terminal)
    })?;
    let energy = |s: &State| 0.5 * real(s, "theta1").powi(2) + 0.5 * real(s, "theta").powi(2);
    let ss = samples(&tr);
    let e0 = energy(&ss[0].1);
    let (mut drift, mut err) = (0f64, 0f64);
    for (t, s) in &ss {
        drift = drift.max((energy(s) - e0).abs() / e0);
        err = err.max((real(s, "theta") - 0.1 * t.cos()).abs());
    }
    let detail = format!(
        "relative energy drift {drift:.2e} (tol {ENERGY_DRIFT_TOL:e}), max |theta - 0.1 cos t| {err:.2e} (tol {PENDULUM_TOL:e})"
    );
    ensure(drift <= ENERGY_DRIFT_TOL && err <= PENDULUM_TOL, || {
        detail.clone()
    })?;
    Ok(detail)
}

fn bouncing_ball() -> Outcome {
    let (p, s) = loaded("bouncing_ball");
    let k = real(&s, "k");
    let config = EngineConfig::new(10.0);
    let tr = run(&p, &s, &config);
    let jumps: Vec<_> = tr.jumps().collect();
    let first = jumps.first().ok_or("no jump")?;
    let first_err = (first.at.t - SQRT_2).abs();
    ensure(first_err <= FIRST_BOUNCE_TOL, || {
        format!("first jump at t={} (error {first_err:.2e})", first.at.t)
    })?;
    for j in &jumps {
        let expected = Value::real(-k * real(&j.before, "v")).map_err(|e| e.to_string())?;
        let got = j
            .after
            .get(&Location::nullary("v"))
            .map_err(|e| e.to_string())?;
        ensure(got == expected, || {
            format!("jump at t={}: v {got} after, expected {expected}", j.at.t)
        })?;
    }
    ensure(
        matches!(tr.terminal, Terminal::Error(ref e) if e.to_string().starts_with("ZenoError")),
        || format!("terminal {}", tr.terminal),
    )?;
    let last = jumps.last().expect("nonempty").at.t;
    let zeno = SQRT_2 * (1.0 + k) / (1.0 - k);
    let last_err = (last - zeno).abs();
    ensure(last_err <= ZENO_TIME_TOL, || {
        format!("last event at t={last}, expected {zeno} within {ZENO_TIME_TOL:e}")
    })?;
    Ok(format!(
        "first jump error {first_err:.2e} (tol {FIRST_BOUNCE_TOL:e}), {} exact reflections, ZenoError with last event at t={last:.6} (error {last_err:.2e}, tol {ZENO_TIME_TOL:e})",
        jumps.len()
    ))
}

fn programs() -> Vec<(Example, Program)> {
    bundled::ALL.iter().map(|e| (*e, e.program())).collect()
}

fn bounded_exploration() -> Outcome {
    let mut r = rng(4);
    let mut errors = 0;
    for (ex, p) in programs() {
        let vocab = extended_vocabulary(&p);
        let terms = critical_terms(&p);
        for i in 0..PAIRS {
            let x = random_state(&mut r, &p, &vocab);
            let y = vary_outside(&mut r, &x);
            let agree = terms.iter().all(|t| eval_term(t, &x) == eval_term(t, &y));
            ensure(x != y && agree, || format!("{}: bad pair {i}", ex.name))?;
            let (gx, gy) = (evaluate_rule(&p.body, &x), evaluate_rule(&p.body, &y));
            errors += usize::from(gx.is_err());
            ensure(gx == gy, || {
                format!("{}: generators differ on pair {i}: {x} vs {y}", ex.name)
            })?;
        }
    }
    Ok(format!(
        "{} pairs per program over {} programs, 0 failures ({errors} pairs with equal errors)",
        PAIRS,
        bundled::ALL.len()
    ))
}

fn critical_elements() -> Outcome {
    let mut r = rng(5);
    let mut checked = 0;
    for (ex, p) in programs() {
        let vocab = extended_vocabulary(&p);
        let terms = critical_terms(&p);
        for _ in 0..STATES {
            let s = random_state(&mut r, &p, &vocab);
            let Ok(gen) = evaluate_rule(&p.body, &s) else {
                continue;
            };
            let values: Vec<Value> = terms.iter().filter_map(|t| eval_term(t, &s).ok()).collect();
            for e in gen.elements() {
                ensure(values.contains(&e), || {
                    format!("{}: element {e} of {gen} is not critical in {s}", ex.name)
                })?;
            }
            checked += 1;
        }
        ensure(checked > 0, || format!("{}: no state evaluated", ex.name))?;
    }
    Ok(format!(
        "{checked} of {} random states evaluated, every element critical",
        STATES * bundled::ALL.len()
    ))
}

fn round_trip() -> Outcome {
    let mut r = rng(6);
    let mut classes = 0;
    let mut moved = 0;
    let mut total = 0;
    for (ex, p) in programs() {
        let vocab = extended_vocabulary(&p);
        let init = ex.initial_state(&p);
        let mut states = recorded_states(&p, &init, &reference_config(ex.name));
        let recorded: Vec<State> = states.clone();
        for s in &recorded {
            states.extend(snapped_to_guards(&p, s));
        }
        let states: Vec<State> = states
            .iter()
            .map(|s| s.with_vocabulary(vocab.clone()).expect("extension"))
            .collect();
        let synth = synthesize(&states, &p).map_err(|e| format!("{}: {e}", ex.name))?;
        let terms = critical_terms(&p);
        for &rep in &synth.representatives {
            classes += 1;
            let s = &states[rep];
            for _ in 0..PERTURBATIONS {
                let (y, changed) = similar_perturbation(&mut r, &p, s, &terms);
                moved += usize::from(changed);
                total += 1;
                let want = evaluate_rule(&p.body, &y)
                    .map_err(|e| format!("{}: original fails on {y}: {e}", ex.name))?;
                let got = evaluate_rule(&synth.program.body, &y)
                    .map_err(|e| format!("{}: synthesized fails on {y}: {e}", ex.name))?;
                ensure(want == got, || {
                    format!(
                        "{}: {want} vs {got} at {y}\n{}",
                        ex.name,
                        print(&synth.program)
                    )
                })?;
            }
        }
    }
    Ok(format!(
        "{classes} classes, {total} perturbations ({moved} changing program locations), 0 failures"
    ))
}

fn restart_check(
    p: &Program,
    tr: &Trajectory,
    picks: usize,
    r: &mut common::TestRng,
) -> Result<f64, String> {
    let seg = tr.flows().next().ok_or("no flow segment")?;
    ensure(seg.start.t == 0.0, || {
        "first flow does not start at 0".into()
    })?;
    let config = EngineConfig::new(10.0);
    let n = seg.samples.len();
    let mut worst = 0f64;
    for _ in 0..picks {
        let i = r.gen_range(0..n.saturating_sub(2).max(1));
        let restarted = run(p, &seg.samples[i].1, &config);
        let again = restarted.flows().next().ok_or("restart has no flow")?;
        let common = (n - 1 - i).min(again.samples.len() - 1);
        for j in 0..common {
            let (a, b) = (&seg.samples[i + j].1, &again.samples[j].1);
            for (loc, _) in a.entries().chain(b.entries()) {
                match (a.get(loc), b.get(loc)) {
                    (Ok(Value::Real(x)), Ok(Value::Real(y))) => worst = worst.max((x - y).abs()),
                    (x, y) => ensure(x == y, || {
                        format!("{loc} differs after restart at sample {i}")
                    })?,
                }
            }
        }
    }
    Ok(worst)
}

fn dynamical_laws() -> Outcome {
    let mut r = rng(7);
    for name in ["fibonacci", "counter"] {
        let (p, init) = loaded(name);
        for split in 0..SPLITS {
            let a = r.gen_range(0..40);
            let b = r.gen_range(0..40);
            let start = if split % 2 == 0 {
                init.clone()
            } else {
                let mut s = init.clone();
                for (loc, _) in common::program_locations(&p) {
                    s.set(loc, Value::Real(r.gen_range(-10..30) as f64))
                        .unwrap();
                }
                s
            };
            let whole = iterate_jumps(&p, &start, a + b).map_err(|e| e.to_string())?;
            let first = iterate_jumps(&p, &start, a).map_err(|e| e.to_string())?;
            let second = iterate_jumps(&p, &first.0, b).map_err(|e| e.to_string())?;
            ensure(whole.0 == second.0 && whole.1 == first.1 + second.1, || {
                format!("{name}: split ({a}, {b}) from {start} breaks the semigroup law")
            })?;
        }
    }
    let mut worst = 0f64;
    for name in ["gpac", "pendulum", "bouncing_ball", "thermostat"] {
        let (p, init) = loaded(name);
        let tr = run(&p, &init, &reference_config(name));
        worst = worst.max(restart_check(&p, &tr, 10, &mut r).map_err(|e| format!("{name}: {e}"))?);
    }
    ensure(worst <= RESTART_TOL, || {
        format!("restart deviation {worst:e}")
    })?;
    Ok(format!(
        "{} jump splits exact; flow restarts deviate by at most {worst:e} (tol {RESTART_TOL:e})",
        2 * SPLITS
    ))
}

fn finite_differences() -> Outcome {
    let h = EngineConfig::new(10.0).step_h;
    let mut worst = 0f64;
    let mut checks = 0;
    for name in ["gpac", "pendulum"] {
        let (p, tr) = dense(name);
        let ss = samples(&tr);
        for i in 1..ss.len() - 2 {
            let (prev, cur, next) = (&ss[i - 1], &ss[i], &ss[i + 1]);
            let field = vector_field(&p, &cur.1).map_err(|e| e.to_string())?;
            for (loc, d) in field {
                let at = |s: &State| s.get(&loc).ok().and_then(|v| v.as_real()).unwrap_or(0.0);
                let fd = (at(&next.1) - at(&prev.1)) / (next.0 - prev.0);
                worst = worst.max((fd - d).abs());
                checks += 1;
            }
        }
    }
    ensure(worst <= FD_TOL, || format!("max deviation {worst:e}"))?;
    Ok(format!(
        "{checks} central differences at h={h:e}, max deviation {worst:.2e} (tol {FD_TOL:e})"
    ))
}

fn corpus() -> Outcome {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests");
    let mut files: Vec<_> = fs::read_dir(dir.join("corpus"))
        .map_err(|e| e.to_string())?
        .map(|e| e.unwrap().path())
        .collect();
    files.sort();
    ensure(files.len() >= MIN_CORPUS, || {
        format!("only {} corpus files", files.len())
    })?;
    for f in &files {
        let text = fs::read_to_string(f).map_err(|e| e.to_string())?;
        let name = f.file_name().unwrap().to_string_lossy().to_string();
        let p = parse(&text).map_err(|e| format!("{name}: {e}"))?;
        let printed = print(&p);
        ensure(printed == text, || {
            format!("{name}: printed form differs:\n{printed}")
        })?;
        let again = parse(&printed).map_err(|e| format!("{name}: reparse: {e}"))?;
        ensure(
            again.body == p.body && again.declarations == p.declarations,
            || format!("{name}: parse after print changes the program"),
        )?;
    }
    for ex in &bundled::ALL {
        let path = dir.join("corpus").join(format!("{}.hasm", ex.name));
        let text = fs::read_to_string(&path).map_err(|e| format!("{}: {e}", ex.name))?;
        let (a, b) = (parse(&text).map_err(|e| e.to_string())?, ex.program());
        ensure(a.body == b.body && a.declarations == b.declarations, || {
            format!(
                "corpus copy of {} differs from the bundled program",
                ex.name
            )
        })?;
    }
    let mut fixtures: Vec<_> = fs::read_dir(dir.join("invalid"))
        .map_err(|e| e.to_string())?
        .map(|e| e.unwrap().path())
        .collect();
    fixtures.sort();
    for f in &fixtures {
        let text = fs::read_to_string(f).map_err(|e| e.to_string())?;
        let name = f.file_name().unwrap().to_string_lossy().to_string();
        let expected = text
            .lines()
            .next()
            .and_then(|l| l.strip_prefix("-- expect: "))
            .ok_or_else(|| format!("{name}: missing expectation line"))?
            .trim();
        match parse(&text) {
            Ok(_) => return Err(format!("{name}: accepted, expected {expected}")),
            Err(e) => ensure(e.kind.to_string() == expected, || {
                format!("{name}: got {e}, expected {expected}")
            })?,
        }
    }
    Ok(format!(
        "{} corpus files round-trip (all {} bundled programs included), {} invalid fixtures give their diagnostics",
        files.len(),
        bundled::ALL.len(),
        fixtures.len()
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("GPAC sine and cosine", gpac),
        ("pendulum", pendulum),
        ("bouncing ball", bouncing_ball),
        ("bounded exploration", bounded_exploration),
        ("critical elements", critical_elements),
        ("synthesis round trip", round_trip),
        ("dynamical system laws", dynamical_laws),
        ("finite differences", finite_differences),
        ("syntax round trip", corpus),
    ];
    let mut failed = 0;
    for (i, (title, check)) in criteria.iter().enumerate() {
        let outcome =
            catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".to_string()));
        match outcome {
            Ok(detail) => println!("criterion {} ({title}): PASS: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {} ({title}): FAIL: {detail}", i + 1);
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
