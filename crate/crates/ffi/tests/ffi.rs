use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use hybrid_asm_ffi::*;

const BALL: &str =
    "if x = 0 then v := -k * v else flow Dynamic(x, v) Dynamic(v, -g * m) endflow endif";

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(hasm_last_error()) }
        .to_string_lossy()
        .into_owned()
}

unsafe fn program(src: &str) -> *mut HasmProgram {
    let mut p = ptr::null_mut();
    assert_eq!(hasm_program_parse(c(src).as_ptr(), &mut p), HasmStatus::Ok);
    p
}

unsafe fn state(p: *const HasmProgram, init: &str) -> *mut HasmState {
    let mut s = ptr::null_mut();
    assert_eq!(
        hasm_state_parse(p, c(init).as_ptr(), &mut s),
        HasmStatus::Ok
    );
    s
}

#[test]
fn parse_errors_carry_messages() {
    unsafe {
        let mut p = ptr::null_mut();
        let status = hasm_program_parse(c("par x := 1 Dynamic(y, x) endpar").as_ptr(), &mut p);
        assert_eq!(status, HasmStatus::ParseError);
        assert!(p.is_null());
        assert!(last_error().contains("MixedParBlock"), "{}", last_error());
        assert_eq!(
            hasm_program_parse(ptr::null(), &mut p),
            HasmStatus::NullPointer
        );
    }
}

#[test]
fn print_round_trips() {
    unsafe {
        let p = program("n := n+1");
        let text = hasm_program_print(p);
        assert_eq!(CStr::from_ptr(text).to_str().unwrap(), "n := n + 1\n");
        hasm_string_free(text);
        hasm_program_free(p);
    }
}

#[test]
fn ball_run_is_zeno() {
    unsafe {
        let p = program(BALL);
        let s = state(p, "x = 1\nv = 0\ng = 1\nm = 1\nk = 0.5\n");
        let cfg = hasm_config_default(10.0);
        assert_eq!(cfg.step_h, 1e-3);
        let mut t = ptr::null_mut();
        assert_eq!(hasm_run(p, s, &cfg, &mut t), HasmStatus::Ok);
        assert_eq!(hasm_trajectory_terminal(t), HasmTerminal::Error);
        assert!(last_error().starts_with("ZenoError"), "{}", last_error());
        assert!(hasm_trajectory_jump_count(t) > 1000);
        let csv = hasm_trajectory_csv(t);
        let text = CStr::from_ptr(csv).to_str().unwrap();
        assert!(text.starts_with("t,k,kind,g,k,m,v,x\n"));
        hasm_string_free(csv);
        hasm_trajectory_free(t);
        hasm_state_free(s);
        hasm_program_free(p);
    }
}

#[test]
fn counter_final_state() {
    unsafe {
        let p = program("if n < 5 then n := n + 1 endif");
        let s = state(p, "n = 0");
        let mut t = ptr::null_mut();
        assert_eq!(
            hasm_run(p, s, &hasm_config_default(1.0), &mut t),
            HasmStatus::Ok
        );
        assert_eq!(hasm_trajectory_terminal(t), HasmTerminal::Quiescent);
        let mut end = ptr::null_mut();
        assert_eq!(hasm_trajectory_final_state(t, &mut end), HasmStatus::Ok);
        let mut n = 0.0;
        assert_eq!(
            hasm_state_get_real(end, c("n").as_ptr(), &mut n),
            HasmStatus::Ok
        );
        assert_eq!(n, 5.0);
        assert_eq!(
            hasm_state_get_real(end, c("q").as_ptr(), &mut n),
            HasmStatus::NotFound
        );
        hasm_state_free(end);
        hasm_trajectory_free(t);
        hasm_state_free(s);
        hasm_program_free(p);
    }
}

#[test]
fn bad_inputs() {
    unsafe {
        let p = program("x := 1");
        let mut s = ptr::null_mut();
        assert_eq!(
            hasm_state_parse(p, c("y = 2").as_ptr(), &mut s),
            HasmStatus::InitError
        );
        let s = state(p, "");
        let mut cfg = hasm_config_default(1.0);
        cfg.event_tol = 1.0;
        let mut t = ptr::null_mut();
        assert_eq!(hasm_run(p, s, &cfg, &mut t), HasmStatus::InvalidConfig);
        assert_eq!(hasm_run(p, s, ptr::null(), &mut t), HasmStatus::NullPointer);
        hasm_state_free(s);
        hasm_program_free(p);
        hasm_program_free(ptr::null_mut());
        hasm_string_free(ptr::null_mut());
    }
}

#[test]
fn synthesis_through_the_api() {
    unsafe {
        let p = program("n := n + 1");
        let mut q = ptr::null_mut();
        assert_eq!(
            hasm_synthesize(p, c("n = 3").as_ptr(), &mut q),
            HasmStatus::Ok
        );
        let text = hasm_program_print(q);
        assert_eq!(
            CStr::from_ptr(text).to_str().unwrap(),
            "par\n  n := n + 1\nendpar\n"
        );
        hasm_string_free(text);
        hasm_program_free(q);
        assert_eq!(
            hasm_synthesize(p, c("").as_ptr(), &mut q),
            HasmStatus::SynthesisError
        );
        hasm_program_free(p);
    }
}

#[test]
fn header_is_valid_c() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let header = dir.join("include").join("hybrid_asm.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for name in [
        "hasm_program_parse",
        "hasm_run",
        "hasm_synthesize",
        "hasm_last_error",
        "typedef struct HasmProgram HasmProgram;",
    ] {
        assert!(text.contains(name), "{name} missing from header");
    }
    let Ok(status) = Command::new("cc")
        .args(["-fsyntax-only", "-xc", "-std=c99", "-Wall", "-Werror"])
        .arg(&header)
        .status()
    else {
        eprintln!("no C compiler; skipping syntax check");
        return;
    };
    assert!(status.success());
}
