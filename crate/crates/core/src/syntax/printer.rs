//! Canonical printing. Parentheses are emitted only where precedence needs
//! them, so `parse(print(p)) == p` for every well-formed program.

use std::fmt::{self, Write};

use super::{Program, Rule, Target};
use crate::model::{format_real, Op, Term, Value};

const INDENT: &str = "  ";

// Binding strength, loosest first.
const OR: u8 = 1;
const AND: u8 = 2;
const NOT: u8 = 3;
const CMP: u8 = 4;
const ADD: u8 = 5;
const MUL: u8 = 6;
const UNARY: u8 = 7;
const ATOM: u8 = 8;

fn precedence(t: &Term) -> u8 {
    match t {
        Term::Lit(Value::Real(x)) if *x < 0.0 => UNARY,
        Term::Lit(_) | Term::App(..) => ATOM,
        Term::Op(op, _) => match op {
            Op::Or => OR,
            Op::And => AND,
            Op::Not => NOT,
            Op::Eq | Op::Lt | Op::Le => CMP,
            Op::Add | Op::Sub => ADD,
            Op::Mul | Op::Div => MUL,
            Op::Neg => UNARY,
        },
    }
}

fn write_term(out: &mut String, t: &Term, min: u8) {
    let prec = precedence(t);
    let paren = prec < min;
    if paren {
        out.push('(');
    }
    match t {
        Term::Lit(Value::Real(x)) if *x < 0.0 => {
            out.push('-');
            out.push_str(&format_real(-x));
        }
        Term::Lit(v) => {
            let _ = write!(out, "{v}");
        }
        Term::App(name, args) => write_app(out, name, args),
        Term::Op(op, args) => match op {
            Op::Neg => {
                let mut inner = String::new();
                let operand = &args[0];
                if matches!(operand, Term::Lit(Value::Real(_))) {
                    // keep `-(2)` distinct from the literal `-2`
                    write_term(&mut inner, operand, ATOM + 1);
                } else {
                    write_term(&mut inner, operand, UNARY);
                }
                out.push('-');
                if inner.starts_with('-') {
                    out.push(' ');
                }
                out.push_str(&inner);
            }
            Op::Not => {
                out.push_str("not ");
                let operand = &args[0];
                let wrap = matches!(operand, Term::Op(o, _) if o.is_comparison());
                if wrap {
                    out.push('(');
                    write_term(out, operand, 0);
                    out.push(')');
                } else {
                    write_term(out, operand, NOT);
                }
            }
            _ => {
                // comparisons do not associate; the rest associate left
                let (lmin, rmin) = if op.is_comparison() {
                    (prec + 1, prec + 1)
                } else {
                    (prec, prec + 1)
                };
                write_term(out, &args[0], lmin);
                let _ = write!(out, " {} ", op.token());
                write_term(out, &args[1], rmin);
            }
        },
    }
    if paren {
        out.push(')');
    }
}

fn write_app(out: &mut String, name: &str, args: &[Term]) {
    out.push_str(name);
    if !args.is_empty() {
        out.push('(');
        for (i, a) in args.iter().enumerate() {
            if i > 0 {
                out.push_str(", ");
            }
            write_term(out, a, 0);
        }
        out.push(')');
    }
}

fn write_target(out: &mut String, t: &Target) {
    write_app(out, &t.symbol, &t.args);
}

fn line(out: &mut String, depth: usize) {
    for _ in 0..depth {
        out.push_str(INDENT);
    }
}

fn write_rule(out: &mut String, r: &Rule, depth: usize) {
    match r {
        Rule::Update(u) => {
            line(out, depth);
            write_target(out, &u.target);
            out.push_str(" := ");
            write_term(out, &u.rhs, 0);
            out.push('\n');
        }
        Rule::Dynamic(d) => {
            line(out, depth);
            out.push_str("Dynamic(");
            write_target(out, &d.target);
            out.push_str(", ");
            write_term(out, &d.rhs, 0);
            out.push_str(")\n");
        }
        Rule::Par(us) => {
            line(out, depth);
            out.push_str("par\n");
            for u in us {
                write_rule(out, &Rule::Update(u.clone()), depth + 1);
            }
            line(out, depth);
            out.push_str("endpar\n");
        }
        Rule::Flow(ds) => {
            line(out, depth);
            out.push_str("flow\n");
            for d in ds {
                write_rule(out, &Rule::Dynamic(d.clone()), depth + 1);
            }
            line(out, depth);
            out.push_str("endflow\n");
        }
        Rule::If {
            guard,
            then,
            otherwise,
        } => {
            line(out, depth);
            out.push_str("if ");
            write_term(out, guard, 0);
            out.push_str(" then\n");
            write_rule(out, then, depth + 1);
            if **otherwise != Rule::Skip {
                line(out, depth);
                out.push_str("else\n");
                write_rule(out, otherwise, depth + 1);
            }
            line(out, depth);
            out.push_str("endif\n");
        }
        Rule::Skip => {
            line(out, depth);
            out.push_str("skip\n");
        }
    }
}

/// Canonical program text.
pub fn print(program: &Program) -> String {
    let mut out = String::new();
    for d in &program.declarations {
        let _ = writeln!(out, "dynamic {}/{} : {}", d.name, d.arity, d.sort);
    }
    write_rule(&mut out, &program.body, 0);
    out
}

pub fn print_rule(rule: &Rule) -> String {
    let mut out = String::new();
    write_rule(&mut out, rule, 0);
    out
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        write_term(&mut s, self, 0);
        f.write_str(&s)
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print_rule(self))
    }
}

#[cfg(test)]
mod tests {
    use super::super::{parse, DynamicRule, Target, UpdateRule};
    use super::*;
    use crate::model::Sort;
    use proptest::prelude::*;

    #[test]
    fn update_prints_plainly() {
        let r = Rule::Update(UpdateRule {
            target: Target::var("n"),
            rhs: Term::binary(Op::Add, Term::var("n"), Term::real(1.0)),
        });
        assert_eq!(print_rule(&r), "n := n + 1\n");
    }

    #[test]
    fn nested_if_is_balanced() {
        let p =
            parse("if a < 1 then if b < 2 then x := 1 else x := 2 endif else skip endif").unwrap();
        let text = print(&p);
        assert_eq!(text.matches("if ").count(), text.matches("endif").count());
        assert_eq!(
            text,
            "if a < 1 then\n  if b < 2 then\n    x := 1\n  else\n    x := 2\n  endif\nendif\n"
        );
        assert_eq!(parse(&text).unwrap(), p);
    }

    #[test]
    fn precedence_and_associativity() {
        for src in [
            "x := a - (b - c)",
            "x := (a - b) - c",
            "x := a / (b * c)",
            "x := -(a + b) * c",
            "x := - -a",
            "x := -(2)",
            "x := 2 * -1",
            "x := a - -1",
            "p := not (a = 1) and (b < 2 or c <= 3)",
            "p := not not p",
            "p := (a < 1) = (b < 2)",
        ] {
            let p = parse(src).unwrap();
            let text = print(&p);
            assert_eq!(parse(&text).unwrap(), p, "{src} -> {text}");
        }
        let p = parse("x := (a - b) - c").unwrap();
        assert_eq!(print(&p), "x := a - b - c\n");
    }

    #[test]
    fn declarations_print_first() {
        let p = parse("dynamic on/0 : bool\ndynamic f/1\nf(1) := 2").unwrap();
        assert_eq!(
            print(&p),
            "dynamic on/0 : bool\ndynamic f/1 : real\nf(1) := 2\n"
        );
    }

    fn leaf() -> impl Strategy<Value = Term> {
        prop_oneof![
            (0u32..5).prop_map(|i| Term::var(["a", "b", "c", "d", "e"][i as usize])),
            (-1000i32..1000).prop_map(|n| Term::real(n as f64 / 8.0)),
            any::<f64>()
                .prop_filter("finite", |x| x.is_finite())
                .prop_map(Term::real),
        ]
    }

    fn real_term() -> impl Strategy<Value = Term> {
        leaf().prop_recursive(4, 24, 2, |inner| {
            prop_oneof![
                (inner.clone(), inner.clone(), 0usize..4).prop_map(|(a, b, i)| {
                    Term::binary([Op::Add, Op::Sub, Op::Mul, Op::Div][i], a, b)
                }),
                inner.clone().prop_map(|a| Term::unary(Op::Neg, a)),
                inner.prop_map(|a| Term::app("f", vec![a])),
            ]
        })
    }

    fn bool_term() -> impl Strategy<Value = Term> {
        let atom = prop_oneof![
            (real_term(), real_term(), 0usize..3).prop_map(|(a, b, i)| Term::binary(
                [Op::Eq, Op::Lt, Op::Le][i],
                a,
                b
            )),
            Just(Term::var("p")),
            any::<bool>().prop_map(Term::bool),
        ];
        atom.prop_recursive(3, 16, 2, |inner| {
            prop_oneof![
                (inner.clone(), inner.clone(), 0usize..3)
                    .prop_map(|(a, b, i)| { Term::binary([Op::And, Op::Or, Op::Eq][i], a, b) }),
                inner.prop_map(Term::negation),
            ]
        })
    }

    fn rule() -> impl Strategy<Value = Rule> {
        let update = (0usize..5, real_term())
            .prop_map(|(i, rhs)| UpdateRule {
                target: Target::var(["a", "b", "c", "d", "e"][i]),
                rhs,
            })
            .boxed();
        let dynamic = (0usize..5, real_term()).prop_map(|(i, rhs)| DynamicRule {
            target: Target::var(["a", "b", "c", "d", "e"][i]),
            rhs,
        });
        let base = prop_oneof![
            update.clone().prop_map(Rule::Update),
            prop::collection::vec(update, 1..4).prop_map(Rule::Par),
            prop::collection::vec(dynamic, 1..4).prop_map(Rule::Flow),
            Just(Rule::Skip),
        ];
        base.prop_recursive(3, 12, 2, |inner| {
            (bool_term(), inner.clone(), inner).prop_map(|(g, a, b)| Rule::if_then_else(g, a, b))
        })
    }

    proptest! {
        #[test]
        fn parse_inverts_print(body in rule()) {
            let decls = vec![
                crate::model::Symbol::dynamic("p", 0, Sort::Bool),
                crate::model::Symbol::dynamic("f", 1, Sort::Real),
            ];
            let program = Program::from_rule(decls, body).unwrap();
            let text = print(&program);
            let reparsed = parse(&text).unwrap();
            prop_assert_eq!(&reparsed, &program);
            prop_assert_eq!(print(&reparsed), text);
        }
    }
}
