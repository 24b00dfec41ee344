//! Recursive-descent parser producing a position-annotated tree. Sort
//! inference and the remaining static checks run over this tree in
//! `check` before it is lowered to [`Rule`](super::Rule).

use super::lexer::Tok;
use super::{ParseError, ParseErrorKind, Pos};
use crate::model::{Op, Sort, Value};

#[derive(Clone, Debug)]
pub(crate) struct PTerm {
    pub node: PNode,
    pub pos: Pos,
}

#[derive(Clone, Debug)]
pub(crate) enum PNode {
    Lit(Value),
    Op(Op, Vec<PTerm>),
    App(String, Vec<PTerm>),
}

#[derive(Clone, Debug)]
pub(crate) struct PTarget {
    pub symbol: String,
    pub args: Vec<PTerm>,
    pub pos: Pos,
}

#[derive(Clone, Debug)]
pub(crate) enum PRule {
    Update(PTarget, PTerm),
    Par(Vec<(PTarget, PTerm)>),
    Dynamic(PTarget, PTerm),
    Flow(Vec<(PTarget, PTerm)>),
    If(PTerm, Box<PRule>, Box<PRule>),
    Skip,
}

#[derive(Clone, Debug)]
pub(crate) struct PDecl {
    pub name: String,
    pub arity: usize,
    pub sort: Sort,
    pub pos: Pos,
}

pub(crate) struct PProgram {
    pub decls: Vec<PDecl>,
    pub body: PRule,
}

pub(crate) struct Parser {
    tokens: Vec<(Tok, Pos)>,
    at: usize,
}

type PResult<T> = Result<T, ParseError>;

impl Parser {
    pub(crate) fn new(tokens: Vec<(Tok, Pos)>) -> Parser {
        Parser { tokens, at: 0 }
    }

    fn peek(&self) -> &Tok {
        &self.tokens[self.at].0
    }

    fn pos(&self) -> Pos {
        self.tokens[self.at].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.tokens[self.at].0.clone();
        if self.at + 1 < self.tokens.len() {
            self.at += 1;
        }
        t
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == tok {
            self.bump();
            true
        } else {
            false
        }
    }

    fn unexpected(&self, wanted: &str) -> ParseError {
        ParseError::new(
            ParseErrorKind::Syntax,
            self.pos(),
            format!("expected {wanted}, found {}", self.peek().describe()),
        )
    }

    fn expect(&mut self, tok: Tok, wanted: &str) -> PResult<()> {
        if self.eat(&tok) {
            Ok(())
        } else {
            Err(self.unexpected(wanted))
        }
    }

    fn skip_separators(&mut self) {
        while self.eat(&Tok::Semi) {}
    }

    pub(crate) fn program(mut self) -> PResult<PProgram> {
        let mut decls = Vec::new();
        self.skip_separators();
        while *self.peek() == Tok::DynamicDecl {
            decls.push(self.decl()?);
            self.skip_separators();
        }
        let body = self.rule()?;
        self.skip_separators();
        if *self.peek() != Tok::Eof {
            return Err(self.unexpected("end of program (wrap several rules in `par` or `flow`)"));
        }
        Ok(PProgram { decls, body })
    }

    pub(crate) fn lone_term(mut self) -> PResult<PTerm> {
        let t = self.term()?;
        if *self.peek() != Tok::Eof {
            return Err(self.unexpected("end of term"));
        }
        Ok(t)
    }

    fn decl(&mut self) -> PResult<PDecl> {
        let pos = self.pos();
        self.expect(Tok::DynamicDecl, "`dynamic`")?;
        let name = match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                s
            }
            _ => return Err(self.unexpected("symbol name")),
        };
        self.expect(Tok::Slash, "`/` and an arity")?;
        let arity = match *self.peek() {
            Tok::Number(x) if x >= 0.0 && x.fract() == 0.0 && x < 1e6 => {
                self.bump();
                x as usize
            }
            _ => return Err(self.unexpected("arity (a natural number)")),
        };
        let mut sort = Sort::Real;
        if self.eat(&Tok::Colon) {
            sort = match self.peek() {
                Tok::Ident(s) if s == "real" => Sort::Real,
                Tok::Ident(s) if s == "bool" => Sort::Bool,
                _ => return Err(self.unexpected("`real` or `bool`")),
            };
            self.bump();
        }
        Ok(PDecl {
            name,
            arity,
            sort,
            pos,
        })
    }

    fn rule(&mut self) -> PResult<PRule> {
        match self.peek() {
            Tok::Skip => {
                self.bump();
                Ok(PRule::Skip)
            }
            Tok::Par => self.block(Tok::Par),
            Tok::Flow => self.block(Tok::Flow),
            Tok::If => self.cond(),
            Tok::Dynamic => {
                let (target, rhs) = self.dynamic()?;
                Ok(PRule::Dynamic(target, rhs))
            }
            _ => {
                let (target, rhs) = self.update()?;
                Ok(PRule::Update(target, rhs))
            }
        }
    }

    fn block(&mut self, open: Tok) -> PResult<PRule> {
        let is_par = open == Tok::Par;
        let (close, close_name) = if is_par {
            (Tok::EndPar, "`endpar`")
        } else {
            (Tok::EndFlow, "`endflow`")
        };
        self.bump();
        let mut items = Vec::new();
        loop {
            self.skip_separators();
            if self.eat(&close) {
                break;
            }
            if *self.peek() == Tok::Eof {
                return Err(self.unexpected(close_name));
            }
            let pos = self.pos();
            let foreign = if is_par {
                matches!(
                    self.peek(),
                    Tok::Dynamic | Tok::Par | Tok::Flow | Tok::If | Tok::Skip
                )
            } else {
                !matches!(self.peek(), Tok::Dynamic)
            };
            if foreign {
                let (kind, what) = if is_par {
                    (
                        ParseErrorKind::MixedParBlock,
                        "`par` blocks may only contain update rules",
                    )
                } else {
                    (
                        ParseErrorKind::MixedFlowBlock,
                        "`flow` blocks may only contain `Dynamic` rules",
                    )
                };
                return Err(ParseError::new(
                    kind,
                    pos,
                    format!("{what}, found {}", self.peek().describe()),
                ));
            }
            items.push(if is_par {
                self.update()?
            } else {
                self.dynamic()?
            });
        }
        if items.is_empty() {
            return Err(ParseError::new(
                ParseErrorKind::Syntax,
                self.tokens[self.at - 1].1,
                format!(
                    "empty block; {} needs at least one rule",
                    if is_par { "par" } else { "flow" }
                ),
            ));
        }
        Ok(if is_par {
            PRule::Par(items)
        } else {
            PRule::Flow(items)
        })
    }

    fn cond(&mut self) -> PResult<PRule> {
        self.expect(Tok::If, "`if`")?;
        let guard = self.term()?;
        self.expect(Tok::Then, "`then`")?;
        self.skip_separators();
        let then = self.rule()?;
        self.skip_separators();
        let otherwise = if self.eat(&Tok::Else) {
            self.skip_separators();
            let r = self.rule()?;
            self.skip_separators();
            r
        } else {
            PRule::Skip
        };
        self.expect(Tok::EndIf, "`endif`")?;
        Ok(PRule::If(guard, Box::new(then), Box::new(otherwise)))
    }

    fn target(&mut self) -> PResult<PTarget> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::Ident(symbol) => {
                self.bump();
                let args = if *self.peek() == Tok::LParen {
                    self.arguments()?
                } else {
                    Vec::new()
                };
                Ok(PTarget { symbol, args, pos })
            }
            Tok::True | Tok::False | Tok::Number(_) => Err(ParseError::new(
                ParseErrorKind::StaticAssignment,
                pos,
                format!("cannot assign to static {}", self.peek().describe()),
            )),
            _ => Err(self.unexpected("a rule")),
        }
    }

    fn update(&mut self) -> PResult<(PTarget, PTerm)> {
        let target = self.target()?;
        self.expect(Tok::Assign, "`:=`")?;
        let rhs = self.term()?;
        Ok((target, rhs))
    }

    fn dynamic(&mut self) -> PResult<(PTarget, PTerm)> {
        self.expect(Tok::Dynamic, "`Dynamic`")?;
        self.expect(Tok::LParen, "`(`")?;
        let target = self.target()?;
        self.expect(Tok::Comma, "`,`")?;
        let rhs = self.term()?;
        self.expect(Tok::RParen, "`)`")?;
        Ok((target, rhs))
    }

    fn arguments(&mut self) -> PResult<Vec<PTerm>> {
        self.expect(Tok::LParen, "`(`")?;
        let mut args = vec![self.term()?];
        while self.eat(&Tok::Comma) {
            args.push(self.term()?);
        }
        self.expect(Tok::RParen, "`)` or `,`")?;
        Ok(args)
    }

    pub(crate) fn term(&mut self) -> PResult<PTerm> {
        self.or_expr()
    }

    fn binary(op: Op, a: PTerm, b: PTerm) -> PTerm {
        let pos = a.pos;
        PTerm {
            node: PNode::Op(op, vec![a, b]),
            pos,
        }
    }

    fn or_expr(&mut self) -> PResult<PTerm> {
        let mut lhs = self.and_expr()?;
        while self.eat(&Tok::Or) {
            let rhs = self.and_expr()?;
            lhs = Self::binary(Op::Or, lhs, rhs);
        }
        Ok(lhs)
    }

    fn and_expr(&mut self) -> PResult<PTerm> {
        let mut lhs = self.not_expr()?;
        while self.eat(&Tok::And) {
            let rhs = self.not_expr()?;
            lhs = Self::binary(Op::And, lhs, rhs);
        }
        Ok(lhs)
    }

    fn not_expr(&mut self) -> PResult<PTerm> {
        let pos = self.pos();
        if self.eat(&Tok::Not) {
            let inner = self.not_expr()?;
            return Ok(PTerm {
                node: PNode::Op(Op::Not, vec![inner]),
                pos,
            });
        }
        self.cmp_expr()
    }

    fn cmp_expr(&mut self) -> PResult<PTerm> {
        let lhs = self.add_expr()?;
        let op = match self.peek() {
            Tok::Eq => Op::Eq,
            Tok::Lt => Op::Lt,
            Tok::Le => Op::Le,
            _ => return Ok(lhs),
        };
        self.bump();
        let rhs = self.add_expr()?;
        if matches!(self.peek(), Tok::Eq | Tok::Lt | Tok::Le) {
            return Err(ParseError::new(
                ParseErrorKind::Syntax,
                self.pos(),
                "comparisons do not chain; add parentheses",
            ));
        }
        Ok(Self::binary(op, lhs, rhs))
    }

    fn add_expr(&mut self) -> PResult<PTerm> {
        let mut lhs = self.mul_expr()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => Op::Add,
                Tok::Minus => Op::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.mul_expr()?;
            lhs = Self::binary(op, lhs, rhs);
        }
    }

    fn mul_expr(&mut self) -> PResult<PTerm> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Star => Op::Mul,
                Tok::Slash => Op::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = Self::binary(op, lhs, rhs);
        }
    }

    fn unary(&mut self) -> PResult<PTerm> {
        let pos = self.pos();
        if *self.peek() == Tok::Minus {
            self.bump();
            // `-2` is a literal; `-(2)` and `-x` are negations
            if let Tok::Number(x) = *self.peek() {
                self.bump();
                let v = Value::real(-x).expect("finite literal");
                return Ok(PTerm {
                    node: PNode::Lit(v),
                    pos,
                });
            }
            let inner = self.unary()?;
            return Ok(PTerm {
                node: PNode::Op(Op::Neg, vec![inner]),
                pos,
            });
        }
        self.primary()
    }

    fn primary(&mut self) -> PResult<PTerm> {
        let pos = self.pos();
        let node = match self.peek().clone() {
            Tok::Number(x) => {
                self.bump();
                PNode::Lit(Value::real(x).expect("finite literal"))
            }
            Tok::True => {
                self.bump();
                PNode::Lit(Value::Bool(true))
            }
            Tok::False => {
                self.bump();
                PNode::Lit(Value::Bool(false))
            }
            Tok::Ident(name) => {
                self.bump();
                let args = if *self.peek() == Tok::LParen {
                    self.arguments()?
                } else {
                    Vec::new()
                };
                PNode::App(name, args)
            }
            Tok::LParen => {
                self.bump();
                let inner = self.term()?;
                self.expect(Tok::RParen, "`)`")?;
                return Ok(PTerm {
                    node: inner.node,
                    pos,
                });
            }
            _ => return Err(self.unexpected("a term")),
        };
        Ok(PTerm { node, pos })
    }
}
