//! Text grammar for [`SmoothFn`]:
//!
//! ```text
//! sum     := term (("+" | "-") term)*
//! term    := unary (("*" | "/") unary)*
//! unary   := "-" unary | power
//! power   := atom ("^" "-"? int)?
//! atom    := number | "x"<int> | "pi" | "@"<int> | "(" sum ")"
//!          | ("sin" | "cos") "(" sum ")"
//!          | ("bump" | "tbump") "(" r0 "," r1 ("," c)+ ")"
//!          | "lift" "(" "x"<int> "," c ")"
//!          | "cone" "(" int ("," c)+ "," sum ")"
//! ```
//!
//! Numbers are exact (`3`, `2/3` via division, `0.125`). `@<int>` refers to
//! an entry of a node table, which is how large shared DAGs are stored.

use std::collections::HashMap;
use std::fmt;

use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use super::{Node, SmoothFn};
use crate::error::{Error, Result};
use crate::scalar::{parse_rational, Rational};

pub fn parse(text: &str, arity: usize) -> Result<SmoothFn> {
    parse_with_refs(text, arity, &[])
}

pub fn parse_with_refs(text: &str, arity: usize, refs: &[SmoothFn]) -> Result<SmoothFn> {
    let mut p = Parser { s: text.as_bytes(), pos: 0, arity, refs };
    let e = p.sum()?;
    p.skip_ws();
    if p.pos != p.s.len() {
        return Err(p.err("unexpected trailing input"));
    }
    Ok(e)
}

struct Parser<'a> {
    s: &'a [u8],
    pos: usize,
    arity: usize,
    refs: &'a [SmoothFn],
}

impl Parser<'_> {
    fn err(&self, msg: impl Into<String>) -> Error {
        Error::Parse { pos: self.pos, msg: msg.into() }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.s.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: u8) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.err(format!("expected `{}`", c as char)))
        }
    }

    fn sum(&mut self) -> Result<SmoothFn> {
        let mut terms = vec![self.term()?];
        loop {
            if self.eat(b'+') {
                terms.push(self.term()?);
            } else if self.eat(b'-') {
                terms.push(self.term()?.neg());
            } else {
                break;
            }
        }
        Ok(if terms.len() == 1 { terms.pop().unwrap() } else { SmoothFn::sum(self.arity, terms) })
    }

    fn term(&mut self) -> Result<SmoothFn> {
        let mut factors = vec![self.unary()?];
        loop {
            if self.eat(b'*') {
                factors.push(self.unary()?);
            } else if self.eat(b'/') {
                let at = self.pos;
                let d = self.unary()?;
                match d.as_poly().map(|p| p.as_constant()) {
                    Some(Some(c)) if c.is_zero() => {
                        return Err(Error::Parse { pos: at, msg: "division by zero".into() })
                    }
                    Some(Some(c)) => factors.push(SmoothFn::constant(self.arity, c.recip())),
                    _ => factors.push(d.powi(-1)),
                }
            } else {
                break;
            }
        }
        Ok(if factors.len() == 1 { factors.pop().unwrap() } else { SmoothFn::product(self.arity, factors) })
    }

    fn unary(&mut self) -> Result<SmoothFn> {
        if self.eat(b'-') {
            return Ok(self.unary()?.neg());
        }
        self.power()
    }

    fn power(&mut self) -> Result<SmoothFn> {
        let base = self.atom()?;
        if self.eat(b'^') {
            let negative = self.eat(b'-');
            let n = self.integer()?;
            let e = i32::try_from(n).map_err(|_| self.err("exponent too large"))?;
            return Ok(base.powi(if negative { -e } else { e }));
        }
        Ok(base)
    }

    fn integer(&mut self) -> Result<u64> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.err("expected an integer"));
        }
        std::str::from_utf8(&self.s[start..self.pos])
            .unwrap()
            .parse()
            .map_err(|_| Error::Parse { pos: start, msg: "integer out of range".into() })
    }

    fn number(&mut self) -> Result<Rational> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.s.len() && (self.s[self.pos].is_ascii_digit() || self.s[self.pos] == b'.') {
            self.pos += 1;
        }
        let text = std::str::from_utf8(&self.s[start..self.pos]).unwrap();
        parse_rational(text).map_err(|_| Error::Parse { pos: start, msg: format!("bad number `{text}`") })
    }

    fn ident(&mut self) -> &str {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_alphabetic() {
            self.pos += 1;
        }
        std::str::from_utf8(&self.s[start..self.pos]).unwrap()
    }

    fn variable_index(&mut self) -> Result<usize> {
        let i = self.integer()? as usize;
        if i == 0 || i > self.arity {
            return Err(self.err(format!("variable x{i} outside chart of dimension {}", self.arity)));
        }
        Ok(i - 1)
    }

    /// A constant-valued argument such as `-1/2`.
    fn constant_arg(&mut self) -> Result<Rational> {
        let at = self.pos;
        let e = self.sum()?;
        e.as_poly()
            .and_then(|p| p.as_constant())
            .ok_or(Error::Parse { pos: at, msg: "expected a rational constant".into() })
    }

    fn atom(&mut self) -> Result<SmoothFn> {
        let n = self.arity;
        match self.peek() {
            None => Err(self.err("unexpected end of input")),
            Some(b'(') => {
                self.pos += 1;
                let e = self.sum()?;
                self.expect(b')')?;
                Ok(e)
            }
            Some(b'@') => {
                self.pos += 1;
                let id = self.integer()? as usize;
                let f = self.refs.get(id).ok_or_else(|| self.err(format!("unknown node @{id}")))?;
                if f.arity() != n {
                    return Err(self.err(format!("node @{id} has arity {}", f.arity())));
                }
                Ok(f.clone())
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => Ok(SmoothFn::constant(n, self.number()?)),
            Some(c) if c.is_ascii_alphabetic() => {
                let start = self.pos;
                let name = self.ident().to_string();
                match name.as_str() {
                    "x" => Ok(SmoothFn::var(n, self.variable_index()?)),
                    "pi" => Ok(SmoothFn::pi(n)),
                    "sin" | "cos" => {
                        self.expect(b'(')?;
                        let e = self.sum()?;
                        self.expect(b')')?;
                        Ok(if name == "sin" { e.sin() } else { e.cos() })
                    }
                    "bump" | "tbump" => {
                        self.expect(b'(')?;
                        let r0 = self.constant_arg()?;
                        self.expect(b',')?;
                        let r1 = self.constant_arg()?;
                        let mut center = Vec::new();
                        while self.eat(b',') {
                            center.push(self.constant_arg()?);
                        }
                        self.expect(b')')?;
                        SmoothFn::bump(n, r0, r1, center, name == "tbump")
                            .map_err(|e| Error::Parse { pos: start, msg: e.to_string() })
                    }
                    "lift" => {
                        self.expect(b'(')?;
                        if self.ident() != "x" {
                            return Err(self.err("lift expects a coordinate x<i>"));
                        }
                        let axis = self.variable_index()?;
                        self.expect(b',')?;
                        let c = self.constant_arg()?;
                        self.expect(b')')?;
                        SmoothFn::lift(n, axis, c)
                    }
                    "cone" => {
                        self.expect(b'(')?;
                        let power = self.integer()?.to_u32().ok_or_else(|| self.err("power too large"))?;
                        let mut center = Vec::with_capacity(n);
                        for _ in 0..n {
                            self.expect(b',')?;
                            center.push(self.constant_arg()?);
                        }
                        self.expect(b',')?;
                        let inner = self.sum()?;
                        self.expect(b')')?;
                        inner.cone(power, &center)
                    }
                    _ => Err(Error::Parse { pos: start, msg: format!("unknown identifier `{name}`") }),
                }
            }
            Some(c) => Err(self.err(format!("unexpected character `{}`", c as char))),
        }
    }
}

/// A set of expressions sharing subexpressions, stored as a node table.
///
/// Each table entry may refer to earlier entries as `@<index>`; `roots` are
/// expressions over the whole table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DagText {
    pub nodes: Vec<String>,
    pub roots: Vec<String>,
}

struct WithRefs<'a>(&'a SmoothFn, &'a HashMap<usize, usize>);

impl fmt::Display for WithRefs<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.write_with(f, self.1)
    }
}

fn children(f: &SmoothFn) -> Vec<&SmoothFn> {
    match f.node() {
        Node::Sum(c, _) | Node::Product(c) => c.iter().collect(),
        Node::Neg(g) | Node::Pow(g, _) | Node::Sin(g) | Node::Cos(g) => vec![g],
        Node::Cone { inner, .. } => vec![inner],
        Node::Poly(_) | Node::Pi | Node::Bump(_) | Node::Lift { .. } => vec![],
    }
}

/// Serializes `roots`, giving every subexpression that occurs more than once
/// its own table entry.
pub fn encode_dag(roots: &[SmoothFn]) -> DagText {
    let mut uses: HashMap<usize, usize> = HashMap::new();
    let mut stack: Vec<&SmoothFn> = roots.iter().collect();
    while let Some(f) = stack.pop() {
        let count = uses.entry(f.ptr()).or_insert(0);
        *count += 1;
        if *count == 1 {
            stack.extend(children(f));
        }
    }
    // post-order numbering, so entries only refer backwards
    let mut ids: HashMap<usize, usize> = HashMap::new();
    let mut order: Vec<&SmoothFn> = Vec::new();
    let mut visited: std::collections::HashSet<usize> = Default::default();
    fn visit<'a>(
        f: &'a SmoothFn,
        uses: &HashMap<usize, usize>,
        visited: &mut std::collections::HashSet<usize>,
        ids: &mut HashMap<usize, usize>,
        order: &mut Vec<&'a SmoothFn>,
    ) {
        if !visited.insert(f.ptr()) {
            return;
        }
        for c in children(f) {
            visit(c, uses, visited, ids, order);
        }
        if uses[&f.ptr()] > 1 {
            ids.insert(f.ptr(), order.len());
            order.push(f);
        }
    }
    for r in roots {
        visit(r, &uses, &mut visited, &mut ids, &mut order);
    }
    let nodes = order.iter().map(|f| WithRefs(f, &ids).to_string()).collect();
    let roots = roots
        .iter()
        .map(|r| match ids.get(&r.ptr()) {
            Some(id) => format!("@{id}"),
            None => WithRefs(r, &ids).to_string(),
        })
        .collect();
    DagText { nodes, roots }
}

pub fn decode_dag(dag: &DagText, arity: usize) -> Result<Vec<SmoothFn>> {
    let mut table: Vec<SmoothFn> = Vec::with_capacity(dag.nodes.len());
    for text in &dag.nodes {
        let f = parse_with_refs(text, arity, &table)?;
        table.push(f);
    }
    dag.roots.iter().map(|r| parse_with_refs(r, arity, &table)).collect()
}
