//! Recursive-descent parser for `.pol` machines.

use super::ast::*;
use super::lexer::{tokenize, Pos, Tok, Token};
use super::ParseError;

pub const KEYWORDS: &[&str] = &[
    "machine",
    "refines",
    "set",
    "sets",
    "constant",
    "constants",
    "variable",
    "variables",
    "invariant",
    "invariants",
    "init",
    "end",
    "event",
    "events",
    "any",
    "where",
    "when",
    "then",
    "skip",
    "of",
    "map",
    "in",
    "not",
    "true",
    "false",
    "dom",
    "ran",
];

pub fn is_keyword(s: &str) -> bool {
    KEYWORDS.contains(&s)
}

pub fn parse_policy(text: &str) -> Result<PolicyMachine, ParseError> {
    let tokens = tokenize(text)?;
    let mut p = Parser { tokens, at: 0 };
    let m = p.machine()?;
    p.expect_eof()?;
    Ok(m)
}

/// Parses a standalone predicate or expression in machine syntax.
pub fn parse_expr(text: &str) -> Result<Expr, ParseError> {
    let tokens = tokenize(text)?;
    let mut p = Parser { tokens, at: 0 };
    let e = p.pred()?;
    p.expect_eof()?;
    Ok(e)
}

struct Parser {
    tokens: Vec<Token>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.at].tok
    }

    fn pos(&self) -> Pos {
        self.tokens[self.at].pos
    }

    fn bump(&mut self) -> Tok {
        let t = self.tokens[self.at].tok.clone();
        if self.at + 1 < self.tokens.len() {
            self.at += 1;
        }
        t
    }

    fn error<T>(&self, expected: &[&str]) -> Result<T, ParseError> {
        Err(ParseError::Syntax {
            pos: self.pos(),
            found: self.peek().describe(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
        })
    }

    fn at_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.at_kw(kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_kw(&mut self, kw: &str) -> Result<(), ParseError> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            self.error(&[&format!("`{kw}`")])
        }
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == tok {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: Tok) -> Result<(), ParseError> {
        if self.eat(&tok) {
            Ok(())
        } else {
            self.error(&[&format!("`{}`", tok.symbol())])
        }
    }

    fn expect_eof(&mut self) -> Result<(), ParseError> {
        if *self.peek() == Tok::Eof {
            Ok(())
        } else {
            self.error(&["end of input"])
        }
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        match self.peek() {
            Tok::Ident(s) if !is_keyword(s) => {
                let s = s.clone();
                self.bump();
                Ok(s)
            }
            _ => self.error(&["identifier"]),
        }
    }

    fn ident_list(&mut self) -> Result<Vec<String>, ParseError> {
        let mut out = vec![self.ident()?];
        while self.eat(&Tok::Comma) {
            out.push(self.ident()?);
        }
        Ok(out)
    }

    fn machine(&mut self) -> Result<PolicyMachine, ParseError> {
        self.expect_kw("machine")?;
        let name = self.ident()?;
        let refines = if self.eat_kw("refines") {
            Some(self.ident()?)
        } else {
            None
        };
        let mut m = PolicyMachine {
            name,
            refines,
            sets: Vec::new(),
            constants: Vec::new(),
            variables: Vec::new(),
            invariants: Vec::new(),
            init: Vec::new(),
            events: Vec::new(),
        };

        self.eat_kw("sets");
        while self.at_kw("set") {
            let pos = self.pos();
            self.bump();
            let name = self.ident()?;
            self.expect(Tok::Eq)?;
            self.expect(Tok::LBrace)?;
            let elements = if *self.peek() == Tok::RBrace {
                Vec::new()
            } else {
                self.ident_list()?
            };
            self.expect(Tok::RBrace)?;
            if m.sets.iter().any(|s| s.name == name) {
                return Err(ParseError::Duplicate { pos, what: "set", name });
            }
            m.sets.push(SetDecl { name, elements });
        }

        self.eat_kw("constants");
        while self.at_kw("constant") {
            let pos = self.pos();
            self.bump();
            let name = self.ident()?;
            self.expect(Tok::Eq)?;
            let value = self.expr()?;
            if m.constants.iter().any(|c| c.name == name) {
                return Err(ParseError::Duplicate {
                    pos,
                    what: "constant",
                    name,
                });
            }
            m.constants.push(ConstDecl { name, value });
        }

        self.eat_kw("variables");
        while self.at_kw("variable") {
            let pos = self.pos();
            self.bump();
            let name = self.ident()?;
            self.expect(Tok::Colon)?;
            let ty = self.type_expr()?;
            if m.variables.iter().any(|v| v.name == name) {
                return Err(ParseError::Duplicate {
                    pos,
                    what: "variable",
                    name,
                });
            }
            m.variables.push(VarDecl { name, ty });
        }

        self.eat_kw("invariants");
        while self.at_kw("invariant") {
            let pos = self.pos();
            self.bump();
            let label = self.ident()?;
            self.expect(Tok::Colon)?;
            let pred = self.pred()?;
            if m.invariants.iter().any(|i| i.label == label) {
                return Err(ParseError::Duplicate {
                    pos,
                    what: "invariant",
                    name: label,
                });
            }
            m.invariants.push(Invariant { label, pred });
        }

        if !self.eat_kw("init") {
            return self.error(&["`set`", "`constant`", "`variable`", "`invariant`", "`init`"]);
        }
        m.init = self.assignments()?;
        // `init ... end` normally; a bare `events` header also closes the block.
        if !self.at_kw("events") && !self.eat_kw("end") {
            return self.error(&["identifier", "`end`", "`events`"]);
        }

        self.eat_kw("events");
        while self.at_kw("event") {
            let pos = self.pos();
            let ev = self.event()?;
            if m.events.iter().any(|e| e.name == ev.name) {
                return Err(ParseError::Duplicate {
                    pos,
                    what: "event",
                    name: ev.name,
                });
            }
            m.events.push(ev);
        }
        if !self.eat_kw("end") {
            return self.error(&["`event`", "`end`"]);
        }
        Ok(m)
    }

    fn type_expr(&mut self) -> Result<TypeExpr, ParseError> {
        if self.eat_kw("set") {
            self.expect_kw("of")?;
            return Ok(TypeExpr::SetOf(self.ident()?));
        }
        if self.eat_kw("map") {
            let domain = if self.eat(&Tok::LParen) {
                let a = self.ident()?;
                self.expect(Tok::Comma)?;
                let b = self.ident()?;
                self.expect(Tok::RParen)?;
                vec![a, b]
            } else {
                vec![self.ident()?]
            };
            let total = if self.eat(&Tok::Arrow) {
                true
            } else if self.eat(&Tok::PartialArrow) {
                false
            } else {
                return self.error(&["`->`", "`+->`"]);
            };
            let range = if self.eat_kw("set") {
                self.expect_kw("of")?;
                RangeType::SetOf(self.ident()?)
            } else {
                RangeType::Elem(self.ident()?)
            };
            return Ok(TypeExpr::Map { domain, range, total });
        }
        self.error(&["`set`", "`map`"])
    }

    fn assignments(&mut self) -> Result<Vec<Assignment>, ParseError> {
        let mut out = Vec::new();
        loop {
            if self.eat_kw("skip") {
                continue;
            }
            match self.peek() {
                Tok::Ident(s) if !is_keyword(s) => out.push(self.assignment()?),
                _ => return Ok(out),
            }
        }
    }

    fn assignment(&mut self) -> Result<Assignment, ParseError> {
        let target = self.ident()?;
        let mut args = Vec::new();
        if self.eat(&Tok::LParen) {
            args.push(self.expr()?);
            while self.eat(&Tok::Comma) {
                args.push(self.expr()?);
            }
            self.expect(Tok::RParen)?;
        }
        let kind = if self.eat(&Tok::Becomes) {
            AssignKind::Becomes
        } else if self.eat(&Tok::ChooseFrom) {
            AssignKind::ChooseFrom
        } else {
            return self.error(&["`:=`", "`::`"]);
        };
        let rhs = self.expr()?;
        Ok(Assignment {
            target,
            args,
            kind,
            rhs,
        })
    }

    fn event(&mut self) -> Result<Event, ParseError> {
        self.expect_kw("event")?;
        let name = self.ident()?;
        let refines = if self.eat_kw("refines") {
            Some(self.ident()?)
        } else {
            None
        };
        let params = if self.eat_kw("any") {
            self.ident_list()?
        } else {
            Vec::new()
        };
        if !(self.eat_kw("where") || self.eat_kw("when")) {
            return self.error(&["`any`", "`where`"]);
        }
        let guard = self.pred()?;
        self.expect_kw("then")?;
        let actions = self.assignments()?;
        if !self.eat_kw("end") {
            return self.error(&["identifier", "`skip`", "`end`"]);
        }
        Ok(Event {
            name,
            refines,
            params,
            guard,
            actions,
        })
    }

    // pred := '!' IDENT ['in' expr] '.' pred | implication
    fn pred(&mut self) -> Result<Expr, ParseError> {
        if *self.peek() == Tok::Bang {
            return self.forall();
        }
        self.implication()
    }

    fn forall(&mut self) -> Result<Expr, ParseError> {
        self.expect(Tok::Bang)?;
        let var = self.ident()?;
        let domain = if self.eat_kw("in") {
            Some(Box::new(self.expr()?))
        } else {
            None
        };
        self.expect(Tok::Dot)?;
        let body = Box::new(self.pred()?);
        Ok(Expr::Forall { var, domain, body })
    }

    fn implication(&mut self) -> Result<Expr, ParseError> {
        let lhs = self.disjunction()?;
        if self.eat(&Tok::Implies) {
            let rhs = self.pred()?;
            return Ok(Expr::Implies(Box::new(lhs), Box::new(rhs)));
        }
        Ok(lhs)
    }

    fn disjunction(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.conjunction()?;
        while self.eat(&Tok::Or) {
            let rhs = self.conjunction()?;
            lhs = Expr::Or(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn conjunction(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.negation()?;
        while self.eat(&Tok::And) {
            let rhs = self.negation()?;
            lhs = Expr::And(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn negation(&mut self) -> Result<Expr, ParseError> {
        if self.eat_kw("not") {
            return Ok(Expr::Not(Box::new(self.negation()?)));
        }
        if *self.peek() == Tok::Bang {
            return self.forall();
        }
        self.relation()
    }

    fn relation(&mut self) -> Result<Expr, ParseError> {
        let lhs = self.expr()?;
        let op = match self.peek() {
            Tok::Eq => RelOp::Eq,
            Tok::Neq => RelOp::Neq,
            Tok::NotIn => RelOp::NotIn,
            Tok::Subset => RelOp::Subset,
            Tok::Ident(s) if s == "in" => RelOp::In,
            _ => return Ok(lhs),
        };
        self.bump();
        let rhs = self.expr()?;
        Ok(Expr::Rel(op, Box::new(lhs), Box::new(rhs)))
    }

    // expr := setexpr {'|->' setexpr}
    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.set_expr()?;
        while self.eat(&Tok::Maplet) {
            let rhs = self.set_expr()?;
            lhs = Expr::Maplet(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn set_expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.postfix()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => SetOp::Union,
                Tok::Backslash => SetOp::Difference,
                Tok::Star => SetOp::Product,
                Tok::Override => SetOp::Override,
                Tok::DomSub => SetOp::DomainSubtract,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.postfix()?;
            lhs = Expr::Set(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn postfix(&mut self) -> Result<Expr, ParseError> {
        let mut e = self.atom()?;
        loop {
            if self.eat(&Tok::LParen) {
                let mut args = vec![self.expr()?];
                while self.eat(&Tok::Comma) {
                    args.push(self.expr()?);
                }
                self.expect(Tok::RParen)?;
                e = Expr::Apply(Box::new(e), args);
            } else if self.eat(&Tok::LBracket) {
                let s = self.expr()?;
                self.expect(Tok::RBracket)?;
                e = Expr::Image(Box::new(e), Box::new(s));
            } else {
                return Ok(e);
            }
        }
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        match self.peek().clone() {
            Tok::LParen => {
                self.bump();
                let e = self.pred()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Tok::LBrace => {
                self.bump();
                let mut items = Vec::new();
                if !self.eat(&Tok::RBrace) {
                    items.push(self.expr()?);
                    while self.eat(&Tok::Comma) {
                        items.push(self.expr()?);
                    }
                    self.expect(Tok::RBrace)?;
                }
                Ok(Expr::SetLit(items))
            }
            Tok::Ident(s) => match s.as_str() {
                "true" => {
                    self.bump();
                    Ok(Expr::Bool(true))
                }
                "false" => {
                    self.bump();
                    Ok(Expr::Bool(false))
                }
                "dom" | "ran" => {
                    self.bump();
                    self.expect(Tok::LParen)?;
                    let inner = Box::new(self.expr()?);
                    self.expect(Tok::RParen)?;
                    Ok(if s == "dom" { Expr::Dom(inner) } else { Expr::Ran(inner) })
                }
                _ if is_keyword(&s) => self.error(&["expression"]),
                _ => {
                    self.bump();
                    Ok(Expr::Ident(s))
                }
            },
            _ => self.error(&["identifier", "`{`", "`(`", "`true`", "`false`", "`dom`", "`ran`"]),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_machine_with_section_headers() {
        let m = parse_policy("machine M variables invariants init events end").unwrap();
        assert_eq!(m.name, "M");
        assert!(m.events.is_empty());
        assert!(m.variables.is_empty());
    }

    #[test]
    fn precedence_matches_grammar() {
        // set ops bind tighter than maplet, which binds tighter than relations
        let e = parse_expr("a |-> b + c in f").unwrap();
        let expect = Expr::Rel(
            RelOp::In,
            Box::new(Expr::Maplet(
                Box::new(Expr::ident("a")),
                Box::new(Expr::Set(
                    SetOp::Union,
                    Box::new(Expr::ident("b")),
                    Box::new(Expr::ident("c")),
                )),
            )),
            Box::new(Expr::ident("f")),
        );
        assert_eq!(e, expect);

        let e = parse_expr("not p = q /\\ r = s \\/ t = u => v = w").unwrap();
        match e {
            Expr::Implies(lhs, _) => match *lhs {
                Expr::Or(and, _) => match *and {
                    Expr::And(not, _) => assert!(matches!(*not, Expr::Not(_))),
                    other => panic!("{other:?}"),
                },
                other => panic!("{other:?}"),
            },
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn quantifier_body_is_greedy() {
        let e = parse_expr("!x . x in S /\\ y = z => x = y").unwrap();
        match e {
            Expr::Forall { var, domain, body } => {
                assert_eq!(var, "x");
                assert!(domain.is_none());
                assert!(matches!(*body, Expr::Implies(..)));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn duplicate_event_is_reported() {
        let src = "machine M init end event E where true then end event E where true then end end";
        match parse_policy(src) {
            Err(ParseError::Duplicate { what, name, .. }) => {
                assert_eq!(what, "event");
                assert_eq!(name, "E");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn syntax_error_carries_position_and_expectations() {
        let src = "machine M\ninit\n  x := \nend end";
        match parse_policy(src) {
            Err(ParseError::Syntax { pos, expected, .. }) => {
                assert_eq!(pos.line, 4);
                assert!(expected.iter().any(|e| e == "expression"), "{expected:?}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn two_argument_application_and_override() {
        let e = parse_expr("permissions <+ {Reporter |-> rp |-> {R}}").unwrap();
        assert!(matches!(e, Expr::Set(SetOp::Override, ..)));
        let e = parse_expr("R in permissions(Reporter, rp)").unwrap();
        match e {
            Expr::Rel(RelOp::In, _, rhs) => match *rhs {
                Expr::Apply(_, args) => assert_eq!(args.len(), 2),
                other => panic!("{other:?}"),
            },
            other => panic!("{other:?}"),
        }
    }
}
