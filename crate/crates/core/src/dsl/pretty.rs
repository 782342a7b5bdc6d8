//! Canonical printer. Parentheses are inserted only where the grammar's
//! precedence would otherwise regroup the tree, so printing is a fixpoint of
//! parse-then-print.

use std::fmt::Write;

use super::ast::*;

const FORALL: u8 = 0;
const IMPLIES: u8 = 1;
const OR: u8 = 2;
const AND: u8 = 3;
const NOT: u8 = 4;
const REL: u8 = 5;
const MAPLET: u8 = 6;
const SETOP: u8 = 7;
const POSTFIX: u8 = 8;
const ATOM: u8 = 9;

fn level(e: &Expr) -> u8 {
    match e {
        Expr::Forall { .. } => FORALL,
        Expr::Implies(..) => IMPLIES,
        Expr::Or(..) => OR,
        Expr::And(..) => AND,
        Expr::Not(..) => NOT,
        Expr::Rel(..) => REL,
        Expr::Maplet(..) => MAPLET,
        Expr::Set(..) => SETOP,
        Expr::Apply(..) | Expr::Image(..) => POSTFIX,
        Expr::Ident(_) | Expr::Bool(_) | Expr::SetLit(_) | Expr::Dom(_) | Expr::Ran(_) => ATOM,
    }
}

pub fn expr_to_string(e: &Expr) -> String {
    let mut s = String::new();
    write_expr(&mut s, e, FORALL);
    s
}

fn write_expr(out: &mut String, e: &Expr, min: u8) {
    if level(e) < min {
        out.push('(');
        write_expr(out, e, FORALL);
        out.push(')');
        return;
    }
    match e {
        Expr::Ident(n) => out.push_str(n),
        Expr::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Expr::SetLit(items) => {
            out.push('{');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_expr(out, item, MAPLET);
            }
            out.push('}');
        }
        Expr::Maplet(a, b) => {
            write_expr(out, a, MAPLET);
            out.push_str(" |-> ");
            write_expr(out, b, SETOP);
        }
        Expr::Apply(f, args) => {
            write_expr(out, f, POSTFIX);
            out.push('(');
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_expr(out, a, MAPLET);
            }
            out.push(')');
        }
        Expr::Image(f, s) => {
            write_expr(out, f, POSTFIX);
            out.push('[');
            write_expr(out, s, MAPLET);
            out.push(']');
        }
        Expr::Dom(a) | Expr::Ran(a) => {
            out.push_str(if matches!(e, Expr::Dom(_)) { "dom(" } else { "ran(" });
            write_expr(out, a, MAPLET);
            out.push(')');
        }
        Expr::Set(op, a, b) => {
            write_expr(out, a, SETOP);
            out.push_str(match op {
                SetOp::Union => " + ",
                SetOp::Difference => " \\ ",
                SetOp::Product => " * ",
                SetOp::Override => " <+ ",
                SetOp::DomainSubtract => " <<| ",
            });
            write_expr(out, b, POSTFIX);
        }
        Expr::Rel(op, a, b) => {
            write_expr(out, a, MAPLET);
            out.push_str(match op {
                RelOp::Eq => " = ",
                RelOp::Neq => " /= ",
                RelOp::In => " in ",
                RelOp::NotIn => " /: ",
                RelOp::Subset => " <: ",
            });
            write_expr(out, b, MAPLET);
        }
        Expr::Not(a) => {
            out.push_str("not ");
            write_expr(out, a, NOT);
        }
        Expr::And(a, b) => {
            write_expr(out, a, AND);
            out.push_str(" /\\ ");
            write_expr(out, b, NOT);
        }
        Expr::Or(a, b) => {
            write_expr(out, a, OR);
            out.push_str(" \\/ ");
            write_expr(out, b, AND);
        }
        Expr::Implies(a, b) => {
            write_expr(out, a, OR);
            out.push_str(" => ");
            write_expr(out, b, FORALL);
        }
        Expr::Forall { var, domain, body } => {
            out.push('!');
            out.push_str(var);
            if let Some(d) = domain {
                out.push_str(" in ");
                write_expr(out, d, MAPLET);
            }
            out.push_str(" . ");
            write_expr(out, body, FORALL);
        }
    }
}

fn write_type(out: &mut String, ty: &TypeExpr) {
    match ty {
        TypeExpr::SetOf(t) => {
            let _ = write!(out, "set of {t}");
        }
        TypeExpr::Map { domain, range, total } => {
            out.push_str("map ");
            if domain.len() == 1 {
                out.push_str(&domain[0]);
            } else {
                let _ = write!(out, "({})", domain.join(", "));
            }
            out.push_str(if *total { " -> " } else { " +-> " });
            match range {
                RangeType::Elem(t) => out.push_str(t),
                RangeType::SetOf(t) => {
                    let _ = write!(out, "set of {t}");
                }
            }
        }
    }
}

fn write_assign(out: &mut String, a: &Assignment, indent: &str) {
    out.push_str(indent);
    out.push_str(&a.target);
    if !a.args.is_empty() {
        out.push('(');
        for (i, arg) in a.args.iter().enumerate() {
            if i > 0 {
                out.push_str(", ");
            }
            write_expr(out, arg, MAPLET);
        }
        out.push(')');
    }
    out.push_str(match a.kind {
        AssignKind::Becomes => " := ",
        AssignKind::ChooseFrom => " :: ",
    });
    write_expr(out, &a.rhs, MAPLET);
    out.push('\n');
}

pub fn pretty_print(m: &PolicyMachine) -> String {
    let mut out = String::new();
    let _ = write!(out, "machine {}", m.name);
    if let Some(r) = &m.refines {
        let _ = write!(out, " refines {r}");
    }
    out.push('\n');
    for s in &m.sets {
        let _ = writeln!(out, "  set {} = {{{}}}", s.name, s.elements.join(", "));
    }
    for c in &m.constants {
        let _ = write!(out, "  constant {} = ", c.name);
        write_expr(&mut out, &c.value, MAPLET);
        out.push('\n');
    }
    for v in &m.variables {
        let _ = write!(out, "  variable {} : ", v.name);
        write_type(&mut out, &v.ty);
        out.push('\n');
    }
    for inv in &m.invariants {
        let _ = write!(out, "  invariant {} : ", inv.label);
        write_expr(&mut out, &inv.pred, FORALL);
        out.push('\n');
    }
    out.push_str("  init\n");
    for a in &m.init {
        write_assign(&mut out, a, "    ");
    }
    out.push_str("  end\n");
    for e in &m.events {
        let _ = write!(out, "  event {}", e.name);
        if let Some(r) = &e.refines {
            let _ = write!(out, " refines {r}");
        }
        out.push('\n');
        if !e.params.is_empty() {
            let _ = writeln!(out, "    any {}", e.params.join(", "));
        }
        out.push_str("    where ");
        write_expr(&mut out, &e.guard, FORALL);
        out.push_str("\n    then\n");
        if e.actions.is_empty() {
            out.push_str("      skip\n");
        }
        for a in &e.actions {
            write_assign(&mut out, a, "      ");
        }
        out.push_str("  end\n");
    }
    out.push_str("end\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse_expr;

    fn fixpoint(src: &str) {
        let e = parse_expr(src).unwrap();
        let printed = expr_to_string(&e);
        assert_eq!(parse_expr(&printed).unwrap(), e, "printed as {printed}");
    }

    #[test]
    fn parenthesizes_only_when_needed() {
        let e = parse_expr("(a + b) \\ c").unwrap();
        assert_eq!(expr_to_string(&e), "a + b \\ c");
        let e = parse_expr("a + (b \\ c)").unwrap();
        assert_eq!(expr_to_string(&e), "a + (b \\ c)");
        let e = parse_expr("p = q /\\ (!x . x in S)").unwrap();
        assert_eq!(expr_to_string(&e), "p = q /\\ (!x . x in S)");
    }

    #[test]
    fn tricky_shapes_round_trip() {
        fixpoint("(a => b) => c");
        fixpoint("not (a = b /\\ c = d)");
        fixpoint("a |-> (b |-> c) in f");
        fixpoint("(!x in S . x = y) \\/ z = w");
        fixpoint("f(a |-> b)[{c}] <: dom(g <+ {a |-> {}})");
        fixpoint("not (!x . x in S)");
        fixpoint("{a, b} <<| f = (S * T) * {{}}");
    }
}
