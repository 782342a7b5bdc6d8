//! Resolved expression IR and its evaluator.

use std::collections::BTreeSet;

use super::value::Value;
use super::EngineError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Union,
    Difference,
    Product,
    Override,
    DomainSubtract,
    Eq,
    Neq,
    In,
    NotIn,
    Subset,
}

/// Name-resolved expression. Locals are event parameters followed by
/// quantifier variables, addressed by slot.
#[derive(Debug, Clone)]
pub enum Term {
    Lit(Value),
    Var(usize),
    Local(usize),
    SetLit(Vec<Term>),
    Maplet(Box<Term>, Box<Term>),
    Apply {
        map: Box<Term>,
        arg: Box<Term>,
        label: String,
    },
    Image(Box<Term>, Box<Term>),
    Dom(Box<Term>),
    Ran(Box<Term>),
    Bin(BinOp, Box<Term>, Box<Term>),
    Not(Box<Term>),
    And(Box<Term>, Box<Term>),
    Or(Box<Term>, Box<Term>),
    Implies(Box<Term>, Box<Term>),
    Forall {
        slot: usize,
        domain: Box<Term>,
        body: Box<Term>,
    },
}

pub struct Env<'a> {
    pub vars: &'a [Value],
    pub locals: Vec<Value>,
}

impl<'a> Env<'a> {
    pub fn new(vars: &'a [Value], locals: Vec<Value>) -> Self {
        Env { vars, locals }
    }
}

fn type_error(what: &str) -> EngineError {
    EngineError::Type(what.to_string())
}

fn set(v: Value) -> Result<BTreeSet<Value>, EngineError> {
    match v {
        Value::Set(s) => Ok(s),
        other => Err(type_error(&format!("expected a set, found {other}"))),
    }
}

fn boolean(v: Value) -> Result<bool, EngineError> {
    v.as_bool()
        .ok_or_else(|| type_error(&format!("expected a boolean, found {v}")))
}

fn split_pair(v: &Value) -> Result<(&Value, &Value), EngineError> {
    match v {
        Value::Pair(a, b) => Ok((a, b)),
        other => Err(type_error(&format!("expected a pair, found {other}"))),
    }
}

pub fn eval_bool(t: &Term, env: &mut Env<'_>) -> Result<bool, EngineError> {
    boolean(eval(t, env)?)
}

pub fn eval(t: &Term, env: &mut Env<'_>) -> Result<Value, EngineError> {
    Ok(match t {
        Term::Lit(v) => v.clone(),
        Term::Var(i) => env.vars[*i].clone(),
        Term::Local(i) => env.locals.get(*i).cloned().ok_or_else(|| type_error("unbound local"))?,
        Term::SetLit(items) => {
            let mut out = BTreeSet::new();
            for item in items {
                out.insert(eval(item, env)?);
            }
            Value::Set(out)
        }
        Term::Maplet(a, b) => Value::pair(eval(a, env)?, eval(b, env)?),
        Term::Apply { map, arg, label } => {
            let f = eval(map, env)?;
            let x = eval(arg, env)?;
            let mut images = f.images(&x);
            match (images.next(), images.next()) {
                (Some(y), None) => y.clone(),
                (None, _) => {
                    return Err(EngineError::PartialApplication {
                        map: label.clone(),
                        point: x.to_string(),
                    })
                }
                (Some(_), Some(_)) => {
                    return Err(EngineError::NotAFunction {
                        map: label.clone(),
                        point: x.to_string(),
                    })
                }
            }
        }
        Term::Image(r, s) => {
            let r = set(eval(r, env)?)?;
            let s = set(eval(s, env)?)?;
            let mut out = BTreeSet::new();
            for p in &r {
                let (a, b) = split_pair(p)?;
                if s.contains(a) {
                    out.insert(b.clone());
                }
            }
            Value::Set(out)
        }
        Term::Dom(r) | Term::Ran(r) => {
            let first = matches!(t, Term::Dom(_));
            let r = set(eval(r, env)?)?;
            let mut out = BTreeSet::new();
            for p in &r {
                let (a, b) = split_pair(p)?;
                out.insert(if first { a.clone() } else { b.clone() });
            }
            Value::Set(out)
        }
        Term::Bin(op, a, b) => {
            let lhs = eval(a, env)?;
            let rhs = eval(b, env)?;
            binary(*op, lhs, rhs)?
        }
        Term::Not(a) => Value::Bool(!eval_bool(a, env)?),
        // Connectives short-circuit left to right, so a guard such as
        // `rp in reports /\ owner(rp) = u` never applies `owner` outside its domain.
        Term::And(a, b) => Value::Bool(eval_bool(a, env)? && eval_bool(b, env)?),
        Term::Or(a, b) => Value::Bool(eval_bool(a, env)? || eval_bool(b, env)?),
        Term::Implies(a, b) => Value::Bool(!eval_bool(a, env)? || eval_bool(b, env)?),
        Term::Forall { slot, domain, body } => {
            let dom = set(eval(domain, env)?)?;
            debug_assert_eq!(env.locals.len(), *slot);
            let mut holds = true;
            for x in dom {
                env.locals.push(x);
                let r = eval_bool(body, env);
                env.locals.pop();
                if !r? {
                    holds = false;
                    break;
                }
            }
            Value::Bool(holds)
        }
    })
}

fn binary(op: BinOp, lhs: Value, rhs: Value) -> Result<Value, EngineError> {
    Ok(match op {
        BinOp::Eq => Value::Bool(lhs == rhs),
        BinOp::Neq => Value::Bool(lhs != rhs),
        BinOp::In => Value::Bool(set(rhs)?.contains(&lhs)),
        BinOp::NotIn => Value::Bool(!set(rhs)?.contains(&lhs)),
        BinOp::Subset => {
            let (a, b) = (set(lhs)?, set(rhs)?);
            Value::Bool(a.is_subset(&b))
        }
        BinOp::Union => {
            let mut a = set(lhs)?;
            a.extend(set(rhs)?);
            Value::Set(a)
        }
        BinOp::Difference => {
            let a = set(lhs)?;
            let b = set(rhs)?;
            Value::Set(a.difference(&b).cloned().collect())
        }
        BinOp::Product => {
            let a = set(lhs)?;
            let b = set(rhs)?;
            let mut out = BTreeSet::new();
            for x in &a {
                for y in &b {
                    out.insert(Value::pair(x.clone(), y.clone()));
                }
            }
            Value::Set(out)
        }
        BinOp::Override => {
            let f = set(lhs)?;
            let g = set(rhs)?;
            let mut covered = BTreeSet::new();
            for p in &g {
                covered.insert(split_pair(p)?.0.clone());
            }
            let mut out = BTreeSet::new();
            for p in f {
                if !covered.contains(split_pair(&p)?.0) {
                    out.insert(p);
                }
            }
            out.extend(g);
            Value::Set(out)
        }
        BinOp::DomainSubtract => {
            let s = set(lhs)?;
            let f = set(rhs)?;
            let mut out = BTreeSet::new();
            for p in f {
                if !s.contains(split_pair(&p)?.0) {
                    out.insert(p);
                }
            }
            Value::Set(out)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lit(v: Value) -> Box<Term> {
        Box::new(Term::Lit(v))
    }

    fn e(n: &str) -> Value {
        Value::elem(n)
    }

    #[test]
    fn override_replaces_only_covered_points() {
        let f = Value::set_of([Value::pair(e("a"), e("x")), Value::pair(e("b"), e("y"))]);
        let g = Value::set_of([Value::pair(e("b"), e("z"))]);
        let out = binary(BinOp::Override, f, g).unwrap();
        assert_eq!(
            out,
            Value::set_of([Value::pair(e("a"), e("x")), Value::pair(e("b"), e("z"))])
        );
    }

    #[test]
    fn membership_in_empty_set_is_false() {
        let t = Term::Bin(BinOp::In, lit(e("x")), lit(Value::empty_set()));
        let mut env = Env::new(&[], vec![]);
        assert!(!eval_bool(&t, &mut env).unwrap());
    }

    #[test]
    fn partial_application_names_map_and_point() {
        let t = Term::Apply {
            map: lit(Value::empty_set()),
            arg: lit(e("r9")),
            label: "owner".into(),
        };
        let mut env = Env::new(&[], vec![]);
        match eval(&t, &mut env) {
            Err(EngineError::PartialApplication { map, point }) => {
                assert_eq!(map, "owner");
                assert_eq!(point, "r9");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn conjunction_short_circuits_before_partial_application() {
        let bad = Term::Apply {
            map: lit(Value::empty_set()),
            arg: lit(e("r1")),
            label: "owner".into(),
        };
        let guarded = Term::And(
            Box::new(Term::Lit(Value::Bool(false))),
            Box::new(Term::Bin(BinOp::Eq, Box::new(bad), lit(e("u1")))),
        );
        let mut env = Env::new(&[], vec![]);
        assert!(!eval_bool(&guarded, &mut env).unwrap());
    }

    #[test]
    fn forall_enumerates_its_domain() {
        // !x in {a, b} . x in {a, b, c}
        let t = Term::Forall {
            slot: 0,
            domain: lit(Value::set_of([e("a"), e("b")])),
            body: Box::new(Term::Bin(
                BinOp::In,
                Box::new(Term::Local(0)),
                lit(Value::set_of([e("a"), e("b"), e("c")])),
            )),
        };
        let mut env = Env::new(&[], vec![]);
        assert!(eval_bool(&t, &mut env).unwrap());
        assert!(env.locals.is_empty());
    }
}
