//! Scoping and type checking; lowers a [`PolicyMachine`] to an evaluable [`Machine`].

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;

use super::ast::*;
use super::pretty::expr_to_string;
use crate::engine::eval::{eval, BinOp, Env, Term};
use crate::engine::machine::*;
use crate::engine::value::{Name, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DiagnosticKind {
    UndeclaredIdentifier,
    TypeMismatch,
    Duplicate,
    UnresolvedRefines,
    BadAssignment,
    UninitialisedVariable,
    UnboundedDomain,
    FrameViolation,
    GluingMismatch,
    ConstantError,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub kind: DiagnosticKind,
    /// Where in the machine, e.g. `event SubmitReport, guard`.
    pub location: String,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.location, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Ty {
    Bool,
    Elem(String),
    Pair(Box<Ty>, Box<Ty>),
    Set(Box<Ty>),
    Any,
}

impl Ty {
    fn set(t: Ty) -> Ty {
        Ty::Set(Box::new(t))
    }

    fn pair(a: Ty, b: Ty) -> Ty {
        Ty::Pair(Box::new(a), Box::new(b))
    }

    fn relation() -> Ty {
        Ty::set(Ty::pair(Ty::Any, Ty::Any))
    }
}

impl fmt::Display for Ty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ty::Bool => f.write_str("BOOL"),
            Ty::Elem(c) => f.write_str(c),
            Ty::Pair(a, b) => write!(f, "({a} x {b})"),
            Ty::Set(t) => write!(f, "set of {t}"),
            Ty::Any => f.write_str("?"),
        }
    }
}

fn unify(a: &Ty, b: &Ty) -> Option<Ty> {
    match (a, b) {
        (Ty::Any, t) | (t, Ty::Any) => Some(t.clone()),
        (Ty::Bool, Ty::Bool) => Some(Ty::Bool),
        (Ty::Elem(x), Ty::Elem(y)) if x == y => Some(a.clone()),
        (Ty::Pair(a1, b1), Ty::Pair(a2, b2)) => Some(Ty::pair(unify(a1, a2)?, unify(b1, b2)?)),
        (Ty::Set(x), Ty::Set(y)) => Some(Ty::set(unify(x, y)?)),
        _ => None,
    }
}

fn decl_ty(ty: &TypeExpr) -> Ty {
    match ty {
        TypeExpr::SetOf(c) => Ty::set(Ty::Elem(c.clone())),
        TypeExpr::Map { domain, range, .. } => {
            let d = match domain.as_slice() {
                [a, b] => Ty::pair(Ty::Elem(a.clone()), Ty::Elem(b.clone())),
                _ => Ty::Elem(domain[0].clone()),
            };
            let r = match range {
                RangeType::Elem(c) => Ty::Elem(c.clone()),
                RangeType::SetOf(c) => Ty::set(Ty::Elem(c.clone())),
            };
            Ty::set(Ty::pair(d, r))
        }
    }
}

struct Globals {
    carriers: Vec<Carrier>,
    carrier_index: HashMap<String, usize>,
    element_carrier: HashMap<String, usize>,
    constants: HashMap<String, (Ty, Value)>,
    vars: HashMap<String, (usize, Ty)>,
}

struct Checker<'g> {
    g: &'g Globals,
    diags: Vec<Diagnostic>,
    location: String,
    locals: Vec<(String, Ty)>,
    vars_visible: bool,
}

const BAD: Term = Term::Lit(Value::Bool(false));

impl<'g> Checker<'g> {
    fn new(g: &'g Globals, location: impl Into<String>) -> Self {
        Checker {
            g,
            diags: Vec::new(),
            location: location.into(),
            locals: Vec::new(),
            vars_visible: true,
        }
    }

    fn report(&mut self, kind: DiagnosticKind, message: String) {
        self.diags.push(Diagnostic {
            kind,
            location: self.location.clone(),
            message,
        });
    }

    fn mismatch(&mut self, e: &Expr, expected: &Ty, found: &Ty) {
        self.report(
            DiagnosticKind::TypeMismatch,
            format!(
                "type mismatch in `{}`: expected {expected}, found {found}",
                expr_to_string(e)
            ),
        );
    }

    fn expect(&mut self, e: &Expr, expected: &Ty) -> (Ty, Term) {
        let (t, term) = self.expr(e);
        match unify(&t, expected) {
            Some(u) => (u, term),
            None => {
                self.mismatch(e, expected, &t);
                (expected.clone(), BAD)
            }
        }
    }

    fn pred(&mut self, e: &Expr) -> Term {
        self.expect(e, &Ty::Bool).1
    }

    fn lookup(&mut self, name: &str) -> Option<(Ty, Term)> {
        if let Some(i) = self.locals.iter().rposition(|(n, _)| n == name) {
            return Some((self.locals[i].1.clone(), Term::Local(i)));
        }
        if let Some((i, t)) = self.g.vars.get(name) {
            if !self.vars_visible {
                self.report(
                    DiagnosticKind::BadAssignment,
                    format!("initialisation may not read variable `{name}`"),
                );
                return Some((t.clone(), BAD));
            }
            return Some((t.clone(), Term::Var(*i)));
        }
        if let Some((t, v)) = self.g.constants.get(name) {
            return Some((t.clone(), Term::Lit(v.clone())));
        }
        if let Some(&c) = self.g.carrier_index.get(name) {
            return Some((
                Ty::set(Ty::Elem(name.to_string())),
                Term::Lit(self.g.carriers[c].as_value()),
            ));
        }
        if let Some(&c) = self.g.element_carrier.get(name) {
            return Some((Ty::Elem(self.g.carriers[c].name.clone()), Term::Lit(Value::elem(name))));
        }
        None
    }

    /// Finds the carrier a bound name ranges over from its first `x in S` use.
    fn infer_domain(&mut self, var: &str, body: &Expr) -> Option<usize> {
        fn first_membership<'e>(var: &str, e: &'e Expr) -> Vec<&'e Expr> {
            let mut found = Vec::new();
            walk(var, e, &mut found);
            found
        }
        fn walk<'e>(var: &str, e: &'e Expr, out: &mut Vec<&'e Expr>) {
            match e {
                Expr::Rel(RelOp::In, lhs, rhs) if matches!(&**lhs, Expr::Ident(n) if n == var) => out.push(rhs),
                Expr::Forall { var: v, .. } if v == var => {}
                Expr::Forall { domain, body, .. } => {
                    if let Some(d) = domain {
                        walk(var, d, out);
                    }
                    walk(var, body, out);
                }
                Expr::Maplet(a, b)
                | Expr::Image(a, b)
                | Expr::Set(_, a, b)
                | Expr::Rel(_, a, b)
                | Expr::And(a, b)
                | Expr::Or(a, b)
                | Expr::Implies(a, b) => {
                    walk(var, a, out);
                    walk(var, b, out);
                }
                Expr::Not(a) | Expr::Dom(a) | Expr::Ran(a) => walk(var, a, out),
                Expr::Apply(h, args) => {
                    walk(var, h, out);
                    args.iter().for_each(|x| walk(var, x, out));
                }
                Expr::SetLit(items) => items.iter().for_each(|x| walk(var, x, out)),
                Expr::Ident(_) | Expr::Bool(_) => {}
            }
        }
        for candidate in first_membership(var, body) {
            let mut probe = Checker::new(self.g, "");
            probe.locals = self.locals.clone();
            probe.vars_visible = self.vars_visible;
            let (t, _) = probe.expr(candidate);
            if !probe.diags.is_empty() {
                continue;
            }
            if let Ty::Set(inner) = t {
                if let Ty::Elem(c) = *inner {
                    return self.g.carrier_index.get(&c).copied();
                }
            }
        }
        None
    }

    /// Fallback for event parameters: the domain of a map that `var` is an
    /// argument of, in the guard or in an action (target point or rhs).
    fn domain_from_use(&self, var: &str, ev: &Event) -> Option<usize> {
        fn arg_domains(map_ty: &Ty, arity: usize) -> Vec<Ty> {
            let Ty::Set(inner) = map_ty else {
                return Vec::new();
            };
            let Ty::Pair(d, _) = &**inner else {
                return Vec::new();
            };
            match (&**d, arity) {
                (Ty::Pair(a, b), 2) => vec![(**a).clone(), (**b).clone()],
                (d, 1) => vec![d.clone()],
                _ => Vec::new(),
            }
        }
        let map_ty = |g: &Globals, name: &str| {
            g.vars
                .get(name)
                .map(|(_, t)| t.clone())
                .or_else(|| g.constants.get(name).map(|(t, _)| t.clone()))
        };
        let mut found: Option<Ty> = None;
        let mut visit = |head: &str, args: &[Expr], g: &Globals| {
            if found.is_some() {
                return;
            }
            let Some(t) = map_ty(g, head) else { return };
            for (a, d) in args.iter().zip(arg_domains(&t, args.len())) {
                if matches!(a, Expr::Ident(n) if n == var) && matches!(d, Ty::Elem(_)) {
                    found = Some(d);
                    return;
                }
            }
        };
        let mut exprs: Vec<&Expr> = vec![&ev.guard];
        for a in &ev.actions {
            visit(&a.target, &a.args, self.g);
            exprs.extend(a.args.iter());
            exprs.push(&a.rhs);
        }
        while let Some(e) = exprs.pop() {
            if let Expr::Apply(h, args) = e {
                if let Expr::Ident(head) = &**h {
                    visit(head, args, self.g);
                }
            }
            e.for_each_child(|c| exprs.push(c));
        }
        match found? {
            Ty::Elem(c) => self.g.carrier_index.get(&c).copied(),
            _ => None,
        }
    }

    fn expr(&mut self, e: &Expr) -> (Ty, Term) {
        match e {
            Expr::Ident(n) => match self.lookup(n) {
                Some(r) => r,
                None => {
                    self.report(
                        DiagnosticKind::UndeclaredIdentifier,
                        format!("undeclared identifier `{n}`"),
                    );
                    (Ty::Any, BAD)
                }
            },
            Expr::Bool(b) => (Ty::Bool, Term::Lit(Value::Bool(*b))),
            Expr::SetLit(items) => {
                let mut elem = Ty::Any;
                let mut terms = Vec::new();
                for item in items {
                    let (t, term) = self.expr(item);
                    match unify(&elem, &t) {
                        Some(u) => elem = u,
                        None => self.mismatch(item, &elem, &t),
                    }
                    terms.push(term);
                }
                let term = match terms.iter().all(|t| matches!(t, Term::Lit(_))) {
                    true => Term::Lit(Value::set_of(terms.into_iter().map(|t| match t {
                        Term::Lit(v) => v,
                        _ => unreachable!(),
                    }))),
                    false => Term::SetLit(terms),
                };
                (Ty::set(elem), term)
            }
            Expr::Maplet(a, b) => {
                let (ta, xa) = self.expr(a);
                let (tb, xb) = self.expr(b);
                (Ty::pair(ta, tb), Term::Maplet(Box::new(xa), Box::new(xb)))
            }
            Expr::Apply(head, args) => {
                let (th, xh) = self.expect(head, &Ty::relation());
                let (dom, ran) = match th {
                    Ty::Set(p) => match *p {
                        Ty::Pair(d, r) => (*d, *r),
                        _ => (Ty::Any, Ty::Any),
                    },
                    _ => (Ty::Any, Ty::Any),
                };
                let mut arg_iter = args.iter();
                let first = arg_iter.next().expect("parser yields at least one argument");
                let (mut targ, mut xarg) = self.expr(first);
                for a in arg_iter {
                    let (t, x) = self.expr(a);
                    targ = Ty::pair(targ, t);
                    xarg = Term::Maplet(Box::new(xarg), Box::new(x));
                }
                if unify(&targ, &dom).is_none() {
                    self.mismatch(e, &dom, &targ);
                }
                (
                    ran,
                    Term::Apply {
                        map: Box::new(xh),
                        arg: Box::new(xarg),
                        label: expr_to_string(head),
                    },
                )
            }
            Expr::Image(r, s) => {
                let (tr, xr) = self.expect(r, &Ty::relation());
                let (dom, ran) = match tr {
                    Ty::Set(p) => match *p {
                        Ty::Pair(d, r) => (*d, *r),
                        _ => (Ty::Any, Ty::Any),
                    },
                    _ => (Ty::Any, Ty::Any),
                };
                let (_, xs) = self.expect(s, &Ty::set(dom));
                (Ty::set(ran), Term::Image(Box::new(xr), Box::new(xs)))
            }
            Expr::Dom(r) | Expr::Ran(r) => {
                let (tr, xr) = self.expect(r, &Ty::relation());
                let (dom, ran) = match tr {
                    Ty::Set(p) => match *p {
                        Ty::Pair(d, r) => (*d, *r),
                        _ => (Ty::Any, Ty::Any),
                    },
                    _ => (Ty::Any, Ty::Any),
                };
                if matches!(e, Expr::Dom(_)) {
                    (Ty::set(dom), Term::Dom(Box::new(xr)))
                } else {
                    (Ty::set(ran), Term::Ran(Box::new(xr)))
                }
            }
            Expr::Set(op, a, b) => {
                let (ta, xa) = self.expr(a);
                let (tb, xb) = self.expr(b);
                let (t, bin) = match op {
                    SetOp::Union | SetOp::Difference | SetOp::Override => {
                        let want = if *op == SetOp::Override {
                            Ty::relation()
                        } else {
                            Ty::set(Ty::Any)
                        };
                        let joined = unify(&ta, &want).and_then(|x| unify(&x, &tb));
                        let t = match joined {
                            Some(t) => t,
                            None => {
                                self.mismatch(e, &ta, &tb);
                                Ty::Any
                            }
                        };
                        let bin = match op {
                            SetOp::Union => BinOp::Union,
                            SetOp::Difference => BinOp::Difference,
                            _ => BinOp::Override,
                        };
                        (t, bin)
                    }
                    SetOp::Product => {
                        let ea = match unify(&ta, &Ty::set(Ty::Any)) {
                            Some(Ty::Set(x)) => *x,
                            _ => {
                                self.mismatch(a, &Ty::set(Ty::Any), &ta);
                                Ty::Any
                            }
                        };
                        let eb = match unify(&tb, &Ty::set(Ty::Any)) {
                            Some(Ty::Set(x)) => *x,
                            _ => {
                                self.mismatch(b, &Ty::set(Ty::Any), &tb);
                                Ty::Any
                            }
                        };
                        (Ty::set(Ty::pair(ea, eb)), BinOp::Product)
                    }
                    SetOp::DomainSubtract => {
                        let want = match unify(&tb, &Ty::relation()) {
                            Some(Ty::Set(p)) => match *p {
                                Ty::Pair(d, _) => Ty::set(*d),
                                _ => Ty::Any,
                            },
                            _ => {
                                self.mismatch(b, &Ty::relation(), &tb);
                                Ty::Any
                            }
                        };
                        if unify(&ta, &want).is_none() {
                            self.mismatch(a, &want, &ta);
                        }
                        (tb, BinOp::DomainSubtract)
                    }
                };
                (t, Term::Bin(bin, Box::new(xa), Box::new(xb)))
            }
            Expr::Rel(op, a, b) => {
                let (ta, xa) = self.expr(a);
                let (tb, xb) = self.expr(b);
                let ok = match op {
                    RelOp::Eq | RelOp::Neq => unify(&ta, &tb).is_some(),
                    RelOp::In | RelOp::NotIn => unify(&Ty::set(ta.clone()), &tb).is_some(),
                    RelOp::Subset => unify(&ta, &Ty::set(Ty::Any)).and_then(|x| unify(&x, &tb)).is_some(),
                };
                if !ok {
                    self.report(
                        DiagnosticKind::TypeMismatch,
                        format!("type mismatch in `{}`: cannot relate {ta} and {tb}", expr_to_string(e)),
                    );
                }
                let bin = match op {
                    RelOp::Eq => BinOp::Eq,
                    RelOp::Neq => BinOp::Neq,
                    RelOp::In => BinOp::In,
                    RelOp::NotIn => BinOp::NotIn,
                    RelOp::Subset => BinOp::Subset,
                };
                (Ty::Bool, Term::Bin(bin, Box::new(xa), Box::new(xb)))
            }
            Expr::Not(a) => (Ty::Bool, Term::Not(Box::new(self.pred(a)))),
            Expr::And(a, b) | Expr::Or(a, b) | Expr::Implies(a, b) => {
                let xa = Box::new(self.pred(a));
                let xb = Box::new(self.pred(b));
                let t = match e {
                    Expr::And(..) => Term::And(xa, xb),
                    Expr::Or(..) => Term::Or(xa, xb),
                    _ => Term::Implies(xa, xb),
                };
                (Ty::Bool, t)
            }
            Expr::Forall { var, domain, body } => {
                let (ty, dom_term) = match domain {
                    Some(d) => {
                        let (t, x) = self.expect(d, &Ty::set(Ty::Any));
                        let inner = match t {
                            Ty::Set(inner) => *inner,
                            _ => Ty::Any,
                        };
                        (inner, x)
                    }
                    None => match self.infer_domain(var, body) {
                        Some(c) => (
                            Ty::Elem(self.g.carriers[c].name.clone()),
                            Term::Lit(self.g.carriers[c].as_value()),
                        ),
                        None => {
                            self.report(
                                DiagnosticKind::UnboundedDomain,
                                format!("cannot infer a finite domain for `{var}`; write `!{var} in S . ...`"),
                            );
                            (Ty::Any, Term::Lit(Value::empty_set()))
                        }
                    },
                };
                let slot = self.locals.len();
                self.locals.push((var.clone(), ty));
                let xb = self.pred(body);
                self.locals.pop();
                (
                    Ty::Bool,
                    Term::Forall {
                        slot,
                        domain: Box::new(dom_term),
                        body: Box::new(xb),
                    },
                )
            }
        }
    }

    fn assignment(&mut self, a: &Assignment) -> Option<Action> {
        let Some((var, vty)) = self.g.vars.get(&a.target).cloned() else {
            self.report(
                DiagnosticKind::BadAssignment,
                format!("assignment to undeclared variable `{}`", a.target),
            );
            return None;
        };
        let (point, target_ty) = if a.args.is_empty() {
            (None, vty)
        } else {
            let (dom, ran) = match &vty {
                Ty::Set(p) => match &**p {
                    Ty::Pair(d, r) => ((**d).clone(), (**r).clone()),
                    _ => {
                        self.report(
                            DiagnosticKind::BadAssignment,
                            format!("`{}` is not a map and cannot be updated pointwise", a.target),
                        );
                        return None;
                    }
                },
                _ => return None,
            };
            let mut it = a.args.iter();
            let (mut targ, mut xarg) = self.expr(it.next().expect("non-empty"));
            for arg in it {
                let (t, x) = self.expr(arg);
                targ = Ty::pair(targ, t);
                xarg = Term::Maplet(Box::new(xarg), Box::new(x));
            }
            if unify(&targ, &dom).is_none() {
                self.report(
                    DiagnosticKind::TypeMismatch,
                    format!("type mismatch in point of `{}`: expected {dom}, found {targ}", a.target),
                );
            }
            (Some(xarg), ran)
        };
        let want = match a.kind {
            AssignKind::Becomes => target_ty,
            AssignKind::ChooseFrom => Ty::set(target_ty),
        };
        let (t, rhs) = self.expr(&a.rhs);
        if unify(&t, &want).is_none() {
            self.report(
                DiagnosticKind::TypeMismatch,
                format!(
                    "type mismatch assigning `{}` to `{}`: expected {want}, found {t}",
                    expr_to_string(&a.rhs),
                    a.target
                ),
            );
        }
        Some(Action {
            var,
            point,
            choose: a.kind == AssignKind::ChooseFrom,
            rhs,
        })
    }
}

fn diag(kind: DiagnosticKind, location: impl Into<String>, message: String) -> Diagnostic {
    Diagnostic {
        kind,
        location: location.into(),
        message,
    }
}

/// Type-checks `m` and lowers it, or returns every diagnostic found.
pub fn compile(m: &PolicyMachine) -> Result<Machine, Vec<Diagnostic>> {
    let mut diags = Vec::new();
    let mut names: HashSet<String> = HashSet::new();
    let mut declare = |diags: &mut Vec<Diagnostic>, name: &str, what: &str| {
        if !names.insert(name.to_string()) {
            diags.push(diag(
                DiagnosticKind::Duplicate,
                format!("{what} {name}"),
                format!("`{name}` is declared more than once"),
            ));
        }
    };

    let mut g = Globals {
        carriers: Vec::new(),
        carrier_index: HashMap::new(),
        element_carrier: HashMap::new(),
        constants: HashMap::new(),
        vars: HashMap::new(),
    };
    for s in &m.sets {
        declare(&mut diags, &s.name, "set");
        let idx = g.carriers.len();
        g.carrier_index.insert(s.name.clone(), idx);
        let mut elements: Vec<Name> = Vec::new();
        for e in &s.elements {
            declare(&mut diags, e, "element");
            g.element_carrier.insert(e.clone(), idx);
            elements.push(Name::from(e.as_str()));
        }
        g.carriers.push(Carrier {
            name: s.name.clone(),
            elements,
        });
    }

    let mut constants = Vec::new();
    let mut constant_tys = Vec::new();
    for c in &m.constants {
        declare(&mut diags, &c.name, "constant");
        let mut ck = Checker::new(&g, format!("constant {}", c.name));
        let (t, term) = ck.expr(&c.value);
        let ok = ck.diags.is_empty();
        diags.append(&mut ck.diags);
        if !ok {
            continue;
        }
        match eval(&term, &mut Env::new(&[], Vec::new())) {
            Ok(v) => {
                g.constants.insert(c.name.clone(), (t.clone(), v.clone()));
                constants.push((c.name.clone(), v));
                constant_tys.push(t);
            }
            Err(e) => diags.push(diag(
                DiagnosticKind::ConstantError,
                format!("constant {}", c.name),
                e.to_string(),
            )),
        }
    }

    let mut variables = Vec::new();
    for (i, v) in m.variables.iter().enumerate() {
        declare(&mut diags, &v.name, "variable");
        let mut carriers_used: Vec<&String> = Vec::new();
        let shape = match &v.ty {
            TypeExpr::SetOf(c) => {
                carriers_used.push(c);
                VarShape::Set
            }
            TypeExpr::Map { domain, range, total } => {
                carriers_used.extend(domain.iter());
                match range {
                    RangeType::Elem(c) | RangeType::SetOf(c) => carriers_used.push(c),
                }
                VarShape::Map {
                    domain: domain
                        .iter()
                        .map(|d| g.carrier_index.get(d).copied().unwrap_or(0))
                        .collect(),
                    total: *total,
                }
            }
        };
        for c in carriers_used {
            if !g.carrier_index.contains_key(c) {
                diags.push(diag(
                    DiagnosticKind::UndeclaredIdentifier,
                    format!("variable {}", v.name),
                    format!("undeclared set `{c}` in type"),
                ));
            }
        }
        g.vars.insert(v.name.clone(), (i, decl_ty(&v.ty)));
        variables.push(Variable {
            name: v.name.clone(),
            decl: v.ty.clone(),
            shape,
        });
    }

    let mut invariants = Vec::new();
    for inv in &m.invariants {
        let mut ck = Checker::new(&g, format!("invariant {}", inv.label));
        let pred = ck.pred(&inv.pred);
        diags.append(&mut ck.diags);
        invariants.push(CompiledInvariant {
            label: inv.label.clone(),
            pred,
        });
    }

    let mut init = Vec::new();
    {
        let mut ck = Checker::new(&g, "init");
        ck.vars_visible = false;
        let mut assigned = HashSet::new();
        for a in &m.init {
            if !a.args.is_empty() {
                ck.report(
                    DiagnosticKind::BadAssignment,
                    format!("initialisation must assign `{}` as a whole", a.target),
                );
                continue;
            }
            if !assigned.insert(a.target.clone()) {
                ck.report(
                    DiagnosticKind::BadAssignment,
                    format!("`{}` is assigned more than once", a.target),
                );
            }
            if let Some(action) = ck.assignment(a) {
                init.push(action);
            }
        }
        for v in &m.variables {
            if !assigned.contains(&v.name) {
                ck.report(
                    DiagnosticKind::UninitialisedVariable,
                    format!("variable `{}` is never initialised", v.name),
                );
            }
        }
        diags.append(&mut ck.diags);
    }

    let mut events = Vec::new();
    for ev in &m.events {
        let mut ck = Checker::new(&g, format!("event {}", ev.name));
        let mut params = Vec::new();
        for p in &ev.params {
            if ck.locals.iter().any(|(n, _)| n == p) || ck.lookup_global_silent(p) {
                ck.report(
                    DiagnosticKind::Duplicate,
                    format!("parameter `{p}` collides with another declaration"),
                );
            }
            let inferred = ck.infer_domain(p, &ev.guard).or_else(|| ck.domain_from_use(p, ev));
            let carrier = match inferred {
                Some(c) => c,
                None => {
                    ck.report(
                        DiagnosticKind::UnboundedDomain,
                        format!("parameter `{p}` needs a `{p} in S` guard conjunct over a declared set"),
                    );
                    0
                }
            };
            let ty = g
                .carriers
                .get(carrier)
                .map(|c| Ty::Elem(c.name.clone()))
                .unwrap_or(Ty::Any);
            ck.locals.push((p.clone(), ty));
            params.push(Param {
                name: p.clone(),
                carrier,
            });
        }
        ck.location = format!("event {}, guard", ev.name);
        let guard = ck.pred(&ev.guard);
        ck.location = format!("event {}, actions", ev.name);
        let mut actions = Vec::new();
        let mut assigned = HashSet::new();
        for a in &ev.actions {
            if !assigned.insert(a.target.clone()) {
                ck.report(
                    DiagnosticKind::BadAssignment,
                    format!("`{}` is assigned more than once", a.target),
                );
            }
            if let Some(action) = ck.assignment(a) {
                actions.push(action);
            }
        }
        diags.append(&mut ck.diags);
        events.push(CompiledEvent {
            name: ev.name.clone(),
            refines: ev.refines.clone(),
            params,
            guard,
            actions,
        });
    }

    if diags.is_empty() {
        Ok(Machine {
            source: m.clone(),
            carriers: g.carriers,
            constants,
            constant_tys,
            variables,
            invariants,
            init,
            events,
        })
    } else {
        Err(diags)
    }
}

fn globals_of(m: &Machine) -> Globals {
    let mut g = Globals {
        carriers: m.carriers.clone(),
        carrier_index: HashMap::new(),
        element_carrier: HashMap::new(),
        constants: HashMap::new(),
        vars: HashMap::new(),
    };
    for (i, c) in m.carriers.iter().enumerate() {
        g.carrier_index.insert(c.name.clone(), i);
        for e in &c.elements {
            g.element_carrier.insert(e.to_string(), i);
        }
    }
    for ((name, v), t) in m.constants.iter().zip(&m.constant_tys) {
        g.constants.insert(name.clone(), (t.clone(), v.clone()));
    }
    for (i, v) in m.variables.iter().enumerate() {
        g.vars.insert(v.name.clone(), (i, decl_ty(&v.decl)));
    }
    g
}

/// Compiles a predicate against a checked machine, with `params` (name,
/// carrier index) in scope as locals.
pub fn compile_predicate(m: &Machine, params: &[(String, usize)], e: &Expr) -> Result<Term, Vec<Diagnostic>> {
    let g = globals_of(m);
    let mut ck = Checker::new(&g, "predicate");
    for (name, c) in params {
        let ty = g.carriers.get(*c).map(|c| Ty::Elem(c.name.clone())).unwrap_or(Ty::Any);
        ck.locals.push((name.clone(), ty));
    }
    let t = ck.pred(e);
    if ck.diags.is_empty() {
        Ok(t)
    } else {
        Err(ck.diags)
    }
}

impl Checker<'_> {
    fn lookup_global_silent(&self, name: &str) -> bool {
        self.g.vars.contains_key(name)
            || self.g.constants.contains_key(name)
            || self.g.carrier_index.contains_key(name)
            || self.g.element_carrier.contains_key(name)
    }
}

/// Full validation: type checking plus the refinement links to `abs`, the
/// machine named in `m.refines` (if it could be found).
pub fn validate(m: &PolicyMachine, abs: Option<&PolicyMachine>) -> Vec<Diagnostic> {
    let mut diags = match compile(m) {
        Ok(_) => Vec::new(),
        Err(d) => d,
    };
    diags.extend(refinement_links(m, abs));
    diags
}

fn refinement_links(m: &PolicyMachine, abs: Option<&PolicyMachine>) -> Vec<Diagnostic> {
    let mut diags = Vec::new();
    let Some(abs_name) = &m.refines else {
        for ev in &m.events {
            if let Some(r) = &ev.refines {
                diags.push(diag(
                    DiagnosticKind::UnresolvedRefines,
                    format!("event {}", ev.name),
                    format!("refines `{r}` but machine `{}` refines no machine", m.name),
                ));
            }
        }
        return diags;
    };
    let Some(abs) = abs.filter(|a| &a.name == abs_name) else {
        diags.push(diag(
            DiagnosticKind::UnresolvedRefines,
            format!("machine {}", m.name),
            format!("abstract machine `{abs_name}` not found"),
        ));
        return diags;
    };

    for av in &abs.variables {
        match m.variables.iter().find(|v| v.name == av.name) {
            None => diags.push(diag(
                DiagnosticKind::GluingMismatch,
                format!("machine {}", m.name),
                format!("abstract variable `{}` is not retained", av.name),
            )),
            Some(v) if v.ty != av.ty => diags.push(diag(
                DiagnosticKind::GluingMismatch,
                format!("variable {}", v.name),
                "type differs from the abstract declaration".to_string(),
            )),
            _ => {}
        }
    }
    for aset in &abs.sets {
        if let Some(s) = m.set(&aset.name) {
            let a: BTreeSet<_> = aset.elements.iter().collect();
            let b: BTreeSet<_> = s.elements.iter().collect();
            if a != b {
                diags.push(diag(
                    DiagnosticKind::GluingMismatch,
                    format!("set {}", s.name),
                    "enumeration differs from the abstract machine".to_string(),
                ));
            }
        }
    }

    let abs_vars: HashSet<&str> = abs.variables.iter().map(|v| v.name.as_str()).collect();
    for ev in &m.events {
        match &ev.refines {
            Some(r) => match abs.event(r) {
                None => diags.push(diag(
                    DiagnosticKind::UnresolvedRefines,
                    format!("event {}", ev.name),
                    format!("refines `{r}`, which `{}` does not declare", abs.name),
                )),
                Some(aev) => {
                    for p in &aev.params {
                        if !ev.params.contains(p) {
                            diags.push(diag(
                                DiagnosticKind::UnresolvedRefines,
                                format!("event {}", ev.name),
                                format!("abstract parameter `{p}` of `{r}` has no counterpart"),
                            ));
                        }
                    }
                }
            },
            None => {
                for a in &ev.actions {
                    if abs_vars.contains(a.target.as_str()) {
                        diags.push(diag(
                            DiagnosticKind::FrameViolation,
                            format!("event {}", ev.name),
                            format!("new event modifies abstract variable `{}`", a.target),
                        ));
                    }
                }
            }
        }
    }
    diags
}
