//! Surface syntax tree for `.pol` machines.
//!
//! Predicates and expressions share one node type; the checker decides which
//! positions must be boolean.

/// A parsed policy machine, carrying its sets and constants inline.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolicyMachine {
    pub name: String,
    pub refines: Option<String>,
    pub sets: Vec<SetDecl>,
    pub constants: Vec<ConstDecl>,
    pub variables: Vec<VarDecl>,
    pub invariants: Vec<Invariant>,
    pub init: Vec<Assignment>,
    pub events: Vec<Event>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SetDecl {
    pub name: String,
    pub elements: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstDecl {
    pub name: String,
    pub value: Expr,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VarDecl {
    pub name: String,
    pub ty: TypeExpr,
}

/// Declared variable type.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TypeExpr {
    /// `set of T`
    SetOf(String),
    /// `map T -> R`, `map (T1, T2) -> R`; `+->` declares a partial map.
    Map {
        domain: Vec<String>,
        range: RangeType,
        total: bool,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RangeType {
    Elem(String),
    SetOf(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Invariant {
    pub label: String,
    pub pred: Expr,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Event {
    pub name: String,
    pub refines: Option<String>,
    pub params: Vec<String>,
    pub guard: Expr,
    pub actions: Vec<Assignment>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AssignKind {
    /// `:=`
    Becomes,
    /// `::` (any element of a finite set)
    ChooseFrom,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assignment {
    pub target: String,
    /// Point arguments for `f(a) := ..` / `f(a, b) := ..`; empty for whole-variable updates.
    pub args: Vec<Expr>,
    pub kind: AssignKind,
    pub rhs: Expr,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SetOp {
    Union,
    Difference,
    Product,
    Override,
    DomainSubtract,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RelOp {
    Eq,
    Neq,
    In,
    NotIn,
    Subset,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expr {
    Ident(String),
    Bool(bool),
    SetLit(Vec<Expr>),
    Maplet(Box<Expr>, Box<Expr>),
    /// `f(x)` or `f(x, y)`; multiple arguments denote the maplet `x |-> y`.
    Apply(Box<Expr>, Vec<Expr>),
    Image(Box<Expr>, Box<Expr>),
    Dom(Box<Expr>),
    Ran(Box<Expr>),
    Set(SetOp, Box<Expr>, Box<Expr>),
    Rel(RelOp, Box<Expr>, Box<Expr>),
    Not(Box<Expr>),
    And(Box<Expr>, Box<Expr>),
    Or(Box<Expr>, Box<Expr>),
    Implies(Box<Expr>, Box<Expr>),
    Forall {
        var: String,
        domain: Option<Box<Expr>>,
        body: Box<Expr>,
    },
}

impl Expr {
    pub fn ident(name: impl Into<String>) -> Self {
        Expr::Ident(name.into())
    }

    /// Visits every identifier occurrence, free or bound.
    /// Calls `f` on each direct subexpression.
    pub fn for_each_child<'a>(&'a self, mut f: impl FnMut(&'a Expr)) {
        match self {
            Expr::Ident(_) | Expr::Bool(_) => {}
            Expr::SetLit(items) => items.iter().for_each(f),
            Expr::Apply(h, args) => {
                f(h);
                args.iter().for_each(f);
            }
            Expr::Maplet(a, b)
            | Expr::Image(a, b)
            | Expr::Set(_, a, b)
            | Expr::Rel(_, a, b)
            | Expr::And(a, b)
            | Expr::Or(a, b)
            | Expr::Implies(a, b) => {
                f(a);
                f(b);
            }
            Expr::Dom(a) | Expr::Ran(a) | Expr::Not(a) => f(a),
            Expr::Forall { domain, body, .. } => {
                if let Some(d) = domain {
                    f(d);
                }
                f(body);
            }
        }
    }

    pub fn for_each_ident(&self, f: &mut impl FnMut(&str)) {
        match self {
            Expr::Ident(n) => f(n),
            Expr::Bool(_) => {}
            Expr::SetLit(items) => items.iter().for_each(|e| e.for_each_ident(f)),
            Expr::Apply(h, args) => {
                h.for_each_ident(f);
                args.iter().for_each(|e| e.for_each_ident(f));
            }
            Expr::Maplet(a, b)
            | Expr::Image(a, b)
            | Expr::Set(_, a, b)
            | Expr::Rel(_, a, b)
            | Expr::And(a, b)
            | Expr::Or(a, b)
            | Expr::Implies(a, b) => {
                a.for_each_ident(f);
                b.for_each_ident(f);
            }
            Expr::Dom(a) | Expr::Ran(a) | Expr::Not(a) => a.for_each_ident(f),
            Expr::Forall { domain, body, .. } => {
                if let Some(d) = domain {
                    d.for_each_ident(f);
                }
                body.for_each_ident(f);
            }
        }
    }
}

impl PolicyMachine {
    pub fn event(&self, name: &str) -> Option<&Event> {
        self.events.iter().find(|e| e.name == name)
    }

    pub fn event_mut(&mut self, name: &str) -> Option<&mut Event> {
        self.events.iter_mut().find(|e| e.name == name)
    }

    pub fn set(&self, name: &str) -> Option<&SetDecl> {
        self.sets.iter().find(|s| s.name == name)
    }

    /// Replaces the enumeration of a carrier set, returning false if it is not declared.
    pub fn rewrite_set(&mut self, name: &str, elements: Vec<String>) -> bool {
        match self.sets.iter_mut().find(|s| s.name == name) {
            Some(decl) => {
                decl.elements = elements;
                true
            }
            None => false,
        }
    }
}
