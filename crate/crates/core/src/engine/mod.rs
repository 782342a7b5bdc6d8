//! Operational semantics of checked machines.
//!
//! States are immutable; every transition returns a fresh [`SystemState`].
//! Event bodies use simultaneous assignment: all right-hand sides and update
//! points are evaluated in the pre-state before any variable changes.

pub mod access;
pub mod eval;
pub mod machine;
pub mod simulate;
pub mod value;

use std::collections::BTreeSet;
use std::fmt::Write;
use std::sync::Arc;

use thiserror::Error;

use crate::dsl::ast::Expr;
use crate::dsl::check::compile_predicate;
use eval::{eval, eval_bool, Env};
use machine::{Action, CompiledEvent, VarShape};
pub use machine::{Binding, Machine};
pub use value::Value;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error("`{map}` is not defined at {point}")]
    PartialApplication { map: String, point: String },
    #[error("`{map}` has several images at {point}")]
    NotAFunction { map: String, point: String },
    #[error("ill-typed evaluation: {0}")]
    Type(String),
    #[error("initialisation uses a nondeterministic assignment")]
    NondeterministicInit,
    #[error("unknown event `{0}`")]
    UnknownEvent(String),
    #[error("invalid binding for `{event}`: {reason}")]
    InvalidBinding { event: String, reason: String },
    #[error("event `{event}` is not enabled for {binding}")]
    EventNotEnabled { event: String, binding: String },
    #[error("invalid choice for `{event}`: {reason}")]
    InvalidChoice { event: String, reason: String },
    #[error("variable `{variable}` is ill-formed: {reason}")]
    IllFormed { variable: String, reason: String },
    #[error("unsupported query: {0}")]
    UnsupportedQuery(String),
    #[error(transparent)]
    Model(#[from] crate::model::ModelError),
}

/// A valuation of every machine variable, in declaration order.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SystemState(Arc<[Value]>);

impl SystemState {
    pub fn new(values: Vec<Value>) -> Self {
        SystemState(values.into())
    }

    pub fn values(&self) -> &[Value] {
        &self.0
    }

    pub fn get<'a>(&'a self, m: &Machine, var: &str) -> Option<&'a Value> {
        m.var_index(var).map(|i| &self.0[i])
    }

    /// `name = value` for every variable, separated by `; `.
    pub fn render(&self, m: &Machine) -> String {
        let mut out = String::new();
        for (i, (v, val)) in m.variables.iter().zip(self.0.iter()).enumerate() {
            if i > 0 {
                out.push_str("; ");
            }
            let _ = write!(out, "{} = {}", v.name, val);
        }
        out
    }
}

impl std::fmt::Debug for SystemState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_list().entries(self.0.iter()).finish()
    }
}

/// One fired transition: event index, binding, and the chosen elements of its `::` actions.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Step {
    pub event: usize,
    pub binding: Binding,
    pub choice: Vec<Value>,
}

impl Step {
    pub fn describe(&self, m: &Machine) -> String {
        let mut s = format!("{} {}", m.events[self.event].name, self.binding);
        if !self.choice.is_empty() {
            let picks: Vec<String> = self.choice.iter().map(|v| v.to_string()).collect();
            let _ = write!(s, " :: [{}]", picks.join(", "));
        }
        s
    }
}

fn check_shape(m: &Machine, var: usize, value: &Value) -> Result<(), EngineError> {
    let decl = &m.variables[var];
    let VarShape::Map { domain, total } = &decl.shape else {
        return Ok(());
    };
    let ill = |reason: String| EngineError::IllFormed {
        variable: decl.name.clone(),
        reason,
    };
    let pairs = value.as_set().ok_or_else(|| ill("not a set of pairs".into()))?;
    let mut seen = BTreeSet::new();
    for p in pairs {
        let Value::Pair(x, _) = p else {
            return Err(ill(format!("{p} is not a maplet")));
        };
        if !seen.insert((**x).clone()) {
            return Err(ill(format!("several images at {x}")));
        }
    }
    if *total {
        let want = m.map_domain(domain);
        if Value::Set(seen) != want {
            return Err(ill("not total over its domain".into()));
        }
    }
    Ok(())
}

pub fn initial_state(m: &Machine) -> Result<SystemState, EngineError> {
    if m.init.iter().any(|a| a.choose) {
        return Err(EngineError::NondeterministicInit);
    }
    let mut values = vec![Value::empty_set(); m.variables.len()];
    let mut env = Env::new(&[], Vec::new());
    for a in &m.init {
        values[a.var] = eval(&a.rhs, &mut env)?;
    }
    for (i, v) in values.iter().enumerate() {
        check_shape(m, i, v)?;
    }
    Ok(SystemState::new(values))
}

/// Evaluates a surface predicate in `s`, with the binding's parameters in scope.
pub fn eval_predicate(m: &Machine, s: &SystemState, b: &Binding, p: &Expr) -> Result<bool, EngineError> {
    let mut params = Vec::new();
    let mut locals = Vec::new();
    for (name, v) in &b.0 {
        let carrier = v
            .as_elem()
            .and_then(|e| m.carriers.iter().position(|c| c.elements.iter().any(|x| &**x == e)))
            .ok_or_else(|| EngineError::Type(format!("binding of `{name}` is not an element")))?;
        params.push((name.clone(), carrier));
        locals.push(v.clone());
    }
    let term = compile_predicate(m, &params, p)
        .map_err(|d| EngineError::Type(d.iter().map(|x| x.message.clone()).collect::<Vec<_>>().join("; ")))?;
    eval_bool(&term, &mut Env::new(s.values(), locals))
}

pub fn eval_invariant(m: &Machine, s: &SystemState, idx: usize) -> Result<bool, EngineError> {
    eval_bool(&m.invariants[idx].pred, &mut Env::new(s.values(), Vec::new()))
}

/// Labels of invariants that do not hold in `s` (evaluation errors count as failures).
pub fn failing_invariants(m: &Machine, s: &SystemState) -> Vec<usize> {
    (0..m.invariants.len())
        .filter(|&i| !matches!(eval_invariant(m, s, i), Ok(true)))
        .collect()
}

/// All bindings of an event's parameters in lexicographic order.
pub fn bindings(m: &Machine, ev: &CompiledEvent) -> Vec<Binding> {
    let mut out = vec![Vec::new()];
    for p in &ev.params {
        let elems = m.carriers[p.carrier].sorted();
        let mut next = Vec::with_capacity(out.len() * elems.len());
        for prefix in &out {
            for e in &elems {
                let mut b: Vec<(String, Value)> = prefix.clone();
                b.push((p.name.clone(), e.clone()));
                next.push(b);
            }
        }
        out = next;
    }
    out.into_iter().map(Binding).collect()
}

fn guard_holds(ev: &CompiledEvent, s: &SystemState, b: &Binding) -> Result<bool, EngineError> {
    eval_bool(&ev.guard, &mut Env::new(s.values(), b.values()))
}

pub fn enabled_events(m: &Machine, s: &SystemState) -> Result<Vec<(String, Binding)>, EngineError> {
    let mut out = Vec::new();
    for ev in &m.events {
        for b in bindings(m, ev) {
            if guard_holds(ev, s, &b)? {
                out.push((ev.name.clone(), b));
            }
        }
    }
    Ok(out)
}

/// Sets each `::` action may choose from, evaluated in `s`.
fn choice_sets(ev: &CompiledEvent, s: &SystemState, b: &Binding) -> Result<Vec<Vec<Value>>, EngineError> {
    let mut env = Env::new(s.values(), b.values());
    let mut out = Vec::new();
    for a in ev.actions.iter().filter(|a| a.choose) {
        match eval(&a.rhs, &mut env)? {
            Value::Set(items) => out.push(items.into_iter().collect()),
            other => return Err(EngineError::Type(format!("choice from non-set {other}"))),
        }
    }
    Ok(out)
}

fn fire(
    m: &Machine,
    s: &SystemState,
    ev: &CompiledEvent,
    b: &Binding,
    choice: &[Value],
) -> Result<SystemState, EngineError> {
    let mut env = Env::new(s.values(), b.values());
    let mut updates: Vec<(&Action, Option<Value>, Value)> = Vec::with_capacity(ev.actions.len());
    let mut picks = choice.iter();
    for a in &ev.actions {
        let point = match &a.point {
            Some(p) => Some(eval(p, &mut env)?),
            None => None,
        };
        let rhs = eval(&a.rhs, &mut env)?;
        let value = if a.choose {
            let pick = picks.next().ok_or_else(|| EngineError::InvalidChoice {
                event: ev.name.clone(),
                reason: "missing choice element".into(),
            })?;
            let options = rhs
                .as_set()
                .ok_or_else(|| EngineError::Type("choice from non-set".into()))?;
            if !options.contains(pick) {
                return Err(EngineError::InvalidChoice {
                    event: ev.name.clone(),
                    reason: format!("{pick} is not in {rhs}"),
                });
            }
            pick.clone()
        } else {
            rhs
        };
        updates.push((a, point, value));
    }
    if picks.next().is_some() {
        return Err(EngineError::InvalidChoice {
            event: ev.name.clone(),
            reason: "too many choice elements".into(),
        });
    }

    let mut values: Vec<Value> = s.values().to_vec();
    for (a, point, value) in updates {
        match point {
            None => values[a.var] = value,
            Some(x) => {
                let Value::Set(pairs) = &mut values[a.var] else {
                    return Err(EngineError::Type("pointwise update of a non-map".into()));
                };
                pairs.retain(|p| !matches!(p, Value::Pair(k, _) if **k == x));
                pairs.insert(Value::pair(x, value));
            }
        }
        check_shape(m, a.var, &values[a.var])?;
    }
    Ok(SystemState::new(values))
}

fn resolve_binding(m: &Machine, ev: &CompiledEvent, b: &Binding) -> Result<Binding, EngineError> {
    let bad = |reason: String| EngineError::InvalidBinding {
        event: ev.name.clone(),
        reason,
    };
    let mut out = Vec::new();
    for p in &ev.params {
        let v = b
            .get(&p.name)
            .ok_or_else(|| bad(format!("parameter `{}` is unbound", p.name)))?;
        let ok = v
            .as_elem()
            .is_some_and(|e| m.carriers[p.carrier].elements.iter().any(|x| &**x == e));
        if !ok {
            return Err(bad(format!("{v} is not in {}", m.carriers[p.carrier].name)));
        }
        out.push((p.name.clone(), v.clone()));
    }
    if b.0.len() != ev.params.len() {
        return Err(bad("unexpected extra parameters".into()));
    }
    Ok(Binding(out))
}

pub fn apply_event(
    m: &Machine,
    s: &SystemState,
    event: &str,
    b: &Binding,
    choice: &[Value],
) -> Result<SystemState, EngineError> {
    let ev = m
        .events
        .iter()
        .find(|e| e.name == event)
        .ok_or_else(|| EngineError::UnknownEvent(event.to_string()))?;
    let b = resolve_binding(m, ev, b)?;
    if !guard_holds(ev, s, &b)? {
        return Err(EngineError::EventNotEnabled {
            event: event.to_string(),
            binding: b.to_string(),
        });
    }
    fire(m, s, ev, &b, choice)
}

/// Every enabled transition out of `s`, including all choice combinations,
/// in deterministic order.
pub fn successors(m: &Machine, s: &SystemState) -> Result<Vec<(Step, SystemState)>, EngineError> {
    let mut out = Vec::new();
    for (ei, ev) in m.events.iter().enumerate() {
        for b in bindings(m, ev) {
            if !guard_holds(ev, s, &b)? {
                continue;
            }
            for choice in choice_combinations(&choice_sets(ev, s, &b)?) {
                let next = fire(m, s, ev, &b, &choice)?;
                out.push((
                    Step {
                        event: ei,
                        binding: b.clone(),
                        choice,
                    },
                    next,
                ));
            }
        }
    }
    Ok(out)
}

/// All successor states of `s` via event `ei` under binding `b`, each with its choice.
pub fn event_successors(
    m: &Machine,
    s: &SystemState,
    ei: usize,
    b: &Binding,
) -> Result<Vec<(Vec<Value>, SystemState)>, EngineError> {
    let ev = &m.events[ei];
    let mut out = Vec::new();
    for choice in choice_combinations(&choice_sets(ev, s, b)?) {
        let next = fire(m, s, ev, b, &choice)?;
        out.push((choice, next));
    }
    Ok(out)
}

pub fn guard_enabled(m: &Machine, s: &SystemState, ei: usize, b: &Binding) -> Result<bool, EngineError> {
    guard_holds(&m.events[ei], s, b)
}

fn choice_combinations(sets: &[Vec<Value>]) -> Vec<Vec<Value>> {
    let mut out = vec![Vec::new()];
    for options in sets {
        let mut next = Vec::new();
        for prefix in &out {
            for o in options {
                let mut c = prefix.clone();
                c.push(o.clone());
                next.push(c);
            }
        }
        out = next;
    }
    out
}

/// Names of variables whose value differs between two states.
pub fn changed_variables(m: &Machine, before: &SystemState, after: &SystemState) -> Vec<String> {
    m.variables
        .iter()
        .zip(before.values().iter().zip(after.values()))
        .filter(|(_, (a, b))| a != b)
        .map(|(v, _)| v.name.clone())
        .collect()
}
