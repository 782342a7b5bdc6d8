use std::collections::BTreeSet;
use std::fmt;

use super::eval::Term;
use super::value::{Name, Value};
use crate::dsl::ast::{PolicyMachine, TypeExpr};
use crate::dsl::check::Ty;

#[derive(Debug, Clone)]
pub struct Carrier {
    pub name: String,
    pub elements: Vec<Name>,
}

impl Carrier {
    pub fn as_value(&self) -> Value {
        Value::Set(self.elements.iter().cloned().map(Value::Elem).collect())
    }

    /// Elements in canonical (name) order.
    pub fn sorted(&self) -> Vec<Value> {
        let set: BTreeSet<Value> = self.elements.iter().cloned().map(Value::Elem).collect();
        set.into_iter().collect()
    }
}

#[derive(Debug, Clone)]
pub enum VarShape {
    Set,
    /// Carriers forming the domain (one, or two for pair-keyed maps).
    Map {
        domain: Vec<usize>,
        total: bool,
    },
}

#[derive(Debug, Clone)]
pub struct Variable {
    pub name: String,
    pub decl: TypeExpr,
    pub shape: VarShape,
}

#[derive(Debug, Clone)]
pub struct Param {
    pub name: String,
    pub carrier: usize,
}

#[derive(Debug, Clone)]
pub struct Action {
    pub var: usize,
    pub point: Option<Term>,
    pub choose: bool,
    pub rhs: Term,
}

#[derive(Debug, Clone)]
pub struct CompiledEvent {
    pub name: String,
    pub refines: Option<String>,
    pub params: Vec<Param>,
    pub guard: Term,
    pub actions: Vec<Action>,
}

impl CompiledEvent {
    pub fn choice_count(&self) -> usize {
        self.actions.iter().filter(|a| a.choose).count()
    }
}

#[derive(Debug, Clone)]
pub struct CompiledInvariant {
    pub label: String,
    pub pred: Term,
}

/// A validated machine with every expression resolved to evaluable form.
#[derive(Debug, Clone)]
pub struct Machine {
    pub source: PolicyMachine,
    pub carriers: Vec<Carrier>,
    pub constants: Vec<(String, Value)>,
    pub constant_tys: Vec<Ty>,
    pub variables: Vec<Variable>,
    pub invariants: Vec<CompiledInvariant>,
    pub init: Vec<Action>,
    pub events: Vec<CompiledEvent>,
}

impl Machine {
    pub fn name(&self) -> &str {
        &self.source.name
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| v.name == name)
    }

    pub fn event_index(&self, name: &str) -> Option<usize> {
        self.events.iter().position(|e| e.name == name)
    }

    pub fn carrier(&self, name: &str) -> Option<&Carrier> {
        self.carriers.iter().find(|c| c.name == name)
    }

    pub fn constant(&self, name: &str) -> Option<&Value> {
        self.constants.iter().find(|(n, _)| n == name).map(|(_, v)| v)
    }

    /// Value of the domain a map variable must cover when total.
    pub fn map_domain(&self, domain: &[usize]) -> Value {
        match domain {
            [a] => self.carriers[*a].as_value(),
            [a, b] => {
                let mut out = BTreeSet::new();
                for x in &self.carriers[*a].elements {
                    for y in &self.carriers[*b].elements {
                        out.insert(Value::pair(Value::Elem(x.clone()), Value::Elem(y.clone())));
                    }
                }
                Value::Set(out)
            }
            _ => Value::empty_set(),
        }
    }
}

/// A binding of event parameters, in parameter declaration order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Binding(pub Vec<(String, Value)>);

impl Binding {
    pub fn values(&self) -> Vec<Value> {
        self.0.iter().map(|(_, v)| v.clone()).collect()
    }

    pub fn get(&self, name: &str) -> Option<&Value> {
        self.0.iter().find(|(n, _)| n == name).map(|(_, v)| v)
    }
}

impl fmt::Display for Binding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (n, v)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{n}->{v}")?;
        }
        f.write_str("}")
    }
}
