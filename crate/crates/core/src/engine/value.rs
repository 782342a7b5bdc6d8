use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

/// Interned element name. Elements order by name, which fixes the canonical
/// order of sets, maps, and parameter bindings.
pub type Name = Arc<str>;

/// A finite set-theoretic value. Maps and relations are sets of pairs.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Value {
    Bool(bool),
    Elem(Name),
    Pair(Box<Value>, Box<Value>),
    Set(BTreeSet<Value>),
}

impl Value {
    pub fn elem(name: &str) -> Self {
        Value::Elem(Arc::from(name))
    }

    pub fn pair(a: Value, b: Value) -> Self {
        Value::Pair(Box::new(a), Box::new(b))
    }

    pub fn empty_set() -> Self {
        Value::Set(BTreeSet::new())
    }

    pub fn set_of(items: impl IntoIterator<Item = Value>) -> Self {
        Value::Set(items.into_iter().collect())
    }

    pub fn as_set(&self) -> Option<&BTreeSet<Value>> {
        match self {
            Value::Set(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            _ => None,
        }
    }

    pub fn as_elem(&self) -> Option<&str> {
        match self {
            Value::Elem(n) => Some(n),
            _ => None,
        }
    }

    /// Images of `point` when `self` is a relation.
    pub fn images<'a, 'p>(&'a self, point: &'p Value) -> impl Iterator<Item = &'a Value> + 'p
    where
        'a: 'p,
    {
        self.as_set().into_iter().flatten().filter_map(move |p| match p {
            Value::Pair(a, b) if **a == *point => Some(&**b),
            _ => None,
        })
    }

    /// The unique image of `point`, if exactly one exists.
    pub fn apply(&self, point: &Value) -> Option<&Value> {
        let mut it = self.images(point);
        let first = it.next()?;
        if it.next().is_some() {
            return None;
        }
        Some(first)
    }

    /// Element names of a set of elements, in canonical order.
    pub fn elem_names(&self) -> Vec<String> {
        self.as_set()
            .into_iter()
            .flatten()
            .filter_map(|v| v.as_elem().map(str::to_string))
            .collect()
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Bool(b) => write!(f, "{b}"),
            Value::Elem(n) => f.write_str(n),
            Value::Pair(a, b) => {
                if matches!(**b, Value::Pair(..)) {
                    write!(f, "{a} |-> ({b})")
                } else {
                    write!(f, "{a} |-> {b}")
                }
            }
            Value::Set(items) => {
                f.write_str("{")?;
                for (i, v) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{v}")?;
                }
                f.write_str("}")
            }
        }
    }
}

impl fmt::Debug for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn display_is_reparseable_shape() {
        let m = Value::set_of([Value::pair(
            Value::pair(Value::elem("Reporter"), Value::elem("r1")),
            Value::set_of([Value::elem("R")]),
        )]);
        assert_eq!(m.to_string(), "{Reporter |-> r1 |-> {R}}");
    }

    #[test]
    fn apply_requires_a_unique_image() {
        let f = Value::set_of([
            Value::pair(Value::elem("a"), Value::elem("x")),
            Value::pair(Value::elem("b"), Value::elem("y")),
            Value::pair(Value::elem("b"), Value::elem("z")),
        ]);
        assert_eq!(f.apply(&Value::elem("a")), Some(&Value::elem("x")));
        assert_eq!(f.apply(&Value::elem("b")), None);
        assert_eq!(f.apply(&Value::elem("c")), None);
    }
}
