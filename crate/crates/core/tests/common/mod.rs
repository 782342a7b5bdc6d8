//! Independent reference model of the reporting system, written directly
//! from the lifecycle rules without touching the DSL or the engine.
#![allow(dead_code)]

use std::collections::{BTreeSet, HashSet};

use dynrbac::dsl::{compile, PolicyMachine};
use dynrbac::engine::{Machine, SystemState, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum St {
    Void,
    Created,
    Submitted,
    Approved,
    Archived,
}

impl St {
    pub fn name(self) -> &'static str {
        match self {
            St::Void => "VOID",
            St::Created => "CREATED",
            St::Submitted => "SUBMITTED",
            St::Approved => "APPROVED",
            St::Archived => "ARCHIVED",
        }
    }

    pub fn from_name(s: &str) -> St {
        match s {
            "VOID" => St::Void,
            "CREATED" => St::Created,
            "SUBMITTED" => St::Submitted,
            "APPROVED" => St::Approved,
            "ARCHIVED" => St::Archived,
            other => panic!("unknown state {other}"),
        }
    }

    /// Lifecycle moves of one report: create, modify, delete, submit,
    /// approve, return, register.
    pub fn next(self) -> Vec<St> {
        match self {
            St::Void => vec![St::Created],
            St::Created => vec![St::Created, St::Void, St::Submitted],
            St::Submitted => vec![St::Approved, St::Created],
            St::Approved => vec![St::Archived],
            St::Archived => vec![],
        }
    }

    /// Expected rights of (Reporter, Controller, Administrator).
    pub fn rights(self) -> [&'static str; 3] {
        match self {
            St::Void => ["C", "", ""],
            St::Created => ["RWD", "", ""],
            St::Submitted => ["R", "RW", ""],
            St::Approved => ["R", "R", "RW"],
            St::Archived => ["R", "R", "R"],
        }
    }
}

/// A report's lifecycle state and, when tracked, the index of its owner.
pub type Report = (St, Option<usize>);

fn enumerate(start: Vec<Report>, step: &dyn Fn(&[Report], usize) -> Vec<Report>) -> HashSet<Vec<Report>> {
    fn visit(s: Vec<Report>, step: &dyn Fn(&[Report], usize) -> Vec<Report>, seen: &mut HashSet<Vec<Report>>) {
        if !seen.insert(s.clone()) {
            return;
        }
        for i in 0..s.len() {
            for r in step(&s, i) {
                let mut t = s.clone();
                t[i] = r;
                visit(t, step, seen);
            }
        }
    }
    let mut seen = HashSet::new();
    visit(start, step, &mut seen);
    seen
}

/// Reachable states of the role-level machines with `n` reports.
pub fn lifecycle_states(n: usize) -> HashSet<Vec<Report>> {
    enumerate(vec![(St::Void, None); n], &|s, i| {
        s[i].0.next().into_iter().map(|st| (st, None)).collect()
    })
}

/// Reachable states of the user-level machine with `n` reports and
/// `reporters` reporters: creation picks any reporter, deletion clears
/// the owner, other moves keep it.
pub fn owned_states(n: usize, reporters: usize) -> HashSet<Vec<Report>> {
    enumerate(vec![(St::Void, None); n], &|s, i| {
        let (st, owner) = s[i];
        match st {
            St::Void => (0..reporters).map(|u| (St::Created, Some(u))).collect(),
            _ => st
                .next()
                .into_iter()
                .map(|t| (t, if t == St::Void { None } else { owner }))
                .collect(),
        }
    })
}

pub fn reports(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("r{i}")).collect()
}

/// Reads an engine state back into the oracle's representation.
pub fn abstract_view(m: &Machine, s: &SystemState, n: usize) -> Vec<Report> {
    let rs = s.get(m, "report_state").expect("report_state");
    let owner = s.get(m, "owner");
    reports(n)
        .iter()
        .map(|r| {
            let key = Value::elem(r.as_str());
            let st = St::from_name(rs.apply(&key).and_then(Value::as_elem).expect("total"));
            let o = owner
                .and_then(|o| o.apply(&key))
                .and_then(Value::as_elem)
                .map(|u| u.trim_start_matches('u').parse::<usize>().unwrap() - 1);
            (st, o)
        })
        .collect()
}

/// The rights set the state holds for `role` on report `r`, as letters in C R W D order.
pub fn rights_of(m: &Machine, s: &SystemState, role: &str, r: &str) -> String {
    let perms = s.get(m, "permissions").expect("permissions");
    let key = Value::pair(Value::elem(role), Value::elem(r));
    let held: BTreeSet<String> = perms.apply(&key).expect("total").elem_names().into_iter().collect();
    ["C", "R", "W", "D"]
        .iter()
        .filter(|x| held.contains(**x))
        .copied()
        .collect()
}

pub fn sized(mut pm: PolicyMachine, n: usize) -> Machine {
    assert!(dynrbac::corpus::with_reports(&mut pm, n));
    compile(&pm).expect("compiles")
}
