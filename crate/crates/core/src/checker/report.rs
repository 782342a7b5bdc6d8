use std::fmt::{self, Write};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::engine::{apply_event, initial_state, Binding, Machine, SystemState, Value};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceStep {
    pub event: String,
    pub binding: Binding,
    pub choice: Vec<Value>,
}

impl fmt::Display for TraceStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.event, self.binding)?;
        if !self.choice.is_empty() {
            let picks: Vec<String> = self.choice.iter().map(|v| v.to_string()).collect();
            write!(f, " :: [{}]", picks.join(", "))?;
        }
        Ok(())
    }
}

/// A run from the initial state; `states[0]` is the initial state and
/// `states[i + 1]` results from `steps[i]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace {
    pub steps: Vec<TraceStep>,
    pub states: Vec<SystemState>,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn last_state(&self) -> Option<&SystemState> {
        self.states.last()
    }

    /// Re-executes the trace and checks it reproduces the stored states.
    pub fn replay(&self, m: &Machine) -> Result<(), String> {
        let init = initial_state(m).map_err(|e| e.to_string())?;
        if self.states.first() != Some(&init) {
            return Err("first state is not the initial state".into());
        }
        let mut cur = init;
        for (i, step) in self.steps.iter().enumerate() {
            let next = apply_event(m, &cur, &step.event, &step.binding, &step.choice)
                .map_err(|e| format!("step {i} ({step}): {e}"))?;
            if self.states.get(i + 1) != Some(&next) {
                return Err(format!("step {i} ({step}) reaches a different state"));
            }
            cur = next;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ObligationKind {
    Init,
    Inv {
        invariant: String,
        event: String,
    },
    /// An expression in `event` could not be evaluated (e.g. a partial map applied outside its domain).
    WellDefinedness {
        event: String,
    },
    GuardStrengthening {
        event: String,
    },
    Simulation {
        event: String,
    },
    /// `None` stands for "every reachable state" once no stuck state was found.
    Deadlock {
        state: Option<String>,
    },
}

impl ObligationKind {
    pub fn tag(&self) -> &'static str {
        match self {
            ObligationKind::Init => "Init",
            ObligationKind::Inv { .. } => "Inv",
            ObligationKind::WellDefinedness { .. } => "WellDefinedness",
            ObligationKind::GuardStrengthening { .. } => "GuardStrengthening",
            ObligationKind::Simulation { .. } => "Simulation",
            ObligationKind::Deadlock { .. } => "Deadlock",
        }
    }

    pub fn event(&self) -> Option<&str> {
        match self {
            ObligationKind::Inv { event, .. }
            | ObligationKind::WellDefinedness { event }
            | ObligationKind::GuardStrengthening { event }
            | ObligationKind::Simulation { event } => Some(event),
            _ => None,
        }
    }
}

impl fmt::Display for ObligationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ObligationKind::Init => f.write_str("INIT"),
            ObligationKind::Inv { invariant, event } => write!(f, "INV {invariant} / {event}"),
            ObligationKind::WellDefinedness { event } => write!(f, "WD {event}"),
            ObligationKind::GuardStrengthening { event } => write!(f, "GRD {event}"),
            ObligationKind::Simulation { event } => write!(f, "SIM {event}"),
            ObligationKind::Deadlock { state: None } => f.write_str("DLF all reachable states"),
            ObligationKind::Deadlock { state: Some(s) } => write!(f, "DLF {s}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ObligationStatus {
    Discharged,
    Violated { trace: Trace, note: Option<String> },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Obligation {
    pub kind: ObligationKind,
    pub status: ObligationStatus,
}

impl Obligation {
    pub fn is_discharged(&self) -> bool {
        self.status == ObligationStatus::Discharged
    }

    pub fn trace(&self) -> Option<&Trace> {
        match &self.status {
            ObligationStatus::Violated { trace, .. } => Some(trace),
            ObligationStatus::Discharged => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CheckReport {
    pub machine: String,
    pub obligations: Vec<Obligation>,
    pub reachable_count: usize,
    pub explored_transitions: usize,
    pub elapsed: Duration,
}

/// Equality ignores `elapsed`.
impl PartialEq for CheckReport {
    fn eq(&self, other: &Self) -> bool {
        self.machine == other.machine
            && self.obligations == other.obligations
            && self.reachable_count == other.reachable_count
            && self.explored_transitions == other.explored_transitions
    }
}

impl CheckReport {
    pub fn all_discharged(&self) -> bool {
        self.obligations.iter().all(Obligation::is_discharged)
    }

    /// Violated obligations ordered by trace length, then event name.
    pub fn violations(&self) -> Vec<&Obligation> {
        let mut v: Vec<&Obligation> = self.obligations.iter().filter(|o| !o.is_discharged()).collect();
        v.sort_by(|a, b| {
            let la = a.trace().map_or(0, Trace::len);
            let lb = b.trace().map_or(0, Trace::len);
            la.cmp(&lb)
                .then_with(|| a.kind.event().unwrap_or("").cmp(b.kind.event().unwrap_or("")))
        });
        v
    }

    pub fn find(&self, kind: &ObligationKind) -> Option<&Obligation> {
        self.obligations.iter().find(|o| &o.kind == kind)
    }

    pub fn to_text(&self, m: &Machine) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "machine {}: {} reachable states, {} transitions explored",
            self.machine, self.reachable_count, self.explored_transitions
        );
        for o in &self.obligations {
            let tag = if o.is_discharged() { "[ok]  " } else { "[FAIL]" };
            let _ = writeln!(out, "  {tag} {}", o.kind);
        }
        let violations = self.violations();
        for o in &violations {
            let ObligationStatus::Violated { trace, note } = &o.status else {
                continue;
            };
            let _ = writeln!(out, "violation {} (trace of {} steps)", o.kind, trace.len());
            if let Some(n) = note {
                let _ = writeln!(out, "  note: {n}");
            }
            if let Some(s0) = trace.states.first() {
                let _ = writeln!(out, "  init  => {}", s0.render(m));
            }
            for (i, step) in trace.steps.iter().enumerate() {
                let _ = writeln!(out, "  {:<5} {step}", i + 1);
                if let Some(s) = trace.states.get(i + 1) {
                    let _ = writeln!(out, "        => {}", s.render(m));
                }
            }
        }
        let _ = writeln!(
            out,
            "result: {} of {} obligations discharged, {} violated",
            self.obligations.len() - violations.len(),
            self.obligations.len(),
            violations.len()
        );
        out
    }

    pub fn to_records(&self) -> Vec<ObligationRecord> {
        self.obligations.iter().map(ObligationRecord::from).collect()
    }

    /// One JSON object per line, one line per obligation.
    pub fn to_records_text(&self) -> String {
        let mut out = String::new();
        for r in self.to_records() {
            out.push_str(&serde_json::to_string(&r).expect("records serialize"));
            out.push('\n');
        }
        out
    }
}

/// Machine-readable form of one obligation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObligationRecord {
    pub kind: String,
    pub labels: Vec<String>,
    pub status: String,
    pub trace: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub note: Option<String>,
}

impl From<&Obligation> for ObligationRecord {
    fn from(o: &Obligation) -> Self {
        let labels = match &o.kind {
            ObligationKind::Init => vec![],
            ObligationKind::Inv { invariant, event } => vec![invariant.clone(), event.clone()],
            ObligationKind::WellDefinedness { event }
            | ObligationKind::GuardStrengthening { event }
            | ObligationKind::Simulation { event } => vec![event.clone()],
            ObligationKind::Deadlock { state } => state.iter().cloned().collect(),
        };
        let (status, trace, note) = match &o.status {
            ObligationStatus::Discharged => ("discharged", vec![], None),
            ObligationStatus::Violated { trace, note } => (
                "violated",
                trace.steps.iter().map(|s| s.to_string()).collect(),
                note.clone(),
            ),
        };
        ObligationRecord {
            kind: o.kind.tag().to_string(),
            labels,
            status: status.to_string(),
            trace,
            note,
        }
    }
}
