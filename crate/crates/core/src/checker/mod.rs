//! Bounded exhaustive discharge of proof obligations.
//!
//! Exploration is breadth-first from the initial state. Each BFS level is
//! expanded in parallel, then merged sequentially in frontier order, so the
//! visited set, parent links, and the first (shortest) witness recorded for
//! every obligation are identical for any worker count.

mod refinement;
pub mod report;

use std::collections::{HashMap, HashSet};
use std::time::Instant;

use rayon::prelude::*;
use thiserror::Error;

use crate::dsl::ast::Expr;
use crate::dsl::check::compile_predicate;
use crate::engine::eval::{eval_bool, Env, Term};
use crate::engine::{
    bindings, eval_invariant, event_successors, guard_enabled, initial_state, EngineError, Machine, Step, SystemState,
};
pub use refinement::check_refinement;
pub use report::{CheckReport, Obligation, ObligationKind, ObligationRecord, ObligationStatus, Trace, TraceStep};

pub const DEFAULT_MAX_STATES: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CheckOptions {
    pub max_states: usize,
    pub workers: usize,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions {
            max_states: DEFAULT_MAX_STATES,
            workers: 1,
        }
    }
}

#[derive(Debug, Error)]
pub enum CheckError {
    #[error("state bound of {cap} exceeded")]
    BoundExceeded { cap: usize, partial: Box<CheckReport> },
    #[error("not a refinement: {0}")]
    NotARefinement(String),
    #[error("invalid predicate: {0}")]
    BadPredicate(String),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

/// Outcome of one check at one point of the exploration.
#[derive(Debug, Clone)]
pub(crate) struct Finding {
    pub kind: ObligationKind,
    /// Position in the canonical obligation order.
    pub order: (u8, usize, usize),
    pub holds: bool,
    pub note: Option<String>,
}

impl Finding {
    fn new(kind: ObligationKind, order: (u8, usize, usize), holds: bool) -> Self {
        Finding {
            kind,
            order,
            holds,
            note: None,
        }
    }
}

pub(crate) const RANK_INIT: u8 = 0;
pub(crate) const RANK_INV: u8 = 1;
pub(crate) const RANK_WD: u8 = 2;
pub(crate) const RANK_GRD: u8 = 3;
pub(crate) const RANK_SIM: u8 = 4;
pub(crate) const RANK_DLF: u8 = 5;

/// Per-state and per-transition checks plugged into the explorer. All
/// methods are pure so expansion can run on any worker.
pub(crate) trait Inspector: Sync {
    /// Findings for the initial state and whether it must not be expanded.
    fn on_init(&self, _s: &SystemState) -> (Vec<Finding>, bool) {
        (Vec::new(), false)
    }

    /// Findings for one transition and whether the target must not be expanded.
    fn on_transition(&self, _pre: &SystemState, _step: &Step, _post: &SystemState) -> (Vec<Finding>, bool) {
        (Vec::new(), false)
    }

    fn on_state(&self, _s: &SystemState, _out_degree: usize) -> Vec<Finding> {
        Vec::new()
    }
}

pub(crate) struct NoChecks;

impl Inspector for NoChecks {}

/// Where a violation was witnessed.
enum Witness {
    AtState(usize),
    Transition(usize, Step, SystemState),
}

struct Record {
    kind: ObligationKind,
    order: (u8, usize, usize),
    violation: Option<(Witness, Option<String>)>,
}

struct Node {
    state: SystemState,
    parent: Option<(usize, Step)>,
    expand: bool,
}

struct Expansion {
    state_findings: Vec<Finding>,
    transitions: Vec<(Step, SystemState, Vec<Finding>, bool)>,
}

pub(crate) struct Exploration {
    nodes: Vec<Node>,
    records: Vec<Record>,
    pub explored_transitions: usize,
    pub bound_hit: bool,
}

impl Exploration {
    pub fn states(&self) -> impl Iterator<Item = &SystemState> {
        self.nodes.iter().map(|n| &n.state)
    }

    fn path(&self, m: &Machine, mut idx: usize) -> Trace {
        let mut steps = Vec::new();
        let mut states = vec![self.nodes[idx].state.clone()];
        while let Some((parent, step)) = &self.nodes[idx].parent {
            steps.push(to_trace_step(m, step));
            states.push(self.nodes[*parent].state.clone());
            idx = *parent;
        }
        steps.reverse();
        states.reverse();
        Trace { steps, states }
    }

    pub fn report(&self, m: &Machine, started: Instant) -> CheckReport {
        let mut records: Vec<&Record> = self.records.iter().collect();
        records.sort_by(|a, b| {
            a.order
                .cmp(&b.order)
                .then_with(|| a.kind.to_string().cmp(&b.kind.to_string()))
        });
        let obligations = records
            .into_iter()
            .map(|r| Obligation {
                kind: r.kind.clone(),
                status: match &r.violation {
                    None => ObligationStatus::Discharged,
                    Some((w, note)) => {
                        let trace = match w {
                            Witness::AtState(i) => self.path(m, *i),
                            Witness::Transition(pre, step, post) => {
                                let mut t = self.path(m, *pre);
                                t.steps.push(to_trace_step(m, step));
                                t.states.push(post.clone());
                                t
                            }
                        };
                        ObligationStatus::Violated {
                            trace,
                            note: note.clone(),
                        }
                    }
                },
            })
            .collect();
        CheckReport {
            machine: m.name().to_string(),
            obligations,
            reachable_count: self.nodes.len(),
            explored_transitions: self.explored_transitions,
            elapsed: started.elapsed(),
        }
    }
}

fn to_trace_step(m: &Machine, step: &Step) -> TraceStep {
    TraceStep {
        event: m.events[step.event].name.clone(),
        binding: step.binding.clone(),
        choice: step.choice.clone(),
    }
}

fn expand(m: &Machine, s: &SystemState, inspector: &dyn Inspector) -> Expansion {
    let mut transitions = Vec::new();
    let mut state_findings = Vec::new();
    for (ei, ev) in m.events.iter().enumerate() {
        let mut failure: Option<EngineError> = None;
        for b in bindings(m, ev) {
            let enabled = match guard_enabled(m, s, ei, &b) {
                Ok(x) => x,
                Err(e) => {
                    failure = Some(e);
                    break;
                }
            };
            if !enabled {
                continue;
            }
            match event_successors(m, s, ei, &b) {
                Ok(nexts) => {
                    for (choice, next) in nexts {
                        let step = Step {
                            event: ei,
                            binding: b.clone(),
                            choice,
                        };
                        let (findings, block) = inspector.on_transition(s, &step, &next);
                        transitions.push((step, next, findings, block));
                    }
                }
                Err(e) => {
                    failure = Some(e);
                    break;
                }
            }
        }
        let mut wd = Finding::new(
            ObligationKind::WellDefinedness { event: ev.name.clone() },
            (RANK_WD, ei, 0),
            failure.is_none(),
        );
        wd.note = failure.map(|e| e.to_string());
        if !wd.holds {
            state_findings.push(wd);
        }
    }
    state_findings.extend(inspector.on_state(s, transitions.len()));
    Expansion {
        state_findings,
        transitions,
    }
}

pub(crate) fn explore(m: &Machine, opts: CheckOptions, inspector: &dyn Inspector) -> Result<Exploration, EngineError> {
    let init = initial_state(m)?;
    let mut ex = Exploration {
        nodes: Vec::new(),
        records: Vec::new(),
        explored_transitions: 0,
        bound_hit: false,
    };
    let mut index: HashMap<ObligationKind, usize> = HashMap::new();
    let mut visited: HashSet<SystemState> = HashSet::new();

    let mut note = |ex: &mut Exploration, f: Finding, witness: &dyn Fn() -> Witness| {
        let i = *index.entry(f.kind.clone()).or_insert_with(|| {
            ex.records.push(Record {
                kind: f.kind.clone(),
                order: f.order,
                violation: None,
            });
            ex.records.len() - 1
        });
        if !f.holds && ex.records[i].violation.is_none() {
            ex.records[i].violation = Some((witness(), f.note));
        }
    };

    let (init_findings, init_blocked) = inspector.on_init(&init);
    let init_ok = !init_blocked;
    visited.insert(init.clone());
    ex.nodes.push(Node {
        state: init,
        parent: None,
        expand: init_ok,
    });
    for f in init_findings {
        note(&mut ex, f, &|| Witness::AtState(0));
    }

    let pool = if opts.workers > 1 {
        rayon::ThreadPoolBuilder::new().num_threads(opts.workers).build().ok()
    } else {
        None
    };

    let mut frontier: Vec<usize> = if init_ok { vec![0] } else { Vec::new() };
    while !frontier.is_empty() {
        let expansions: Vec<Expansion> = match &pool {
            Some(pool) => pool.install(|| {
                frontier
                    .par_iter()
                    .map(|&i| expand(m, &ex.nodes[i].state, inspector))
                    .collect()
            }),
            None => frontier
                .iter()
                .map(|&i| expand(m, &ex.nodes[i].state, inspector))
                .collect(),
        };

        let mut next_frontier = Vec::new();
        for (&pre, expansion) in frontier.iter().zip(expansions) {
            for f in expansion.state_findings {
                note(&mut ex, f, &|| Witness::AtState(pre));
            }
            for (step, post, findings, block) in expansion.transitions {
                ex.explored_transitions += 1;
                for f in findings {
                    note(&mut ex, f, &|| Witness::Transition(pre, step.clone(), post.clone()));
                }
                if visited.contains(&post) {
                    continue;
                }
                if ex.nodes.len() >= opts.max_states {
                    ex.bound_hit = true;
                    return Ok(ex);
                }
                visited.insert(post.clone());
                ex.nodes.push(Node {
                    state: post,
                    parent: Some((pre, step)),
                    expand: !block,
                });
                if !block {
                    next_frontier.push(ex.nodes.len() - 1);
                }
            }
        }
        debug_assert!(next_frontier.iter().all(|&i| ex.nodes[i].expand));
        frontier = next_frontier;
    }
    Ok(ex)
}

fn finish(m: &Machine, ex: Exploration, opts: CheckOptions, started: Instant) -> Result<CheckReport, CheckError> {
    let report = ex.report(m, started);
    if ex.bound_hit {
        return Err(CheckError::BoundExceeded {
            cap: opts.max_states,
            partial: Box::new(report),
        });
    }
    Ok(report)
}

/// Initialisation and invariant preservation checks.
pub(crate) struct InvariantChecks<'m> {
    pub machine: &'m Machine,
}

impl InvariantChecks<'_> {
    fn failing(&self, s: &SystemState) -> Vec<(usize, Option<String>)> {
        (0..self.machine.invariants.len())
            .filter_map(|i| match eval_invariant(self.machine, s, i) {
                Ok(true) => None,
                Ok(false) => Some((i, None)),
                Err(e) => Some((i, Some(e.to_string()))),
            })
            .collect()
    }
}

impl Inspector for InvariantChecks<'_> {
    fn on_init(&self, s: &SystemState) -> (Vec<Finding>, bool) {
        let failing = self.failing(s);
        let labels: Vec<&str> = failing
            .iter()
            .map(|(i, _)| self.machine.invariants[*i].label.as_str())
            .collect();
        let mut f = Finding::new(ObligationKind::Init, (RANK_INIT, 0, 0), failing.is_empty());
        if !failing.is_empty() {
            let mut note = format!("violated: {}", labels.join(", "));
            for (_, err) in failing.iter() {
                if let Some(e) = err {
                    note.push_str(&format!(" ({e})"));
                }
            }
            f.note = Some(note);
        }
        let blocked = !f.holds;
        (vec![f], blocked)
    }

    fn on_transition(&self, _pre: &SystemState, step: &Step, post: &SystemState) -> (Vec<Finding>, bool) {
        let m = self.machine;
        let event = &m.events[step.event].name;
        let failing = self.failing(post);
        let findings = m
            .invariants
            .iter()
            .enumerate()
            .map(|(i, inv)| {
                let failure = failing.iter().find(|(j, _)| *j == i);
                let mut f = Finding::new(
                    ObligationKind::Inv {
                        invariant: inv.label.clone(),
                        event: event.clone(),
                    },
                    (RANK_INV, i, step.event),
                    failure.is_none(),
                );
                f.note = failure.and_then(|(_, e)| e.clone());
                f
            })
            .collect();
        (findings, !failing.is_empty())
    }
}

pub(crate) struct DeadlockChecks<'m> {
    pub machine: &'m Machine,
    pub final_pred: Term,
}

impl Inspector for DeadlockChecks<'_> {
    fn on_state(&self, s: &SystemState, out_degree: usize) -> Vec<Finding> {
        if out_degree > 0 {
            return Vec::new();
        }
        let is_final = eval_bool(&self.final_pred, &mut Env::new(s.values(), Vec::new()));
        match is_final {
            Ok(true) => Vec::new(),
            other => {
                let mut f = Finding::new(
                    ObligationKind::Deadlock {
                        state: Some(s.render(self.machine)),
                    },
                    (RANK_DLF, 1, 0),
                    false,
                );
                if let Err(e) = other {
                    f.note = Some(format!("final predicate: {e}"));
                }
                vec![f]
            }
        }
    }
}

pub(crate) struct Both<'a>(pub &'a dyn Inspector, pub &'a dyn Inspector);

impl Inspector for Both<'_> {
    fn on_init(&self, s: &SystemState) -> (Vec<Finding>, bool) {
        let (mut a, block_a) = self.0.on_init(s);
        let (b, block_b) = self.1.on_init(s);
        a.extend(b);
        (a, block_a || block_b)
    }

    fn on_transition(&self, pre: &SystemState, step: &Step, post: &SystemState) -> (Vec<Finding>, bool) {
        let (mut a, block_a) = self.0.on_transition(pre, step, post);
        let (b, block_b) = self.1.on_transition(pre, step, post);
        a.extend(b);
        (a, block_a || block_b)
    }

    fn on_state(&self, s: &SystemState, out_degree: usize) -> Vec<Finding> {
        let mut v = self.0.on_state(s, out_degree);
        v.extend(self.1.on_state(s, out_degree));
        v
    }
}

/// Discharged iff every invariant holds in the initial state.
pub fn check_init(m: &Machine) -> Obligation {
    match initial_state(m) {
        Ok(s) => {
            let f = InvariantChecks { machine: m }.on_init(&s).0.remove(0);
            Obligation {
                kind: ObligationKind::Init,
                status: if f.holds {
                    ObligationStatus::Discharged
                } else {
                    ObligationStatus::Violated {
                        trace: Trace {
                            steps: Vec::new(),
                            states: vec![s],
                        },
                        note: f.note,
                    }
                },
            }
        }
        Err(e) => Obligation {
            kind: ObligationKind::Init,
            status: ObligationStatus::Violated {
                trace: Trace {
                    steps: Vec::new(),
                    states: Vec::new(),
                },
                note: Some(e.to_string()),
            },
        },
    }
}

fn init_failure_report(m: &Machine, started: Instant) -> CheckReport {
    CheckReport {
        machine: m.name().to_string(),
        obligations: vec![check_init(m)],
        reachable_count: 0,
        explored_transitions: 0,
        elapsed: started.elapsed(),
    }
}

/// Initialisation plus invariant preservation over every reachable transition.
pub fn check_invariants(m: &Machine, opts: CheckOptions) -> Result<CheckReport, CheckError> {
    check(m, None, opts)
}

fn compile_final(m: &Machine, final_pred: &Expr) -> Result<Term, CheckError> {
    compile_predicate(m, &[], final_pred)
        .map_err(|d| CheckError::BadPredicate(d.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")))
}

fn deadlock_summary(report: &mut CheckReport) {
    let any = report
        .obligations
        .iter()
        .any(|o| matches!(o.kind, ObligationKind::Deadlock { .. }));
    if !any {
        report.obligations.push(Obligation {
            kind: ObligationKind::Deadlock { state: None },
            status: ObligationStatus::Discharged,
        });
    }
}

/// Every reachable state either satisfies `final_pred` or enables some event.
pub fn check_deadlock(m: &Machine, final_pred: &Expr, opts: CheckOptions) -> Result<CheckReport, CheckError> {
    let term = compile_final(m, final_pred)?;
    let started = Instant::now();
    let ex = match explore(
        m,
        opts,
        &DeadlockChecks {
            machine: m,
            final_pred: term,
        },
    ) {
        Ok(ex) => ex,
        Err(_) => return Ok(init_failure_report(m, started)),
    };
    let mut report = finish(m, ex, opts, started)?;
    deadlock_summary(&mut report);
    Ok(report)
}

/// Invariant checks, plus deadlock freedom when `final_pred` is given, in one exploration.
pub fn check(m: &Machine, final_pred: Option<&Expr>, opts: CheckOptions) -> Result<CheckReport, CheckError> {
    let started = Instant::now();
    let invariants = InvariantChecks { machine: m };
    let deadlock = match final_pred {
        Some(p) => Some(DeadlockChecks {
            machine: m,
            final_pred: compile_final(m, p)?,
        }),
        None => None,
    };
    let combined;
    let inspector: &dyn Inspector = match &deadlock {
        Some(d) => {
            combined = Both(&invariants, d);
            &combined
        }
        None => &invariants,
    };
    let ex = match explore(m, opts, inspector) {
        Ok(ex) => ex,
        Err(_) => return Ok(init_failure_report(m, started)),
    };
    let mut report = finish(m, ex, opts, started)?;
    if deadlock.is_some() {
        deadlock_summary(&mut report);
    }
    Ok(report)
}

/// The exact set of states reachable from initialisation.
pub fn reachable_states(m: &Machine, opts: CheckOptions) -> Result<Vec<SystemState>, CheckError> {
    let started = Instant::now();
    let ex = explore(m, opts, &NoChecks)?;
    if ex.bound_hit {
        return Err(CheckError::BoundExceeded {
            cap: opts.max_states,
            partial: Box::new(ex.report(m, started)),
        });
    }
    Ok(ex.states().cloned().collect())
}
