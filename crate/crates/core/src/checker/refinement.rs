//! Refinement under identity gluing: abstract variables are read off the
//! concrete state by name.

use std::time::Instant;

use super::{
    explore, finish, CheckError, CheckOptions, CheckReport, Finding, Inspector, ObligationKind, RANK_GRD, RANK_INIT,
    RANK_SIM,
};
use crate::dsl::check::validate;
use crate::engine::{event_successors, guard_enabled, initial_state, Binding, EngineError, Machine, Step, SystemState};

const INITIALISATION: &str = "INITIALISATION";

struct RefinementChecks<'a> {
    abs: &'a Machine,
    conc: &'a Machine,
    /// Concrete variable index of each abstract variable.
    projection: Vec<usize>,
    /// Abstract event index refined by each concrete event.
    links: Vec<Option<usize>>,
    abs_init: Result<SystemState, String>,
}

impl RefinementChecks<'_> {
    fn project(&self, s: &SystemState) -> SystemState {
        SystemState::new(self.projection.iter().map(|&i| s.values()[i].clone()).collect())
    }

    fn abstract_binding(&self, aei: usize, b: &Binding) -> Binding {
        Binding(
            self.abs.events[aei]
                .params
                .iter()
                .filter_map(|p| b.get(&p.name).map(|v| (p.name.clone(), v.clone())))
                .collect(),
        )
    }

    fn grd(&self, ei: usize, pre: &SystemState, aei: usize, ab: &Binding) -> Finding {
        let kind = ObligationKind::GuardStrengthening {
            event: self.conc.events[ei].name.clone(),
        };
        let mut f = Finding::new(kind, (RANK_GRD, ei, 0), true);
        match guard_enabled(self.abs, pre, aei, ab) {
            Ok(true) => {}
            Ok(false) => {
                f.holds = false;
                f.note = Some(format!("abstract guard of {} {ab} is false", self.abs.events[aei].name));
            }
            Err(e) => {
                f.holds = false;
                f.note = Some(format!("abstract guard: {e}"));
            }
        }
        f
    }

    fn sim(&self, ei: usize, apre: &SystemState, apost: &SystemState, link: Option<(usize, &Binding)>) -> Finding {
        let kind = ObligationKind::Simulation {
            event: self.conc.events[ei].name.clone(),
        };
        let mut f = Finding::new(kind, (RANK_SIM, ei, 0), true);
        let outcome: Result<bool, EngineError> = match link {
            None => Ok(apre == apost),
            Some((aei, ab)) => {
                event_successors(self.abs, apre, aei, ab).map(|succ| succ.iter().any(|(_, s)| s == apost))
            }
        };
        match outcome {
            Ok(true) => {}
            Ok(false) => {
                f.holds = false;
                f.note = Some(match link {
                    None => "new event changes abstract variables".to_string(),
                    Some((aei, ab)) => format!(
                        "no step of {} {ab} reaches {}",
                        self.abs.events[aei].name,
                        apost.render(self.abs)
                    ),
                });
            }
            Err(e) => {
                f.holds = false;
                f.note = Some(format!("abstract step: {e}"));
            }
        }
        f
    }
}

impl Inspector for RefinementChecks<'_> {
    fn on_init(&self, s: &SystemState) -> (Vec<Finding>, bool) {
        let kind = ObligationKind::Simulation {
            event: INITIALISATION.to_string(),
        };
        let mut f = Finding::new(kind, (RANK_INIT, 1, 0), true);
        match &self.abs_init {
            Ok(a) if *a == self.project(s) => {}
            Ok(a) => {
                f.holds = false;
                f.note = Some(format!("abstract initialisation gives {}", a.render(self.abs)));
            }
            Err(e) => {
                f.holds = false;
                f.note = Some(e.clone());
            }
        }
        (vec![f], false)
    }

    fn on_transition(&self, pre: &SystemState, step: &Step, post: &SystemState) -> (Vec<Finding>, bool) {
        let apre = self.project(pre);
        let apost = self.project(post);
        let findings = match self.links[step.event] {
            Some(aei) => {
                let ab = self.abstract_binding(aei, &step.binding);
                vec![
                    self.grd(step.event, &apre, aei, &ab),
                    self.sim(step.event, &apre, &apost, Some((aei, &ab))),
                ]
            }
            None => vec![self.sim(step.event, &apre, &apost, None)],
        };
        (findings, false)
    }
}

/// Guard strengthening and step simulation of `conc` against `abs` over
/// every reachable concrete state.
pub fn check_refinement(abs: &Machine, conc: &Machine, opts: CheckOptions) -> Result<CheckReport, CheckError> {
    if conc.source.refines.as_deref() != Some(abs.name()) {
        return Err(CheckError::NotARefinement(format!(
            "machine `{}` does not declare `refines {}`",
            conc.name(),
            abs.name()
        )));
    }
    let diags = validate(&conc.source, Some(&abs.source));
    if !diags.is_empty() {
        let msgs: Vec<String> = diags.iter().map(|d| d.to_string()).collect();
        return Err(CheckError::NotARefinement(msgs.join("; ")));
    }

    let projection = abs
        .variables
        .iter()
        .map(|v| {
            conc.var_index(&v.name)
                .ok_or_else(|| CheckError::NotARefinement(format!("abstract variable `{}` is not retained", v.name)))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let links = conc
        .events
        .iter()
        .map(|e| match &e.refines {
            None => Ok(None),
            Some(r) => abs
                .event_index(r)
                .map(Some)
                .ok_or_else(|| CheckError::NotARefinement(format!("event `{}` refines unknown `{r}`", e.name))),
        })
        .collect::<Result<Vec<_>, _>>()?;

    let checks = RefinementChecks {
        abs,
        conc,
        projection,
        links,
        abs_init: initial_state(abs).map_err(|e| e.to_string()),
    };
    let started = Instant::now();
    let ex = explore(conc, opts, &checks)?;
    finish(conc, ex, opts, started)
}
