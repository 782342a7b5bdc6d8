//! Seeded random walks over a machine's transitions.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::machine::Machine;
use super::{changed_variables, initial_state, successors, EngineError, Step, SystemState};

#[derive(Debug, Clone)]
pub struct SimStep {
    pub step: Step,
    pub state: SystemState,
    pub changed: Vec<String>,
}

impl SimStep {
    /// `<event> <binding> :: <changed-variables>`
    pub fn line(&self, m: &Machine) -> String {
        let changed = if self.changed.is_empty() {
            "(none)".to_string()
        } else {
            self.changed.join(", ")
        };
        format!("{} :: {changed}", self.step.describe(m))
    }
}

/// Single-threaded cursor over successive states.
pub struct Simulation<'m> {
    machine: &'m Machine,
    state: SystemState,
    rng: ChaCha8Rng,
    history: Vec<SimStep>,
}

impl<'m> Simulation<'m> {
    pub fn new(machine: &'m Machine, seed: u64) -> Result<Self, EngineError> {
        Ok(Simulation {
            machine,
            state: initial_state(machine)?,
            rng: ChaCha8Rng::seed_from_u64(seed),
            history: Vec::new(),
        })
    }

    pub fn state(&self) -> &SystemState {
        &self.state
    }

    pub fn history(&self) -> &[SimStep] {
        &self.history
    }

    /// Enabled transitions from the current state, in deterministic order.
    pub fn options(&self) -> Result<Vec<(Step, SystemState)>, EngineError> {
        successors(self.machine, &self.state)
    }

    /// Takes the `index`-th option; `None` when out of range.
    pub fn take(&mut self, index: usize) -> Result<Option<&SimStep>, EngineError> {
        let mut opts = self.options()?;
        if index >= opts.len() {
            return Ok(None);
        }
        let (step, next) = opts.swap_remove(index);
        let changed = changed_variables(self.machine, &self.state, &next);
        self.state = next.clone();
        self.history.push(SimStep {
            step,
            state: next,
            changed,
        });
        Ok(self.history.last())
    }

    /// Picks uniformly among enabled transitions; `None` once nothing is enabled.
    pub fn step(&mut self) -> Result<Option<&SimStep>, EngineError> {
        let n = self.options()?.len();
        if n == 0 {
            return Ok(None);
        }
        let pick = self.rng.gen_range(0..n);
        self.take(pick)
    }
}
