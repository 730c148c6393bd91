use std::sync::Arc;

use crate::error::{LabError, Result};
use crate::grid::{Grid, GridFunction};

/// One outer iterate `u_k` on every time slice, `states[0] = U₀`.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    times: Vec<f64>,
    states: Vec<GridFunction>,
    /// First slice index at which the solve broke down, if any; the
    /// trajectory is truncated just before it.
    pub blowup: Option<usize>,
}

impl Trajectory {
    pub fn new(times: Vec<f64>, states: Vec<GridFunction>) -> Result<Self> {
        if states.is_empty() || states.len() > times.len() {
            return Err(LabError::ShapeMismatch(format!(
                "{} states for {} times",
                states.len(),
                times.len()
            )));
        }
        let (grid, m) = (states[0].grid().clone(), states[0].m());
        if states.iter().any(|s| s.grid() != &grid || s.m() != m) {
            return Err(LabError::ShapeMismatch(
                "trajectory states differ in grid or size".into(),
            ));
        }
        Ok(Trajectory {
            times,
            states,
            blowup: None,
        })
    }

    /// `U₀` held constant on every slice.
    pub fn constant(initial: &GridFunction, times: Vec<f64>) -> Self {
        let states = vec![initial.clone(); times.len()];
        Trajectory {
            times,
            states,
            blowup: None,
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.states[0].grid()
    }

    pub fn m(&self) -> usize {
        self.states[0].m()
    }

    /// Time grid of the full run (may extend past a truncated trajectory).
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[GridFunction] {
        &self.states
    }

    pub fn state(&self, j: usize) -> &GridFunction {
        &self.states[j]
    }

    pub fn initial(&self) -> &GridFunction {
        &self.states[0]
    }

    pub fn last(&self) -> &GridFunction {
        self.states.last().unwrap()
    }

    /// Number of stored slices.
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn is_complete(&self) -> bool {
        self.states.len() == self.times.len()
    }

    /// `max_{x,t} |u − v|` over the slices both trajectories hold.
    pub fn max_abs_diff(&self, other: &Trajectory) -> f64 {
        self.states
            .iter()
            .zip(&other.states)
            .map(|(a, b)| a.max_abs_diff(b))
            .fold(0.0, f64::max)
    }

    pub(crate) fn push(&mut self, state: GridFunction) {
        self.states.push(state);
    }
}
