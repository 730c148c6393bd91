use serde::Serialize;

use super::config::SchemeConfig;
use super::diagnostics::{diagnose, DiagnoseInput, DiagnosticsReport};
use super::step::{pde_residual, reaction_dependence, step_with};
use super::trajectory::Trajectory;
use crate::analysis::BallFamily;
use crate::error::{LabError, Result};
use crate::grid::GridFunction;
use crate::model::{check_uniform_ellipticity, max_admissible_p, xi_samples, ModelSpec};

/// Marches the linear system with coefficients frozen at `u_prev` from
/// `u0` to `T`. A step that breaks down (non-finite coefficients or
/// solution) truncates the trajectory and records the failing slice.
pub fn solve_linearized(
    model: &ModelSpec,
    u_prev: &Trajectory,
    u0: &GridFunction,
    config: &SchemeConfig,
) -> Result<Trajectory> {
    config.validate()?;
    if !u_prev.is_complete() {
        return Err(LabError::InvalidArgument(
            "frozen coefficients must cover [0, T]".into(),
        ));
    }
    if u0.grid() != u_prev.grid() || u0.m() != model.m || u_prev.m() != model.m {
        return Err(LabError::ShapeMismatch(
            "model, trajectory and initial data disagree".into(),
        ));
    }
    u0.grid().check_bound(model.m)?;
    let times = u_prev.times().to_vec();
    let p_dep = reaction_dependence(model, u0);
    let mut traj = Trajectory::new(times.clone(), vec![u0.clone()])?;
    for j in 0..times.len() - 1 {
        let step = step_with(
            model,
            u_prev.state(j + 1),
            traj.last(),
            times[j + 1] - times[j],
            times[j + 1],
            j + 1,
            p_dep,
            config,
        );
        match step {
            Ok(next) => traj.push(next),
            Err(LabError::BlowUpSuspected { time_index }) => {
                traj.blowup = Some(time_index);
                break;
            }
            Err(e) => return Err(e),
        }
    }
    Ok(traj)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum IterationStatus {
    Converged,
    MaxIterations,
    Diverged,
}

#[derive(Clone, Debug)]
pub struct IterationOutcome {
    /// The last iterate.
    pub trajectory: Trajectory,
    /// One report per outer iterate, `reports[i].k = i + 1`.
    pub reports: Vec<DiagnosticsReport>,
    pub status: IterationStatus,
    pub iterations: usize,
    /// Nonlinear residual of the last iterate; `None` if it was truncated.
    pub final_residual: Option<f64>,
    /// `u₀, u₁, …, u_k`.
    pub history: Vec<Trajectory>,
    pub p_energy: f64,
}

impl IterationOutcome {
    pub fn increments(&self) -> Vec<f64> {
        self.reports.iter().map(|r| r.increment_sup).collect()
    }
}

/// Energy exponent used when the configuration leaves it open: the
/// midpoint of `[1, p_max)` capped at 2, or 2 when every `p` is admissible.
pub fn default_p_energy(model: &ModelSpec, dim: usize) -> Result<f64> {
    let samples = model.sample_box.samples(64, 11);
    let adm = max_admissible_p(model, &samples, dim.max(2))?;
    Ok(match adm.p_max {
        Some(p_max) if p_max.is_finite() => (0.5 * (1.0 + p_max)).min(2.0),
        _ => 2.0,
    })
}

/// Outer iteration `u_k = S(u_{k−1})` from `init` (default: `U₀` held
/// constant in time) until the sup increment drops below `tol_c0`, `k_max`
/// iterates were computed, or a solve breaks down.
pub fn iterate(
    model: &ModelSpec,
    u0: &GridFunction,
    init: Option<Trajectory>,
    config: &SchemeConfig,
) -> Result<IterationOutcome> {
    config.validate()?;
    let grid = u0.grid().clone();
    let dim = grid.dim();
    let ell = check_uniform_ellipticity(
        model,
        &model.sample_box.samples(64, 5),
        &xi_samples(model.m * dim, 16, 6),
        dim,
    );
    if !ell.pass {
        return Err(LabError::InvalidStructure(format!(
            "model {} is not uniformly elliptic on its sample box",
            model.name
        )));
    }
    let times = config.times();
    let init = match init {
        Some(t) => {
            if t.times() != times.as_slice() {
                return Err(LabError::ShapeMismatch(
                    "initial trajectory has a different time grid".into(),
                ));
            }
            t
        }
        None => Trajectory::constant(u0, times),
    };
    let p = match config.p_energy {
        Some(p) => p,
        None => default_p_energy(model, dim)?,
    };
    let stride = config.bmo_center_stride.unwrap_or_else(|| {
        (grid
            .shape()
            .iter()
            .copied()
            .max()
            .unwrap_or(1)
            .saturating_sub(1)
            / 16)
            .max(1)
    });
    let family = BallFamily::dyadic_strided(&grid, stride);

    let mut history = vec![init];
    let mut reports: Vec<DiagnosticsReport> = Vec::new();
    let mut status = IterationStatus::MaxIterations;
    for k in 1..=config.k_max {
        let prev = history.last().unwrap();
        let cur = solve_linearized(model, prev, u0, config)?;
        let report = diagnose(&DiagnoseInput {
            model,
            prev,
            cur: &cur,
            k,
            p,
            eps: config.bmo_eps,
            family: &family,
            thresholds: (config.blowup_exponent, config.blowup_ceiling),
            running: reports.last(),
        })?;
        let inc = report.increment_sup;
        let broken = cur.blowup.is_some() || !inc.is_finite();
        reports.push(report);
        history.push(cur);
        if broken {
            status = IterationStatus::Diverged;
            break;
        }
        if inc < config.tol_c0 {
            status = IterationStatus::Converged;
            break;
        }
    }
    let trajectory = history.last().unwrap().clone();
    let final_residual = if trajectory.is_complete() {
        Some(pde_residual(model, &trajectory, config)?)
    } else {
        None
    };
    Ok(IterationOutcome {
        iterations: reports.len(),
        trajectory,
        reports,
        status,
        final_residual,
        history,
        p_energy: p,
    })
}
