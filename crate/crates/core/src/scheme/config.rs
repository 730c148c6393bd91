use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// How the `Du`-dependence of the reaction enters each linear solve.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FGradientMode {
    /// In the matrix when `f` is affine in `p`, lagged otherwise.
    #[default]
    Implicit,
    /// Always evaluated at the previous inner iterate, then once more.
    Lagged,
}

/// Extra source `s(x, t)` added to the right-hand side (manufactured
/// solutions).
pub type SourceFn = Arc<dyn Fn(&[f64; 2], f64, &mut [f64]) + Send + Sync>;

#[derive(Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SchemeConfig {
    pub t_final: f64,
    pub tau: f64,
    pub k_max: usize,
    /// Outer stopping tolerance on `max_{x,t} |u_k − u_{k−1}|`.
    pub tol_c0: f64,
    /// Threshold of the local small-BMO radius.
    pub bmo_eps: f64,
    /// Energy exponent; derived from the admissible range when absent.
    pub p_energy: Option<f64>,
    /// Bound on the backward error `‖Ax − b‖_∞ / (‖A‖_∞‖x‖_∞ + ‖b‖_∞)` of
    /// each linear solve.
    pub linear_solver_tol: f64,
    pub f_gradient_mode: FGradientMode,
    /// Band-storage entries above which the iterative solver is used.
    pub direct_solver_limit: usize,
    /// Stride of the BMO family centers; chosen from the grid when absent.
    pub bmo_center_stride: Option<usize>,
    /// Fitted log-log growth exponent above which a run is flagged.
    pub blowup_exponent: f64,
    /// `W^{1,n}` norm above which a run is flagged.
    pub blowup_ceiling: f64,
    /// Fault injection: coefficients become NaN for `t` beyond this value.
    pub inject_nan_after: Option<f64>,
    #[serde(skip)]
    pub source: Option<SourceFn>,
}

impl Default for SchemeConfig {
    fn default() -> Self {
        SchemeConfig {
            t_final: 0.1,
            tau: 0.01,
            k_max: 20,
            tol_c0: 1e-6,
            bmo_eps: 0.1,
            p_energy: None,
            linear_solver_tol: 1e-10,
            f_gradient_mode: FGradientMode::Implicit,
            direct_solver_limit: 8_000_000,
            bmo_center_stride: None,
            blowup_exponent: 1.0,
            blowup_ceiling: 1e6,
            inject_nan_after: None,
            source: None,
        }
    }
}

impl fmt::Debug for SchemeConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SchemeConfig")
            .field("t_final", &self.t_final)
            .field("tau", &self.tau)
            .field("k_max", &self.k_max)
            .field("tol_c0", &self.tol_c0)
            .field("bmo_eps", &self.bmo_eps)
            .field("p_energy", &self.p_energy)
            .field("linear_solver_tol", &self.linear_solver_tol)
            .field("f_gradient_mode", &self.f_gradient_mode)
            .field("inject_nan_after", &self.inject_nan_after)
            .field("source", &self.source.is_some())
            .finish_non_exhaustive()
    }
}

impl SchemeConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(LabError::Config(msg));
        if !(self.tau > 0.0) || !(self.t_final >= self.tau) {
            return bad(format!(
                "need tau > 0 and T >= tau, got tau={} T={}",
                self.tau, self.t_final
            ));
        }
        if self.k_max < 1 {
            return bad("k_max must be at least 1".into());
        }
        if !(self.tol_c0 > 0.0) || !(self.linear_solver_tol > 0.0) || !(self.bmo_eps > 0.0) {
            return bad("tolerances and bmo_eps must be positive".into());
        }
        if let Some(p) = self.p_energy {
            if !(p >= 1.0) {
                return bad(format!("p_energy = {p} must be at least 1"));
            }
        }
        Ok(())
    }

    /// `t_j = j·τ`, the last step shortened to land on `T` if needed.
    pub fn times(&self) -> Vec<f64> {
        let steps = ((self.t_final / self.tau) - 1e-9).ceil().max(1.0) as usize;
        let mut t: Vec<f64> = (0..=steps)
            .map(|j| (j as f64 * self.tau).min(self.t_final))
            .collect();
        t[steps] = self.t_final;
        t
    }
}
