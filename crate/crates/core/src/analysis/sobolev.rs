use super::bmo::mean_oscillation;
use crate::error::{LabError, Result};
use crate::grid::{gradient, GridFunction};

/// `‖u‖_{W^{1,p}} = ‖u‖_{Lᵖ} + ‖Du‖_{Lᵖ}`, with the Frobenius norm on `Du`.
pub fn sobolev_norm(u: &GridFunction, p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(LabError::InvalidArgument(format!(
            "p = {p} must be at least 1"
        )));
    }
    Ok(u.lp_norm(p) + gradient(u).lp_norm(p))
}

/// `(⨍_B |u − u_B|)ⁿ / ∫_B |Du|ⁿ` on `B = Ω(center, radius)`, `n` the
/// grid dimension. Poincaré's inequality bounds it uniformly.
pub fn poincare_ratio(u: &GridFunction, center: usize, radius: f64) -> Result<f64> {
    let grid = u.grid();
    let region = grid.region(center, radius)?;
    let n = grid.dim() as i32;
    let du = gradient(u);
    let denom: f64 = region
        .nodes
        .iter()
        .map(|&k| grid.weight(k) * du.norm_at(k).powi(n))
        .sum();
    if !(denom > 0.0) {
        return Err(LabError::DegenerateInput(
            "gradient vanishes on the ball".into(),
        ));
    }
    Ok(mean_oscillation(u, center, radius).powi(n) / denom)
}
