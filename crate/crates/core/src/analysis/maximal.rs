//! Discrete Hardy–Littlewood maximal function.

use rayon::prelude::*;

use super::family::BallFamily;
use super::BallSums;
use crate::error::{LabError, Result};
use crate::grid::GridFunction;

/// `M(F)(x) = max_r ⨍_{Ω(x,r)} |F|` over the family radii at every node.
/// The degenerate ball `{x}` is always included, so `M(F) ≥ |F|`.
/// Vector fields are reduced to their pointwise Euclidean norm first.
pub fn maximal_function(f: &GridFunction, family: &BallFamily) -> GridFunction {
    let abs = f.map_nodes(|v| v.iter().map(|x| x * x).sum::<f64>().sqrt());
    let grid = abs.grid().clone();
    let sums = BallSums::new(&grid, |n| abs.values()[n]);
    let vols = BallSums::new(&grid, |_| 1.0);
    let values: Vec<f64> = (0..grid.len())
        .into_par_iter()
        .map(|x| {
            family
                .radii()
                .iter()
                .map(|&r| sums.ball(&grid, x, r) / vols.ball(&grid, x, r))
                .fold(abs.values()[x], f64::max)
        })
        .collect();
    GridFunction::from_values(grid, 1, values)
        .expect("maximal function of a finite field is finite")
}

/// `‖M(F)‖_q^q / ‖F‖_q^q`, the empirical Hardy–Littlewood constant.
pub fn hardy_littlewood_ratio(f: &GridFunction, q: f64, family: &BallFamily) -> Result<f64> {
    if !(q > 1.0) {
        return Err(LabError::InvalidArgument(format!("q = {q} must exceed 1")));
    }
    family.check_grid(f.grid())?;
    let denom = f.integral_pow(q);
    if !(denom > 0.0) {
        return Err(LabError::DegenerateInput(
            "zero field has no maximal ratio".into(),
        ));
    }
    Ok(maximal_function(f, family).integral_pow(q) / denom)
}
