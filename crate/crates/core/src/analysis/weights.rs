//! Muckenhoupt `A_γ` constants of positive weights.

use rayon::prelude::*;

use super::family::BallFamily;
use super::BallSums;
use crate::error::{LabError, Result};
use crate::grid::GridFunction;

fn check_weight(w: &GridFunction) -> Result<()> {
    if w.m() != 1 {
        return Err(LabError::ShapeMismatch(format!(
            "weight must be scalar, got {} components",
            w.m()
        )));
    }
    if let Some((node, &value)) = w.values().iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
        return Err(LabError::InvalidWeight { node, value });
    }
    Ok(())
}

/// `[w]_γ = sup_B (⨍_B w)(⨍_B w^{1−γ'})^{γ−1}`, `γ' = γ/(γ−1)`, over the
/// family.
pub fn ap_constant(w: &GridFunction, gamma: f64, family: &BallFamily) -> Result<f64> {
    check_weight(w)?;
    if !(gamma > 1.0) {
        return Err(LabError::InvalidArgument(format!(
            "gamma = {gamma} must exceed 1"
        )));
    }
    family.check_grid(w.grid())?;
    let v = w.values();
    if v.iter().all(|&x| x == v[0]) {
        return Ok(1.0);
    }
    let grid = w.grid();
    // 1 − γ' = −1/(γ−1)
    let dual_exp = -1.0 / (gamma - 1.0);
    let sums_w = BallSums::new(grid, |n| w.values()[n]);
    let sums_dual = BallSums::new(grid, |n| w.values()[n].powf(dual_exp));
    let sums_one = BallSums::new(grid, |_| 1.0);
    let sup = family
        .centers()
        .par_iter()
        .map(|&c| {
            family
                .radii()
                .iter()
                .map(|&r| {
                    let vol = sums_one.ball(grid, c, r);
                    let a = sums_w.ball(grid, c, r) / vol;
                    let b = sums_dual.ball(grid, c, r) / vol;
                    a * b.powf(gamma - 1.0)
                })
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max);
    Ok(sup)
}

/// Returns `([w^δ]_γ, [w]_γ^δ)`; Hölder's inequality gives `lhs ≤ rhs`.
pub fn weight_power_check(
    w: &GridFunction,
    delta: f64,
    gamma: f64,
    family: &BallFamily,
) -> Result<(f64, f64)> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(LabError::InvalidArgument(format!(
            "delta = {delta} must lie in (0, 1]"
        )));
    }
    let lhs = ap_constant(&w.map(|v| v.powf(delta)), gamma, family)?;
    let rhs = ap_constant(w, gamma, family)?.powf(delta);
    Ok((lhs, rhs))
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::grid::{Grid, Region};

    #[test]
    fn constant_weights_give_one() {
        let g = Arc::new(Grid::unit_square(9).unwrap());
        let fam = BallFamily::dyadic(&g);
        for c in [1.0, 0.3, 17.0] {
            let w = GridFunction::constant(g.clone(), &[c]);
            for gamma in [4.0 / 3.0, 2.0, 3.0] {
                assert_eq!(ap_constant(&w, gamma, &fam).unwrap(), 1.0);
            }
        }
    }

    #[test]
    fn rejects_nonpositive_weight() {
        let g = Arc::new(Grid::unit_interval(9).unwrap());
        let w = GridFunction::scalar(g.clone(), |x| x[0]);
        let fam = BallFamily::dyadic(&g);
        assert!(matches!(
            ap_constant(&w, 2.0, &fam),
            Err(LabError::InvalidWeight { node: 0, .. })
        ));
        let w = GridFunction::constant(g.clone(), &[1.0]);
        assert!(ap_constant(&w, 1.0, &fam).is_err());
    }

    #[test]
    fn affine_weight_full_domain_value() {
        let g = Arc::new(Grid::unit_interval(65).unwrap());
        let w = GridFunction::scalar(g.clone(), |x| x[0] + 0.1);
        // the whole-domain ball alone: (mean w)(mean 1/w) by hand quadrature
        let whole = Region::whole(&g);
        let (mut a, mut b, mut v) = (0.0, 0.0, 0.0);
        for &n in &whole.nodes {
            let wt = g.weight(n);
            a += wt * w.values()[n];
            b += wt / w.values()[n];
            v += wt;
        }
        let by_hand = (a / v) * (b / v);
        let fam = BallFamily::new(vec![0], vec![1.0]).unwrap();
        let got = ap_constant(&w, 2.0, &fam).unwrap();
        assert!((got - by_hand).abs() < 1e-12);
        // the full family can only be larger
        assert!(ap_constant(&w, 2.0, &BallFamily::dyadic(&g)).unwrap() >= got - 1e-12);
    }

    #[test]
    fn power_check_trivial_cases() {
        let g = Arc::new(Grid::unit_interval(17).unwrap());
        let fam = BallFamily::dyadic(&g);
        let one = GridFunction::constant(g.clone(), &[1.0]);
        let (l, r) = weight_power_check(&one, 0.5, 2.0, &fam).unwrap();
        assert!((l - 1.0).abs() < 1e-12 && (r - 1.0).abs() < 1e-12);
        let w = GridFunction::scalar(g.clone(), |x| (4.0 * x[0]).exp());
        let (l, r) = weight_power_check(&w, 1.0, 2.0, &fam).unwrap();
        assert!((l - r).abs() < 1e-12 * r);
        let (l, r) = weight_power_check(&w, 0.5, 2.0, &fam).unwrap();
        assert!(l <= r);
    }
}
