//! Estimators for the harmonic-analysis quantities of the theory.

mod bmo;
mod family;
mod gn;
mod iteration;
mod maximal;
mod sobolev;
mod weights;

pub(crate) use bmo::profile_from_table;
pub use bmo::{
    bmo_norm, bmo_seminorm, campanato_seminorm, local_bmo_profile, mean_oscillation,
    oscillation_table, restricted_seminorm, LocalRadius, OscillationTable,
};
pub use family::BallFamily;
pub use gn::{gn_global_ratio, gn_local_terms, gn_terms, GnLocalTerms, GnTerms, GnWeights};
pub use iteration::{iteration_bound, synthetic_instance, IterationBound, SyntheticInstance};
pub use maximal::{hardy_littlewood_ratio, maximal_function};
pub use sobolev::{poincare_ratio, sobolev_norm};
pub use weights::{ap_constant, weight_power_check};

use crate::grid::Grid;

/// Row-wise prefix sums of `weight · f` so that the quadrature integral
/// over any ball costs one lookup per grid row.
pub(crate) struct BallSums {
    row_len: usize,
    prefix: Vec<f64>,
}

impl BallSums {
    pub(crate) fn new(grid: &Grid, f: impl Fn(usize) -> f64) -> Self {
        let n0 = grid.shape()[0];
        let rows = grid.len() / n0;
        let row_len = n0 + 1;
        let mut prefix = vec![0.0; rows * row_len];
        for j in 0..rows {
            let mut acc = 0.0;
            for i in 0..n0 {
                let node = i + n0 * j;
                acc += grid.weight(node) * f(node);
                prefix[j * row_len + i + 1] = acc;
            }
        }
        BallSums { row_len, prefix }
    }

    /// `∫_{Ω(center, radius)} f` by trapezoid quadrature.
    pub(crate) fn ball(&self, grid: &Grid, center: usize, radius: f64) -> f64 {
        let mut s = 0.0;
        grid.for_each_ball_row(center, radius, |j, lo, hi| {
            let base = j * self.row_len;
            s += self.prefix[base + hi + 1] - self.prefix[base + lo];
        });
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ball_sums_match_direct_loop() {
        let g = Grid::new(&[1.0, 0.7], &[11, 8]).unwrap();
        let f = |n: usize| (n as f64 * 0.37).sin();
        let sums = BallSums::new(&g, f);
        for &c in &[0usize, 17, 40, 87] {
            for &r in &[0.05, 0.13, 0.4, 2.0] {
                let mut direct = 0.0;
                g.for_each_in_ball(c, r, |n| direct += g.weight(n) * f(n));
                assert!((sums.ball(&g, c, r) - direct).abs() < 1e-12);
            }
        }
    }
}
