use crate::error::{LabError, Result};
use crate::grid::Grid;

/// Finite set of balls `Ω(x, r)` over which suprema are taken: every
/// center paired with every radius.
#[derive(Clone, Debug, PartialEq)]
pub struct BallFamily {
    centers: Vec<usize>,
    radii: Vec<f64>,
}

impl BallFamily {
    pub fn new(centers: Vec<usize>, radii: Vec<f64>) -> Result<Self> {
        if centers.is_empty() || radii.is_empty() {
            return Err(LabError::InvalidArgument(
                "ball family needs at least one center and one radius".into(),
            ));
        }
        if radii[0] <= 0.0
            || radii.windows(2).any(|w| w[1] <= w[0])
            || radii.iter().any(|r| !r.is_finite())
        {
            return Err(LabError::InvalidArgument(format!(
                "radii must be positive and strictly increasing: {radii:?}"
            )));
        }
        Ok(BallFamily { centers, radii })
    }

    /// All nodes as centers, radii `h, 2h, 4h, …` below the diameter, then
    /// the diameter itself.
    pub fn dyadic(grid: &Grid) -> Self {
        BallFamily {
            centers: (0..grid.len()).collect(),
            radii: dyadic_radii(grid),
        }
    }

    /// Dyadic radii on the sub-lattice of nodes whose indices are multiples
    /// of `stride` on every axis.
    pub fn dyadic_strided(grid: &Grid, stride: usize) -> Self {
        BallFamily {
            centers: strided_centers(grid, stride),
            radii: dyadic_radii(grid),
        }
    }

    /// Radii `step, 2·step, …` up to and including `max`.
    pub fn uniform(grid: &Grid, step: f64, max: f64) -> Result<Self> {
        if !(step > 0.0) || max < step {
            return Err(LabError::InvalidArgument(format!(
                "bad radius range step={step} max={max}"
            )));
        }
        let count = (max / step + 1e-9).floor() as usize;
        let radii = (1..=count).map(|k| k as f64 * step).collect();
        BallFamily::new((0..grid.len()).collect(), radii)
    }

    pub fn with_centers(self, centers: Vec<usize>) -> Result<Self> {
        BallFamily::new(centers, self.radii)
    }

    pub fn with_radii(self, radii: Vec<f64>) -> Result<Self> {
        BallFamily::new(self.centers, radii)
    }

    pub fn centers(&self) -> &[usize] {
        &self.centers
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn len(&self) -> usize {
        self.centers.len() * self.radii.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub(crate) fn check_grid(&self, grid: &Grid) -> Result<()> {
        if let Some(&c) = self.centers.iter().find(|&&c| c >= grid.len()) {
            return Err(LabError::InvalidArgument(format!(
                "family center {c} outside grid of {} nodes",
                grid.len()
            )));
        }
        Ok(())
    }
}

fn dyadic_radii(grid: &Grid) -> Vec<f64> {
    let h = grid.min_spacing();
    let diam = grid.diameter();
    let mut radii = Vec::new();
    let mut r = h;
    while r < diam * (1.0 - 1e-12) {
        radii.push(r);
        r *= 2.0;
    }
    radii.push(diam);
    radii
}

pub(crate) fn strided_centers(grid: &Grid, stride: usize) -> Vec<usize> {
    let stride = stride.max(1);
    (0..grid.len())
        .filter(|&n| {
            let idx = grid.multi_index(n);
            (0..grid.dim()).all(|d| idx[d].is_multiple_of(stride))
        })
        .collect()
}
