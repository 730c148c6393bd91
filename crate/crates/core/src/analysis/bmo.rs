//! Mean-oscillation seminorms: BMO, its local profile, and Campanato.

use rayon::prelude::*;

use super::family::BallFamily;
use crate::error::{LabError, Result};
use crate::grid::{Grid, GridFunction};

/// Weighted mean of `u` over `Ω(center, radius)` written into `mean`;
/// returns the measure of the ball.
pub(crate) fn ball_mean(u: &GridFunction, center: usize, radius: f64, mean: &mut [f64]) -> f64 {
    let grid = u.grid();
    let m = u.m();
    let vals = u.values();
    // accumulate offsets from the centre value so constants are reproduced exactly
    let base = &vals[center * m..(center + 1) * m];
    mean.iter_mut().for_each(|v| *v = 0.0);
    let mut wsum = 0.0;
    grid.for_each_in_ball(center, radius, |n| {
        let w = grid.weight(n);
        wsum += w;
        for c in 0..m {
            mean[c] += w * (vals[n * m + c] - base[c]);
        }
    });
    mean.iter_mut()
        .zip(base)
        .for_each(|(v, b)| *v = b + *v / wsum);
    wsum
}

/// `(∫_B |u − u_B|^p, |B|)` over `B = Ω(center, radius)`.
pub(crate) fn ball_deviation(
    u: &GridFunction,
    center: usize,
    radius: f64,
    p: f64,
    mean: &mut [f64],
) -> (f64, f64) {
    let measure = ball_mean(u, center, radius, mean);
    let grid = u.grid();
    let m = u.m();
    let vals = u.values();
    let mut acc = 0.0;
    grid.for_each_in_ball(center, radius, |n| {
        let mut s = 0.0;
        for c in 0..m {
            let d = vals[n * m + c] - mean[c];
            s += d * d;
        }
        let dev = s.sqrt();
        acc += grid.weight(n) * if p == 1.0 { dev } else { dev.powf(p) };
    });
    (acc, measure)
}

/// Mean oscillation `⨍_B |u − u_B|` over `B = Ω(center, radius)`.
pub fn mean_oscillation(u: &GridFunction, center: usize, radius: f64) -> f64 {
    let mut mean = vec![0.0; u.m()];
    let (acc, measure) = ball_deviation(u, center, radius, 1.0, &mut mean);
    acc / measure
}

/// Mean oscillation of `u` for every ball of a family.
#[derive(Clone, Debug)]
pub struct OscillationTable {
    pub centers: Vec<usize>,
    pub radii: Vec<f64>,
    /// Row-major `[center][radius]`.
    pub osc: Vec<f64>,
}

impl OscillationTable {
    pub fn get(&self, center_idx: usize, radius_idx: usize) -> f64 {
        self.osc[center_idx * self.radii.len() + radius_idx]
    }

    pub fn max(&self) -> f64 {
        self.osc.iter().copied().fold(0.0, f64::max)
    }
}

pub fn oscillation_table(u: &GridFunction, family: &BallFamily) -> Result<OscillationTable> {
    family.check_grid(u.grid())?;
    let nr = family.radii().len();
    let osc: Vec<f64> = family
        .centers()
        .par_iter()
        .flat_map_iter(|&c| {
            let mut mean = vec![0.0; u.m()];
            family
                .radii()
                .iter()
                .map(|&r| {
                    let (acc, measure) = ball_deviation(u, c, r, 1.0, &mut mean);
                    acc / measure
                })
                .collect::<Vec<_>>()
        })
        .collect();
    debug_assert_eq!(osc.len(), family.centers().len() * nr);
    Ok(OscillationTable {
        centers: family.centers().to_vec(),
        radii: family.radii().to_vec(),
        osc,
    })
}

/// `[u]_BMO`: the largest mean oscillation over the family.
pub fn bmo_seminorm(u: &GridFunction, family: &BallFamily) -> Result<f64> {
    Ok(oscillation_table(u, family)?.max())
}

/// `‖u‖_BMO = ‖u‖_{L¹} + [u]_BMO`.
pub fn bmo_norm(u: &GridFunction, family: &BallFamily) -> Result<f64> {
    Ok(u.integral_pow(1.0) + bmo_seminorm(u, family)?)
}

fn distance(grid: &Grid, a: usize, b: usize) -> f64 {
    let (x, y) = (grid.coord(a), grid.coord(b));
    ((x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2)).sqrt()
}

/// Seminorm of `u` restricted to `Ω(center, radius)`: the largest mean
/// oscillation over family balls contained in that region, together with
/// the region itself.
pub fn restricted_seminorm(
    u: &GridFunction,
    family: &BallFamily,
    center: usize,
    radius: f64,
) -> Result<f64> {
    family.check_grid(u.grid())?;
    let grid = u.grid();
    let mut mean = vec![0.0; u.m()];
    let mut best = {
        let (acc, measure) = ball_deviation(u, center, radius, 1.0, &mut mean);
        acc / measure
    };
    for &y in family.centers() {
        let d = distance(grid, center, y);
        for &r in family.radii() {
            if d + r > radius * (1.0 + 1e-12) {
                break;
            }
            let (acc, measure) = ball_deviation(u, y, r, 1.0, &mut mean);
            best = best.max(acc / measure);
        }
    }
    Ok(best)
}

/// Largest family radius around one center whose restricted seminorm
/// stays below `eps` (zero if none does).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LocalRadius {
    pub center: usize,
    pub radius: f64,
}

/// For each family center, the largest family radius `R` with
/// restricted seminorm on `Ω(x, R)` below `eps`.
pub fn local_bmo_profile(
    u: &GridFunction,
    eps: f64,
    family: &BallFamily,
) -> Result<Vec<LocalRadius>> {
    if !(eps > 0.0) {
        return Err(LabError::InvalidArgument(format!(
            "eps = {eps} must be positive"
        )));
    }
    let table = oscillation_table(u, family)?;
    Ok(profile_from_table(u.grid(), &table, eps))
}

pub(crate) fn profile_from_table(
    grid: &Grid,
    table: &OscillationTable,
    eps: f64,
) -> Vec<LocalRadius> {
    let radii = &table.radii;
    let nr = radii.len();
    table
        .centers
        .par_iter()
        .map(|&x| {
            let mut contrib = vec![0.0f64; nr];
            for (b, &y) in table.centers.iter().enumerate() {
                let d = distance(grid, x, y);
                for (ri, &r) in radii.iter().enumerate() {
                    let need = (d + r) * (1.0 - 1e-12);
                    let Some(k) = radii.iter().position(|&rk| rk >= need) else {
                        break;
                    };
                    contrib[k] = contrib[k].max(table.get(b, ri));
                }
            }
            let mut running = 0.0f64;
            let mut radius = 0.0;
            for k in 0..nr {
                running = running.max(contrib[k]);
                if running < eps {
                    radius = radii[k];
                } else {
                    break;
                }
            }
            LocalRadius { center: x, radius }
        })
        .collect()
}

/// `[u]_{p,γ}` with `[u]_{p,γ}^p = sup ρ^{−γ} ∫_{Ω(x₀,ρ)} |u − u_{x₀,ρ}|^p`.
pub fn campanato_seminorm(
    u: &GridFunction,
    p: f64,
    gamma: f64,
    family: &BallFamily,
) -> Result<f64> {
    if !(p >= 1.0) || !(gamma > 0.0) {
        return Err(LabError::InvalidArgument(format!(
            "campanato needs p >= 1 and gamma > 0, got p={p} gamma={gamma}"
        )));
    }
    family.check_grid(u.grid())?;
    let sup = family
        .centers()
        .par_iter()
        .map(|&c| {
            let mut mean = vec![0.0; u.m()];
            family
                .radii()
                .iter()
                .map(|&r| ball_deviation(u, c, r, p, &mut mean).0 * r.powf(-gamma))
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max);
    Ok(sup.powf(1.0 / p))
}
