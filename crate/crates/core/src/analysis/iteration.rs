//! The elementary iteration lemma: from `f(s) ≤ (t−s)^{−α} g(t) + h(t) + ε f(t)`
//! for all `ρ ≤ s < t ≤ R`, conclude `f(ρ) ≤ c(α, ε)[(R−ρ)^{−α} g(R) + h(R)]`.

use serde::Serialize;

use crate::error::{LabError, Result};

const NU_GRID: usize = 1024;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct IterationBound {
    /// `c(α, ε)`.
    pub c: f64,
    /// The minimizing `ν` (0 when `ε = 0`).
    pub nu: f64,
    pub bound: f64,
}

/// `c(α, ε) = min_ν (1−ν)^{−α}(1−ν^{−α}ε)^{−1}` over 1024 equispaced interior
/// points of `(ε^{1/α}, 1)`, and `bound = c·[(R−ρ)^{−α} g_R + h_R]`.
/// At `ε = 0` the infimum `c = 1` is returned.
pub fn iteration_bound(
    alpha: f64,
    eps: f64,
    g_r: f64,
    h_r: f64,
    rho: f64,
    r: f64,
) -> Result<IterationBound> {
    if eps >= 1.0 {
        return Err(LabError::ContractionViolated { eps });
    }
    if !(alpha > 0.0) || !(eps >= 0.0) || !(g_r >= 0.0) || !(h_r >= 0.0) || !(rho < r) {
        return Err(LabError::InvalidArgument(format!(
            "iteration lemma needs alpha > 0, eps >= 0, g, h >= 0 and rho < R; got alpha={alpha} eps={eps} g={g_r} h={h_r} rho={rho} R={r}"
        )));
    }
    let (c, nu) = if eps == 0.0 {
        (1.0, 0.0)
    } else {
        let lo = eps.powf(1.0 / alpha);
        (1..=NU_GRID)
            .map(|i| lo + (1.0 - lo) * i as f64 / (NU_GRID + 1) as f64)
            .map(|nu| ((1.0 - nu).powf(-alpha) / (1.0 - nu.powf(-alpha) * eps), nu))
            .filter(|(c, _)| c.is_finite() && *c > 0.0)
            .fold((f64::INFINITY, 0.0), |a, b| if b.0 < a.0 { b } else { a })
    };
    Ok(IterationBound {
        c,
        nu,
        bound: c * ((r - rho).powf(-alpha) * g_r + h_r),
    })
}

/// A function `f` on a grid of `[ρ, R]` that satisfies the lemma's
/// hypothesis at every pair of grid points, built backwards from `f(R)`.
#[derive(Clone, Debug)]
pub struct SyntheticInstance {
    pub points: Vec<f64>,
    pub f: Vec<f64>,
    pub g_r: f64,
    pub h_r: f64,
}

/// Largest `f` on the grid with `f(R) = f_r` and
/// `f(s_i) ≤ (s_j−s_i)^{−α} g(s_j) + h(s_j) + ε f(s_j)` for all `j > i`.
/// The grid is `n` equispaced points plus the geometric chain
/// `ρ + (1−ν)(1+ν+…+ν^{i−1})(R−ρ)` so that the lemma's own argument is
/// realisable on it.
#[allow(clippy::too_many_arguments)]
pub fn synthetic_instance(
    alpha: f64,
    eps: f64,
    g: impl Fn(f64) -> f64,
    h: impl Fn(f64) -> f64,
    f_r: f64,
    rho: f64,
    r: f64,
    n: usize,
) -> Result<SyntheticInstance> {
    let nu = iteration_bound(alpha, eps, g(r), h(r), rho, r)?.nu;
    let mut points: Vec<f64> = (0..n.max(2))
        .map(|i| rho + (r - rho) * i as f64 / (n.max(2) - 1) as f64)
        .collect();
    let mut t = rho;
    let mut step = (1.0 - nu) * (r - rho);
    while step > 1e-9 * (r - rho) && nu > 0.0 {
        t += step;
        step *= nu;
        if t < r {
            points.push(t);
        }
    }
    points.push(r);
    points.sort_by(|a, b| a.total_cmp(b));
    points.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * (r - rho));
    *points.last_mut().unwrap() = r;
    let k = points.len();
    let mut f = vec![0.0; k];
    f[k - 1] = f_r;
    for i in (0..k - 1).rev() {
        f[i] = ((i + 1)..k)
            .map(|j| {
                (points[j] - points[i]).powf(-alpha) * g(points[j]) + h(points[j]) + eps * f[j]
            })
            .fold(f64::INFINITY, f64::min);
    }
    Ok(SyntheticInstance {
        points,
        f,
        g_r: g(r),
        h_r: h(r),
    })
}
