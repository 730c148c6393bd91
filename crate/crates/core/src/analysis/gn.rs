//! Weighted Gagliardo–Nirenberg integrals and their ratios.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use super::bmo::restricted_seminorm;
use super::bmo_norm;
use super::family::BallFamily;
use crate::error::{LabError, Result};
use crate::grid::{gradient, second_derivatives, GridFunction, Region};

type ScalarFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// The weights `Φ`, `Φ₀` together with `k₁ = sup|Φ_u|/Φ` and
/// `k₂ = sup Φ/Φ₀`.
#[derive(Clone)]
pub struct GnWeights {
    phi: ScalarFn,
    phi0: ScalarFn,
    pub k1: f64,
    pub k2: f64,
}

impl fmt::Debug for GnWeights {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GnWeights")
            .field("k1", &self.k1)
            .field("k2", &self.k2)
            .finish_non_exhaustive()
    }
}

impl GnWeights {
    pub fn new(
        phi: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        phi0: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        k1: f64,
        k2: f64,
    ) -> Self {
        GnWeights {
            phi: Arc::new(phi),
            phi0: Arc::new(phi0),
            k1,
            k2,
        }
    }

    /// `Φ ≡ Φ₀ ≡ 1`, so `k₁ = 0` and `k₂ = 1`.
    pub fn unit() -> Self {
        GnWeights::new(|_| 1.0, |_| 1.0, 0.0, 1.0)
    }

    pub fn phi(&self, u: &[f64]) -> f64 {
        (self.phi)(u)
    }

    pub fn phi0(&self, u: &[f64]) -> f64 {
        (self.phi0)(u)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GnTerms {
    pub i1: f64,
    pub i1_hat: f64,
    pub i2: f64,
    pub p: f64,
}

/// Pointwise integrands at every node.
struct Integrands {
    /// `Φ²(u)|DU|^{2p+2}`
    i1: Vec<f64>,
    /// `Φ²(u)|Du|^{2p+2}`
    i1_hat: Vec<f64>,
    /// `Φ₀²(u)|DU|^{2p−2}|D²U|²`
    i2: Vec<f64>,
    /// `Φ²(u)|DU|^{2p}`
    cutoff: Vec<f64>,
}

fn integrands(
    u: &GridFunction,
    big_u: &GridFunction,
    weights: &GnWeights,
    p: f64,
) -> Result<Integrands> {
    if !(p >= 1.0) {
        return Err(LabError::InvalidArgument(format!(
            "p = {p} must be at least 1"
        )));
    }
    if u.grid() != big_u.grid() || u.m() != big_u.m() {
        return Err(LabError::ShapeMismatch(
            "u and U must share grid and component count".into(),
        ));
    }
    let du = gradient(u);
    let dbu = gradient(big_u);
    let d2bu = second_derivatives(big_u);
    let n = u.grid().len();
    let mut out = Integrands {
        i1: Vec::with_capacity(n),
        i1_hat: Vec::with_capacity(n),
        i2: Vec::with_capacity(n),
        cutoff: Vec::with_capacity(n),
    };
    for node in 0..n {
        let at = u.at(node);
        let phi2 = weights.phi(at).powi(2);
        let phi02 = weights.phi0(at).powi(2);
        let g = dbu.norm_at(node);
        let gu = du.norm_at(node);
        let h = d2bu.norm_at(node);
        out.i1.push(phi2 * g.powf(2.0 * p + 2.0));
        out.i1_hat.push(phi2 * gu.powf(2.0 * p + 2.0));
        let g_pow = if p == 1.0 { 1.0 } else { g.powf(2.0 * p - 2.0) };
        out.i2.push(phi02 * g_pow * h * h);
        out.cutoff.push(phi2 * g.powf(2.0 * p));
    }
    Ok(out)
}

fn integrate(u: &GridFunction, vals: &[f64], nodes: Option<&[usize]>) -> f64 {
    let grid = u.grid();
    match nodes {
        Some(nodes) => nodes.iter().map(|&n| grid.weight(n) * vals[n]).sum(),
        None => (0..grid.len()).map(|n| grid.weight(n) * vals[n]).sum(),
    }
}

/// `I₁`, `Î₁`, `I₂` over `region`, or over the whole domain when `None`.
pub fn gn_terms(
    u: &GridFunction,
    big_u: &GridFunction,
    weights: &GnWeights,
    p: f64,
    region: Option<&Region>,
) -> Result<GnTerms> {
    let f = integrands(u, big_u, weights, p)?;
    let nodes = region.map(|r| r.nodes.as_slice());
    Ok(GnTerms {
        i1: integrate(u, &f.i1, nodes),
        i1_hat: integrate(u, &f.i1_hat, nodes),
        i2: integrate(u, &f.i2, nodes),
        p,
    })
}

/// `I₁ / (‖U‖_BMO [k₁(I₁+Î₁) + k₂ √(I₁ I₂)])`, a lower witness for the
/// constant of the global inequality.
pub fn gn_global_ratio(
    u: &GridFunction,
    big_u: &GridFunction,
    weights: &GnWeights,
    p: f64,
    family: &BallFamily,
) -> Result<f64> {
    let t = gn_terms(u, big_u, weights, p, None)?;
    let bmo = bmo_norm(big_u, family)?;
    let denom = bmo * (weights.k1 * (t.i1 + t.i1_hat) + weights.k2 * (t.i1 * t.i2).sqrt());
    if !(denom > 0.0) || !denom.is_finite() {
        return Err(LabError::DegenerateInput(format!(
            "GN denominator is {denom} (I1 = {}, I2 = {}, BMO = {bmo})",
            t.i1, t.i2
        )));
    }
    Ok(t.i1 / denom)
}

/// Every right-hand term of the local inequality on concentric balls
/// `B_s ⊂ B_t`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GnLocalTerms {
    pub s: f64,
    pub t: f64,
    pub i1_s: f64,
    pub i1_t: f64,
    pub i1_hat_t: f64,
    pub i2_t: f64,
    /// `∫_{B_t} Φ²ψ²|DU|^{2p+2}` with the piecewise-linear radial cutoff.
    pub i1_cutoff: f64,
    /// `sup|Dψ|² ∫_{B_t} Φ²|DU|^{2p}` with `sup|Dψ| = 1/(t−s)`.
    pub cutoff_term: f64,
    /// `‖U‖_{BMO(B_t)}`.
    pub bmo_t: f64,
}

#[allow(clippy::too_many_arguments)]
pub fn gn_local_terms(
    u: &GridFunction,
    big_u: &GridFunction,
    weights: &GnWeights,
    p: f64,
    center: usize,
    s: f64,
    t: f64,
    family: &BallFamily,
) -> Result<GnLocalTerms> {
    if !(s > 0.0 && s < t) {
        return Err(LabError::BadAnnulus { inner: s, outer: t });
    }
    let grid = u.grid();
    let f = integrands(u, big_u, weights, p)?;
    let inner = grid.region(center, s)?;
    let outer = grid.region(center, t)?;
    let x0 = grid.coord(center);
    let slope = 1.0 / (t - s);
    let mut i1_cutoff = 0.0;
    let mut l1 = 0.0;
    for &n in &outer.nodes {
        let x = grid.coord(n);
        let r = ((x[0] - x0[0]).powi(2) + (x[1] - x0[1]).powi(2)).sqrt();
        let psi = ((t - r) * slope).clamp(0.0, 1.0);
        i1_cutoff += grid.weight(n) * psi * psi * f.i1[n];
        l1 += grid.weight(n) * big_u.norm_at(n);
    }
    let bmo_t = l1 + restricted_seminorm(big_u, family, center, t)?;
    Ok(GnLocalTerms {
        s,
        t,
        i1_s: integrate(u, &f.i1, Some(&inner.nodes)),
        i1_t: integrate(u, &f.i1, Some(&outer.nodes)),
        i1_hat_t: integrate(u, &f.i1_hat, Some(&outer.nodes)),
        i2_t: integrate(u, &f.i2, Some(&outer.nodes)),
        i1_cutoff,
        cutoff_term: slope * slope * integrate(u, &f.cutoff, Some(&outer.nodes)),
        bmo_t,
    })
}
