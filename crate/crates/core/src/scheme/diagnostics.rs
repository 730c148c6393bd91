use rayon::prelude::*;
use serde::Serialize;

use super::trajectory::Trajectory;
use crate::analysis::{oscillation_table, profile_from_table, sobolev_norm, BallFamily};
use crate::error::{LabError, Result};
use crate::grid::{gradient, second_derivatives, GridFunction};
use crate::model::{uf_ratio, ModelSpec};

/// Monitors of one time slice of one outer iterate.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SliceDiagnostics {
    pub t: f64,
    pub bmo_norm: f64,
    /// Smallest, over family centers, of the largest radius with local
    /// seminorm below `ε`.
    pub local_bmo_r: f64,
    /// Against the previous iterate on the same slice.
    pub uf_ratio: f64,
    pub w1n_norm: f64,
    /// `∫_Ω |Du|^{2p}`.
    pub energy_2p: f64,
    /// Set when the slice carries a non-finite value.
    pub flag: bool,
}

/// Everything recorded for one outer iterate `u_k`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiagnosticsReport {
    pub k: usize,
    /// `max_{x,t} |u_k − u_{k−1}|`.
    pub increment_sup: f64,
    pub slices: Vec<SliceDiagnostics>,
    /// Running `C(T)`: largest slice BMO norm over all iterates so far.
    pub bmo_bound: f64,
    /// Running `R(ε, T)`: smallest slice radius over all iterates so far.
    pub local_radius: f64,
    /// Largest slice `uf_ratio` of this iterate.
    pub uf_max: f64,
    pub sup_energy_2p: f64,
    /// `∫∫ λ(u_{k−1}) |Du_k|^{2p−2} |D²u_k|²`.
    pub d2_energy: f64,
    /// `∫∫ |A_u(u_{k−1})|² / λ(u_{k−1}) |Du_k|^{2p+2}`.
    pub i1_sum: f64,
    pub p: f64,
    /// Trajectory truncated by a failed step.
    pub truncated: bool,
    /// Heuristic `W^{1,n}` growth flag.
    pub monitor_flag: bool,
}

/// Per-node space-time integrands of the energy estimate for the pair
/// `(u_{k−1}, u_k)` on one slice.
struct EnergyDensities {
    grad_2p: Vec<f64>,
    lambda_grad_2p: Vec<f64>,
    d2: Vec<f64>,
    i1: Vec<f64>,
}

fn densities(
    model: &ModelSpec,
    prev: &GridFunction,
    cur: &GridFunction,
    p: f64,
) -> EnergyDensities {
    let dim = cur.grid().dim();
    let du = gradient(cur);
    let d2u = second_derivatives(cur);
    let n = cur.grid().len();
    let mut out = EnergyDensities {
        grad_2p: Vec::with_capacity(n),
        lambda_grad_2p: Vec::with_capacity(n),
        d2: Vec::with_capacity(n),
        i1: Vec::with_capacity(n),
    };
    for node in 0..n {
        let w = prev.at(node);
        let lam = model.lambda(w);
        let g = du.norm_at(node);
        let h = d2u.norm_at(node);
        let g2p = g.powf(2.0 * p);
        let g2p2 = if p == 1.0 { 1.0 } else { g.powf(2.0 * p - 2.0) };
        out.grad_2p.push(g2p);
        out.lambda_grad_2p.push(lam * g2p);
        out.d2.push(lam * g2p2 * h * h);
        out.i1
            .push(model.a_u_norm(w, dim).powi(2) / lam * g2p * g * g);
    }
    out
}

fn integrate(f: &GridFunction, vals: &[f64], nodes: Option<&[usize]>) -> f64 {
    let grid = f.grid();
    match nodes {
        Some(nodes) => nodes.iter().map(|&n| grid.weight(n) * vals[n]).sum(),
        None => (0..grid.len()).map(|n| grid.weight(n) * vals[n]).sum(),
    }
}

pub(crate) struct DiagnoseInput<'a> {
    pub model: &'a ModelSpec,
    pub prev: &'a Trajectory,
    pub cur: &'a Trajectory,
    pub k: usize,
    pub p: f64,
    pub eps: f64,
    pub family: &'a BallFamily,
    pub thresholds: (f64, f64),
    pub running: Option<&'a DiagnosticsReport>,
}

pub(crate) fn diagnose(inp: &DiagnoseInput<'_>) -> Result<DiagnosticsReport> {
    let (model, prev, cur, p) = (inp.model, inp.prev, inp.cur, inp.p);
    let n = cur.grid().dim();
    let times = cur.times();
    let slices: Vec<(SliceDiagnostics, f64, f64)> = (0..cur.len())
        .into_par_iter()
        .map(|j| -> Result<(SliceDiagnostics, f64, f64)> {
            let u = cur.state(j);
            let w = prev.state(j.min(prev.len() - 1));
            if !u.is_finite() {
                let nan = f64::NAN;
                let s = SliceDiagnostics {
                    t: times[j],
                    bmo_norm: nan,
                    local_bmo_r: nan,
                    uf_ratio: nan,
                    w1n_norm: nan,
                    energy_2p: nan,
                    flag: true,
                };
                return Ok((s, 0.0, 0.0));
            }
            let table = oscillation_table(u, inp.family)?;
            let profile = profile_from_table(u.grid(), &table, inp.eps);
            let local = profile
                .iter()
                .map(|r| r.radius)
                .fold(f64::INFINITY, f64::min);
            let dens = densities(model, w, u, p);
            let s = SliceDiagnostics {
                t: times[j],
                bmo_norm: u.integral_pow(1.0) + table.max(),
                local_bmo_r: local,
                uf_ratio: uf_ratio(model, u, w)?,
                w1n_norm: sobolev_norm(u, n as f64)?,
                energy_2p: integrate(u, &dens.grad_2p, None),
                flag: false,
            };
            Ok((
                s,
                integrate(u, &dens.d2, None),
                integrate(u, &dens.i1, None),
            ))
        })
        .collect::<Result<_>>()?;
    let mut d2_energy = 0.0;
    let mut i1_sum = 0.0;
    for (j, (_, d2, i1)) in slices.iter().enumerate().skip(1) {
        let dt = times[j] - times[j - 1];
        d2_energy += dt * d2;
        i1_sum += dt * i1;
    }
    let slices: Vec<SliceDiagnostics> = slices.into_iter().map(|s| s.0).collect();
    let finite = |f: fn(&SliceDiagnostics) -> f64| slices.iter().filter(|s| !s.flag).map(f);
    let mut bmo_bound = finite(|s| s.bmo_norm).fold(0.0, f64::max);
    let mut local_radius = finite(|s| s.local_bmo_r).fold(f64::INFINITY, f64::min);
    if let Some(r) = inp.running {
        bmo_bound = bmo_bound.max(r.bmo_bound);
        local_radius = local_radius.min(r.local_radius);
    }
    let monitor = blowup_monitor_with(cur, n, inp.thresholds.0, inp.thresholds.1);
    Ok(DiagnosticsReport {
        k: inp.k,
        increment_sup: cur.max_abs_diff(prev),
        uf_max: finite(|s| s.uf_ratio).fold(f64::NEG_INFINITY, f64::max),
        sup_energy_2p: finite(|s| s.energy_2p).fold(0.0, f64::max),
        slices,
        bmo_bound,
        local_radius,
        d2_energy,
        i1_sum,
        p,
        truncated: cur.blowup.is_some(),
        monitor_flag: monitor.flag,
    })
}

/// Both sides of the local energy estimate for the last iterate of
/// `iterates` (`iterates[i] = u_i`, `iterates[0] = u₀`).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnergyRecord {
    pub k: usize,
    pub p: f64,
    /// `sup_t ∫_{B_ρ} |Du_k|^{2p}`.
    pub sup_energy: f64,
    /// `∫∫_{Q_ρ} λ(u_{k−1}) |Du_k|^{2p−2} |D²u_k|²`.
    pub d2_energy: f64,
    /// `∫∫_{Q_R} λ(u₁)|Du₂|^{2p−2}|D²u₂|² + |A_u(u₁)|²/λ(u₁) |Du₂|^{2p+2}`.
    pub reference: f64,
    /// `max_{i≤k} ∫∫_{Q_R} λ(u_{i−1}) |Du_i|^{2p}`.
    pub max_lambda_energy: f64,
    pub lhs: f64,
    /// `reference + (R−ρ)^{−2} max_lambda_energy`.
    pub rhs: f64,
    /// `lhs / rhs`; zero when both sides vanish.
    pub c1: f64,
}

/// Evaluates the energy estimate on the balls `B_ρ ⊂ B_R` around `center`,
/// time integrals by the right-endpoint rule. With fewer than three
/// iterates the reference pair is the last available one.
pub fn energy_diagnostics(
    model: &ModelSpec,
    iterates: &[Trajectory],
    p: f64,
    center: usize,
    rho: f64,
    r: f64,
) -> Result<EnergyRecord> {
    if !(rho > 0.0 && rho < r) {
        return Err(LabError::BadAnnulus {
            inner: rho,
            outer: r,
        });
    }
    if iterates.len() < 2 {
        return Err(LabError::InvalidArgument(
            "energy diagnostics need u_0 and at least one iterate".into(),
        ));
    }
    if !(p >= 1.0) {
        return Err(LabError::InvalidArgument(format!(
            "p = {p} must be at least 1"
        )));
    }
    let grid = iterates[0].grid().clone();
    let inner = grid.region(center, rho)?.nodes;
    let outer = grid.region(center, r)?.nodes;
    let k = iterates.len() - 1;

    // (sup_t ∫_ρ |Du|^{2p}, ∫∫_ρ d2, ∫∫_R (d2 + i1), ∫∫_R λ|Du|^{2p}) for one pair
    let pair = |prev: &Trajectory, cur: &Trajectory| -> [f64; 4] {
        let times = cur.times();
        let per: Vec<[f64; 4]> = (0..cur.len())
            .into_par_iter()
            .map(|j| {
                let u = cur.state(j);
                let d = densities(model, prev.state(j.min(prev.len() - 1)), u, p);
                let ref_density: Vec<f64> = d.d2.iter().zip(&d.i1).map(|(a, b)| a + b).collect();
                [
                    integrate(u, &d.grad_2p, Some(&inner)),
                    integrate(u, &d.d2, Some(&inner)),
                    integrate(u, &ref_density, Some(&outer)),
                    integrate(u, &d.lambda_grad_2p, Some(&outer)),
                ]
            })
            .collect();
        let mut acc = [0.0f64; 4];
        acc[0] = per.iter().map(|v| v[0]).fold(0.0, f64::max);
        for j in 1..per.len() {
            let dt = times[j] - times[j - 1];
            for q in 1..4 {
                acc[q] += dt * per[j][q];
            }
        }
        acc
    };

    let last = pair(&iterates[k - 1], &iterates[k]);
    let (rp, rc) = if k >= 2 { (1, 2) } else { (k - 1, k) };
    let reference = pair(&iterates[rp], &iterates[rc])[2];
    let mut max_lambda = last[3];
    for i in 1..k {
        max_lambda = max_lambda.max(pair(&iterates[i - 1], &iterates[i])[3]);
    }
    let lhs = last[0] + last[1];
    let rhs = reference + max_lambda / (r - rho).powi(2);
    Ok(EnergyRecord {
        k,
        p,
        sup_energy: last[0],
        d2_energy: last[1],
        reference,
        max_lambda_energy: max_lambda,
        lhs,
        rhs,
        c1: if lhs == 0.0 { 0.0 } else { lhs / rhs },
    })
}

/// Slice `W^{1,n}` norms with the blow-up heuristic.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BlowupMonitor {
    pub times: Vec<f64>,
    pub norms: Vec<f64>,
    /// Least-squares slope of `ln N` against `ln t` over the last quarter of
    /// slices with `t > 0`.
    pub exponent: Option<f64>,
    pub flag: bool,
}

/// [`blowup_monitor_with`] at the default thresholds (exponent 1, ceiling
/// 1e6).
pub fn blowup_monitor(traj: &Trajectory, n: usize) -> BlowupMonitor {
    blowup_monitor_with(traj, n, 1.0, 1e6)
}

/// Flags when the fitted growth exponent exceeds `exponent`, a norm
/// exceeds `ceiling` or is not finite, or the trajectory was truncated.
pub fn blowup_monitor_with(
    traj: &Trajectory,
    n: usize,
    exponent: f64,
    ceiling: f64,
) -> BlowupMonitor {
    let q = n.max(1) as f64;
    let norms: Vec<f64> = traj
        .states()
        .par_iter()
        .map(|u| sobolev_norm(u, q).unwrap_or(f64::NAN))
        .collect();
    let times = traj.times()[..norms.len()].to_vec();
    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(&norms)
        .filter(|(t, v)| **t > 0.0 && **v > 0.0 && v.is_finite())
        .map(|(t, v)| (t.ln(), v.ln()))
        .collect();
    let tail = &pts[pts.len() - pts.len().div_ceil(4).max(2).min(pts.len())..];
    let fitted = (tail.len() >= 2).then(|| {
        let len = tail.len() as f64;
        let mx = tail.iter().map(|p| p.0).sum::<f64>() / len;
        let my = tail.iter().map(|p| p.1).sum::<f64>() / len;
        let sxy: f64 = tail.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = tail.iter().map(|p| (p.0 - mx).powi(2)).sum();
        if sxx > 0.0 {
            sxy / sxx
        } else {
            0.0
        }
    });
    let flag = traj.blowup.is_some()
        || norms.iter().any(|v| !v.is_finite() || *v > ceiling)
        || fitted.is_some_and(|e| e > exponent);
    BlowupMonitor {
        times,
        norms,
        exponent: fitted,
        flag,
    }
}
