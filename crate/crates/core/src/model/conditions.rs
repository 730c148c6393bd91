use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use super::{norm, ModelSpec};
use crate::analysis::{ap_constant, bmo_norm, BallFamily};
use crate::error::{LabError, Result};
use crate::grid::GridFunction;

const MARGIN: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ConditionId {
    A1,
    A2,
    A3,
    R,
    F,
    UF,
    V,
}

/// A sample point and the value computed there.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Witness {
    pub point: Vec<f64>,
    pub value: f64,
    pub violates: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConditionReport {
    pub condition: ConditionId,
    pub pass: bool,
    pub witnesses: Vec<Witness>,
    pub constants: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl ConditionReport {
    pub(crate) fn new(condition: ConditionId) -> Self {
        ConditionReport {
            condition,
            pass: true,
            witnesses: Vec::new(),
            constants: BTreeMap::new(),
            note: None,
        }
    }

    fn constant(mut self, key: &str, v: f64) -> Self {
        self.constants.insert(key.to_string(), v);
        self
    }

    pub fn violations(&self) -> impl Iterator<Item = &Witness> {
        self.witnesses.iter().filter(|w| w.violates)
    }
}

/// A.1: `λ(u)|ξ|² ≤ ⟨A(u)ξ, ξ⟩ ≤ Λ(u)|ξ|²` and `λ(u) ≥ λ₀` on every sample
/// pair. `ξ` lives in `ℝ^{m·dim}`. Reports the extreme Rayleigh quotients
/// and the sampled `C = sup Λ/λ`; failures carry the offending `(u, ξ)`.
pub fn check_uniform_ellipticity(
    model: &ModelSpec,
    u_samples: &[Vec<f64>],
    xi_samples: &[Vec<f64>],
    dim: usize,
) -> ConditionReport {
    struct Local {
        q_min: f64,
        q_max: f64,
        lam_min: f64,
        ratio: f64,
        bad: Vec<Witness>,
    }
    let k = model.m * dim;
    let per_sample: Vec<Local> = u_samples
        .par_iter()
        .map(|u| {
            let a = model.a_full(u, dim);
            let (lam, big) = (model.lambda(u), model.big_lambda(u));
            let mut loc = Local {
                q_min: f64::INFINITY,
                q_max: f64::NEG_INFINITY,
                lam_min: lam,
                ratio: big / lam,
                bad: Vec::new(),
            };
            if !(lam > 0.0) || lam < model.lambda0 * (1.0 - MARGIN) {
                loc.bad.push(Witness {
                    point: u.clone(),
                    value: lam,
                    violates: true,
                });
            }
            for xi in xi_samples.iter().filter(|x| x.len() == k) {
                let v = nalgebra::DVector::from_column_slice(xi);
                let q = v.dot(&(&a * &v)) / v.norm_squared();
                loc.q_min = loc.q_min.min(q);
                loc.q_max = loc.q_max.max(q);
                let tol = MARGIN * lam.abs().max(big.abs()).max(1.0);
                if q < lam - tol || q > big + tol {
                    let mut point = u.clone();
                    point.extend_from_slice(xi);
                    loc.bad.push(Witness {
                        point,
                        value: q,
                        violates: true,
                    });
                }
            }
            loc
        })
        .collect();
    let mut rep = ConditionReport::new(ConditionId::A1);
    let (mut q_min, mut q_max, mut lam_min, mut ratio) =
        (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, 0.0f64);
    for loc in per_sample {
        q_min = q_min.min(loc.q_min);
        q_max = q_max.max(loc.q_max);
        lam_min = lam_min.min(loc.lam_min);
        ratio = ratio.max(loc.ratio);
        rep.witnesses.extend(loc.bad);
    }
    rep.pass = rep.witnesses.is_empty() && !u_samples.is_empty();
    if xi_samples.iter().all(|x| x.len() != k) {
        rep.pass = false;
        rep.note = Some(format!("no direction of length {k} supplied"));
    }
    rep.constant("rayleigh_min", q_min)
        .constant("rayleigh_max", q_max)
        .constant("lambda_min", lam_min)
        .constant("lambda0", model.lambda0)
        .constant("c_big_over_small", ratio)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StructuralConstants {
    /// `sup |Φ_u| / Φ`.
    pub k1: f64,
    /// `sup Φ / Φ₀`.
    pub k2: f64,
    pub k1_at: Vec<f64>,
    pub k2_at: Vec<f64>,
}

impl StructuralConstants {
    pub fn report(&self) -> ConditionReport {
        let mut rep = ConditionReport::new(ConditionId::A2)
            .constant("k1", self.k1)
            .constant("k2", self.k2);
        rep.pass = self.k1.is_finite() && self.k2.is_finite();
        rep.witnesses = vec![
            Witness {
                point: self.k1_at.clone(),
                value: self.k1,
                violates: !self.k1.is_finite(),
            },
            Witness {
                point: self.k2_at.clone(),
                value: self.k2,
                violates: !self.k2.is_finite(),
            },
        ];
        rep
    }
}

/// Gradient of `Φ` in `u` by central differences with step `step_scale·(1+|u|)`.
fn phi_gradient_norm(model: &ModelSpec, u: &[f64], dim: usize, step_scale: f64) -> f64 {
    let step = step_scale * (1.0 + norm(u));
    let mut v = u.to_vec();
    let mut acc = 0.0;
    for c in 0..u.len() {
        v[c] = u[c] + step;
        let plus = model.phi(&v, dim);
        v[c] = u[c] - step;
        let minus = model.phi(&v, dim);
        v[c] = u[c];
        acc += ((plus - minus) / (2.0 * step)).powi(2);
    }
    acc.sqrt()
}

pub(crate) fn structural_constants_with_step(
    model: &ModelSpec,
    samples: &[Vec<f64>],
    dim: usize,
    step_scale: f64,
) -> Result<StructuralConstants> {
    if samples.is_empty() {
        return Err(LabError::InvalidArgument("no u samples".into()));
    }
    let vals: Vec<(f64, f64)> = samples
        .par_iter()
        .map(|u| {
            let phi = model.phi(u, dim);
            if !(phi > 0.0) || !phi.is_finite() {
                return Err(LabError::InvalidStructure(format!(
                    "Phi = {phi} at u = {u:?}"
                )));
            }
            Ok((
                phi_gradient_norm(model, u, dim, step_scale) / phi,
                phi / model.phi0(u),
            ))
        })
        .collect::<Result<_>>()?;
    // ties resolved by sample order so the result ignores evaluation order
    let arg = |f: &dyn Fn(&(f64, f64)) -> f64| {
        let mut best = 0;
        for i in 1..vals.len() {
            if f(&vals[i]) > f(&vals[best]) {
                best = i;
            }
        }
        best
    };
    let i1 = arg(&|v| v.0);
    let i2 = arg(&|v| v.1);
    Ok(StructuralConstants {
        k1: vals[i1].0,
        k2: vals[i2].1,
        k1_at: samples[i1].clone(),
        k2_at: samples[i2].clone(),
    })
}

/// A.2: sampled `k₁ = sup|Φ_u|/Φ` and `k₂ = sup Φ/Φ₀`, with `Φ_u` by central
/// differences at step `1e−5·(1+|u|)`.
pub fn structural_constants(
    model: &ModelSpec,
    samples: &[Vec<f64>],
    dim: usize,
) -> Result<StructuralConstants> {
    structural_constants_with_step(model, samples, dim, 1e-5)
}

/// A.3: `[Φ^{2/3}(u)]_{4/3}` and its `p`-version `[Φ^{2/(p+2)}(u)]_{p/(p+2)+1}`
/// for the field `u`, reported with `‖u‖_BMO`. A model with `Φ ≡ 0` on
/// the field makes every weighted integral vanish and passes trivially.
pub fn check_weight_condition(
    model: &ModelSpec,
    u_field: &GridFunction,
    family: &BallFamily,
    p: f64,
) -> Result<ConditionReport> {
    if !u_field.is_finite() {
        return Err(LabError::DegenerateInput("field is not finite".into()));
    }
    let dim = u_field.grid().dim();
    let phi = u_field.map_nodes(|u| model.phi(u, dim));
    let mut rep =
        ConditionReport::new(ConditionId::A3).constant("bmo_norm", bmo_norm(u_field, family)?);
    if phi.values().iter().all(|&v| v == 0.0) {
        rep.note = Some("Phi vanishes identically; weighted terms are zero".into());
        return Ok(rep.constant("phi_identically_zero", 1.0));
    }
    let a43 = ap_constant(&phi.map(|v| v.powf(2.0 / 3.0)), 4.0 / 3.0, family)?;
    let ap = ap_constant(
        &phi.map(|v| v.powf(2.0 / (p + 2.0))),
        p / (p + 2.0) + 1.0,
        family,
    )?;
    rep.pass = a43.is_finite() && ap.is_finite();
    let center = family.centers()[0];
    rep.witnesses.push(Witness {
        point: u_field.at(center).to_vec(),
        value: a43,
        violates: !a43.is_finite(),
    });
    Ok(rep
        .constant("a_4_3", a43)
        .constant("p", p)
        .constant("a_p", ap))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RatioReport {
    pub n: usize,
    /// `sup λ/Λ` over the samples.
    pub s: f64,
    /// `((n−2)/n)/s`.
    pub delta: f64,
    pub pass: bool,
    pub witness: Vec<f64>,
}

impl RatioReport {
    pub fn report(&self) -> ConditionReport {
        let mut rep = ConditionReport::new(ConditionId::R)
            .constant("n", self.n as f64)
            .constant("s", self.s)
            .constant("delta", self.delta);
        rep.pass = self.pass;
        rep.witnesses.push(Witness {
            point: self.witness.clone(),
            value: self.delta,
            violates: !self.pass,
        });
        rep
    }
}

fn sup_ratio(model: &ModelSpec, samples: &[Vec<f64>]) -> Result<(f64, Vec<f64>)> {
    let mut best = (f64::NEG_INFINITY, Vec::new());
    for u in samples {
        let r = model.lambda(u) / model.big_lambda(u);
        if r > best.0 {
            best = (r, u.clone());
        }
    }
    if !(best.0 > 0.0) || !best.0.is_finite() {
        return Err(LabError::InvalidStructure(format!(
            "sup lambda/Lambda = {}",
            best.0
        )));
    }
    Ok(best)
}

/// R): `δ = ((n−2)/n) / sup λ/Λ`; passes iff `δ < 1`.
pub fn ratio_report(model: &ModelSpec, n: usize, samples: &[Vec<f64>]) -> Result<RatioReport> {
    if n < 2 {
        return Err(LabError::InvalidArgument(format!(
            "ratio condition needs n >= 2, got {n}"
        )));
    }
    let (s, witness) = sup_ratio(model, samples)?;
    let delta = ((n as f64 - 2.0) / n as f64) / s;
    Ok(RatioReport {
        n,
        s,
        delta,
        pass: delta < 1.0 - MARGIN,
        witness,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AdmissibleP {
    pub s: f64,
    /// Strict upper bound `1/(1−s)`; `None` when unbounded (`s = 1`).
    pub p_max: Option<f64>,
    /// Smallest `k` with some `χ₀ ∈ (1, 1+2/n)`, `χ₀ᵏ < p_max`, `2χ₀ᵏ > n`.
    pub chain_k: Option<u32>,
    pub chi0: Option<f64>,
}

/// Largest energy exponent allowed by `(2p−2)/(2p) < sup λ/Λ`, and the
/// exponent chain `χ₀ᵏ` that reaches past `n/2`.
pub fn max_admissible_p(model: &ModelSpec, samples: &[Vec<f64>], n: usize) -> Result<AdmissibleP> {
    let (s, _) = sup_ratio(model, samples)?;
    Ok(admissible_from_ratio(s, n))
}

pub(crate) fn admissible_from_ratio(s: f64, n: usize) -> AdmissibleP {
    let s = s.min(1.0);
    let p_max = if s >= 1.0 - MARGIN {
        None
    } else {
        Some(1.0 / (1.0 - s))
    };
    let nf = n as f64;
    let mut out = AdmissibleP {
        s,
        p_max,
        chain_k: None,
        chi0: None,
    };
    for k in 1..=64u32 {
        let kf = k as f64;
        let lo = (nf / 2.0).powf(1.0 / kf).max(1.0);
        let hi = match p_max {
            Some(p) => (1.0 + 2.0 / nf).min(p.powf(1.0 / kf)),
            None => 1.0 + 2.0 / nf,
        };
        if hi - lo > MARGIN {
            out.chain_k = Some(k);
            out.chi0 = Some(0.5 * (lo + hi));
            break;
        }
    }
    out
}

/// `λ̂ = (1−δ_α²)λ` with `δ_α = (α/(2+α))·Λ/λ`.
pub fn hat_lambda(model: &ModelSpec, alpha: f64, u: &[f64]) -> Result<f64> {
    if !(alpha >= 0.0) {
        return Err(LabError::InvalidArgument(format!(
            "alpha = {alpha} must be nonnegative"
        )));
    }
    let (lam, big) = (model.lambda(u), model.big_lambda(u));
    let delta = alpha / (2.0 + alpha) * big / lam;
    if !(delta < 1.0 - MARGIN) {
        return Err(LabError::AlphaInadmissible { delta });
    }
    Ok((1.0 - delta * delta) * lam)
}

fn reaction_jacobians(model: &ModelSpec, u: &[f64], p: &[f64]) -> (DMatrix<f64>, DMatrix<f64>) {
    let m = model.m;
    let step_u = 1e-6 * (1.0 + norm(u));
    let step_p = 1e-6 * (1.0 + norm(p));
    let (mut plus, mut minus) = (vec![0.0; m], vec![0.0; m]);
    let mut fu = DMatrix::zeros(m, m);
    let mut v = u.to_vec();
    for c in 0..m {
        v[c] = u[c] + step_u;
        model.reaction(&v, p, &mut plus);
        v[c] = u[c] - step_u;
        model.reaction(&v, p, &mut minus);
        v[c] = u[c];
        for r in 0..m {
            fu[(r, c)] = (plus[r] - minus[r]) / (2.0 * step_u);
        }
    }
    let mut fp = DMatrix::zeros(m, p.len());
    let mut q = p.to_vec();
    for c in 0..p.len() {
        q[c] = p[c] + step_p;
        model.reaction(u, &q, &mut plus);
        q[c] = p[c] - step_p;
        model.reaction(u, &q, &mut minus);
        q[c] = p[c];
        for r in 0..m {
            fp[(r, c)] = (plus[r] - minus[r]) / (2.0 * step_p);
        }
    }
    (fu, fp)
}

/// F): the smallest `C` with `|f(u,p)| ≤ C(|p| + |u|^b + 1)` on the samples,
/// and the smallest `C` with `|f_p| ≤ C` and `|f_u| ≤ C(|u|^{b−1} + 1)`,
/// which gives `|Df| ≤ C|Dp| + C(|u|^{b−1}+1)|Du|`.
pub fn check_growth(
    model: &ModelSpec,
    u_samples: &[Vec<f64>],
    p_samples: &[Vec<f64>],
) -> ConditionReport {
    let b = model.b;
    let m = model.m;
    let rows: Vec<(f64, f64, Vec<f64>)> = u_samples
        .par_iter()
        .flat_map_iter(|u| {
            let mut out = vec![0.0; m];
            p_samples
                .iter()
                .map(|p| {
                    model.reaction(u, p, &mut out);
                    let nu = norm(u);
                    let c_f = norm(&out) / (norm(p) + nu.powf(b) + 1.0);
                    let (fu, fp) = reaction_jacobians(model, u, p);
                    let c_df = fp.norm().max(fu.norm() / (nu.powf(b - 1.0) + 1.0));
                    let mut point = u.clone();
                    point.extend_from_slice(p);
                    (c_f, c_df, point)
                })
                .collect::<Vec<_>>()
        })
        .collect();
    let mut rep = ConditionReport::new(ConditionId::F);
    let (mut c_f, mut c_df) = (0.0f64, 0.0f64);
    let (mut at_f, mut at_df) = (Vec::new(), Vec::new());
    for (a, d, point) in rows {
        if !a.is_finite() || !d.is_finite() {
            rep.witnesses.push(Witness {
                point: point.clone(),
                value: if a.is_finite() { d } else { a },
                violates: true,
            });
        }
        if a > c_f || at_f.is_empty() {
            c_f = c_f.max(a);
            at_f = point.clone();
        }
        if d > c_df || at_df.is_empty() {
            c_df = c_df.max(d);
            at_df = point;
        }
    }
    rep.pass = rep.witnesses.is_empty();
    if rep.pass {
        rep.witnesses.push(Witness {
            point: at_f,
            value: c_f,
            violates: false,
        });
        rep.witnesses.push(Witness {
            point: at_df,
            value: c_df,
            violates: false,
        });
    }
    rep.constant("b", b)
        .constant("c_f", c_f)
        .constant("c_df", c_df)
        .constant("c", c_f.max(c_df))
}

/// V)/UF: `max_x min(Φ(u_new)/Φ(u_old), λ(u_new)/λ(u_old))`, the smallest
/// constant witnessing the ratio bound on this slice. `0/0` counts as 1.
pub fn uf_ratio(model: &ModelSpec, u_new: &GridFunction, u_old: &GridFunction) -> Result<f64> {
    if u_new.grid() != u_old.grid() || u_new.m() != u_old.m() || u_new.m() != model.m {
        return Err(LabError::ShapeMismatch(
            "uf_ratio needs matching fields".into(),
        ));
    }
    let dim = u_new.grid().dim();
    let quot = |a: f64, b: f64| if a == b { 1.0 } else { a / b };
    Ok((0..u_new.grid().len())
        .into_par_iter()
        .map(|n| {
            let (a, b) = (u_new.at(n), u_old.at(n));
            quot(model.phi(a, dim), model.phi(b, dim)).min(quot(model.lambda(a), model.lambda(b)))
        })
        .reduce(|| f64::NEG_INFINITY, f64::max))
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::grid::Grid;
    use crate::model::{builtin, xi_samples};

    #[test]
    fn heat_is_elliptic() {
        let m = builtin("heat").unwrap();
        let rep =
            check_uniform_ellipticity(&m, &m.sample_box.samples(8, 1), &xi_samples(2, 8, 2), 2);
        assert!(rep.pass);
        assert_eq!(rep.constants["rayleigh_min"], 1.0);
        assert_eq!(rep.constants["rayleigh_max"], 1.0);
    }

    #[test]
    fn nonsymmetric_block_fails_with_witness() {
        let m = ModelSpec::componentwise("shear", 2, |_| {
            DMatrix::from_row_slice(2, 2, &[1.0, 3.0, 0.0, 1.0])
        })
        .with_bounds(|_| 1.0, |_| 1.0);
        let rep = check_uniform_ellipticity(&m, &[vec![0.0, 0.0]], &xi_samples(2, 16, 0), 1);
        assert!(!rep.pass);
        let w = rep.violations().next().unwrap();
        let xi = &w.point[2..];
        let q = xi[0] * xi[0] + 3.0 * xi[0] * xi[1] + xi[1] * xi[1];
        assert!((q - w.value).abs() < 1e-12 && (q - 1.0).abs() > 1e-6);
    }

    #[test]
    fn power_lambda_two_constants() {
        let m = builtin("power_lambda(2)").unwrap();
        let k = structural_constants(&m, &m.sample_box.samples(64, 0), 1).unwrap();
        assert!(k.k1.abs() < 1e-6 && (k.k2 - 2.0).abs() < 1e-6, "{k:?}");
    }

    #[test]
    fn skt2_constants_survive_step_halving() {
        let m = builtin("skt2").unwrap();
        let s = m.sample_box.samples(128, 1);
        let a = structural_constants_with_step(&m, &s, 2, 1e-5).unwrap();
        let b = structural_constants_with_step(&m, &s, 2, 5e-6).unwrap();
        assert!(a.k1.is_finite() && a.k2.is_finite());
        assert!(
            (a.k1 - b.k1).abs() <= 0.01 * a.k1 && (a.k2 - b.k2).abs() <= 0.01 * a.k2,
            "{a:?} {b:?}"
        );
    }

    #[test]
    fn heat_has_no_structure() {
        let m = builtin("heat").unwrap();
        assert!(matches!(
            structural_constants(&m, &[vec![0.0]], 1),
            Err(LabError::InvalidStructure(_))
        ));
    }

    #[test]
    fn ratio_and_chain_arithmetic() {
        let with_s = |s: f64| {
            ModelSpec::componentwise("c", 1, |_| DMatrix::identity(1, 1))
                .with_bounds(move |_| s, |_| 1.0)
        };
        let pts = [vec![0.0]];
        assert_eq!(ratio_report(&with_s(0.3), 2, &pts).unwrap().delta, 0.0);
        let r = ratio_report(&with_s(0.5), 3, &pts).unwrap();
        assert!((r.delta - 2.0 / 3.0).abs() < 1e-15 && r.pass);
        let r = ratio_report(&with_s(0.4), 4, &pts).unwrap();
        assert!((r.delta - 1.25).abs() < 1e-15 && !r.pass);
        let a = max_admissible_p(&with_s(0.9), &pts, 2).unwrap();
        assert!((a.p_max.unwrap() - 10.0).abs() < 1e-12);
        assert_eq!(a.chain_k, Some(1));
        let a = max_admissible_p(&with_s(0.55), &pts, 3).unwrap();
        let (k, chi) = (a.chain_k.unwrap() as i32, a.chi0.unwrap());
        assert!(
            chi > 1.0
                && chi < 5.0 / 3.0
                && 2.0 * chi.powi(k) > 3.0
                && chi.powi(k) < a.p_max.unwrap()
        );
        assert_eq!(max_admissible_p(&with_s(1.0), &pts, 7).unwrap().p_max, None);
    }

    #[test]
    fn hat_lambda_values() {
        let heat = builtin("heat").unwrap();
        assert!((hat_lambda(&heat, 2.0, &[0.0]).unwrap() - 0.75).abs() < 1e-15);
        assert_eq!(hat_lambda(&heat, 0.0, &[0.0]).unwrap(), 1.0);
        let half = heat.clone().with_bounds(|_| 1.0, |_| 2.0);
        assert!(matches!(
            hat_lambda(&half, 2.0, &[0.0]),
            Err(LabError::AlphaInadmissible { .. })
        ));
    }

    #[test]
    fn growth_fits() {
        let heat = builtin("heat").unwrap();
        let us = heat.sample_box.samples(8, 0);
        let ps = crate::model::SampleBox::symmetric(1, 5.0).samples(8, 1);
        let rep = check_growth(&heat, &us, &ps);
        assert!(rep.pass && rep.constants["c"] == 0.0);
        let lin = heat.clone().with_reaction(|_, p, out| out[0] = p[0], 1.0);
        let rep = check_growth(&lin, &us, &ps);
        assert!(rep.pass && (rep.constants["c"] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn uf_closed_form() {
        let g = Arc::new(Grid::unit_interval(9).unwrap());
        let m = builtin("power_lambda(2)").unwrap();
        let zero = GridFunction::zeros(g.clone(), 1);
        let one = GridFunction::constant(g.clone(), &[1.0]);
        assert_eq!(uf_ratio(&m, &one, &zero).unwrap(), 1.0);
        assert_eq!(uf_ratio(&m, &one, &one).unwrap(), 1.0);
        let heat = builtin("heat").unwrap();
        assert_eq!(uf_ratio(&heat, &one, &zero).unwrap(), 1.0);
    }
}
