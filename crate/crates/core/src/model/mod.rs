//! System coefficients `A`, `f`, `λ`, `Λ` and the structural checks on them.

mod builtin;
mod conditions;
mod sampling;

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};

pub use builtin::{builtin, BuiltinModel};
pub use conditions::{
    check_growth, check_uniform_ellipticity, check_weight_condition, hat_lambda, max_admissible_p,
    ratio_report, structural_constants, uf_ratio, AdmissibleP, ConditionId, ConditionReport,
    RatioReport, StructuralConstants, Witness,
};
pub use sampling::{xi_samples, SampleBox};

use crate::analysis::GnWeights;

type MatFn = Arc<dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync>;
type FullMatFn = Arc<dyn Fn(&[f64], usize) -> DMatrix<f64> + Send + Sync>;
type TensorFn = Arc<dyn Fn(&[f64], usize) -> Vec<DMatrix<f64>> + Send + Sync>;
type ReactionFn = Arc<dyn Fn(&[f64], &[f64], &mut [f64]) + Send + Sync>;
type ScalarFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// How `A(u)` acts on `Du ∈ ℝ^{m·dim}`.
#[derive(Clone)]
pub enum Diffusion {
    /// `m × m` matrix applied as `A(u) ⊗ I_dim`.
    Componentwise(MatFn),
    /// Full `(m·dim) × (m·dim)` block, given the spatial dimension.
    Full(FullMatFn),
}

/// Coefficient bundle of `u_t = div(A(u)Du) + f(u, Du)`.
#[derive(Clone)]
pub struct ModelSpec {
    pub name: String,
    pub m: usize,
    diffusion: Diffusion,
    a_u: Option<TensorFn>,
    reaction: Option<ReactionFn>,
    lambda: ScalarFn,
    big_lambda: ScalarFn,
    pub lambda0: f64,
    /// Growth exponent `b` of the reaction.
    pub b: f64,
    pub sample_box: SampleBox,
}

impl fmt::Debug for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ModelSpec")
            .field("name", &self.name)
            .field("m", &self.m)
            .field("lambda0", &self.lambda0)
            .field("b", &self.b)
            .field("sample_box", &self.sample_box)
            .finish_non_exhaustive()
    }
}

/// Eigenvalue range of the symmetric part of `a`.
pub fn symmetric_eigen_range(a: &DMatrix<f64>) -> (f64, f64) {
    let sym = (a + a.transpose()) * 0.5;
    let ev = SymmetricEigen::new(sym).eigenvalues;
    let lo = ev.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = ev.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (lo, hi)
}

fn kron_identity(a: &DMatrix<f64>, dim: usize) -> DMatrix<f64> {
    let m = a.nrows();
    DMatrix::from_fn(m * dim, m * dim, |r, c| {
        if r % dim == c % dim {
            a[(r / dim, c / dim)]
        } else {
            0.0
        }
    })
}

impl ModelSpec {
    /// A model with `m×m` componentwise diffusion, no reaction, and `λ`, `Λ`
    /// taken from the symmetric part of `A(u)`.
    pub fn componentwise(
        name: impl Into<String>,
        m: usize,
        a: impl Fn(&[f64]) -> DMatrix<f64> + Send + Sync + 'static,
    ) -> Self {
        let a: MatFn = Arc::new(a);
        let (al, ah) = (a.clone(), a.clone());
        ModelSpec {
            name: name.into(),
            m,
            diffusion: Diffusion::Componentwise(a),
            a_u: None,
            reaction: None,
            lambda: Arc::new(move |u| symmetric_eigen_range(&al(u)).0),
            big_lambda: Arc::new(move |u| symmetric_eigen_range(&ah(u)).1),
            lambda0: 0.0,
            b: 1.0,
            sample_box: SampleBox::symmetric(m, 10.0),
        }
    }

    /// A model whose `(m·dim)²` diffusion block is given directly.
    pub fn full(
        name: impl Into<String>,
        m: usize,
        a: impl Fn(&[f64], usize) -> DMatrix<f64> + Send + Sync + 'static,
        lambda: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        big_lambda: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        ModelSpec {
            name: name.into(),
            m,
            diffusion: Diffusion::Full(Arc::new(a)),
            a_u: None,
            reaction: None,
            lambda: Arc::new(lambda),
            big_lambda: Arc::new(big_lambda),
            lambda0: 0.0,
            b: 1.0,
            sample_box: SampleBox::symmetric(m, 10.0),
        }
    }

    pub fn with_bounds(
        mut self,
        lambda: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        big_lambda: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        self.lambda = Arc::new(lambda);
        self.big_lambda = Arc::new(big_lambda);
        self
    }

    /// Reaction `f(u, p, out)` with `p = Du` laid out as `c·dim + d`.
    pub fn with_reaction(
        mut self,
        f: impl Fn(&[f64], &[f64], &mut [f64]) + Send + Sync + 'static,
        b: f64,
    ) -> Self {
        self.reaction = Some(Arc::new(f));
        self.b = b;
        self
    }

    /// Analytic `∂A/∂u_c` for each component, in the native shape of `A`.
    pub fn with_a_u(
        mut self,
        a_u: impl Fn(&[f64], usize) -> Vec<DMatrix<f64>> + Send + Sync + 'static,
    ) -> Self {
        self.a_u = Some(Arc::new(a_u));
        self
    }

    pub fn with_lambda0(mut self, lambda0: f64) -> Self {
        self.lambda0 = lambda0;
        self
    }

    pub fn with_box(mut self, sample_box: SampleBox) -> Self {
        self.sample_box = sample_box;
        self
    }

    pub fn diffusion(&self) -> &Diffusion {
        &self.diffusion
    }

    /// `true` when `A` acts on `Du` as `A(u) ⊗ I_dim`.
    pub fn is_componentwise(&self) -> bool {
        matches!(self.diffusion, Diffusion::Componentwise(_))
    }

    /// `A(u)` in its native shape (`m×m`, or `(m·dim)²` for full models).
    pub fn a_native(&self, u: &[f64], dim: usize) -> DMatrix<f64> {
        match &self.diffusion {
            Diffusion::Componentwise(a) => a(u),
            Diffusion::Full(a) => a(u, dim),
        }
    }

    /// The `(m·dim)×(m·dim)` block acting on `Du`.
    pub fn a_full(&self, u: &[f64], dim: usize) -> DMatrix<f64> {
        match &self.diffusion {
            Diffusion::Componentwise(a) => kron_identity(&a(u), dim),
            Diffusion::Full(a) => a(u, dim),
        }
    }

    /// `∂A/∂u_c`, `c = 0..m`, analytic if supplied, else central differences
    /// with step `1e−5·(1+|u|)`.
    pub fn a_u(&self, u: &[f64], dim: usize) -> Vec<DMatrix<f64>> {
        if let Some(a_u) = &self.a_u {
            return a_u(u, dim);
        }
        let step = 1e-5 * (1.0 + norm(u));
        let mut v = u.to_vec();
        (0..self.m)
            .map(|c| {
                v[c] = u[c] + step;
                let plus = self.a_native(&v, dim);
                v[c] = u[c] - step;
                let minus = self.a_native(&v, dim);
                v[c] = u[c];
                (plus - minus) / (2.0 * step)
            })
            .collect()
    }

    /// Frobenius norm of the derivative tensor `A_u(u)`.
    pub fn a_u_norm(&self, u: &[f64], dim: usize) -> f64 {
        self.a_u(u, dim)
            .iter()
            .map(|d| d.norm_squared())
            .sum::<f64>()
            .sqrt()
    }

    pub fn lambda(&self, u: &[f64]) -> f64 {
        (self.lambda)(u)
    }

    pub fn big_lambda(&self, u: &[f64]) -> f64 {
        (self.big_lambda)(u)
    }

    /// `Φ₀ = λ^{1/2}`.
    pub fn phi0(&self, u: &[f64]) -> f64 {
        self.lambda(u).sqrt()
    }

    /// `Φ = |A_u| / λ^{1/2}`.
    pub fn phi(&self, u: &[f64], dim: usize) -> f64 {
        self.a_u_norm(u, dim) / self.phi0(u)
    }

    pub fn has_reaction(&self) -> bool {
        self.reaction.is_some()
    }

    /// `f(u, p)` into `out`; zero when the model has no reaction.
    pub fn reaction(&self, u: &[f64], p: &[f64], out: &mut [f64]) {
        match &self.reaction {
            Some(f) => f(u, p, out),
            None => out.iter_mut().for_each(|v| *v = 0.0),
        }
    }

    /// GN weights `Φ`, `Φ₀` of this model with `k₁`, `k₂` sampled on `samples`.
    pub fn gn_weights(&self, samples: &[Vec<f64>], dim: usize) -> crate::Result<GnWeights> {
        let k = structural_constants(self, samples, dim)?;
        let (a, b) = (self.clone(), self.clone());
        Ok(GnWeights::new(
            move |u| a.phi(u, dim),
            move |u| b.phi0(u),
            k.k1,
            k.k2,
        ))
    }
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}
