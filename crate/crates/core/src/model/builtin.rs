use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::sampling::SampleBox;
use super::{symmetric_eigen_range, ModelSpec};
use crate::error::{LabError, Result};

/// JSON description of the built-in model families.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum BuiltinModel {
    /// `A = I`, `f = 0`.
    Heat {},
    /// `m = 1`, `A = diag(a_x, a_y)` acting on `Du`.
    Anisotropic {
        #[serde(default = "default_aniso")]
        coefficients: Vec<f64>,
    },
    /// Two species, `P_i(u) = u_i(d_i + Σ_j a_ij u_j)`, `A = P_u`, and
    /// `f_i = u_i(r_i − Σ_j c_ij u_j)`.
    Skt2 {
        #[serde(default = "default_d")]
        d: [f64; 2],
        #[serde(default = "default_a")]
        a: [[f64; 2]; 2],
        #[serde(default = "default_r")]
        r: [f64; 2],
        #[serde(default = "default_c")]
        c: [[f64; 2]; 2],
    },
    /// `m = 1`, `A = λ = Λ = (1+|u|)^k`.
    PowerLambda { k: f64 },
}

fn default_aniso() -> Vec<f64> {
    vec![1.0, 2.0]
}
fn default_d() -> [f64; 2] {
    [1.0, 1.0]
}
fn default_a() -> [[f64; 2]; 2] {
    [[1.0, 0.5], [0.5, 1.0]]
}
fn default_r() -> [f64; 2] {
    [1.0, 1.0]
}
fn default_c() -> [[f64; 2]; 2] {
    [[1.0, 0.5], [0.5, 1.0]]
}

/// Parses `heat`, `anisotropic`, `skt2`, `power_lambda(k)` with default
/// parameters.
pub fn builtin(name: &str) -> Result<ModelSpec> {
    let name = name.trim();
    let model = match name {
        "heat" => BuiltinModel::Heat {},
        "anisotropic" => BuiltinModel::Anisotropic {
            coefficients: default_aniso(),
        },
        "skt2" => BuiltinModel::Skt2 {
            d: default_d(),
            a: default_a(),
            r: default_r(),
            c: default_c(),
        },
        _ => {
            let k = name
                .strip_prefix("power_lambda(")
                .and_then(|s| s.strip_suffix(')'))
                .and_then(|s| s.trim().parse::<f64>().ok())
                .ok_or_else(|| LabError::UnknownModel(name.to_string()))?;
            BuiltinModel::PowerLambda { k }
        }
    };
    model.build()
}

fn int_pow(base: f64, k: f64) -> f64 {
    if k.fract() == 0.0 && k.abs() < 64.0 {
        base.powi(k as i32)
    } else {
        base.powf(k)
    }
}

impl BuiltinModel {
    pub fn build(&self) -> Result<ModelSpec> {
        match self.clone() {
            BuiltinModel::Heat {} => {
                Ok(
                    ModelSpec::componentwise("heat", 1, |_| DMatrix::identity(1, 1))
                        .with_bounds(|_| 1.0, |_| 1.0)
                        .with_a_u(|_, _| vec![DMatrix::zeros(1, 1)])
                        .with_lambda0(1.0),
                )
            }
            BuiltinModel::Anisotropic { coefficients } => {
                if coefficients.is_empty()
                    || coefficients.iter().any(|c| !(*c > 0.0) || !c.is_finite())
                {
                    return Err(LabError::InvalidStructure(format!(
                        "anisotropic coefficients must be positive: {coefficients:?}"
                    )));
                }
                let lo = coefficients.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = coefficients.iter().copied().fold(0.0, f64::max);
                let cs = coefficients.clone();
                Ok(ModelSpec::full(
                    "anisotropic",
                    1,
                    move |_, dim| {
                        DMatrix::from_fn(
                            dim,
                            dim,
                            |i, j| if i == j { cs[i % cs.len()] } else { 0.0 },
                        )
                    },
                    move |_| lo,
                    move |_| hi,
                )
                .with_a_u(|_, dim| vec![DMatrix::zeros(dim, dim)])
                .with_lambda0(lo))
            }
            BuiltinModel::Skt2 { d, a, r, c } => {
                if d.iter().any(|v| !(*v > 0.0)) || a.iter().flatten().any(|v| !(*v >= 0.0)) {
                    return Err(LabError::InvalidStructure(
                        "skt2 needs d_i > 0 and a_ij >= 0".into(),
                    ));
                }
                let diffusion = move |u: &[f64]| {
                    DMatrix::from_fn(2, 2, |i, j| {
                        let diag = if i == j {
                            d[i] + a[i][0] * u[0] + a[i][1] * u[1]
                        } else {
                            0.0
                        };
                        diag + u[i] * a[i][j]
                    })
                };
                let sample_box = SampleBox::new(vec![0.0, 0.0], vec![10.0, 10.0])?;
                let mut model = ModelSpec::componentwise("skt2", 2, diffusion)
                    .with_a_u(move |_, _| {
                        // ∂A_ij/∂u_l = δ_ij a_il + δ_il a_ij
                        (0..2)
                            .map(|l| {
                                DMatrix::from_fn(2, 2, |i, j| {
                                    let mut v = 0.0;
                                    if i == j {
                                        v += a[i][l];
                                    }
                                    if i == l {
                                        v += a[i][j];
                                    }
                                    v
                                })
                            })
                            .collect()
                    })
                    .with_reaction(
                        move |u, _p, out| {
                            for i in 0..2 {
                                out[i] = u[i] * (r[i] - c[i][0] * u[0] - c[i][1] * u[1]);
                            }
                        },
                        2.0,
                    )
                    .with_box(sample_box.clone());
                let lambda0 = sample_box
                    .samples(256, 0)
                    .iter()
                    .map(|u| symmetric_eigen_range(&model.a_native(u, 1)).0)
                    .fold(f64::INFINITY, f64::min);
                model.lambda0 = lambda0;
                Ok(model)
            }
            BuiltinModel::PowerLambda { k } => {
                if !(k >= 0.0) || !k.is_finite() {
                    return Err(LabError::InvalidStructure(format!(
                        "power_lambda needs k >= 0, got {k}"
                    )));
                }
                let power = move |u: &[f64]| int_pow(1.0 + u[0].abs(), k);
                Ok(
                    ModelSpec::componentwise(format!("power_lambda({k})"), 1, move |u| {
                        DMatrix::from_element(1, 1, power(u))
                    })
                    .with_bounds(power, power)
                    .with_a_u(move |u, _| {
                        let v = k * int_pow(1.0 + u[0].abs(), k - 1.0) * u[0].signum();
                        vec![DMatrix::from_element(1, 1, v)]
                    })
                    .with_lambda0(1.0),
                )
            }
        }
    }
}
