//! Backward-Euler step of the frozen-coefficient system
//! `(u^{j+1} − u^j)/τ = div_h(A(w) D_h u^{j+1}) + f(w, D_h u^{j+1})`, `w`
//! the previous outer iterate at `t_{j+1}`.
//!
//! Vertex-centred finite volumes: each node owns its trapezoid cell,
//! face fluxes use the mean of `A` at the two end nodes, normal
//! derivatives are two-point differences and tangential ones the mean of
//! the nodal central differences. Neumann faces carry no flux, so mass is
//! conserved exactly; Dirichlet rows keep the current boundary values.

use nalgebra::DMatrix;

use super::config::{FGradientMode, SchemeConfig};
use super::trajectory::Trajectory;
use crate::error::{LabError, Result};
use crate::grid::{gradient, BoundaryKind, Grid, GridFunction};
use crate::linalg::{bicgstab, BandedLu, CsrMatrix};
use crate::model::ModelSpec;

/// First-derivative stencil `(node, weight)` triple.
type Stencil3 = [(usize, f64); 3];

/// How the reaction depends on `p = Du` for one model.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum PDependence {
    None,
    Affine,
    General,
}

/// Probes `f` at `p = 0, p*, 2p*` for a few states `u`.
pub(crate) fn classify_reaction(model: &ModelSpec, states: &[&[f64]], dim: usize) -> PDependence {
    if !model.has_reaction() {
        return PDependence::None;
    }
    let m = model.m;
    let k = m * dim;
    let p1: Vec<f64> = (0..k).map(|i| 0.7 + 0.3 * i as f64).collect();
    let p2: Vec<f64> = p1.iter().map(|v| 2.0 * v).collect();
    let zero = vec![0.0; k];
    let (mut f0, mut f1, mut f2) = (vec![0.0; m], vec![0.0; m], vec![0.0; m]);
    let mut depends = false;
    for u in states {
        model.reaction(u, &zero, &mut f0);
        model.reaction(u, &p1, &mut f1);
        model.reaction(u, &p2, &mut f2);
        for c in 0..m {
            let scale = 1.0 + f0[c].abs() + f1[c].abs() + f2[c].abs();
            if (f2[c] - 2.0 * f1[c] + f0[c]).abs() > 1e-9 * scale {
                return PDependence::General;
            }
            if (f1[c] - f0[c]).abs() > 1e-14 * scale {
                depends = true;
            }
        }
    }
    if depends {
        PDependence::Affine
    } else {
        PDependence::None
    }
}

fn is_dirichlet(grid: &Grid, c: usize) -> bool {
    grid.bc().get(c) == Some(&BoundaryKind::Dirichlet)
}

/// Half the cell width along `axis` at `node`.
fn cell_width(grid: &Grid, node: usize, axis: usize) -> f64 {
    let i = grid.multi_index(node)[axis];
    let h = grid.spacing()[axis];
    if i == 0 || i + 1 == grid.shape()[axis] {
        0.5 * h
    } else {
        h
    }
}

fn axis_stride(grid: &Grid, axis: usize) -> usize {
    if axis == 0 {
        1
    } else {
        grid.shape()[0]
    }
}

pub(crate) struct StepInput<'a> {
    pub model: &'a ModelSpec,
    /// Coefficient state `w`.
    pub coeff: &'a GridFunction,
    pub u_now: &'a GridFunction,
    /// `Du` at which a lagged reaction is evaluated.
    pub lagged_du: Option<&'a GridFunction>,
    pub dt: f64,
    pub t_next: f64,
    pub p_dep: PDependence,
    pub config: &'a SchemeConfig,
}

/// Assembled system `M u^{j+1} = b`.
pub(crate) struct System {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    /// Rows that hold Dirichlet values rather than the balance law.
    pub fixed: Vec<bool>,
}

pub(crate) fn assemble(inp: &StepInput<'_>) -> System {
    let model = inp.model;
    let grid = inp.u_now.grid().clone();
    let (m, dim) = (model.m, grid.dim());
    let md = m * dim;
    let n_nodes = grid.len();
    let n = n_nodes * m;
    let poison = inp
        .config
        .inject_nan_after
        .is_some_and(|t0| inp.t_next > t0);
    let a_nodes: Vec<DMatrix<f64>> = (0..n_nodes)
        .map(|i| {
            let a = model.a_full(inp.coeff.at(i), dim);
            if poison {
                a.map(|_| f64::NAN)
            } else {
                a
            }
        })
        .collect();
    let mut trip: Vec<(usize, usize, f64)> =
        Vec::with_capacity(n * (1 + 2 * dim * m * (1 + 6 * (dim - 1))));
    let mut rhs = vec![0.0; n];
    let mut fixed = vec![false; n];
    let inv_dt = 1.0 / inp.dt;

    for i in 0..n_nodes {
        for c in 0..m {
            let row = i * m + c;
            if is_dirichlet(&grid, c) && grid.is_boundary(i) {
                fixed[row] = true;
                trip.push((row, row, 1.0));
                rhs[row] = inp.u_now.at(i)[c];
                continue;
            }
            trip.push((row, row, inv_dt));
            rhs[row] = inv_dt * inp.u_now.at(i)[c];
        }
    }

    // face fluxes: face between lo and hi = lo + e_d, oriented along +e_d
    for lo in 0..n_nodes {
        let idx = grid.multi_index(lo);
        for d in 0..dim {
            if idx[d] + 1 >= grid.shape()[d] {
                continue;
            }
            let hi = lo + axis_stride(&grid, d);
            let h = grid.spacing()[d];
            let a_face = (&a_nodes[lo] + &a_nodes[hi]) * 0.5;
            let (w_lo, w_hi) = (cell_width(&grid, lo, d), cell_width(&grid, hi, d));
            let tangential: Vec<(usize, Stencil3, Stencil3)> = (0..dim)
                .filter(|&e| e != d)
                .map(|e| {
                    (
                        e,
                        grid.first_derivative_stencil(lo, e),
                        grid.first_derivative_stencil(hi, e),
                    )
                })
                .collect();
            for c in 0..m {
                let r = c * dim + d;
                // flux F_c = Σ A[r, c'·dim + e] g_{c' e}; row lo gains +F/w_lo,
                // row hi gains −F/w_hi, moved to the left as −(...)
                let mut push = |node: usize, cp: usize, coef: f64| {
                    if coef == 0.0 {
                        return;
                    }
                    let col = node * m + cp;
                    let (rl, rh) = (lo * m + c, hi * m + c);
                    if !fixed[rl] {
                        trip.push((rl, col, -coef / w_lo));
                    }
                    if !fixed[rh] {
                        trip.push((rh, col, coef / w_hi));
                    }
                };
                for cp in 0..m {
                    let a_n = a_face[(r, cp * dim + d)];
                    push(hi, cp, a_n / h);
                    push(lo, cp, -a_n / h);
                    for (e, st_lo, st_hi) in &tangential {
                        let a_t = a_face[(r, cp * dim + e)];
                        if a_t == 0.0 {
                            continue;
                        }
                        for &(k, w) in st_lo.iter().chain(st_hi.iter()) {
                            push(k, cp, 0.5 * a_t * w);
                        }
                    }
                }
            }
        }
    }

    // reaction and source
    let mut f = vec![0.0; m];
    let mut f0 = vec![0.0; m];
    let mut pbuf = vec![0.0; md];
    let zero_p = vec![0.0; md];
    for i in 0..n_nodes {
        let w = inp.coeff.at(i);
        let implicit = inp.p_dep == PDependence::Affine
            && inp.config.f_gradient_mode == FGradientMode::Implicit;
        match inp.p_dep {
            PDependence::None => model.reaction(w, &zero_p, &mut f),
            _ if implicit => {
                model.reaction(w, &zero_p, &mut f0);
                f.copy_from_slice(&f0);
                // column l of J = f(w, e_l) − f(w, 0), exact for affine f
                for l in 0..md {
                    pbuf.iter_mut().for_each(|v| *v = 0.0);
                    pbuf[l] = 1.0;
                    let mut fl = vec![0.0; m];
                    model.reaction(w, &pbuf, &mut fl);
                    let (cp, e) = (l / dim, l % dim);
                    let st = grid.first_derivative_stencil(i, e);
                    for c in 0..m {
                        let jac = fl[c] - f0[c];
                        let row = i * m + c;
                        if jac == 0.0 || fixed[row] {
                            continue;
                        }
                        for &(k, sw) in &st {
                            if sw != 0.0 {
                                trip.push((row, k * m + cp, -jac * sw));
                            }
                        }
                    }
                }
            }
            _ => {
                let du = inp.lagged_du.expect("lagged reaction needs a gradient");
                model.reaction(w, du.at(i), &mut f);
            }
        }
        if let Some(src) = &inp.config.source {
            let x = grid.coord(i);
            let mut s = vec![0.0; m];
            src(&x, inp.t_next, &mut s);
            f.iter_mut().zip(&s).for_each(|(a, b)| *a += b);
        }
        for c in 0..m {
            let row = i * m + c;
            if !fixed[row] {
                rhs[row] += f[c];
            }
        }
    }
    System {
        matrix: CsrMatrix::from_triplets(n, trip),
        rhs,
        fixed,
    }
}

fn solve_system(
    sys: &System,
    guess: &[f64],
    config: &SchemeConfig,
    time_index: usize,
) -> Result<Vec<f64>> {
    let finite = sys.rhs.iter().all(|v| v.is_finite())
        && (0..sys.matrix.n()).all(|r| sys.matrix.row(r).all(|(_, v)| v.is_finite()));
    if !finite {
        return Err(LabError::BlowUpSuspected { time_index });
    }
    let n = sys.matrix.n();
    let (kl, ku) = sys.matrix.bandwidths();
    let x = if BandedLu::storage(n, kl, ku) <= config.direct_solver_limit {
        let lu = BandedLu::factor(&sys.matrix).ok_or(LabError::SolverFailed {
            time_index,
            residual: f64::INFINITY,
        })?;
        let mut x = sys.rhs.clone();
        lu.solve(&mut x);
        x
    } else {
        let mut x = guess.to_vec();
        bicgstab(
            &sys.matrix,
            &sys.rhs,
            &mut x,
            0.1 * config.linear_solver_tol,
            20 * n + 100,
        );
        x
    };
    let mut x = x;
    for (r, v) in x.iter_mut().enumerate() {
        if sys.fixed[r] {
            *v = sys.rhs[r];
        }
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(LabError::BlowUpSuspected { time_index });
    }
    // normwise backward error ‖Ax − b‖ / (‖A‖‖x‖ + ‖b‖)
    let inf = |v: &[f64]| v.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let scale = sys.matrix.norm_inf() * inf(&x) + inf(&sys.rhs);
    let res = sys.matrix.residual_inf(&x, &sys.rhs);
    let rel = if res == 0.0 {
        0.0
    } else {
        res / scale.max(f64::MIN_POSITIVE)
    };
    if !(rel <= config.linear_solver_tol) {
        return Err(LabError::SolverFailed {
            time_index,
            residual: rel,
        });
    }
    Ok(x)
}

pub(crate) fn reaction_dependence(model: &ModelSpec, field: &GridFunction) -> PDependence {
    let n = field.grid().len();
    let probes: Vec<&[f64]> = [0, n / 3, n / 2, n - 1]
        .iter()
        .map(|&i| field.at(i))
        .collect();
    classify_reaction(model, &probes, field.grid().dim())
}

/// `u_k(·, t_{j+1})` from `u_now = u_k(·, t_j)`, with coefficients frozen at
/// `u_prev.state(j+1)`.
pub fn linear_step(
    model: &ModelSpec,
    u_prev: &Trajectory,
    u_now: &GridFunction,
    j: usize,
    config: &SchemeConfig,
) -> Result<GridFunction> {
    if j + 1 >= u_prev.len() {
        return Err(LabError::InvalidArgument(format!(
            "time index {j} has no successor in a trajectory of {} slices",
            u_prev.len()
        )));
    }
    if u_now.m() != model.m || u_prev.m() != model.m || u_now.grid() != u_prev.grid() {
        return Err(LabError::ShapeMismatch(
            "model, trajectory and state disagree".into(),
        ));
    }
    u_now.grid().check_bound(model.m)?;
    let coeff = u_prev.state(j + 1);
    let times = u_prev.times();
    let p_dep = reaction_dependence(model, coeff);
    step_with(
        model,
        coeff,
        u_now,
        times[j + 1] - times[j],
        times[j + 1],
        j + 1,
        p_dep,
        config,
    )
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn step_with(
    model: &ModelSpec,
    coeff: &GridFunction,
    u_now: &GridFunction,
    dt: f64,
    t_next: f64,
    time_index: usize,
    p_dep: PDependence,
    config: &SchemeConfig,
) -> Result<GridFunction> {
    let lagged = p_dep == PDependence::General
        || (p_dep == PDependence::Affine && config.f_gradient_mode == FGradientMode::Lagged);
    let du_now = lagged.then(|| gradient(u_now));
    let mut inp = StepInput {
        model,
        coeff,
        u_now,
        lagged_du: du_now.as_ref(),
        dt,
        t_next,
        p_dep,
        config,
    };
    let sys = assemble(&inp);
    let x = solve_system(&sys, u_now.values(), config, time_index)?;
    let mut next = GridFunction::from_values(u_now.grid().clone(), model.m, x)
        .map_err(|_| LabError::BlowUpSuspected { time_index })?;
    if lagged {
        let du_next = gradient(&next);
        inp.lagged_du = Some(&du_next);
        let sys = assemble(&inp);
        let x = solve_system(&sys, next.values(), config, time_index)?;
        next = GridFunction::from_values(u_now.grid().clone(), model.m, x)
            .map_err(|_| LabError::BlowUpSuspected { time_index })?;
    }
    Ok(next)
}

/// `max |(u^j − u^{j−1})/τ − div_h(A(u^j) D_h u^j) − f(u^j, D_h u^j)|` over
/// all slices and non-Dirichlet rows: the residual of the nonlinear
/// discrete system at `traj`.
pub fn pde_residual(model: &ModelSpec, traj: &Trajectory, config: &SchemeConfig) -> Result<f64> {
    let times = traj.times();
    let mut worst = 0.0f64;
    let p_dep = reaction_dependence(model, traj.initial());
    for j in 1..traj.len() {
        let u = traj.state(j);
        let du = gradient(u);
        let inp = StepInput {
            model,
            coeff: u,
            u_now: traj.state(j - 1),
            lagged_du: Some(&du),
            dt: times[j] - times[j - 1],
            t_next: times[j],
            p_dep: if p_dep == PDependence::None {
                p_dep
            } else {
                PDependence::General
            },
            config,
        };
        let sys = assemble(&inp);
        let mut ax = vec![0.0; sys.matrix.n()];
        sys.matrix.mul_vec(u.values(), &mut ax);
        for (r, (a, b)) in ax.iter().zip(&sys.rhs).enumerate() {
            if !sys.fixed[r] {
                worst = worst.max((a - b).abs());
            }
        }
    }
    Ok(worst)
}
