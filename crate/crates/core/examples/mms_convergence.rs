//! Manufactured solution `u*(x,t) = 2 + e^{−t} cos(πx)` for
//! `u_t = ((1+u)² u_x)_x + s` with coefficients frozen at `u*`. Prints the
//! observed orders in `τ` and in `h`.

use std::f64::consts::PI;
use std::sync::Arc;

use coupled_lab::grid::{BoundaryKind, Grid, GridFunction};
use coupled_lab::model::builtin;
use coupled_lab::scheme::{solve_linearized, SchemeConfig, Trajectory};

fn exact(x: f64, t: f64) -> f64 {
    2.0 + (-t).exp() * (PI * x).cos()
}

fn source(x: f64, t: f64) -> f64 {
    let e = (-t).exp();
    let u = exact(x, t);
    let ut = -e * (PI * x).cos();
    let ux = -PI * e * (PI * x).sin();
    let uxx = -PI * PI * e * (PI * x).cos();
    ut - (2.0 * (1.0 + u) * ux * ux + (1.0 + u).powi(2) * uxx)
}

fn error(n: usize, tau: f64, t_final: f64) -> coupled_lab::Result<f64> {
    let grid = Arc::new(Grid::unit_interval(n)?.with_bc(vec![BoundaryKind::Neumann]));
    let config = SchemeConfig {
        t_final,
        tau,
        source: Some(Arc::new(|x, t, out| out[0] = source(x[0], t))),
        ..Default::default()
    };
    let times = config.times();
    let states: Vec<GridFunction> = times
        .iter()
        .map(|&t| GridFunction::scalar(grid.clone(), |x| exact(x[0], t)))
        .collect();
    let frozen = Trajectory::new(times, states)?;
    let traj = solve_linearized(
        &builtin("power_lambda(2)")?,
        &frozen,
        frozen.initial(),
        &config,
    )?;
    Ok(traj.max_abs_diff(&frozen))
}

fn main() -> coupled_lab::Result<()> {
    println!("time refinement, h = 1/1024");
    let mut prev = None;
    for tau in [0.02, 0.01, 0.005, 0.0025] {
        let e = error(1025, tau, 0.2)?;
        let order = prev.map(|p: f64| (p / e).log2());
        println!(
            "  tau={tau:<8} err={e:.4e} order={}",
            order.map_or("-".into(), |o| format!("{o:.3}"))
        );
        prev = Some(e);
    }
    println!("space refinement, tau = 1e-5");
    let mut prev = None;
    for n in [9, 17, 33, 65] {
        let e = error(n, 1e-5, 0.01)?;
        let order = prev.map(|p: f64| (p / e).log2());
        println!(
            "  h=1/{:<5} err={e:.4e} order={}",
            n - 1,
            order.map_or("-".into(), |o| format!("{o:.3}"))
        );
        prev = Some(e);
    }
    Ok(())
}
