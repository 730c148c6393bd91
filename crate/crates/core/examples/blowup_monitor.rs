//! The blow-up heuristic on a decaying heat run and on a synthetic
//! `(T* − t)^{−1}` profile.

use std::f64::consts::PI;
use std::sync::Arc;

use coupled_lab::grid::{BoundaryKind, Grid, GridFunction};
use coupled_lab::model::builtin;
use coupled_lab::scheme::{blowup_monitor, solve_linearized, SchemeConfig, Trajectory};

fn main() -> coupled_lab::Result<()> {
    let grid = Arc::new(Grid::unit_interval(129)?.with_bc(vec![BoundaryKind::Neumann]));
    let config = SchemeConfig {
        t_final: 0.2,
        tau: 0.005,
        ..Default::default()
    };
    let u0 = GridFunction::scalar(grid.clone(), |x| (PI * x[0]).cos());
    let heat = solve_linearized(
        &builtin("heat")?,
        &Trajectory::constant(&u0, config.times()),
        &u0,
        &config,
    )?;
    let calm = blowup_monitor(&heat, 1);
    println!("heat:      exponent {:?} flag {}", calm.exponent, calm.flag);

    let t_star = 0.201;
    let times = config.times();
    let states = times
        .iter()
        .map(|&t| GridFunction::scalar(grid.clone(), |x| (PI * x[0]).cos() / (t_star - t)))
        .collect();
    let blow = blowup_monitor(&Trajectory::new(times, states)?, 1);
    println!("synthetic: exponent {:?} flag {}", blow.exponent, blow.flag);
    Ok(())
}
