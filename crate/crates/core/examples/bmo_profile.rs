//! BMO seminorm, local radii and a Campanato seminorm for a kinked profile.

use std::sync::Arc;

use coupled_lab::analysis::{
    bmo_norm, bmo_seminorm, campanato_seminorm, local_bmo_profile, BallFamily,
};
use coupled_lab::grid::{Grid, GridFunction};

fn main() -> coupled_lab::Result<()> {
    for n in [65, 129, 257] {
        let grid = Arc::new(Grid::unit_interval(n)?);
        let family = BallFamily::dyadic(&grid);
        let u = GridFunction::scalar(grid.clone(), |x| (x[0] - 0.3).abs().ln().max(-6.0));
        let profile = local_bmo_profile(&u, 0.1, &family)?;
        let positive: Vec<f64> = profile
            .iter()
            .map(|r| r.radius)
            .filter(|&r| r > 0.0)
            .collect();
        let smallest = positive.iter().copied().fold(f64::INFINITY, f64::min);
        println!(
            "n={n:<4} [u]={:.4} ||u||={:.4} campanato(2,1)={:.4} R(0.1) > 0 at {}/{} nodes, min {smallest:.4}",
            bmo_seminorm(&u, &family)?,
            bmo_norm(&u, &family)?,
            campanato_seminorm(&u, 2.0, 1.0, &family)?,
            positive.len(),
            profile.len(),
        );
    }
    Ok(())
}
