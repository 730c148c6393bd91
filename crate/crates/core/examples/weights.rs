//! A_γ constants of power weights `|x − ⅓|^β`, which belong to A_γ on the
//! line exactly when `−1 < β < γ − 1`.

use std::sync::Arc;

use coupled_lab::analysis::{ap_constant, weight_power_check, BallFamily};
use coupled_lab::grid::{Grid, GridFunction};

fn main() -> coupled_lab::Result<()> {
    let gamma = 2.0;
    println!(
        "{:>6} {:>10} {:>10} {:>12}",
        "beta", "n=257", "n=1025", "[w^.5] <= "
    );
    for beta in [-0.9, -0.5, 0.0, 0.5, 0.9, 1.5] {
        let mut row = Vec::new();
        let mut check = (0.0, 0.0);
        for n in [257, 1025] {
            let grid = Arc::new(Grid::unit_interval(n)?);
            let family = BallFamily::dyadic(&grid);
            // 1/3 is never a node of a dyadic grid
            let w = GridFunction::scalar(grid, |x| (x[0] - 1.0 / 3.0).abs().powf(beta));
            row.push(ap_constant(&w, gamma, &family)?);
            check = weight_power_check(&w, 0.5, gamma, &family)?;
        }
        println!(
            "{beta:>6} {:>10.4} {:>10.4} {:>6.3}<={:.3}",
            row[0], row[1], check.0, check.1
        );
    }
    Ok(())
}
