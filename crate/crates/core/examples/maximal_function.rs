//! Hardy–Littlewood maximal function of an indicator and the empirical
//! `L^q` bound under refinement.

use std::sync::Arc;

use coupled_lab::analysis::{hardy_littlewood_ratio, maximal_function, BallFamily};
use coupled_lab::grid::{Grid, GridFunction};

fn main() -> coupled_lab::Result<()> {
    for n in [129, 257, 513] {
        let grid = Arc::new(Grid::unit_interval(n)?);
        let family = BallFamily::dyadic(&grid);
        let f = GridFunction::scalar(grid.clone(), |x| if x[0] <= 0.5 { 1.0 } else { 0.0 });
        let mf = maximal_function(&f, &family);
        let ratios: Vec<String> = [1.5, 2.0, 4.0]
            .iter()
            .map(|&q| hardy_littlewood_ratio(&f, q, &family).map(|r| format!("q={q}:{r:.4}")))
            .collect::<Result<_, _>>()?;
        println!("n={n:<4} Mf(1)={:.4} {}", mf.at(n - 1)[0], ratios.join(" "));
    }
    Ok(())
}
