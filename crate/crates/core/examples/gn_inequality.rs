//! Weighted Gagliardo–Nirenberg ratios on the built-in test families, with
//! unit weights and with the weights of `power_lambda(4)`.

use std::sync::Arc;

use coupled_lab::analysis::{gn_global_ratio, BallFamily, GnWeights};
use coupled_lab::cli::gn_test_family;
use coupled_lab::grid::Grid;
use coupled_lab::model::builtin;

fn main() -> coupled_lab::Result<()> {
    let model = builtin("power_lambda(4)")?;
    let weighted = model.gn_weights(&model.sample_box.samples(256, 0), 2)?;
    for family_name in ["sine", "bump", "polynomial"] {
        for (n, stride) in [(33, 2), (65, 4)] {
            let grid = Arc::new(Grid::unit_square(n)?);
            let balls = BallFamily::dyadic_strided(&grid, stride);
            for (id, u) in gn_test_family(family_name, &grid)? {
                let unit = gn_global_ratio(&u, &u, &GnWeights::unit(), 2.0, &balls)?;
                let phi = gn_global_ratio(&u, &u, &weighted, 2.0, &balls)?;
                println!("{id:<14} n={n:<3} unit={unit:.4} power_lambda(4)={phi:.4}");
            }
        }
    }
    Ok(())
}
