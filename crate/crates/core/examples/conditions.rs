//! Structural condition reports for every built-in model.

use coupled_lab::model::{
    builtin, check_uniform_ellipticity, max_admissible_p, ratio_report, structural_constants,
    xi_samples,
};

fn main() -> coupled_lab::Result<()> {
    for name in [
        "heat",
        "anisotropic",
        "power_lambda(2)",
        "power_lambda(4)",
        "skt2",
    ] {
        let model = builtin(name)?;
        let us = model.sample_box.samples(256, 0);
        let a1 = check_uniform_ellipticity(&model, &us, &xi_samples(2 * model.m, 256, 0), 2);
        println!("{name}");
        println!(
            "  A1 pass={} lambda_min={:.4}",
            a1.pass, a1.constants["lambda_min"]
        );
        match structural_constants(&model, &us, 2) {
            Ok(k) => println!("  k1={:.4} k2={:.4}", k.k1, k.k2),
            Err(e) => println!("  structural constants: {e}"),
        }
        for n in [2, 3, 4] {
            let r = ratio_report(&model, n, &us)?;
            println!("  n={n} s={:.4} delta={:.4} pass={}", r.s, r.delta, r.pass);
        }
        let p = max_admissible_p(&model, &us, 3)?;
        println!("  n=3 p_max={:?} chi0={:?}", p.p_max, p.chi0);
    }
    Ok(())
}
