//! The iteration lemma's constant as ε grows, and a synthetic worst case.

use coupled_lab::analysis::{iteration_bound, synthetic_instance};

fn main() -> coupled_lab::Result<()> {
    let (alpha, rho, r) = (2.0, 0.5, 1.0);
    let g = |t: f64| 1.0 + t * t;
    let h = |t: f64| 0.1 * t;
    println!(
        "{:>5} {:>10} {:>7} {:>10} {:>10}",
        "eps", "c", "nu", "f(rho)", "bound"
    );
    for eps in [0.0, 0.1, 0.25, 0.5, 0.75, 0.9] {
        let b = iteration_bound(alpha, eps, g(r), h(r), rho, r)?;
        let inst = synthetic_instance(alpha, eps, g, h, 5.0, rho, r, 64)?;
        println!(
            "{eps:>5} {:>10.4} {:>7.4} {:>10.4} {:>10.4}",
            b.c, b.nu, inst.f[0], b.bound
        );
    }
    Ok(())
}
