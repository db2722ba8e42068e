//! Q(v)Va near a three-point corner converges to the limit bundle.

use vrnbw::kernels::{
    corner_perturbation, deviation, stationary_expansion_check, taylor_limit_at_corner,
};
use vrnbw::measures::sup_distance;

fn main() -> vrnbw::Result<()> {
    let (n, alpha) = (5, 1.5);
    let corner = [1, 2, 4];
    let a = [0.3, -1.0, 0.5, 2.0, 0.7];
    let limit = taylor_limit_at_corner(corner, &a)?;
    for eps in [1e-2, 1e-3, 1e-4] {
        let v = corner_perturbation(corner, n, eps, &[1.0, 2.0, 1.5], &[1.0, 3.0])?;
        let q = deviation(&v, alpha, &a)?;
        let exp = stationary_expansion_check(&v, alpha)?;
        println!(
            "eps {eps:.0e}: |Q V a - limit| = {:.3e}, pi_ij {:.2e}, pi_il {:.2e}, pi_lm {:.2e}",
            sup_distance(&q, &limit),
            exp.pi_ij,
            exp.pi_il_relative,
            exp.pi_lm
        );
    }
    Ok(())
}
