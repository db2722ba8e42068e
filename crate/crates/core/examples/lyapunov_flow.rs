//! Integrates the mean-field flow from a random point and watches H grow.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use vrnbw::flow::{integrate_flow, lyapunov, lyapunov_gradient, vector_field, FlowConfig};
use vrnbw::measures::sample_sigma_interior;

fn main() -> vrnbw::Result<()> {
    let alpha = 2.0;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let v0 = sample_sigma_interior(7, &mut rng);

    let grad = lyapunov_gradient(v0.values(), alpha)?;
    let f = vector_field(v0.values(), alpha)?;
    let dot: f64 = grad.iter().zip(&f).map(|(g, x)| g * x).sum();
    println!(
        "H(v0) = {:.6e}, <grad H, F> = {:.3e}",
        lyapunov(v0.values(), alpha),
        dot
    );

    let cfg = FlowConfig {
        max_time: 40.0,
        record_every: 400,
        ..FlowConfig::default()
    };
    let traj = integrate_flow(v0.values(), alpha, &cfg)?;
    for (t, (h, norm)) in traj
        .times
        .iter()
        .zip(traj.lyapunov.iter().zip(&traj.field_norms))
    {
        println!("t = {t:>5.1}  H = {h:.6e}  |F| = {norm:.2e}");
    }
    let end: Vec<String> = traj
        .final_state()
        .iter()
        .map(|x| format!("{x:.4}"))
        .collect();
    println!(
        "converged: {}, final state [{}]",
        traj.converged,
        end.join(", ")
    );
    Ok(())
}
