//! Builds the edge kernel P(v) on K_5, solves for its invariant measure,
//! compares with the closed form and checks the pseudo-inverse identities.

use vrnbw::kernels::{
    build_vrnbw_kernel, deviation, indecomposability_check, pseudo_inverse, stationary_closed_form,
    stationary_solve, vertex_marginal,
};
use vrnbw::ProbabilityMeasure;

fn main() -> vrnbw::Result<()> {
    let alpha = 2.0;
    let v = ProbabilityMeasure::from_weights(vec![3.0, 2.5, 2.0, 1.5, 1.0])?;
    let p = build_vrnbw_kernel(&v, alpha)?;
    println!(
        "indecomposable: {}",
        indecomposability_check(&p).is_indecomposable()
    );

    let solved = stationary_solve(&p)?;
    let closed = stationary_closed_form(&v, alpha)?;
    println!(
        "|pi_solve - pi_closed| = {:.2e}",
        closed.edge.sup_distance(solved.values())
    );
    println!("pi^V = {:?}", vertex_marginal(solved.values(), v.dim()));

    let q = pseudo_inverse(&p, &closed.edge)?;
    let r = q.residuals(&p, &closed.edge);
    println!("Q residuals {:.2e}, condition {:.1}", r.max(), q.condition);

    // Q(v)Va for the indicator of vertex 0.
    let qva = deviation(&v, alpha, &[1.0, 0.0, 0.0, 0.0, 0.0])?;
    println!("Q V e_0 on the first edges: {:?}", &qva[..4]);
    Ok(())
}
