//! Membership in the constrained simplex and the Euclidean projection onto it.

use vrnbw::measures::{in_sigma, project_to_sigma};
use vrnbw::ProbabilityMeasure;

fn main() -> vrnbw::Result<()> {
    let points = [
        vec![0.25, 0.25, 0.25, 0.25],
        vec![1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 0.0],
        vec![0.7, 0.1, 0.1, 0.1],
        vec![0.4, 0.4, 0.2, 0.0],
    ];
    for p in points {
        let v = ProbabilityMeasure::new(p.clone())?;
        let proj = project_to_sigma(&p);
        println!(
            "{:?}: {:?}, projection {:?}, moved {:.4}",
            p,
            in_sigma(&v),
            proj.values(),
            proj.sup_distance(&p)
        );
    }
    Ok(())
}
