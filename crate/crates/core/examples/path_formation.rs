//! Lower bound on the probability of following a cycle forever, against a
//! Monte Carlo estimate.

use vrnbw::walk::{cycle_following_frequency, path_formation_lower_bound, Graph};

fn main() -> vrnbw::Result<()> {
    let graph = Graph::complete(4);
    let cycle = [0, 1, 2];
    for alpha in [1.0, 1.5, 2.0, 3.0] {
        let bound = path_formation_lower_bound(&graph, &cycle, alpha, 1_000_000)?;
        print!(
            "alpha {alpha}: first loop {:.4}, lower {:.6}",
            bound.first_loop, bound.lower
        );
        if let Some(d) = &bound.diagnostic {
            print!(" ({d})");
        } else {
            print!(", tail gap {:.1e}", bound.tail_gap);
        }
        let mc = cycle_following_frequency(&graph, &cycle, alpha, 50, 20_000, 3)?;
        println!(
            ", 50 loops in {:.4} +- {:.4} of runs",
            mc.frequency, mc.std_error
        );
    }
    Ok(())
}
