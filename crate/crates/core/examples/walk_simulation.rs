//! A single walk on K_6: occupation measure, detected support and the
//! occupation bound after every step.

use vrnbw::walk::{default_window, init_walk, run, Graph};

fn main() -> vrnbw::Result<()> {
    let n = 6;
    let mut state = init_walk(Graph::complete(n), 3.0, 7, None)?;
    let summary = run(&mut state, 200_000, 50_000, default_window(n))?;
    for s in &summary.snapshots {
        let occ: Vec<String> = s.occupation.iter().map(|x| format!("{x:.3}")).collect();
        println!(
            "step {:>6}  v = [{}]  S = {:?}",
            s.step,
            occ.join(", "),
            s.support
        );
    }
    println!("bound violations: {}", summary.bound_violations.len());

    // Non-complete graphs work too, as long as every degree is at least 2.
    let g = Graph::from_edges(5, &[(0, 1), (1, 2), (2, 0), (2, 3), (3, 4), (4, 2)])?;
    let mut bowtie = init_walk(g, 2.0, 1, Some(2))?;
    run(&mut bowtie, 10_000, 10_000, 500)?;
    println!("bowtie counts: {:?}", bowtie.counts());
    Ok(())
}
