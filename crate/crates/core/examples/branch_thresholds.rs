//! Thresholds beta_M and beta_{K,M}, and the number of two-level
//! equilibria as beta crosses them.

use vrnbw::equilibria::{beta_threshold, count_d, BranchFunction};

fn main() -> vrnbw::Result<()> {
    for (k, m) in [(1, 4), (2, 5), (3, 6), (3, 7), (3, 8), (4, 7)] {
        let shape = BranchFunction::new(k, m)?.shape();
        let t = beta_threshold(k, m)?;
        print!("(K, M) = ({k}, {m}) {shape:?}: beta_M = {:.4}", t.beta_m);
        if let Some(b) = t.beta_km {
            print!(", beta_KM = {b:.6}");
        }
        println!();

        let counts: Vec<usize> = (1..10)
            .map(|i| {
                let beta = i as f64 / 10.0;
                count_d(k, m, 1.0 / (1.0 - beta))
            })
            .collect::<vrnbw::Result<_>>()?;
        println!("  D at beta = 0.1..0.9: {counts:?}");
    }
    Ok(())
}
