//! Monte Carlo histogram of the support size on K_6 for a few alphas.

use vrnbw::experiment::admissible_bound;
use vrnbw::walk::{monte_carlo_localization, LocalizationConfig};

fn main() -> vrnbw::Result<()> {
    let n = 6;
    for alpha in [1.5, 2.0, 4.0] {
        let cfg = LocalizationConfig {
            alpha,
            n,
            steps: 50_000,
            runs: 40,
            window: 1_000,
            seed: 2024,
        };
        let report = monte_carlo_localization(&cfg)?;
        let hist = report.histogram();
        println!(
            "alpha {alpha}: |S| in 3..={n} -> {:?}  (admissible K < {:.3})",
            &hist[3..],
            admissible_bound(alpha)
        );
    }
    Ok(())
}
