//! All equilibria on K_7 at alpha = 1.5, with their spectra.

use vrnbw::equilibria::{classify_stability, enumerate_equilibria, uniform_spectrum};

fn main() -> vrnbw::Result<()> {
    let (n, alpha) = (7, 1.5);
    for rec in enumerate_equilibria(n, alpha)? {
        let (k, m) = rec.kind.profile();
        let report = classify_stability(&rec)?;
        let spectrum: Vec<String> = report
            .eigenvalues
            .iter()
            .map(|g| format!("{:.4}x{}", g.value, g.multiplicity))
            .collect();
        println!(
            "{:<9} K={k} M={m} p={:.4} orbit={:<4} {:<8} [{}]",
            rec.kind.label(),
            rec.p,
            rec.orbit_size,
            report.classification.label(),
            spectrum.join(" ")
        );
    }

    let (on, off) = uniform_spectrum(4, alpha);
    println!("uniform on 4 vertices: {on:.4} on the support, {off:.4} off it");
    Ok(())
}
