//! Richardson weights for a few stretch sets, applied to a toy decay.

use zne_lab::zne::coefficients_for;
use zne_lab::{extrapolate, Measurement};

fn main() -> zne_lab::Result<()> {
    for set in [vec![1.0, 2.0], vec![1.0, 1.5, 2.0], vec![1.0, 2.0, 3.0, 4.0]] {
        let c = coefficients_for(&set)?;
        println!("{set:?}: gammas {:?} (condition {:.1})", c.gammas, c.condition_number);
    }

    // E(λ) = exp(-λ) with λ = 0.05, exact value 1
    let points: Vec<Measurement> = [1.0, 1.5, 2.0]
        .iter()
        .map(|&c: &f64| Measurement::new(c, (-0.05 * c).exp(), 1e-6))
        .collect();
    let est = extrapolate(&points)?;
    println!(
        "raw {:.6}, mitigated {:.6} ± {:.1e}, true 1",
        points[0].estimate,
        est.value,
        est.std_error()
    );
    Ok(())
}
