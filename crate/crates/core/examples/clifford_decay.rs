//! Identity-equivalent Clifford sequences: survival of |0...0⟩ against
//! sequence length, raw and extrapolated.

use zne_lab::experiments::exact_zne;
use zne_lab::gates::GateTiming;
use zne_lab::protocols::random_identity_clifford_circuit;
use zne_lab::{NoiseModel, PauliSum, StretchSet};

fn main() -> zne_lab::Result<()> {
    let n = 1;
    // ground population = (1 + Z) / 2
    let obs = PauliSum::from_pairs(&[(0.5, "I"), (0.5, "Z")])?;
    let noise = NoiseModel::uniform(n, 5_000.0, 10_000.0);
    let stretch = StretchSet::new(vec![1.0, 2.0])?;
    println!("length  raw      mitigated");
    for length in [1, 5, 10, 20, 40] {
        let (mut raw, mut mit) = (0.0, 0.0);
        let seeds = 8;
        for seed in 0..seeds {
            let c = random_identity_clifford_circuit(n, length, seed, &GateTiming::default())?;
            let est = exact_zne(&c, &obs, &noise, &stretch)?;
            raw += est.raw().estimate / seeds as f64;
            mit += est.value / seeds as f64;
        }
        println!("{length:>6}  {raw:.5}  {mit:.5}");
    }
    Ok(())
}
