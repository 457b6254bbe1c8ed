//! The 30-point rotation from |0⟩ to |1⟩, noiseless and under relaxation
//! with first-order extrapolation.

use zne_lab::experiments::exact_zne;
use zne_lab::gates::GateTiming;
use zne_lab::protocols::trajectory_circuits;
use zne_lab::pulse::Simulator;
use zne_lab::{expectation, DensityMatrix, NoiseModel, PauliSum, StretchSet};

fn main() -> zne_lab::Result<()> {
    let t1 = 20_000.0;
    let noise = NoiseModel::uniform(1, t1, 2.0 * t1);
    let ideal = Simulator::noiseless(1)?;
    let z = PauliSum::from_pairs(&[(1.0, "Z")])?;
    let stretch = StretchSet::new(vec![1.0, 2.0])?;
    println!(" j   ideal     raw       mitigated");
    for (k, c) in trajectory_circuits(&GateTiming::default())?.iter().enumerate() {
        let exact = expectation(&ideal.run(c, &DensityMatrix::ground(1)?)?, &z)?;
        let est = exact_zne(c, &z, &noise, &stretch)?;
        if k % 5 == 4 {
            println!("{:>2}  {exact:+.5}  {:+.5}  {:+.5}", k + 1, est.raw().estimate, est.value);
        }
    }
    Ok(())
}
