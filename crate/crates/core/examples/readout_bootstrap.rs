//! Readout correction by confusion-matrix inversion, and how the
//! bootstrap spread of a mitigated estimate shrinks with shots.

use zne_lab::gates::{compile, GateTiming};
use zne_lab::measure::{apply_confusion, correct_readout, sample_counts, stream_rng, MeasurementSetting};
use zne_lab::noise::ConfusionMatrix;
use zne_lab::experiments::sampled_zne;
use zne_lab::pauli::C64;
use zne_lab::protocols::bell_preparation;
use zne_lab::{DensityMatrix, NoiseModel, PauliSum, StretchSet};

fn main() -> zne_lab::Result<()> {
    let theta: f64 = 0.8;
    let rho = DensityMatrix::pure(1, &[C64::new((theta / 2.0).cos(), 0.0), C64::new((theta / 2.0).sin(), 0.0)])?;
    let m = ConfusionMatrix::symmetric_flip(1, 0.05)?;
    let mut rng = stream_rng(1, 0);
    let counts = sample_counts(&rho, &MeasurementSetting::computational(1), 50_000, &mut rng)?;
    let noisy = apply_confusion(&counts, &m, &mut rng)?;
    let f = noisy.frequencies();
    let p = correct_readout(&noisy, &m)?;
    println!("<Z> true {:.4}, read {:.4}, corrected {:.4}", theta.cos(), f[0] - f[1], p[0] - p[1]);

    let circuit = compile(2, &bell_preparation()?, &GateTiming::default())?;
    let zz = PauliSum::from_pairs(&[(1.0, "ZZ")])?;
    let noise = NoiseModel::uniform(2, 20_000.0, 30_000.0);
    let stretch = StretchSet::new(vec![1.0, 2.0])?;
    for shots in [25_000, 50_000, 100_000, 200_000] {
        let r = sampled_zne(&circuit, &zz, &noise, &stretch, shots, 5, 100)?;
        println!(
            "{shots:>7} shots: bootstrap std {:.2e}, propagated {:.2e}",
            r.bootstrap.expect("replicas requested").std,
            r.mitigated.std_error()
        );
    }
    Ok(())
}
