//! Sampled Bell-state parity with readout error, extrapolation and a
//! bootstrap error bar.

use zne_lab::experiments::sampled_zne;
use zne_lab::gates::GateTiming;
use zne_lab::noise::ConfusionMatrix;
use zne_lab::protocols::bell_parity_experiment;
use zne_lab::{NoiseModel, StretchSet};

fn main() -> zne_lab::Result<()> {
    let noise = NoiseModel::uniform(2, 20_000.0, 30_000.0).with_confusion(ConfusionMatrix::symmetric_flip(2, 0.02)?);
    let stretch = StretchSet::new(vec![1.0, 1.5, 2.0])?;
    for length in [0, 4, 8] {
        let (circuit, zz) = bell_parity_experiment(length, 17, &GateTiming::default())?;
        let r = sampled_zne(&circuit, &zz, &noise, &stretch, 20_000, 3, 200)?;
        let boot = r.bootstrap.expect("replicas requested");
        println!(
            "length {length:>2}: raw {:.4}, mitigated {:.4} (propagated ± {:.4}, bootstrap ± {:.4})",
            r.mitigated.raw().estimate,
            r.mitigated.value,
            r.mitigated.std_error(),
            boot.std
        );
    }
    Ok(())
}
