mod common;

use common::log_slope;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use zne_lab::measure::{
    apply_confusion, bootstrap, correct_readout, sample_counts, stream_rng, CountsTable, MeasurementSetting,
};
use zne_lab::noise::ConfusionMatrix;
use zne_lab::pauli::{C64, PauliString};
use zne_lab::DensityMatrix;

fn tilted(theta: f64) -> DensityMatrix {
    let psi = [C64::new((theta / 2.0).cos(), 0.0), C64::new((theta / 2.0).sin(), 0.0)];
    DensityMatrix::pure(1, &psi).unwrap()
}

#[test]
fn sample_mean_converges_at_inverse_root_rate() {
    let rho = tilted(1.1);
    let z: PauliString = "Z".parse().unwrap();
    let exact = 1.1f64.cos();
    let shots = [100u64, 1_000, 10_000, 100_000];
    let rms: Vec<f64> = shots
        .iter()
        .map(|&n| {
            let trials = 200;
            let sq: f64 = (0..trials)
                .map(|s| {
                    let mut rng = stream_rng(n, s);
                    let t = sample_counts(&rho, &MeasurementSetting::computational(1), n, &mut rng).unwrap();
                    (t.parity(&z).0 - exact).powi(2)
                })
                .sum();
            (sq / trials as f64).sqrt()
        })
        .collect();
    let x: Vec<f64> = shots.iter().map(|&n| n as f64).collect();
    let slope = log_slope(&x, &rms);
    assert!((slope + 0.5).abs() < 0.1, "slope {slope}");
}

#[test]
fn symmetric_flip_attenuates_z() {
    let m = ConfusionMatrix::symmetric_flip(1, 0.02).unwrap();
    let z: PauliString = "Z".parse().unwrap();
    let rho = DensityMatrix::ground(1).unwrap();
    let shots = 200_000;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let t = sample_counts(&rho, &MeasurementSetting::computational(1), shots, &mut rng).unwrap();
    let (est, var) = apply_confusion(&t, &m, &mut rng).unwrap().parity(&z);
    assert!((est - 0.96).abs() < 5.0 * var.sqrt(), "{est}");
}

#[test]
fn counts_and_bootstrap_are_reproducible() {
    let rho = tilted(0.7);
    let z: PauliString = "Z".parse().unwrap();
    let draw = || {
        let mut rng = stream_rng(42, 7);
        sample_counts(&rho, &MeasurementSetting::computational(1), 5_000, &mut rng).unwrap()
    };
    let (a, b) = (draw(), draw());
    assert_eq!(a, b);
    let pipe = |t: &[CountsTable]| Ok(t[0].parity(&z).0);
    let ra = bootstrap(&[a], pipe, 60, 9).unwrap();
    let rb = bootstrap(&[b], pipe, 60, 9).unwrap();
    assert_eq!(ra, rb);
}

#[test]
fn bootstrap_mean_tracks_plug_in_estimate() {
    let rho = tilted(2.0);
    let z: PauliString = "Z".parse().unwrap();
    for seed in 0..5 {
        let mut rng = stream_rng(seed, 1);
        let t = sample_counts(&rho, &MeasurementSetting::computational(1), 20_000, &mut rng).unwrap();
        let plug = t.parity(&z).0;
        let r = bootstrap(&[t], |t| Ok(t[0].parity(&z).0), 100, seed).unwrap();
        assert!((r.mean - plug).abs() < 3.0 * r.std / (r.n_replicas as f64).sqrt(), "seed {seed}");
        assert!((50..=100).contains(&r.n_replicas));
    }
}

fn confusion_strategy() -> impl Strategy<Value = ConfusionMatrix> {
    prop::collection::vec((0.0f64..0.2, 0.0f64..0.2), 2)
        .prop_map(|f| ConfusionMatrix::from_qubit_flips(&f).unwrap())
}

proptest! {
    #[test]
    fn corrected_distribution_lies_on_simplex(m in confusion_strategy(), counts in prop::collection::vec(0u64..500, 4)) {
        prop_assume!(counts.iter().sum::<u64>() > 0);
        let t = CountsTable::new(2, counts, "ZZ").unwrap();
        let p = correct_readout(&t, &m).unwrap();
        prop_assert!(p.iter().all(|&x| x >= 0.0));
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn relabelling_keeps_shot_count(m in confusion_strategy(), counts in prop::collection::vec(0u64..500, 4), seed in 0u64..100) {
        let t = CountsTable::new(2, counts, "ZZ").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        prop_assert_eq!(apply_confusion(&t, &m, &mut rng).unwrap().shots(), t.shots());
    }
}
