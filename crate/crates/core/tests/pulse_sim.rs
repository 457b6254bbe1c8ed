mod common;

use common::*;
use proptest::prelude::*;
use zne_lab::noise::{dissipators_for, DriftProfile};
use zne_lab::pauli::{string_expectation, PauliString};
use zne_lab::{DensityMatrix, Envelope, NoiseModel, PauliSum, PulseGate, QubitNoise, Simulator};

fn noisy2() -> NoiseModel {
    let mut m = NoiseModel::uniform(2, 900.0, 1100.0);
    m.per_qubit[1] = QubitNoise::new(700.0, 1400.0);
    m.depolarizing_rate = Some(2e-4);
    m
}

#[test]
fn flat_pulse_matches_dense_liouvillian() {
    let h = PauliSum::from_pairs(&[(0.3, "XI"), (0.2, "ZX"), (-0.1, "YZ"), (0.05, "IY")]).unwrap();
    let gate = PulseGate::new("drive", h, 7.0, Envelope::flat(7.0, 1.3)).unwrap();
    let noise = noisy2().amplified(50.0);
    let dis = dissipators_for(&noise, 2).unwrap();
    let sim = Simulator::new(&noise, 2).unwrap();
    for seed in 0..3 {
        let rho = random_pure(2, seed);
        let got = sim.evolve(&rho, &gate).unwrap();
        let want = oracle_evolve(&rho, &gate, &dis);
        assert!(max_abs(got.matrix(), &want) < 1e-9, "seed {seed}: {}", max_abs(got.matrix(), &want));
    }
}

#[test]
fn idle_matches_dense_liouvillian() {
    let noise = noisy2().amplified(20.0);
    let dis = dissipators_for(&noise, 2).unwrap();
    let zero = PulseGate::new("idle", PauliSum::from_pairs(&[(0.0, "ZZ")]).unwrap(), 40.0, Envelope::flat(40.0, 0.0)).unwrap();
    let rho = random_pure(2, 9);
    let got = Simulator::new(&noise, 2).unwrap().idle(&rho, 40.0).unwrap();
    assert!(max_abs(got.matrix(), &oracle_evolve(&rho, &zero, &dis)) < 1e-9);
}

#[test]
fn stretched_runs_equal_amplified_runs() {
    let timing = fast_timing();
    let noise = noisy2();
    let rho0 = DensityMatrix::ground(2).unwrap();
    for seed in 0..3 {
        let c = random_circuit(2, 10, seed, &timing);
        for factor in [1.5, 2.0, 4.0] {
            let a = Simulator::new(&noise, 2).unwrap().run(&c.stretch(factor).unwrap(), &rho0).unwrap();
            let b = Simulator::new(&noise.amplified(factor), 2).unwrap().run(&c, &rho0).unwrap();
            assert!(a.max_abs_diff(&b) < 1e-7, "seed {seed} c {factor}: {}", a.max_abs_diff(&b));
        }
    }
}

#[test]
fn drift_between_runs_breaks_equivalence() {
    let timing = fast_timing();
    let drift = DriftProfile::new(vec![(0, 1.0), (1, 1.6)]).unwrap();
    let noise = NoiseModel::uniform(2, 800.0, 1000.0).with_drift(drift);
    let c = random_circuit(2, 10, 4, &timing);
    let rho0 = DensityMatrix::ground(2).unwrap();
    let reference = Simulator::new(&noise.at_index(0).amplified(2.0), 2).unwrap().run(&c, &rho0).unwrap();
    // stretched run executed later, at a different rate multiplier
    let late = Simulator::new(&noise.at_index(1), 2).unwrap().run(&c.stretch(2.0).unwrap(), &rho0).unwrap();
    assert!(late.max_abs_diff(&reference) > 1e-7);
    // both runs inside the same drift window agree again
    let grouped = Simulator::new(&noise.at_index(0), 2).unwrap().run(&c.stretch(2.0).unwrap(), &rho0).unwrap();
    assert!(grouped.max_abs_diff(&reference) < 1e-7);
}

#[test]
fn halving_the_step_changes_little() {
    let timing = fast_timing();
    let noise = noisy2();
    let rho0 = DensityMatrix::ground(2).unwrap();
    let obs: Vec<PauliString> = ["ZI", "IZ", "ZZ", "XX", "YX"].iter().map(|s| s.parse().unwrap()).collect();
    for seed in 0..3 {
        let c = random_circuit(2, 12, 20 + seed, &timing);
        let a = Simulator::new(&noise, 2).unwrap().run(&c, &rho0).unwrap();
        let b = Simulator::new(&noise, 2).unwrap().refined(2).run(&c, &rho0).unwrap();
        for p in &obs {
            let d = (string_expectation(&a, p).unwrap() - string_expectation(&b, p).unwrap()).abs();
            assert!(d < 1e-8, "{p}: {d}");
        }
    }
}

#[test]
fn depolarizing_drives_to_maximally_mixed() {
    let rate = 0.01;
    let sim = Simulator::new(&NoiseModel::depolarizing(1, rate), 1).unwrap();
    let out = sim.idle(&DensityMatrix::ground(1).unwrap(), 20.0 / rate).unwrap();
    assert!(out.max_abs_diff(&DensityMatrix::maximally_mixed(1).unwrap()) < 1e-6);
}

#[test]
fn unital_dissipation_never_raises_purity() {
    // dephasing plus depolarizing only; amplitude damping is not unital
    let mut noise = NoiseModel::depolarizing(2, 3e-3);
    noise.per_qubit = vec![QubitNoise::new(f64::INFINITY, 300.0); 2];
    let sim = Simulator::new(&noise, 2).unwrap();
    let mut rho = random_pure(2, 5);
    let mut last = rho.purity();
    for _ in 0..40 {
        rho = sim.idle(&rho, 10.0).unwrap();
        assert!(rho.purity() <= last + 1e-12);
        last = rho.purity();
    }
    assert!(last < 0.9);
}

#[test]
fn noiseless_run_matches_ideal_unitary() {
    let timing = fast_timing();
    let c = random_circuit(2, 15, 77, &timing);
    let rho0 = random_pure(2, 1);
    let got = Simulator::noiseless(2).unwrap().run(&c, &rho0).unwrap();
    let want = zne_lab::density::apply_unitary(&rho0, &c.ideal_unitary()).unwrap();
    assert!(got.max_abs_diff(&want) < 1e-9);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn evolution_preserves_trace(seed in 0u64..1000, len in 1usize..8) {
        let c = random_circuit(2, len, seed, &fast_timing());
        let out = Simulator::new(&noisy2().amplified(5.0), 2).unwrap()
            .run(&c, &random_pure(2, seed)).unwrap();
        prop_assert!((out.trace().re - 1.0).abs() < 1e-9);
        prop_assert!(out.trace().im.abs() < 1e-9);
        prop_assert!(out.min_eigenvalue() > -1e-9);
    }

    #[test]
    fn amplification_composes(a in 1.0f64..5.0, b in 1.0f64..5.0, t1 in 10.0f64..1e4, ratio in 0.1f64..2.0, dep in 0.0f64..1e-2) {
        let mut n = NoiseModel::uniform(2, t1, ratio * t1);
        n.depolarizing_rate = Some(dep);
        let lhs = dissipators_for(&n.amplified(a).amplified(b), 2).unwrap();
        let rhs = dissipators_for(&n.amplified(a * b), 2).unwrap();
        prop_assert_eq!(lhs.len(), rhs.len());
        for (x, y) in lhs.iter().zip(&rhs) {
            prop_assert!((x.rate - y.rate).abs() <= 1e-12 * y.rate.max(1e-300));
        }
    }
}
