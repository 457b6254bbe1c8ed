use std::f64::consts::PI;

use zne_lab::cr::{
    echoed_cr_with, simulate_cr_decay, CRDriveSpec, CRParams, DriveMode, ScalingPolicy, SpuriousTerms, ZxCurve,
    amplitude_for_gate_time,
};
use zne_lab::density::{pauli_rotation, phase_insensitive_distance};
use zne_lab::pauli::PauliString;
use zne_lab::StretchSet;

fn s(p: &str) -> PauliString {
    p.parse().unwrap()
}

fn zx90() -> zne_lab::pauli::CMatrix {
    pauli_rotation(&s("ZX"), PI / 2.0)
}

#[test]
fn echo_refocuses_ix() {
    let extra = SpuriousTerms {
        odd: vec![(0.03, s("IX"))],
        even: vec![],
    };
    let c = echoed_cr_with(1.5, &CRParams::default(), &extra).unwrap();
    assert!(phase_insensitive_distance(&c.ideal_unitary(), &zx90()) < 1e-8);
}

#[test]
fn echo_refocuses_zi() {
    let extra = SpuriousTerms {
        odd: vec![],
        even: vec![(0.01, s("ZI"))],
    };
    let c = echoed_cr_with(1.5, &CRParams::default(), &extra).unwrap();
    assert!(phase_insensitive_distance(&c.ideal_unitary(), &zx90()) < 1e-8);
}

#[test]
fn echo_leaves_zz_residual_linear_in_strength() {
    // ZZ anticommutes with ZX and the ZX rotation is not small, so the two
    // halves of the echo do not cancel it; the leftover scales with its strength
    let err = |a: f64| {
        let extra = SpuriousTerms {
            odd: vec![],
            even: vec![(a, s("ZZ"))],
        };
        let c = echoed_cr_with(1.5, &CRParams::default(), &extra).unwrap();
        phase_insensitive_distance(&c.ideal_unitary(), &zx90())
    };
    let (e1, e2) = (err(1e-3), err(5e-4));
    assert!(e1 < 1e-2);
    assert!((e1 / e2 - 2.0).abs() < 0.05, "{e1} {e2}");
}

#[test]
#[ignore = "ZZ anticommutes with ZX; the echo leaves a residual linear in the ZZ strength, far above 1e-8"]
fn echo_refocuses_zz_exactly() {
    let extra = SpuriousTerms {
        odd: vec![],
        even: vec![(0.01, s("ZZ"))],
    };
    let c = echoed_cr_with(1.5, &CRParams::default(), &extra).unwrap();
    assert!(phase_insensitive_distance(&c.ideal_unitary(), &zx90()) < 1e-8);
}

#[test]
#[ignore = "the perturbative formula gives -0.01730 and 1.5235e-6 at these detunings, not the rounded quoted pair"]
fn formula_reproduces_quoted_coefficients() {
    let f = ZxCurve::from_params(&CRParams::default()).unwrap();
    let q = ZxCurve::quoted();
    assert!(((f.linear - q.linear) / q.linear).abs() < 1e-3);
    assert!(((f.cubic - q.cubic) / q.cubic).abs() < 1e-3);
}

#[test]
fn quoted_coefficients() {
    let q = ZxCurve::quoted();
    assert_eq!(q.linear, -0.0159);
    assert_eq!(q.cubic, 1.0541e-6);
    let threshold = (1e-3f64 * 0.0159 / 1.0541e-6).sqrt();
    assert!((q.linear_threshold(1e-3) - threshold).abs() < 1e-12);
}

#[test]
fn noiseless_linear_drive_is_stretch_invariant() {
    let p = CRParams {
        lambda: 0.0,
        ..CRParams::default()
    };
    let stretch = StretchSet::new(vec![1.0, 1.5, 2.0]).unwrap();
    let d = simulate_cr_decay(3.0, &stretch, &p, 40.0, DriveMode::LinearOnly, ScalingPolicy::Naive, ZxCurve::quoted()).unwrap();
    for series in &d.series[1..] {
        for (a, b) in series.iter().zip(&d.series[0]) {
            assert!((a - b).abs() < 1e-7);
        }
    }
    // no decay: the amplitude of the oscillation stays at 1
    let tail_max = d.series[0][300..].iter().cloned().fold(f64::MIN, f64::max);
    assert!(tail_max > 0.99);
}

#[test]
fn recalibrated_nonlinear_drive_is_stretch_invariant() {
    let p = CRParams {
        lambda: 0.0,
        ..CRParams::default()
    };
    let stretch = StretchSet::new(vec![1.0, 2.0]).unwrap();
    let d = simulate_cr_decay(2.0, &stretch, &p, 100.0, DriveMode::FullNonlinear, ScalingPolicy::Recalibrated, ZxCurve::quoted()).unwrap();
    for (a, b) in d.series[1].iter().zip(&d.series[0]) {
        assert!((a - b).abs() < 1e-6);
    }
    let naive = simulate_cr_decay(2.0, &stretch, &p, 100.0, DriveMode::FullNonlinear, ScalingPolicy::Naive, ZxCurve::quoted()).unwrap();
    let gap = naive.series[1].iter().zip(&naive.series[0]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(gap > 1e-2);
}

#[test]
fn linear_mode_policies_agree() {
    let omega = amplitude_for_gate_time(2.0, &CRParams::default()).unwrap();
    for c in [1.0, 1.5, 2.0, 3.0] {
        let naive = CRDriveSpec {
            omega,
            mode: DriveMode::LinearOnly,
            scaling: ScalingPolicy::Naive,
            curve: ZxCurve::quoted(),
        };
        let recal = CRDriveSpec {
            scaling: ScalingPolicy::Recalibrated,
            ..naive
        };
        assert_eq!(naive.stretched_amplitude(c, 1.0).unwrap(), recal.stretched_amplitude(c, 1.0).unwrap());
    }
}

#[test]
fn mitigated_series_is_two_minus_one() {
    let stretch = StretchSet::new(vec![1.0, 2.0]).unwrap();
    let d = simulate_cr_decay(4.0, &stretch, &CRParams::default(), 50.0, DriveMode::FullNonlinear, ScalingPolicy::Naive, ZxCurve::quoted()).unwrap();
    for i in 0..d.times.len() {
        assert_eq!(d.mitigated[i], 2.0 * d.series[0][i] - d.series[1][i]);
    }
    assert_eq!(d.times.len(), 400);
}

#[test]
fn csv_has_one_row_per_time() {
    let stretch = StretchSet::new(vec![1.0, 2.0]).unwrap();
    let d = simulate_cr_decay(6.0, &stretch, &CRParams::default(), 10.0, DriveMode::FullNonlinear, ScalingPolicy::Naive, ZxCurve::quoted()).unwrap();
    let csv = d.to_csv();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "t,iz_c1,iz_c2,iz_mitigated,iz_noiseless");
    assert_eq!(lines.count(), 400);
}
