//! Cross-resonance drive model.
//!
//! The `ZX` strength produced by a drive of amplitude `Ω` is, to third order,
//!
//! ```text
//! J_ZX(Ω) = -Ω J δ₁ / (Δ(δ₁+Δ))
//!         + Ω³ J δ₁² (3δ₁³ + 11δ₁²Δ + 15δ₁Δ² + 9Δ³)
//!           / (4Δ³(δ₁+Δ)³(δ₁+2Δ)(3δ₁+2Δ))
//! ```
//!
//! Stretching such a gate by dividing `Ω` by `c` does not divide `J_ZX` by
//! `c` once the cubic term matters, so the stretched runs stop being
//! time-dilated copies of each other and the extrapolation can leave the
//! physical range. Times here are in units of `1/J`.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::density::DensityMatrix;
use crate::error::{Error, Result};
use crate::noise::Dissipator;
use crate::pauli::{string_expectation, Pauli, PauliString, PauliSum, C64};
use crate::pulse::{Circuit, Envelope, PulseGate, Simulator};
use crate::zne::{coefficients, StretchSet};

/// Sample count of the decay time grid.
pub const DECAY_GRID_POINTS: usize = 400;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CRParams {
    /// Qubit-qubit coupling; sets the unit of frequency.
    pub j: f64,
    /// Anharmonicity `δ₁`.
    pub delta1: f64,
    /// Qubit detuning `Δ`.
    pub delta: f64,
    /// Amplitude-damping and dephasing rate.
    pub lambda: f64,
}

impl Default for CRParams {
    fn default() -> Self {
        CRParams {
            j: 1.0,
            delta1: 320.0,
            delta: 50.0,
            lambda: 2e-3,
        }
    }
}

impl CRParams {
    pub fn check(&self) -> Result<()> {
        let (d1, d) = (self.delta1, self.delta);
        let poles = [
            (d, "Δ"),
            (d1 + d, "δ₁ + Δ"),
            (d1 + 2.0 * d, "δ₁ + 2Δ"),
            (3.0 * d1 + 2.0 * d, "3δ₁ + 2Δ"),
        ];
        if let Some((_, name)) = poles.iter().find(|(v, _)| *v == 0.0) {
            return Err(Error::Domain(format!("{name} must be non-zero")));
        }
        if !(self.lambda >= 0.0) {
            return Err(Error::Domain(format!("λ = {} must be ≥ 0", self.lambda)));
        }
        Ok(())
    }
}

/// `J_ZX(Ω) = J · (linear·Ω + cubic·Ω³)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZxCurve {
    pub linear: f64,
    pub cubic: f64,
}

impl ZxCurve {
    pub fn from_params(p: &CRParams) -> Result<Self> {
        p.check()?;
        let (d1, d) = (p.delta1, p.delta);
        let linear = -d1 / (d * (d1 + d));
        let cubic = d1 * d1 * (3.0 * d1.powi(3) + 11.0 * d1 * d1 * d + 15.0 * d1 * d * d + 9.0 * d.powi(3))
            / (4.0 * d.powi(3) * (d1 + d).powi(3) * (d1 + 2.0 * d) * (3.0 * d1 + 2.0 * d));
        Ok(ZxCurve { linear, cubic })
    }

    /// Rounded coefficients commonly quoted for `δ₁ = 320`, `Δ = 50`.
    pub fn quoted() -> Self {
        ZxCurve {
            linear: -0.0159,
            cubic: 1.0541e-6,
        }
    }

    pub fn eval(&self, j: f64, omega: f64, mode: DriveMode) -> f64 {
        match mode {
            DriveMode::LinearOnly => j * self.linear * omega,
            DriveMode::FullNonlinear => j * (self.linear * omega + self.cubic * omega.powi(3)),
        }
    }

    /// Amplitude below which the cubic term is a relative correction of
    /// at most `rel`.
    pub fn linear_threshold(&self, rel: f64) -> f64 {
        (rel * self.linear.abs() / self.cubic.abs()).sqrt()
    }

    /// Largest amplitude on which `|J_ZX|` is monotone.
    pub fn turning_point(&self) -> f64 {
        if self.cubic == 0.0 || self.linear * self.cubic > 0.0 {
            f64::INFINITY
        } else {
            (-self.linear / (3.0 * self.cubic)).sqrt()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DriveMode {
    LinearOnly,
    FullNonlinear,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScalingPolicy {
    /// `Ω/c`.
    Naive,
    /// Solve `J_ZX(Ω_c) = J_ZX(Ω)/c`.
    Recalibrated,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CRDriveSpec {
    pub omega: f64,
    pub mode: DriveMode,
    pub scaling: ScalingPolicy,
    pub curve: ZxCurve,
}

impl CRDriveSpec {
    /// Amplitude to use at stretch factor `c`.
    pub fn stretched_amplitude(&self, c: f64, j: f64) -> Result<f64> {
        let naive = self.omega / c;
        match (self.scaling, self.mode) {
            (ScalingPolicy::Naive, _) | (ScalingPolicy::Recalibrated, DriveMode::LinearOnly) => {
                Ok(naive)
            }
            (ScalingPolicy::Recalibrated, DriveMode::FullNonlinear) => {
                if self.omega > self.curve.turning_point() {
                    return Err(Error::Domain(format!(
                        "amplitude {} is past the turning point {} of J_ZX",
                        self.omega,
                        self.curve.turning_point()
                    )));
                }
                let target = self.curve.eval(j, self.omega, self.mode) / c;
                let f = |x: f64| self.curve.eval(j, x, self.mode) - target;
                let (mut lo, mut hi) = (0.0, self.omega);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if (f(mid) > 0.0) == (f(hi) > 0.0) {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                Ok(0.5 * (lo + hi))
            }
        }
    }
}

/// `J_ZX(Ω)` from the full third-order expression.
pub fn j_zx(omega: f64, params: &CRParams) -> Result<f64> {
    let curve = ZxCurve::from_params(params)?;
    Ok(curve.eval(params.j, omega, DriveMode::FullNonlinear))
}

/// `Ω = πΔ(δ₁+Δ) / (2 T_gate J δ₁)`, the amplitude for which the linear
/// term alone gives `|J_ZX| · T_gate = π/2`.
pub fn amplitude_for_gate_time(t_gate: f64, params: &CRParams) -> Result<f64> {
    if !(t_gate > 0.0) {
        return Err(Error::usage(format!("gate time {t_gate} must be > 0")));
    }
    params.check()?;
    if params.delta1 == 0.0 || params.j == 0.0 {
        return Err(Error::Domain("δ₁ and J must be non-zero".into()));
    }
    Ok(PI * params.delta * (params.delta1 + params.delta)
        / (2.0 * t_gate * params.j * params.delta1))
}

/// Jump operators of the two-qubit model: per qubit a lowering operator
/// `2^{-1/2}(X + iY) = √2 |0⟩⟨1|` and a `Z` jump, both at rate `λ`.
pub fn cr_dissipators(lambda: f64) -> Vec<Dissipator> {
    let zero = C64::new(0.0, 0.0);
    let lower = [[zero, C64::new(2f64.sqrt(), 0.0)], [zero, zero]];
    (0..2)
        .flat_map(|q| {
            [
                Dissipator::custom(q, lower, lambda),
                Dissipator::pauli(q, Pauli::Z, lambda),
            ]
        })
        .collect()
}

/// `⟨IZ⟩` time series per stretch factor and the pointwise extrapolation.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CrDecay {
    pub t_gate: f64,
    pub omega: f64,
    pub times: Vec<f64>,
    pub factors: Vec<f64>,
    /// `series[k][i]`: run at `factors[k]`, sampled at `factors[k] · times[i]`.
    pub series: Vec<Vec<f64>>,
    pub mitigated: Vec<f64>,
    /// Same drive with `λ = 0` and no stretching.
    pub noiseless: Vec<f64>,
}

impl CrDecay {
    pub fn max_mitigated(&self) -> f64 {
        self.mitigated.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_mitigated(&self) -> f64 {
        self.mitigated.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Time-averaged `|series - noiseless|`.
    pub fn mean_deviation(&self, values: &[f64]) -> f64 {
        values
            .iter()
            .zip(&self.noiseless)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
            / values.len() as f64
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t");
        for c in &self.factors {
            out.push_str(&format!(",iz_c{c}"));
        }
        out.push_str(",iz_mitigated,iz_noiseless\n");
        for (i, t) in self.times.iter().enumerate() {
            out.push_str(&format!("{t}"));
            for s in &self.series {
                out.push_str(&format!(",{}", s[i]));
            }
            out.push_str(&format!(",{},{}\n", self.mitigated[i], self.noiseless[i]));
        }
        out
    }
}

/// `⟨IZ⟩(t)` on a uniform grid for a constant `strength · ZX` drive.
fn iz_series(strength: f64, lambda: f64, total_time: f64, points: usize) -> Result<Vec<f64>> {
    let zx = PauliString::from_sites(2, &[(0, Pauli::Z), (1, Pauli::X)])?;
    let iz: PauliString = "IZ".parse()?;
    let sim = Simulator::with_dissipators(2, if lambda > 0.0 { cr_dissipators(lambda) } else { vec![] })?;
    let dt = total_time / (points - 1) as f64;
    let step = PulseGate::new("cr", PauliSum::single(strength, zx)?, dt, Envelope::flat(dt, 1.0))?;
    let mut rho = DensityMatrix::ground(2)?;
    let mut out = Vec::with_capacity(points);
    out.push(string_expectation(&rho, &iz)?);
    for _ in 1..points {
        rho = sim.evolve(&rho, &step)?;
        out.push(string_expectation(&rho, &iz)?);
    }
    Ok(out)
}

/// Evolves `|00⟩` under the two-qubit model for each stretch factor and
/// extrapolates `⟨IZ⟩` pointwise in time.
pub fn simulate_cr_decay(
    t_gate: f64,
    stretch: &StretchSet,
    params: &CRParams,
    total_time: f64,
    mode: DriveMode,
    scaling: ScalingPolicy,
    curve: ZxCurve,
) -> Result<CrDecay> {
    params.check()?;
    if !(total_time > 0.0) {
        return Err(Error::usage(format!("total time {total_time} must be > 0")));
    }
    let spec = CRDriveSpec {
        omega: amplitude_for_gate_time(t_gate, params)?,
        mode,
        scaling,
        curve,
    };
    let n = DECAY_GRID_POINTS;
    let times: Vec<f64> = (0..n)
        .map(|i| total_time * i as f64 / (n - 1) as f64)
        .collect();
    let factors = stretch.factors().to_vec();
    let mut jobs: Vec<(f64, f64, f64)> = factors
        .iter()
        .map(|&c| {
            let omega_c = spec.stretched_amplitude(c, params.j)?;
            Ok((curve.eval(params.j, omega_c, mode), params.lambda, c * total_time))
        })
        .collect::<Result<_>>()?;
    jobs.push((curve.eval(params.j, spec.omega, mode), 0.0, total_time));
    let mut runs = jobs
        .par_iter()
        .map(|&(s, l, t)| iz_series(s, l, t, n))
        .collect::<Result<Vec<_>>>()?;
    let noiseless = runs.pop().expect("reference run present");
    let gammas = coefficients(stretch).gammas;
    let mitigated = (0..n)
        .map(|i| gammas.iter().zip(&runs).map(|(g, s)| g * s[i]).sum())
        .collect();
    Ok(CrDecay {
        t_gate,
        omega: spec.omega,
        times,
        factors,
        series: runs,
        mitigated,
        noiseless,
    })
}

/// Terms added to the idealized `ZX` drive, for studying the echo.
#[derive(Clone, Debug, Default)]
pub struct SpuriousTerms {
    /// Present only while driving; flips sign with the drive.
    pub odd: Vec<(f64, PauliString)>,
    /// Present regardless of the drive sign.
    pub even: Vec<(f64, PauliString)>,
}

/// Echoed `ZX_{π/2}` on control 0, target 1 with flat cross-resonance
/// pulses of length `t_pulse`, flat `X_π` pulses of length `t_pulse/4`, and
/// no buffers. Each pulse uses the linear-model amplitude that rotates by
/// `π/8`, so the noiseless product is `exp(-i π/4 ZX)`.
pub fn echoed_cr_zx90(t_pulse: f64, params: &CRParams) -> Result<Circuit> {
    echoed_cr_with(t_pulse, params, &SpuriousTerms::default())
}

pub fn echoed_cr_with(t_pulse: f64, params: &CRParams, extra: &SpuriousTerms) -> Result<Circuit> {
    if !(t_pulse > 0.0) {
        return Err(Error::usage(format!("pulse time {t_pulse} must be > 0")));
    }
    let curve = ZxCurve::from_params(params)?;
    let omega = amplitude_for_gate_time(4.0 * t_pulse, params)?;
    let strength = curve.eval(params.j, omega, DriveMode::LinearOnly);
    // drive with the sign that makes the first pulse rotate by +π/8
    let sign = strength.signum();
    let zx = PauliString::from_sites(2, &[(0, Pauli::Z), (1, Pauli::X)])?;
    let generator = |drive_sign: f64| -> Result<PauliSum> {
        let mut terms = vec![crate::pauli::PauliTerm::new(
            drive_sign * sign * strength,
            zx.clone(),
        )?];
        for (a, p) in &extra.odd {
            terms.push(crate::pauli::PauliTerm::new(drive_sign * a, p.clone())?);
        }
        for (a, p) in &extra.even {
            terms.push(crate::pauli::PauliTerm::new(*a, p.clone())?);
        }
        PauliSum::new(2, terms)
    };
    let t_x = t_pulse / 4.0;
    let x_pi = || {
        PulseGate::rotation("x180_q0", PauliString::single(2, 0, Pauli::X)?, PI, t_x)
    };
    let mut c = Circuit::new(2, 0.0);
    c.push_pulse(PulseGate::new("cr_plus", generator(1.0)?, t_pulse, Envelope::flat(t_pulse, 1.0))?)?;
    c.push_pulse(x_pi()?)?;
    c.push_pulse(PulseGate::new("cr_minus", generator(-1.0)?, t_pulse, Envelope::flat(t_pulse, 1.0))?)?;
    c.push_pulse(x_pi()?)?;
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::{pauli_rotation, phase_insensitive_distance};

    #[test]
    fn zero_amplitude_gives_zero() {
        assert_eq!(j_zx(0.0, &CRParams::default()).unwrap(), 0.0);
    }

    #[test]
    fn formula_coefficients() {
        let c = ZxCurve::from_params(&CRParams::default()).unwrap();
        assert!((c.linear + 320.0 / (50.0 * 370.0)).abs() < 1e-15);
        assert!((c.linear + 0.017_297_297).abs() < 1e-8);
        assert!((c.cubic - 1.523_454_77e-6).abs() < 1e-13);
    }

    #[test]
    fn poles_are_domain_errors() {
        for (d1, d) in [(320.0, 0.0), (50.0, -50.0), (100.0, -50.0), (100.0, -150.0)] {
            let p = CRParams {
                delta1: d1,
                delta: d,
                ..CRParams::default()
            };
            assert!(matches!(j_zx(1.0, &p), Err(Error::Domain(_))), "{d1} {d}");
        }
    }

    #[test]
    fn amplitude_golden_and_scaling() {
        let p = CRParams::default();
        let w2 = amplitude_for_gate_time(2.0, &p).unwrap();
        assert!((w2 - 45.405_831_321_414_98).abs() < 1e-9);
        let w4 = amplitude_for_gate_time(4.0, &p).unwrap();
        assert!((w2 - 2.0 * w4).abs() < 1e-12);
    }

    #[test]
    fn linear_round_trip_gives_quarter_turn() {
        let p = CRParams::default();
        let c = ZxCurve::from_params(&p).unwrap();
        for t in [2.0, 3.0, 6.0, 17.5] {
            let w = amplitude_for_gate_time(t, &p).unwrap();
            let rot = c.eval(p.j, w, DriveMode::LinearOnly).abs() * t;
            assert!((rot - PI / 2.0).abs() < 1e-10);
        }
    }

    #[test]
    fn small_amplitude_is_linear() {
        for curve in [ZxCurve::quoted(), ZxCurve::from_params(&CRParams::default()).unwrap()] {
            let w = 0.99 * curve.linear_threshold(1e-3);
            let full = curve.eval(1.0, w, DriveMode::FullNonlinear);
            let lin = curve.eval(1.0, w, DriveMode::LinearOnly);
            assert!(((full - lin) / lin).abs() < 1e-3);
        }
    }

    #[test]
    fn recalibration_inverts_curve() {
        let spec = CRDriveSpec {
            omega: 45.0,
            mode: DriveMode::FullNonlinear,
            scaling: ScalingPolicy::Recalibrated,
            curve: ZxCurve::quoted(),
        };
        let w = spec.stretched_amplitude(2.0, 1.0).unwrap();
        let want = spec.curve.eval(1.0, 45.0, DriveMode::FullNonlinear) / 2.0;
        assert!((spec.curve.eval(1.0, w, DriveMode::FullNonlinear) - want).abs() < 1e-12);
        let linear = CRDriveSpec {
            mode: DriveMode::LinearOnly,
            ..spec
        };
        assert_eq!(
            linear.stretched_amplitude(2.0, 1.0).unwrap(),
            CRDriveSpec {
                scaling: ScalingPolicy::Naive,
                ..linear
            }
            .stretched_amplitude(2.0, 1.0)
            .unwrap()
        );
    }

    #[test]
    fn echo_is_zx90() {
        let c = echoed_cr_zx90(1.5, &CRParams::default()).unwrap();
        let want = pauli_rotation(&"ZX".parse().unwrap(), PI / 2.0);
        assert!(phase_insensitive_distance(&c.ideal_unitary(), &want) < 1e-8);
    }
}
