//! Native gate set and its compilation to timed pulses.
//!
//! Single-qubit rotations are built from Gaussian `X_{π/2}` pulses and
//! zero-duration virtual `Z_θ`. The two-qubit entangler is an echoed
//! cross-resonance sequence
//!
//! ```text
//! CR(+) · X_π(control) · CR(-) · X_π(control)
//! ```
//!
//! whose noiseless product is `exp(-i θ/2 · ZX)`; the second `X_π` undoes
//! the echo pulse so that the fragment is exactly the entangling rotation.
//!
//! Default timings are in nanoseconds.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pauli::{Pauli, PauliString, PauliSum};
use crate::pulse::{Circuit, Envelope, PulseGate};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GateTiming {
    /// Length of every single-qubit pulse (`X_{π/2}` and `X_π`).
    pub single_qubit: f64,
    /// Idle time after each pulse.
    pub buffer: f64,
    /// Length of each of the two cross-resonance pulses, rise and fall
    /// included.
    pub cr_pulse: f64,
    /// Gaussian σ of the cross-resonance rise and fall.
    pub cr_sigma: f64,
    /// Rise (and fall) length, in units of `cr_sigma`.
    pub cr_rise_sigmas: f64,
}

impl Default for GateTiming {
    fn default() -> Self {
        GateTiming {
            single_qubit: 83.3,
            buffer: 6.7,
            cr_pulse: 500.0,
            cr_sigma: 10.0,
            cr_rise_sigmas: 3.0,
        }
    }
}

impl GateTiming {
    pub fn check(&self) -> Result<()> {
        let ok = self.single_qubit > 0.0
            && self.buffer >= 0.0
            && self.cr_pulse > 0.0
            && self.cr_sigma > 0.0
            && self.cr_rise_sigmas >= 0.0
            && 2.0 * self.cr_rise_sigmas * self.cr_sigma < self.cr_pulse;
        if ok {
            Ok(())
        } else {
            Err(Error::validation(
                "timing.invalid",
                "gate timings must be positive and the CR rise must fit in the pulse",
            ))
        }
    }

    /// Wall-clock length of one echoed entangler, buffers included.
    pub fn entangler_duration(&self) -> f64 {
        2.0 * (self.cr_pulse + self.buffer) + 2.0 * (self.single_qubit + self.buffer)
    }
}

/// Gates the compiler understands.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "gate", rename_all = "snake_case")]
pub enum NativeGate {
    /// Virtual `exp(-i angle Z/2)`.
    Rz { qubit: usize, angle: f64 },
    /// Physical `exp(-i π/4 X)`.
    X90 { qubit: usize },
    /// Echoed cross resonance implementing `exp(-i angle/2 · Z_c X_t)`.
    Zx {
        control: usize,
        target: usize,
        angle: f64,
    },
}

impl NativeGate {
    pub fn zx90(control: usize, target: usize) -> Self {
        NativeGate::Zx {
            control,
            target,
            angle: PI / 2.0,
        }
    }

    pub fn is_entangler(&self) -> bool {
        matches!(self, NativeGate::Zx { .. })
    }

    pub fn is_physical(&self) -> bool {
        !matches!(self, NativeGate::Rz { .. })
    }

    fn qubits(&self) -> Vec<usize> {
        match *self {
            NativeGate::Rz { qubit, .. } | NativeGate::X90 { qubit } => vec![qubit],
            NativeGate::Zx {
                control, target, ..
            } => vec![control, target],
        }
    }
}

pub fn x_pulse(n_qubits: usize, qubit: usize, angle: f64, timing: &GateTiming) -> Result<PulseGate> {
    let axis = PauliString::single(n_qubits, qubit, Pauli::X)?;
    let label = if angle == PI { "x180" } else { "x90" };
    PulseGate::gaussian_rotation(format!("{label}_q{qubit}"), axis, angle, timing.single_qubit)
}

/// One cross-resonance pulse with rotation `exp(-i area · generator)`.
pub fn cr_pulse(
    label: &str,
    generator: PauliSum,
    area: f64,
    timing: &GateTiming,
) -> Result<PulseGate> {
    let rise = timing.cr_rise_sigmas * timing.cr_sigma;
    PulseGate::new(
        label,
        generator,
        timing.cr_pulse,
        Envelope::gaussian_square(timing.cr_pulse, rise, timing.cr_sigma, area),
    )
}

/// Appends the echoed sequence for `exp(-i angle/2 · Z_c X_t)`.
pub fn append_echoed_zx(
    circuit: &mut Circuit,
    control: usize,
    target: usize,
    angle: f64,
    timing: &GateTiming,
) -> Result<()> {
    let n = circuit.n_qubits;
    if control == target || control >= n || target >= n {
        return Err(Error::usage(format!(
            "invalid entangler pair ({control}, {target}) on {n} qubits"
        )));
    }
    let zx = PauliString::from_sites(n, &[(control, Pauli::Z), (target, Pauli::X)])?;
    let generator = PauliSum::single(1.0, zx)?;
    let quarter = angle / 4.0;
    circuit.push_pulse(cr_pulse(
        &format!("cr_plus_q{control}q{target}"),
        generator.clone(),
        quarter,
        timing,
    )?)?;
    circuit.push_pulse(x_pulse(n, control, PI, timing)?)?;
    circuit.push_pulse(cr_pulse(
        &format!("cr_minus_q{control}q{target}"),
        generator,
        -quarter,
        timing,
    )?)?;
    circuit.push_pulse(x_pulse(n, control, PI, timing)?)?;
    Ok(())
}

/// Lowers a native gate list (in time order) to a timed circuit.
pub fn compile(n_qubits: usize, gates: &[NativeGate], timing: &GateTiming) -> Result<Circuit> {
    timing.check()?;
    let mut circuit = Circuit::new(n_qubits, timing.buffer);
    for g in gates {
        if g.qubits().iter().any(|&q| q >= n_qubits) {
            return Err(Error::usage(format!("gate {g:?} outside {n_qubits}-qubit register")));
        }
        match *g {
            NativeGate::Rz { qubit, angle } => {
                circuit.push_virtual_z(qubit, angle);
            }
            NativeGate::X90 { qubit } => {
                circuit.push_pulse(x_pulse(n_qubits, qubit, PI / 2.0, timing)?)?;
            }
            NativeGate::Zx {
                control,
                target,
                angle,
            } => append_echoed_zx(&mut circuit, control, target, angle, timing)?,
        }
    }
    Ok(circuit)
}

/// `exp(-i π/4 Y)` as native gates in time order.
pub fn y90(qubit: usize) -> [NativeGate; 3] {
    [
        NativeGate::Rz {
            qubit,
            angle: -PI / 2.0,
        },
        NativeGate::X90 { qubit },
        NativeGate::Rz {
            qubit,
            angle: PI / 2.0,
        },
    ]
}

/// `exp(+i π/4 Y)` as native gates in time order.
pub fn y_minus90(qubit: usize) -> [NativeGate; 3] {
    [
        NativeGate::Rz {
            qubit,
            angle: PI / 2.0,
        },
        NativeGate::X90 { qubit },
        NativeGate::Rz {
            qubit,
            angle: -PI / 2.0,
        },
    ]
}

/// `exp(-i θ/2 X)` compiled as `Y_{π/2} Z_θ Y_{-π/2}`.
pub fn x_theta(qubit: usize, theta: f64) -> Vec<NativeGate> {
    let mut g = y_minus90(qubit).to_vec();
    g.push(NativeGate::Rz {
        qubit,
        angle: theta,
    });
    g.extend(y90(qubit));
    g
}

/// `Z_{θ₃} X_{π/2} Z_{θ₂} X_{π/2} Z_{θ₁}` (operator order), the generic
/// single-qubit rotation with two physical pulses.
pub fn euler(qubit: usize, theta: [f64; 3]) -> [NativeGate; 5] {
    [
        NativeGate::Rz {
            qubit,
            angle: theta[0],
        },
        NativeGate::X90 { qubit },
        NativeGate::Rz {
            qubit,
            angle: theta[1],
        },
        NativeGate::X90 { qubit },
        NativeGate::Rz {
            qubit,
            angle: theta[2],
        },
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::{pauli_rotation, phase_insensitive_distance};

    #[test]
    fn echoed_entangler_is_zx_rotation() {
        let timing = GateTiming::default();
        for angle in [PI / 2.0, PI / 4.0] {
            let c = compile(2, &[NativeGate::Zx { control: 0, target: 1, angle }], &timing)
                .unwrap();
            let want = pauli_rotation(&"ZX".parse().unwrap(), angle);
            assert!(phase_insensitive_distance(&c.ideal_unitary(), &want) < 1e-10);
            assert_eq!(c.pulse_count(), 4);
        }
    }

    #[test]
    fn reversed_pair() {
        let c = compile(2, &[NativeGate::zx90(1, 0)], &GateTiming::default()).unwrap();
        let want = pauli_rotation(&"XZ".parse().unwrap(), PI / 2.0);
        assert!(phase_insensitive_distance(&c.ideal_unitary(), &want) < 1e-10);
    }

    #[test]
    fn entangler_duration_matches_circuit() {
        let t = GateTiming::default();
        let c = compile(2, &[NativeGate::zx90(0, 1)], &t).unwrap();
        assert!((c.total_duration() - t.entangler_duration()).abs() < 1e-9);
        assert!((t.entangler_duration() - 1193.4).abs() < 1e-9);
    }

    #[test]
    fn y_rotations() {
        let t = GateTiming::default();
        let y = compile(1, &y90(0), &t).unwrap();
        assert!(
            phase_insensitive_distance(&y.ideal_unitary(), &pauli_rotation(&"Y".parse().unwrap(), PI / 2.0))
                < 1e-10
        );
        let ym = compile(1, &y_minus90(0), &t).unwrap();
        assert!(
            phase_insensitive_distance(&ym.ideal_unitary(), &pauli_rotation(&"Y".parse().unwrap(), -PI / 2.0))
                < 1e-10
        );
    }

    #[test]
    fn x_theta_grid() {
        let t = GateTiming::default();
        let x: PauliString = "X".parse().unwrap();
        for k in 0..100 {
            let theta = -PI + 2.0 * PI * k as f64 / 99.0;
            let c = compile(1, &x_theta(0, theta), &t).unwrap();
            assert!(phase_insensitive_distance(&c.ideal_unitary(), &pauli_rotation(&x, theta)) < 1e-10);
        }
    }

    #[test]
    fn out_of_range_gate_rejected() {
        assert!(compile(1, &[NativeGate::X90 { qubit: 1 }], &GateTiming::default()).is_err());
        assert!(compile(2, &[NativeGate::zx90(1, 1)], &GateTiming::default()).is_err());
    }
}
