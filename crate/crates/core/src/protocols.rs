//! Benchmark circuits: identity-equivalent Clifford sequences, a Bloch
//! sphere trajectory, and Bell-state parity under random Cliffords.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::clifford::{identity_sequence, CliffordGroup, Tableau};
use crate::error::{Error, Result};
use crate::gates::{compile, x_theta, GateTiming, NativeGate};
use crate::pauli::{CMatrix, PauliSum, C64};
use crate::pulse::Circuit;

/// Number of trajectory steps from `|0⟩` to `|1⟩`.
pub const TRAJECTORY_STEPS: usize = 30;

/// `m` uniformly random Cliffords followed by their exact inverse.
pub fn random_identity_clifford_circuit(
    n_qubits: usize,
    length: usize,
    seed: u64,
    timing: &GateTiming,
) -> Result<Circuit> {
    if length == 0 {
        return Err(Error::usage("sequence length must be ≥ 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let seq = identity_sequence(n_qubits, length, &mut rng)?;
    compile(n_qubits, &seq.gates, timing)
}

/// Rotation angle of trajectory point `j`.
pub fn trajectory_angle(j: usize) -> f64 {
    j as f64 * PI / TRAJECTORY_STEPS as f64
}

/// Native gates for the step `U_j → U_{j+1}`:
/// `Z_{4θ(j+1)} X_{θ(j+1)} X_{-θ(j)} Z_{-4θ(j)}` in operator order.
pub fn trajectory_step(j: usize) -> Vec<NativeGate> {
    let (a, b) = (trajectory_angle(j), trajectory_angle(j + 1));
    let mut g = vec![NativeGate::Rz {
        qubit: 0,
        angle: -4.0 * a,
    }];
    g.extend(x_theta(0, -a));
    g.extend(x_theta(0, b));
    g.push(NativeGate::Rz {
        qubit: 0,
        angle: 4.0 * b,
    });
    g
}

/// Circuit preparing `U_j |0⟩` by applying the recursion `j` times.
pub fn trajectory_circuit(j: usize, timing: &GateTiming) -> Result<Circuit> {
    if j > TRAJECTORY_STEPS {
        return Err(Error::usage(format!(
            "trajectory index {j} exceeds {TRAJECTORY_STEPS}"
        )));
    }
    let gates: Vec<NativeGate> = (0..j).flat_map(trajectory_step).collect();
    compile(1, &gates, timing)
}

/// The 30 circuits for `j = 1 … 30`; the last one ends in `|1⟩`.
pub fn trajectory_circuits(timing: &GateTiming) -> Result<Vec<Circuit>> {
    (1..=TRAJECTORY_STEPS)
        .map(|j| trajectory_circuit(j, timing))
        .collect()
}

/// Bell-state preparation `CNOT · (H ⊗ I)` as a cheapest native word.
pub fn bell_preparation() -> Result<Vec<NativeGate>> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let r = |v: f64| C64::new(v, 0.0);
    let h = CMatrix::from_row_slice(2, 2, &[r(s), r(s), r(s), r(-s)]);
    let hi = h.kronecker(&CMatrix::identity(2, 2));
    let mut cnot = CMatrix::zeros(4, 4);
    for (from, to) in [(0, 0), (1, 1), (2, 3), (3, 2)] {
        cnot[(to, from)] = r(1.0);
    }
    let t = Tableau::from_unitary(2, &(cnot * hi))?;
    Ok(CliffordGroup::get(2)?.synthesize(&t)?.to_vec())
}

/// Bell preparation followed by an identity-equivalent two-qubit
/// sequence, with the `ZZ` parity as observable. A zero length skips the
/// sequence.
pub fn bell_parity_experiment(
    sequence_length: usize,
    seed: u64,
    timing: &GateTiming,
) -> Result<(Circuit, PauliSum)> {
    let mut gates = bell_preparation()?;
    if sequence_length > 0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        gates.extend(identity_sequence(2, sequence_length, &mut rng)?.gates);
    }
    let circuit = compile(2, &gates, timing)?;
    Ok((circuit, PauliSum::from_pairs(&[(1.0, "ZZ")])?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::{apply_unitary, DensityMatrix};
    use crate::pauli::expectation;

    #[test]
    fn bell_prep_gives_parity_one() {
        let (c, zz) = bell_parity_experiment(0, 0, &GateTiming::default()).unwrap();
        let rho = apply_unitary(&DensityMatrix::ground(2).unwrap(), &c.ideal_unitary()).unwrap();
        assert!((expectation(&rho, &zz).unwrap() - 1.0).abs() < 1e-10);
        let xx = PauliSum::from_pairs(&[(1.0, "XX")]).unwrap();
        assert!((expectation(&rho, &xx).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn trajectory_endpoint_is_excited() {
        let c = trajectory_circuit(30, &GateTiming::default()).unwrap();
        let rho = apply_unitary(&DensityMatrix::ground(1).unwrap(), &c.ideal_unitary()).unwrap();
        assert!((rho.matrix()[(1, 1)].re - 1.0).abs() < 1e-10);
        assert_eq!(c.pulse_count(), 4 * 30);
        assert_eq!(trajectory_circuit(0, &GateTiming::default()).unwrap().pulse_count(), 0);
    }

    #[test]
    fn zero_length_rejected() {
        assert!(random_identity_clifford_circuit(1, 0, 1, &GateTiming::default()).is_err());
    }
}
