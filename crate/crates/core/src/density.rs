//! Density matrices and instantaneous unitary action.

use nalgebra::SymmetricEigen;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pauli::{CMatrix, C64, MAX_QUBITS};

pub const HERMITIAN_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-10;
pub const POSITIVITY_TOL: f64 = 1e-8;
pub const UNITARITY_TOL: f64 = 1e-10;

/// `2ᴺ × 2ᴺ` Hermitian, unit-trace, positive semidefinite state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityMatrix {
    n_qubits: usize,
    #[serde(with = "matrix_serde")]
    rho: CMatrix,
}

impl DensityMatrix {
    /// Validates all invariants, including positivity via an eigensolve.
    pub fn new(n_qubits: usize, rho: CMatrix) -> Result<Self> {
        let state = Self::from_matrix_unchecked(n_qubits, rho)?;
        state.validate()?;
        Ok(state)
    }

    pub(crate) fn from_matrix_unchecked(n_qubits: usize, rho: CMatrix) -> Result<Self> {
        check_size(n_qubits)?;
        let dim = 1usize << n_qubits;
        if rho.nrows() != dim || rho.ncols() != dim {
            return Err(Error::usage(format!(
                "matrix is {}x{}, expected {dim}x{dim}",
                rho.nrows(),
                rho.ncols()
            )));
        }
        Ok(DensityMatrix { n_qubits, rho })
    }

    /// Computational basis state `|index⟩⟨index|`.
    pub fn basis(n_qubits: usize, index: usize) -> Result<Self> {
        check_size(n_qubits)?;
        let dim = 1usize << n_qubits;
        if index >= dim {
            return Err(Error::usage(format!(
                "basis index {index} out of range for {n_qubits} qubits"
            )));
        }
        let mut rho = CMatrix::zeros(dim, dim);
        rho[(index, index)] = C64::new(1.0, 0.0);
        Ok(DensityMatrix { n_qubits, rho })
    }

    pub fn ground(n_qubits: usize) -> Result<Self> {
        Self::basis(n_qubits, 0)
    }

    pub fn maximally_mixed(n_qubits: usize) -> Result<Self> {
        check_size(n_qubits)?;
        let dim = 1usize << n_qubits;
        let rho = CMatrix::identity(dim, dim) * C64::new(1.0 / dim as f64, 0.0);
        Ok(DensityMatrix { n_qubits, rho })
    }

    /// `|ψ⟩⟨ψ|` for a normalized state vector.
    pub fn pure(n_qubits: usize, psi: &[C64]) -> Result<Self> {
        check_size(n_qubits)?;
        let dim = 1usize << n_qubits;
        if psi.len() != dim {
            return Err(Error::usage(format!(
                "state vector has length {}, expected {dim}",
                psi.len()
            )));
        }
        let norm: f64 = psi.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > TRACE_TOL {
            return Err(Error::usage(format!("state vector norm² is {norm}")));
        }
        let rho = CMatrix::from_fn(dim, dim, |r, c| psi[r] * psi[c].conj());
        Ok(DensityMatrix { n_qubits, rho })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.rho
    }

    pub fn into_matrix(self) -> CMatrix {
        self.rho
    }

    pub fn trace(&self) -> C64 {
        self.rho.trace()
    }

    pub fn purity(&self) -> f64 {
        (&self.rho * &self.rho).trace().re
    }

    /// Diagonal in the computational basis, clipped at zero.
    pub fn probabilities(&self) -> Vec<f64> {
        (0..self.dim())
            .map(|i| self.rho[(i, i)].re.max(0.0))
            .collect()
    }

    pub fn hermiticity_error(&self) -> f64 {
        let d = self.dim();
        let mut worst: f64 = 0.0;
        for r in 0..d {
            for c in r..d {
                worst = worst.max((self.rho[(r, c)] - self.rho[(c, r)].conj()).norm());
            }
        }
        worst
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let h = (&self.rho + self.rho.adjoint()) * C64::new(0.5, 0.0);
        SymmetricEigen::new(h)
            .eigenvalues
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn validate(&self) -> Result<()> {
        let herm = self.hermiticity_error();
        if herm > HERMITIAN_TOL {
            return Err(Error::Numerical {
                message: "density matrix is not Hermitian".into(),
                achieved: herm,
            });
        }
        let tr = (self.trace() - C64::new(1.0, 0.0)).norm();
        if tr > TRACE_TOL {
            return Err(Error::Numerical {
                message: "density matrix trace deviates from 1".into(),
                achieved: tr,
            });
        }
        let min = self.min_eigenvalue();
        if min < -POSITIVITY_TOL {
            return Err(Error::Numerical {
                message: "density matrix has a negative eigenvalue".into(),
                achieved: -min,
            });
        }
        Ok(())
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &DensityMatrix) -> f64 {
        (&self.rho - &other.rho)
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// Applies a diagonal phase `exp(-iθZ/2)` on one qubit in place.
    pub fn apply_rz(&mut self, qubit: usize, angle: f64) {
        let n = self.n_qubits;
        let bit = 1usize << (n - 1 - qubit);
        let d = self.dim();
        // ρ[r,c] picks up exp(-iθ(s_r - s_c)/2) with s = +1 for bit 0, -1 for bit 1.
        let plus = C64::from_polar(1.0, -angle);
        let minus = C64::from_polar(1.0, angle);
        for r in 0..d {
            let rb = r & bit != 0;
            for c in 0..d {
                let cb = c & bit != 0;
                match (rb, cb) {
                    (false, true) => self.rho[(r, c)] *= plus,
                    (true, false) => self.rho[(r, c)] *= minus,
                    _ => {}
                }
            }
        }
    }
}

fn check_size(n_qubits: usize) -> Result<()> {
    if n_qubits == 0 || n_qubits > MAX_QUBITS {
        return Err(Error::Capacity {
            n_qubits,
            max: MAX_QUBITS,
        });
    }
    Ok(())
}

pub fn is_unitary(u: &CMatrix, tol: f64) -> bool {
    if u.nrows() != u.ncols() {
        return false;
    }
    let prod = u.adjoint() * u;
    let id = CMatrix::identity(u.nrows(), u.ncols());
    (prod - id).iter().all(|z| z.norm() <= tol)
}

/// `u ρ u†`.
pub fn apply_unitary(rho: &DensityMatrix, u: &CMatrix) -> Result<DensityMatrix> {
    if u.nrows() != rho.dim() || u.ncols() != rho.dim() {
        return Err(Error::usage(format!(
            "unitary is {}x{}, state dimension is {}",
            u.nrows(),
            u.ncols(),
            rho.dim()
        )));
    }
    if !is_unitary(u, UNITARITY_TOL) {
        return Err(Error::usage("matrix is not unitary within 1e-10"));
    }
    let out = u * rho.matrix() * u.adjoint();
    DensityMatrix::from_matrix_unchecked(rho.n_qubits(), out)
}

/// Embeds a `2×2` operator acting on `qubit` into the full register.
pub fn embed_single(n_qubits: usize, qubit: usize, op: &[[C64; 2]; 2]) -> CMatrix {
    let dim = 1usize << n_qubits;
    let bit = 1usize << (n_qubits - 1 - qubit);
    CMatrix::from_fn(dim, dim, |r, c| {
        if (r & !bit) != (c & !bit) {
            return C64::new(0.0, 0.0);
        }
        let rb = usize::from(r & bit != 0);
        let cb = usize::from(c & bit != 0);
        op[rb][cb]
    })
}

/// `exp(-i θ/2 · P)` for a Pauli string `P` with `P² = I`.
pub fn pauli_rotation(p: &crate::pauli::PauliString, angle: f64) -> CMatrix {
    let dim = 1usize << p.len();
    let id = CMatrix::identity(dim, dim);
    id * C64::new((angle / 2.0).cos(), 0.0) + p.matrix() * C64::new(0.0, -(angle / 2.0).sin())
}

/// Operator-norm distance between two unitaries modulo a global phase,
/// bounded above by the Frobenius distance after phase alignment.
pub fn phase_insensitive_distance(a: &CMatrix, b: &CMatrix) -> f64 {
    let overlap = (a.adjoint() * b).trace();
    let phase = if overlap.norm() > 0.0 {
        overlap / overlap.norm()
    } else {
        C64::new(1.0, 0.0)
    };
    let diff = a * phase - b;
    diff.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

mod matrix_serde {
    use super::{CMatrix, C64};
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Raw {
        dim: usize,
        re: Vec<f64>,
        im: Vec<f64>,
    }

    pub fn serialize<S: Serializer>(m: &CMatrix, s: S) -> Result<S::Ok, S::Error> {
        let dim = m.nrows();
        let mut re = Vec::with_capacity(dim * dim);
        let mut im = Vec::with_capacity(dim * dim);
        for r in 0..dim {
            for c in 0..dim {
                re.push(m[(r, c)].re);
                im.push(m[(r, c)].im);
            }
        }
        Raw { dim, re, im }.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<CMatrix, D::Error> {
        let raw = Raw::deserialize(d)?;
        if raw.re.len() != raw.dim * raw.dim || raw.im.len() != raw.dim * raw.dim {
            return Err(serde::de::Error::custom("matrix entry count mismatch"));
        }
        Ok(CMatrix::from_fn(raw.dim, raw.dim, |r, c| {
            C64::new(raw.re[r * raw.dim + c], raw.im[r * raw.dim + c])
        }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::{Pauli, PauliString};

    #[test]
    fn identity_leaves_state_unchanged() {
        let rho = DensityMatrix::maximally_mixed(2).unwrap();
        let out = apply_unitary(&rho, &CMatrix::identity(4, 4)).unwrap();
        assert!(out.max_abs_diff(&rho) < 1e-15);
    }

    #[test]
    fn z_rotation_on_diagonal_state_is_trivial() {
        let mut rho = DensityMatrix::basis(1, 1).unwrap();
        let u = pauli_rotation(&"Z".parse().unwrap(), 0.7);
        let out = apply_unitary(&rho, &u).unwrap();
        assert!(out.max_abs_diff(&rho) < 1e-15);
        let before = rho.clone();
        rho.apply_rz(0, 1.3);
        assert!(rho.max_abs_diff(&before) < 1e-15);
    }

    #[test]
    fn x_pi_flips_ground_state() {
        let rho = DensityMatrix::ground(1).unwrap();
        let u = pauli_rotation(&"X".parse().unwrap(), std::f64::consts::PI);
        let out = apply_unitary(&rho, &u).unwrap();
        assert!(out.max_abs_diff(&DensityMatrix::basis(1, 1).unwrap()) < 1e-15);
    }

    #[test]
    fn non_unitary_is_rejected() {
        let rho = DensityMatrix::ground(1).unwrap();
        let m = CMatrix::identity(2, 2) * C64::new(2.0, 0.0);
        assert!(matches!(apply_unitary(&rho, &m), Err(Error::Usage(_))));
    }

    #[test]
    fn in_place_rz_matches_dense_rotation() {
        let psi = [C64::new(0.6, 0.0), C64::new(0.0, 0.8)];
        let plus = DensityMatrix::pure(1, &psi).unwrap();
        let rho = DensityMatrix::new(2, {
            let m = plus.matrix();
            m.kronecker(m)
        })
        .unwrap();
        for q in 0..2 {
            let mut fast = rho.clone();
            fast.apply_rz(q, 0.9);
            let p = PauliString::single(2, q, Pauli::Z).unwrap();
            let slow = apply_unitary(&rho, &pauli_rotation(&p, 0.9)).unwrap();
            assert!(fast.max_abs_diff(&slow) < 1e-14);
        }
    }

    #[test]
    fn validation_rejects_bad_trace() {
        let m = CMatrix::identity(2, 2);
        assert!(DensityMatrix::new(1, m).is_err());
    }
}
