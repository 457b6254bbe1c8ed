#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use zne_lab::density::embed_single;
use zne_lab::gates::{compile, GateTiming, NativeGate};
use zne_lab::pauli::{CMatrix, C64};
use zne_lab::{Circuit, DensityMatrix, Dissipator, PulseGate};

/// Random native circuit mixing virtual Z, `X_{π/2}` and echoed entanglers.
pub fn random_circuit(n: usize, len: usize, seed: u64, timing: &GateTiming) -> Circuit {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut gates = Vec::new();
    for _ in 0..len {
        let q = rng.random_range(0..n);
        match rng.random_range(0..3) {
            0 => gates.push(NativeGate::Rz {
                qubit: q,
                angle: rng.random_range(-3.0..3.0),
            }),
            1 => gates.push(NativeGate::X90 { qubit: q }),
            _ if n > 1 => {
                let t = (q + 1) % n;
                gates.push(NativeGate::Zx {
                    control: q,
                    target: t,
                    angle: rng.random_range(-2.0..2.0),
                });
            }
            _ => gates.push(NativeGate::X90 { qubit: q }),
        }
    }
    compile(n, &gates, timing).unwrap()
}

/// Short pulses and buffers so dense simulation stays fast.
pub fn fast_timing() -> GateTiming {
    GateTiming {
        single_qubit: 20.0,
        buffer: 2.0,
        cr_pulse: 60.0,
        cr_sigma: 4.0,
        cr_rise_sigmas: 2.0,
    }
}

pub fn random_pure(n: usize, seed: u64) -> DensityMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = 1 << n;
    let mut psi: Vec<C64> = (0..d)
        .map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    psi.iter_mut().for_each(|z| *z /= norm);
    DensityMatrix::pure(n, &psi).unwrap()
}

/// Row-major vectorization: `vec(A ρ B) = (A ⊗ Bᵀ) vec(ρ)`.
fn left_right(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(&b.transpose())
}

/// Dense Lindbladian of `H` plus jump operators.
pub fn liouvillian(h: &CMatrix, dissipators: &[Dissipator], n: usize) -> CMatrix {
    let d = 1 << n;
    let id = CMatrix::identity(d, d);
    let i = C64::new(0.0, 1.0);
    let mut l = (left_right(h, &id) - left_right(&id, h)) * (-i);
    for dis in dissipators {
        let op = embed_single(n, dis.qubit, &dis.op);
        let ld = op.adjoint() * &op;
        let r = C64::new(dis.rate, 0.0);
        l += (left_right(&op, &op.adjoint()) - (left_right(&ld, &id) + left_right(&id, &ld)) * C64::new(0.5, 0.0)) * r;
    }
    l
}

/// `exp(L t) ρ` for a flat pulse, by dense matrix exponential.
pub fn oracle_evolve(rho: &DensityMatrix, gate: &PulseGate, dissipators: &[Dissipator]) -> CMatrix {
    let n = rho.n_qubits();
    let d = 1 << n;
    let amp = gate.envelope.values[0];
    let h = gate.generator.dense_matrix() * C64::new(amp, 0.0);
    let l = liouvillian(&h, dissipators, n) * C64::new(gate.duration, 0.0);
    let prop = l.exp();
    let v = CMatrix::from_iterator(d * d, 1, rho.matrix().transpose().iter().copied());
    let out = prop * v;
    CMatrix::from_iterator(d, d, out.iter().copied()).transpose()
}

pub fn max_abs(a: &CMatrix, b: &CMatrix) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn real_max_abs(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).iter().map(|z| z.abs()).fold(0.0, f64::max)
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = x.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}
