//! Superoperator machinery behind [`crate::pulse`].
//!
//! Density matrices are vectorized row-major, `vec(ρ)[i·d + j] = ρ[i, j]`,
//! so `vec(AρB) = (A ⊗ Bᵀ) vec(ρ)`. A gate whose generator splits into
//! terms on disjoint qubit groups, with single-qubit dissipators, has a
//! Liouvillian that is a sum of commuting pieces on disjoint tensor
//! factors; each piece is propagated on its own small space.

use crate::noise::Dissipator;
use crate::pauli::{CMatrix, Pauli, PauliString, PauliSum, C64};

/// Superoperator acting on an ordered subset of qubits.
#[derive(Clone, Debug)]
pub(crate) struct LocalChannel {
    pub qubits: Vec<usize>,
    pub superop: CMatrix,
}

/// Product of local channels on pairwise-disjoint qubit sets.
#[derive(Clone, Debug, Default)]
pub(crate) struct Channel {
    pub parts: Vec<LocalChannel>,
}

impl Channel {
    pub fn apply(&self, n_qubits: usize, rho: &mut CMatrix) {
        for part in &self.parts {
            part.apply(n_qubits, rho);
        }
    }
}

impl LocalChannel {
    pub fn apply(&self, n_qubits: usize, rho: &mut CMatrix) {
        apply_local(&self.qubits, &self.superop, n_qubits, rho);
    }
}

/// Applies `superop` (acting on the ordered `qubits`) to `rho` in place.
pub(crate) fn apply_local(qubits: &[usize], superop: &CMatrix, n_qubits: usize, rho: &mut CMatrix) {
    let k = qubits.len();
    let dk = 1usize << k;
    let m = dk * dk;
    let dim = 1usize << n_qubits;
    let offsets: Vec<usize> = (0..dk)
        .map(|a| {
            let mut off = 0;
            for (pos, &q) in qubits.iter().enumerate() {
                if a & (1 << (k - 1 - pos)) != 0 {
                    off |= 1 << (n_qubits - 1 - q);
                }
            }
            off
        })
        .collect();
    let mask = qubits.iter().fold(0usize, |acc, &q| acc | 1 << (n_qubits - 1 - q));
    let rest: Vec<usize> = (0..dim).filter(|i| i & mask == 0).collect();
    // both matrices are column-major
    let s = superop.as_slice();
    let data = rho.as_mut_slice();
    let zero = C64::new(0.0, 0.0);
    let mut v = vec![zero; m];
    let mut w = vec![zero; m];
    for &r0 in &rest {
        for &c0 in &rest {
            for a in 0..dk {
                for b in 0..dk {
                    v[a * dk + b] = data[(c0 | offsets[b]) * dim + (r0 | offsets[a])];
                }
            }
            w.fill(zero);
            for (j, &vj) in v.iter().enumerate() {
                if vj == zero {
                    continue;
                }
                for (wi, &sij) in w.iter_mut().zip(&s[j * m..(j + 1) * m]) {
                    *wi += sij * vj;
                }
            }
            for a in 0..dk {
                for b in 0..dk {
                    data[(c0 | offsets[b]) * dim + (r0 | offsets[a])] = w[a * dk + b];
                }
            }
        }
    }
}

/// Defers single-qubit superoperators, composing them per qubit, and
/// writes them into the state only when a wider part touches that qubit.
/// Single-qubit parts on different qubits commute, so the order of the
/// applied channels is preserved.
pub(crate) struct Deferred {
    pending: Vec<Option<CMatrix>>,
}

impl Deferred {
    pub fn new(n_qubits: usize) -> Self {
        Deferred {
            pending: vec![None; n_qubits],
        }
    }

    pub fn push_single(&mut self, qubit: usize, superop: &CMatrix) {
        let next = match self.pending[qubit].take() {
            Some(p) => superop * p,
            None => superop.clone(),
        };
        self.pending[qubit] = Some(next);
    }

    pub fn push(&mut self, part: &LocalChannel, n_qubits: usize, rho: &mut CMatrix) {
        if let [q] = part.qubits[..] {
            self.push_single(q, &part.superop);
        } else {
            for &q in &part.qubits {
                self.flush(q, n_qubits, rho);
            }
            part.apply(n_qubits, rho);
        }
    }

    pub fn flush(&mut self, qubit: usize, n_qubits: usize, rho: &mut CMatrix) {
        if let Some(p) = self.pending[qubit].take() {
            apply_local(&[qubit], &p, n_qubits, rho);
        }
    }

    pub fn flush_all(&mut self, n_qubits: usize, rho: &mut CMatrix) {
        for q in 0..n_qubits {
            self.flush(q, n_qubits, rho);
        }
    }
}

/// Superoperator of the virtual rotation `exp(-i angle Z/2)`.
pub(crate) fn rz_superop(angle: f64) -> CMatrix {
    let one = C64::new(1.0, 0.0);
    CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
        one,
        C64::from_polar(1.0, -angle),
        C64::from_polar(1.0, angle),
        one,
    ]))
}

/// `-i(H ⊗ I - I ⊗ Hᵀ)`.
pub(crate) fn commutator_superop(h: &CMatrix) -> CMatrix {
    let d = h.nrows();
    let id = CMatrix::identity(d, d);
    (h.kronecker(&id) - id.kronecker(&h.transpose())) * C64::new(0.0, -1.0)
}

/// `rate · (L ⊗ L* - ½ L†L ⊗ I - ½ I ⊗ (L†L)ᵀ)`.
pub(crate) fn dissipator_superop(l: &CMatrix, rate: f64) -> CMatrix {
    let d = l.nrows();
    let id = CMatrix::identity(d, d);
    let ldl = l.adjoint() * l;
    let jump = l.kronecker(&l.conjugate());
    let anti = ldl.kronecker(&id) + id.kronecker(&ldl.transpose());
    (jump - anti * C64::new(0.5, 0.0)) * C64::new(rate, 0.0)
}

/// Restricts a string to `qubits` (which must contain its support).
pub(crate) fn restrict(p: &PauliString, qubits: &[usize]) -> PauliString {
    let axes: Vec<Pauli> = qubits.iter().map(|&q| p.axis(q)).collect();
    PauliString::new(axes).expect("restricted string is non-empty")
}

/// Dense Hamiltonian of the terms of `generator` living on `qubits`.
pub(crate) fn local_hamiltonian(generator: &PauliSum, qubits: &[usize]) -> CMatrix {
    let d = 1usize << qubits.len();
    let mut h = CMatrix::zeros(d, d);
    for t in generator.traceless_terms() {
        if t.string.support().iter().all(|q| qubits.contains(q)) {
            h += restrict(&t.string, qubits).matrix() * C64::new(t.coefficient, 0.0);
        }
    }
    h
}

/// Sum of the dissipator superoperators for jumps on `qubits`.
pub(crate) fn local_dissipation(dissipators: &[Dissipator], qubits: &[usize]) -> CMatrix {
    let k = qubits.len();
    let d = 1usize << k;
    let mut total = CMatrix::zeros(d * d, d * d);
    for diss in dissipators {
        if let Some(pos) = qubits.iter().position(|&q| q == diss.qubit) {
            if diss.rate > 0.0 {
                let l = crate::density::embed_single(k, pos, &diss.op);
                total += dissipator_superop(&l, diss.rate);
            }
        }
    }
    total
}

/// One classical RK4 step for the linear system `ẋ = A x`, as a matrix:
/// `I + hA + (hA)²/2 + (hA)³/6 + (hA)⁴/24`.
pub(crate) fn rk4_step(a: &CMatrix, h: f64) -> CMatrix {
    let d = a.nrows();
    let id = CMatrix::identity(d, d);
    let x = a * C64::new(h, 0.0);
    // Horner: I + x(I + x/2(I + x/3(I + x/4)))
    let mut acc = &id + &x * C64::new(0.25, 0.0);
    acc = &id + &x * &acc * C64::new(1.0 / 3.0, 0.0);
    acc = &id + &x * &acc * C64::new(0.5, 0.0);
    &id + &x * &acc
}

pub(crate) fn matrix_power(m: &CMatrix, mut n: u64) -> CMatrix {
    let d = m.nrows();
    let mut result = CMatrix::identity(d, d);
    let mut base = m.clone();
    while n > 0 {
        if n & 1 == 1 {
            result = &base * &result;
        }
        n >>= 1;
        if n > 0 {
            base = &base * &base;
        }
    }
    result
}

/// Number of fixed steps of size at most `dt` covering `length`.
pub(crate) fn step_count(length: f64, dt: f64) -> u64 {
    ((length / dt) - 1e-9).ceil().max(1.0) as u64
}

/// Partitions qubits touched by `generator` into groups coupled by terms.
pub(crate) fn coupled_groups(generator: &PauliSum) -> Vec<Vec<usize>> {
    let n = generator.n_qubits();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while parent[r] != r {
            r = parent[r];
        }
        let mut y = x;
        while parent[y] != r {
            let next = parent[y];
            parent[y] = r;
            y = next;
        }
        r
    }
    let mut touched = vec![false; n];
    for t in generator.traceless_terms() {
        let s = t.string.support();
        for &q in &s {
            touched[q] = true;
        }
        for w in s.windows(2) {
            let a = find(&mut parent, w[0]);
            let b = find(&mut parent, w[1]);
            if a != b {
                parent[a] = b;
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut root_of_group: Vec<usize> = Vec::new();
    for q in 0..n {
        if !touched[q] {
            continue;
        }
        let r = find(&mut parent, q);
        match root_of_group.iter().position(|&x| x == r) {
            Some(i) => groups[i].push(q),
            None => {
                root_of_group.push(r);
                groups.push(vec![q]);
            }
        }
    }
    groups
}
