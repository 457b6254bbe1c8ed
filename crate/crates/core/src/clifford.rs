//! One- and two-qubit Clifford groups over the native gate set.
//!
//! Elements are stored as tableaux: the images of the generators
//! `X_0 … X_{n-1}, Z_0 … Z_{n-1}` under conjugation, each a signed Pauli
//! kept in the form `i^p · X^x Z^z`. Composition and inversion are integer
//! operations. The full group is enumerated once by a shortest-path search
//! from the identity over `{X_{π/2}, Z_{π/2}, ZX_{π/2}}`, ranked by number of
//! entanglers, then physical pulses, so every element comes with a
//! cheapest native word.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};
use std::f64::consts::PI;
use std::sync::OnceLock;

use rand::Rng;

use crate::density::pauli_rotation;
use crate::error::{Error, Result};
use crate::gates::NativeGate;
use crate::pauli::{CMatrix, Pauli, PauliString, C64};

/// `i^phase · X^x Z^z` with qubit 0 at the most significant bit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct XzPauli {
    pub phase: u8,
    pub x: u8,
    pub z: u8,
}

impl XzPauli {
    pub const IDENTITY: XzPauli = XzPauli {
        phase: 0,
        x: 0,
        z: 0,
    };

    /// `sign · P` for the Hermitian string with masks `(x, z)`.
    pub fn hermitian(negative: bool, x: u8, z: u8) -> Self {
        let ys = (x & z).count_ones() as u8;
        XzPauli {
            phase: (2 * u8::from(negative) + ys) % 4,
            x,
            z,
        }
    }

    pub fn mul(self, other: XzPauli) -> XzPauli {
        let swap = 2 * (self.z & other.x).count_ones() as u8;
        XzPauli {
            phase: (self.phase + other.phase + swap) % 4,
            x: self.x ^ other.x,
            z: self.z ^ other.z,
        }
    }

    /// `Some(negative)` if this is `±` a Hermitian string.
    pub fn hermitian_sign(self) -> Option<bool> {
        let ys = (self.x & self.z).count_ones() as u8;
        match (self.phase + 4 - ys % 4) % 4 {
            0 => Some(false),
            2 => Some(true),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Tableau {
    n: u8,
    /// `images[q]` for `X_q`, `images[n + q]` for `Z_q`.
    images: [XzPauli; 4],
}

impl Tableau {
    pub fn identity(n_qubits: usize) -> Self {
        assert!((1..=2).contains(&n_qubits), "tableaux support 1 or 2 qubits");
        let mut images = [XzPauli::IDENTITY; 4];
        for q in 0..n_qubits {
            let bit = 1u8 << (n_qubits - 1 - q);
            images[q] = XzPauli {
                phase: 0,
                x: bit,
                z: 0,
            };
            images[n_qubits + q] = XzPauli {
                phase: 0,
                x: 0,
                z: bit,
            };
        }
        Tableau {
            n: n_qubits as u8,
            images,
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n as usize
    }

    /// `C P C†` for an arbitrary Pauli.
    pub fn apply(&self, p: XzPauli) -> XzPauli {
        let n = self.n as usize;
        let mut out = XzPauli {
            phase: p.phase,
            x: 0,
            z: 0,
        };
        for q in 0..n {
            let bit = 1u8 << (n - 1 - q);
            if p.x & bit != 0 {
                out = out.mul(self.images[q]);
            }
            if p.z & bit != 0 {
                out = out.mul(self.images[n + q]);
            }
        }
        out
    }

    /// `self ∘ first`: apply `first`, then `self`.
    pub fn after(&self, first: &Tableau) -> Tableau {
        let mut images = [XzPauli::IDENTITY; 4];
        for (k, img) in images.iter_mut().enumerate().take(2 * self.n as usize) {
            *img = self.apply(first.images[k]);
        }
        Tableau { n: self.n, images }
    }

    pub fn inverse(&self) -> Tableau {
        let n = self.n as usize;
        let id = Tableau::identity(n);
        let mut images = [XzPauli::IDENTITY; 4];
        let size = 1u8 << n;
        for x in 0..size {
            for z in 0..size {
                let img = self.apply(XzPauli { phase: 0, x, z });
                for k in 0..2 * n {
                    let g = id.images[k];
                    if img.x == g.x && img.z == g.z {
                        images[k] = XzPauli {
                            phase: (4 - img.phase) % 4,
                            x,
                            z,
                        };
                    }
                }
            }
        }
        Tableau { n: self.n, images }
    }

    /// Tableau of a Clifford unitary; fails if `u` is not Clifford.
    pub fn from_unitary(n_qubits: usize, u: &CMatrix) -> Result<Self> {
        let id = Tableau::identity(n_qubits);
        let dim = 1usize << n_qubits;
        let mut images = [XzPauli::IDENTITY; 4];
        for k in 0..2 * n_qubits {
            let g = xz_matrix(n_qubits, id.images[k]);
            let m = u * g * u.adjoint();
            let mut found = None;
            'search: for x in 0..(1u8 << n_qubits) {
                for z in 0..(1u8 << n_qubits) {
                    let p = xz_matrix(n_qubits, XzPauli { phase: 0, x, z });
                    let overlap = (p.adjoint() * &m).trace() / dim as f64;
                    if (overlap.norm() - 1.0).abs() < 1e-8 {
                        let phase = [C64::new(1.0, 0.0), C64::new(0.0, 1.0), C64::new(-1.0, 0.0), C64::new(0.0, -1.0)]
                            .iter()
                            .position(|w| (w - overlap).norm() < 1e-8);
                        if let Some(ph) = phase {
                            found = Some(XzPauli {
                                phase: ph as u8,
                                x,
                                z,
                            });
                            break 'search;
                        }
                    }
                }
            }
            images[k] = found.ok_or_else(|| Error::usage("unitary is not a Clifford"))?;
        }
        Ok(Tableau {
            n: n_qubits as u8,
            images,
        })
    }

    pub fn of_gate(n_qubits: usize, gate: &NativeGate) -> Result<Self> {
        Tableau::from_unitary(n_qubits, &native_unitary(n_qubits, gate)?)
    }

    pub fn of_word(n_qubits: usize, word: &[NativeGate]) -> Result<Self> {
        let mut t = Tableau::identity(n_qubits);
        for g in word {
            t = Tableau::of_gate(n_qubits, g)?.after(&t);
        }
        Ok(t)
    }

    /// True when the images are Hermitian and obey the canonical
    /// commutation relations.
    pub fn is_valid(&self) -> bool {
        let n = self.n as usize;
        let imgs = &self.images[..2 * n];
        if imgs.iter().any(|p| p.hermitian_sign().is_none()) {
            return false;
        }
        let anticommute = |a: XzPauli, b: XzPauli| {
            ((a.x & b.z).count_ones() + (a.z & b.x).count_ones()) % 2 == 1
        };
        for i in 0..2 * n {
            for j in 0..2 * n {
                let want = i != j && i % n == j % n;
                if anticommute(imgs[i], imgs[j]) != want {
                    return false;
                }
            }
        }
        true
    }
}

/// Dense matrix of `i^p X^x Z^z`.
pub fn xz_matrix(n_qubits: usize, p: XzPauli) -> CMatrix {
    let dim = 1usize << n_qubits;
    let phase = [C64::new(1.0, 0.0), C64::new(0.0, 1.0), C64::new(-1.0, 0.0), C64::new(0.0, -1.0)]
        [p.phase as usize];
    let mut m = CMatrix::zeros(dim, dim);
    for col in 0..dim {
        let sign = if (col & p.z as usize).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
        m[(col ^ p.x as usize, col)] = phase * sign;
    }
    m
}

/// Ideal unitary of one native gate.
pub fn native_unitary(n_qubits: usize, gate: &NativeGate) -> Result<CMatrix> {
    Ok(match *gate {
        NativeGate::Rz { qubit, angle } => {
            pauli_rotation(&PauliString::single(n_qubits, qubit, Pauli::Z)?, angle)
        }
        NativeGate::X90 { qubit } => {
            pauli_rotation(&PauliString::single(n_qubits, qubit, Pauli::X)?, PI / 2.0)
        }
        NativeGate::Zx {
            control,
            target,
            angle,
        } => pauli_rotation(
            &PauliString::from_sites(n_qubits, &[(control, Pauli::Z), (target, Pauli::X)])?,
            angle,
        ),
    })
}

/// Ideal unitary of a word in time order.
pub fn word_unitary(n_qubits: usize, word: &[NativeGate]) -> Result<CMatrix> {
    let dim = 1usize << n_qubits;
    let mut u = CMatrix::identity(dim, dim);
    for g in word {
        u = native_unitary(n_qubits, g)? * u;
    }
    Ok(u)
}

/// The enumerated Clifford group with a cheapest word per element.
pub struct CliffordGroup {
    n_qubits: usize,
    elements: Vec<Tableau>,
    words: Vec<Vec<NativeGate>>,
    index: HashMap<Tableau, usize>,
}

impl CliffordGroup {
    /// The shared group for 1 or 2 qubits.
    pub fn get(n_qubits: usize) -> Result<&'static CliffordGroup> {
        static ONE: OnceLock<CliffordGroup> = OnceLock::new();
        static TWO: OnceLock<CliffordGroup> = OnceLock::new();
        match n_qubits {
            1 => Ok(ONE.get_or_init(|| CliffordGroup::enumerate(1))),
            2 => Ok(TWO.get_or_init(|| CliffordGroup::enumerate(2))),
            _ => Err(Error::usage(format!(
                "Clifford sampling supports 1 or 2 qubits, got {n_qubits}"
            ))),
        }
    }

    fn enumerate(n: usize) -> CliffordGroup {
        let mut moves: Vec<NativeGate> = Vec::new();
        for q in 0..n {
            moves.push(NativeGate::X90 { qubit: q });
            moves.push(NativeGate::Rz {
                qubit: q,
                angle: PI / 2.0,
            });
        }
        if n == 2 {
            moves.push(NativeGate::zx90(0, 1));
        }
        let step: Vec<(Tableau, (u32, u32, u32))> = moves
            .iter()
            .map(|g| {
                let cost = (
                    u32::from(g.is_entangler()),
                    u32::from(matches!(g, NativeGate::X90 { .. })),
                    1,
                );
                (Tableau::of_gate(n, g).expect("native generators are Clifford"), cost)
            })
            .collect();

        let start = Tableau::identity(n);
        let mut best: HashMap<Tableau, ((u32, u32, u32), Option<(Tableau, usize)>)> =
            HashMap::new();
        best.insert(start, ((0, 0, 0), None));
        let mut heap = BinaryHeap::new();
        let mut order: Vec<Tableau> = Vec::new();
        heap.push(Reverse(((0u32, 0u32, 0u32), key(&start), 0usize)));
        let mut states = vec![start];
        let mut done: HashMap<Tableau, ()> = HashMap::new();
        while let Some(Reverse((cost, _, sidx))) = heap.pop() {
            let t = states[sidx];
            if done.contains_key(&t) || best[&t].0 != cost {
                continue;
            }
            done.insert(t, ());
            order.push(t);
            for (m, (g, c)) in step.iter().enumerate() {
                let next = g.after(&t);
                let nc = (cost.0 + c.0, cost.1 + c.1, cost.2 + c.2);
                let better = match best.get(&next) {
                    None => true,
                    Some((old, _)) => nc < *old,
                };
                if better {
                    best.insert(next, (nc, Some((t, m))));
                    states.push(next);
                    heap.push(Reverse((nc, key(&next), states.len() - 1)));
                }
            }
        }
        let mut words = Vec::with_capacity(order.len());
        let mut index = HashMap::with_capacity(order.len());
        for (i, t) in order.iter().enumerate() {
            let mut word = Vec::new();
            let mut cur = *t;
            while let Some((prev, m)) = best[&cur].1 {
                word.push(moves[m]);
                cur = prev;
            }
            word.reverse();
            words.push(word);
            index.insert(*t, i);
        }
        CliffordGroup {
            n_qubits: n,
            elements: order,
            words,
            index,
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn element(&self, i: usize) -> &Tableau {
        &self.elements[i]
    }

    pub fn word(&self, i: usize) -> &[NativeGate] {
        &self.words[i]
    }

    pub fn index_of(&self, t: &Tableau) -> Option<usize> {
        self.index.get(t).copied()
    }

    /// Cheapest native word for an arbitrary element.
    pub fn synthesize(&self, t: &Tableau) -> Result<&[NativeGate]> {
        self.index_of(t)
            .map(|i| self.word(i))
            .ok_or_else(|| Error::usage("tableau is not in the group"))
    }

    /// Uniform draw.
    pub fn sample(&self, rng: &mut impl Rng) -> usize {
        rng.random_range(0..self.elements.len())
    }
}

fn key(t: &Tableau) -> u32 {
    t.images.iter().fold(0u32, |acc, p| {
        (acc << 8) | (u32::from(p.phase) << 6) | (u32::from(p.x) << 3) | u32::from(p.z)
    })
}

/// Random Cliffords followed by the inverse of their product.
#[derive(Clone, Debug)]
pub struct IdentitySequence {
    pub n_qubits: usize,
    /// Group indices of the sampled elements, in time order.
    pub sampled: Vec<usize>,
    pub inverse: Tableau,
    /// Native gates in time order, sampled words first.
    pub gates: Vec<NativeGate>,
}

pub fn identity_sequence(n_qubits: usize, length: usize, rng: &mut impl Rng) -> Result<IdentitySequence> {
    let group = CliffordGroup::get(n_qubits)?;
    let mut total = Tableau::identity(n_qubits);
    let mut sampled = Vec::with_capacity(length);
    let mut gates = Vec::new();
    for _ in 0..length {
        let i = group.sample(rng);
        sampled.push(i);
        total = group.element(i).after(&total);
        gates.extend_from_slice(group.word(i));
    }
    let inverse = total.inverse();
    gates.extend_from_slice(group.synthesize(&inverse)?);
    Ok(IdentitySequence {
        n_qubits,
        sampled,
        inverse,
        gates,
    })
}
