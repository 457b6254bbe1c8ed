//! Exact N-qubit Pauli operators.
//!
//! Qubit 0 is the leftmost character of an axis string and the most
//! significant bit of a computational-basis index, so `"ZX"` is `Z ⊗ X`
//! with `Z` acting on qubit 0.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::Mul;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::density::DensityMatrix;
use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;

/// Largest register the dense simulator accepts.
pub const MAX_QUBITS: usize = 5;

/// Terms whose magnitude falls below this are dropped during normalization.
pub const COEFFICIENT_CUTOFF: f64 = 1e-15;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

    /// `(x, z)` symplectic bits.
    pub fn bits(self) -> (bool, bool) {
        match self {
            Pauli::I => (false, false),
            Pauli::X => (true, false),
            Pauli::Y => (true, true),
            Pauli::Z => (false, true),
        }
    }

    pub fn from_bits(x: bool, z: bool) -> Pauli {
        match (x, z) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (true, true) => Pauli::Y,
            (false, true) => Pauli::Z,
        }
    }

    pub fn matrix(self) -> [[C64; 2]; 2] {
        let o = C64::new(0.0, 0.0);
        let l = C64::new(1.0, 0.0);
        let i = C64::new(0.0, 1.0);
        match self {
            Pauli::I => [[l, o], [o, l]],
            Pauli::X => [[o, l], [l, o]],
            Pauli::Y => [[o, -i], [i, o]],
            Pauli::Z => [[l, o], [o, -l]],
        }
    }

    /// Single-site product `self · other` with its phase.
    pub fn multiply(self, other: Pauli) -> (Phase, Pauli) {
        use Pauli::*;
        match (self, other) {
            (I, p) | (p, I) => (Phase::ONE, p),
            (a, b) if a == b => (Phase::ONE, I),
            (X, Y) => (Phase::I, Z),
            (Y, Z) => (Phase::I, X),
            (Z, X) => (Phase::I, Y),
            (Y, X) => (Phase::MINUS_I, Z),
            (Z, Y) => (Phase::MINUS_I, X),
            (X, Z) => (Phase::MINUS_I, Y),
            _ => unreachable!(),
        }
    }

    pub fn to_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    fn from_char(c: char) -> Option<Pauli> {
        match c {
            'I' => Some(Pauli::I),
            'X' => Some(Pauli::X),
            'Y' => Some(Pauli::Y),
            'Z' => Some(Pauli::Z),
            _ => None,
        }
    }
}

/// A power of `i`: one of `{+1, +i, -1, -i}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub struct Phase(u8);

impl Phase {
    pub const ONE: Phase = Phase(0);
    pub const I: Phase = Phase(1);
    pub const MINUS_ONE: Phase = Phase(2);
    pub const MINUS_I: Phase = Phase(3);

    pub fn from_power(k: i64) -> Phase {
        Phase(k.rem_euclid(4) as u8)
    }

    /// Exponent `k` in `i^k`, in `0..4`.
    pub fn power(self) -> u8 {
        self.0
    }

    pub fn to_complex(self) -> C64 {
        match self.0 {
            0 => C64::new(1.0, 0.0),
            1 => C64::new(0.0, 1.0),
            2 => C64::new(-1.0, 0.0),
            _ => C64::new(0.0, -1.0),
        }
    }

    pub fn is_real(self) -> bool {
        self.0 % 2 == 0
    }
}

impl Mul for Phase {
    type Output = Phase;
    fn mul(self, rhs: Phase) -> Phase {
        Phase((self.0 + rhs.0) % 4)
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self.0 {
            0 => "+1",
            1 => "+i",
            2 => "-1",
            _ => "-i",
        })
    }
}

/// Tensor product of single-qubit Paulis on `1..=MAX_QUBITS` qubits.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct PauliString {
    axes: Vec<Pauli>,
}

impl PauliString {
    pub fn new(axes: Vec<Pauli>) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::usage("Pauli string must act on at least one qubit"));
        }
        if axes.len() > MAX_QUBITS {
            return Err(Error::Capacity {
                n_qubits: axes.len(),
                max: MAX_QUBITS,
            });
        }
        Ok(PauliString { axes })
    }

    pub fn identity(n_qubits: usize) -> Result<Self> {
        Self::new(vec![Pauli::I; n_qubits])
    }

    /// `axis` on `qubit`, identity elsewhere.
    pub fn single(n_qubits: usize, qubit: usize, axis: Pauli) -> Result<Self> {
        if qubit >= n_qubits {
            return Err(Error::usage(format!(
                "qubit {qubit} out of range for {n_qubits} qubits"
            )));
        }
        let mut axes = vec![Pauli::I; n_qubits];
        axes[qubit] = axis;
        Self::new(axes)
    }

    /// Places `axes` on the listed qubits.
    pub fn from_sites(n_qubits: usize, sites: &[(usize, Pauli)]) -> Result<Self> {
        let mut axes = vec![Pauli::I; n_qubits];
        for &(q, p) in sites {
            if q >= n_qubits {
                return Err(Error::usage(format!(
                    "qubit {q} out of range for {n_qubits} qubits"
                )));
            }
            axes[q] = p;
        }
        Self::new(axes)
    }

    pub fn len(&self) -> usize {
        self.axes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.axes.is_empty()
    }

    pub fn axes(&self) -> &[Pauli] {
        &self.axes
    }

    pub fn axis(&self, qubit: usize) -> Pauli {
        self.axes[qubit]
    }

    pub fn is_identity(&self) -> bool {
        self.axes.iter().all(|&p| p == Pauli::I)
    }

    /// Qubits carrying a non-identity factor.
    pub fn support(&self) -> Vec<usize> {
        self.axes
            .iter()
            .enumerate()
            .filter(|(_, &p)| p != Pauli::I)
            .map(|(q, _)| q)
            .collect()
    }

    pub fn weight(&self) -> usize {
        self.axes.iter().filter(|&&p| p != Pauli::I).count()
    }

    /// Bit masks over basis indices (qubit 0 is the most significant bit).
    pub fn masks(&self) -> (usize, usize) {
        let n = self.axes.len();
        let mut x = 0;
        let mut z = 0;
        for (q, p) in self.axes.iter().enumerate() {
            let (bx, bz) = p.bits();
            let bit = 1 << (n - 1 - q);
            if bx {
                x |= bit;
            }
            if bz {
                z |= bit;
            }
        }
        (x, z)
    }

    fn y_count(&self) -> usize {
        self.axes.iter().filter(|&&p| p == Pauli::Y).count()
    }

    pub fn commutes_with(&self, other: &PauliString) -> bool {
        let anti = self
            .axes
            .iter()
            .zip(&other.axes)
            .filter(|(&a, &b)| a != Pauli::I && b != Pauli::I && a != b)
            .count();
        anti % 2 == 0
    }

    /// Group product `self · other` together with its global phase.
    pub fn multiply(&self, other: &PauliString) -> Result<(Phase, PauliString)> {
        if self.len() != other.len() {
            return Err(Error::usage(format!(
                "cannot multiply Pauli strings of lengths {} and {}",
                self.len(),
                other.len()
            )));
        }
        let mut phase = Phase::ONE;
        let axes = self
            .axes
            .iter()
            .zip(&other.axes)
            .map(|(&a, &b)| {
                let (ph, p) = a.multiply(b);
                phase = phase * ph;
                p
            })
            .collect();
        Ok((phase, PauliString { axes }))
    }

    /// Dense `2ⁿ × 2ⁿ` matrix.
    pub fn matrix(&self) -> CMatrix {
        let dim = 1usize << self.len();
        let (x, z) = self.masks();
        let base = Phase::from_power(self.y_count() as i64).to_complex();
        let mut m = CMatrix::zeros(dim, dim);
        for col in 0..dim {
            let sign = if (col & z).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
            m[(col ^ x, col)] = base * sign;
        }
        m
    }

    /// `Tr(ρ P)` evaluated without forming `P`.
    pub(crate) fn trace_with(&self, rho: &CMatrix) -> C64 {
        let (x, z) = self.masks();
        let base = Phase::from_power(self.y_count() as i64).to_complex();
        let dim = rho.nrows();
        let mut acc = C64::new(0.0, 0.0);
        for col in 0..dim {
            let v = rho[(col, col ^ x)];
            if (col & z).count_ones() % 2 == 0 {
                acc += v;
            } else {
                acc -= v;
            }
        }
        acc * base
    }

    /// Parity-style eigenvalue of a diagonal measurement outcome: the product
    /// of `(-1)^bit` over the support. Only meaningful after rotating each
    /// support qubit into the `Z` basis.
    pub fn outcome_sign(&self, outcome: usize) -> f64 {
        let n = self.len();
        let mut parity = 0;
        for (q, &p) in self.axes.iter().enumerate() {
            if p != Pauli::I {
                parity ^= (outcome >> (n - 1 - q)) & 1;
            }
        }
        if parity == 0 {
            1.0
        } else {
            -1.0
        }
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in &self.axes {
            write!(f, "{}", p.to_char())?;
        }
        Ok(())
    }
}

impl FromStr for PauliString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let axes = s
            .chars()
            .map(|c| {
                Pauli::from_char(c.to_ascii_uppercase())
                    .ok_or_else(|| Error::usage(format!("invalid Pauli axis '{c}' in '{s}'")))
            })
            .collect::<Result<Vec<_>>>()?;
        PauliString::new(axes)
    }
}

impl TryFrom<String> for PauliString {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<PauliString> for String {
    fn from(p: PauliString) -> String {
        p.to_string()
    }
}

/// `coefficient · string`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PauliTerm {
    pub coefficient: f64,
    pub string: PauliString,
}

impl PauliTerm {
    pub fn new(coefficient: f64, string: PauliString) -> Result<Self> {
        if !coefficient.is_finite() {
            return Err(Error::usage(format!(
                "coefficient of {string} is not finite"
            )));
        }
        Ok(PauliTerm {
            coefficient,
            string,
        })
    }
}

/// Real-weighted sum of Pauli strings, kept in canonical form: strings are
/// unique, sorted, and no coefficient is below [`COEFFICIENT_CUTOFF`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPauliSum", into = "RawPauliSum")]
pub struct PauliSum {
    n_qubits: usize,
    terms: Vec<PauliTerm>,
}

#[derive(Serialize, Deserialize)]
struct RawPauliSum {
    n_qubits: usize,
    terms: Vec<PauliTerm>,
}

impl TryFrom<RawPauliSum> for PauliSum {
    type Error = Error;
    fn try_from(raw: RawPauliSum) -> Result<Self> {
        PauliSum::new(raw.n_qubits, raw.terms)
    }
}

impl From<PauliSum> for RawPauliSum {
    fn from(p: PauliSum) -> Self {
        RawPauliSum {
            n_qubits: p.n_qubits,
            terms: p.terms,
        }
    }
}

impl PauliSum {
    pub fn new(n_qubits: usize, terms: Vec<PauliTerm>) -> Result<Self> {
        if n_qubits == 0 || n_qubits > MAX_QUBITS {
            return Err(Error::Capacity {
                n_qubits,
                max: MAX_QUBITS,
            });
        }
        let mut merged: BTreeMap<PauliString, f64> = BTreeMap::new();
        for term in terms {
            if term.string.len() != n_qubits {
                return Err(Error::usage(format!(
                    "term {} has length {}, expected {n_qubits}",
                    term.string,
                    term.string.len()
                )));
            }
            if !term.coefficient.is_finite() {
                return Err(Error::usage(format!(
                    "coefficient of {} is not finite",
                    term.string
                )));
            }
            *merged.entry(term.string).or_insert(0.0) += term.coefficient;
        }
        let terms = merged
            .into_iter()
            .filter(|(_, c)| c.abs() >= COEFFICIENT_CUTOFF)
            .map(|(string, coefficient)| PauliTerm {
                coefficient,
                string,
            })
            .collect();
        Ok(PauliSum { n_qubits, terms })
    }

    pub fn zero(n_qubits: usize) -> Result<Self> {
        Self::new(n_qubits, Vec::new())
    }

    pub fn from_pairs<S: AsRef<str>>(pairs: &[(f64, S)]) -> Result<Self> {
        let terms = pairs
            .iter()
            .map(|(c, s)| PauliTerm::new(*c, s.as_ref().parse()?))
            .collect::<Result<Vec<_>>>()?;
        let n = terms
            .first()
            .map(|t| t.string.len())
            .ok_or_else(|| Error::usage("from_pairs needs at least one term"))?;
        Self::new(n, terms)
    }

    pub fn single(coefficient: f64, string: PauliString) -> Result<Self> {
        let n = string.len();
        Self::new(n, vec![PauliTerm::new(coefficient, string)?])
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn terms(&self) -> &[PauliTerm] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient_of(&self, string: &PauliString) -> f64 {
        self.terms
            .iter()
            .find(|t| &t.string == string)
            .map_or(0.0, |t| t.coefficient)
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        let terms = self
            .terms
            .iter()
            .map(|t| PauliTerm::new(t.coefficient * factor, t.string.clone()))
            .collect::<Result<Vec<_>>>()?;
        Self::new(self.n_qubits, terms)
    }

    pub fn plus(&self, other: &PauliSum) -> Result<Self> {
        let terms = self.terms.iter().chain(&other.terms).cloned().collect();
        Self::new(self.n_qubits, terms)
    }

    /// Terms without the identity string.
    pub fn traceless_terms(&self) -> impl Iterator<Item = &PauliTerm> {
        self.terms.iter().filter(|t| !t.string.is_identity())
    }

    /// Sum of `|coefficient|` over traceless terms; an upper bound on the
    /// spectral radius of the non-identity part.
    pub fn norm_bound(&self) -> f64 {
        self.traceless_terms().map(|t| t.coefficient.abs()).sum()
    }

    /// Qubits touched by any non-identity term.
    pub fn support(&self) -> Vec<usize> {
        let mut on = vec![false; self.n_qubits];
        for t in self.traceless_terms() {
            for q in t.string.support() {
                on[q] = true;
            }
        }
        (0..self.n_qubits).filter(|&q| on[q]).collect()
    }

    pub fn dense_matrix(&self) -> CMatrix {
        let dim = 1usize << self.n_qubits;
        let mut m = CMatrix::zeros(dim, dim);
        for t in &self.terms {
            m += t.string.matrix() * C64::new(t.coefficient, 0.0);
        }
        m
    }

    /// Parses the line-oriented Hamiltonian format: `<coefficient> <axes>`
    /// per line, `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut terms = Vec::new();
        let mut n_qubits = None;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut fields = line.split_whitespace();
            let (coef, axes) = match (fields.next(), fields.next(), fields.next()) {
                (Some(c), Some(a), None) => (c, a),
                _ => {
                    return Err(Error::Parse {
                        line: line_no,
                        message: format!("expected '<coefficient> <axes>', got '{line}'"),
                    })
                }
            };
            let coefficient: f64 = coef.parse().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("invalid coefficient '{coef}'"),
            })?;
            let string: PauliString = axes.parse().map_err(|e: Error| Error::Parse {
                line: line_no,
                message: e.to_string(),
            })?;
            match n_qubits {
                None => n_qubits = Some(string.len()),
                Some(n) if n != string.len() => {
                    return Err(Error::Parse {
                        line: line_no,
                        message: format!("axis string '{axes}' has length {}, expected {n}", string.len()),
                    })
                }
                _ => {}
            }
            let term = PauliTerm::new(coefficient, string).map_err(|e| Error::Parse {
                line: line_no,
                message: e.to_string(),
            })?;
            terms.push(term);
        }
        let n = n_qubits.ok_or(Error::Parse {
            line: 0,
            message: "no terms found".into(),
        })?;
        Self::new(n, terms)
    }

    pub fn to_text(&self) -> String {
        self.terms
            .iter()
            .map(|t| format!("{} {}\n", t.coefficient, t.string))
            .collect()
    }
}

/// Dense matrix of `p`, checked against the expected register size.
pub fn dense_matrix(p: &PauliSum, n_qubits: usize) -> Result<CMatrix> {
    if n_qubits > MAX_QUBITS {
        return Err(Error::Capacity {
            n_qubits,
            max: MAX_QUBITS,
        });
    }
    if p.n_qubits() != n_qubits {
        return Err(Error::usage(format!(
            "operator acts on {} qubits, expected {n_qubits}",
            p.n_qubits()
        )));
    }
    Ok(p.dense_matrix())
}

/// Tolerance on the imaginary part of `Tr(ρ P)` before it is discarded.
pub const EXPECTATION_IMAG_TOL: f64 = 1e-10;

/// `Tr(ρ · p)`.
pub fn expectation(rho: &DensityMatrix, p: &PauliSum) -> Result<f64> {
    if rho.n_qubits() != p.n_qubits() {
        return Err(Error::usage(format!(
            "state has {} qubits but operator has {}",
            rho.n_qubits(),
            p.n_qubits()
        )));
    }
    let mut acc = C64::new(0.0, 0.0);
    for t in p.terms() {
        acc += t.string.trace_with(rho.matrix()) * t.coefficient;
    }
    if acc.im.abs() > EXPECTATION_IMAG_TOL * (1.0 + p.norm_bound()) {
        return Err(Error::Numerical {
            message: "expectation value has a non-negligible imaginary part".into(),
            achieved: acc.im.abs(),
        });
    }
    Ok(acc.re)
}

/// `Tr(ρ · P)` for a single string.
pub fn string_expectation(rho: &DensityMatrix, p: &PauliString) -> Result<f64> {
    if rho.n_qubits() != p.len() {
        return Err(Error::usage(format!(
            "state has {} qubits but string has {}",
            rho.n_qubits(),
            p.len()
        )));
    }
    Ok(p.trace_with(rho.matrix()).re)
}
