//! Declarative noise descriptions.
//!
//! Relaxation and dephasing are expressed as single-qubit Lindblad jump
//! operators. Per qubit with finite `t1`/`t2`:
//!
//! * amplitude damping `σ⁻ = |0⟩⟨1| = (X + iY)/2` at rate `1/t1`;
//! * pure dephasing `Z` at rate `(1/t2 - 1/(2 t1)) / 2`, so that coherences
//!   decay at the total rate `1/t2`.
//!
//! A global depolarizing rate `γ` becomes `X`, `Y`, `Z` jumps on every qubit
//! at rate `γ/4` each. On one qubit this generates `dρ/dt = γ(I/2 - ρ)`: the
//! Bloch vector shrinks as `exp(-γt)` and the fixed point is maximally mixed.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pauli::{Pauli, C64};

/// Relative slack on the `t2 ≤ 2 t1` check.
const T2_SLACK: f64 = 1e-12;

/// Column-sum tolerance for confusion matrices.
pub const CONFUSION_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QubitNoise {
    #[serde(with = "infinite_as_null", default = "infinite")]
    pub t1: f64,
    #[serde(with = "infinite_as_null", default = "infinite")]
    pub t2: f64,
}

fn infinite() -> f64 {
    f64::INFINITY
}

impl QubitNoise {
    pub const NOISELESS: QubitNoise = QubitNoise {
        t1: f64::INFINITY,
        t2: f64::INFINITY,
    };

    pub fn new(t1: f64, t2: f64) -> Self {
        QubitNoise { t1, t2 }
    }

    /// `t2 = 2 t1`: relaxation-limited coherence with no pure dephasing.
    pub fn relaxation_limited(t1: f64) -> Self {
        QubitNoise { t1, t2: 2.0 * t1 }
    }

    pub fn relaxation_rate(&self) -> f64 {
        1.0 / self.t1
    }

    /// Rate of the `Z` jump operator.
    pub fn dephasing_rate(&self) -> f64 {
        let r = (1.0 / self.t2 - 0.5 / self.t1) / 2.0;
        if r.abs() < 1e-15 * (1.0 / self.t2).abs().max(f64::MIN_POSITIVE) {
            0.0
        } else {
            r
        }
    }
}

/// Piecewise-constant multiplier on every rate, keyed by the wall-clock
/// index of an experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriftProfile {
    /// `(first index, multiplier)` pairs sorted by index, starting at 0.
    pub schedule: Vec<(u64, f64)>,
}

impl DriftProfile {
    pub fn new(schedule: Vec<(u64, f64)>) -> Result<Self> {
        let profile = DriftProfile { schedule };
        profile.check()?;
        Ok(profile)
    }

    fn check(&self) -> Result<()> {
        match self.schedule.first() {
            Some((0, _)) => {}
            _ => {
                return Err(Error::validation(
                    "noise.drift_must_start_at_0",
                    "drift schedule must begin at index 0",
                ))
            }
        }
        if self.schedule.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::validation(
                "noise.drift_not_increasing",
                "drift schedule indices must strictly increase",
            ));
        }
        if self.schedule.iter().any(|(_, m)| !(*m > 0.0 && m.is_finite())) {
            return Err(Error::validation(
                "noise.drift_multiplier_not_positive",
                "drift multipliers must be finite and > 0",
            ));
        }
        Ok(())
    }

    pub fn multiplier(&self, index: u64) -> f64 {
        self.schedule
            .iter()
            .take_while(|(start, _)| *start <= index)
            .last()
            .map_or(1.0, |(_, m)| *m)
    }
}

/// Readout confusion: `entry(i, j) = P(read i | true j)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    n_qubits: usize,
    entries: Vec<f64>,
}

impl ConfusionMatrix {
    pub fn new(n_qubits: usize, matrix: DMatrix<f64>) -> Result<Self> {
        let dim = 1usize << n_qubits;
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::usage(format!(
                "confusion matrix is {}x{}, expected {dim}x{dim}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        for j in 0..dim {
            let col = matrix.column(j);
            if col.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
                return Err(Error::validation(
                    "confusion.entry_out_of_range",
                    format!("column {j} has an entry outside [0, 1]"),
                ));
            }
            let s: f64 = col.iter().sum();
            if (s - 1.0).abs() > CONFUSION_TOL {
                return Err(Error::validation(
                    "confusion.column_sum",
                    format!("column {j} sums to {s}"),
                ));
            }
        }
        let entries = (0..dim)
            .flat_map(|i| (0..dim).map(move |j| (i, j)))
            .map(|(i, j)| matrix[(i, j)])
            .collect();
        Ok(ConfusionMatrix { n_qubits, entries })
    }

    pub fn identity(n_qubits: usize) -> Self {
        let dim = 1usize << n_qubits;
        Self::new(n_qubits, DMatrix::identity(dim, dim)).expect("identity is stochastic")
    }

    /// Independent per-qubit flips: `flips[q] = (P(read 1 | 0), P(read 0 | 1))`.
    pub fn from_qubit_flips(flips: &[(f64, f64)]) -> Result<Self> {
        let n = flips.len();
        if n == 0 {
            return Err(Error::usage("need at least one qubit"));
        }
        let dim = 1usize << n;
        let m = DMatrix::from_fn(dim, dim, |i, j| {
            let mut p = 1.0;
            for (q, &(p01, p10)) in flips.iter().enumerate() {
                let bit = 1 << (n - 1 - q);
                let read = i & bit != 0;
                let truth = j & bit != 0;
                p *= match (truth, read) {
                    (false, false) => 1.0 - p01,
                    (false, true) => p01,
                    (true, false) => p10,
                    (true, true) => 1.0 - p10,
                };
            }
            p
        });
        Self::new(n, m)
    }

    pub fn symmetric_flip(n_qubits: usize, p: f64) -> Result<Self> {
        Self::from_qubit_flips(&vec![(p, p); n_qubits])
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    pub fn get(&self, read: usize, truth: usize) -> f64 {
        self.entries[read * self.dim() + truth]
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        let d = self.dim();
        DMatrix::from_fn(d, d, |i, j| self.get(i, j))
    }

    /// Header-free, row-major CSV.
    pub fn from_csv(text: &str) -> Result<Self> {
        let rows: Vec<Vec<f64>> = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(idx, l)| {
                l.split(',')
                    .map(|f| {
                        f.trim().parse::<f64>().map_err(|_| Error::Parse {
                            line: idx + 1,
                            message: format!("invalid number '{}'", f.trim()),
                        })
                    })
                    .collect()
            })
            .collect::<Result<_>>()?;
        let dim = rows.len();
        if dim < 2 || !dim.is_power_of_two() || rows.iter().any(|r| r.len() != dim) {
            return Err(Error::Parse {
                line: 0,
                message: format!("confusion CSV must be square with power-of-two size, got {dim} rows"),
            });
        }
        let n = dim.trailing_zeros() as usize;
        Self::new(n, DMatrix::from_fn(dim, dim, |i, j| rows[i][j]))
    }

    pub fn to_csv(&self) -> String {
        let d = self.dim();
        let mut out = String::new();
        for i in 0..d {
            let row: Vec<String> = (0..d).map(|j| format!("{}", self.get(i, j))).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

/// Single-qubit Lindblad jump operator with its rate.
#[derive(Clone, Debug, PartialEq)]
pub struct Dissipator {
    pub qubit: usize,
    pub op: [[C64; 2]; 2],
    pub rate: f64,
}

impl Dissipator {
    /// `σ⁻ = |0⟩⟨1|`.
    pub fn lowering(qubit: usize, rate: f64) -> Self {
        let o = C64::new(0.0, 0.0);
        Dissipator {
            qubit,
            op: [[o, C64::new(1.0, 0.0)], [o, o]],
            rate,
        }
    }

    pub fn pauli(qubit: usize, axis: Pauli, rate: f64) -> Self {
        Dissipator {
            qubit,
            op: axis.matrix(),
            rate,
        }
    }

    pub fn custom(qubit: usize, op: [[C64; 2]; 2], rate: f64) -> Self {
        Dissipator { qubit, op, rate }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub per_qubit: Vec<QubitNoise>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depolarizing_rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub confusion: Option<ConfusionMatrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drift: Option<DriftProfile>,
}

/// One failed validation rule.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub code: String,
    pub message: String,
}

impl NoiseModel {
    pub fn noiseless(n_qubits: usize) -> Self {
        NoiseModel {
            per_qubit: vec![QubitNoise::NOISELESS; n_qubits],
            depolarizing_rate: None,
            confusion: None,
            drift: None,
        }
    }

    pub fn uniform(n_qubits: usize, t1: f64, t2: f64) -> Self {
        NoiseModel {
            per_qubit: vec![QubitNoise::new(t1, t2); n_qubits],
            ..Self::noiseless(n_qubits)
        }
    }

    pub fn depolarizing(n_qubits: usize, rate: f64) -> Self {
        NoiseModel {
            depolarizing_rate: Some(rate),
            ..Self::noiseless(n_qubits)
        }
    }

    pub fn with_confusion(mut self, confusion: ConfusionMatrix) -> Self {
        self.confusion = Some(confusion);
        self
    }

    pub fn with_drift(mut self, drift: DriftProfile) -> Self {
        self.drift = Some(drift);
        self
    }

    pub fn n_qubits(&self) -> usize {
        self.per_qubit.len()
    }

    pub fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut push = |code: &str, message: String| {
            out.push(Violation {
                code: code.to_string(),
                message,
            })
        };
        for (q, n) in self.per_qubit.iter().enumerate() {
            if n.t1.is_nan() || n.t1 <= 0.0 || n.t2.is_nan() || n.t2 <= 0.0 {
                push(
                    "noise.time_not_positive",
                    format!("qubit {q}: t1 and t2 must be > 0"),
                );
            } else if n.t2 > 2.0 * n.t1 * (1.0 + T2_SLACK) {
                push(
                    "noise.t2_exceeds_2t1",
                    format!("qubit {q}: t2 = {} exceeds 2·t1 = {}", n.t2, 2.0 * n.t1),
                );
            }
        }
        if let Some(r) = self.depolarizing_rate {
            if !(r >= 0.0 && r.is_finite()) {
                push(
                    "noise.rate_negative",
                    format!("depolarizing rate {r} must be finite and ≥ 0"),
                );
            }
        }
        if let Some(c) = &self.confusion {
            if c.n_qubits() != self.n_qubits() {
                push(
                    "noise.confusion_size",
                    format!(
                        "confusion matrix covers {} qubits, model has {}",
                        c.n_qubits(),
                        self.n_qubits()
                    ),
                );
            }
        }
        if let Some(d) = &self.drift {
            if let Err(Error::Validation { code, message }) = d.check() {
                push(&code, message);
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        match self.violations().into_iter().next() {
            None => Ok(()),
            Some(v) => Err(Error::Validation {
                code: v.code,
                message: v.message,
            }),
        }
    }

    /// Every rate multiplied by `factor`; readout confusion is untouched.
    pub fn amplified(&self, factor: f64) -> NoiseModel {
        NoiseModel {
            per_qubit: self
                .per_qubit
                .iter()
                .map(|n| QubitNoise::new(n.t1 / factor, n.t2 / factor))
                .collect(),
            depolarizing_rate: self.depolarizing_rate.map(|r| r * factor),
            confusion: self.confusion.clone(),
            drift: self.drift.clone(),
        }
    }

    /// The static model seen by an experiment executed at `index`.
    pub fn at_index(&self, index: u64) -> NoiseModel {
        let m = self.drift.as_ref().map_or(1.0, |d| d.multiplier(index));
        let mut out = self.amplified(m);
        out.drift = None;
        out
    }

    /// Jump operators with rates for an `n_qubits` register.
    pub fn dissipators(&self, n_qubits: usize) -> Result<Vec<Dissipator>> {
        dissipators_for(self, n_qubits)
    }
}

/// Expands a noise model into single-qubit Lindblad jump operators.
pub fn dissipators_for(noise: &NoiseModel, n_qubits: usize) -> Result<Vec<Dissipator>> {
    if noise.n_qubits() != n_qubits {
        return Err(Error::usage(format!(
            "noise model describes {} qubits, register has {n_qubits}",
            noise.n_qubits()
        )));
    }
    noise.validate()?;
    let m = noise.drift.as_ref().map_or(1.0, |d| d.multiplier(0));
    let mut out = Vec::new();
    for (q, n) in noise.per_qubit.iter().enumerate() {
        let relax = m * n.relaxation_rate();
        if relax > 0.0 {
            out.push(Dissipator::lowering(q, relax));
        }
        let dephase = m * n.dephasing_rate();
        if dephase > 0.0 {
            out.push(Dissipator::pauli(q, Pauli::Z, dephase));
        }
    }
    if let Some(rate) = noise.depolarizing_rate {
        if rate > 0.0 {
            for q in 0..n_qubits {
                for axis in [Pauli::X, Pauli::Y, Pauli::Z] {
                    out.push(Dissipator::pauli(q, axis, m * rate / 4.0));
                }
            }
        }
    }
    Ok(out)
}

mod infinite_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_some(v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}
