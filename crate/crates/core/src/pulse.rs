//! Timed drive segments, circuits, stretching, and open-system evolution.
//!
//! A pulse implements `exp(-i ∫ e(t) dt · G)` in the noiseless limit, where
//! `G` is its Pauli-sum generator and `e` a piecewise-constant envelope.
//! Stretching by `c` maps a pulse of length `T` to one of length `cT` with
//! envelope `t ↦ e(t/c)/c`; buffers scale by `c` as well. Evolution
//! integrates the Lindblad equation with fixed-step RK4, with step
//!
//! ```text
//! dt = min(T/200, 0.005 · min(1/Σrates, 1/‖H‖))
//! ```
//!
//! which is invariant under simultaneous stretching and rate division, so a
//! stretched run and a rate-amplified run take identical steps.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::density::{DensityMatrix, HERMITIAN_TOL};
use crate::error::{Error, Result};
use crate::lindblad::{
    commutator_superop, coupled_groups, local_dissipation, local_hamiltonian, matrix_power,
    rk4_step, rz_superop, step_count, Channel, Deferred, LocalChannel,
};
use crate::noise::{Dissipator, NoiseModel};
use crate::pauli::{CMatrix, Pauli, PauliString, PauliSum, C64};

/// Minimum number of integration steps per pulse.
pub const MIN_STEPS_PER_GATE: f64 = 200.0;
/// Cap on `dt` relative to the fastest rate in the generator.
pub const STEP_RATE_FRACTION: f64 = 0.005;
/// Segment count used for smooth (Gaussian) envelopes.
pub const SMOOTH_SEGMENTS: usize = 200;
/// Allowed trace drift after one `evolve` call.
pub const TRACE_PRESERVATION_TOL: f64 = 1e-9;

/// Piecewise-constant envelope: `values[k]` holds on
/// `[breakpoints[k], breakpoints[k + 1])`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub breakpoints: Vec<f64>,
    pub values: Vec<f64>,
}

impl Envelope {
    pub fn flat(duration: f64, value: f64) -> Self {
        Envelope {
            breakpoints: vec![0.0, duration],
            values: vec![value],
        }
    }

    /// Truncated Gaussian spanning `±sigmas·σ` across the pulse, normalized
    /// so its integral equals `area`.
    pub fn gaussian(duration: f64, sigmas: f64, area: f64) -> Self {
        let n = SMOOTH_SEGMENTS;
        let sigma = duration / (2.0 * sigmas);
        let breakpoints: Vec<f64> = (0..=n).map(|k| duration * k as f64 / n as f64).collect();
        let raw: Vec<f64> = (0..n)
            .map(|k| {
                let mid = 0.5 * (breakpoints[k] + breakpoints[k + 1]) - duration / 2.0;
                (-(mid * mid) / (2.0 * sigma * sigma)).exp()
            })
            .collect();
        let width = duration / n as f64;
        let total: f64 = raw.iter().sum::<f64>() * width;
        Envelope {
            breakpoints,
            values: raw.into_iter().map(|v| v * area / total).collect(),
        }
    }

    /// Flat top with Gaussian rise and fall of `rise` each.
    pub fn gaussian_square(duration: f64, rise: f64, sigma: f64, area: f64) -> Self {
        let n = SMOOTH_SEGMENTS;
        let breakpoints: Vec<f64> = (0..=n).map(|k| duration * k as f64 / n as f64).collect();
        let raw: Vec<f64> = (0..n)
            .map(|k| {
                let t = 0.5 * (breakpoints[k] + breakpoints[k + 1]);
                if t < rise {
                    let x = t - rise;
                    (-(x * x) / (2.0 * sigma * sigma)).exp()
                } else if t > duration - rise {
                    let x = t - (duration - rise);
                    (-(x * x) / (2.0 * sigma * sigma)).exp()
                } else {
                    1.0
                }
            })
            .collect();
        let width = duration / n as f64;
        let total: f64 = raw.iter().sum::<f64>() * width;
        Envelope {
            breakpoints,
            values: raw.into_iter().map(|v| v * area / total).collect(),
        }
    }

    pub fn area(&self) -> f64 {
        self.segments().map(|(len, v)| len * v).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `(length, value)` per segment.
    pub fn segments(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.breakpoints
            .windows(2)
            .zip(&self.values)
            .map(|(w, &v)| (w[1] - w[0], v))
    }

    fn stretched(&self, c: f64) -> Envelope {
        Envelope {
            breakpoints: self.breakpoints.iter().map(|t| t * c).collect(),
            values: self.values.iter().map(|v| v / c).collect(),
        }
    }

    fn check(&self, duration: f64) -> Result<()> {
        let n = self.values.len();
        if n == 0 || self.breakpoints.len() != n + 1 {
            return Err(Error::usage(
                "envelope needs one more breakpoint than values",
            ));
        }
        if self.breakpoints[0] != 0.0 {
            return Err(Error::usage("envelope must start at t = 0"));
        }
        if (self.breakpoints[n] - duration).abs() > 1e-12 * duration.max(1.0) {
            return Err(Error::usage(format!(
                "envelope ends at {} but pulse lasts {duration}",
                self.breakpoints[n]
            )));
        }
        if self.breakpoints.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::usage("envelope breakpoints must increase"));
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::usage("envelope values must be finite"));
        }
        Ok(())
    }
}

/// Timed drive `e(t) · G` on `[0, duration]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PulseGate {
    pub label: String,
    pub generator: PauliSum,
    pub duration: f64,
    pub envelope: Envelope,
}

impl PulseGate {
    pub fn new(
        label: impl Into<String>,
        generator: PauliSum,
        duration: f64,
        envelope: Envelope,
    ) -> Result<Self> {
        if !(duration > 0.0 && duration.is_finite()) {
            return Err(Error::usage(format!("pulse duration {duration} must be > 0")));
        }
        envelope.check(duration)?;
        Ok(PulseGate {
            label: label.into(),
            generator,
            duration,
            envelope,
        })
    }

    /// Flat pulse implementing `exp(-i (angle/2) P)`.
    pub fn rotation(
        label: impl Into<String>,
        axis: PauliString,
        angle: f64,
        duration: f64,
    ) -> Result<Self> {
        let generator = PauliSum::single(1.0, axis)?;
        Self::new(
            label,
            generator,
            duration,
            Envelope::flat(duration, angle / (2.0 * duration)),
        )
    }

    /// Gaussian pulse (`±2σ` window) implementing `exp(-i (angle/2) P)`.
    pub fn gaussian_rotation(
        label: impl Into<String>,
        axis: PauliString,
        angle: f64,
        duration: f64,
    ) -> Result<Self> {
        let generator = PauliSum::single(1.0, axis)?;
        Self::new(
            label,
            generator,
            duration,
            Envelope::gaussian(duration, 2.0, angle / 2.0),
        )
    }

    pub fn n_qubits(&self) -> usize {
        self.generator.n_qubits()
    }

    pub fn stretched(&self, c: f64) -> PulseGate {
        PulseGate {
            label: self.label.clone(),
            generator: self.generator.clone(),
            duration: self.duration * c,
            envelope: self.envelope.stretched(c),
        }
    }

    /// Noiseless unitary `exp(-i A G)` with `A = ∫ e(t) dt`, by
    /// diagonalizing the generator.
    pub fn ideal_unitary(&self) -> CMatrix {
        hermitian_exp(&self.generator.dense_matrix(), -self.envelope.area())
    }

    fn spectral_bound(&self) -> f64 {
        self.generator.norm_bound() * self.envelope.max_abs()
    }
}

/// `exp(i s H)` for Hermitian `H`.
pub fn hermitian_exp(h: &CMatrix, s: f64) -> CMatrix {
    let eig = nalgebra::SymmetricEigen::new(h.clone());
    let d = h.nrows();
    let phases = CMatrix::from_fn(d, d, |r, c| {
        if r == c {
            C64::from_polar(1.0, s * eig.eigenvalues[r])
        } else {
            C64::new(0.0, 0.0)
        }
    });
    &eig.eigenvectors * phases * eig.eigenvectors.adjoint()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Instruction {
    Pulse(PulseGate),
    /// Zero-duration software rotation `exp(-i angle Z/2)`.
    VirtualZ { qubit: usize, angle: f64 },
}

/// Ordered instructions; every pulse is followed by `buffer_time` of idling.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Circuit {
    pub n_qubits: usize,
    pub buffer_time: f64,
    pub instructions: Vec<Instruction>,
}

impl Circuit {
    pub fn new(n_qubits: usize, buffer_time: f64) -> Self {
        Circuit {
            n_qubits,
            buffer_time,
            instructions: Vec::new(),
        }
    }

    pub fn push_pulse(&mut self, gate: PulseGate) -> Result<&mut Self> {
        if gate.n_qubits() != self.n_qubits {
            return Err(Error::usage(format!(
                "pulse '{}' acts on {} qubits, circuit has {}",
                gate.label,
                gate.n_qubits(),
                self.n_qubits
            )));
        }
        self.instructions.push(Instruction::Pulse(gate));
        Ok(self)
    }

    pub fn push_virtual_z(&mut self, qubit: usize, angle: f64) -> &mut Self {
        assert!(qubit < self.n_qubits, "qubit {qubit} out of range");
        if angle != 0.0 {
            self.instructions
                .push(Instruction::VirtualZ { qubit, angle });
        }
        self
    }

    pub fn extend(&mut self, other: &Circuit) -> Result<&mut Self> {
        if other.n_qubits != self.n_qubits {
            return Err(Error::usage("cannot join circuits of different widths"));
        }
        self.instructions.extend(other.instructions.iter().cloned());
        Ok(self)
    }

    pub fn pulses(&self) -> impl Iterator<Item = &PulseGate> {
        self.instructions.iter().filter_map(|i| match i {
            Instruction::Pulse(p) => Some(p),
            _ => None,
        })
    }

    pub fn pulse_count(&self) -> usize {
        self.pulses().count()
    }

    pub fn total_duration(&self) -> f64 {
        self.pulses().map(|p| p.duration + self.buffer_time).sum()
    }

    pub fn stretch(&self, c: f64) -> Result<StretchedCircuit> {
        StretchedCircuit::new(self.clone(), c)
    }

    /// Noiseless composite unitary.
    pub fn ideal_unitary(&self) -> CMatrix {
        let d = 1usize << self.n_qubits;
        let mut u = CMatrix::identity(d, d);
        for inst in &self.instructions {
            let g = match inst {
                Instruction::Pulse(p) => p.ideal_unitary(),
                Instruction::VirtualZ { qubit, angle } => {
                    let z = PauliString::single(self.n_qubits, *qubit, Pauli::Z)
                        .expect("qubit checked on insertion");
                    crate::density::pauli_rotation(&z, *angle)
                }
            };
            u = g * u;
        }
        u
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("circuit serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let c: Circuit = serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line(),
            message: e.to_string(),
        })?;
        for p in c.pulses() {
            p.envelope.check(p.duration)?;
            if p.n_qubits() != c.n_qubits {
                return Err(Error::usage(format!("pulse '{}' has wrong width", p.label)));
            }
        }
        Ok(c)
    }
}

/// A circuit with every pulse and buffer dilated by `c`.
#[derive(Clone, Debug, PartialEq)]
pub struct StretchedCircuit {
    base: Circuit,
    c: f64,
}

impl StretchedCircuit {
    pub fn new(base: Circuit, c: f64) -> Result<Self> {
        if !(c >= 1.0 && c.is_finite()) {
            return Err(Error::usage(format!("stretch factor {c} must be ≥ 1")));
        }
        Ok(StretchedCircuit { base, c })
    }

    pub fn base(&self) -> &Circuit {
        &self.base
    }

    pub fn factor(&self) -> f64 {
        self.c
    }

    pub fn to_circuit(&self) -> Circuit {
        Circuit {
            n_qubits: self.base.n_qubits,
            buffer_time: self.base.buffer_time * self.c,
            instructions: self
                .base
                .instructions
                .iter()
                .map(|i| match i {
                    Instruction::Pulse(p) => Instruction::Pulse(p.stretched(self.c)),
                    other => other.clone(),
                })
                .collect(),
        }
    }
}

/// Anything `run_circuit` can execute.
pub trait ToCircuit {
    fn to_circuit(&self) -> std::borrow::Cow<'_, Circuit>;
}

impl ToCircuit for Circuit {
    fn to_circuit(&self) -> std::borrow::Cow<'_, Circuit> {
        std::borrow::Cow::Borrowed(self)
    }
}

impl ToCircuit for StretchedCircuit {
    fn to_circuit(&self) -> std::borrow::Cow<'_, Circuit> {
        std::borrow::Cow::Owned(StretchedCircuit::to_circuit(self))
    }
}

/// Open-system executor for one register and one fixed set of dissipators.
///
/// Channels of pulses and idle periods are memoized by their exact
/// parameters, so repeated gates (the timed pulses of a variational
/// circuit, say) are integrated once.
pub struct Simulator {
    n_qubits: usize,
    dissipators: Vec<Dissipator>,
    total_rate: f64,
    refine: u32,
    cache: Mutex<HashMap<Vec<u64>, Arc<Channel>>>,
}

impl Simulator {
    pub fn new(noise: &NoiseModel, n_qubits: usize) -> Result<Self> {
        Self::with_dissipators(n_qubits, noise.dissipators(n_qubits)?)
    }

    pub fn noiseless(n_qubits: usize) -> Result<Self> {
        Self::with_dissipators(n_qubits, Vec::new())
    }

    pub fn with_dissipators(n_qubits: usize, dissipators: Vec<Dissipator>) -> Result<Self> {
        if n_qubits == 0 || n_qubits > crate::pauli::MAX_QUBITS {
            return Err(Error::Capacity {
                n_qubits,
                max: crate::pauli::MAX_QUBITS,
            });
        }
        for d in &dissipators {
            if d.qubit >= n_qubits {
                return Err(Error::usage(format!(
                    "dissipator on qubit {} outside {n_qubits}-qubit register",
                    d.qubit
                )));
            }
            if !(d.rate >= 0.0 && d.rate.is_finite()) {
                return Err(Error::usage(format!("dissipator rate {} must be ≥ 0", d.rate)));
            }
        }
        let total_rate = dissipators.iter().map(|d| d.rate).sum();
        Ok(Simulator {
            n_qubits,
            dissipators,
            total_rate,
            refine: 1,
            cache: Mutex::new(HashMap::new()),
        })
    }

    /// Divides every integration step by `factor`. Only useful for
    /// convergence checks.
    pub fn refined(mut self, factor: u32) -> Self {
        self.refine = factor.max(1);
        self.cache = Mutex::new(HashMap::new());
        self
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dissipators(&self) -> &[Dissipator] {
        &self.dissipators
    }

    fn step_size(&self, duration: f64, spectral: f64) -> f64 {
        let mut fastest: f64 = 0.0;
        if self.total_rate > 0.0 {
            fastest = fastest.max(self.total_rate);
        }
        if spectral > 0.0 {
            fastest = fastest.max(spectral);
        }
        let by_length = duration / MIN_STEPS_PER_GATE;
        let dt = if fastest > 0.0 {
            by_length.min(STEP_RATE_FRACTION / fastest)
        } else {
            by_length
        };
        dt / self.refine as f64
    }

    fn cached(&self, key: Vec<u64>, build: impl FnOnce() -> Channel) -> Arc<Channel> {
        if let Some(ch) = self.cache.lock().expect("cache lock").get(&key) {
            return Arc::clone(ch);
        }
        let ch = Arc::new(build());
        self.cache
            .lock()
            .expect("cache lock")
            .insert(key, Arc::clone(&ch));
        ch
    }

    fn pulse_channel(&self, gate: &PulseGate) -> Arc<Channel> {
        let mut key = vec![0u64, gate.duration.to_bits()];
        for t in gate.generator.terms() {
            key.push(t.coefficient.to_bits());
            let (x, z) = t.string.masks();
            key.push(((x as u64) << 32) | z as u64);
        }
        key.push(u64::MAX);
        key.extend(gate.envelope.breakpoints.iter().map(|b| b.to_bits()));
        key.extend(gate.envelope.values.iter().map(|v| v.to_bits()));
        self.cached(key, || self.build_pulse_channel(gate))
    }

    fn idle_channel(&self, duration: f64) -> Arc<Channel> {
        self.cached(vec![1u64, duration.to_bits()], || {
            let dt = self.step_size(duration, 0.0);
            let steps = step_count(duration, dt);
            let h = duration / steps as f64;
            let parts = (0..self.n_qubits)
                .filter_map(|q| self.idle_part(q, h, steps))
                .collect();
            Channel { parts }
        })
    }

    fn idle_part(&self, qubit: usize, h: f64, steps: u64) -> Option<LocalChannel> {
        if !self
            .dissipators
            .iter()
            .any(|d| d.qubit == qubit && d.rate > 0.0)
        {
            return None;
        }
        let l = local_dissipation(&self.dissipators, &[qubit]);
        Some(LocalChannel {
            qubits: vec![qubit],
            superop: matrix_power(&rk4_step(&l, h), steps),
        })
    }

    fn build_pulse_channel(&self, gate: &PulseGate) -> Channel {
        let dt = self.step_size(gate.duration, gate.spectral_bound());
        let groups = coupled_groups(&gate.generator);
        let mut parts = Vec::new();
        let mut covered = vec![false; self.n_qubits];
        // merge adjacent equal-valued segments so flat pulses use one power
        let mut segments: Vec<(f64, f64)> = Vec::new();
        for (len, v) in gate.envelope.segments() {
            match segments.last_mut() {
                Some((l, last)) if *last == v => *l += len,
                _ => segments.push((len, v)),
            }
        }
        for group in groups {
            for &q in &group {
                covered[q] = true;
            }
            let ham = commutator_superop(&local_hamiltonian(&gate.generator, &group));
            let diss = local_dissipation(&self.dissipators, &group);
            let d = ham.nrows();
            let mut total = CMatrix::identity(d, d);
            for &(len, v) in &segments {
                let steps = step_count(len, dt);
                let h = len / steps as f64;
                let generator = &ham * C64::new(v, 0.0) + &diss;
                total = matrix_power(&rk4_step(&generator, h), steps) * total;
            }
            parts.push(LocalChannel {
                qubits: group,
                superop: total,
            });
        }
        let idle_steps = step_count(gate.duration, dt);
        let idle_h = gate.duration / idle_steps as f64;
        for q in 0..self.n_qubits {
            if !covered[q] {
                if let Some(part) = self.idle_part(q, idle_h, idle_steps) {
                    parts.push(part);
                }
            }
        }
        Channel { parts }
    }

    fn check_trace(rho: &CMatrix) -> Result<()> {
        let tr = rho.trace();
        let err = (tr - C64::new(1.0, 0.0)).norm();
        if !(err <= TRACE_PRESERVATION_TOL) {
            return Err(Error::Numerical {
                message: "evolution failed to preserve the trace".into(),
                achieved: err,
            });
        }
        Ok(())
    }

    /// Evolves under one pulse (without its trailing buffer).
    pub fn evolve(&self, rho: &DensityMatrix, gate: &PulseGate) -> Result<DensityMatrix> {
        self.check_state(rho)?;
        if gate.n_qubits() != self.n_qubits {
            return Err(Error::usage(format!(
                "pulse '{}' acts on {} qubits, simulator has {}",
                gate.label,
                gate.n_qubits(),
                self.n_qubits
            )));
        }
        let mut m = rho.matrix().clone();
        self.pulse_channel(gate).apply(self.n_qubits, &mut m);
        Self::check_trace(&m)?;
        DensityMatrix::from_matrix_unchecked(self.n_qubits, m)
    }

    /// Pure dissipation for `duration`.
    pub fn idle(&self, rho: &DensityMatrix, duration: f64) -> Result<DensityMatrix> {
        self.check_state(rho)?;
        let mut m = rho.matrix().clone();
        self.apply_idle(&mut m, duration);
        Self::check_trace(&m)?;
        DensityMatrix::from_matrix_unchecked(self.n_qubits, m)
    }

    fn apply_idle(&self, m: &mut CMatrix, duration: f64) {
        if duration > 0.0 && self.total_rate > 0.0 {
            self.idle_channel(duration).apply(self.n_qubits, m);
        }
    }

    fn check_state(&self, rho: &DensityMatrix) -> Result<()> {
        if rho.n_qubits() != self.n_qubits {
            return Err(Error::usage(format!(
                "state has {} qubits, simulator has {}",
                rho.n_qubits(),
                self.n_qubits
            )));
        }
        Ok(())
    }

    pub fn run(&self, circuit: &impl ToCircuit, initial: &DensityMatrix) -> Result<DensityMatrix> {
        let circuit = circuit.to_circuit();
        self.check_state(initial)?;
        if circuit.n_qubits != self.n_qubits {
            return Err(Error::usage(format!(
                "circuit has {} qubits, simulator has {}",
                circuit.n_qubits, self.n_qubits
            )));
        }
        let n = self.n_qubits;
        let mut m = initial.matrix().clone();
        let mut deferred = Deferred::new(n);
        let idle = (circuit.buffer_time > 0.0 && self.total_rate > 0.0).then(|| self.idle_channel(circuit.buffer_time));
        for inst in &circuit.instructions {
            match inst {
                Instruction::Pulse(p) => {
                    for part in &self.pulse_channel(p).parts {
                        deferred.push(part, n, &mut m);
                    }
                    if let Some(ch) = &idle {
                        for part in &ch.parts {
                            deferred.push(part, n, &mut m);
                        }
                    }
                }
                Instruction::VirtualZ { qubit, angle } => deferred.push_single(*qubit, &rz_superop(*angle)),
            }
        }
        deferred.flush_all(n, &mut m);
        Self::check_trace(&m)?;
        let state = DensityMatrix::from_matrix_unchecked(n, m)?;
        if state.hermiticity_error() > HERMITIAN_TOL {
            return Err(Error::Numerical {
                message: "final state lost hermiticity".into(),
                achieved: state.hermiticity_error(),
            });
        }
        Ok(state)
    }
}

/// Evolves `rho` under `gate` with the given jump operators acting
/// throughout.
pub fn evolve(
    rho: &DensityMatrix,
    gate: &PulseGate,
    dissipators: &[Dissipator],
) -> Result<DensityMatrix> {
    Simulator::with_dissipators(rho.n_qubits(), dissipators.to_vec())?.evolve(rho, gate)
}

/// Runs a (possibly stretched) circuit under `noise` from `initial`.
pub fn run_circuit(
    circuit: &impl ToCircuit,
    noise: &NoiseModel,
    initial: &DensityMatrix,
) -> Result<DensityMatrix> {
    Simulator::new(noise, initial.n_qubits())?.run(circuit, initial)
}
