//! Hardware-efficient variational eigensolver.
//!
//! The ansatz alternates per-qubit Euler rotations with blocks of echoed
//! `ZX` entanglers. Energies are measured at several stretch factors and
//! the Richardson-extrapolated value drives SPSA. At the end the averaged
//! controls are re-measured on a denser stretch set and a weighted line is
//! extrapolated to zero noise.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::density::DensityMatrix;
use crate::error::{Error, Result};
use crate::gates::{compile, euler, GateTiming, NativeGate};
use crate::measure::{multinomial, observable_estimate, stream_id, stream_rng, CountsTable, MeasurementSetting};
use crate::noise::{ConfusionMatrix, NoiseModel};
use crate::pauli::{Pauli, PauliString, PauliSum, C64};
use crate::pulse::{Circuit, Simulator};
use crate::spsa::{spsa_optimize, SpsaConfig};
use crate::zne::{extrapolate, wls_line, Measurement, MitigatedEstimate, StretchSet};

/// Nearest-neighbour ring of the four-qubit Heisenberg model.
pub const RING_BONDS: [(usize, usize); 4] = [(0, 1), (1, 2), (2, 3), (3, 0)];

/// Stream offset for the final high-shot measurement.
const FINAL_EVAL: u64 = 0xF_FFFF;
/// Stream used to draw initial parameters.
const INIT_STREAM: u64 = 0x1417;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnsatzConfig {
    pub n_qubits: usize,
    pub depth: usize,
    #[serde(default = "default_pairs")]
    pub entangler_pairs: Vec<(usize, usize)>,
    #[serde(default = "default_angle")]
    pub entangler_angle: f64,
    #[serde(default)]
    pub timing: GateTiming,
}

fn default_pairs() -> Vec<(usize, usize)> {
    vec![(0, 1), (2, 3), (1, 2)]
}

fn default_angle() -> f64 {
    PI / 4.0
}

impl AnsatzConfig {
    pub fn new(n_qubits: usize, depth: usize) -> Self {
        AnsatzConfig {
            n_qubits,
            depth,
            entangler_pairs: default_pairs()
                .into_iter()
                .filter(|&(a, b)| a < n_qubits && b < n_qubits)
                .collect(),
            entangler_angle: default_angle(),
            timing: GateTiming::default(),
        }
    }

    /// Every nearest-neighbour pair of the ring, closing bond last.
    pub fn ring(n_qubits: usize, depth: usize) -> Self {
        let mut pairs: Vec<(usize, usize)> = (0..n_qubits).step_by(2).filter(|q| q + 1 < n_qubits).map(|q| (q, q + 1)).collect();
        pairs.extend((1..n_qubits).step_by(2).filter(|q| q + 1 < n_qubits).map(|q| (q, q + 1)));
        if n_qubits > 2 {
            pairs.push((n_qubits - 1, 0));
        }
        AnsatzConfig {
            entangler_pairs: pairs,
            ..Self::new(n_qubits, depth)
        }
    }

    pub fn parameter_count(&self) -> usize {
        self.n_qubits * (3 * self.depth + 2)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_qubits == 0 || self.n_qubits > crate::pauli::MAX_QUBITS {
            return Err(Error::Capacity {
                n_qubits: self.n_qubits,
                max: crate::pauli::MAX_QUBITS,
            });
        }
        for &(a, b) in &self.entangler_pairs {
            if a >= self.n_qubits || b >= self.n_qubits || a == b {
                return Err(Error::validation(
                    "ansatz.bad_pair",
                    format!("entangler pair ({a}, {b}) invalid for {} qubits", self.n_qubits),
                ));
            }
        }
        if !self.entangler_angle.is_finite() {
            return Err(Error::validation("ansatz.bad_angle", "entangler angle must be finite"));
        }
        self.timing.check()
    }
}

/// Native gate list of the ansatz, in time order.
pub fn ansatz_gates(config: &AnsatzConfig, theta: &[f64]) -> Result<Vec<NativeGate>> {
    config.validate()?;
    let expected = config.parameter_count();
    if theta.len() != expected {
        return Err(Error::usage(format!(
            "ansatz expects {expected} parameters, got {}",
            theta.len()
        )));
    }
    let n = config.n_qubits;
    let mut gates = Vec::new();
    // The middle angle is offset by π so that θ = 0 is the identity up to a
    // Z phase. First layer: a Z on |0⟩ would be a no-op, so two angles.
    for q in 0..n {
        let t = &theta[2 * q..2 * q + 2];
        gates.push(NativeGate::X90 { qubit: q });
        gates.push(NativeGate::Rz {
            qubit: q,
            angle: t[0] + PI,
        });
        gates.push(NativeGate::X90 { qubit: q });
        gates.push(NativeGate::Rz { qubit: q, angle: t[1] });
    }
    let mut k = 2 * n;
    for _ in 0..config.depth {
        for &(control, target) in &config.entangler_pairs {
            gates.push(NativeGate::Zx {
                control,
                target,
                angle: config.entangler_angle,
            });
        }
        for q in 0..n {
            gates.extend(euler(q, [theta[k], theta[k + 1] + PI, theta[k + 2]]));
            k += 3;
        }
    }
    Ok(gates)
}

pub fn build_ansatz(config: &AnsatzConfig, theta: &[f64]) -> Result<Circuit> {
    let gates = ansatz_gates(config, theta)?;
    compile(config.n_qubits, &gates, &config.timing)
}

/// Ideal state vector of a native gate list applied to `|0…0⟩`.
pub fn ideal_state(n_qubits: usize, gates: &[NativeGate]) -> Vec<C64> {
    let dim = 1usize << n_qubits;
    let mut psi = vec![C64::new(0.0, 0.0); dim];
    psi[0] = C64::new(1.0, 0.0);
    let bit = |q: usize| 1usize << (n_qubits - 1 - q);
    for g in gates {
        match *g {
            NativeGate::Rz { qubit, angle } => {
                let (m0, m1) = (C64::from_polar(1.0, -angle / 2.0), C64::from_polar(1.0, angle / 2.0));
                for (k, a) in psi.iter_mut().enumerate() {
                    *a *= if k & bit(qubit) == 0 { m0 } else { m1 };
                }
            }
            NativeGate::X90 { qubit } => {
                let s = std::f64::consts::FRAC_1_SQRT_2;
                let b = bit(qubit);
                for k in 0..dim {
                    if k & b == 0 {
                        let (a0, a1) = (psi[k], psi[k | b]);
                        psi[k] = (a0 - C64::i() * a1) * s;
                        psi[k | b] = (a1 - C64::i() * a0) * s;
                    }
                }
            }
            NativeGate::Zx {
                control,
                target,
                angle,
            } => {
                let (c, s) = ((angle / 2.0).cos(), (angle / 2.0).sin());
                let (bc, bt) = (bit(control), bit(target));
                for k in 0..dim {
                    if k & bt == 0 {
                        let z = if k & bc == 0 { 1.0 } else { -1.0 };
                        let (a0, a1) = (psi[k], psi[k | bt]);
                        let m = C64::new(0.0, -s * z);
                        psi[k] = a0 * c + m * a1;
                        psi[k | bt] = a1 * c + m * a0;
                    }
                }
            }
        }
    }
    psi
}

/// Noiseless energy of the ansatz from its ideal state vector.
pub fn ideal_energy(config: &AnsatzConfig, theta: &[f64], h: &PauliSum) -> Result<f64> {
    let psi = ideal_state(config.n_qubits, &ansatz_gates(config, theta)?);
    let rho = DensityMatrix::pure(config.n_qubits, &psi)?;
    crate::pauli::expectation(&rho, h)
}

/// `J Σ (XX + YY + ZZ) + B Σ Z` on the four-qubit ring.
pub fn heisenberg_hamiltonian(j: f64, b: f64) -> Result<PauliSum> {
    let mut pairs: Vec<(f64, String)> = Vec::new();
    for &(p, q) in &RING_BONDS {
        for axis in ['X', 'Y', 'Z'] {
            let mut s = vec!['I'; 4];
            s[p] = axis;
            s[q] = axis;
            pairs.push((j, s.into_iter().collect()));
        }
    }
    for q in 0..4 {
        let mut s = vec!['I'; 4];
        s[q] = 'Z';
        pairs.push((b, s.into_iter().collect()));
    }
    let sum = PauliSum::from_pairs(&pairs)?;
    if sum.n_qubits() == 4 {
        Ok(sum)
    } else {
        PauliSum::new(4, sum.terms().to_vec())
    }
}

/// Lowest eigenpair of a Hamiltonian and its per-term expectations.
#[derive(Clone, Debug)]
pub struct GroundState {
    pub energy: f64,
    pub state: DensityMatrix,
    /// `⟨Pᵢ⟩` for the traceless terms, in Hamiltonian order.
    pub term_values: Vec<f64>,
    /// Gap to the next eigenvalue.
    pub gap: f64,
}

pub fn exact_ground(h: &PauliSum) -> Result<GroundState> {
    let n = h.n_qubits();
    let m = h.dense_matrix();
    let dim = m.nrows();
    // real symmetric embedding [[Re, -Im], [Im, Re]] doubles each eigenvalue
    let big = DMatrix::<f64>::from_fn(2 * dim, 2 * dim, |r, c| {
        let (rr, cc) = (r % dim, c % dim);
        let z = m[(rr, cc)];
        match (r < dim, c < dim) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    });
    let eig = big.symmetric_eigen();
    let mut order: Vec<usize> = (0..2 * dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let k = order[0];
    let v = eig.eigenvectors.column(k);
    let psi: Vec<C64> = (0..dim).map(|i| C64::new(v[i], v[i + dim])).collect();
    let norm = psi.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    let psi: Vec<C64> = psi.iter().map(|a| a / norm).collect();
    let state = DensityMatrix::pure(n, &psi)?;
    let energy = eig.eigenvalues[k];
    // eigenvalues come in pairs; the next distinct one is two slots up
    let gap = eig.eigenvalues[order[2]] - energy;
    let term_values = term_expectations(&state, h)?;
    Ok(GroundState {
        energy,
        state,
        term_values,
        gap,
    })
}

pub fn term_expectations(rho: &DensityMatrix, h: &PauliSum) -> Result<Vec<f64>> {
    h.traceless_terms()
        .map(|t| crate::pauli::string_expectation(rho, &t.string))
        .collect()
}

/// `ε₁ = |E − E₀|` and `ε₂ = Σ αᵢ² (⟨Pᵢ⟩ − ⟨Pᵢ⟩₀)²` over traceless terms.
pub fn epsilon_metrics(
    energy: f64,
    term_values: &[f64],
    h: &PauliSum,
    ground: &GroundState,
) -> Result<(f64, f64)> {
    if term_values.len() != ground.term_values.len() {
        return Err(Error::usage("term count differs from the Hamiltonian"));
    }
    let e2 = h
        .traceless_terms()
        .zip(term_values.iter().zip(&ground.term_values))
        .map(|(t, (a, b))| t.coefficient * t.coefficient * (a - b) * (a - b))
        .sum();
    Ok(((energy - ground.energy).abs(), e2))
}

pub fn epsilon_for_state(rho: &DensityMatrix, h: &PauliSum, ground: &GroundState) -> Result<(f64, f64)> {
    let e = crate::pauli::expectation(rho, h)?;
    epsilon_metrics(e, &term_expectations(rho, h)?, h, ground)
}

/// Shot budget per measurement setting.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Shots {
    /// Exact expectations, no sampling.
    Exact,
    Finite(u64),
}

/// Qubit-wise commuting groups of terms; each group is read in one setting.
#[derive(Clone, Debug, PartialEq)]
pub struct TermGroup {
    pub setting: MeasurementSetting,
    /// Indices into the traceless terms.
    pub terms: Vec<usize>,
}

pub fn group_terms(h: &PauliSum) -> Vec<TermGroup> {
    let n = h.n_qubits();
    let mut groups: Vec<(Vec<Pauli>, Vec<usize>)> = Vec::new();
    for (i, t) in h.traceless_terms().enumerate() {
        let axes = t.string.axes();
        let fits = |basis: &Vec<Pauli>| {
            axes.iter()
                .zip(basis)
                .all(|(&a, &b)| a == Pauli::I || b == Pauli::I || a == b)
        };
        match groups.iter_mut().find(|(basis, _)| fits(basis)) {
            Some((basis, members)) => {
                for (b, &a) in basis.iter_mut().zip(axes) {
                    if a != Pauli::I {
                        *b = a;
                    }
                }
                members.push(i);
            }
            None => groups.push((axes.to_vec(), vec![i])),
        }
    }
    groups
        .into_iter()
        .map(|(basis, terms)| {
            let s = PauliString::new(basis).unwrap_or_else(|_| PauliString::identity(n).expect("n ≤ 5"));
            TermGroup {
                setting: MeasurementSetting::for_string(&s),
                terms,
            }
        })
        .collect()
}

/// Energy at one stretch factor with its per-term breakdown.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyEstimate {
    pub c: f64,
    pub energy: f64,
    pub variance: f64,
    pub terms: Vec<f64>,
}

impl EnergyEstimate {
    pub fn measurement(&self) -> Measurement {
        Measurement::new(self.c, self.energy, self.variance)
    }
}

/// Measures Hamiltonians on noisy simulated circuits.
pub struct EnergyEvaluator {
    hamiltonian: PauliSum,
    groups: Vec<TermGroup>,
    simulator: Simulator,
    confusion: Option<ConfusionMatrix>,
    shots: Shots,
    seed: u64,
}

impl EnergyEvaluator {
    pub fn new(hamiltonian: &PauliSum, noise: &NoiseModel, shots: Shots, seed: u64) -> Result<Self> {
        let n = hamiltonian.n_qubits();
        if noise.n_qubits() != n {
            return Err(Error::usage(format!(
                "noise model covers {} qubits, Hamiltonian {n}",
                noise.n_qubits()
            )));
        }
        if shots == Shots::Finite(0) {
            return Err(Error::usage("shots must be ≥ 1"));
        }
        Ok(EnergyEvaluator {
            hamiltonian: hamiltonian.clone(),
            groups: group_terms(hamiltonian),
            simulator: Simulator::new(noise, n)?,
            confusion: noise.confusion.clone(),
            shots,
            seed,
        })
    }

    pub fn hamiltonian(&self) -> &PauliSum {
        &self.hamiltonian
    }

    pub fn groups(&self) -> &[TermGroup] {
        &self.groups
    }

    /// Energies of `circuit` at each stretch factor. `eval` selects the
    /// random streams, so equal `(seed, eval)` reproduce equal samples.
    pub fn evaluate(&self, circuit: &Circuit, stretch: &[f64], eval: u64) -> Result<Vec<EnergyEstimate>> {
        if circuit.n_qubits != self.hamiltonian.n_qubits() {
            return Err(Error::usage("circuit and Hamiltonian sizes differ"));
        }
        stretch
            .par_iter()
            .enumerate()
            .map(|(i, &c)| self.evaluate_at(circuit, c, i as u64, eval))
            .collect()
    }

    /// Energy at a single stretch factor; `slot` and `eval` select the
    /// random stream.
    pub fn evaluate_at(&self, circuit: &Circuit, c: f64, slot: u64, eval: u64) -> Result<EnergyEstimate> {
        let stretched = circuit.stretch(c)?;
        let initial = DensityMatrix::ground(circuit.n_qubits)?;
        let rho = self.simulator.run(&stretched, &initial)?;
        let mut rng = stream_rng(self.seed, stream_id(eval, slot, 0));
        let (energy, variance, terms) = self.measure(&rho, &mut rng)?;
        Ok(EnergyEstimate {
            c,
            energy,
            variance,
            terms,
        })
    }

    /// Energy, its variance and the term values of a prepared state.
    pub fn measure(&self, rho: &DensityMatrix, rng: &mut impl Rng) -> Result<(f64, f64, Vec<f64>)> {
        let terms: Vec<_> = self.hamiltonian.traceless_terms().collect();
        let offset: f64 = self
            .hamiltonian
            .terms()
            .iter()
            .filter(|t| t.string.is_identity())
            .map(|t| t.coefficient)
            .sum();
        let mut values = vec![0.0; terms.len()];
        let (mut energy, mut variance) = (offset, 0.0);
        for g in &self.groups {
            let p = g.setting.probabilities(rho)?;
            let signs = |i: usize| -> Vec<f64> { (0..p.len()).map(|k| terms[i].string.outcome_sign(k)).collect() };
            let f: Vec<f64> = (0..p.len())
                .map(|k| g.terms.iter().map(|&i| terms[i].coefficient * terms[i].string.outcome_sign(k)).sum())
                .collect();
            match self.shots {
                Shots::Exact => {
                    for &i in &g.terms {
                        values[i] = p.iter().zip(signs(i)).map(|(a, b)| a * b).sum();
                    }
                    energy += p.iter().zip(&f).map(|(a, b)| a * b).sum::<f64>();
                }
                Shots::Finite(shots) => {
                    let n = rho.n_qubits();
                    let mut counts = CountsTable::new(n, multinomial(&p, shots, rng), g.setting.label())?;
                    if let Some(m) = &self.confusion {
                        counts = crate::measure::apply_confusion(&counts, m, rng)?;
                    }
                    let m = self.confusion.as_ref();
                    for &i in &g.terms {
                        values[i] = observable_estimate(&counts, m, &signs(i))?.0;
                    }
                    let (e, v) = observable_estimate(&counts, m, &f)?;
                    energy += e;
                    variance += v;
                }
            }
        }
        Ok((energy, variance, values))
    }
}

/// Energies of `circuit` at every factor in `stretch`.
pub fn evaluate_energy(
    circuit: &Circuit,
    hamiltonian: &PauliSum,
    noise: &NoiseModel,
    stretch: &StretchSet,
    shots: Shots,
    seed: u64,
) -> Result<Vec<Measurement>> {
    let ev = EnergyEvaluator::new(hamiltonian, noise, shots, seed)?;
    Ok(ev
        .evaluate(circuit, stretch.factors(), 0)?
        .iter()
        .map(EnergyEstimate::measurement)
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VqeConfig {
    pub ansatz: AnsatzConfig,
    #[serde(default)]
    pub spsa: SpsaConfig,
    /// Stretch factors measured at every iteration.
    #[serde(default = "default_stretch")]
    pub stretch: StretchSet,
    #[serde(default = "default_shots")]
    pub shots: Shots,
    #[serde(default = "default_final_stretch")]
    pub final_stretch: StretchSet,
    #[serde(default = "default_final_shots")]
    pub final_shots: Shots,
    /// Initial parameters are uniform in `[-init_scale, init_scale]`.
    #[serde(default = "default_init_scale")]
    pub init_scale: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_stretch() -> StretchSet {
    StretchSet::new(vec![1.0, 1.5]).expect("valid")
}

fn default_final_stretch() -> StretchSet {
    StretchSet::new(vec![1.0, 1.1, 1.25, 1.5]).expect("valid")
}

fn default_shots() -> Shots {
    Shots::Finite(10_000)
}

fn default_final_shots() -> Shots {
    Shots::Finite(100_000)
}

fn default_init_scale() -> f64 {
    PI
}

impl VqeConfig {
    pub fn new(ansatz: AnsatzConfig) -> Self {
        VqeConfig {
            ansatz,
            spsa: SpsaConfig::default(),
            stretch: default_stretch(),
            shots: default_shots(),
            final_stretch: default_final_stretch(),
            final_shots: default_final_shots(),
            init_scale: default_init_scale(),
            seed: 0,
        }
    }

    /// Infinite shots at a single stretch factor.
    pub fn exact(ansatz: AnsatzConfig) -> Self {
        let one = StretchSet::new(vec![1.0]).expect("valid");
        VqeConfig {
            stretch: one.clone(),
            shots: Shots::Exact,
            final_stretch: one,
            final_shots: Shots::Exact,
            ..Self::new(ansatz)
        }
    }

    pub fn initial_theta(&self) -> Vec<f64> {
        let mut rng = stream_rng(self.seed, INIT_STREAM);
        (0..self.ansatz.parameter_count())
            .map(|_| self.init_scale * rng.random_range(-1.0..=1.0))
            .collect()
    }
}

/// Energies measured at one SPSA probe point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyRecord {
    pub raw: Vec<Measurement>,
    pub mitigated: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VqeStep {
    /// Parameters after the update.
    pub theta: Vec<f64>,
    pub plus: EnergyRecord,
    pub minus: EnergyRecord,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VqeRun {
    pub history: Vec<VqeStep>,
    pub final_controls: Vec<f64>,
    /// Zero-noise intercept of the final line fit.
    pub final_estimate: MitigatedEstimate,
    /// Every final measurement, lowest stretch first.
    pub final_measurements: Vec<EnergyEstimate>,
    /// Term values extrapolated with the same weights as the energy.
    pub final_terms_mitigated: Vec<f64>,
    pub spsa_gain: f64,
}

impl VqeRun {
    /// The `c = 1` final measurement.
    pub fn final_raw(&self) -> &EnergyEstimate {
        &self.final_measurements[0]
    }
}

fn mitigated_value(raw: &[Measurement]) -> Result<f64> {
    Ok(extrapolate(raw)?.value)
}

/// Runs SPSA on the mitigated energy, then re-measures the averaged controls.
pub fn run_vqe(h: &PauliSum, noise: &NoiseModel, config: &VqeConfig) -> Result<VqeRun> {
    if h.n_qubits() != config.ansatz.n_qubits {
        return Err(Error::usage("Hamiltonian and ansatz sizes differ"));
    }
    config.ansatz.validate()?;
    let ev = EnergyEvaluator::new(h, noise, config.shots, config.seed)?;
    let mut records: Vec<EnergyRecord> = Vec::new();
    let spsa = SpsaConfig {
        seed: config.seed,
        ..config.spsa.clone()
    };
    let objective = |theta: &[f64], eval: u64| -> Result<f64> {
        let circuit = build_ansatz(&config.ansatz, theta)?;
        let raw: Vec<Measurement> = ev
            .evaluate(&circuit, config.stretch.factors(), eval)?
            .iter()
            .map(EnergyEstimate::measurement)
            .collect();
        let mitigated = mitigated_value(&raw)?;
        records.push(EnergyRecord { raw, mitigated });
        Ok(mitigated)
    };
    let run = spsa_optimize(objective, &spsa, &config.initial_theta())?;
    // calibration probes come first; keep only the iteration records
    let skip = records.len() - 2 * run.history.len();
    let mut probes = records.into_iter().skip(skip);
    let history = run
        .history
        .iter()
        .map(|s| VqeStep {
            theta: s.theta.clone(),
            plus: probes.next().expect("two probes per step"),
            minus: probes.next().expect("two probes per step"),
        })
        .collect();
    let (final_estimate, final_measurements, final_terms_mitigated) =
        final_estimate(h, noise, config, &run.final_controls)?;
    Ok(VqeRun {
        history,
        final_controls: run.final_controls,
        final_estimate,
        final_measurements,
        final_terms_mitigated,
        spsa_gain: run.a,
    })
}

/// Re-measures `controls` on the final stretch set and extrapolates a
/// weighted line (or a single point) to `c = 0`.
pub fn final_estimate(
    h: &PauliSum,
    noise: &NoiseModel,
    config: &VqeConfig,
    controls: &[f64],
) -> Result<(MitigatedEstimate, Vec<EnergyEstimate>, Vec<f64>)> {
    let ev = EnergyEvaluator::new(h, noise, config.final_shots, config.seed)?;
    let circuit = build_ansatz(&config.ansatz, controls)?;
    let measured = ev.evaluate(&circuit, config.final_stretch.factors(), FINAL_EVAL)?;
    let points: Vec<Measurement> = measured.iter().map(EnergyEstimate::measurement).collect();
    let estimate = if points.len() >= 2 {
        wls_line(&points)?.intercept
    } else {
        extrapolate(&points)?
    };
    let n_terms = measured[0].terms.len();
    let terms = (0..n_terms)
        .map(|i| {
            estimate
                .coefficients
                .iter()
                .zip(&measured)
                .map(|(g, m)| g * m.terms[i])
                .sum()
        })
        .collect();
    Ok((estimate, measured, terms))
}

/// Accuracy of one run against the exact ground state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub eps1_raw: f64,
    pub eps1_mitigated: f64,
    pub eps2_raw: f64,
    pub eps2_mitigated: f64,
}

pub fn run_metrics(run: &VqeRun, h: &PauliSum, ground: &GroundState) -> Result<RunMetrics> {
    let raw = run.final_raw();
    let (eps1_raw, eps2_raw) = epsilon_metrics(raw.energy, &raw.terms, h, ground)?;
    let (eps1_mitigated, eps2_mitigated) =
        epsilon_metrics(run.final_estimate.value, &run.final_terms_mitigated, h, ground)?;
    Ok(RunMetrics {
        eps1_raw,
        eps1_mitigated,
        eps2_raw,
        eps2_mitigated,
    })
}

/// `1 - ⟨ψ|ρ|ψ⟩` between the noisy output of `circuit` and its ideal state.
pub fn circuit_infidelity(circuit: &Circuit, noise: &NoiseModel) -> Result<f64> {
    let n = circuit.n_qubits;
    let initial = DensityMatrix::ground(n)?;
    let ideal = crate::density::apply_unitary(&initial, &circuit.ideal_unitary())?;
    let noisy = Simulator::new(noise, n)?.run(circuit, &initial)?;
    // Tr(ρσ) with σ pure
    let overlap = (ideal.matrix().adjoint() * noisy.matrix()).trace().re;
    Ok(1.0 - overlap)
}

/// Relaxation-limited `T₁` (with `T₂ = 2T₁`) at which `circuit` loses
/// `target` fidelity, found by bisection in `log T₁`.
pub fn calibrate_t1(circuit: &Circuit, target: f64) -> Result<f64> {
    if !(target > 0.0 && target < 0.5) {
        return Err(Error::usage("target infidelity must be in (0, 0.5)"));
    }
    let n = circuit.n_qubits;
    let err = |t1: f64| circuit_infidelity(circuit, &NoiseModel::uniform(n, t1, 2.0 * t1));
    let scale = circuit.total_duration().max(1e-9);
    let (mut lo, mut hi) = (scale.ln() - 5.0, scale.ln() + 15.0);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if err(mid.exp())? > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((0.5 * (lo + hi)).exp())
}

/// Increases the depth from 0 until the mitigated energy fails to improve
/// twice in a row or `max_depth` is reached.
pub fn depth_sweep(
    h: &PauliSum,
    noise: &NoiseModel,
    config: &VqeConfig,
    max_depth: usize,
) -> Result<Vec<(usize, VqeRun)>> {
    let mut out: Vec<(usize, VqeRun)> = Vec::new();
    let mut best = f64::INFINITY;
    let mut misses = 0;
    for d in 0..=max_depth {
        let mut cfg = config.clone();
        cfg.ansatz.depth = d;
        let run = run_vqe(h, noise, &cfg)?;
        let e = run.final_estimate.value;
        out.push((d, run));
        if e < best {
            best = e;
            misses = 0;
        } else {
            misses += 1;
            if misses == 2 {
                break;
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::apply_unitary;

    #[test]
    fn parameter_counts() {
        assert_eq!(AnsatzConfig::new(4, 5).parameter_count(), 68);
        assert_eq!(AnsatzConfig::new(4, 0).parameter_count(), 8);
        let err = build_ansatz(&AnsatzConfig::new(4, 1), &[0.0; 3]).unwrap_err();
        assert!(err.to_string().contains("20"), "{err}");
    }

    #[test]
    fn ideal_state_matches_compiled_unitary() {
        let cfg = AnsatzConfig::ring(4, 1);
        let theta: Vec<f64> = (0..cfg.parameter_count()).map(|i| 0.37 * i as f64 - 1.1).collect();
        let gates = ansatz_gates(&cfg, &theta).unwrap();
        let psi = ideal_state(4, &gates);
        let a = DensityMatrix::pure(4, &psi).unwrap();
        let u = compile(4, &gates, &cfg.timing).unwrap().ideal_unitary();
        let b = apply_unitary(&DensityMatrix::ground(4).unwrap(), &u).unwrap();
        assert!(a.max_abs_diff(&b) < 1e-10);
    }

    #[test]
    fn heisenberg_ground_energies() {
        let h = heisenberg_hamiltonian(1.0, 0.0).unwrap();
        assert_eq!(h.terms().len(), 12);
        assert!((exact_ground(&h).unwrap().energy + 8.0).abs() < 1e-10);
        let h = heisenberg_hamiltonian(0.0, 1.0).unwrap();
        assert!((exact_ground(&h).unwrap().energy + 4.0).abs() < 1e-10);
        assert_eq!(heisenberg_hamiltonian(1.0, 1.0).unwrap().terms().len(), 16);
    }

    #[test]
    fn zero_theta_energy() {
        let h = heisenberg_hamiltonian(1.0, 1.0).unwrap();
        let e = ideal_energy(&AnsatzConfig::new(4, 0), &[0.0; 8], &h).unwrap();
        assert!((e - 8.0).abs() < 1e-10, "{e}");
    }

    #[test]
    fn grouping_is_qubit_wise_commuting() {
        let h = heisenberg_hamiltonian(1.0, 1.0).unwrap();
        let groups = group_terms(&h);
        let terms: Vec<_> = h.traceless_terms().collect();
        let mut seen = vec![false; terms.len()];
        for g in &groups {
            for &i in &g.terms {
                seen[i] = true;
                for (q, &a) in terms[i].string.axes().iter().enumerate() {
                    assert!(a == Pauli::I || g.setting.bases()[q] == a);
                }
            }
        }
        assert!(seen.iter().all(|&s| s));
        assert_eq!(groups.len(), 3);
    }

    #[test]
    fn mixed_state_metrics() {
        let h = heisenberg_hamiltonian(1.0, 0.0).unwrap();
        let g = exact_ground(&h).unwrap();
        let (e1, _) = epsilon_for_state(&DensityMatrix::maximally_mixed(4).unwrap(), &h, &g).unwrap();
        assert!((e1 - 8.0).abs() < 1e-10);
        let (a, b) = epsilon_for_state(&g.state, &h, &g).unwrap();
        assert!(a < 1e-10 && b < 1e-10);
    }
}
