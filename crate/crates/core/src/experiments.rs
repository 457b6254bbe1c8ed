//! Experiment runners behind the command-line tool.
//!
//! Each runner turns a validated [`ExperimentConfig`] into named text
//! artifacts (CSV or JSON). Nothing here touches the file system except to
//! read inputs named in the config; writing is left to the caller.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use crate::config::{observable_from, ExperimentConfig, ExperimentKind};
use crate::cr::simulate_cr_decay;
use crate::density::DensityMatrix;
use crate::error::{Error, Result};
use crate::measure::{
    apply_confusion, bootstrap, calibration_counts, confusion_from_calibration, multinomial, observable_estimate,
    stream_id, stream_rng, BootstrapResult, CountsTable,
};
use crate::noise::{ConfusionMatrix, NoiseModel};
use crate::pauli::{PauliString, PauliSum};
use crate::protocols::{bell_parity_experiment, random_identity_clifford_circuit, trajectory_angle, trajectory_circuits};
use crate::pulse::{Circuit, Simulator};
use crate::vqe::{
    depth_sweep, exact_ground, group_terms, run_metrics, run_vqe, AnsatzConfig, EnergyEvaluator, Shots, VqeConfig,
    VqeRun,
};
use crate::zne::{coefficients, extrapolate, Measurement, MitigatedEstimate, StretchSet};

/// One output file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Artifact {
    pub name: String,
    pub contents: String,
}

impl Artifact {
    fn new(name: impl Into<String>, contents: String) -> Self {
        Artifact {
            name: name.into(),
            contents,
        }
    }
}

/// Stream for calibration tables, outside the range used by data tables.
const CALIBRATION_SLOT: u64 = 0xFFF;

/// Mixes a user seed with job coordinates (splitmix64 finalizer).
pub fn mix_seed(seed: u64, a: u64, b: u64) -> u64 {
    let mut z = seed
        .wrapping_add(a.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(b.wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<Artifact>> {
    cfg.validate()?;
    match cfg.experiment {
        ExperimentKind::CliffordDecay1q => clifford_decay(cfg, 1),
        ExperimentKind::CliffordDecay2q => clifford_decay(cfg, 2),
        ExperimentKind::Trajectory => trajectory(cfg),
        ExperimentKind::BellParity => bell_parity(cfg),
        ExperimentKind::CrModel => cr_model(cfg),
        ExperimentKind::Vqe => vqe(cfg),
        ExperimentKind::ZneGeneric => zne_generic(cfg),
    }
}

/// Evaluators for each stretch factor, each with the noise seen at that
/// position in the run order.
fn evaluators(obs: &PauliSum, noise: &NoiseModel, stretch: &StretchSet, shots: Shots, seed: u64) -> Result<Vec<EnergyEvaluator>> {
    (0..stretch.len())
        .map(|i| EnergyEvaluator::new(obs, &noise.at_index(i as u64), shots, seed))
        .collect()
}

fn term_index(obs: &PauliSum, label: &str) -> Result<usize> {
    let s: PauliString = label.parse()?;
    obs.traceless_terms()
        .position(|t| t.string == s)
        .ok_or_else(|| Error::usage(format!("term {label} missing")))
}

fn trajectory(cfg: &ExperimentConfig) -> Result<Vec<Artifact>> {
    let stretch = cfg.stretch_set()?;
    let gammas = coefficients(&stretch).gammas;
    let noise = cfg.noise.model(1)?;
    let obs = PauliSum::from_pairs(&[(1.0, "X"), (1.0, "Y"), (1.0, "Z")])?;
    let idx = [term_index(&obs, "X")?, term_index(&obs, "Y")?, term_index(&obs, "Z")?];
    let circuits = trajectory_circuits(&cfg.timing)?;
    let mut main = String::from("seed,j,angle,x_raw,y_raw,z_raw,x,y,z\n");
    let mut per_c = String::from("seed,j,c,x,y,z\n");
    for &seed in &cfg.seeds {
        let evs = evaluators(&obs, &noise, &stretch, cfg.shots_mode(), seed)?;
        let rows: Vec<Vec<[f64; 3]>> = circuits
            .par_iter()
            .enumerate()
            .map(|(k, circuit)| {
                evs.iter()
                    .zip(stretch.factors())
                    .enumerate()
                    .map(|(i, (ev, &c))| {
                        let e = ev.evaluate_at(circuit, c, i as u64, k as u64)?;
                        Ok(idx.map(|t| e.terms[t]))
                    })
                    .collect()
            })
            .collect::<Result<_>>()?;
        for (k, bloch) in rows.iter().enumerate() {
            let j = k + 1;
            let mit: Vec<f64> = (0..3)
                .map(|a| gammas.iter().zip(bloch).map(|(g, b)| g * b[a]).sum())
                .collect();
            let raw = bloch[0];
            writeln!(
                main,
                "{seed},{j},{},{},{},{},{},{},{}",
                trajectory_angle(j),
                raw[0],
                raw[1],
                raw[2],
                mit[0],
                mit[1],
                mit[2]
            )
            .ok();
            for (b, c) in bloch.iter().zip(stretch.factors()) {
                writeln!(per_c, "{seed},{j},{c},{},{},{}", b[0], b[1], b[2]).ok();
            }
        }
    }
    Ok(vec![
        Artifact::new("trajectory.csv", main),
        Artifact::new("trajectory_stretch.csv", per_c),
    ])
}

/// `|0…0⟩⟨0…0|` as a Pauli sum.
fn ground_projector(n: usize) -> Result<PauliSum> {
    let pairs: Vec<(f64, String)> = (0..1usize << n)
        .map(|mask| {
            let s: String = (0..n)
                .map(|q| if mask >> (n - 1 - q) & 1 == 1 { 'Z' } else { 'I' })
                .collect();
            (1.0 / (1u64 << n) as f64, s)
        })
        .collect();
    PauliSum::from_pairs(&pairs)
}

fn clifford_decay(cfg: &ExperimentConfig, n: usize) -> Result<Vec<Artifact>> {
    let stretch = cfg.stretch_set()?;
    let noise = cfg.noise.model(n)?;
    let obs = ground_projector(n)?;
    let section = &cfg.clifford;
    let mut main = String::from("seed,length,sequence,raw,mitigated,mitigated_std\n");
    let mut per_c = String::from("seed,length,sequence,c,p0,variance\n");
    for &seed in &cfg.seeds {
        let evs = evaluators(&obs, &noise, &stretch, cfg.shots_mode(), seed)?;
        let jobs: Vec<(usize, usize)> = section
            .lengths
            .iter()
            .flat_map(|&l| (0..section.sequences).map(move |s| (l, s)))
            .collect();
        let results: Vec<MitigatedEstimate> = jobs
            .par_iter()
            .enumerate()
            .map(|(k, &(l, s))| {
                let circuit =
                    random_identity_clifford_circuit(n, l, mix_seed(seed, l as u64, s as u64), &cfg.timing)?;
                let points: Vec<Measurement> = evs
                    .iter()
                    .zip(stretch.factors())
                    .enumerate()
                    .map(|(i, (ev, &c))| Ok(ev.evaluate_at(&circuit, c, i as u64, k as u64)?.measurement()))
                    .collect::<Result<_>>()?;
                extrapolate(&points)
            })
            .collect::<Result<_>>()?;
        for ((l, s), est) in jobs.iter().zip(&results) {
            writeln!(
                main,
                "{seed},{l},{s},{},{},{}",
                est.raw().estimate,
                est.value,
                est.std_error()
            )
            .ok();
            for m in &est.inputs {
                writeln!(per_c, "{seed},{l},{s},{},{},{}", m.c, m.estimate, m.variance).ok();
            }
        }
    }
    Ok(vec![
        Artifact::new("clifford_decay.csv", main),
        Artifact::new("clifford_decay_stretch.csv", per_c),
    ])
}

/// Sampled measurements of an observable at every stretch factor,
/// extrapolated, with an optional bootstrap.
#[derive(Clone, Debug)]
pub struct SampledZne {
    pub measurements: Vec<Measurement>,
    pub mitigated: MitigatedEstimate,
    /// Data tables (stretch-major, one per measurement setting) followed by
    /// calibration tables when readout error is modelled.
    pub tables: Vec<CountsTable>,
    pub bootstrap: Option<BootstrapResult>,
}

struct TablePlan {
    offset: f64,
    /// Diagonal observable per setting.
    f: Vec<Vec<f64>>,
    factors: Vec<f64>,
    calibrated: bool,
}

impl TablePlan {
    fn estimate(&self, tables: &[CountsTable]) -> Result<(Vec<Measurement>, MitigatedEstimate)> {
        let g = self.f.len();
        let data = self.factors.len() * g;
        let m: Option<ConfusionMatrix> = if self.calibrated {
            Some(confusion_from_calibration(&tables[data..])?)
        } else {
            None
        };
        let points: Vec<Measurement> = self
            .factors
            .iter()
            .enumerate()
            .map(|(i, &c)| {
                let (mut e, mut v) = (self.offset, 0.0);
                for (k, f) in self.f.iter().enumerate() {
                    let (a, b) = observable_estimate(&tables[i * g + k], m.as_ref(), f)?;
                    e += a;
                    v += b;
                }
                Ok(Measurement::new(c, e, v))
            })
            .collect::<Result<_>>()?;
        let est = extrapolate(&points)?;
        Ok((points, est))
    }
}

pub fn sampled_zne(
    circuit: &Circuit,
    observable: &PauliSum,
    noise: &NoiseModel,
    stretch: &StretchSet,
    shots: u64,
    seed: u64,
    replicas: usize,
) -> Result<SampledZne> {
    let n = circuit.n_qubits;
    if observable.n_qubits() != n || noise.n_qubits() != n {
        return Err(Error::usage("circuit, observable and noise sizes differ"));
    }
    let groups = group_terms(observable);
    let terms: Vec<_> = observable.traceless_terms().collect();
    let dim = 1usize << n;
    let plan = TablePlan {
        offset: observable
            .terms()
            .iter()
            .filter(|t| t.string.is_identity())
            .map(|t| t.coefficient)
            .sum(),
        f: groups
            .iter()
            .map(|g| {
                (0..dim)
                    .map(|k| g.terms.iter().map(|&i| terms[i].coefficient * terms[i].string.outcome_sign(k)).sum())
                    .collect()
            })
            .collect(),
        factors: stretch.factors().to_vec(),
        calibrated: noise.confusion.is_some(),
    };
    let mut tables: Vec<CountsTable> = Vec::new();
    for (i, &c) in stretch.factors().iter().enumerate() {
        let sim = Simulator::new(&noise.at_index(i as u64), n)?;
        let rho = sim.run(&circuit.stretch(c)?, &DensityMatrix::ground(n)?)?;
        for (k, g) in groups.iter().enumerate() {
            let mut rng = stream_rng(seed, stream_id(0, i as u64, k as u64));
            let p = g.setting.probabilities(&rho)?;
            let mut t = CountsTable::new(n, multinomial(&p, shots, &mut rng), g.setting.label())?;
            if let Some(m) = &noise.confusion {
                t = apply_confusion(&t, m, &mut rng)?;
            }
            tables.push(t);
        }
    }
    if let Some(m) = &noise.confusion {
        let mut rng = stream_rng(seed, stream_id(0, CALIBRATION_SLOT, 0));
        tables.extend(calibration_counts(m, shots, &mut rng)?);
    }
    let (measurements, mitigated) = plan.estimate(&tables)?;
    let boot = if replicas >= 2 {
        Some(bootstrap(
            &tables,
            |t| Ok(plan.estimate(t)?.1.value),
            replicas,
            mix_seed(seed, 0xB007, 0),
        )?)
    } else {
        None
    };
    Ok(SampledZne {
        measurements,
        mitigated,
        tables,
        bootstrap: boot,
    })
}

/// Exact-expectation counterpart of [`sampled_zne`].
pub fn exact_zne(circuit: &Circuit, observable: &PauliSum, noise: &NoiseModel, stretch: &StretchSet) -> Result<MitigatedEstimate> {
    let evs = evaluators(observable, noise, stretch, Shots::Exact, 0)?;
    let points: Vec<Measurement> = evs
        .par_iter()
        .zip(stretch.factors())
        .enumerate()
        .map(|(i, (ev, &c))| Ok(ev.evaluate_at(circuit, c, i as u64, 0)?.measurement()))
        .collect::<Result<_>>()?;
    extrapolate(&points)
}

struct ZneRow {
    mitigated: MitigatedEstimate,
    bootstrap: Option<BootstrapResult>,
    tables: Vec<CountsTable>,
}

fn zne_row(cfg: &ExperimentConfig, circuit: &Circuit, obs: &PauliSum, noise: &NoiseModel, seed: u64, replicas: usize) -> Result<ZneRow> {
    let stretch = cfg.stretch_set()?;
    match cfg.shots {
        Some(shots) => {
            let s = sampled_zne(circuit, obs, noise, &stretch, shots, seed, replicas)?;
            Ok(ZneRow {
                mitigated: s.mitigated,
                bootstrap: s.bootstrap,
                tables: s.tables,
            })
        }
        None => Ok(ZneRow {
            mitigated: exact_zne(circuit, obs, noise, &stretch)?,
            bootstrap: None,
            tables: Vec::new(),
        }),
    }
}

fn opt(x: Option<f64>) -> String {
    x.map_or(String::new(), |v| v.to_string())
}

fn bell_parity(cfg: &ExperimentConfig) -> Result<Vec<Artifact>> {
    let noise = cfg.noise.model(2)?;
    let jobs: Vec<(u64, usize)> = cfg
        .seeds
        .iter()
        .flat_map(|&s| cfg.bell.lengths.iter().map(move |&l| (s, l)))
        .collect();
    let rows: Vec<ZneRow> = jobs
        .par_iter()
        .map(|&(seed, l)| {
            let (circuit, zz) = bell_parity_experiment(l, mix_seed(seed, l as u64, 0), &cfg.timing)?;
            zne_row(cfg, &circuit, &zz, &noise, mix_seed(seed, l as u64, 1), cfg.bell.replicas)
        })
        .collect::<Result<_>>()?;
    let mut main =
        String::from("seed,length,raw,raw_std,mitigated,mitigated_std,bootstrap_mean,bootstrap_std\n");
    let mut boot = String::from("seed,length,replica,value\n");
    for (&(seed, l), row) in jobs.iter().zip(&rows) {
        let m = &row.mitigated;
        let b = row.bootstrap.as_ref();
        writeln!(
            main,
            "{seed},{l},{},{},{},{},{},{}",
            m.raw().estimate,
            m.raw().variance.sqrt(),
            m.value,
            m.std_error(),
            opt(b.map(|b| b.mean)),
            opt(b.map(|b| b.std))
        )
        .ok();
        if let Some(b) = b {
            for (r, v) in b.replicas.iter().enumerate() {
                writeln!(boot, "{seed},{l},{r},{v}").ok();
            }
        }
    }
    let mut out = vec![Artifact::new("bell_parity.csv", main)];
    if cfg.shots.is_some() {
        out.push(Artifact::new("bell_bootstrap.csv", boot));
    }
    Ok(out)
}

#[derive(Serialize)]
struct CrSummary {
    t_gate: f64,
    omega: f64,
    max_mitigated: f64,
    min_mitigated: f64,
    mean_deviation_c1: f64,
    mean_deviation_mitigated: f64,
}

fn cr_model(cfg: &ExperimentConfig) -> Result<Vec<Artifact>> {
    let cr = &cfg.cr;
    let d = simulate_cr_decay(
        cr.t_gate,
        &cfg.stretch_set()?,
        &cr.params,
        cr.total_time,
        cr.mode,
        cr.scaling,
        cr.zx_curve()?,
    )?;
    let summary = CrSummary {
        t_gate: d.t_gate,
        omega: d.omega,
        max_mitigated: d.max_mitigated(),
        min_mitigated: d.min_mitigated(),
        mean_deviation_c1: d.mean_deviation(&d.series[0]),
        mean_deviation_mitigated: d.mean_deviation(&d.mitigated),
    };
    Ok(vec![
        Artifact::new("cr_decay.csv", d.to_csv()),
        Artifact::new("cr_summary.json", to_json(&summary)?),
    ])
}

pub fn to_json<T: Serialize>(v: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(v).map_err(|e| Error::Io(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

#[derive(Serialize)]
struct RunRecord<'a> {
    depth: usize,
    seed: u64,
    run: &'a VqeRun,
}

fn vqe(cfg: &ExperimentConfig) -> Result<Vec<Artifact>> {
    let section = &cfg.vqe;
    let h = if section.hamiltonian == "heisenberg" {
        crate::vqe::heisenberg_hamiltonian(section.j, section.b)?
    } else {
        PauliSum::parse(&std::fs::read_to_string(&section.hamiltonian)?)?
    };
    let n = h.n_qubits();
    let noise = cfg.noise.model(n)?;
    let ground = exact_ground(&h)?;
    let base = |depth: usize, seed: u64| -> Result<VqeConfig> {
        let mut ansatz = AnsatzConfig::new(n, depth);
        if let Some(p) = &section.entangler_pairs {
            ansatz.entangler_pairs = p.clone();
        }
        ansatz.entangler_angle = section.entangler_angle;
        ansatz.timing = cfg.timing.clone();
        Ok(VqeConfig {
            ansatz,
            spsa: section.spsa.clone(),
            stretch: cfg.stretch_set()?,
            shots: cfg.shots_mode(),
            final_stretch: StretchSet::new(section.final_stretch.clone())?,
            final_shots: section.final_shots.map_or(Shots::Exact, Shots::Finite),
            init_scale: section.init_scale,
            seed,
        })
    };
    let runs: Vec<(usize, u64, VqeRun)> = match section.sweep_max_depth {
        Some(max) => cfg
            .seeds
            .par_iter()
            .map(|&seed| {
                Ok(depth_sweep(&h, &noise, &base(0, seed)?, max)?
                    .into_iter()
                    .map(|(d, r)| (d, seed, r))
                    .collect::<Vec<_>>())
            })
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .flatten()
            .collect(),
        None => {
            let jobs: Vec<(usize, u64)> = section
                .depths
                .iter()
                .flat_map(|&d| cfg.seeds.iter().map(move |&s| (d, s)))
                .collect();
            jobs.par_iter()
                .map(|&(d, seed)| Ok((d, seed, run_vqe(&h, &noise, &base(d, seed)?)?)))
                .collect::<Result<_>>()?
        }
    };
    let mut summary = String::from(
        "d,seed,energy_raw,energy_mitigated,eps1_raw,eps1_mitigated,eps2_raw,eps2_mitigated,exact_energy\n",
    );
    for (d, seed, run) in &runs {
        let m = run_metrics(run, &h, &ground)?;
        writeln!(
            summary,
            "{d},{seed},{},{},{},{},{},{},{}",
            run.final_raw().energy,
            run.final_estimate.value,
            m.eps1_raw,
            m.eps1_mitigated,
            m.eps2_raw,
            m.eps2_mitigated,
            ground.energy
        )
        .ok();
    }
    let records: Vec<RunRecord> = runs
        .iter()
        .map(|(d, s, r)| RunRecord {
            depth: *d,
            seed: *s,
            run: r,
        })
        .collect();
    Ok(vec![
        Artifact::new("vqe_summary.csv", summary),
        Artifact::new("vqe_runs.json", to_json(&records)?),
    ])
}

fn zne_generic(cfg: &ExperimentConfig) -> Result<Vec<Artifact>> {
    let path = cfg
        .generic
        .circuit
        .as_ref()
        .ok_or_else(|| Error::validation("generic.circuit_missing", "generic.circuit is required"))?;
    let circuit = Circuit::from_json(&std::fs::read_to_string(path)?)?;
    let obs = observable_from(&cfg.generic.observable)?;
    let obs = if obs.n_qubits() == circuit.n_qubits {
        obs
    } else {
        return Err(Error::usage(format!(
            "observable acts on {} qubits, circuit on {}",
            obs.n_qubits(),
            circuit.n_qubits
        )));
    };
    let noise = cfg.noise.model(circuit.n_qubits)?;
    let rows: Vec<ZneRow> = cfg
        .seeds
        .par_iter()
        .map(|&seed| zne_row(cfg, &circuit, &obs, &noise, seed, cfg.generic.replicas))
        .collect::<Result<_>>()?;
    let mut points = String::from("seed,c,estimate,variance\n");
    let mut main = String::from("seed,value,std_error,order,bootstrap_mean,bootstrap_std\n");
    let mut out = Vec::new();
    for (&seed, row) in cfg.seeds.iter().zip(&rows) {
        let m = &row.mitigated;
        for p in &m.inputs {
            writeln!(points, "{seed},{},{},{}", p.c, p.estimate, p.variance).ok();
        }
        let b = row.bootstrap.as_ref();
        writeln!(
            main,
            "{seed},{},{},{},{},{}",
            m.value,
            m.std_error(),
            m.order,
            opt(b.map(|b| b.mean)),
            opt(b.map(|b| b.std))
        )
        .ok();
        if let Some(b) = b {
            out.push(Artifact::new(format!("bootstrap_hist_seed{seed}.csv"), b.histogram_csv(20)));
        }
        for (k, t) in row.tables.iter().enumerate() {
            out.push(Artifact::new(format!("counts_seed{seed}_{k:02}_{}.csv", t.setting), t.to_csv()));
        }
    }
    out.insert(0, Artifact::new("zne_mitigated.csv", main));
    out.insert(0, Artifact::new("zne_points.csv", points));
    Ok(out)
}
