//! Experiment configuration files.
//!
//! A config is a TOML document with a required `experiment` key, shared
//! top-level settings (`stretch`, `shots`, `seeds`, `output_dir`) and one
//! optional table per experiment family. Unknown keys are rejected.
//!
//! ```toml
//! experiment = "cr-model"
//! stretch = [1.0, 2.0]
//!
//! [cr]
//! t_gate = 2.0
//! ```

use std::f64::consts::PI;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::cr::{CRParams, DriveMode, ScalingPolicy, ZxCurve};
use crate::error::{Error, Result};
use crate::gates::GateTiming;
use crate::noise::{ConfusionMatrix, DriftProfile, NoiseModel, QubitNoise, Violation};
use crate::pauli::PauliSum;
use crate::spsa::SpsaConfig;
use crate::vqe::Shots;
use crate::zne::StretchSet;

/// Default relaxation time, ns.
pub const DEFAULT_T1: f64 = 50_000.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    CliffordDecay1q,
    CliffordDecay2q,
    Trajectory,
    BellParity,
    CrModel,
    Vqe,
    ZneGeneric,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::CliffordDecay1q => "clifford-decay-1q",
            ExperimentKind::CliffordDecay2q => "clifford-decay-2q",
            ExperimentKind::Trajectory => "trajectory",
            ExperimentKind::BellParity => "bell-parity",
            ExperimentKind::CrModel => "cr-model",
            ExperimentKind::Vqe => "vqe",
            ExperimentKind::ZneGeneric => "zne-generic",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Per-qubit decoherence shared by all qubits, plus optional readout error
/// and drift. Times are in ns; a missing `t1` means no relaxation and a
/// missing `t2` defaults to `2·t1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseSpec {
    pub t1: Option<f64>,
    pub t2: Option<f64>,
    pub depolarizing: Option<f64>,
    /// Symmetric per-qubit readout flip probability.
    pub readout_flip: Option<f64>,
    /// `(first experiment index, rate multiplier)` steps.
    pub drift: Option<Vec<(u64, f64)>>,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        NoiseSpec {
            t1: Some(DEFAULT_T1),
            t2: None,
            depolarizing: None,
            readout_flip: None,
            drift: None,
        }
    }
}

impl NoiseSpec {
    pub fn none() -> Self {
        NoiseSpec {
            t1: None,
            ..Self::default()
        }
    }

    fn qubit(&self) -> QubitNoise {
        let t1 = self.t1.unwrap_or(f64::INFINITY);
        let t2 = self.t2.unwrap_or(2.0 * t1);
        QubitNoise::new(t1, t2)
    }

    /// Builds the model without validating it.
    fn assemble(&self, n_qubits: usize) -> Result<NoiseModel> {
        let mut m = NoiseModel {
            per_qubit: vec![self.qubit(); n_qubits],
            depolarizing_rate: self.depolarizing,
            confusion: None,
            drift: None,
        };
        if let Some(p) = self.readout_flip {
            m.confusion = Some(ConfusionMatrix::symmetric_flip(n_qubits, p)?);
        }
        if let Some(schedule) = &self.drift {
            m.drift = Some(DriftProfile::new(schedule.clone())?);
        }
        Ok(m)
    }

    pub fn model(&self, n_qubits: usize) -> Result<NoiseModel> {
        let m = self.assemble(n_qubits)?;
        m.validate()?;
        Ok(m)
    }

    pub fn violations(&self) -> Vec<Violation> {
        if let Some(p) = self.readout_flip {
            if !(0.0..0.5).contains(&p) {
                return vec![violation(
                    "noise.readout_out_of_range",
                    format!("readout flip {p} must be in [0, 0.5)"),
                )];
            }
        }
        match self.assemble(1) {
            Ok(m) => m.violations(),
            Err(Error::Validation { code, message }) => vec![Violation { code, message }],
            Err(e) => vec![violation("noise.invalid", e.to_string())],
        }
    }
}

fn violation(code: &str, message: impl Into<String>) -> Violation {
    Violation {
        code: code.to_string(),
        message: message.into(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CliffordSection {
    pub lengths: Vec<usize>,
    /// Random sequences per length.
    pub sequences: usize,
}

impl Default for CliffordSection {
    fn default() -> Self {
        CliffordSection {
            lengths: vec![1, 2, 4, 8, 16, 32],
            sequences: 5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BellSection {
    pub lengths: Vec<usize>,
    /// Bootstrap replicas when sampling.
    pub replicas: usize,
}

impl Default for BellSection {
    fn default() -> Self {
        BellSection {
            lengths: vec![0, 1, 2, 4, 8],
            replicas: 100,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum CurveChoice {
    /// Coefficients quoted alongside the model.
    Quoted,
    /// Coefficients evaluated from the perturbative formula.
    Formula,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CrSection {
    /// Gate time in units of `1/J`.
    pub t_gate: f64,
    pub total_time: f64,
    pub mode: DriveMode,
    pub scaling: ScalingPolicy,
    pub curve: CurveChoice,
    pub params: CRParams,
}

impl Default for CrSection {
    fn default() -> Self {
        CrSection {
            t_gate: 2.0,
            total_time: 100.0,
            mode: DriveMode::FullNonlinear,
            scaling: ScalingPolicy::Naive,
            curve: CurveChoice::Quoted,
            params: CRParams::default(),
        }
    }
}

impl CrSection {
    pub fn zx_curve(&self) -> Result<ZxCurve> {
        match self.curve {
            CurveChoice::Quoted => Ok(ZxCurve::quoted()),
            CurveChoice::Formula => ZxCurve::from_params(&self.params),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VqeSection {
    /// `"heisenberg"` or a path to a Hamiltonian text file.
    pub hamiltonian: String,
    #[serde(rename = "J")]
    pub j: f64,
    #[serde(rename = "B")]
    pub b: f64,
    pub depths: Vec<usize>,
    /// Grow the depth until no improvement twice, up to this depth.
    pub sweep_max_depth: Option<usize>,
    pub entangler_pairs: Option<Vec<(usize, usize)>>,
    pub entangler_angle: f64,
    pub final_stretch: Vec<f64>,
    /// Final measurement shots; absent means exact.
    pub final_shots: Option<u64>,
    pub init_scale: f64,
    pub spsa: SpsaConfig,
}

impl Default for VqeSection {
    fn default() -> Self {
        VqeSection {
            hamiltonian: "heisenberg".into(),
            j: 1.0,
            b: 1.0,
            depths: vec![1],
            sweep_max_depth: None,
            entangler_pairs: None,
            entangler_angle: PI / 4.0,
            final_stretch: vec![1.0, 1.1, 1.25, 1.5],
            final_shots: Some(100_000),
            init_scale: PI,
            spsa: SpsaConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GenericSection {
    /// Circuit JSON file.
    pub circuit: Option<PathBuf>,
    /// Observable in Hamiltonian text form, or a path to such a file.
    pub observable: String,
    pub replicas: usize,
}

impl Default for GenericSection {
    fn default() -> Self {
        GenericSection {
            circuit: None,
            observable: "1.0 Z".into(),
            replicas: 100,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    #[serde(default)]
    pub noise: NoiseSpec,
    #[serde(default = "default_stretch")]
    pub stretch: Vec<f64>,
    /// Shots per setting; absent means exact expectations.
    #[serde(default)]
    pub shots: Option<u64>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub timing: GateTiming,
    #[serde(default)]
    pub clifford: CliffordSection,
    #[serde(default)]
    pub bell: BellSection,
    #[serde(default)]
    pub cr: CrSection,
    #[serde(default)]
    pub vqe: VqeSection,
    #[serde(default)]
    pub generic: GenericSection,
}

fn default_stretch() -> Vec<f64> {
    vec![1.0, 1.5]
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

impl ExperimentConfig {
    pub fn new(experiment: ExperimentKind) -> Self {
        let mut cfg = ExperimentConfig {
            experiment,
            noise: NoiseSpec::default(),
            stretch: default_stretch(),
            shots: None,
            seeds: default_seeds(),
            output_dir: None,
            timing: GateTiming::default(),
            clifford: CliffordSection::default(),
            bell: BellSection::default(),
            cr: CrSection::default(),
            vqe: VqeSection::default(),
            generic: GenericSection::default(),
        };
        match experiment {
            ExperimentKind::CrModel => cfg.stretch = vec![1.0, 2.0],
            ExperimentKind::BellParity => cfg.shots = Some(10_000),
            ExperimentKind::Vqe => cfg.shots = Some(10_000),
            _ => {}
        }
        cfg
    }

    /// Parses TOML, or the `config` member of a JSON manifest.
    pub fn parse(text: &str, json: bool) -> Result<Self> {
        if json {
            #[derive(Deserialize)]
            struct Manifest {
                config: ExperimentConfig,
            }
            let m: Manifest = serde_json::from_str(text).map_err(|e| Error::Parse {
                line: e.line(),
                message: e.to_string(),
            })?;
            return Ok(m.config);
        }
        toml::from_str(text).map_err(|e| {
            let message = e.message().to_string();
            let mut line = e
                .span()
                .map_or(0, |s| text[..s.start.min(text.len())].matches('\n').count() + 1);
            // unknown-key spans cover the enclosing table; point at the key
            if let Some(key) = message
                .strip_prefix("unknown field `")
                .and_then(|r| r.split('`').next())
            {
                if let Some(k) = text.lines().position(|l| {
                    l.trim_start()
                        .strip_prefix(key)
                        .is_some_and(|r| r.trim_start().starts_with('='))
                }) {
                    line = k + 1;
                }
            }
            Error::Parse { line, message }
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        let json = path.extension().is_some_and(|e| e == "json");
        Self::parse(&text, json)
    }

    pub fn stretch_set(&self) -> Result<StretchSet> {
        StretchSet::new(self.stretch.clone())
    }

    pub fn shots_mode(&self) -> Shots {
        self.shots.map_or(Shots::Exact, Shots::Finite)
    }

    /// Every rule the config breaks; empty when it is runnable.
    pub fn violations(&self) -> Vec<Violation> {
        let mut out: Vec<Violation> = StretchSet::violations(&self.stretch)
            .into_iter()
            .map(|(code, message)| violation(code, message))
            .collect();
        if self.shots == Some(0) {
            out.push(violation("shots.zero", "shots must be ≥ 1"));
        }
        if self.seeds.is_empty() {
            out.push(violation("seeds.empty", "at least one seed is required"));
        }
        out.extend(self.noise.violations());
        if let Err(Error::Validation { code, message }) = self.timing.check() {
            out.push(Violation { code, message });
        }
        match self.experiment {
            ExperimentKind::CliffordDecay1q | ExperimentKind::CliffordDecay2q => {
                let c = &self.clifford;
                if c.lengths.is_empty() || c.lengths.contains(&0) {
                    out.push(violation("clifford.bad_lengths", "lengths must be non-empty and ≥ 1"));
                }
                if c.sequences == 0 {
                    out.push(violation("clifford.no_sequences", "sequences must be ≥ 1"));
                }
            }
            ExperimentKind::BellParity => {
                if self.bell.lengths.is_empty() {
                    out.push(violation("bell.no_lengths", "lengths must be non-empty"));
                }
                if self.shots.is_some() && self.bell.replicas < 2 {
                    out.push(violation("bell.too_few_replicas", "bootstrap needs ≥ 2 replicas"));
                }
            }
            ExperimentKind::CrModel => {
                let cr = &self.cr;
                if !(cr.t_gate > 0.0 && cr.t_gate.is_finite()) {
                    out.push(violation("cr.t_gate_not_positive", format!("t_gate = {}", cr.t_gate)));
                }
                if !(cr.total_time > 0.0 && cr.total_time.is_finite()) {
                    out.push(violation(
                        "cr.total_time_not_positive",
                        format!("total_time = {}", cr.total_time),
                    ));
                }
                if let Err(e) = cr.params.check() {
                    out.push(violation("cr.bad_params", e.to_string()));
                }
            }
            ExperimentKind::Vqe => out.extend(self.vqe_violations()),
            ExperimentKind::ZneGeneric => {
                match &self.generic.circuit {
                    None => out.push(violation("generic.circuit_missing", "generic.circuit is required")),
                    Some(p) if !p.is_file() => out.push(violation(
                        "generic.circuit_missing",
                        format!("{} is not a file", p.display()),
                    )),
                    _ => {}
                }
                if let Err(e) = observable_from(&self.generic.observable) {
                    out.push(violation("generic.bad_observable", e.to_string()));
                }
                if self.shots.is_some() && self.generic.replicas < 2 {
                    out.push(violation("generic.too_few_replicas", "bootstrap needs ≥ 2 replicas"));
                }
            }
            ExperimentKind::Trajectory => {}
        }
        out
    }

    fn vqe_violations(&self) -> Vec<Violation> {
        let v = &self.vqe;
        let mut out: Vec<Violation> = StretchSet::violations(&v.final_stretch)
            .into_iter()
            .map(|(code, message)| violation(&format!("vqe.final_{code}"), message))
            .collect();
        if v.final_shots == Some(0) {
            out.push(violation("vqe.final_shots_zero", "final shots must be ≥ 1"));
        }
        if v.depths.is_empty() && v.sweep_max_depth.is_none() {
            out.push(violation("vqe.no_depths", "give depths or sweep_max_depth"));
        }
        if v.hamiltonian != "heisenberg" && !Path::new(&v.hamiltonian).is_file() {
            out.push(violation(
                "vqe.hamiltonian_missing",
                format!("{} is neither `heisenberg` nor a file", v.hamiltonian),
            ));
        }
        if ![v.j, v.b, v.entangler_angle, v.init_scale].iter().all(|x| x.is_finite()) {
            out.push(violation("vqe.not_finite", "J, B, entangler_angle and init_scale must be finite"));
        }
        if let Err(Error::Validation { code, message }) = v.spsa.validate() {
            out.push(violation(&format!("vqe.{code}"), message));
        }
        out
    }

    /// Fails with the first violation.
    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        match v.first() {
            None => Ok(()),
            Some(first) => {
                let more = if v.len() > 1 {
                    format!(" (+{} more)", v.len() - 1)
                } else {
                    String::new()
                };
                Err(Error::validation(&first.code, format!("{}{more}", first.message)))
            }
        }
    }
}

/// Observable from inline Hamiltonian text or a file holding it.
pub fn observable_from(spec: &str) -> Result<PauliSum> {
    let path = Path::new(spec);
    if path.is_file() {
        PauliSum::parse(&std::fs::read_to_string(path)?)
    } else {
        PauliSum::parse(&spec.replace(';', "\n"))
    }
}

/// Comma-separated list parser for flag values.
pub fn parse_list<T: FromStr>(text: &str) -> std::result::Result<Vec<T>, String>
where
    T::Err: fmt::Display,
{
    text.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.trim().parse::<T>().map_err(|e| format!("`{s}`: {e}")))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn codes(cfg: &ExperimentConfig) -> Vec<String> {
        cfg.violations().into_iter().map(|v| v.code).collect()
    }

    #[test]
    fn minimal_file_is_valid() {
        let cfg = ExperimentConfig::parse("experiment = \"trajectory\"\n", false).unwrap();
        assert!(cfg.violations().is_empty());
        assert_eq!(cfg.stretch, vec![1.0, 1.5]);
    }

    #[test]
    fn stretch_must_start_at_one() {
        let cfg = ExperimentConfig::parse("experiment = \"trajectory\"\nstretch = [1.5, 2.0]\n", false).unwrap();
        assert!(codes(&cfg).contains(&"stretch.first_must_be_1".to_string()));
    }

    #[test]
    fn t2_limit() {
        let text = "experiment = \"trajectory\"\n[noise]\nt1 = 100.0\nt2 = 250.0\n";
        let cfg = ExperimentConfig::parse(text, false).unwrap();
        assert_eq!(codes(&cfg), vec!["noise.t2_exceeds_2t1"]);
    }

    #[test]
    fn unknown_keys_rejected() {
        let err = ExperimentConfig::parse("experiment = \"vqe\"\nstrech = [1.0]\n", false).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        assert!(ExperimentConfig::parse("experiment = \"vqe\"\n[vqe]\ndepht = 2\n", false).is_err());
    }

    #[test]
    fn infinite_t1_means_noiseless() {
        let cfg = ExperimentConfig::parse("experiment = \"trajectory\"\n[noise]\nt1 = inf\n", false).unwrap();
        let m = cfg.noise.model(1).unwrap();
        assert!(m.dissipators(1).unwrap().is_empty());
    }

    #[test]
    fn lists() {
        assert_eq!(parse_list::<f64>("1, 1.5,2").unwrap(), vec![1.0, 1.5, 2.0]);
        assert!(parse_list::<f64>("1,x").is_err());
    }
}
