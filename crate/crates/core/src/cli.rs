//! Command-line front end.
//!
//! `zne-lab <experiment> [flags]` (or `zne-lab run <experiment>`) loads an
//! optional config, applies flag overrides, validates, runs, and writes
//! artifacts plus `manifest.json` into the output directory. Exit status is
//! 0 on success, 2 for invalid input and 3 for numerical failures.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::config::{parse_list, CurveChoice, ExperimentConfig, ExperimentKind, NoiseSpec};
use crate::cr::{DriveMode, ScalingPolicy};
use crate::error::{Error, Result};
use crate::experiments::{run_experiment, to_json, Artifact};

/// Default output directory when neither `--out` nor the config sets one.
pub const OUT_ENV: &str = "ZNE_LAB_OUT";

#[derive(Parser, Debug)]
#[command(name = "zne-lab", version, about = "Zero-noise extrapolation experiments on simulated qubits")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run an experiment by name.
    Run {
        experiment: ExperimentKind,
        #[command(flatten)]
        args: RunArgs,
    },
    /// Report every violation in a config file without running it.
    Validate { config: PathBuf },
    /// Ground-state survival of single-qubit identity Clifford sequences.
    #[command(name = "clifford-decay-1q")]
    CliffordDecay1q(RunArgs),
    /// Same, for two qubits.
    #[command(name = "clifford-decay-2q")]
    CliffordDecay2q(RunArgs),
    /// Bloch vector along the 30-step rotation from |0⟩ to |1⟩.
    Trajectory(RunArgs),
    /// Bell-state ZZ parity after identity sequences, with bootstrap.
    BellParity(RunArgs),
    /// ⟨IZ⟩ under a constant cross-resonance drive at several stretches.
    CrModel(RunArgs),
    /// Mitigated VQE on a Heisenberg ring or a Hamiltonian file.
    Vqe(RunArgs),
    /// Extrapolate any observable of a circuit JSON file.
    ZneGeneric(RunArgs),
}

#[derive(Args, Debug, Default, Clone)]
pub struct RunArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Repeatable; replaces the config's seed list.
    #[arg(long = "seed")]
    pub seeds: Vec<u64>,
    /// Comma-separated stretch factors, e.g. `1,1.5,2`.
    #[arg(long)]
    pub stretch: Option<String>,
    /// Shots per setting, or `exact`.
    #[arg(long)]
    pub shots: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// `none` disables decoherence.
    #[arg(long)]
    pub noise: Option<String>,
    #[arg(long)]
    pub t1: Option<f64>,
    #[arg(long)]
    pub t2: Option<f64>,
    #[arg(long)]
    pub depolarizing: Option<f64>,
    #[arg(long)]
    pub readout_flip: Option<f64>,
    /// Clifford or Bell sequence lengths.
    #[arg(long)]
    pub lengths: Option<String>,
    #[arg(long)]
    pub sequences: Option<usize>,
    #[arg(long)]
    pub replicas: Option<usize>,
    #[arg(long)]
    pub t_gate: Option<f64>,
    #[arg(long)]
    pub total_time: Option<f64>,
    #[arg(long, value_parser = ["naive", "recalibrated"])]
    pub scaling: Option<String>,
    #[arg(long, value_parser = ["linear-only", "full-nonlinear"])]
    pub mode: Option<String>,
    #[arg(long)]
    pub curve: Option<CurveChoice>,
    /// `heisenberg` or a Hamiltonian file.
    #[arg(long)]
    pub hamiltonian: Option<String>,
    #[arg(long = "J")]
    pub j: Option<f64>,
    #[arg(long = "B")]
    pub b: Option<f64>,
    #[arg(long)]
    pub depth: Option<usize>,
    #[arg(long)]
    pub sweep_max_depth: Option<usize>,
    #[arg(long)]
    pub iterations: Option<usize>,
    #[arg(long)]
    pub circuit: Option<PathBuf>,
    #[arg(long)]
    pub observable: Option<String>,
}

impl RunArgs {
    /// Loads the config (or defaults) and applies every given flag.
    pub fn resolve(&self, experiment: ExperimentKind) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => {
                let cfg = ExperimentConfig::load(p)?;
                if cfg.experiment != experiment {
                    return Err(Error::usage(format!(
                        "config is for `{}`, command asked for `{experiment}`",
                        cfg.experiment
                    )));
                }
                cfg
            }
            None => ExperimentConfig::new(experiment),
        };
        if !self.seeds.is_empty() {
            cfg.seeds = self.seeds.clone();
        }
        if let Some(s) = &self.stretch {
            cfg.stretch = parse_list(s).map_err(|e| Error::usage(format!("--stretch {e}")))?;
        }
        if let Some(s) = &self.shots {
            cfg.shots = match s.as_str() {
                "exact" => None,
                n => Some(n.parse().map_err(|_| Error::usage(format!("--shots `{n}` is not a count")))?),
            };
        }
        if let Some(o) = &self.out {
            cfg.output_dir = Some(o.clone());
        }
        match self.noise.as_deref() {
            None => {}
            Some("none") => cfg.noise = NoiseSpec::none(),
            Some("default") => cfg.noise = NoiseSpec::default(),
            Some(other) => return Err(Error::usage(format!("--noise `{other}`: expected none or default"))),
        }
        if self.t1.is_some() {
            cfg.noise.t1 = self.t1;
        }
        if self.t2.is_some() {
            cfg.noise.t2 = self.t2;
        }
        if self.depolarizing.is_some() {
            cfg.noise.depolarizing = self.depolarizing;
        }
        if self.readout_flip.is_some() {
            cfg.noise.readout_flip = self.readout_flip;
        }
        if let Some(l) = &self.lengths {
            let l: Vec<usize> = parse_list(l).map_err(|e| Error::usage(format!("--lengths {e}")))?;
            cfg.clifford.lengths = l.clone();
            cfg.bell.lengths = l;
        }
        if let Some(s) = self.sequences {
            cfg.clifford.sequences = s;
        }
        if let Some(r) = self.replicas {
            cfg.bell.replicas = r;
            cfg.generic.replicas = r;
        }
        if let Some(t) = self.t_gate {
            cfg.cr.t_gate = t;
        }
        if let Some(t) = self.total_time {
            cfg.cr.total_time = t;
        }
        if let Some(s) = &self.scaling {
            cfg.cr.scaling = if s == "naive" {
                ScalingPolicy::Naive
            } else {
                ScalingPolicy::Recalibrated
            };
        }
        if let Some(m) = &self.mode {
            cfg.cr.mode = if m == "linear-only" {
                DriveMode::LinearOnly
            } else {
                DriveMode::FullNonlinear
            };
        }
        if let Some(c) = self.curve {
            cfg.cr.curve = c;
        }
        if let Some(h) = &self.hamiltonian {
            cfg.vqe.hamiltonian = h.clone();
        }
        if let Some(j) = self.j {
            cfg.vqe.j = j;
        }
        if let Some(b) = self.b {
            cfg.vqe.b = b;
        }
        if let Some(d) = self.depth {
            cfg.vqe.depths = vec![d];
        }
        if self.sweep_max_depth.is_some() {
            cfg.vqe.sweep_max_depth = self.sweep_max_depth;
        }
        if let Some(i) = self.iterations {
            cfg.vqe.spsa.iterations = i;
            cfg.vqe.spsa.averaging_window = cfg.vqe.spsa.averaging_window.min(i.max(1));
        }
        if let Some(c) = &self.circuit {
            cfg.generic.circuit = Some(c.clone());
        }
        if let Some(o) = &self.observable {
            cfg.generic.observable = o.clone();
        }
        Ok(cfg)
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    experiment: ExperimentKind,
    seeds: &'a [u64],
    artifacts: Vec<&'a str>,
    config: &'a ExperimentConfig,
}

fn output_dir(cfg: &ExperimentConfig) -> PathBuf {
    cfg.output_dir
        .clone()
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("zne-lab-out"))
}

fn write_artifacts(dir: &Path, artifacts: &[Artifact]) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
    for a in artifacts {
        // names are generated here, never taken from input
        debug_assert!(!a.name.contains('/') && !a.name.contains(".."));
        let path = dir.join(&a.name);
        std::fs::write(&path, &a.contents).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    }
    Ok(())
}

/// Runs one experiment and writes its artifacts; returns the directory.
pub fn execute(cfg: &ExperimentConfig) -> Result<PathBuf> {
    let start = Instant::now();
    let artifacts = run_experiment(cfg)?;
    let dir = output_dir(cfg);
    let mut resolved = cfg.clone();
    resolved.output_dir = Some(dir.clone());
    let manifest = Manifest {
        tool: "zne-lab",
        version: env!("CARGO_PKG_VERSION"),
        experiment: cfg.experiment,
        seeds: &cfg.seeds,
        artifacts: artifacts.iter().map(|a| a.name.as_str()).collect(),
        config: &resolved,
    };
    let mut all = artifacts.clone();
    all.push(Artifact {
        name: "manifest.json".into(),
        contents: to_json(&manifest)?,
    });
    // kept apart so every JSON and CSV file is reproducible byte for byte
    all.push(Artifact {
        name: "wall_time.txt".into(),
        contents: format!("{:.3}\n", start.elapsed().as_secs_f64()),
    });
    write_artifacts(&dir, &all)?;
    Ok(dir)
}

/// Exit status for an error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Numerical { .. } | Error::NonFiniteObjective { .. } => 3,
        _ => 2,
    }
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Parses `args` and runs; returns the process exit status. Reports go to
/// `out`, errors to `err` as a single line.
pub fn main_with<I, T>(args: I, out: &mut impl Write, err: &mut impl Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(out, "{e}");
                return 0;
            }
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("invalid arguments");
            let _ = writeln!(err, "usage error: {}", one_line(first.trim_start_matches("error: ")));
            return 2;
        }
    };
    let (kind, args) = match cli.command {
        Command::Validate { config } => return validate(&config, out, err),
        Command::Run { experiment, args } => (experiment, args),
        Command::CliffordDecay1q(a) => (ExperimentKind::CliffordDecay1q, a),
        Command::CliffordDecay2q(a) => (ExperimentKind::CliffordDecay2q, a),
        Command::Trajectory(a) => (ExperimentKind::Trajectory, a),
        Command::BellParity(a) => (ExperimentKind::BellParity, a),
        Command::CrModel(a) => (ExperimentKind::CrModel, a),
        Command::Vqe(a) => (ExperimentKind::Vqe, a),
        Command::ZneGeneric(a) => (ExperimentKind::ZneGeneric, a),
    };
    match args.resolve(kind).and_then(|cfg| execute(&cfg)) {
        Ok(dir) => {
            let _ = writeln!(out, "{}", dir.display());
            0
        }
        Err(e) => {
            let _ = writeln!(err, "{}", one_line(&e.to_string()));
            exit_code(&e)
        }
    }
}

fn validate(path: &Path, out: &mut impl Write, err: &mut impl Write) -> i32 {
    match ExperimentConfig::load(path) {
        Ok(cfg) => {
            for v in cfg.violations() {
                let _ = writeln!(out, "{}: {}", v.code, one_line(&v.message));
            }
            0
        }
        Err(e) => {
            let _ = writeln!(err, "{}", one_line(&e.to_string()));
            exit_code(&e)
        }
    }
}
