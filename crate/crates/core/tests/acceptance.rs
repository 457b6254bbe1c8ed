//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fail.

mod common;

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;
use std::path::Path;
use std::time::{Duration, Instant};

use zne_lab::cli::main_with;
use zne_lab::cr::{simulate_cr_decay, CRParams, DriveMode, ScalingPolicy, ZxCurve};
use zne_lab::experiments::{exact_zne, sampled_zne};
use zne_lab::gates::{compile, GateTiming};
use zne_lab::measure::{apply_confusion, correct_readout, corrected_parity, sample_counts, stream_rng, MeasurementSetting};
use zne_lab::noise::ConfusionMatrix;
use zne_lab::pauli::{string_expectation, C64};
use zne_lab::protocols::{bell_preparation, trajectory_circuits};
use zne_lab::pulse::Simulator;
use zne_lab::vqe::{
    build_ansatz, calibrate_t1, exact_ground, heisenberg_hamiltonian, run_metrics, run_vqe, AnsatzConfig, VqeConfig,
};
use zne_lab::zne::coefficients_for;
use zne_lab::{expectation, DensityMatrix, NoiseModel, PauliString, PauliSum, Result, StretchSet};

use common::{log_slope, random_circuit};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Result<Outcome> {
    Ok(Outcome { pass, detail })
}

fn pauli(s: &str) -> PauliString {
    s.parse().expect("valid Pauli string")
}

fn richardson() -> Result<Outcome> {
    let t = Instant::now();
    let c = [1.0, 2.0, 3.0, 4.0];
    let g = coefficients_for(&c)?.gammas;
    let elapsed = t.elapsed();
    let expected = [4.0, -6.0, 4.0, -1.0];
    let coef_err = g.iter().zip(expected).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let residual = (1..=3)
        .map(|k| g.iter().zip(c).map(|(gi, ci)| gi * ci.powi(k)).sum::<f64>().abs())
        .fold(0.0, f64::max);
    outcome(
        coef_err < 1e-12 && residual < 1e-10 && elapsed < Duration::from_millis(1),
        format!("gammas {g:?}, coef err {coef_err:.1e}, max residual {residual:.1e}, {elapsed:.1?}"),
    )
}

fn stretch_equivalence() -> Result<Outcome> {
    let timing = GateTiming::default();
    let noise = NoiseModel::uniform(2, 2_000.0, 3_000.0);
    let rho0 = DensityMatrix::ground(2)?;
    let mut worst: f64 = 0.0;
    for seed in 0..5 {
        let circuit = random_circuit(2, 12, 100 + seed, &timing);
        for c in [1.5, 2.0, 4.0] {
            let a = Simulator::new(&noise, 2)?.run(&circuit.stretch(c)?, &rho0)?;
            let b = Simulator::new(&noise.amplified(c), 2)?.run(&circuit, &rho0)?;
            worst = worst.max(a.max_abs_diff(&b));
        }
    }
    outcome(worst < 1e-7, format!("max |difference| {worst:.2e} over 5 circuits x 3 factors"))
}

fn error_order() -> Result<Outcome> {
    let circuit = random_circuit(2, 12, 7, &GateTiming::default());
    let obs = PauliSum::from_pairs(&[(1.0, "ZZ"), (1.0, "XI"), (1.0, "IX")])?;
    let ideal = expectation(&Simulator::noiseless(2)?.run(&circuit, &DensityMatrix::ground(2)?)?, &obs)?;
    let stretch = StretchSet::new(vec![1.0, 2.0])?;
    let duration = circuit.total_duration();
    let lambdas: Vec<f64> = (0..8).map(|i| 1e-3 * 10f64.powf(i as f64 / 7.0)).collect();
    let (mut raw, mut mit) = (Vec::new(), Vec::new());
    for &l in &lambdas {
        // λ is the depolarizing strength accumulated over the whole circuit
        let est = exact_zne(&circuit, &obs, &NoiseModel::depolarizing(2, l / duration), &stretch)?;
        raw.push((est.raw().estimate - ideal).abs());
        mit.push((est.value - ideal).abs());
    }
    let raw_slope = log_slope(&lambdas, &raw);
    let mit_slope = log_slope(&lambdas, &mit);
    outcome(
        mit_slope >= 1.8 && (raw_slope - 1.0).abs() <= 0.15,
        format!("ideal {ideal:.4}, raw slope {raw_slope:.3}, mitigated slope {mit_slope:.3}"),
    )
}

fn cr_nonlinearity() -> Result<Outcome> {
    let stretch = StretchSet::new(vec![1.0, 2.0])?;
    let run = |t_gate: f64| {
        simulate_cr_decay(
            t_gate,
            &stretch,
            &CRParams::default(),
            100.0,
            DriveMode::FullNonlinear,
            ScalingPolicy::Naive,
            ZxCurve::quoted(),
        )
    };
    let fast = run(2.0)?;
    let slow = run(6.0)?;
    let fast_max = fast.max_mitigated();
    let (lo, hi) = (slow.min_mitigated(), slow.max_mitigated());
    let dev_mit = slow.mean_deviation(&slow.mitigated);
    let dev_raw = slow.mean_deviation(&slow.series[0]);
    outcome(
        fast_max > 1.0 && lo >= -1.02 && hi <= 1.02 && dev_mit < dev_raw,
        format!(
            "t=2: max {fast_max:.4}; t=6: range [{lo:.4}, {hi:.4}], deviation mitigated {dev_mit:.4} vs c=1 {dev_raw:.4}"
        ),
    )
}

fn trajectory() -> Result<Outcome> {
    let circuits = trajectory_circuits(&GateTiming::default())?;
    let sim = Simulator::noiseless(1)?;
    let axes = [pauli("X"), pauli("Y"), pauli("Z")];
    let mut sphere: f64 = 0.0;
    let mut end = 0.0;
    for c in &circuits {
        let rho = sim.run(c, &DensityMatrix::ground(1)?)?;
        let v = axes.iter().map(|p| string_expectation(&rho, p)).collect::<Result<Vec<_>>>()?;
        sphere = sphere.max((v.iter().map(|x| x * x).sum::<f64>().sqrt() - 1.0).abs());
        end = v[2];
    }
    let t1 = 50_000.0;
    let noise = NoiseModel::uniform(1, t1, 2.0 * t1);
    let z = PauliSum::from_pairs(&[(1.0, "Z")])?;
    let est = exact_zne(circuits.last().expect("30 points"), &z, &noise, &StretchSet::new(vec![1.0, 2.0])?)?;
    let (raw, mit) = (est.raw().estimate, est.value);
    outcome(
        circuits.len() == 30 && (end + 1.0).abs() < 1e-6 && sphere < 1e-6 && (mit + 1.0).abs() < (raw + 1.0).abs(),
        format!(
            "{} points, endpoint {end:.9}, max |r-1| {sphere:.1e}; noisy endpoint raw {raw:.6}, mitigated {mit:.6}",
            circuits.len()
        ),
    )
}

fn heisenberg_ansatz(depth: usize) -> AnsatzConfig {
    let mut a = AnsatzConfig::ring(4, depth);
    a.entangler_angle = FRAC_PI_2;
    a
}

fn heisenberg() -> Result<Outcome> {
    let e_field = exact_ground(&heisenberg_hamiltonian(0.0, 1.0)?)?.energy;
    let e_coupling = exact_ground(&heisenberg_hamiltonian(1.0, 0.0)?)?.energy;
    let h = heisenberg_hamiltonian(1.0, 1.0)?;
    let oracle = exact_ground(&h)?.energy;
    let mut best = f64::INFINITY;
    for seed in 0..5 {
        let mut cfg = VqeConfig::exact(heisenberg_ansatz(2));
        cfg.spsa.iterations = 1000;
        cfg.seed = seed;
        best = best.min(run_vqe(&h, &NoiseModel::noiseless(4), &cfg)?.final_estimate.value);
    }
    let rel = (best - oracle).abs() / oracle.abs();
    outcome(
        (e_field + 4.0).abs() < 1e-9 && (e_coupling + 8.0).abs() < 1e-9 && rel < 1e-2,
        format!("J=0: {e_field:.6}, B=0: {e_coupling:.6}, oracle {oracle:.6}, best VQE {best:.5} (rel {rel:.2e})"),
    )
}

fn vqe_mitigation() -> Result<Outcome> {
    let h = heisenberg_hamiltonian(1.0, 1.0)?;
    let ground = exact_ground(&h)?;
    let a3 = heisenberg_ansatz(3);
    let probe = build_ansatz(&a3, &VqeConfig::new(a3.clone()).initial_theta())?;
    let t1 = calibrate_t1(&probe, 0.05)?;
    let noise = NoiseModel::uniform(4, t1, 2.0 * t1);
    let mut pass = true;
    let mut notes = vec![format!("T1 {:.0} ns", t1)];
    let mut best = (usize::MAX, f64::INFINITY);
    for d in 1..=3 {
        let mut sums = [0.0; 4];
        let seeds = 10;
        for seed in 0..seeds {
            let mut cfg = VqeConfig::new(heisenberg_ansatz(d));
            cfg.spsa.iterations = 1000;
            cfg.seed = seed;
            let m = run_metrics(&run_vqe(&h, &noise, &cfg)?, &h, &ground)?;
            for (s, v) in sums.iter_mut().zip([m.eps1_raw, m.eps1_mitigated, m.eps2_raw, m.eps2_mitigated]) {
                *s += v / seeds as f64;
            }
        }
        let [e1r, e1m, e2r, e2m] = sums;
        pass &= e1m < e1r && e2m < e2r;
        if e1m < best.1 {
            best = (d, e1m);
        }
        notes.push(format!("d={d} eps1 {e1r:.3}->{e1m:.3} eps2 {e2r:.3}->{e2m:.3}"));
    }
    notes.push(format!("lowest mitigated eps1 at d={}", best.0));
    outcome(pass, notes.join("; "))
}

fn bell_circuit() -> Result<zne_lab::Circuit> {
    compile(2, &bell_preparation()?, &GateTiming::default())
}

fn bootstrap_consistency() -> Result<Outcome> {
    let circuit = bell_circuit()?;
    let zz = PauliSum::from_pairs(&[(1.0, "ZZ")])?;
    let noise = NoiseModel::uniform(2, 20_000.0, 30_000.0);
    let stretch = StretchSet::new(vec![1.0, 2.0])?;
    let run = |shots: u64| sampled_zne(&circuit, &zz, &noise, &stretch, shots, 11, 100);
    let a = run(100_000)?;
    let b = run(200_000)?;
    let boot_a = a.bootstrap.as_ref().expect("replicas requested").std;
    let boot_b = b.bootstrap.as_ref().expect("replicas requested").std;
    let prop = a.mitigated.std_error();
    let rel = (boot_a / prop - 1.0).abs();
    let ratio = boot_a / boot_b;
    let ratio_err = (ratio / 2f64.sqrt() - 1.0).abs();
    outcome(
        rel < 0.2 && ratio_err <= 0.15,
        format!("bootstrap std {boot_a:.3e} vs propagated {prop:.3e} (rel {rel:.3}); shrink ratio {ratio:.3}"),
    )
}

fn readout_round_trip() -> Result<Outcome> {
    let theta: f64 = 1.1;
    let psi = [C64::new((theta / 2.0).cos(), 0.0), C64::new((theta / 2.0).sin(), 0.0)];
    let rho = DensityMatrix::pure(1, &psi)?;
    let truth = theta.cos();
    let m = ConfusionMatrix::symmetric_flip(1, 0.02)?;
    let z = pauli("Z");
    let mut worst: f64 = 0.0;
    for seed in 0..20 {
        let mut rng = stream_rng(seed, 0);
        let counts = sample_counts(&rho, &MeasurementSetting::computational(1), 10_000, &mut rng)?;
        let noisy = apply_confusion(&counts, &m, &mut rng)?;
        let p = correct_readout(&noisy, &m)?;
        let (_, var) = corrected_parity(&noisy, &m, &z)?;
        worst = worst.max((p[0] - p[1] - truth).abs() / var.sqrt());
    }
    outcome(worst < 3.0, format!("worst deviation {worst:.2} sigma over 20 seeds"))
}

fn read_dir(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .expect("output directory")
        .map(|e| {
            let e = e.expect("entry");
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).expect("readable"))
        })
        .filter(|(name, _)| name != "wall_time.txt")
        .collect()
}

fn determinism() -> Result<Outcome> {
    let tmp = tempfile::tempdir().expect("temp dir");
    let circuit_path = tmp.path().join("bell.json");
    std::fs::write(&circuit_path, bell_circuit()?.to_json()).expect("write circuit");
    let circuit_arg = circuit_path.display().to_string();
    let runs: Vec<(&str, Vec<&str>)> = vec![
        ("clifford-decay-1q", vec!["--lengths", "1,4,8", "--sequences", "3", "--shots", "500"]),
        ("clifford-decay-2q", vec!["--lengths", "1,3", "--sequences", "2", "--shots", "500"]),
        ("trajectory", vec!["--shots", "500"]),
        ("bell-parity", vec!["--lengths", "2,4", "--replicas", "20"]),
        ("cr-model", vec!["--t-gate", "2"]),
        ("vqe", vec!["--depth", "1", "--iterations", "10"]),
        ("zne-generic", vec!["--circuit", &circuit_arg, "--observable", "1.0 ZZ", "--shots", "2000", "--replicas", "20"]),
    ];
    let mut bad = Vec::new();
    for (name, flags) in &runs {
        let mut outputs = Vec::new();
        let out = tmp.path().join(name);
        for _ in 0..2 {
            let mut args = vec!["zne-lab".to_string(), name.to_string(), "--seed".into(), "5".into()];
            args.extend(flags.iter().map(|s| s.to_string()));
            args.extend(["--out".to_string(), out.display().to_string()]);
            let (mut so, mut se) = (Vec::new(), Vec::new());
            let code = main_with(args, &mut so, &mut se);
            if code != 0 {
                bad.push(format!("{name} exited {code}: {}", String::from_utf8_lossy(&se).trim()));
            }
            outputs.push(read_dir(&out));
        }
        if outputs[0].is_empty() || outputs[0] != outputs[1] {
            bad.push(format!("{name} differs between runs"));
        }
    }
    let pass = bad.is_empty();
    outcome(
        pass,
        if pass {
            format!("{} experiments byte-identical on rerun", runs.len())
        } else {
            bad.join("; ")
        },
    )
}

type Criterion = (&'static str, fn() -> Result<Outcome>, Duration);

fn main() {
    let criteria: [Criterion; 10] = [
        ("richardson coefficients", richardson, Duration::from_millis(1)),
        ("stretch equivalence", stretch_equivalence, Duration::from_secs(30)),
        ("error-order reduction", error_order, Duration::from_secs(120)),
        ("cross-resonance nonlinearity", cr_nonlinearity, Duration::from_secs(60)),
        ("bloch trajectory", trajectory, Duration::from_secs(30)),
        ("heisenberg ground energies", heisenberg, Duration::from_secs(300)),
        ("vqe mitigation benefit", vqe_mitigation, Duration::from_secs(1800)),
        ("bootstrap consistency", bootstrap_consistency, Duration::from_secs(120)),
        ("readout round trip", readout_round_trip, Duration::from_secs(60)),
        ("cli determinism", determinism, Duration::MAX),
    ];
    let mut failed = 0;
    for (i, (name, f, budget)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let result = f();
        let elapsed = t.elapsed();
        let (pass, detail) = match result {
            Ok(o) => (o.pass && elapsed < *budget, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failed += 1;
        }
        println!(
            "{} {:>2} {name}: {detail} [{:.2?}]",
            if pass { "PASS" } else { "FAIL" },
            i + 1,
            elapsed
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
