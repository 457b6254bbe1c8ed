//! Noiseless, infinite-shot VQE on the four-site Heisenberg ring.
//!
//! Usage: vqe_exact [depth] [iterations] [entangler angle]

use std::time::Instant;

use zne_lab::vqe::{exact_ground, heisenberg_hamiltonian, run_vqe, AnsatzConfig, VqeConfig};
use zne_lab::NoiseModel;

fn main() -> zne_lab::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let depth: usize = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(2);
    let iters: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(1000);
    let angle: f64 = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(std::f64::consts::FRAC_PI_2);
    let h = heisenberg_hamiltonian(1.0, 1.0)?;
    let ground = exact_ground(&h)?;
    println!("exact ground energy {:.6} (gap {:.4})", ground.energy, ground.gap);
    for seed in 0..5 {
        let t = Instant::now();
        let mut ansatz = AnsatzConfig::ring(4, depth);
        ansatz.entangler_angle = angle;
        let mut cfg = VqeConfig::exact(ansatz);
        cfg.spsa.iterations = iters;
        cfg.seed = seed;
        let run = run_vqe(&h, &NoiseModel::noiseless(4), &cfg)?;
        println!(
            "seed {seed}: E = {:.5}  rel err {:.4}  ({:.1?})",
            run.final_estimate.value,
            (run.final_estimate.value - ground.energy).abs() / ground.energy.abs(),
            t.elapsed()
        );
    }
    Ok(())
}
