//! Stretching every pulse by c at fixed rotation angle gives the same
//! state as running the original schedule with rates multiplied by c.

use zne_lab::gates::{compile, GateTiming, NativeGate};
use zne_lab::pulse::Simulator;
use zne_lab::{DensityMatrix, NoiseModel};

fn main() -> zne_lab::Result<()> {
    let gates = [
        NativeGate::X90 { qubit: 0 },
        NativeGate::Zx { control: 0, target: 1, angle: 1.1 },
        NativeGate::Rz { qubit: 0, angle: -0.4 },
        NativeGate::X90 { qubit: 1 },
    ];
    let circuit = compile(2, &gates, &GateTiming::default())?;
    let noise = NoiseModel::uniform(2, 5_000.0, 8_000.0);
    let rho0 = DensityMatrix::ground(2)?;
    for c in [1.5, 2.0, 4.0] {
        let stretched = Simulator::new(&noise, 2)?.run(&circuit.stretch(c)?, &rho0)?;
        let amplified = Simulator::new(&noise.amplified(c), 2)?.run(&circuit, &rho0)?;
        println!("c = {c}: max difference {:.2e}", stretched.max_abs_diff(&amplified));
    }
    Ok(())
}
