//! Runs a compiled native circuit under T1/T2 relaxation and reports how
//! far the output drifts from the ideal state.

use zne_lab::density::apply_unitary;
use zne_lab::gates::{compile, GateTiming, NativeGate};
use zne_lab::pulse::Simulator;
use zne_lab::{DensityMatrix, NoiseModel};

fn main() -> zne_lab::Result<()> {
    let gates = [
        NativeGate::X90 { qubit: 0 },
        NativeGate::Rz { qubit: 1, angle: 0.7 },
        NativeGate::X90 { qubit: 1 },
        NativeGate::zx90(0, 1),
    ];
    let circuit = compile(2, &gates, &GateTiming::default())?;
    println!("{} pulses, {:.0} ns", circuit.pulses().count(), circuit.total_duration());

    let rho0 = DensityMatrix::ground(2)?;
    let ideal = apply_unitary(&rho0, &circuit.ideal_unitary())?;
    for t1 in [10_000.0, 50_000.0, 200_000.0] {
        let rho = Simulator::new(&NoiseModel::uniform(2, t1, 2.0 * t1), 2)?.run(&circuit, &rho0)?;
        println!(
            "T1 = {:>6.0} ns: max |rho - ideal| = {:.2e}, purity {:.5}",
            t1,
            rho.max_abs_diff(&ideal),
            rho.purity()
        );
    }
    Ok(())
}
