//! Compiles a Trotter circuit, reports the gate budget and the error
//! against exact evolution as the step count grows.

use z2lgt::circuit::{apply_circuit, build_trotter_circuit, GateKind};
use z2lgt::lattice::{build_dual_hamiltonian, BasisState, ModelConfig};
use z2lgt::pipeline::DEMO_STATE;
use z2lgt::state::{exact_evolve, prepare};

fn main() -> z2lgt::Result<()> {
    let config = ModelConfig::default();
    let h = build_dual_hamiltonian(&config)?;
    let t = 1.7 / config.g;
    let step = build_trotter_circuit(&h, t / 4.0, 1)?;
    let max_ms = step.gates.iter().filter(|g| g.kind == GateKind::Rxx).map(|g| g.angle.abs()).fold(0.0, f64::max);
    println!(
        "one step: {} gates, {} RXX (max |angle| {max_ms:.4}), {} RZ, {} RX, {} RY",
        step.gates.len(),
        step.count(GateKind::Rxx),
        step.count(GateKind::Rz),
        step.count(GateKind::Rx),
        step.count(GateKind::Ry)
    );
    let psi0 = prepare(&BasisState::parse(DEMO_STATE)?);
    let exact = exact_evolve(&psi0, &h, t)?;
    for n in [1, 2, 4, 8, 16, 32] {
        let psi = apply_circuit(&psi0, &build_trotter_circuit(&h, t, n)?)?;
        println!("{n:3} steps: error {:.4e}, fidelity {:.6}", psi.distance(&exact), psi.fidelity(&exact));
    }
    Ok(())
}
