//! Simulates randomized single-qubit-basis measurements of the evolved
//! state and compares shot frequencies with the Born probabilities.

use z2lgt::circuit::{apply_circuit, build_trotter_circuit};
use z2lgt::lattice::{build_dual_hamiltonian, BasisState, ModelConfig};
use z2lgt::measurement::{exact_basis_probabilities, records_to_text, sample_cue_basis, simulate_measurements};
use z2lgt::pipeline::DEMO_STATE;
use z2lgt::rng::{substream, Purpose};
use z2lgt::state::{partial_trace, prepare};

fn main() -> z2lgt::Result<()> {
    let config = ModelConfig::default();
    let m = config.subsystem_size();
    let h = build_dual_hamiltonian(&config)?;
    let psi = apply_circuit(&prepare(&BasisState::parse(DEMO_STATE)?), &build_trotter_circuit(&h, 1.02 / config.g, 4)?)?;
    let rho = partial_trace(&psi, m)?;
    let mut records = Vec::new();
    for k in 0..4u64 {
        let basis = sample_cue_basis(&mut substream(1, Purpose::Basis, 0, 0, k), config.n_qubits(), k);
        let rec = simulate_measurements(&psi, &basis, 750, m, &mut substream(1, Purpose::Shots, 0, 0, k))?;
        let p = exact_basis_probabilities(&rho, &basis)?;
        let tv = rec.frequencies().iter().zip(&p).map(|(a, b)| (a - b).abs()).sum::<f64>() / 2.0;
        println!("basis {k}: {} distinct outcomes in 750 shots, total variation to Born {tv:.3}", rec.counts.len());
        records.push(rec);
    }
    let text = records_to_text(&records);
    println!("record file is {} lines; first lines:", text.lines().count());
    for line in text.lines().take(8) {
        println!("  {line}");
    }
    Ok(())
}
