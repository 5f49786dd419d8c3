//! Builds the dual Hamiltonian and lists its terms, constraints and a
//! sampled physical initial state.

use z2lgt::lattice::{build_dual_hamiltonian, gauss_operators, sample_initial_state, symmetry_operators, ModelConfig};

fn main() -> z2lgt::Result<()> {
    let config = ModelConfig::default();
    let h = build_dual_hamiltonian(&config)?;
    println!("{} qubits, subsystem of {} qubits, {} terms", h.n_qubits, config.subsystem_size(), h.terms.len());
    for t in &h.terms {
        println!("  {:<22} {}", t.family.name(), t.term);
    }
    let (g1, g2) = gauss_operators(&config)?;
    let (s1, s2) = symmetry_operators(&config)?;
    println!("gauss laws: {g1} | {g2}");
    println!("subsystem symmetries: {s1} | {s2}");
    let b = sample_initial_state(&config, 7)?;
    println!("sampled state {b}, physical: {}", b.satisfies_gauss(&config)?);
    Ok(())
}
