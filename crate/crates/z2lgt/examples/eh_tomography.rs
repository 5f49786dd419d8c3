//! Entanglement-Hamiltonian tomography on a synthetic target.
//!
//! A random coupling vector defines rho(beta*); measurement records are drawn
//! from it and fit back, then the infinite-measurement fit is run on the same
//! target.

use std::time::Instant;

use rand::Rng;
use z2lgt::ansatz::generate_ansatz;
use z2lgt::lattice::ModelConfig;
use z2lgt::measurement::{sample_cue_basis, simulate_measurements_density};
use z2lgt::rng::{substream, Purpose};
use z2lgt::tomography::{ansatz_density_matrix, fit_eh_from_measurements, fit_eh_infinite, EHParameters, FitOptions, GradientMode};

fn main() -> z2lgt::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let n_bases: u64 = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(48);
    let n_shots: u64 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(100_000);
    let gradient = match args.get(3).map(String::as_str) {
        Some("fd") => GradientMode::CentralDifference,
        _ => GradientMode::Analytic,
    };

    let config = ModelConfig::default();
    let ops = generate_ansatz(&config)?;
    let mut rng = substream(11, Purpose::Synthetic, 0, 0, 0);
    let target = EHParameters { beta: (0..ops.len()).map(|_| rng.random_range(-1.0..1.0)).collect(), time_tag: 0.0 };
    let rho = ansatz_density_matrix(&target, &ops)?;
    println!("{} operators, target purity {:.4}", ops.len(), (&rho.data * &rho.data).trace().re);

    let t = Instant::now();
    let records = (0..n_bases)
        .map(|k| {
            let basis = sample_cue_basis(&mut substream(11, Purpose::Basis, 0, 0, k), ops.n_qubits, k);
            simulate_measurements_density(&rho, &basis, n_shots, &mut substream(11, Purpose::Shots, 0, 0, k))
        })
        .collect::<z2lgt::Result<Vec<_>>>()?;
    let opts = FitOptions { gradient, ..Default::default() };
    let fit = fit_eh_from_measurements(&records, &ops, &opts)?;
    println!(
        "measurement fit: {n_bases} bases x {n_shots} shots, cost {:.3e}, trace distance {:.4}, {} iterations, {:.1}s",
        fit.cost_final,
        fit.rho_fit.trace_distance(&rho),
        fit.iterations,
        t.elapsed().as_secs_f64()
    );

    let t = Instant::now();
    let kl = fit_eh_infinite(&rho, &ops, &opts)?;
    println!(
        "infinite fit: divergence {:.3e}, max |beta - beta*| {:.2e}, {:.1}s",
        kl.cost_final,
        kl.beta_star.beta.iter().zip(&target.beta).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max),
        t.elapsed().as_secs_f64()
    );
    Ok(())
}
