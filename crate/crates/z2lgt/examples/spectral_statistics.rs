//! Gap-ratio statistics and the spectral form factor of exact entanglement
//! spectra, against Poisson and random-matrix references.

use z2lgt::analysis::{
    default_theta_grid, entanglement_spectrum, esff, fit_ramp, gap_ratios, reference_distribution, RmtKind,
    DEFAULT_CUTOFF,
};
use z2lgt::lattice::{build_dual_hamiltonian, sample_initial_state, ModelConfig};
use z2lgt::state::{cached_propagator, partial_trace, prepare};

fn main() -> z2lgt::Result<()> {
    for k in [RmtKind::Poisson, RmtKind::Goe, RmtKind::Gue] {
        println!("{:<8} reference <r> = {:.4}", k.name(), reference_distribution(k).mean);
    }
    let config = ModelConfig::default();
    let prop = cached_propagator(&build_dual_hamiltonian(&config)?)?;
    let theta = default_theta_grid();
    for seed in 0..3 {
        let psi0 = prepare(&sample_initial_state(&config, seed)?);
        for gt in [0.6, 3.0, 8.0] {
            let rho = partial_trace(&prop.evolve(&psi0, gt / config.g)?, config.subsystem_size())?;
            let spec = entanglement_spectrum(&rho, DEFAULT_CUTOFF)?;
            let r: Vec<f64> = spec.sectors.iter().flat_map(|s| gap_ratios(s)).collect();
            let curves: Vec<Vec<f64>> = esff(&spec, &theta).into_iter().flatten().collect();
            let mean: Vec<f64> = (0..theta.len()).map(|i| curves.iter().map(|c| c[i]).sum::<f64>() / curves.len() as f64).collect();
            let ramp = fit_ramp(&theta, &mean, (2.0, 8.0))?;
            println!(
                "state {seed} gt {gt:4.1}: rank {:2}, <r> {:.3} from {} ratios, ramp slope {:.2}",
                spec.total_rank,
                r.iter().sum::<f64>() / r.len().max(1) as f64,
                r.len(),
                ramp.kappa
            );
        }
    }
    Ok(())
}
