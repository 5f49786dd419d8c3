//! Independent closed-form and brute-force checks.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;

use z2lgt::ansatz::generate_ansatz;
use z2lgt::circuit::{apply_circuit, build_trotter_circuit, circuit_unitary, phase_distance};
use z2lgt::lattice::{build_dual_hamiltonian, sample_initial_state, symmetry_operators, BasisState, ModelConfig};
use z2lgt::pauli::Axis;
use z2lgt::measurement::{
    basis_rotation_circuit, exact_basis_probabilities, records_from_text, records_to_text, sample_cue_basis,
    simulate_measurements, MeasurementRecord, RandomBasis,
};
use z2lgt::analysis::entropy_decomposition;
use z2lgt::rng::{substream, Purpose};
use z2lgt::state::{cached_propagator, energy, expectation, partial_trace, prepare, Propagator};
use z2lgt::tomography::{
    ansatz_density_matrix, tomography_cost, EHParameters, KlObjective, MeasurementCost, TomographyResult,
};

#[test]
fn gauss_sector_matches_periodic_ising_ring() {
    // in the all-plus Gauss sector the dual model is a transverse-field ring
    let model = ModelConfig::default();
    let g = model.g;
    let h = build_dual_hamiltonian(&model).unwrap();
    let prop = Propagator::auto(&h).unwrap();
    let plus = prepare(&BasisState::parse("000000000000").unwrap());
    let mut dual = prop.eigenvalues_for(&plus).unwrap();
    dual.sort_by(f64::total_cmp);

    let l = 10;
    let d = 1usize << l;
    let z = |k: usize, q: usize| if (k >> (l - 1 - q)) & 1 == 0 { 1.0 } else { -1.0 };
    let mut ring = DMatrix::<f64>::zeros(d, d);
    for k in 0..d {
        for q in 0..l {
            ring[(k ^ (1 << (l - 1 - q)), k)] += 1.0;
            ring[(k, k)] += g * z(k, q) * z(k, (q + 1) % l) + 2.0 * g * z(k, q);
        }
    }
    let mut ev: Vec<f64> = ring.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    assert_eq!(ev.len(), dual.len());
    let diff = ev.iter().zip(&dual).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(diff < 1e-9, "max eigenvalue difference {diff}");
}

#[test]
fn exact_evolution_conserves_energy_and_norm() {
    let model = ModelConfig::default();
    let h = build_dual_hamiltonian(&model).unwrap();
    let prop = cached_propagator(&h).unwrap();
    let psi0 = prepare(&sample_initial_state(&model, 5).unwrap());
    let e0 = energy(&h, &psi0).unwrap();
    for gt in [0.3, 2.0, 9.7] {
        let psi = prop.evolve(&psi0, gt / model.g).unwrap();
        assert!((psi.norm_sqr() - 1.0).abs() < 1e-12);
        assert!((energy(&h, &psi).unwrap() - e0).abs() < 1e-9);
    }
    // evolution is a group: U(a) U(b) = U(a + b)
    let ab = prop.evolve(&prop.evolve(&psi0, 0.7).unwrap(), 1.1).unwrap();
    let direct = prop.evolve(&psi0, 1.8).unwrap();
    assert!(ab.distance(&direct) < 1e-11);
}

fn pauli_exp(p: &DMatrix<Complex64>, angle: f64) -> DMatrix<Complex64> {
    // exp(-i angle P) = cos I - i sin P
    let d = p.nrows();
    DMatrix::<Complex64>::identity(d, d) * Complex64::new(angle.cos(), 0.0) - p * Complex64::new(0.0, angle.sin())
}

#[test]
fn trotter_step_is_ordered_product_of_term_exponentials() {
    let model = ModelConfig::new(4, 2, 0.85).unwrap();
    let h = build_dual_hamiltonian(&model).unwrap();
    let n = h.n_qubits;
    for dt in [0.13, 0.9, 2.2] {
        let circuit = build_trotter_circuit(&h, dt, 1).unwrap();
        let u = circuit_unitary(&circuit).unwrap();
        let mut expected = DMatrix::<Complex64>::identity(1 << n, 1 << n);
        // Z, ZZ, X, XX applied in that order
        for (axis, weight) in [(Axis::Z, 1), (Axis::Z, 2), (Axis::X, 1), (Axis::X, 2)] {
            let matches = |f: &std::collections::BTreeMap<usize, Axis>| f.len() == weight && f.values().all(|&a| a == axis);
            for t in h.terms.iter().filter(|t| matches(&t.term.factors)) {
                let p = t.term.string(n).unwrap().to_matrix();
                expected = pauli_exp(&p, t.term.coefficient * dt) * expected;
            }
        }
        let d = phase_distance(&u, &expected);
        assert!(d < 1e-12, "dt {dt}: {d}");
    }
}

#[test]
fn trotter_error_falls_with_step_count() {
    let model = ModelConfig::default();
    let h = build_dual_hamiltonian(&model).unwrap();
    let psi0 = prepare(&sample_initial_state(&model, 2).unwrap());
    let t = 1.0 / model.g;
    let exact = cached_propagator(&h).unwrap().evolve(&psi0, t).unwrap();
    let errs: Vec<f64> = [2, 4, 8, 16, 32]
        .iter()
        .map(|&n| apply_circuit(&psi0, &build_trotter_circuit(&h, t, n).unwrap()).unwrap().distance(&exact))
        .collect();
    for w in errs.windows(2) {
        let r = w[1] / w[0];
        assert!(r > 0.35 && r < 0.65, "{errs:?}");
    }
}

#[test]
fn haar_single_qubit_moments() {
    let mut rng = substream(21, Purpose::Synthetic, 0, 0, 0);
    let n = 40_000;
    let (mut m1, mut fp) = (0.0, 0.0);
    let mut prev: Option<[[Complex64; 2]; 2]> = None;
    for k in 0..n {
        let u = sample_cue_basis(&mut rng, 1, k).unitary(0);
        m1 += u[0][0].norm_sqr();
        if let Some(v) = prev {
            // |Tr(V^dag U)|^4 averages to 2 for Haar pairs
            let tr = v[0][0].conj() * u[0][0] + v[1][0].conj() * u[1][0] + v[0][1].conj() * u[0][1] + v[1][1].conj() * u[1][1];
            fp += tr.norm_sqr().powi(2);
        }
        prev = Some(u);
    }
    m1 /= n as f64;
    fp /= (n - 1) as f64;
    assert!((m1 - 0.5).abs() < 0.01, "{m1}");
    assert!((fp - 2.0).abs() < 0.08, "{fp}");
}

#[test]
fn subsystem_marginals_agree_with_reduced_state() {
    let model = ModelConfig::default();
    let h = build_dual_hamiltonian(&model).unwrap();
    let m = model.subsystem_size();
    let psi = cached_propagator(&h).unwrap().evolve(&prepare(&sample_initial_state(&model, 9).unwrap()), 1.3).unwrap();
    let rho = partial_trace(&psi, m).unwrap();
    for k in 0..5 {
        let basis = sample_cue_basis(&mut substream(3, Purpose::Basis, 0, 0, k), model.n_qubits(), k);
        let full = apply_circuit(&psi, &basis_rotation_circuit(&basis)).unwrap().probabilities();
        let mut marg = vec![0.0; 1 << m];
        for (i, p) in full.iter().enumerate() {
            marg[i >> (model.n_qubits() - m)] += p;
        }
        let reduced = exact_basis_probabilities(&rho, &basis).unwrap();
        let diff = marg.iter().zip(&reduced).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(diff < 1e-12, "{diff}");
        // and sampled frequencies converge to them
        let rec = simulate_measurements(&psi, &basis, 400_000, m, &mut substream(3, Purpose::Shots, 0, 0, k)).unwrap();
        let tv: f64 = rec.frequencies().iter().zip(&reduced).map(|(a, b)| (a - b).abs()).sum::<f64>() / 2.0;
        assert!(tv < 0.015, "{tv}");
    }
}

#[test]
fn sector_weights_are_symmetry_projector_expectations() {
    let model = ModelConfig::default();
    let h = build_dual_hamiltonian(&model).unwrap();
    let (s1, s2) = symmetry_operators(&model).unwrap();
    let psi = cached_propagator(&h).unwrap().evolve(&prepare(&sample_initial_state(&model, 4).unwrap()), 2.0).unwrap();
    let (a, b) = (expectation(&psi, &s1).unwrap(), expectation(&psi, &s2).unwrap());
    let both = s1.string(12).unwrap().mul(&s2.string(12).unwrap()).1;
    let c = psi.pauli_expectation(&both).re;
    let e = entropy_decomposition(&partial_trace(&psi, model.subsystem_size()).unwrap()).unwrap();
    // sector s = 1 + 2 s1 + s2 with s1, s2 the parity bits
    let expected = [(1.0 + a + b + c) / 4.0, (1.0 + a - b - c) / 4.0, (1.0 - a + b - c) / 4.0, (1.0 - a - b + c) / 4.0];
    for (w, x) in e.weights.iter().zip(expected) {
        assert!((w - x).abs() < 1e-12, "{:?} vs {expected:?}", e.weights);
    }
}

fn single_outcome_record(m: usize, outcome: u64, basis_id: u64) -> MeasurementRecord {
    MeasurementRecord {
        basis: RandomBasis::identity(m, basis_id),
        subsystem_size: m,
        n_shots: 100,
        counts: [(outcome, 100)].into_iter().collect(),
    }
}

#[test]
fn cost_of_maximally_mixed_against_pure_outcome() {
    let model = ModelConfig::default();
    let ops = generate_ansatz(&model).unwrap();
    let m = ops.n_qubits;
    let records: Vec<_> = (0..3).map(|k| single_outcome_record(m, 5 * k + 1, k)).collect();
    let d = (1u64 << m) as f64;
    let closed = (1.0 - 1.0 / d).powi(2) + (d - 1.0) / (d * d);
    let zero = EHParameters::zeros(ops.len());
    let reference = tomography_cost(&zero, &records, &ops).unwrap();
    let fast = MeasurementCost::new(&records, &ops).unwrap().value(&zero.beta);
    assert!((reference - closed).abs() < 1e-14, "{reference} vs {closed}");
    assert!((fast - closed).abs() < 1e-12, "{fast} vs {closed}");
}

#[test]
fn fast_cost_matches_reference_cost() {
    let model = ModelConfig::default();
    let ops = generate_ansatz(&model).unwrap();
    let mut rng = substream(5, Purpose::Synthetic, 0, 0, 0);
    let beta = EHParameters { beta: (0..ops.len()).map(|_| rng.random_range(-0.8..0.8)).collect(), time_tag: 0.0 };
    let rho = ansatz_density_matrix(&beta, &ops).unwrap();
    let records: Vec<_> = (0..4)
        .map(|k| {
            let b = sample_cue_basis(&mut substream(5, Purpose::Basis, 0, 0, k), ops.n_qubits, k);
            z2lgt::measurement::simulate_measurements_density(&rho, &b, 500, &mut substream(5, Purpose::Shots, 0, 0, k)).unwrap()
        })
        .collect();
    let probe = EHParameters { beta: beta.beta.iter().map(|b| b * 0.7 + 0.05).collect(), time_tag: 0.0 };
    let reference = tomography_cost(&probe, &records, &ops).unwrap();
    let fast = MeasurementCost::new(&records, &ops).unwrap().value(&probe.beta);
    assert!((reference - fast).abs() < 1e-12 * reference.max(1.0), "{reference} vs {fast}");
}

fn check_gradient(value: impl Fn(&[f64]) -> f64, analytic: impl Fn(&[f64], &mut [f64]) -> f64, x: &[f64]) {
    let mut g = vec![0.0; x.len()];
    let f = analytic(x, &mut g);
    assert!((f - value(x)).abs() < 1e-12 * f.abs().max(1.0));
    let h = 1e-5;
    let scale = g.iter().map(|v| v.abs()).fold(0.0, f64::max);
    for i in 0..x.len() {
        let mut xp = x.to_vec();
        xp[i] += h;
        let fp = value(&xp);
        xp[i] -= 2.0 * h;
        let fm = value(&xp);
        let fd = (fp - fm) / (2.0 * h);
        assert!((fd - g[i]).abs() <= 1e-5 * scale.max(1e-3), "component {i}: fd {fd} analytic {}", g[i]);
    }
}

#[test]
fn analytic_gradients_match_finite_differences() {
    let model = ModelConfig::default();
    let ops = generate_ansatz(&model).unwrap();
    let mut rng = substream(6, Purpose::Synthetic, 0, 0, 0);
    let beta: Vec<f64> = (0..ops.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
    let h = build_dual_hamiltonian(&model).unwrap();
    let psi = cached_propagator(&h).unwrap().evolve(&prepare(&sample_initial_state(&model, 6).unwrap()), 1.2).unwrap();
    let rho = partial_trace(&psi, model.subsystem_size()).unwrap();
    let records: Vec<_> = (0..6)
        .map(|k| {
            let b = sample_cue_basis(&mut substream(6, Purpose::Basis, 0, 0, k), model.n_qubits(), k);
            simulate_measurements(&psi, &b, 750, model.subsystem_size(), &mut substream(6, Purpose::Shots, 0, 0, k)).unwrap()
        })
        .collect();
    let cost = MeasurementCost::new(&records, &ops).unwrap();
    check_gradient(|x| cost.value(x), |x, g| cost.value_and_gradient(x, g), &beta);
    let kl = KlObjective::new(&rho, &ops).unwrap();
    check_gradient(|x| kl.value(x), |x, g| kl.value_and_gradient(x, g), &beta);
}

#[test]
fn kl_objective_vanishes_on_realizable_target() {
    let ops = generate_ansatz(&ModelConfig::default()).unwrap();
    let mut rng = substream(7, Purpose::Synthetic, 0, 0, 0);
    let beta: Vec<f64> = (0..ops.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
    let rho = ansatz_density_matrix(&EHParameters { beta: beta.clone(), time_tag: 0.0 }, &ops).unwrap();
    let kl = KlObjective::new(&rho, &ops).unwrap();
    let mut g = vec![0.0; beta.len()];
    let v = kl.value_and_gradient(&beta, &mut g);
    assert!(v.abs() < 1e-10, "{v}");
    assert!(g.iter().all(|x| x.abs() < 1e-10));
    assert!(kl.value(&vec![0.0; beta.len()]) > 1e-3);
}

#[test]
fn fit_file_roundtrip_rebuilds_density() {
    let ops = generate_ansatz(&ModelConfig::default()).unwrap();
    let mut rng = substream(8, Purpose::Synthetic, 0, 0, 0);
    let beta = EHParameters { beta: (0..ops.len()).map(|_| rng.random_range(-1.0..1.0)).collect(), time_tag: 0.68 };
    let rho = ansatz_density_matrix(&beta, &ops).unwrap();
    let result = TomographyResult {
        beta_star: beta.clone(),
        rho_fit: rho.clone(),
        cost_final: 1.5e-3,
        converged: true,
        iterations: 12,
        start_costs: vec![],
    };
    let (ops2, beta2, cost, conv) = TomographyResult::parse_text(&result.to_text(&ops)).unwrap();
    assert_eq!(ops2, ops);
    assert_eq!(beta2, beta);
    assert!(conv && cost == 1.5e-3);
    assert!(ansatz_density_matrix(&beta2, &ops2).unwrap().trace_distance(&rho) < 1e-14);
}

#[test]
fn records_roundtrip_through_text() {
    let model = ModelConfig::default();
    let psi = prepare(&sample_initial_state(&model, 1).unwrap());
    let records: Vec<_> = (0..3)
        .map(|k| {
            let b = sample_cue_basis(&mut substream(1, Purpose::Basis, 0, 0, k), model.n_qubits(), k);
            simulate_measurements(&psi, &b, 50, model.subsystem_size(), &mut substream(1, Purpose::Shots, 0, 0, k)).unwrap()
        })
        .collect();
    let back = records_from_text(&records_to_text(&records)).unwrap();
    assert_eq!(back, records);
}

#[test]
fn maximally_mixed_density_is_the_zero_coupling_state() {
    let ops = generate_ansatz(&ModelConfig::default()).unwrap();
    let rho = ansatz_density_matrix(&EHParameters::zeros(ops.len()), &ops).unwrap();
    let d = rho.dim();
    let off = rho.data.iter().enumerate().filter(|(k, _)| k % (d + 1) != 0).map(|(_, z)| z.norm()).fold(0.0, f64::max);
    assert!(off < 1e-15);
    assert!(rho.data.diagonal().iter().all(|z| (*z - Complex64::new(1.0 / d as f64, 0.0)).norm() < 1e-15));
}
