use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use z2lgt::analysis::{entanglement_spectrum, entropy_decomposition, gap_ratios, DEFAULT_CUTOFF};
use z2lgt::ansatz::generate_ansatz;
use z2lgt::circuit::{apply_circuit, build_trotter_circuit};
use z2lgt::lattice::{build_dual_hamiltonian, gauss_operators, sample_initial_state, BasisState, ModelConfig};
use z2lgt::measurement::{basis_rotation_circuit, records_from_text, records_to_text, sample_cue_basis, simulate_measurements};
use z2lgt::pipeline::{preset, run_pipeline, PRESETS};
use z2lgt::rng::{substream, Purpose};
use z2lgt::state::{expectation, exact_evolve, partial_trace, prepare, DensityMatrix, StateVector};
use z2lgt::tomography::{ansatz_density_matrix, fit_eh_from_measurements, FitOptions, GradientMode, TomographyResult};
use z2lgt::{Error, Result};

#[derive(Parser)]
#[command(name = "z2lgt", version, about = "Z2 gauge theory dynamics and entanglement tomography")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct ModelArgs {
    #[arg(long, default_value_t = 10)]
    lx: usize,
    #[arg(long, default_value_t = 4)]
    la: usize,
    #[arg(long, default_value_t = 0.85)]
    g: f64,
}

impl ModelArgs {
    fn config(&self) -> Result<ModelConfig> {
        ModelConfig::new(self.lx, self.la, self.g)
    }
}

#[derive(Args, Clone)]
struct StateArgs {
    /// Initial basis state as a bit string (0 = up); random when omitted.
    #[arg(long)]
    state: Option<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Evolution time in units of g t.
    #[arg(long, default_value_t = 1.7)]
    gt: f64,
    /// Trotter steps; exact evolution when omitted.
    #[arg(long)]
    steps: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Gradient {
    Fd,
    Analytic,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve a basis state and write the subsystem density matrix.
    Evolve {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        state: StateArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulate randomized measurements of an evolved state.
    Measure {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        state: StateArgs,
        #[arg(long, default_value_t = 24)]
        bases: u64,
        #[arg(long, default_value_t = 750)]
        shots: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit the entanglement Hamiltonian to measurement records.
    Fit {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        records: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 4)]
        restarts: usize,
        #[arg(long, value_enum, default_value_t = Gradient::Fd)]
        gradient: Gradient,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Entanglement spectrum, gap ratios and entropies of a fit or density matrix.
    Analyze {
        /// A fit file or a density-matrix file.
        input: PathBuf,
        #[arg(long, default_value_t = DEFAULT_CUTOFF)]
        cutoff: f64,
    },
    /// Run a named preset end to end.
    Reproduce {
        /// observables, level-statistics, tomography or all
        preset: String,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long, default_value_t = 2024)]
        seed: u64,
    },
    /// Quick internal consistency checks.
    Selftest,
}

fn evolved(model: &ModelConfig, s: &StateArgs) -> Result<StateVector> {
    let b = match &s.state {
        Some(bits) => BasisState::parse(bits)?,
        None => sample_initial_state(model, s.seed)?,
    };
    if !b.satisfies_gauss(model)? {
        return Err(Error::InvalidArgument(format!("state {b} violates the Gauss law")));
    }
    let h = build_dual_hamiltonian(model)?;
    let t = s.gt / model.g;
    eprintln!("initial state {b}");
    match s.steps {
        Some(n) => apply_circuit(&prepare(&b), &build_trotter_circuit(&h, t, n)?),
        None => exact_evolve(&prepare(&b), &h, t),
    }
}

fn report(rho: &DensityMatrix, cutoff: f64) -> Result<()> {
    let spec = entanglement_spectrum(rho, cutoff)?;
    let ent = entropy_decomposition(rho)?;
    println!("S_vN {:.6}  S_sym {:.6}  S_dist {:.6}", ent.s_vn, ent.s_symmetry, ent.s_distillable);
    for (s, xi) in spec.sectors.iter().enumerate() {
        let r = gap_ratios(xi);
        let mean = if r.is_empty() { f64::NAN } else { r.iter().sum::<f64>() / r.len() as f64 };
        let low: Vec<String> = xi.iter().take(5).map(|x| format!("{x:.3}")).collect();
        println!(
            "sector {} weight {:.4} rank {:3} <r> {:.3} lowest [{}]",
            s + 1,
            ent.weights[s],
            xi.len(),
            mean,
            low.join(", ")
        );
    }
    Ok(())
}

fn selftest() -> Result<bool> {
    let model = ModelConfig::default();
    let h = build_dual_hamiltonian(&model)?;
    let (g1, g2) = gauss_operators(&model)?;
    let b = sample_initial_state(&model, 1)?;
    let t = 1.7 / model.g;
    let exact = exact_evolve(&prepare(&b), &h, t)?;
    let trot = apply_circuit(&prepare(&b), &build_trotter_circuit(&h, t, 16)?)?;
    let trot8 = apply_circuit(&prepare(&b), &build_trotter_circuit(&h, t, 8)?)?;
    let mut ok = true;
    let mut check = |name: &str, pass: bool, detail: String| {
        println!("{} {name}: {detail}", if pass { "ok  " } else { "FAIL" });
        ok &= pass;
    };
    let gv = [&exact, &trot]
        .iter()
        .map(|s| Ok((1.0 - expectation(s, &g1)?).abs().max((1.0 - expectation(s, &g2)?).abs())))
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    check("gauss", gv < 1e-10, format!("max violation {gv:.2e}"));
    check("norm", (trot.norm_sqr() - 1.0).abs() < 1e-12, format!("{:.3e}", trot.norm_sqr() - 1.0));
    let ratio = trot.distance(&exact) / trot8.distance(&exact);
    check("trotter", (0.4..=0.6).contains(&ratio), format!("error ratio 16/8 steps {ratio:.3}"));
    let rho = partial_trace(&exact, model.subsystem_size())?;
    let e = entropy_decomposition(&rho)?;
    let err = (e.s_vn - e.s_symmetry - e.s_distillable).abs();
    check("entropy split", err < 1e-10, format!("{err:.2e}"));
    // shot statistics against Born probabilities
    let basis = sample_cue_basis(&mut substream(1, Purpose::Basis, 0, 0, 0), model.n_qubits(), 0);
    let rec = simulate_measurements(&exact, &basis, 200_000, model.subsystem_size(), &mut substream(1, Purpose::Shots, 0, 0, 0))?;
    let p = z2lgt::measurement::exact_basis_probabilities(&rho, &basis)?;
    let tv = rec.frequencies().iter().zip(&p).map(|(a, b)| (a - b).abs()).sum::<f64>() / 2.0;
    check("shot statistics", tv < 0.02, format!("total variation {tv:.4}"));
    // infinite-shot marginal of the full register equals the reduced-state prediction
    let shift = model.n_qubits() - model.subsystem_size();
    let mut marg = vec![0.0; p.len()];
    for (k, q) in apply_circuit(&exact, &basis_rotation_circuit(&basis))?.probabilities().iter().enumerate() {
        marg[k >> shift] += q;
    }
    let diff = marg.iter().zip(&p).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    check("mode consistency", diff < 1e-12, format!("max marginal difference {diff:.2e}"));
    let ops = generate_ansatz(&model)?;
    check("ansatz", !ops.is_empty(), format!("{} operators", ops.len()));
    Ok(ok)
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Evolve { model, state, out } => {
            let model = model.config()?;
            let psi = evolved(&model, &state)?;
            let (g1, g2) = gauss_operators(&model)?;
            println!("gauss {:.12} {:.12}", expectation(&psi, &g1)?, expectation(&psi, &g2)?);
            let rho = partial_trace(&psi, model.subsystem_size())?;
            report(&rho, DEFAULT_CUTOFF)?;
            if let Some(out) = out {
                fs::write(out, rho.to_text())?;
            }
            Ok(0)
        }
        Command::Measure { model, state, bases, shots, out } => {
            let model = model.config()?;
            let psi = evolved(&model, &state)?;
            let records = (0..bases)
                .map(|k| {
                    let basis = sample_cue_basis(&mut substream(state.seed, Purpose::Basis, 0, 0, k), model.n_qubits(), k);
                    simulate_measurements(&psi, &basis, shots, model.subsystem_size(), &mut substream(state.seed, Purpose::Shots, 0, 0, k))
                })
                .collect::<Result<Vec<_>>>()?;
            fs::write(&out, records_to_text(&records))?;
            println!("wrote {} records to {}", records.len(), out.display());
            Ok(0)
        }
        Command::Fit { model, records, out, restarts, gradient, seed } => {
            let ops = generate_ansatz(&model.config()?)?;
            let records = records_from_text(&fs::read_to_string(records)?)?;
            let gradient = match gradient {
                Gradient::Fd => GradientMode::CentralDifference,
                Gradient::Analytic => GradientMode::Analytic,
            };
            let opts = FitOptions { n_restarts: restarts, gradient, seed, ..Default::default() };
            let fit = fit_eh_from_measurements(&records, &ops, &opts)?;
            fs::write(&out, fit.to_text(&ops))?;
            println!("cost {:.6e} converged {} iterations {}", fit.cost_final, fit.converged, fit.iterations);
            Ok(if fit.converged { 0 } else { 2 })
        }
        Command::Analyze { input, cutoff } => {
            let text = fs::read_to_string(input)?;
            let rho = if text.starts_with("fit") {
                let (ops, beta, _, _) = TomographyResult::parse_text(&text)?;
                ansatz_density_matrix(&beta, &ops)?
            } else {
                DensityMatrix::from_text(&text)?
            };
            report(&rho, cutoff)?;
            Ok(0)
        }
        Command::Reproduce { preset: name, out, seed } => {
            let names: Vec<&str> = if name == "all" { PRESETS.to_vec() } else { vec![name.as_str()] };
            let mut code = 0;
            for n in names {
                let config = preset(n, &out.join(n), seed)?;
                let manifest = run_pipeline(&config)?;
                println!("{n}: {} files in {}", manifest.files.len(), config.output_dir.display());
                for (k, v) in &manifest.summary {
                    println!("  {k} = {v:.4}");
                }
                for note in &manifest.notes {
                    println!("  note: {note}");
                }
                code = code.max(manifest.exit_code() as u8);
            }
            Ok(code)
        }
        Command::Selftest => Ok(if selftest()? { 0 } else { 1 }),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
