//! End-to-end runs: evolution, measurement simulation, tomography and
//! spectral statistics, written as plain-text artifacts plus a manifest.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::Rng;
use sha2::{Digest, Sha256};

use crate::analysis::{
    default_theta_grid, egrd, entanglement_spectrum, entropy_decomposition, esff, fit_ramp, gap_ratios,
    EntanglementSpectrum, EntropyDecomposition, Regime, RegimeWindows, DEFAULT_CUTOFF,
};
use crate::ansatz::{generate_ansatz, AnsatzOperatorSet};
use crate::circuit::{apply_circuit, build_trotter_circuit_ordered, Family, DEFAULT_ORDER};
use crate::error::{Error, Result};
use crate::lattice::{
    build_dual_hamiltonian, gauss_operators, sample_initial_state, BasisState, ModelConfig,
};
use crate::measurement::{records_to_text, sample_cue_basis, simulate_measurements};
use crate::pauli::PauliTerm;
use crate::rng::{substream, Purpose};
use crate::state::{cached_propagator, expectation, partial_trace, prepare, StateVector};
use crate::tomography::{fit_eh_from_measurements, fit_eh_infinite, FitOptions, GradientMode};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Default `g t` grid.
pub const DEFAULT_GT: [f64; 8] = [0.0, 0.34, 0.68, 1.02, 1.36, 1.70, 2.04, 2.38];

/// The demonstration state `↓↓↓↑↓↓↑↑↑↓↑↑`.
pub const DEMO_STATE: &str = "111011000100";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Modes {
    pub exact: bool,
    pub trotter: bool,
    pub tomography: bool,
    pub infinite: bool,
}

impl Default for Modes {
    fn default() -> Self {
        Modes { exact: true, trotter: true, tomography: false, infinite: false }
    }
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub n_initial_states: usize,
    /// Explicit initial states; when set they replace random sampling.
    pub initial_states: Option<Vec<BasisState>>,
    /// Evolution times in units of `g t`.
    pub gt_points: Vec<f64>,
    pub n_trotter_steps: usize,
    pub trotter_order: Vec<Family>,
    pub n_bases: usize,
    pub n_shots: u64,
    pub n_boots: usize,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub modes: Modes,
    pub fit: FitOptions,
    pub cutoff: f64,
    pub regimes: RegimeWindows,
    pub ramp_window: (f64, f64),
    pub plots: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            model: ModelConfig::default(),
            n_initial_states: 6,
            initial_states: None,
            gt_points: DEFAULT_GT.to_vec(),
            n_trotter_steps: 4,
            trotter_order: DEFAULT_ORDER.to_vec(),
            n_bases: 24,
            n_shots: 750,
            n_boots: 1000,
            seed: 2024,
            output_dir: PathBuf::from("out"),
            modes: Modes::default(),
            fit: FitOptions::default(),
            cutoff: DEFAULT_CUTOFF,
            regimes: RegimeWindows::default(),
            ramp_window: (2.0, 8.0),
            plots: true,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        if self.model.g == 0.0 {
            return Err(Error::Config("g must be nonzero to convert g t into t".into()));
        }
        let n_states = self.initial_states.as_ref().map_or(self.n_initial_states, Vec::len);
        if n_states == 0 || self.n_trotter_steps == 0 || self.n_bases == 0 || self.n_shots == 0 || self.n_boots == 0 {
            return Err(Error::Config("all counts must be positive".into()));
        }
        if self.gt_points.is_empty() || self.gt_points.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
            return Err(Error::Config("time points must be finite and nonnegative".into()));
        }
        if let Some(states) = &self.initial_states {
            for s in states {
                if s.n_qubits() != self.model.n_qubits() || !s.satisfies_gauss(&self.model)? {
                    return Err(Error::Config(format!("initial state {s} is not a physical state")));
                }
            }
        }
        if !self.modes.exact && !self.modes.trotter {
            return Err(Error::Config("enable exact or trotter evolution".into()));
        }
        Ok(())
    }

    pub fn snapshot(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "lx = {}", self.model.lx);
        let _ = writeln!(s, "la = {}", self.model.la);
        let _ = writeln!(s, "g = {:?}", self.model.g);
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "n_initial_states = {}", self.n_initial_states);
        if let Some(st) = &self.initial_states {
            let v: Vec<String> = st.iter().map(|b| b.to_string()).collect();
            let _ = writeln!(s, "initial_states = {}", v.join(","));
        }
        let gts: Vec<String> = self.gt_points.iter().map(|x| format!("{x:?}")).collect();
        let _ = writeln!(s, "gt_points = {}", gts.join(","));
        let _ = writeln!(s, "n_trotter_steps = {}", self.n_trotter_steps);
        let _ = writeln!(s, "trotter_order = {:?}", self.trotter_order);
        let _ = writeln!(s, "n_bases = {}", self.n_bases);
        let _ = writeln!(s, "n_shots = {}", self.n_shots);
        let _ = writeln!(s, "n_boots = {}", self.n_boots);
        let _ = writeln!(s, "modes = {:?}", self.modes);
        let _ = writeln!(
            s,
            "fit = max_iter {} g_tol {:e} restarts {} gradient {:?}",
            self.fit.max_iter, self.fit.g_tol, self.fit.n_restarts, self.fit.gradient
        );
        let _ = writeln!(s, "cutoff = {:e}", self.cutoff);
        let _ = writeln!(s, "regimes = {:?}", self.regimes);
        let _ = writeln!(s, "ramp_window = {:?}", self.ramp_window);
        s
    }
}

/// Named presets for the `reproduce` subcommand.
pub fn preset(name: &str, output_dir: &Path, seed: u64) -> Result<RunConfig> {
    let base = RunConfig { output_dir: output_dir.to_path_buf(), seed, ..Default::default() };
    match name {
        // Trotterised single-qubit observables of the demonstration state
        "observables" => Ok(RunConfig {
            n_initial_states: 1,
            initial_states: Some(vec![BasisState::parse(DEMO_STATE)?]),
            gt_points: (0..=14).map(|k| 0.17 * k as f64).collect(),
            ..base
        }),
        // Exact-evolution regime analysis: gap ratios and ESFF up to g t = 10
        "level-statistics" => Ok(RunConfig {
            gt_points: (0..=50).map(|k| 0.2 * k as f64).collect(),
            modes: Modes { exact: true, trotter: false, tomography: false, infinite: false },
            ..base
        }),
        // Randomized-measurement tomography on the default time grid
        "tomography" => Ok(RunConfig {
            n_initial_states: 1,
            initial_states: Some(vec![BasisState::parse(DEMO_STATE)?]),
            modes: Modes { exact: true, trotter: true, tomography: true, infinite: true },
            fit: FitOptions { gradient: GradientMode::Analytic, seed, ..Default::default() },
            ..base
        }),
        other => Err(Error::Config(format!(
            "unknown preset {other:?} (expected observables, level-statistics or tomography)"
        ))),
    }
}

pub const PRESETS: [&str; 3] = ["observables", "level-statistics", "tomography"];

#[derive(Clone, Debug, Default)]
pub struct RunManifest {
    pub config_snapshot: String,
    pub seeds: Vec<(String, u64)>,
    pub version: String,
    /// Relative path and SHA-256 of every artifact.
    pub files: Vec<(String, String)>,
    pub timings: Vec<(String, f64)>,
    pub notes: Vec<String>,
    pub summary: BTreeMap<String, f64>,
    pub partial: bool,
}

impl RunManifest {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# run manifest");
        let _ = writeln!(s, "version {}", self.version);
        let _ = writeln!(s, "status {}", if self.partial { "partial" } else { "complete" });
        let _ = writeln!(s, "[config]");
        s.push_str(&self.config_snapshot);
        let _ = writeln!(s, "[seeds]");
        for (k, v) in &self.seeds {
            let _ = writeln!(s, "{k} {v}");
        }
        let _ = writeln!(s, "[files]");
        for (p, h) in &self.files {
            let _ = writeln!(s, "{h}  {p}");
        }
        let _ = writeln!(s, "[timings]");
        for (k, v) in &self.timings {
            let _ = writeln!(s, "{k} {v:.3}s");
        }
        let _ = writeln!(s, "[summary]");
        for (k, v) in &self.summary {
            let _ = writeln!(s, "{k} {v:.6}");
        }
        let _ = writeln!(s, "[notes]");
        for n in &self.notes {
            let _ = writeln!(s, "{n}");
        }
        s
    }

    pub fn exit_code(&self) -> i32 {
        if self.partial {
            2
        } else {
            0
        }
    }
}

/// Bootstrap mean and standard deviation of the resampled mean.
pub fn bootstrap<R: Rng + ?Sized>(samples: &[f64], n_boots: usize, rng: &mut R) -> Result<(f64, f64)> {
    if samples.is_empty() || n_boots == 0 {
        return Err(Error::InvalidArgument("bootstrap needs samples and n_boots > 0".into()));
    }
    let n = samples.len();
    let means: Vec<f64> = (0..n_boots)
        .map(|_| (0..n).map(|_| samples[rng.random_range(0..n)]).sum::<f64>() / n as f64)
        .collect();
    let mu = means.iter().sum::<f64>() / n_boots as f64;
    let var = means.iter().map(|m| (m - mu).powi(2)).sum::<f64>() / n_boots as f64;
    Ok((mu, var.sqrt()))
}

pub fn bootstrap_seeded(samples: &[f64], n_boots: usize, seed: u64) -> Result<(f64, f64)> {
    bootstrap(samples, n_boots, &mut substream(seed, Purpose::Bootstrap, 0, 0, 0))
}

fn f(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.10e}")
    } else {
        "nan".to_string()
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Analysis of one density matrix at one (state, time) point.
#[derive(Clone, Debug)]
pub struct Sample {
    pub spectrum: EntanglementSpectrum,
    pub entropy: EntropyDecomposition,
    pub ratios: Vec<f64>,
    pub z: Option<Vec<f64>>,
    pub gauss: Option<(f64, f64)>,
}

/// All samples of one data source, indexed `[state][time]`.
#[derive(Clone, Debug)]
pub struct SourceData {
    pub name: &'static str,
    pub samples: Vec<Vec<Sample>>,
}

struct Writer {
    dir: PathBuf,
    files: Vec<PathBuf>,
}

impl Writer {
    fn write(&mut self, rel: &str, contents: &str) -> Result<()> {
        let path = self.dir.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(&path, contents)?;
        self.files.push(PathBuf::from(rel));
        Ok(())
    }
}

fn analyse(
    rho: &crate::state::DensityMatrix,
    cutoff: f64,
    state: Option<(&StateVector, &[PauliTerm; 2])>,
) -> Result<Sample> {
    let spectrum = entanglement_spectrum(rho, cutoff)?;
    let ratios = spectrum.sectors.iter().flat_map(|xi| gap_ratios(xi)).collect();
    let entropy = entropy_decomposition(rho)?;
    let (z, gauss) = match state {
        Some((psi, gs)) => {
            let z = (0..psi.n_qubits)
                .map(|q| expectation(psi, &PauliTerm::z_string(&[q])))
                .collect::<Result<Vec<_>>>()?;
            (Some(z), Some((expectation(psi, &gs[0])?, expectation(psi, &gs[1])?)))
        }
        None => (None, None),
    };
    Ok(Sample { spectrum, entropy, ratios, z, gauss })
}

pub fn initial_states(config: &RunConfig) -> Result<Vec<BasisState>> {
    match &config.initial_states {
        Some(s) => Ok(s.clone()),
        None => (0..config.n_initial_states)
            .map(|i| {
                let s: u64 = substream(config.seed, Purpose::InitialState, i as u64, 0, 0).random();
                sample_initial_state(&config.model, s)
            })
            .collect(),
    }
}

/// Output of one (initial state, time point) work item.
struct ItemOutput {
    samples: Vec<Sample>,
    files: Vec<(String, String)>,
    notes: Vec<String>,
    partial: bool,
}

struct Shared<'a> {
    config: &'a RunConfig,
    h: crate::lattice::HamiltonianSpec,
    gauss: [PauliTerm; 2],
    ops: Option<AnsatzOperatorSet>,
    propagator: Option<std::sync::Arc<crate::state::Propagator>>,
}

fn run_item(sh: &Shared, i: usize, j: usize, b: &BasisState) -> Result<ItemOutput> {
    let config = sh.config;
    let model = &config.model;
    let m = model.subsystem_size();
    let gt = config.gt_points[j];
    let t = gt / model.g;
    let psi0 = prepare(b);
    let mut out = ItemOutput { samples: Vec::new(), files: Vec::new(), notes: Vec::new(), partial: false };
    let exact = match &sh.propagator {
        Some(p) => Some(p.evolve(&psi0, t)?),
        None => None,
    };
    let trotter = if config.modes.trotter {
        let c = build_trotter_circuit_ordered(&sh.h, t, config.n_trotter_steps, &config.trotter_order)?;
        Some(apply_circuit(&psi0, &c)?)
    } else {
        None
    };
    for psi in [&exact, &trotter].into_iter().flatten() {
        let rho = partial_trace(psi, m)?;
        out.samples.push(analyse(&rho, config.cutoff, Some((psi, &sh.gauss)))?);
    }
    let Some(ops) = &sh.ops else {
        return Ok(out);
    };
    // fits use the hardware-like Trotter state when available
    let target = trotter.as_ref().or(exact.as_ref()).expect("validated");
    let opts = FitOptions { seed: config.fit.seed ^ ((i as u64) << 32 | j as u64), ..config.fit.clone() };
    if config.modes.tomography {
        let records = (0..config.n_bases)
            .map(|k| {
                let (si, sj, sk) = (i as u64, j as u64, k as u64);
                let basis = sample_cue_basis(&mut substream(config.seed, Purpose::Basis, si, sj, sk), model.n_qubits(), sk);
                simulate_measurements(target, &basis, config.n_shots, m, &mut substream(config.seed, Purpose::Shots, si, sj, sk))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut fit = fit_eh_from_measurements(&records, ops, &opts)?;
        fit.beta_star.time_tag = gt;
        if !fit.converged {
            out.partial = true;
            out.notes.push(format!("tomography fit not converged: state {i} gt {gt}"));
        }
        out.files.push((format!("records/state{i}_t{j}.txt"), records_to_text(&records)));
        out.files.push((format!("fits/tomography_state{i}_t{j}.txt"), fit.to_text(ops)));
        out.samples.push(analyse(&fit.rho_fit, 0.0, None)?);
    }
    if config.modes.infinite {
        let mut fit = fit_eh_infinite(&partial_trace(target, m)?, ops, &opts)?;
        fit.beta_star.time_tag = gt;
        if !fit.converged {
            out.partial = true;
            out.notes.push(format!("infinite-measurement fit not converged: state {i} gt {gt}"));
        }
        out.files.push((format!("fits/infinite_state{i}_t{j}.txt"), fit.to_text(ops)));
        out.samples.push(analyse(&fit.rho_fit, 0.0, None)?);
    }
    Ok(out)
}

/// Runs every configured mode and returns the per-source samples. Work
/// items run on all available cores; results are merged in item order so
/// the output does not depend on scheduling.
pub fn simulate(config: &RunConfig, writer: Option<&mut dyn FnMut(&str, &str) -> Result<()>>, notes: &mut Vec<String>) -> Result<(Vec<SourceData>, bool)> {
    config.validate()?;
    let mut sink = writer;
    let model = &config.model;
    let h = build_dual_hamiltonian(model)?;
    let (g1, g2) = gauss_operators(model)?;
    let states = initial_states(config)?;
    let shared = Shared {
        config,
        ops: if config.modes.tomography || config.modes.infinite { Some(generate_ansatz(model)?) } else { None },
        propagator: if config.modes.exact { Some(cached_propagator(&h)?) } else { None },
        gauss: [g1, g2],
        h,
    };

    let mut names: Vec<&'static str> = Vec::new();
    for (on, name) in [
        (config.modes.exact, "exact"),
        (config.modes.trotter, "trotter"),
        (config.modes.tomography, "tomography"),
        (config.modes.infinite, "infinite"),
    ] {
        if on {
            names.push(name);
        }
    }

    let mut init_text = String::from("state,bits\n");
    for (i, s) in states.iter().enumerate() {
        let _ = writeln!(init_text, "{i},{s}");
    }
    if let Some(w) = sink.as_mut() {
        w("initial_states.csv", &init_text)?;
    }

    let n_times = config.gt_points.len();
    let n_items = states.len() * n_times;
    let next = std::sync::atomic::AtomicUsize::new(0);
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).min(n_items);
    let mut results: Vec<Option<Result<ItemOutput>>> = (0..n_items).map(|_| None).collect();
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|_| {
                scope.spawn(|| {
                    let mut done = Vec::new();
                    loop {
                        let k = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                        if k >= n_items {
                            break;
                        }
                        let (i, j) = (k / n_times, k % n_times);
                        done.push((k, run_item(&shared, i, j, &states[i])));
                    }
                    done
                })
            })
            .collect();
        for h in handles {
            for (k, r) in h.join().expect("worker panicked") {
                results[k] = Some(r);
            }
        }
    });

    let mut data: Vec<SourceData> =
        names.iter().map(|&name| SourceData { name, samples: vec![Vec::new(); states.len()] }).collect();
    let mut partial = false;
    for (k, r) in results.into_iter().enumerate() {
        let item = r.expect("every item ran")?;
        for (col, sample) in item.samples.into_iter().enumerate() {
            data[col].samples[k / n_times].push(sample);
        }
        if let Some(w) = sink.as_mut() {
            for (rel, contents) in &item.files {
                w(rel, contents)?;
            }
        }
        notes.extend(item.notes);
        partial |= item.partial;
    }
    Ok((data, partial))
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn std(v: &[f64]) -> f64 {
    let mu = mean(v);
    (v.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / v.len() as f64).sqrt()
}

/// Summary CSVs for one source; returns headline numbers.
fn write_source(
    config: &RunConfig,
    src: &SourceData,
    w: &mut Writer,
    notes: &mut Vec<String>,
) -> Result<BTreeMap<String, f64>> {
    let name = src.name;
    let gts = &config.gt_points;
    let n_states = src.samples.len();
    let mut summary = BTreeMap::new();
    let boot = |tag: u64, v: &[f64]| bootstrap(v, config.n_boots, &mut substream(config.seed, Purpose::Bootstrap, tag, 0, 0));

    // entropies and ranks
    let mut ent = String::from("gt,S_vN,S_sym,S_dist\n");
    let mut rank = String::from("gt,rank_mean\n");
    let mut worst_identity: f64 = 0.0;
    for (j, &gt) in gts.iter().enumerate() {
        let col: Vec<&Sample> = (0..n_states).map(|i| &src.samples[i][j]).collect();
        let e = |k: fn(&EntropyDecomposition) -> f64| mean(&col.iter().map(|s| k(&s.entropy)).collect::<Vec<_>>());
        for s in &col {
            worst_identity = worst_identity.max((s.entropy.s_vn - s.entropy.s_symmetry - s.entropy.s_distillable).abs());
        }
        let _ = writeln!(ent, "{},{},{},{}", f(gt), f(e(|d| d.s_vn)), f(e(|d| d.s_symmetry)), f(e(|d| d.s_distillable)));
        let r = mean(&col.iter().map(|s| s.spectrum.total_rank as f64).collect::<Vec<_>>());
        let _ = writeln!(rank, "{},{}", f(gt), f(r));
    }
    summary.insert(format!("{name}.entropy_identity_max_error"), worst_identity);
    w.write(&format!("entropy_{name}.csv"), &ent)?;
    w.write(&format!("rank_{name}.csv"), &rank)?;

    // gap ratio trace
    let mut trace = String::from("gt,r_mean,r_std,n_ratios\n");
    for (j, &gt) in gts.iter().enumerate() {
        let pool: Vec<f64> = (0..n_states).flat_map(|i| src.samples[i][j].ratios.iter().copied()).collect();
        let (mu, sd) = if pool.is_empty() { (f64::NAN, f64::NAN) } else { boot(1_000 + j as u64, &pool)? };
        let _ = writeln!(trace, "{},{},{},{}", f(gt), f(mu), f(sd), pool.len());
    }
    w.write(&format!("gap_ratio_{name}.csv"), &trace)?;

    // regime pools
    let theta = default_theta_grid();
    let mut egrd_csv = String::from("regime,bin_center,density\n");
    for regime in [Regime::I, Regime::II, Regime::III] {
        let times: Vec<usize> =
            (0..gts.len()).filter(|&j| config.regimes.classify(gts[j]) == Some(regime)).collect();
        if times.is_empty() {
            continue;
        }
        let pool: Vec<f64> = times
            .iter()
            .flat_map(|&j| (0..n_states).flat_map(move |i| src.samples[i][j].ratios.clone()))
            .collect();
        if let Ok(h) = egrd(&pool) {
            for (c, d) in h.bin_centers.iter().zip(&h.density) {
                let _ = writeln!(egrd_csv, "{},{},{}", regime.name(), f(*c), f(*d));
            }
            summary.insert(format!("{name}.regime_{}.r_mean", regime.name()), h.mean);
            summary.insert(format!("{name}.regime_{}.n_ratios", regime.name()), h.count as f64);
        }
        let mut curves = Vec::new();
        let mut empty = 0usize;
        for &j in &times {
            for i in 0..n_states {
                for c in esff(&src.samples[i][j].spectrum, &theta) {
                    match c {
                        Some(c) => curves.push(c),
                        None => empty += 1,
                    }
                }
            }
        }
        if empty > 0 {
            notes.push(format!("{name} regime {}: {empty} empty sector spectra excluded from ESFF average", regime.name()));
        }
        if curves.is_empty() {
            continue;
        }
        let mut csv = String::from("theta,F_mean,F_std\n");
        let mut fmean = Vec::with_capacity(theta.len());
        for (k, t) in theta.iter().enumerate() {
            let vals: Vec<f64> = curves.iter().map(|c| c[k]).collect();
            fmean.push(mean(&vals));
            let _ = writeln!(csv, "{},{},{}", f(*t), f(mean(&vals)), f(std(&vals)));
        }
        w.write(&format!("esff_{name}_regime{}.csv", regime.name()), &csv)?;
        let plateau: Vec<f64> = theta.iter().zip(&fmean).filter(|(t, _)| **t >= 1e2).map(|(_, v)| *v).collect();
        summary.insert(format!("{name}.regime_{}.esff_plateau", regime.name()), mean(&plateau));
        if regime == Regime::III {
            let fit = fit_ramp(&theta, &fmean, config.ramp_window)?;
            if !fit.monotone {
                notes.push(format!("{name} regime III: ESFF not monotone inside the ramp window"));
            }
            summary.insert(format!("{name}.kappa"), fit.kappa);
            summary.insert(format!("{name}.kappa_uncertainty"), fit.uncertainty);
        }
    }
    if egrd_csv.lines().count() > 1 {
        w.write(&format!("egrd_{name}.csv"), &egrd_csv)?;
    } else {
        notes.push(format!("{name}: no gap ratios, EGRD not written"));
    }

    // state observables
    if src.samples[0][0].z.is_some() {
        let mut obs = String::from("gt,qubit,Z_mean,Z_std\n");
        let mut gauss = String::from("gt,G1_mean,G2_mean,max_violation\n");
        for (j, &gt) in gts.iter().enumerate() {
            let zs: Vec<&Vec<f64>> = (0..n_states).filter_map(|i| src.samples[i][j].z.as_ref()).collect();
            for q in 0..zs[0].len() {
                let v: Vec<f64> = zs.iter().map(|z| z[q]).collect();
                let (mu, sd) = boot(100_000 + (j * 64 + q) as u64, &v)?;
                let _ = writeln!(obs, "{},{q},{},{}", f(gt), f(mu), f(sd));
            }
            let gs: Vec<(f64, f64)> = (0..n_states).filter_map(|i| src.samples[i][j].gauss).collect();
            let viol = gs.iter().map(|(a, b)| (1.0 - a).abs().max((1.0 - b).abs())).fold(0.0, f64::max);
            let g1 = mean(&gs.iter().map(|g| g.0).collect::<Vec<_>>());
            let g2 = mean(&gs.iter().map(|g| g.1).collect::<Vec<_>>());
            let _ = writeln!(gauss, "{},{},{},{}", f(gt), f(g1), f(g2), f(viol));
            let prev = summary.get(&format!("{name}.gauss_max_violation")).copied().unwrap_or(0.0);
            summary.insert(format!("{name}.gauss_max_violation"), prev.max(viol));
        }
        w.write(&format!("observables_{name}.csv"), &obs)?;
        w.write(&format!("gauss_{name}.csv"), &gauss)?;
    }

    // raw spectra
    let mut spec = String::from("state,gt,sector,level,xi\n");
    for (i, row) in src.samples.iter().enumerate() {
        for (j, s) in row.iter().enumerate() {
            for (sec, xi) in s.spectrum.sectors.iter().enumerate() {
                for (l, x) in xi.iter().enumerate() {
                    let _ = writeln!(spec, "{i},{},{},{l},{}", f(gts[j]), sec + 1, f(*x));
                }
            }
        }
    }
    w.write(&format!("spectra_{name}.csv"), &spec)?;
    Ok(summary)
}

pub fn run_pipeline(config: &RunConfig) -> Result<RunManifest> {
    let start = Instant::now();
    config.validate()?;
    fs::create_dir_all(&config.output_dir)?;
    let mut w = Writer { dir: config.output_dir.clone(), files: Vec::new() };
    let mut notes = Vec::new();
    let mut timings = Vec::new();

    let t0 = Instant::now();
    let mut buffered: Vec<(String, String)> = Vec::new();
    let (data, partial) = {
        let mut sink = |rel: &str, contents: &str| -> Result<()> {
            buffered.push((rel.to_string(), contents.to_string()));
            Ok(())
        };
        simulate(config, Some(&mut sink), &mut notes)?
    };
    for (rel, contents) in &buffered {
        w.write(rel, contents)?;
    }
    timings.push(("simulate".to_string(), t0.elapsed().as_secs_f64()));

    let t1 = Instant::now();
    let mut summary = BTreeMap::new();
    for src in &data {
        summary.extend(write_source(config, src, &mut w, &mut notes)?);
    }
    let mut sum_csv = String::from("key,value\n");
    for (k, v) in &summary {
        let _ = writeln!(sum_csv, "{k},{}", f(*v));
    }
    w.write("summary.csv", &sum_csv)?;
    timings.push(("analyse".to_string(), t1.elapsed().as_secs_f64()));

    if config.plots {
        let t2 = Instant::now();
        let report = crate::plots::emit_plots(&config.output_dir)?;
        for p in report.written {
            w.files.push(p);
        }
        notes.extend(report.notes);
        timings.push(("plots".to_string(), t2.elapsed().as_secs_f64()));
    }
    timings.push(("total".to_string(), start.elapsed().as_secs_f64()));

    let mut files = Vec::new();
    for rel in &w.files {
        let bytes = fs::read(config.output_dir.join(rel))?;
        files.push((rel.to_string_lossy().into_owned(), sha256_hex(&bytes)));
    }
    let manifest = RunManifest {
        config_snapshot: config.snapshot(),
        seeds: vec![("run".to_string(), config.seed), ("fit".to_string(), config.fit.seed)],
        version: VERSION.to_string(),
        files,
        timings,
        notes,
        summary,
        partial,
    };
    fs::write(config.output_dir.join("manifest.txt"), manifest.to_text())?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bootstrap_constant_and_reproducible() {
        let (m, s) = bootstrap_seeded(&[2.0; 5], 100, 1).unwrap();
        assert_eq!((m, s), (2.0, 0.0));
        let a = bootstrap_seeded(&[0.0, 1.0, 3.0], 200, 9).unwrap();
        let b = bootstrap_seeded(&[0.0, 1.0, 3.0], 200, 9).unwrap();
        assert_eq!(a, b);
        assert!(bootstrap_seeded(&[], 10, 0).is_err());
    }

    #[test]
    fn bootstrap_two_point_spread() {
        // resampled mean of {0, 1} has std sqrt(p(1-p)/n) = 0.5/sqrt(2)
        let (m, s) = bootstrap_seeded(&[0.0, 1.0], 20_000, 3).unwrap();
        assert!((m - 0.5).abs() < 0.01);
        assert!((s - 0.5 / 2f64.sqrt()).abs() < 0.01, "{s}");
    }

    #[test]
    fn presets_resolve() {
        for p in PRESETS {
            preset(p, Path::new("x"), 1).unwrap().validate().unwrap();
        }
        assert!(preset("nope", Path::new("x"), 1).is_err());
    }
}
