//! Entanglement-Hamiltonian tomography: Gibbs-state ansatz, measurement
//! cost functional and relative-entropy fits.
//!
//! Every ansatz operator commutes with the two boundary symmetries, so all
//! matrices here are handled as four sector blocks.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;

use crate::ansatz::{AnsatzOperatorSet, Provenance};
use crate::error::{parse_err, Error, Result};
use crate::lattice::{sector_indices, sector_of};
use crate::measurement::MeasurementRecord;
use crate::optimize::{central_difference, minimize_box, BoxOptions};
use crate::rng::{substream, Purpose};
use crate::state::{hermitian_eigen, DensityMatrix};

pub const BETA_BOUND: f64 = 50.0;

#[derive(Clone, Debug, PartialEq)]
pub struct EHParameters {
    pub beta: Vec<f64>,
    pub time_tag: f64,
}

impl EHParameters {
    pub fn zeros(n: usize) -> Self {
        EHParameters { beta: vec![0.0; n], time_tag: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(b) = self.beta.iter().find(|b| !(-BETA_BOUND..=BETA_BOUND).contains(*b)) {
            return Err(Error::InvalidArgument(format!(
                "beta {b} outside [-{BETA_BOUND}, {BETA_BOUND}]"
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GradientMode {
    /// Central differences with the given step (the reference method).
    CentralDifference,
    /// Closed-form derivative of the matrix exponential.
    Analytic,
}

#[derive(Clone, Debug)]
pub struct FitOptions {
    pub max_iter: usize,
    pub g_tol: f64,
    pub n_restarts: usize,
    pub seed: u64,
    pub gradient: GradientMode,
    pub fd_step: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            max_iter: 2000,
            g_tol: 1e-8,
            n_restarts: 4,
            seed: 0,
            gradient: GradientMode::CentralDifference,
            fd_step: 1e-6,
        }
    }
}

#[derive(Clone, Debug)]
pub struct TomographyResult {
    pub beta_star: EHParameters,
    pub rho_fit: DensityMatrix,
    pub cost_final: f64,
    pub converged: bool,
    pub iterations: usize,
    /// Final cost of every start, in start order (start 0 is beta = 0).
    pub start_costs: Vec<f64>,
}

/// Sector-blocked sparse representation of an operator set.
#[derive(Clone, Debug)]
pub struct BlockedAnsatz {
    pub n_qubits: usize,
    pub sectors: [Vec<usize>; 4],
    /// Per operator: (sector, row, col, value) with local block indices.
    entries: Vec<Vec<(usize, usize, usize, Complex64)>>,
}

impl BlockedAnsatz {
    pub fn new(ops: &AnsatzOperatorSet) -> Result<Self> {
        let m = ops.n_qubits;
        let sectors = sector_indices(m);
        let mut local = vec![0usize; 1 << m];
        for s in &sectors {
            for (a, &i) in s.iter().enumerate() {
                local[i] = a;
            }
        }
        let mut entries = Vec::with_capacity(ops.len());
        for op in &ops.operators {
            if op.string.n_qubits != m {
                return Err(Error::InvalidArgument("operator width mismatch".into()));
            }
            let mut e = Vec::with_capacity(1 << m);
            for col in 0..1usize << m {
                let (row, ph) = op.string.apply_to_index(col);
                let s = sector_of(col, m);
                if sector_of(row, m) != s {
                    return Err(Error::InvalidArgument(format!(
                        "operator {} mixes symmetry sectors",
                        op.string
                    )));
                }
                e.push((s - 1, local[row], local[col], ph));
            }
            entries.push(e);
        }
        Ok(BlockedAnsatz { n_qubits: m, sectors, entries })
    }

    pub fn n_ops(&self) -> usize {
        self.entries.len()
    }

    pub fn hamiltonian_blocks(&self, beta: &[f64]) -> Vec<DMatrix<Complex64>> {
        let mut blocks: Vec<DMatrix<Complex64>> =
            self.sectors.iter().map(|s| DMatrix::zeros(s.len(), s.len())).collect();
        for (b, e) in beta.iter().zip(&self.entries) {
            if *b == 0.0 {
                continue;
            }
            for &(s, r, c, v) in e {
                blocks[s][(r, c)] += v * *b;
            }
        }
        blocks
    }

    /// `Re Tr(K_s O_k)` summed over sectors, for every operator.
    pub fn traces(&self, k_blocks: &[DMatrix<Complex64>]) -> Vec<f64> {
        self.entries
            .iter()
            .map(|e| e.iter().map(|&(s, r, c, v)| (k_blocks[s][(c, r)] * v).re).sum())
            .collect()
    }

    pub fn assemble(&self, blocks: &[DMatrix<Complex64>]) -> DensityMatrix {
        let d = 1usize << self.n_qubits;
        let mut data = DMatrix::zeros(d, d);
        for (s, idx) in self.sectors.iter().enumerate() {
            for (a, &i) in idx.iter().enumerate() {
                for (b, &j) in idx.iter().enumerate() {
                    data[(i, j)] = blocks[s][(a, b)];
                }
            }
        }
        DensityMatrix { n_qubits: self.n_qubits, data }
    }

    pub fn split(&self, rho: &DensityMatrix) -> Vec<DMatrix<Complex64>> {
        self.sectors.iter().map(|idx| rho.block(idx)).collect()
    }
}

/// Normalised Gibbs state `exp(-H)/Z` of a blocked Hamiltonian.
#[derive(Clone, Debug)]
pub struct GibbsState {
    pub eigvals: Vec<DVector<f64>>,
    pub eigvecs: Vec<DMatrix<Complex64>>,
    /// Minimum eigenvalue, subtracted before exponentiating.
    pub shift: f64,
    /// `sum exp(-(lambda - shift))`.
    pub z: f64,
}

impl GibbsState {
    pub fn new(h_blocks: &[DMatrix<Complex64>]) -> Self {
        let (eigvals, eigvecs): (Vec<_>, Vec<_>) = h_blocks.iter().map(hermitian_eigen).unzip();
        let shift = eigvals.iter().flat_map(|w| w.iter().copied()).fold(f64::INFINITY, f64::min);
        let z = eigvals.iter().flat_map(|w| w.iter()).map(|l| (-(l - shift)).exp()).sum();
        GibbsState { eigvals, eigvecs, shift, z }
    }

    pub fn log_partition(&self) -> f64 {
        self.z.ln() - self.shift
    }

    pub fn weights(&self, s: usize) -> DVector<f64> {
        self.eigvals[s].map(|l| (-(l - self.shift)).exp() / self.z)
    }

    pub fn rho_blocks(&self) -> Vec<DMatrix<Complex64>> {
        (0..self.eigvals.len())
            .map(|s| {
                let v = &self.eigvecs[s];
                let w = self.weights(s);
                let mut vw = v.clone();
                for (c, mut col) in vw.column_iter_mut().enumerate() {
                    col *= Complex64::new(w[c], 0.0);
                }
                vw * v.adjoint()
            })
            .collect()
    }

    /// Gradient kernel: with `dcost = Re Tr(G d rho)`, returns blocks `K`
    /// such that `dcost = Re Tr(K dH)`.
    pub fn pullback(&self, g_blocks: &[DMatrix<Complex64>], rho_blocks: &[DMatrix<Complex64>]) -> Vec<DMatrix<Complex64>> {
        let tr_g_rho: f64 = g_blocks
            .iter()
            .zip(rho_blocks)
            .map(|(g, r)| (g * r).trace().re)
            .sum();
        (0..self.eigvals.len())
            .map(|s| {
                let v = &self.eigvecs[s];
                let lam = &self.eigvals[s];
                let mut gp = v.adjoint() * &g_blocks[s] * v;
                let n = lam.len();
                for a in 0..n {
                    for b in 0..n {
                        // divided difference of exp(-x), evaluated from the smaller eigenvalue
                        let (lo, hi) = if lam[a] <= lam[b] { (lam[a], lam[b]) } else { (lam[b], lam[a]) };
                        let base = (-(lo - self.shift)).exp();
                        let d = hi - lo;
                        let f = if d == 0.0 { -base } else { base * (-d).exp_m1() / d };
                        gp[(a, b)] *= f / self.z;
                    }
                }
                v * gp * v.adjoint() + &rho_blocks[s] * Complex64::new(tr_g_rho, 0.0)
            })
            .collect()
    }
}

pub fn ansatz_density_matrix(beta: &EHParameters, ops: &AnsatzOperatorSet) -> Result<DensityMatrix> {
    beta.validate()?;
    if beta.beta.len() != ops.len() {
        return Err(Error::InvalidArgument("beta length does not match operator count".into()));
    }
    let blocked = BlockedAnsatz::new(ops)?;
    let gibbs = GibbsState::new(&blocked.hamiltonian_blocks(&beta.beta));
    Ok(blocked.assemble(&gibbs.rho_blocks()))
}

/// Reference cost: mean over records of the squared probability residuals.
pub fn tomography_cost(beta: &EHParameters, records: &[MeasurementRecord], ops: &AnsatzOperatorSet) -> Result<f64> {
    if records.is_empty() {
        return Err(Error::InvalidArgument("no measurement records".into()));
    }
    let rho = ansatz_density_matrix(beta, ops)?;
    let mut total = 0.0;
    for r in records {
        if r.subsystem_size != ops.n_qubits {
            return Err(Error::InvalidArgument("record subsystem size differs from ansatz".into()));
        }
        let p = crate::measurement::exact_basis_probabilities(&rho, &r.basis)?;
        total += r.frequencies().iter().zip(&p).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
    }
    Ok(total / records.len() as f64)
}

#[derive(Clone, Copy, Debug)]
enum Param {
    Diag(usize, usize),
    Re(usize, usize, usize),
    Im(usize, usize, usize),
}

/// Linear map from sector-block entries of rho to Born probabilities of
/// every recorded basis, so the cost is `|P - M r|^2 / N`.
#[derive(Clone, Debug)]
pub struct MeasurementCost {
    blocked: BlockedAnsatz,
    params: Vec<Param>,
    design: DMatrix<f64>,
    target: DVector<f64>,
    n_bases: usize,
}

impl MeasurementCost {
    pub fn new(records: &[MeasurementRecord], ops: &AnsatzOperatorSet) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::InvalidArgument("no measurement records".into()));
        }
        let m = ops.n_qubits;
        let d = 1usize << m;
        let blocked = BlockedAnsatz::new(ops)?;
        let mut params = Vec::new();
        for (s, idx) in blocked.sectors.iter().enumerate() {
            for a in 0..idx.len() {
                params.push(Param::Diag(s, a));
            }
            for a in 0..idx.len() {
                for c in a + 1..idx.len() {
                    params.push(Param::Re(s, a, c));
                    params.push(Param::Im(s, a, c));
                }
            }
        }
        let mut design = DMatrix::zeros(records.len() * d, params.len());
        let mut target = DVector::zeros(records.len() * d);
        for (k, r) in records.iter().enumerate() {
            r.validate()?;
            if r.subsystem_size != m {
                return Err(Error::InvalidArgument("record subsystem size differs from ansatz".into()));
            }
            let v = r.basis.subsystem_unitary(m);
            for (b, f) in r.frequencies().into_iter().enumerate() {
                let row = k * d + b;
                target[row] = f;
                for (j, p) in params.iter().enumerate() {
                    let idx = &blocked.sectors;
                    design[(row, j)] = match *p {
                        Param::Diag(s, a) => v[(b, idx[s][a])].norm_sqr(),
                        Param::Re(s, a, c) => 2.0 * (v[(b, idx[s][a])] * v[(b, idx[s][c])].conj()).re,
                        Param::Im(s, a, c) => -2.0 * (v[(b, idx[s][a])] * v[(b, idx[s][c])].conj()).im,
                    };
                }
            }
        }
        Ok(MeasurementCost { blocked, params, design, target, n_bases: records.len() })
    }

    pub fn blocked(&self) -> &BlockedAnsatz {
        &self.blocked
    }

    fn vectorize(&self, blocks: &[DMatrix<Complex64>]) -> DVector<f64> {
        DVector::from_iterator(
            self.params.len(),
            self.params.iter().map(|p| match *p {
                Param::Diag(s, a) => blocks[s][(a, a)].re,
                Param::Re(s, a, c) => blocks[s][(a, c)].re,
                Param::Im(s, a, c) => blocks[s][(a, c)].im,
            }),
        )
    }

    fn residual(&self, rho_blocks: &[DMatrix<Complex64>]) -> DVector<f64> {
        &self.target - &self.design * self.vectorize(rho_blocks)
    }

    pub fn value(&self, beta: &[f64]) -> f64 {
        let gibbs = GibbsState::new(&self.blocked.hamiltonian_blocks(beta));
        self.residual(&gibbs.rho_blocks()).norm_squared() / self.n_bases as f64
    }

    /// Cost and its exact gradient with respect to beta.
    pub fn value_and_gradient(&self, beta: &[f64], grad: &mut [f64]) -> f64 {
        let gibbs = GibbsState::new(&self.blocked.hamiltonian_blocks(beta));
        let rho = gibbs.rho_blocks();
        let res = self.residual(&rho);
        let nb = self.n_bases as f64;
        let gr = self.design.tr_mul(&res) * (-2.0 / nb);
        let mut g_blocks: Vec<DMatrix<Complex64>> = rho.iter().map(|r| DMatrix::zeros(r.nrows(), r.ncols())).collect();
        for (p, &v) in self.params.iter().zip(gr.iter()) {
            match *p {
                Param::Diag(s, a) => g_blocks[s][(a, a)] += Complex64::new(v, 0.0),
                Param::Re(s, a, c) => {
                    g_blocks[s][(a, c)] += Complex64::new(v / 2.0, 0.0);
                    g_blocks[s][(c, a)] += Complex64::new(v / 2.0, 0.0);
                }
                Param::Im(s, a, c) => {
                    g_blocks[s][(a, c)] += Complex64::new(0.0, v / 2.0);
                    g_blocks[s][(c, a)] += Complex64::new(0.0, -v / 2.0);
                }
            }
        }
        let k = gibbs.pullback(&g_blocks, &rho);
        grad.copy_from_slice(&self.blocked.traces(&k));
        res.norm_squared() / nb
    }
}

/// Relative entropy `D(rho_e || rho(beta))` restricted to the support of rho_e.
#[derive(Clone, Debug)]
pub struct KlObjective {
    blocked: BlockedAnsatz,
    entropy: f64,
    expectations: Vec<f64>,
}

impl KlObjective {
    pub fn new(rho_exact: &DensityMatrix, ops: &AnsatzOperatorSet) -> Result<Self> {
        if rho_exact.n_qubits != ops.n_qubits {
            return Err(Error::InvalidArgument("density matrix width differs from ansatz".into()));
        }
        let blocked = BlockedAnsatz::new(ops)?;
        let blocks = blocked.split(rho_exact);
        let entropy = blocks
            .iter()
            .flat_map(|b| hermitian_eigen(b).0.iter().copied().collect::<Vec<_>>())
            .filter(|&p| p > 0.0)
            .map(|p| -p * p.ln())
            .sum();
        let expectations = blocked.traces(&blocks);
        Ok(KlObjective { blocked, entropy, expectations })
    }

    pub fn blocked(&self) -> &BlockedAnsatz {
        &self.blocked
    }

    pub fn value(&self, beta: &[f64]) -> f64 {
        let gibbs = GibbsState::new(&self.blocked.hamiltonian_blocks(beta));
        let lin: f64 = beta.iter().zip(&self.expectations).map(|(b, e)| b * e).sum();
        -self.entropy + lin + gibbs.log_partition()
    }

    pub fn value_and_gradient(&self, beta: &[f64], grad: &mut [f64]) -> f64 {
        let gibbs = GibbsState::new(&self.blocked.hamiltonian_blocks(beta));
        let model = self.blocked.traces(&gibbs.rho_blocks());
        for ((g, e), mo) in grad.iter_mut().zip(&self.expectations).zip(&model) {
            *g = e - mo;
        }
        let lin: f64 = beta.iter().zip(&self.expectations).map(|(b, e)| b * e).sum();
        -self.entropy + lin + gibbs.log_partition()
    }
}

fn multistart<V, A>(n: usize, value: V, analytic: A, opts: &FitOptions) -> (Vec<f64>, f64, bool, usize, Vec<f64>)
where
    V: Fn(&[f64]) -> f64,
    A: Fn(&[f64], &mut [f64]) -> f64,
{
    let box_opts = BoxOptions { max_iter: opts.max_iter, g_tol: opts.g_tol, ..Default::default() };
    let mut rng = substream(opts.seed, Purpose::Restarts, 0, 0, 0);
    let mut best: Option<(Vec<f64>, f64, bool, usize)> = None;
    let mut start_costs = Vec::new();
    for k in 0..=opts.n_restarts {
        let x0: Vec<f64> = if k == 0 {
            vec![0.0; n]
        } else {
            (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect()
        };
        let r = match opts.gradient {
            GradientMode::Analytic => minimize_box(|x: &[f64], g: &mut [f64]| analytic(x, g), &x0, -BETA_BOUND, BETA_BOUND, &box_opts),
            GradientMode::CentralDifference => {
                let h = opts.fd_step;
                minimize_box(
                    |x: &[f64], g: &mut [f64]| {
                        let mut f = |y: &[f64]| value(y);
                        central_difference(&mut f, x, h, -BETA_BOUND, BETA_BOUND, g);
                        value(x)
                    },
                    &x0,
                    -BETA_BOUND,
                    BETA_BOUND,
                    &box_opts,
                )
            }
        };
        start_costs.push(r.value);
        if r.aborted || !r.value.is_finite() {
            continue;
        }
        if best.as_ref().is_none_or(|b| r.value < b.1) {
            best = Some((r.x, r.value, r.converged, r.iterations));
        }
    }
    match best {
        Some((x, f, c, it)) => (x, f, c, it, start_costs),
        None => (vec![0.0; n], f64::NAN, false, 0, start_costs),
    }
}

fn finish(blocked: &BlockedAnsatz, fit: (Vec<f64>, f64, bool, usize, Vec<f64>)) -> TomographyResult {
    let (x, f, converged, iterations, start_costs) = fit;
    let gibbs = GibbsState::new(&blocked.hamiltonian_blocks(&x));
    TomographyResult {
        rho_fit: blocked.assemble(&gibbs.rho_blocks()),
        beta_star: EHParameters { beta: x, time_tag: 0.0 },
        cost_final: f,
        converged,
        iterations,
        start_costs,
    }
}

pub fn fit_eh_from_measurements(
    records: &[MeasurementRecord],
    ops: &AnsatzOperatorSet,
    opts: &FitOptions,
) -> Result<TomographyResult> {
    let cost = MeasurementCost::new(records, ops)?;
    let fit = multistart(
        ops.len(),
        |x| cost.value(x),
        |x, g| cost.value_and_gradient(x, g),
        opts,
    );
    Ok(finish(cost.blocked(), fit))
}

pub fn fit_eh_infinite(rho_exact: &DensityMatrix, ops: &AnsatzOperatorSet, opts: &FitOptions) -> Result<TomographyResult> {
    let kl = KlObjective::new(rho_exact, ops)?;
    let fit = multistart(ops.len(), |x| kl.value(x), |x, g| kl.value_and_gradient(x, g), opts);
    Ok(finish(kl.blocked(), fit))
}

impl TomographyResult {
    /// Operators with provenance, beta vector, cost and convergence flags.
    pub fn to_text(&self, ops: &AnsatzOperatorSet) -> String {
        let mut s = String::from("fit\n");
        s.push_str(&format!("time_tag {:?}\n", self.beta_star.time_tag));
        s.push_str(&format!("cost {:?}\n", self.cost_final));
        s.push_str(&format!("converged {}\n", self.converged));
        s.push_str(&format!("iterations {}\n", self.iterations));
        for (k, (op, b)) in ops.operators.iter().zip(&self.beta_star.beta).enumerate() {
            s.push_str(&format!("operator {k} {} {} {:?}\n", op.string, op.provenance.tag(), b));
        }
        s.push_str("end\n");
        s
    }

    /// Parse a fit file, returning the operator set and parameters.
    pub fn parse_text(text: &str) -> Result<(AnsatzOperatorSet, EHParameters, f64, bool)> {
        let mut ops = Vec::new();
        let mut beta = Vec::new();
        let (mut time_tag, mut cost, mut conv) = (0.0, f64::NAN, false);
        let mut width = 0;
        for (i, raw) in text.lines().enumerate() {
            let ln = i + 1;
            let tok: Vec<&str> = raw.split_whitespace().collect();
            let num = |k: usize| -> Result<f64> {
                tok.get(k).and_then(|v| v.parse().ok()).ok_or_else(|| parse_err(ln, "bad number"))
            };
            match tok.first().copied() {
                None | Some("fit") | Some("end") | Some("iterations") => {}
                Some("time_tag") => time_tag = num(1)?,
                Some("cost") => cost = num(1)?,
                Some("converged") => conv = tok.get(1) == Some(&"true"),
                Some("operator") => {
                    let label = tok.get(2).ok_or_else(|| parse_err(ln, "missing label"))?;
                    let string = crate::pauli::PauliString::parse(label).map_err(|e| parse_err(ln, e.to_string()))?;
                    width = string.n_qubits;
                    let provenance = tok
                        .get(3)
                        .and_then(|t| Provenance::parse(t))
                        .ok_or_else(|| parse_err(ln, "bad provenance"))?;
                    ops.push(crate::ansatz::AnsatzOperator { string, provenance });
                    beta.push(num(4)?);
                }
                Some(other) => return Err(parse_err(ln, format!("unknown key {other:?}"))),
            }
        }
        Ok((
            AnsatzOperatorSet { n_qubits: width, operators: ops },
            EHParameters { beta, time_tag },
            cost,
            conv,
        ))
    }
}
