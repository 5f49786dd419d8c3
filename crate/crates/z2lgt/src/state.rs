//! Dense state vectors, exact evolution and reduced density matrices.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lattice::{gauss_operators, sector_of, BasisState, HamiltonianSpec, ModelConfig};
use crate::pauli::{PauliString, PauliTerm};

const C0: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    pub n_qubits: usize,
    pub amplitudes: Vec<Complex64>,
}

impl StateVector {
    pub fn zero(n_qubits: usize) -> Self {
        let mut amplitudes = vec![C0; 1 << n_qubits];
        amplitudes[0] = Complex64::new(1.0, 0.0);
        StateVector {
            n_qubits,
            amplitudes,
        }
    }

    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        let d = amplitudes.len();
        if !d.is_power_of_two() || d < 2 {
            return Err(Error::InvalidArgument(format!(
                "state length {d} is not a power of two"
            )));
        }
        Ok(StateVector {
            n_qubits: d.trailing_zeros() as usize,
            amplitudes,
        })
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn inner(&self, other: &StateVector) -> Complex64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn fidelity(&self, other: &StateVector) -> f64 {
        self.inner(other).norm_sqr()
    }

    pub fn distance(&self, other: &StateVector) -> f64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    /// `<psi| P |psi>` for an unweighted Pauli string.
    pub fn pauli_expectation(&self, p: &PauliString) -> Complex64 {
        let mut acc = C0;
        for (k, a) in self.amplitudes.iter().enumerate() {
            if *a == C0 {
                continue;
            }
            let (r, ph) = p.apply_to_index(k);
            acc += self.amplitudes[r].conj() * ph * a;
        }
        acc
    }
}

pub fn prepare(basis_state: &BasisState) -> StateVector {
    let n = basis_state.n_qubits();
    let mut amplitudes = vec![C0; 1 << n];
    amplitudes[basis_state.index()] = Complex64::new(1.0, 0.0);
    StateVector {
        n_qubits: n,
        amplitudes,
    }
}

/// `coefficient * <psi|P|psi>`; panics if the result is not real.
pub fn expectation(state: &StateVector, term: &PauliTerm) -> Result<f64> {
    let p = term.string(state.n_qubits)?;
    let v = state.pauli_expectation(&p) * term.coefficient;
    assert!(
        v.im.abs() <= 1e-8,
        "non-Hermitian expectation: imaginary part {}",
        v.im
    );
    Ok(v.re)
}

/// `H|psi>` for a Hamiltonian given as Pauli terms.
pub fn apply_hamiltonian(h: &HamiltonianSpec, state: &StateVector) -> Result<StateVector> {
    let strings = h.strings()?;
    let mut out = vec![C0; state.dim()];
    for (c, p) in strings {
        for (k, a) in state.amplitudes.iter().enumerate() {
            let (r, ph) = p.apply_to_index(k);
            out[r] += ph * a * c;
        }
    }
    Ok(StateVector {
        n_qubits: state.n_qubits,
        amplitudes: out,
    })
}

pub fn energy(h: &HamiltonianSpec, state: &StateVector) -> Result<f64> {
    Ok(state.inner(&apply_hamiltonian(h, state)?).re)
}

/// Reduced density matrix of a contiguous block of high-order qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    pub n_qubits: usize,
    pub data: DMatrix<Complex64>,
}

impl DensityMatrix {
    pub fn new(data: DMatrix<Complex64>) -> Result<Self> {
        let d = data.nrows();
        if d != data.ncols() || !d.is_power_of_two() || d < 2 {
            return Err(Error::InvalidArgument(format!(
                "density matrix must be square with power-of-two dimension, got {}x{}",
                data.nrows(),
                data.ncols()
            )));
        }
        Ok(DensityMatrix {
            n_qubits: d.trailing_zeros() as usize,
            data,
        })
    }

    pub fn maximally_mixed(n_qubits: usize) -> Self {
        let d = 1usize << n_qubits;
        DensityMatrix {
            n_qubits,
            data: DMatrix::from_diagonal_element(d, d, Complex64::new(1.0 / d as f64, 0.0)),
        }
    }

    pub fn pure(state: &StateVector) -> Self {
        let v = DVector::from_column_slice(&state.amplitudes);
        DensityMatrix {
            n_qubits: state.n_qubits,
            data: &v * v.adjoint(),
        }
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn trace(&self) -> Complex64 {
        self.data.trace()
    }

    pub fn hermiticity_error(&self) -> f64 {
        (&self.data - self.data.adjoint()).camax()
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = hermitian_eigen(&self.data).0.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    /// Largest element magnitude outside the four symmetry blocks.
    pub fn off_block_norm(&self) -> f64 {
        let m = self.n_qubits;
        let mut worst = 0.0f64;
        for i in 0..self.dim() {
            for j in 0..self.dim() {
                if sector_of(i, m) != sector_of(j, m) {
                    worst = worst.max(self.data[(i, j)].norm());
                }
            }
        }
        worst
    }

    /// Block restricted to the given indices.
    pub fn block(&self, indices: &[usize]) -> DMatrix<Complex64> {
        DMatrix::from_fn(indices.len(), indices.len(), |a, b| {
            self.data[(indices[a], indices[b])]
        })
    }

    pub fn trace_distance(&self, other: &DensityMatrix) -> f64 {
        let diff = &self.data - &other.data;
        0.5 * hermitian_eigen(&diff).0.iter().map(|x| x.abs()).sum::<f64>()
    }

    pub fn check(&self) -> Result<()> {
        let herm = self.hermiticity_error();
        let tr = self.trace();
        let min = self.eigenvalues().first().copied().unwrap_or(0.0);
        if herm > 1e-12 || (tr.re - 1.0).abs() > 1e-10 || tr.im.abs() > 1e-10 || min < -1e-10 {
            return Err(Error::InvalidArgument(format!(
                "invalid density matrix: hermiticity {herm:e}, trace {tr}, min eigenvalue {min:e}"
            )));
        }
        Ok(())
    }

    /// Plain-text dense matrix: header line then `re im` pairs row by row.
    pub fn to_text(&self) -> String {
        let d = self.dim();
        let mut s = format!("density_matrix {d}\n");
        for i in 0..d {
            let row: Vec<String> = (0..d)
                .map(|j| {
                    let z = self.data[(i, j)];
                    format!("{:?} {:?}", z.re, z.im)
                })
                .collect();
            s.push_str(&row.join(" "));
            s.push('\n');
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        use crate::error::parse_err;
        let mut lines = text.lines().enumerate();
        let (_, head) = lines.next().ok_or_else(|| parse_err(1, "empty file"))?;
        let d: usize = head
            .strip_prefix("density_matrix ")
            .and_then(|v| v.trim().parse().ok())
            .ok_or_else(|| parse_err(1, "expected `density_matrix <dim>`"))?;
        let mut data = DMatrix::zeros(d, d);
        for i in 0..d {
            let (ln, row) = lines
                .next()
                .ok_or_else(|| parse_err(i + 2, "missing matrix row"))?;
            let vals: Vec<f64> = row
                .split_whitespace()
                .map(|v| v.parse().map_err(|_| parse_err(ln + 1, "bad number")))
                .collect::<Result<_>>()?;
            if vals.len() != 2 * d {
                return Err(parse_err(ln + 1, "wrong row length"));
            }
            for j in 0..d {
                data[(i, j)] = Complex64::new(vals[2 * j], vals[2 * j + 1]);
            }
        }
        DensityMatrix::new(data)
    }
}

/// Eigen-decomposition of a Hermitian matrix.
pub fn hermitian_eigen(m: &DMatrix<Complex64>) -> (DVector<f64>, DMatrix<Complex64>) {
    let e = SymmetricEigen::new(m.clone());
    (e.eigenvalues, e.eigenvectors)
}

pub fn partial_trace(state: &StateVector, keep_count: usize) -> Result<DensityMatrix> {
    let n = state.n_qubits;
    if keep_count == 0 || keep_count > n {
        return Err(Error::InvalidArgument(format!(
            "cannot keep {keep_count} of {n} qubits"
        )));
    }
    let da = 1usize << keep_count;
    let db = 1usize << (n - keep_count);
    // psi viewed as a da x db matrix M, rho = M M^dagger
    let m = DMatrix::from_row_slice(da, db, &state.amplitudes);
    Ok(DensityMatrix {
        n_qubits: keep_count,
        data: &m * m.adjoint(),
    })
}

/// One Gauss-sector block of the Hamiltonian with its lazily computed
/// spectral decomposition.
#[derive(Debug)]
struct Block {
    indices: Vec<usize>,
    matrix: DMatrix<f64>,
    eigen: OnceLock<std::result::Result<(DVector<f64>, DMatrix<f64>), String>>,
}

impl Block {
    fn eigen(&self) -> Result<&(DVector<f64>, DMatrix<f64>)> {
        self.eigen
            .get_or_init(|| {
                let e = SymmetricEigen::try_new(self.matrix.clone(), f64::EPSILON, 0)
                    .ok_or_else(|| format!("no convergence for block of size {}", self.indices.len()))?;
                if e.eigenvalues.iter().any(|v| !v.is_finite()) {
                    return Err("non-finite eigenvalue".to_string());
                }
                Ok((e.eigenvalues, e.eigenvectors))
            })
            .as_ref()
            .map_err(|e| Error::Eigen(e.clone()))
    }
}

/// Exact propagator `exp(-iHt)` for a real Hamiltonian, block-diagonalised
/// by the conserved Z-strings that commute with every term.
#[derive(Debug)]
pub struct Propagator {
    pub n_qubits: usize,
    blocks: Vec<Block>,
}

impl Propagator {
    pub fn new(h: &HamiltonianSpec, conserved: &[PauliString]) -> Result<Self> {
        let strings = h.strings()?;
        if strings.iter().any(|(_, p)| p.y_count() % 2 == 1) {
            return Err(Error::InvalidArgument(
                "exact propagator requires a real Hamiltonian".into(),
            ));
        }
        let conserved: Vec<PauliString> = conserved
            .iter()
            .copied()
            .filter(|c| c.x == 0 && strings.iter().all(|(_, p)| p.commutes_with(c)))
            .collect();
        let n = h.n_qubits;
        let d = 1usize << n;
        let label = |k: usize| -> usize {
            conserved
                .iter()
                .enumerate()
                .map(|(i, c)| (((k as u64 & c.z).count_ones() as usize) & 1) << i)
                .sum()
        };
        let mut groups: Vec<Vec<usize>> = vec![Vec::new(); 1 << conserved.len()];
        let mut pos = vec![0usize; d];
        for k in 0..d {
            let b = label(k);
            pos[k] = groups[b].len();
            groups[b].push(k);
        }
        let blocks = groups
            .into_iter()
            .map(|indices| {
                let dim = indices.len();
                let mut matrix = DMatrix::zeros(dim, dim);
                for (col, &k) in indices.iter().enumerate() {
                    for (c, p) in &strings {
                        let (r, ph) = p.apply_to_index(k);
                        matrix[(pos[r], col)] += c * ph.re;
                    }
                }
                Block {
                    indices,
                    matrix,
                    eigen: OnceLock::new(),
                }
            })
            .collect();
        Ok(Propagator { n_qubits: n, blocks })
    }

    /// Propagator blocked by the model's Gauss operators.
    pub fn for_model(h: &HamiltonianSpec, config: &ModelConfig) -> Result<Self> {
        let (g1, g2) = gauss_operators(config)?;
        Propagator::new(h, &[g1.string(h.n_qubits)?, g2.string(h.n_qubits)?])
    }

    /// Propagator for an arbitrary Hamiltonian, blocked by every Z-string of
    /// weight three or less on consecutive (cyclic) triples that commutes.
    pub fn auto(h: &HamiltonianSpec) -> Result<Self> {
        let n = h.n_qubits;
        let mut cands = Vec::new();
        if n >= 3 {
            for q in 0..n {
                let mut p = PauliString::identity(n);
                for k in 0..3 {
                    p = p.with((q + k) % n, crate::pauli::Axis::Z);
                }
                cands.push(p);
            }
        }
        // greedy independent subset
        let strings = h.strings()?;
        let mut chosen: Vec<PauliString> = Vec::new();
        for c in cands {
            if !strings.iter().all(|(_, p)| p.commutes_with(&c)) {
                continue;
            }
            let independent = (1u32..(1 << chosen.len())).all(|mask| {
                let z = chosen
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| mask & (1 << i) != 0)
                    .fold(0u64, |acc, (_, p)| acc ^ p.z);
                z != c.z
            });
            if independent && chosen.len() < 8 {
                chosen.push(c);
            }
        }
        Propagator::new(h, &chosen)
    }

    pub fn block_dims(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.indices.len()).collect()
    }

    /// Spectrum of the blocks touched by `state`.
    pub fn eigenvalues_for(&self, state: &StateVector) -> Result<Vec<f64>> {
        let mut out = Vec::new();
        for (b, block) in self.blocks.iter().enumerate() {
            if self.touches(state, b) {
                out.extend(block.eigen()?.0.iter().copied());
            }
        }
        Ok(out)
    }

    fn touches(&self, state: &StateVector, b: usize) -> bool {
        self.blocks[b]
            .indices
            .iter()
            .any(|&k| state.amplitudes[k] != C0)
    }

    pub fn evolve(&self, state: &StateVector, t: f64) -> Result<StateVector> {
        if state.n_qubits != self.n_qubits {
            return Err(Error::InvalidArgument(format!(
                "state has {} qubits, Hamiltonian has {}",
                state.n_qubits, self.n_qubits
            )));
        }
        if !t.is_finite() {
            return Err(Error::InvalidArgument("evolution time must be finite".into()));
        }
        let mut out = vec![C0; state.dim()];
        for (b, block) in self.blocks.iter().enumerate() {
            if !self.touches(state, b) {
                continue;
            }
            let (w, v) = block.eigen()?;
            let dim = block.indices.len();
            let re = DVector::from_iterator(dim, block.indices.iter().map(|&k| state.amplitudes[k].re));
            let im = DVector::from_iterator(dim, block.indices.iter().map(|&k| state.amplitudes[k].im));
            let mut cr = v.tr_mul(&re);
            let mut ci = v.tr_mul(&im);
            for a in 0..dim {
                let (s, c) = (w[a] * t).sin_cos();
                // multiply by exp(-i w t)
                let (x, y) = (cr[a], ci[a]);
                cr[a] = c * x + s * y;
                ci[a] = c * y - s * x;
            }
            let or = v * cr;
            let oi = v * ci;
            for (a, &k) in block.indices.iter().enumerate() {
                out[k] = Complex64::new(or[a], oi[a]);
            }
        }
        Ok(StateVector {
            n_qubits: state.n_qubits,
            amplitudes: out,
        })
    }
}

fn cache() -> &'static Mutex<HashMap<u64, Arc<Propagator>>> {
    static CACHE: OnceLock<Mutex<HashMap<u64, Arc<Propagator>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Shared propagator for `h`, built once per Hamiltonian fingerprint.
pub fn cached_propagator(h: &HamiltonianSpec) -> Result<Arc<Propagator>> {
    let key = h.fingerprint();
    if let Some(p) = cache().lock().unwrap().get(&key) {
        return Ok(Arc::clone(p));
    }
    let p = Arc::new(Propagator::auto(h)?);
    cache().lock().unwrap().insert(key, Arc::clone(&p));
    Ok(p)
}

pub fn exact_evolve(state: &StateVector, h: &HamiltonianSpec, t: f64) -> Result<StateVector> {
    cached_propagator(h)?.evolve(state, t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_dual_hamiltonian, sample_initial_state};

    #[test]
    fn prepare_all_zero() {
        let s = prepare(&BasisState::new(vec![0; 4]).unwrap());
        assert_eq!(s.amplitudes[0].re, 1.0);
        assert!((s.norm_sqr() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn bell_pair_reduces_to_mixed() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let s = StateVector::from_amplitudes(vec![
            Complex64::new(h, 0.0),
            C0,
            C0,
            Complex64::new(h, 0.0),
        ])
        .unwrap();
        let rho = partial_trace(&s, 1).unwrap();
        assert!((rho.data[(0, 0)].re - 0.5).abs() < 1e-15);
        assert!(rho.data[(0, 1)].norm() < 1e-15);
    }

    #[test]
    fn auto_blocks_match_gauss_blocks() {
        let c = ModelConfig::default();
        let h = build_dual_hamiltonian(&c).unwrap();
        let p = Propagator::auto(&h).unwrap();
        assert_eq!(p.block_dims(), vec![1024; 4]);
    }

    #[test]
    fn small_model_matches_dense_exponential() {
        let c = ModelConfig::new(4, 2, 0.7).unwrap();
        let h = build_dual_hamiltonian(&c).unwrap();
        let dense = h.to_dense().unwrap();
        let (w, v) = hermitian_eigen(&dense);
        let t = 0.9;
        let phases = DMatrix::from_diagonal(&w.map(|x| Complex64::new(0.0, -x * t).exp()));
        let u = &v * phases * v.adjoint();
        let s0 = prepare(&sample_initial_state(&c, 3).unwrap());
        let want = &u * DVector::from_column_slice(&s0.amplitudes);
        let got = exact_evolve(&s0, &h, t).unwrap();
        for (a, b) in got.amplitudes.iter().zip(want.iter()) {
            assert!((a - b).norm() < 1e-10);
        }
    }

    #[test]
    fn density_matrix_text_roundtrip() {
        let rho = DensityMatrix::maximally_mixed(2);
        let back = DensityMatrix::from_text(&rho.to_text()).unwrap();
        assert_eq!(rho, back);
    }
}
