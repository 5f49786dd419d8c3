//! Randomized single-qubit measurements.
//!
//! Each qubit gets `u = Rz(g3) Ry(g2) Rz(g1)` (gates applied in the order
//! g1, g2, g3) before a computational-basis readout.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Binomial, Distribution};

use crate::circuit::{apply_circuit, Circuit, Gate};
use crate::error::{parse_err, Error, Result};
use crate::state::{DensityMatrix, StateVector};

#[derive(Clone, Debug, PartialEq)]
pub struct RandomBasis {
    pub basis_id: u64,
    /// `(g1, g2, g3)` per qubit.
    pub angles: Vec<[f64; 3]>,
}

impl RandomBasis {
    pub fn identity(n_qubits: usize, basis_id: u64) -> Self {
        RandomBasis {
            basis_id,
            angles: vec![[0.0; 3]; n_qubits],
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.angles.len()
    }

    pub fn unitary(&self, qubit: usize) -> [[Complex64; 2]; 2] {
        single_qubit_unitary(self.angles[qubit])
    }

    /// Tensor product of the first `m` per-qubit unitaries, qubit 0 most significant.
    pub fn subsystem_unitary(&self, m: usize) -> DMatrix<Complex64> {
        let mut v = DMatrix::from_element(1, 1, Complex64::new(1.0, 0.0));
        for q in 0..m {
            let u = self.unitary(q);
            let um = DMatrix::from_fn(2, 2, |r, c| u[r][c]);
            v = v.kronecker(&um);
        }
        v
    }
}

/// `Rz(g3) Ry(g2) Rz(g1)` as a 2x2 matrix.
pub fn single_qubit_unitary(g: [f64; 3]) -> [[Complex64; 2]; 2] {
    let c = Circuit {
        n_qubits: 1,
        gates: vec![Gate::rz(0, g[0]), Gate::ry(0, g[1]), Gate::rz(0, g[2])],
    };
    let mut u = [[Complex64::new(0.0, 0.0); 2]; 2];
    for k in 0..2 {
        let mut e = StateVector::zero(1);
        e.amplitudes.swap(0, k);
        let out = apply_circuit(&e, &c).expect("valid one-qubit circuit");
        u[0][k] = out.amplitudes[0];
        u[1][k] = out.amplitudes[1];
    }
    u
}

/// Haar-random (up to phase) per-qubit triples.
pub fn sample_cue_basis<R: Rng + ?Sized>(rng: &mut R, n_qubits: usize, basis_id: u64) -> RandomBasis {
    let angles = (0..n_qubits)
        .map(|_| {
            let g1 = rng.random_range(0.0..2.0 * PI);
            let u: f64 = rng.random();
            let g2 = (1.0 - 2.0 * u).clamp(-1.0, 1.0).acos();
            let g3 = rng.random_range(0.0..2.0 * PI);
            [g1, g2, g3]
        })
        .collect();
    RandomBasis { basis_id, angles }
}

pub fn basis_rotation_circuit(basis: &RandomBasis) -> Circuit {
    let mut c = Circuit::new(basis.n_qubits());
    for (q, g) in basis.angles.iter().enumerate() {
        c.push(Gate::rz(q, g[0]));
        c.push(Gate::ry(q, g[1]));
        c.push(Gate::rz(q, g[2]));
    }
    c
}

#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementRecord {
    pub basis: RandomBasis,
    pub subsystem_size: usize,
    pub n_shots: u64,
    pub counts: BTreeMap<u64, u64>,
}

impl MeasurementRecord {
    pub fn validate(&self) -> Result<()> {
        let total: u64 = self.counts.values().sum();
        if total != self.n_shots {
            return Err(Error::InvalidArgument(format!(
                "counts sum to {total}, expected {}",
                self.n_shots
            )));
        }
        if self.counts.keys().any(|&k| k >> self.subsystem_size != 0) {
            return Err(Error::InvalidArgument("bitstring exceeds subsystem size".into()));
        }
        if self.basis.n_qubits() < self.subsystem_size {
            return Err(Error::InvalidArgument("basis narrower than subsystem".into()));
        }
        Ok(())
    }

    /// Empirical frequencies over all `2^m` subsystem outcomes.
    pub fn frequencies(&self) -> Vec<f64> {
        let mut f = vec![0.0; 1 << self.subsystem_size];
        for (&k, &c) in &self.counts {
            f[k as usize] = c as f64 / self.n_shots as f64;
        }
        f
    }

    fn bitstring(&self, k: u64) -> String {
        (0..self.subsystem_size)
            .map(|q| if (k >> (self.subsystem_size - 1 - q)) & 1 == 1 { '1' } else { '0' })
            .collect()
    }

    pub fn to_text(&self) -> String {
        let mut s = String::from("record\n");
        s.push_str(&format!("basis_id {}\n", self.basis.basis_id));
        s.push_str(&format!("n_qubits {}\n", self.basis.n_qubits()));
        s.push_str(&format!("subsystem_size {}\n", self.subsystem_size));
        s.push_str(&format!("n_shots {}\n", self.n_shots));
        for (q, g) in self.basis.angles.iter().enumerate() {
            s.push_str(&format!("angles {q} {:?} {:?} {:?}\n", g[0], g[1], g[2]));
        }
        for (&k, &c) in &self.counts {
            s.push_str(&format!("{} {c}\n", self.bitstring(k)));
        }
        s.push_str("end\n");
        s
    }
}

pub fn records_to_text(records: &[MeasurementRecord]) -> String {
    records.iter().map(MeasurementRecord::to_text).collect()
}

pub fn records_from_text(text: &str) -> Result<Vec<MeasurementRecord>> {
    let mut out = Vec::new();
    let mut cur: Option<(MeasurementRecord, usize)> = None;
    for (i, raw) in text.lines().enumerate() {
        let ln = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let tok: Vec<&str> = line.split_whitespace().collect();
        let int = |s: &str| s.parse::<u64>().map_err(|_| parse_err(ln, format!("bad integer {s:?}")));
        match tok[0] {
            "record" => {
                if cur.is_some() {
                    return Err(parse_err(ln, "nested record"));
                }
                cur = Some((
                    MeasurementRecord {
                        basis: RandomBasis { basis_id: 0, angles: Vec::new() },
                        subsystem_size: 0,
                        n_shots: 0,
                        counts: BTreeMap::new(),
                    },
                    0,
                ));
            }
            "end" => {
                let (r, nq) = cur.take().ok_or_else(|| parse_err(ln, "end without record"))?;
                if r.basis.angles.len() != nq {
                    return Err(parse_err(ln, "angle lines do not match n_qubits"));
                }
                r.validate().map_err(|e| parse_err(ln, e.to_string()))?;
                out.push(r);
            }
            key => {
                let (r, nq) = cur.as_mut().ok_or_else(|| parse_err(ln, "line outside record"))?;
                let arg = |k: usize| tok.get(k).copied().ok_or_else(|| parse_err(ln, "missing field"));
                match key {
                    "basis_id" => r.basis.basis_id = int(arg(1)?)?,
                    "n_qubits" => *nq = int(arg(1)?)? as usize,
                    "subsystem_size" => r.subsystem_size = int(arg(1)?)? as usize,
                    "n_shots" => r.n_shots = int(arg(1)?)?,
                    "angles" => {
                        let q = int(arg(1)?)? as usize;
                        if q != r.basis.angles.len() {
                            return Err(parse_err(ln, "angles out of order"));
                        }
                        let mut g = [0.0; 3];
                        for (k, v) in g.iter_mut().enumerate() {
                            *v = arg(k + 2)?.parse().map_err(|_| parse_err(ln, "bad angle"))?;
                        }
                        r.basis.angles.push(g);
                    }
                    bits if bits.chars().all(|c| c == '0' || c == '1') => {
                        if bits.len() != r.subsystem_size {
                            return Err(parse_err(ln, "bitstring length mismatch"));
                        }
                        let k = u64::from_str_radix(bits, 2).map_err(|_| parse_err(ln, "bad bitstring"))?;
                        let c = int(arg(1)?)?;
                        *r.counts.entry(k).or_insert(0) += c;
                    }
                    other => return Err(parse_err(ln, format!("unknown key {other:?}"))),
                }
            }
        }
    }
    if cur.is_some() {
        return Err(parse_err(text.lines().count(), "unterminated record"));
    }
    Ok(out)
}

/// Multinomial draw by sequential conditional binomials.
pub fn multinomial<R: Rng + ?Sized>(rng: &mut R, n: u64, probs: &[f64]) -> Vec<u64> {
    let mut out = vec![0u64; probs.len()];
    let mut left = n;
    let mut mass: f64 = probs.iter().map(|p| p.max(0.0)).sum();
    for (k, &p) in probs.iter().enumerate() {
        if left == 0 {
            break;
        }
        let p = p.max(0.0);
        if k + 1 == probs.len() || mass <= 0.0 {
            out[k] = left;
            break;
        }
        let q = (p / mass).clamp(0.0, 1.0);
        let c = if q >= 1.0 {
            left
        } else if q <= 0.0 {
            0
        } else {
            Binomial::new(left, q).expect("valid binomial").sample(rng)
        };
        out[k] = c;
        left -= c;
        mass -= p;
    }
    out
}

pub fn simulate_measurements<R: Rng + ?Sized>(
    state: &StateVector,
    basis: &RandomBasis,
    n_shots: u64,
    subsystem_size: usize,
    rng: &mut R,
) -> Result<MeasurementRecord> {
    if n_shots == 0 {
        return Err(Error::InvalidArgument("n_shots must be positive".into()));
    }
    if basis.n_qubits() != state.n_qubits || subsystem_size > state.n_qubits || subsystem_size == 0 {
        return Err(Error::InvalidArgument("basis or subsystem does not match the state".into()));
    }
    let rotated = apply_circuit(state, &basis_rotation_circuit(basis))?;
    let probs = rotated.probabilities();
    let full = multinomial(rng, n_shots, &probs);
    let shift = state.n_qubits - subsystem_size;
    let mut counts = BTreeMap::new();
    for (k, &c) in full.iter().enumerate() {
        if c > 0 {
            *counts.entry((k >> shift) as u64).or_insert(0) += c;
        }
    }
    Ok(MeasurementRecord {
        basis: basis.clone(),
        subsystem_size,
        n_shots,
        counts,
    })
}

/// Draws shots directly from a subsystem density matrix; the basis angles
/// of qubits `0..m` are used.
pub fn simulate_measurements_density<R: Rng + ?Sized>(
    rho: &DensityMatrix,
    basis: &RandomBasis,
    n_shots: u64,
    rng: &mut R,
) -> Result<MeasurementRecord> {
    if n_shots == 0 {
        return Err(Error::InvalidArgument("n_shots must be positive".into()));
    }
    let probs: Vec<f64> = exact_basis_probabilities(rho, basis)?.iter().map(|p| p.max(0.0)).collect();
    let mut counts = BTreeMap::new();
    for (k, c) in multinomial(rng, n_shots, &probs).into_iter().enumerate() {
        if c > 0 {
            counts.insert(k as u64, c);
        }
    }
    Ok(MeasurementRecord {
        basis: basis.clone(),
        subsystem_size: rho.n_qubits,
        n_shots,
        counts,
    })
}

/// Born probabilities `Tr[U^dag |b><b| U rho]` for the subsystem part of `basis`.
pub fn exact_basis_probabilities(rho: &DensityMatrix, basis: &RandomBasis) -> Result<Vec<f64>> {
    let m = rho.n_qubits;
    if basis.n_qubits() < m {
        return Err(Error::InvalidArgument("basis narrower than density matrix".into()));
    }
    let v = basis.subsystem_unitary(m);
    let w = &v * &rho.data;
    let d = rho.dim();
    Ok((0..d)
        .map(|b| (0..d).map(|j| (w[(b, j)] * v[(b, j)].conj()).re).sum())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{substream, Purpose};
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn identity_unitary() {
        let u = single_qubit_unitary([0.0; 3]);
        assert!((u[0][0] - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        assert!(u[0][1].norm() < 1e-15);
    }

    #[test]
    fn ry_half_pi_maps_x_to_minus_z() {
        // U^dag Z U = -X for U = Ry(pi/2)
        let u = single_qubit_unitary([0.0, FRAC_PI_2, 0.0]);
        let um = DMatrix::from_fn(2, 2, |r, c| u[r][c]);
        let z = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]).map(|x| Complex64::new(x, 0.0));
        let x = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]).map(|x| Complex64::new(x, 0.0));
        let lhs = um.adjoint() * z * &um;
        assert!((lhs + x).camax() < 1e-15);
    }

    #[test]
    fn multinomial_conserves() {
        let mut rng = substream(1, Purpose::Shots, 0, 0, 0);
        let c = multinomial(&mut rng, 1000, &[0.1, 0.0, 0.5, 0.4]);
        assert_eq!(c.iter().sum::<u64>(), 1000);
        assert_eq!(c[1], 0);
    }

    #[test]
    fn record_text_roundtrip() {
        let mut rng = substream(2, Purpose::Basis, 0, 0, 0);
        let basis = sample_cue_basis(&mut rng, 3, 5);
        let mut counts = BTreeMap::new();
        counts.insert(0b01, 7);
        counts.insert(0b10, 3);
        let r = MeasurementRecord { basis, subsystem_size: 2, n_shots: 10, counts };
        let back = records_from_text(&records_to_text(&[r.clone(), r.clone()])).unwrap();
        assert_eq!(back, vec![r.clone(), r]);
        assert!(records_from_text("record\nn_qubits 1\nsubsystem_size 1\nn_shots 2\nangles 0 0 0 0\n0 1\nend\n").is_err());
    }
}
