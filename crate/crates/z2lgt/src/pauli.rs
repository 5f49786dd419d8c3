//! Pauli strings in symplectic (x, z) bitmask form.
//!
//! Qubit `q` of an `n`-qubit register maps to bit `n - 1 - q` of a basis
//! index, so qubit 0 is the most significant bit.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub fn symbol(self) -> char {
        match self {
            Axis::X => 'X',
            Axis::Y => 'Y',
            Axis::Z => 'Z',
        }
    }
}

/// Powers of i, indexed by exponent mod 4.
pub const I_POW: [Complex64; 4] = [
    Complex64::new(1.0, 0.0),
    Complex64::new(0.0, 1.0),
    Complex64::new(-1.0, 0.0),
    Complex64::new(0.0, -1.0),
];

/// Unsigned Pauli string `i^{|x&z|} X^x Z^z` on up to 64 qubits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliString {
    pub n_qubits: usize,
    pub x: u64,
    pub z: u64,
}

impl PauliString {
    pub fn identity(n_qubits: usize) -> Self {
        assert!(n_qubits <= 64, "at most 64 qubits supported");
        PauliString { n_qubits, x: 0, z: 0 }
    }

    #[inline]
    pub fn bit(&self, qubit: usize) -> u64 {
        1u64 << (self.n_qubits - 1 - qubit)
    }

    pub fn from_factors<'a, I>(n_qubits: usize, factors: I) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a usize, &'a Axis)>,
    {
        let mut p = PauliString::identity(n_qubits);
        for (&q, &a) in factors {
            if q >= n_qubits {
                return Err(Error::QubitOutOfRange { index: q, n_qubits });
            }
            p = p.with(q, a);
        }
        Ok(p)
    }

    /// Parse a dense label such as `"XIZZ"` (qubit 0 first).
    pub fn parse(label: &str) -> Result<Self> {
        let n = label.chars().count();
        if n > 64 {
            return Err(Error::InvalidArgument("Pauli label longer than 64".into()));
        }
        let mut p = PauliString::identity(n);
        for (q, c) in label.chars().enumerate() {
            match c {
                'I' | '_' => {}
                'X' => p = p.with(q, Axis::X),
                'Y' => p = p.with(q, Axis::Y),
                'Z' => p = p.with(q, Axis::Z),
                _ => {
                    return Err(Error::InvalidArgument(format!(
                        "bad Pauli symbol {c:?} in {label:?}"
                    )))
                }
            }
        }
        Ok(p)
    }

    pub fn with(mut self, qubit: usize, axis: Axis) -> Self {
        let b = self.bit(qubit);
        self.x &= !b;
        self.z &= !b;
        match axis {
            Axis::X => self.x |= b,
            Axis::Y => {
                self.x |= b;
                self.z |= b
            }
            Axis::Z => self.z |= b,
        }
        self
    }

    pub fn axis(&self, qubit: usize) -> Option<Axis> {
        let b = self.bit(qubit);
        match (self.x & b != 0, self.z & b != 0) {
            (false, false) => None,
            (true, false) => Some(Axis::X),
            (true, true) => Some(Axis::Y),
            (false, true) => Some(Axis::Z),
        }
    }

    pub fn is_identity(&self) -> bool {
        self.x == 0 && self.z == 0
    }

    pub fn weight(&self) -> u32 {
        (self.x | self.z).count_ones()
    }

    pub fn y_count(&self) -> u32 {
        (self.x & self.z).count_ones()
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.n_qubits).filter(|&q| self.axis(q).is_some()).collect()
    }

    pub fn factors(&self) -> BTreeMap<usize, Axis> {
        (0..self.n_qubits)
            .filter_map(|q| self.axis(q).map(|a| (q, a)))
            .collect()
    }

    pub fn commutes_with(&self, other: &PauliString) -> bool {
        ((self.x & other.z) ^ (self.z & other.x)).count_ones() % 2 == 0
    }

    /// Product `self * other = i^k * result`, returning `(k mod 4, result)`.
    pub fn mul(&self, other: &PauliString) -> (u8, PauliString) {
        assert_eq!(self.n_qubits, other.n_qubits);
        let x = self.x ^ other.x;
        let z = self.z ^ other.z;
        let k = self.y_count() as i64 + other.y_count() as i64
            + 2 * (self.z & other.x).count_ones() as i64
            - (x & z).count_ones() as i64;
        (
            k.rem_euclid(4) as u8,
            PauliString {
                n_qubits: self.n_qubits,
                x,
                z,
            },
        )
    }

    /// `P|k> = phase * |k ^ x>`; returns `(k ^ x, phase)`.
    #[inline]
    pub fn apply_to_index(&self, k: usize) -> (usize, Complex64) {
        let kk = k as u64;
        let mut e = self.y_count() as usize;
        if (kk & self.z).count_ones() % 2 == 1 {
            e += 2;
        }
        ((kk ^ self.x) as usize, I_POW[e % 4])
    }

    /// Dense matrix, used for small-system checks.
    pub fn to_matrix(&self) -> nalgebra::DMatrix<Complex64> {
        let d = 1usize << self.n_qubits;
        let mut m = nalgebra::DMatrix::zeros(d, d);
        for k in 0..d {
            let (r, ph) = self.apply_to_index(k);
            m[(r, k)] = ph;
        }
        m
    }

    /// Embed into a larger register by placing qubit `q` at `q + offset`.
    pub fn embed(&self, n_qubits: usize, offset: usize) -> PauliString {
        let mut p = PauliString::identity(n_qubits);
        for (q, a) in self.factors() {
            p = p.with(q + offset, a);
        }
        p
    }

    /// Restrict to the first `m` qubits; `None` if support lies outside.
    pub fn restrict(&self, m: usize) -> Option<PauliString> {
        let mut p = PauliString::identity(m);
        for (q, a) in self.factors() {
            if q >= m {
                return None;
            }
            p = p.with(q, a);
        }
        Some(p)
    }

    pub fn label(&self) -> String {
        (0..self.n_qubits)
            .map(|q| self.axis(q).map_or('I', Axis::symbol))
            .collect()
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// Weighted Pauli operator `coefficient * P`.
#[derive(Clone, Debug, PartialEq)]
pub struct PauliTerm {
    pub coefficient: f64,
    pub factors: BTreeMap<usize, Axis>,
}

impl PauliTerm {
    pub fn new(coefficient: f64, factors: &[(usize, Axis)]) -> Self {
        PauliTerm {
            coefficient,
            factors: factors.iter().copied().collect(),
        }
    }

    pub fn z_string(qubits: &[usize]) -> Self {
        PauliTerm {
            coefficient: 1.0,
            factors: qubits.iter().map(|&q| (q, Axis::Z)).collect(),
        }
    }

    pub fn validate(&self, n_qubits: usize) -> Result<()> {
        if !self.coefficient.is_finite() || self.coefficient == 0.0 {
            return Err(Error::InvalidArgument(format!(
                "coefficient must be finite and nonzero, got {}",
                self.coefficient
            )));
        }
        if let Some((&q, _)) = self.factors.iter().find(|(&q, _)| q >= n_qubits) {
            return Err(Error::QubitOutOfRange { index: q, n_qubits });
        }
        Ok(())
    }

    pub fn string(&self, n_qubits: usize) -> Result<PauliString> {
        PauliString::from_factors(n_qubits, &self.factors)
    }

    pub fn qubits(&self) -> Vec<usize> {
        self.factors.keys().copied().collect()
    }

    pub fn is_pure(&self, axis: Axis) -> bool {
        self.factors.values().all(|&a| a == axis)
    }

    pub fn commutes_with(&self, other: &PauliTerm) -> bool {
        let anti = self
            .factors
            .iter()
            .filter(|(q, a)| other.factors.get(q).is_some_and(|b| b != *a))
            .count();
        anti % 2 == 0
    }
}

impl fmt::Display for PauliTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.coefficient)?;
        for (q, a) in &self.factors {
            write!(f, " {}{}", a.symbol(), q)?;
        }
        Ok(())
    }
}
