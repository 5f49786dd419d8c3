//! Dual formulation of the Z2 gauge theory on a periodic plaquette chain.
//!
//! Register layout for `L_x` plaquettes and subsystem size `L_A`:
//! qubit 0 is the boundary link between the complement and A, qubits
//! `1..=L_A` are the bulk plaquette spins of A, qubit `L_A + 1` is the
//! boundary link between A and the complement, and the remaining
//! `L_x - L_A` qubits are the bulk plaquette spins of the complement.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{parse_err, Error, Result};
use crate::pauli::{Axis, PauliString, PauliTerm};

#[derive(Clone, Debug, PartialEq)]
pub struct ModelConfig {
    pub lx: usize,
    pub la: usize,
    pub g: f64,
    /// Ribbon eigenvalue; only the +1 sector is supported.
    pub v_y: i8,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            lx: 10,
            la: 4,
            g: 0.85,
            v_y: 1,
        }
    }
}

impl ModelConfig {
    pub fn new(lx: usize, la: usize, g: f64) -> Result<Self> {
        let c = ModelConfig { lx, la, g, v_y: 1 };
        c.validate()?;
        Ok(c)
    }

    pub fn n_qubits(&self) -> usize {
        self.lx + 2
    }

    /// Subsystem qubit count: A bulk plus both boundary links.
    pub fn subsystem_size(&self) -> usize {
        self.la + 2
    }

    pub fn kappa(&self) -> f64 {
        1.0 + self.v_y as f64
    }

    pub fn boundary_qubits(&self) -> (usize, usize) {
        (0, self.la + 1)
    }

    pub fn a_bulk(&self) -> std::ops::RangeInclusive<usize> {
        1..=self.la
    }

    pub fn complement_bulk(&self) -> std::ops::RangeInclusive<usize> {
        self.la + 2..=self.lx + 1
    }

    pub fn validate(&self) -> Result<()> {
        if self.la < 2 {
            return Err(Error::Config(format!(
                "L_A = {} < 2 leaves no interior plaquette in A",
                self.la
            )));
        }
        if 2 * self.la > self.lx {
            return Err(Error::Config(format!(
                "L_A = {} exceeds L_x / 2 = {}",
                self.la,
                self.lx / 2
            )));
        }
        if self.lx + 2 > 30 {
            return Err(Error::Config(format!(
                "L_x = {} is too large for a dense state vector",
                self.lx
            )));
        }
        if !self.g.is_finite() {
            return Err(Error::Config("g must be finite".into()));
        }
        if self.v_y != 1 {
            return Err(Error::Config("only the V_y = +1 sector is supported".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TermFamily {
    MagneticBulk,
    MagneticBoundary,
    ElectricPair,
    ElectricBoundary,
    ElectricBulkSingle,
}

impl TermFamily {
    pub fn name(self) -> &'static str {
        match self {
            TermFamily::MagneticBulk => "magnetic-bulk",
            TermFamily::MagneticBoundary => "magnetic-boundary",
            TermFamily::ElectricPair => "electric-pair",
            TermFamily::ElectricBoundary => "electric-boundary",
            TermFamily::ElectricBulkSingle => "electric-bulk-single",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TaggedTerm {
    pub family: TermFamily,
    pub term: PauliTerm,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HamiltonianSpec {
    pub n_qubits: usize,
    pub terms: Vec<TaggedTerm>,
}

impl HamiltonianSpec {
    pub fn strings(&self) -> Result<Vec<(f64, PauliString)>> {
        self.terms
            .iter()
            .map(|t| Ok((t.term.coefficient, t.term.string(self.n_qubits)?)))
            .collect()
    }

    pub fn family_count(&self, family: TermFamily) -> usize {
        self.terms.iter().filter(|t| t.family == family).count()
    }

    /// Stable 64-bit fingerprint used as a cache key.
    pub fn fingerprint(&self) -> u64 {
        // FNV-1a over the canonical term list
        let mut h: u64 = 0xcbf29ce484222325;
        let mut eat = |v: u64| {
            for b in v.to_le_bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(0x100000001b3);
            }
        };
        eat(self.n_qubits as u64);
        for t in &self.terms {
            eat(t.term.coefficient.to_bits());
            for (&q, &a) in &t.term.factors {
                eat(q as u64);
                eat(a as u64);
            }
            eat(u64::MAX);
        }
        h
    }

    pub fn to_dense(&self) -> Result<nalgebra::DMatrix<num_complex::Complex64>> {
        let d = 1usize << self.n_qubits;
        let mut m = nalgebra::DMatrix::zeros(d, d);
        for (c, p) in self.strings()? {
            for k in 0..d {
                let (r, ph) = p.apply_to_index(k);
                m[(r, k)] += ph * c;
            }
        }
        Ok(m)
    }
}

pub fn build_dual_hamiltonian(config: &ModelConfig) -> Result<HamiltonianSpec> {
    config.validate()?;
    let n = config.n_qubits();
    let la = config.la;
    let g = config.g;
    let (b0, b1) = config.boundary_qubits();
    let mut terms = Vec::new();
    let mut push = |family, coefficient: f64, factors: &[(usize, Axis)]| {
        if coefficient != 0.0 {
            terms.push(TaggedTerm {
                family,
                term: PauliTerm::new(coefficient, factors),
            });
        }
    };

    // plaquettes not adjacent to a boundary link carry a bare X
    for q in (2..la).chain(la + 3..n - 1) {
        push(TermFamily::MagneticBulk, 1.0, &[(q, Axis::X)]);
    }
    for (a, b) in [(b0, 1), (b0, n - 1), (la, b1), (b1, la + 2)] {
        push(TermFamily::MagneticBoundary, 1.0, &[(a, Axis::X), (b, Axis::X)]);
    }
    for q in [b0, b1] {
        push(TermFamily::ElectricBoundary, g, &[(q, Axis::Z)]);
    }
    for q in config.a_bulk().chain(config.complement_bulk()) {
        push(
            TermFamily::ElectricBulkSingle,
            config.kappa() * g,
            &[(q, Axis::Z)],
        );
    }
    for q in (1..la).chain(la + 2..n - 1) {
        push(TermFamily::ElectricPair, g, &[(q, Axis::Z), (q + 1, Axis::Z)]);
    }
    Ok(HamiltonianSpec { n_qubits: n, terms })
}

pub fn gauss_operators(config: &ModelConfig) -> Result<(PauliTerm, PauliTerm)> {
    config.validate()?;
    let n = config.n_qubits();
    let la = config.la;
    Ok((
        PauliTerm::z_string(&[n - 1, 0, 1]),
        PauliTerm::z_string(&[la, la + 1, la + 2]),
    ))
}

pub fn symmetry_operators(config: &ModelConfig) -> Result<(PauliTerm, PauliTerm)> {
    config.validate()?;
    let la = config.la;
    Ok((
        PauliTerm::z_string(&[0, 1]),
        PauliTerm::z_string(&[la, la + 1]),
    ))
}

/// Computational basis state; bit 0 is spin up (Z = +1).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BasisState {
    pub bits: Vec<u8>,
}

impl BasisState {
    pub fn new(bits: Vec<u8>) -> Result<Self> {
        if bits.iter().any(|&b| b > 1) {
            return Err(Error::InvalidArgument("bits must be 0 or 1".into()));
        }
        if bits.is_empty() || bits.len() > 30 {
            return Err(Error::InvalidArgument(format!(
                "unsupported register size {}",
                bits.len()
            )));
        }
        Ok(BasisState { bits })
    }

    /// Parse `0101...` or arrow notation `↑↓...` (qubit 0 first).
    pub fn parse(s: &str) -> Result<Self> {
        let bits = s
            .chars()
            .filter(|c| !c.is_whitespace())
            .map(|c| match c {
                '0' | '↑' | 'u' => Ok(0),
                '1' | '↓' | 'd' => Ok(1),
                _ => Err(Error::InvalidArgument(format!("bad state symbol {c:?}"))),
            })
            .collect::<Result<Vec<u8>>>()?;
        BasisState::new(bits)
    }

    pub fn n_qubits(&self) -> usize {
        self.bits.len()
    }

    pub fn index(&self) -> usize {
        self.bits.iter().fold(0usize, |k, &b| (k << 1) | b as usize)
    }

    pub fn z_value(&self, qubit: usize) -> i32 {
        1 - 2 * self.bits[qubit] as i32
    }

    pub fn eigenvalue(&self, term: &PauliTerm) -> Option<i32> {
        if !term.is_pure(Axis::Z) {
            return None;
        }
        Some(term.factors.keys().map(|&q| self.z_value(q)).product())
    }

    pub fn satisfies_gauss(&self, config: &ModelConfig) -> Result<bool> {
        let (g1, g2) = gauss_operators(config)?;
        Ok(self.eigenvalue(&g1) == Some(1) && self.eigenvalue(&g2) == Some(1))
    }
}

impl fmt::Display for BasisState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.bits {
            write!(f, "{b}")?;
        }
        Ok(())
    }
}

/// Completes boundary bits of a bulk configuration so both Gauss laws hold.
pub fn complete_boundary(config: &ModelConfig, bits: &mut [u8]) {
    let n = config.n_qubits();
    let la = config.la;
    bits[0] = bits[n - 1] ^ bits[1];
    bits[la + 1] = bits[la] ^ bits[la + 2];
}

pub fn sample_initial_state(config: &ModelConfig, seed: u64) -> Result<BasisState> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bits = vec![0u8; config.n_qubits()];
    for q in config.a_bulk().chain(config.complement_bulk()) {
        bits[q] = rng.random_range(0..2u8);
    }
    complete_boundary(config, &mut bits);
    BasisState::new(bits)
}

/// Symmetry sector of a subsystem basis index:
/// (+,+) -> 1, (+,-) -> 2, (-,+) -> 3, (-,-) -> 4.
pub fn sector_label(row_index: usize, config: &ModelConfig) -> Result<usize> {
    let m = config.subsystem_size();
    if row_index >= 1 << m {
        return Err(Error::InvalidArgument(format!(
            "row index {row_index} out of range for {m} subsystem qubits"
        )));
    }
    Ok(sector_of(row_index, m))
}

/// Unchecked sector lookup for an `m`-qubit subsystem (`L_A = m - 2`).
#[inline]
pub fn sector_of(row_index: usize, m: usize) -> usize {
    let bit = |q: usize| (row_index >> (m - 1 - q)) & 1;
    let s1 = bit(0) ^ bit(1);
    let s2 = bit(m - 2) ^ bit(m - 1);
    1 + 2 * s1 + s2
}

/// Subsystem indices grouped by sector (entry `s - 1` holds sector `s`).
pub fn sector_indices(m: usize) -> [Vec<usize>; 4] {
    let mut out: [Vec<usize>; 4] = Default::default();
    for i in 0..1usize << m {
        out[sector_of(i, m) - 1].push(i);
    }
    out
}

/// `key = value` config file with keys lx, la, g, seed.
#[derive(Clone, Debug, PartialEq)]
pub struct ConfigFile {
    pub model: ModelConfig,
    pub seed: u64,
}

impl Default for ConfigFile {
    fn default() -> Self {
        ConfigFile {
            model: ModelConfig::default(),
            seed: 0,
        }
    }
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut out = ConfigFile::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| parse_err(i + 1, "expected key = value"))?;
            let (k, v) = (k.trim(), v.trim());
            let bad = |_| parse_err(i + 1, format!("bad value for {k}: {v:?}"));
            match k {
                "lx" => out.model.lx = v.parse().map_err(bad)?,
                "la" => out.model.la = v.parse().map_err(bad)?,
                "g" => out.model.g = v.parse().map_err(|_| parse_err(i + 1, "bad g"))?,
                "seed" => out.seed = v.parse().map_err(bad)?,
                _ => return Err(parse_err(i + 1, format!("unknown key {k:?}"))),
            }
        }
        out.model.validate()?;
        Ok(out)
    }

    pub fn to_text(&self) -> String {
        format!(
            "lx = {}\nla = {}\ng = {:?}\nseed = {}\n",
            self.model.lx, self.model.la, self.model.g, self.seed
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_term_counts() {
        let h = build_dual_hamiltonian(&ModelConfig::default()).unwrap();
        assert_eq!(h.family_count(TermFamily::MagneticBulk), 6);
        assert_eq!(h.family_count(TermFamily::MagneticBoundary), 4);
        assert_eq!(h.family_count(TermFamily::ElectricPair), 8);
        assert_eq!(h.family_count(TermFamily::ElectricBoundary), 2);
        assert_eq!(h.family_count(TermFamily::ElectricBulkSingle), 10);
    }

    #[test]
    fn families_are_pure() {
        let h = build_dual_hamiltonian(&ModelConfig::default()).unwrap();
        for t in &h.terms {
            let axis = match t.family {
                TermFamily::MagneticBulk | TermFamily::MagneticBoundary => Axis::X,
                _ => Axis::Z,
            };
            assert!(t.term.is_pure(axis), "{}", t.term);
        }
    }

    #[test]
    fn rejects_small_subsystem() {
        assert!(ModelConfig::new(10, 1, 0.85).is_err());
        assert!(ModelConfig::new(10, 6, 0.85).is_err());
        assert!(ModelConfig::new(8, 3, 0.85).is_ok());
    }

    #[test]
    fn gauss_and_symmetry_defaults() {
        let c = ModelConfig::default();
        let (g1, g2) = gauss_operators(&c).unwrap();
        assert_eq!(g1.qubits(), vec![0, 1, 11]);
        assert_eq!(g2.qubits(), vec![4, 5, 6]);
        let (s1, s2) = symmetry_operators(&c).unwrap();
        assert_eq!(s1.qubits(), vec![0, 1]);
        assert_eq!(s2.qubits(), vec![4, 5]);
    }

    #[test]
    fn sector_examples() {
        let c = ModelConfig::default();
        assert_eq!(sector_label(0, &c).unwrap(), 1);
        assert_eq!(sector_label(0b100000, &c).unwrap(), 3);
        assert_eq!(sector_label(0b000001, &c).unwrap(), 2);
        assert_eq!(sector_label(0b100001, &c).unwrap(), 4);
        assert!(sector_label(64, &c).is_err());
        for s in sector_indices(6) {
            assert_eq!(s.len(), 16);
        }
    }

    #[test]
    fn config_file_roundtrip() {
        let cf = ConfigFile {
            model: ModelConfig::new(8, 3, 0.5).unwrap(),
            seed: 42,
        };
        assert_eq!(ConfigFile::parse(&cf.to_text()).unwrap(), cf);
        assert!(ConfigFile::parse("lx = ten\n").is_err());
        assert!(ConfigFile::parse("foo = 1\n").is_err());
    }

    #[test]
    fn arrow_state_parses() {
        let s = BasisState::parse("↓↓↓↑↓↓↑↑↑↓↑↑").unwrap();
        assert_eq!(s.to_string(), "111011000100");
        assert!(s.satisfies_gauss(&ModelConfig::default()).unwrap());
    }
}
