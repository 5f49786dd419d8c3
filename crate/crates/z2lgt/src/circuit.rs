//! Rotation-gate circuits and first-order Trotter compilation.
//!
//! Conventions: `R_a(t) = exp(-i t/2 sigma_a)` for single-qubit gates and
//! `RXX(t) = exp(-i t X X)` (no factor one half).

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::fmt;

use num_complex::Complex64;

use crate::error::{parse_err, Error, Result};
use crate::lattice::HamiltonianSpec;
use crate::pauli::Axis;
use crate::state::StateVector;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GateKind {
    Rx,
    Ry,
    Rz,
    Rxx,
}

impl GateKind {
    pub fn name(self) -> &'static str {
        match self {
            GateKind::Rx => "RX",
            GateKind::Ry => "RY",
            GateKind::Rz => "RZ",
            GateKind::Rxx => "RXX",
        }
    }

    pub fn arity(self) -> usize {
        if self == GateKind::Rxx {
            2
        } else {
            1
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Gate {
    pub kind: GateKind,
    pub qubits: Vec<usize>,
    pub angle: f64,
}

impl Gate {
    pub fn rx(q: usize, angle: f64) -> Self {
        Gate { kind: GateKind::Rx, qubits: vec![q], angle }
    }
    pub fn ry(q: usize, angle: f64) -> Self {
        Gate { kind: GateKind::Ry, qubits: vec![q], angle }
    }
    pub fn rz(q: usize, angle: f64) -> Self {
        Gate { kind: GateKind::Rz, qubits: vec![q], angle }
    }
    pub fn rxx(i: usize, j: usize, angle: f64) -> Self {
        Gate { kind: GateKind::Rxx, qubits: vec![i, j], angle }
    }

    pub fn validate(&self, n_qubits: usize) -> Result<()> {
        if self.qubits.len() != self.kind.arity() {
            return Err(Error::InvalidArgument(format!(
                "{} expects {} qubit(s)",
                self.kind.name(),
                self.kind.arity()
            )));
        }
        if self.kind == GateKind::Rxx && self.qubits[0] == self.qubits[1] {
            return Err(Error::InvalidArgument("RXX on a repeated qubit".into()));
        }
        if let Some(&q) = self.qubits.iter().find(|&&q| q >= n_qubits) {
            return Err(Error::QubitOutOfRange { index: q, n_qubits });
        }
        if !self.angle.is_finite() {
            return Err(Error::InvalidArgument("gate angle must be finite".into()));
        }
        Ok(())
    }

    pub fn inverse(&self) -> Gate {
        Gate { angle: -self.angle, ..self.clone() }
    }

    /// 2x2 matrix of a single-qubit gate (row-major).
    pub fn matrix_1q(&self) -> [[Complex64; 2]; 2] {
        let (s, c) = (self.angle / 2.0).sin_cos();
        let z = Complex64::new(0.0, 0.0);
        match self.kind {
            GateKind::Rx => [
                [Complex64::new(c, 0.0), Complex64::new(0.0, -s)],
                [Complex64::new(0.0, -s), Complex64::new(c, 0.0)],
            ],
            GateKind::Ry => [
                [Complex64::new(c, 0.0), Complex64::new(-s, 0.0)],
                [Complex64::new(s, 0.0), Complex64::new(c, 0.0)],
            ],
            GateKind::Rz => [
                [Complex64::new(c, -s), z],
                [z, Complex64::new(c, s)],
            ],
            GateKind::Rxx => panic!("RXX is a two-qubit gate"),
        }
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.kind.name())?;
        for q in &self.qubits {
            write!(f, " {q}")?;
        }
        write!(f, " {:?}", self.angle)
    }
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct Circuit {
    pub n_qubits: usize,
    pub gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(n_qubits: usize) -> Self {
        Circuit { n_qubits, gates: Vec::new() }
    }

    pub fn push(&mut self, gate: Gate) {
        self.gates.push(gate);
    }

    pub fn extend(&mut self, gates: impl IntoIterator<Item = Gate>) {
        self.gates.extend(gates);
    }

    pub fn count(&self, kind: GateKind) -> usize {
        self.gates.iter().filter(|g| g.kind == kind).count()
    }

    pub fn inverse(&self) -> Circuit {
        Circuit {
            n_qubits: self.n_qubits,
            gates: self.gates.iter().rev().map(Gate::inverse).collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.gates.iter().try_for_each(|g| g.validate(self.n_qubits))
    }

    /// Line format: a `QUBITS n` header then one `GATE q0 [q1] angle` per line.
    pub fn to_text(&self) -> String {
        let mut s = format!("QUBITS {}\n", self.n_qubits);
        for g in &self.gates {
            s.push_str(&g.to_string());
            s.push('\n');
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut c: Option<Circuit> = None;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let tok: Vec<&str> = line.split_whitespace().collect();
            let num = |s: &str| s.parse::<usize>().map_err(|_| parse_err(i + 1, "bad qubit"));
            if tok[0] == "QUBITS" {
                let n = num(tok.get(1).copied().unwrap_or(""))?;
                c = Some(Circuit::new(n));
                continue;
            }
            let circ = c.as_mut().ok_or_else(|| parse_err(i + 1, "missing QUBITS header"))?;
            let kind = match tok[0] {
                "RX" => GateKind::Rx,
                "RY" => GateKind::Ry,
                "RZ" => GateKind::Rz,
                "RXX" => GateKind::Rxx,
                other => return Err(parse_err(i + 1, format!("unknown gate {other}"))),
            };
            if tok.len() != kind.arity() + 2 {
                return Err(parse_err(i + 1, "wrong field count"));
            }
            let qubits = tok[1..=kind.arity()]
                .iter()
                .map(|s| num(s))
                .collect::<Result<Vec<_>>>()?;
            let angle = tok[kind.arity() + 1]
                .parse::<f64>()
                .map_err(|_| parse_err(i + 1, "bad angle"))?;
            let g = Gate { kind, qubits, angle };
            g.validate(circ.n_qubits).map_err(|e| parse_err(i + 1, e.to_string()))?;
            circ.push(g);
        }
        c.ok_or_else(|| parse_err(0, "empty circuit file"))
    }
}

/// Term family used to order a Trotter step.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Family {
    Z,
    ZZ,
    X,
    XX,
}

pub const DEFAULT_ORDER: [Family; 4] = [Family::Z, Family::ZZ, Family::X, Family::XX];

fn family_of(factors: &std::collections::BTreeMap<usize, Axis>) -> Option<Family> {
    let all = |a: Axis| factors.values().all(|&b| b == a);
    match (factors.len(), all(Axis::Z), all(Axis::X)) {
        (1, true, _) => Some(Family::Z),
        (2, true, _) => Some(Family::ZZ),
        (1, _, true) => Some(Family::X),
        (2, _, true) => Some(Family::XX),
        _ => None,
    }
}

/// ZZ rotation `exp(-i angle Z_i Z_j)` via Y-conjugated RXX.
pub fn decompose_zz(i: usize, j: usize, angle: f64) -> Vec<Gate> {
    assert_ne!(i, j, "decompose_zz needs distinct qubits");
    vec![
        Gate::ry(i, -FRAC_PI_2),
        Gate::ry(j, -FRAC_PI_2),
        Gate::rxx(i, j, angle),
        Gate::ry(i, FRAC_PI_2),
        Gate::ry(j, FRAC_PI_2),
    ]
}

/// Restrict an MS angle to `|a| <= pi/4`; the flag requests `RX(pi)` on
/// both qubits. Boundary values belong to the lower case.
pub fn reduce_ms_angle(angle: f64) -> (f64, bool) {
    let a = wrap_pi(angle);
    let m = a.abs();
    if m <= FRAC_PI_4 {
        (a, false)
    } else if m <= 3.0 * FRAC_PI_4 {
        (a - FRAC_PI_2.copysign(a), true)
    } else {
        (a - PI.copysign(a), false)
    }
}

fn wrap_pi(a: f64) -> f64 {
    if (-PI..=PI).contains(&a) {
        return a;
    }
    let w = (a + PI).rem_euclid(2.0 * PI) - PI;
    // keep +pi rather than -pi for inputs equivalent to pi
    if w == -PI {
        PI
    } else {
        w
    }
}

/// Expand an RXX gate into its reduced-angle form.
pub fn reduce_rxx(gate: &Gate) -> Vec<Gate> {
    assert_eq!(gate.kind, GateKind::Rxx);
    let (a, flip) = reduce_ms_angle(gate.angle);
    let (i, j) = (gate.qubits[0], gate.qubits[1]);
    let mut out = Vec::with_capacity(3);
    if flip {
        out.push(Gate::rx(i, PI));
        out.push(Gate::rx(j, PI));
    }
    out.push(Gate::rxx(i, j, a));
    out
}

pub fn build_trotter_circuit(h: &HamiltonianSpec, t: f64, n_steps: usize) -> Result<Circuit> {
    build_trotter_circuit_ordered(h, t, n_steps, &DEFAULT_ORDER)
}

pub fn build_trotter_circuit_ordered(
    h: &HamiltonianSpec,
    t: f64,
    n_steps: usize,
    order: &[Family],
) -> Result<Circuit> {
    if n_steps == 0 {
        return Err(Error::InvalidArgument("n_steps must be at least 1".into()));
    }
    if !t.is_finite() {
        return Err(Error::InvalidArgument("time must be finite".into()));
    }
    let dt = t / n_steps as f64;
    let mut families = Vec::with_capacity(h.terms.len());
    for tt in &h.terms {
        tt.term.validate(h.n_qubits)?;
        let f = family_of(&tt.term.factors)
            .ok_or_else(|| Error::Unsupported(tt.term.to_string()))?;
        if !order.contains(&f) {
            return Err(Error::InvalidArgument(format!(
                "family {f:?} missing from trotter order"
            )));
        }
        families.push(f);
    }
    let mut step = Vec::new();
    for &fam in order {
        for (tt, _) in h.terms.iter().zip(&families).filter(|(_, &f)| f == fam) {
            let c = tt.term.coefficient;
            let q = tt.term.qubits();
            match fam {
                Family::Z => step.push(Gate::rz(q[0], 2.0 * c * dt)),
                Family::X => step.push(Gate::rx(q[0], 2.0 * c * dt)),
                Family::XX => step.extend(reduce_rxx(&Gate::rxx(q[0], q[1], c * dt))),
                Family::ZZ => {
                    for g in decompose_zz(q[0], q[1], c * dt) {
                        if g.kind == GateKind::Rxx {
                            step.extend(reduce_rxx(&g));
                        } else {
                            step.push(g);
                        }
                    }
                }
            }
        }
    }
    let mut c = Circuit::new(h.n_qubits);
    for _ in 0..n_steps {
        c.extend(step.iter().cloned());
    }
    Ok(c)
}

#[inline]
fn apply_1q(amps: &mut [Complex64], n: usize, q: usize, m: &[[Complex64; 2]; 2]) {
    let bit = 1usize << (n - 1 - q);
    let d = amps.len();
    let mut base = 0;
    while base < d {
        for k in base..base + bit {
            let a0 = amps[k];
            let a1 = amps[k | bit];
            amps[k] = m[0][0] * a0 + m[0][1] * a1;
            amps[k | bit] = m[1][0] * a0 + m[1][1] * a1;
        }
        base += 2 * bit;
    }
}

#[inline]
fn apply_rxx(amps: &mut [Complex64], n: usize, i: usize, j: usize, angle: f64) {
    let mask = (1usize << (n - 1 - i)) | (1usize << (n - 1 - j));
    let (s, c) = angle.sin_cos();
    let mis = Complex64::new(0.0, -s);
    for k in 0..amps.len() {
        let p = k ^ mask;
        if k < p {
            let (a, b) = (amps[k], amps[p]);
            amps[k] = a * c + mis * b;
            amps[p] = b * c + mis * a;
        }
    }
}

pub fn apply_gate(state: &mut StateVector, gate: &Gate) {
    let n = state.n_qubits;
    match gate.kind {
        GateKind::Rxx => apply_rxx(&mut state.amplitudes, n, gate.qubits[0], gate.qubits[1], gate.angle),
        _ => apply_1q(&mut state.amplitudes, n, gate.qubits[0], &gate.matrix_1q()),
    }
}

pub fn apply_circuit(state: &StateVector, c: &Circuit) -> Result<StateVector> {
    if state.n_qubits != c.n_qubits {
        return Err(Error::InvalidArgument(format!(
            "circuit on {} qubits applied to {}-qubit state",
            c.n_qubits, state.n_qubits
        )));
    }
    c.validate()?;
    let mut s = state.clone();
    for g in &c.gates {
        apply_gate(&mut s, g);
    }
    Ok(s)
}

/// Dense unitary of a circuit, for small-register checks.
pub fn circuit_unitary(c: &Circuit) -> Result<nalgebra::DMatrix<Complex64>> {
    let d = 1usize << c.n_qubits;
    let mut u = nalgebra::DMatrix::zeros(d, d);
    for k in 0..d {
        let mut e = StateVector::zero(c.n_qubits);
        e.amplitudes[0] = Complex64::new(0.0, 0.0);
        e.amplitudes[k] = Complex64::new(1.0, 0.0);
        let out = apply_circuit(&e, c)?;
        for (r, a) in out.amplitudes.iter().enumerate() {
            u[(r, k)] = *a;
        }
    }
    Ok(u)
}

/// Max elementwise distance between unitaries after removing a global phase.
pub fn phase_distance(a: &nalgebra::DMatrix<Complex64>, b: &nalgebra::DMatrix<Complex64>) -> f64 {
    let (mut best, mut idx) = (0.0, 0);
    for (k, z) in b.iter().enumerate() {
        if z.norm() > best {
            best = z.norm();
            idx = k;
        }
    }
    if best == 0.0 {
        return a.camax();
    }
    let ph = a.iter().nth(idx).copied().unwrap_or_default() / b.iter().nth(idx).copied().unwrap();
    let ph = ph / ph.norm();
    (a - b * ph).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::PauliString;

    fn expm_pauli(label: &str, angle: f64) -> nalgebra::DMatrix<Complex64> {
        // exp(-i angle P) = cos I - i sin P
        let p = PauliString::parse(label).unwrap().to_matrix();
        let d = p.nrows();
        nalgebra::DMatrix::<Complex64>::identity(d, d) * Complex64::new(angle.cos(), 0.0)
            - p * Complex64::new(0.0, angle.sin())
    }

    #[test]
    fn single_qubit_conventions() {
        let a = 0.37;
        for (kind, label) in [(GateKind::Rx, "X"), (GateKind::Ry, "Y"), (GateKind::Rz, "Z")] {
            let c = Circuit { n_qubits: 1, gates: vec![Gate { kind, qubits: vec![0], angle: a }] };
            let u = circuit_unitary(&c).unwrap();
            assert!((u - expm_pauli(label, a / 2.0)).camax() < 1e-14);
        }
        let c = Circuit { n_qubits: 2, gates: vec![Gate::rxx(0, 1, a)] };
        assert!((circuit_unitary(&c).unwrap() - expm_pauli("XX", a)).camax() < 1e-14);
    }

    #[test]
    fn zz_decomposition() {
        for angle in [0.0, PI / 8.0, -1.1] {
            let c = Circuit { n_qubits: 2, gates: decompose_zz(0, 1, angle) };
            let u = circuit_unitary(&c).unwrap();
            assert!(phase_distance(&u, &expm_pauli("ZZ", angle)) < 1e-12);
        }
    }

    #[test]
    fn ms_reduction_cases() {
        assert_eq!(reduce_ms_angle(0.5), (0.5, false));
        let (a, f) = reduce_ms_angle(PI);
        assert!(a.abs() < 1e-15 && !f);
        let (a, f) = reduce_ms_angle(0.6 * PI);
        assert!((a - 0.1 * PI).abs() < 1e-15 && f);
        let (a, f) = reduce_ms_angle(-0.6 * PI);
        assert!((a + 0.1 * PI).abs() < 1e-15 && f);
        assert_eq!(reduce_ms_angle(FRAC_PI_4), (FRAC_PI_4, false));
        let (_, f) = reduce_ms_angle(3.0 * FRAC_PI_4);
        assert!(f);
        let (a, f) = reduce_ms_angle(0.9 * PI + 2.0 * PI);
        assert!((a + 0.1 * PI).abs() < 1e-12 && !f);
    }

    #[test]
    fn text_roundtrip() {
        let mut c = Circuit::new(3);
        c.extend(decompose_zz(0, 2, 0.3));
        c.push(Gate::rz(1, -0.25));
        let back = Circuit::from_text(&c.to_text()).unwrap();
        assert_eq!(back, c);
        assert!(Circuit::from_text("QUBITS 2\nRXX 0 0 0.1\n").is_err());
        assert!(Circuit::from_text("RX 0 0.1\n").is_err());
    }
}
