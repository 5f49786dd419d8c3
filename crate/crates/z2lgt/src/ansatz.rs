//! Commutator-closure ansatz for the entanglement Hamiltonian.

use std::collections::BTreeSet;
use std::fmt;

use crate::error::Result;
use crate::lattice::{build_dual_hamiltonian, symmetry_operators, ModelConfig};
use crate::pauli::PauliString;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Provenance {
    HamiltonianTerm,
    BoundarySymmetry,
    CommutatorDepth1,
    CommutatorDepth2,
}

impl Provenance {
    pub fn tag(self) -> &'static str {
        match self {
            Provenance::HamiltonianTerm => "hamiltonian-term",
            Provenance::BoundarySymmetry => "boundary-symmetry",
            Provenance::CommutatorDepth1 => "commutator-depth-1",
            Provenance::CommutatorDepth2 => "commutator-depth-2",
        }
    }

    pub fn parse(tag: &str) -> Option<Self> {
        [
            Provenance::HamiltonianTerm,
            Provenance::BoundarySymmetry,
            Provenance::CommutatorDepth1,
            Provenance::CommutatorDepth2,
        ]
        .into_iter()
        .find(|p| p.tag() == tag)
    }
}

/// A single Hermitian Pauli string on the subsystem register.
#[derive(Clone, Debug, PartialEq)]
pub struct AnsatzOperator {
    pub string: PauliString,
    pub provenance: Provenance,
}

impl fmt::Display for AnsatzOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.string, self.provenance.tag())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AnsatzOperatorSet {
    pub n_qubits: usize,
    pub operators: Vec<AnsatzOperator>,
}

impl AnsatzOperatorSet {
    pub fn len(&self) -> usize {
        self.operators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.operators.is_empty()
    }

    pub fn from_strings(n_qubits: usize, strings: &[PauliString], provenance: Provenance) -> Self {
        AnsatzOperatorSet {
            n_qubits,
            operators: strings
                .iter()
                .map(|&string| AnsatzOperator { string, provenance })
                .collect(),
        }
    }

    pub fn count(&self, provenance: Provenance) -> usize {
        self.operators.iter().filter(|o| o.provenance == provenance).count()
    }
}

/// Plaquette coordinate of a subsystem qubit; boundary links are assigned
/// to the plaquette they border inside A.
fn plaquette(q: usize, m: usize) -> usize {
    if q == 0 {
        1
    } else if q == m - 1 {
        m - 2
    } else {
        q
    }
}

/// Number of adjacent dual sites spanned by a string.
pub fn dual_span(p: &PauliString) -> usize {
    let m = p.n_qubits;
    let s: Vec<usize> = p.support().into_iter().map(|q| plaquette(q, m)).collect();
    match (s.iter().min(), s.iter().max()) {
        (Some(a), Some(b)) => b - a + 1,
        _ => 0,
    }
}

pub const MAX_DUAL_SPAN: usize = 3;
pub const CLOSURE_DEPTH: usize = 2;

pub fn generate_ansatz(config: &ModelConfig) -> Result<AnsatzOperatorSet> {
    let m = config.subsystem_size();
    let h = build_dual_hamiltonian(config)?;
    let (s1, s2) = symmetry_operators(config)?;
    let syms = [s1.string(m)?, s2.string(m)?];

    let mut ops: Vec<AnsatzOperator> = Vec::new();
    let mut seen = BTreeSet::new();
    let keep = |p: &PauliString| {
        !p.is_identity() && syms.iter().all(|s| s.commutes_with(p)) && dual_span(p) <= MAX_DUAL_SPAN
    };
    for t in &h.terms {
        if let Some(p) = t.term.string(h.n_qubits)?.restrict(m) {
            if keep(&p) && seen.insert(p) {
                ops.push(AnsatzOperator { string: p, provenance: Provenance::HamiltonianTerm });
            }
        }
    }
    for p in syms {
        if seen.insert(p) {
            ops.push(AnsatzOperator { string: p, provenance: Provenance::BoundarySymmetry });
        }
    }
    for depth in 0..CLOSURE_DEPTH {
        let provenance = if depth == 0 {
            Provenance::CommutatorDepth1
        } else {
            Provenance::CommutatorDepth2
        };
        let current: Vec<PauliString> = ops.iter().map(|o| o.string).collect();
        let mut fresh = BTreeSet::new();
        for (i, a) in current.iter().enumerate() {
            for b in &current[i + 1..] {
                // i[A, B] = 2i AB is proportional to the Pauli string AB
                if !a.commutes_with(b) {
                    let (_, c) = a.mul(b);
                    if keep(&c) && !seen.contains(&c) {
                        fresh.insert(c);
                    }
                }
            }
        }
        for p in fresh {
            seen.insert(p);
            ops.push(AnsatzOperator { string: p, provenance });
        }
    }
    Ok(AnsatzOperatorSet { n_qubits: m, operators: ops })
}
