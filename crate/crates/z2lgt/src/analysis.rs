//! Entanglement spectra and their level statistics.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::lattice::sector_indices;
use crate::state::{hermitian_eigen, DensityMatrix};

pub const DEFAULT_CUTOFF: f64 = 1e-15;
pub const EGRD_BINS: usize = 12;

#[derive(Clone, Debug, PartialEq)]
pub struct EntanglementSpectrum {
    /// Ascending `xi = -ln p` per sector (index `s - 1`).
    pub sectors: Vec<Vec<f64>>,
    pub effective_rank: Vec<usize>,
    pub total_rank: usize,
    pub cutoff_used: f64,
}

impl EntanglementSpectrum {
    pub fn levels(&self, n: usize) -> Vec<Vec<f64>> {
        self.sectors.iter().map(|s| s.iter().take(n).copied().collect()).collect()
    }
}

/// Sector-resolved spectrum of `rho`; probabilities below `cutoff` are dropped.
/// A cutoff of zero keeps every strictly positive probability.
pub fn entanglement_spectrum(rho: &DensityMatrix, cutoff: f64) -> Result<EntanglementSpectrum> {
    if !(0.0..1.0).contains(&cutoff) {
        return Err(Error::InvalidArgument(format!("cutoff {cutoff} outside [0, 1)")));
    }
    let mut sectors = Vec::with_capacity(4);
    for idx in sector_indices(rho.n_qubits) {
        let (p, _) = hermitian_eigen(&rho.block(&idx));
        let mut xi: Vec<f64> = p
            .iter()
            .filter(|&&x| x >= cutoff && x > 0.0)
            .map(|x| -x.ln())
            .collect();
        xi.sort_by(f64::total_cmp);
        sectors.push(xi);
    }
    let effective_rank: Vec<usize> = sectors.iter().map(Vec::len).collect();
    Ok(EntanglementSpectrum {
        total_rank: effective_rank.iter().sum(),
        effective_rank,
        sectors,
        cutoff_used: cutoff,
    })
}

/// Consecutive-gap ratios; both gaps zero counts as `r = 1`.
pub fn gap_ratios(xi: &[f64]) -> Vec<f64> {
    if xi.len() < 3 {
        return Vec::new();
    }
    xi.windows(3)
        .map(|w| {
            let (d0, d1) = ((w[1] - w[0]).abs(), (w[2] - w[1]).abs());
            let hi = d0.max(d1);
            if hi == 0.0 {
                1.0
            } else {
                d0.min(d1) / hi
            }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct Egrd {
    pub bin_centers: Vec<f64>,
    pub density: Vec<f64>,
    pub mean: f64,
    pub count: usize,
}

pub fn egrd(pool: &[f64]) -> Result<Egrd> {
    if pool.is_empty() {
        return Err(Error::InvalidArgument("empty gap-ratio pool".into()));
    }
    let w = 1.0 / EGRD_BINS as f64;
    let mut counts = vec![0usize; EGRD_BINS];
    for &r in pool {
        let b = ((r / w).floor() as usize).min(EGRD_BINS - 1);
        counts[b] += 1;
    }
    let n = pool.len() as f64;
    Ok(Egrd {
        bin_centers: (0..EGRD_BINS).map(|b| (b as f64 + 0.5) * w).collect(),
        density: counts.iter().map(|&c| c as f64 / (n * w)).collect(),
        mean: pool.iter().sum::<f64>() / n,
        count: pool.len(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RmtKind {
    Poisson,
    Goe,
    Gue,
}

impl RmtKind {
    pub fn name(self) -> &'static str {
        match self {
            RmtKind::Poisson => "poisson",
            RmtKind::Goe => "goe",
            RmtKind::Gue => "gue",
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct ReferenceDistribution {
    pub kind: RmtKind,
    norm: f64,
    pub mean: f64,
}

fn surmise_raw(kind: RmtKind, r: f64) -> f64 {
    match kind {
        RmtKind::Poisson => 2.0 / (1.0 + r).powi(2),
        RmtKind::Goe | RmtKind::Gue => {
            let b = if kind == RmtKind::Goe { 1.0 } else { 2.0 };
            (r + r * r).powf(b) / (1.0 + r + r * r).powf(1.0 + 1.5 * b)
        }
    }
}

fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for k in 1..n {
        s += f(a + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

impl ReferenceDistribution {
    pub fn density(&self, r: f64) -> f64 {
        if !(0.0..=1.0).contains(&r) {
            return 0.0;
        }
        surmise_raw(self.kind, r) / self.norm
    }
}

/// Surmise densities on the folded ratio `r in [0, 1]`.
pub fn reference_distribution(kind: RmtKind) -> ReferenceDistribution {
    let norm = simpson(|r| surmise_raw(kind, r), 0.0, 1.0, 20_000);
    let mean = simpson(|r| r * surmise_raw(kind, r), 0.0, 1.0, 20_000) / norm;
    ReferenceDistribution { kind, norm, mean }
}

/// Gap ratios sampled from random spectra: independent uniform levels for
/// Poisson, dense Gaussian matrices for GOE/GUE.
pub fn sample_ensemble_ratios<R: Rng + ?Sized>(kind: RmtKind, n_matrices: usize, dim: usize, rng: &mut R) -> Vec<f64> {
    let mut out = Vec::with_capacity(n_matrices * dim);
    for _ in 0..n_matrices {
        let mut levels: Vec<f64> = match kind {
            RmtKind::Poisson => (0..dim).map(|_| rng.random::<f64>()).collect(),
            RmtKind::Goe => {
                let a = DMatrix::<f64>::from_fn(dim, dim, |_, _| StandardNormal.sample(rng));
                let h = &a + a.transpose();
                h.symmetric_eigenvalues().iter().copied().collect()
            }
            RmtKind::Gue => {
                let a = DMatrix::<Complex64>::from_fn(dim, dim, |_, _| {
                    Complex64::new(StandardNormal.sample(rng), StandardNormal.sample(rng))
                });
                let h = &a + a.adjoint();
                h.symmetric_eigenvalues().iter().copied().collect()
            }
        };
        levels.sort_by(f64::total_cmp);
        out.extend(gap_ratios(&levels));
    }
    out
}

/// 200 log-spaced points on `[1e-2, 1e3]`.
pub fn default_theta_grid() -> Vec<f64> {
    log_grid(1e-2, 1e3, 200)
}

pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|k| (a + (b - a) * k as f64 / (n - 1) as f64).exp())
        .collect()
}

/// `|sum exp(i theta xi)|^2 / R^2` for one sector.
pub fn esff_sector(xi: &[f64], theta: &[f64]) -> Option<Vec<f64>> {
    if xi.is_empty() {
        return None;
    }
    let r2 = (xi.len() * xi.len()) as f64;
    Some(
        theta
            .iter()
            .map(|&t| {
                let (mut c, mut s) = (0.0, 0.0);
                for &x in xi {
                    let (si, co) = (t * x).sin_cos();
                    c += co;
                    s += si;
                }
                (c * c + s * s) / r2
            })
            .collect(),
    )
}

/// Per-sector ESFF curves; empty sectors give `None`.
pub fn esff(spectrum: &EntanglementSpectrum, theta: &[f64]) -> Vec<Option<Vec<f64>>> {
    spectrum.sectors.iter().map(|xi| esff_sector(xi, theta)).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct RampFit {
    pub kappa: f64,
    pub uncertainty: f64,
    /// False when the curve is not increasing across the window.
    pub monotone: bool,
    pub window: (f64, f64),
}

fn slope(theta: &[f64], f: &[f64], lo: f64, hi: f64) -> Option<f64> {
    let pts: Vec<(f64, f64)> = theta
        .iter()
        .zip(f)
        .filter(|(&t, &v)| t >= lo && t <= hi && v > 0.0)
        .map(|(&t, &v)| (t.ln(), v.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Log-log slope over `window`; the uncertainty is the largest deviation
/// when either endpoint moves by +/-25%.
pub fn fit_ramp(theta: &[f64], f: &[f64], window: (f64, f64)) -> Result<RampFit> {
    let (lo, hi) = window;
    let kappa = slope(theta, f, lo, hi)
        .ok_or_else(|| Error::InvalidArgument("fewer than two points in ramp window".into()))?;
    let mut spread: f64 = 0.0;
    for (a, b) in [(0.75, 1.0), (1.25, 1.0), (1.0, 0.75), (1.0, 1.25)] {
        if let Some(k) = slope(theta, f, lo * a, hi * b) {
            spread = spread.max((k - kappa).abs());
        }
    }
    let inside: Vec<f64> = theta
        .iter()
        .zip(f)
        .filter(|(&t, _)| t >= lo && t <= hi)
        .map(|(_, &v)| v)
        .collect();
    let monotone = inside.windows(2).all(|w| w[1] >= w[0]);
    Ok(RampFit { kappa, uncertainty: spread, monotone, window })
}

#[derive(Clone, Debug, PartialEq)]
pub struct EntropyDecomposition {
    pub s_vn: f64,
    pub s_symmetry: f64,
    pub s_distillable: f64,
    pub weights: [f64; 4],
}

fn shannon(p: impl IntoIterator<Item = f64>) -> f64 {
    p.into_iter().filter(|&x| x > 0.0).map(|x| -x * x.ln()).sum()
}

pub fn entropy_decomposition(rho: &DensityMatrix) -> Result<EntropyDecomposition> {
    let s_vn = shannon(rho.eigenvalues());
    let mut weights = [0.0; 4];
    let mut s_dist = 0.0;
    for (s, idx) in sector_indices(rho.n_qubits).iter().enumerate() {
        let block = rho.block(idx);
        let p = block.trace().re;
        weights[s] = p;
        if p > 0.0 {
            let (ev, _) = hermitian_eigen(&(block / Complex64::new(p, 0.0)));
            s_dist += p * shannon(ev.iter().copied());
        }
    }
    Ok(EntropyDecomposition {
        s_vn,
        s_symmetry: shannon(weights),
        s_distillable: s_dist,
        weights,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Regime {
    I,
    II,
    III,
}

impl Regime {
    pub fn name(self) -> &'static str {
        match self {
            Regime::I => "I",
            Regime::II => "II",
            Regime::III => "III",
        }
    }
}

/// Regime boundaries in units of `g t`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RegimeWindows {
    pub one_end: f64,
    pub two_end: f64,
    pub three_end: f64,
}

impl Default for RegimeWindows {
    fn default() -> Self {
        RegimeWindows { one_end: 1.8, two_end: 5.0, three_end: 10.0 }
    }
}

impl RegimeWindows {
    pub fn classify(&self, gt: f64) -> Option<Regime> {
        if gt < 0.0 {
            None
        } else if gt < self.one_end {
            Some(Regime::I)
        } else if gt < self.two_end {
            Some(Regime::II)
        } else if gt <= self.three_end + 1e-12 {
            Some(Regime::III)
        } else {
            None
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gap_ratio_examples() {
        assert_eq!(gap_ratios(&[0.0, 1.0, 3.0]), vec![0.5]);
        assert_eq!(gap_ratios(&[0.0, 1.0, 1.0, 3.0]), vec![0.0, 0.0]);
        assert_eq!(gap_ratios(&[0.0, 1.0, 2.0, 3.0]), vec![1.0, 1.0]);
        assert!(gap_ratios(&[0.0, 1.0]).is_empty());
        assert_eq!(gap_ratios(&[2.0, 2.0, 2.0]), vec![1.0]);
    }

    #[test]
    fn reference_means() {
        let p = reference_distribution(RmtKind::Poisson);
        assert!((p.mean - (2.0 * 2f64.ln() - 1.0)).abs() < 1e-8);
        let goe = reference_distribution(RmtKind::Goe);
        let gue = reference_distribution(RmtKind::Gue);
        assert!((goe.mean - 0.536).abs() < 0.001, "{}", goe.mean);
        assert!((gue.mean - 0.603).abs() < 0.005, "{}", gue.mean);
    }

    #[test]
    fn esff_two_levels() {
        let a = 0.8;
        let th = [0.0, 0.5, 2.0];
        let f = esff_sector(&[0.0, a], &th).unwrap();
        for (t, v) in th.iter().zip(f) {
            assert!((v - (1.0 + (a * t).cos()) / 2.0).abs() < 1e-14);
        }
        assert!(esff_sector(&[], &th).is_none());
    }

    #[test]
    fn egrd_identical_values() {
        let e = egrd(&[0.3; 10]).unwrap();
        assert_eq!(e.density.iter().filter(|&&d| d > 0.0).count(), 1);
        assert!((e.mean - 0.3).abs() < 1e-15);
        let total: f64 = e.density.iter().sum::<f64>() / EGRD_BINS as f64;
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ramp_of_power_law() {
        let th = default_theta_grid();
        let f: Vec<f64> = th.iter().map(|t| 0.01 * t.powf(0.6)).collect();
        let r = fit_ramp(&th, &f, (2.0, 8.0)).unwrap();
        assert!((r.kappa - 0.6).abs() < 1e-6 && r.uncertainty < 1e-6 && r.monotone);
        let c = vec![0.25; th.len()];
        assert!(fit_ramp(&th, &c, (2.0, 8.0)).unwrap().kappa.abs() < 1e-6);
    }

    #[test]
    fn maximally_mixed_decomposition() {
        let d = entropy_decomposition(&DensityMatrix::maximally_mixed(6)).unwrap();
        assert!((d.s_symmetry - 4f64.ln()).abs() < 1e-12);
        assert!((d.s_distillable - 16f64.ln()).abs() < 1e-12);
        assert!((d.s_vn - 64f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn regime_windows() {
        let w = RegimeWindows::default();
        assert_eq!(w.classify(0.0), Some(Regime::I));
        assert_eq!(w.classify(1.8), Some(Regime::II));
        assert_eq!(w.classify(5.0), Some(Regime::III));
        assert_eq!(w.classify(10.0), Some(Regime::III));
        assert_eq!(w.classify(10.5), None);
    }
}
