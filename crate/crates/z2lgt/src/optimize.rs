//! Projected limited-memory BFGS for box-constrained minimisation.

use std::collections::VecDeque;

#[derive(Clone, Debug)]
pub struct BoxOptions {
    pub max_iter: usize,
    /// Stop once the projected-gradient infinity norm falls below this.
    pub g_tol: f64,
    /// Stop once an accepted step lowers the cost by less than this.
    pub f_tol: f64,
    pub memory: usize,
}

impl Default for BoxOptions {
    fn default() -> Self {
        BoxOptions {
            max_iter: 2000,
            g_tol: 1e-8,
            f_tol: 1e-12,
            memory: 10,
        }
    }
}

#[derive(Clone, Debug)]
pub struct BoxResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Cost after each accepted iterate, starting with the initial point.
    pub trace: Vec<f64>,
    /// Set when the objective produced a non-finite value.
    pub aborted: bool,
}

/// Central-difference gradient with step `h`, clamped to the box.
pub fn central_difference<F>(f: &mut F, x: &[f64], h: f64, lower: f64, upper: f64, grad: &mut [f64])
where
    F: FnMut(&[f64]) -> f64,
{
    let mut xp = x.to_vec();
    for i in 0..x.len() {
        let hi = (x[i] + h).min(upper);
        let lo = (x[i] - h).max(lower);
        xp[i] = hi;
        let fp = f(&xp);
        xp[i] = lo;
        let fm = f(&xp);
        xp[i] = x[i];
        grad[i] = (fp - fm) / (hi - lo);
    }
}

fn project(x: &mut [f64], lower: f64, upper: f64) {
    for v in x {
        *v = v.clamp(lower, upper);
    }
}

fn projected_gradient_norm(x: &[f64], g: &[f64], lower: f64, upper: f64) -> f64 {
    x.iter()
        .zip(g)
        .map(|(&xi, &gi)| (xi - (xi - gi).clamp(lower, upper)).abs())
        .fold(0.0, f64::max)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Minimise `fg` (value, writing the gradient into its second argument)
/// over the box `[lower, upper]^n` starting from `x0`.
pub fn minimize_box<F>(mut fg: F, x0: &[f64], lower: f64, upper: f64, opts: &BoxOptions) -> BoxResult
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    let n = x0.len();
    let mut x = x0.to_vec();
    project(&mut x, lower, upper);
    let mut g = vec![0.0; n];
    let mut f = fg(&x, &mut g);
    let mut trace = vec![f];
    let result = |x: Vec<f64>, f: f64, it: usize, conv: bool, trace: Vec<f64>, aborted: bool| BoxResult {
        x,
        value: f,
        iterations: it,
        converged: conv,
        trace,
        aborted,
    };
    if !f.is_finite() || g.iter().any(|v| !v.is_finite()) {
        return result(x, f, 0, false, trace, true);
    }
    let mut mem: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
    let mut xn = vec![0.0; n];
    let mut gn = vec![0.0; n];
    for it in 0..opts.max_iter {
        if projected_gradient_norm(&x, &g, lower, upper) < opts.g_tol {
            return result(x, f, it, true, trace, false);
        }
        // variables pinned at a bound with the gradient pushing outward
        let free: Vec<bool> = (0..n)
            .map(|i| !((x[i] <= lower && g[i] > 0.0) || (x[i] >= upper && g[i] < 0.0)))
            .collect();
        let mut d: Vec<f64> = (0..n).map(|i| if free[i] { -g[i] } else { 0.0 }).collect();
        if !mem.is_empty() {
            let mut alpha = Vec::with_capacity(mem.len());
            for (s, y, rho) in mem.iter().rev() {
                let a = rho * dot(s, &d);
                for i in 0..n {
                    d[i] -= a * y[i];
                }
                alpha.push(a);
            }
            let (s, y, _) = mem.back().unwrap();
            let gamma = dot(s, y) / dot(y, y);
            for v in d.iter_mut() {
                *v *= gamma;
            }
            for ((s, y, rho), a) in mem.iter().zip(alpha.iter().rev()) {
                let b = rho * dot(y, &d);
                for i in 0..n {
                    d[i] += (a - b) * s[i];
                }
            }
            for i in 0..n {
                if !free[i] {
                    d[i] = 0.0;
                }
            }
        }
        if dot(&d, &g) >= 0.0 {
            mem.clear();
            d = (0..n).map(|i| if free[i] { -g[i] } else { 0.0 }).collect();
        }
        // first step of steepest descent is scaled to a unit move
        let mut step = if mem.is_empty() {
            let dn = d.iter().map(|v| v.abs()).fold(0.0, f64::max);
            if dn > 0.0 {
                (1.0 / dn).min(1.0)
            } else {
                1.0
            }
        } else {
            1.0
        };
        let mut accepted = false;
        let mut fnew = f;
        for _ in 0..60 {
            for i in 0..n {
                xn[i] = (x[i] + step * d[i]).clamp(lower, upper);
            }
            let moved: Vec<f64> = (0..n).map(|i| xn[i] - x[i]).collect();
            let decrease = dot(&g, &moved);
            fnew = fg(&xn, &mut gn);
            if !fnew.is_finite() {
                step *= 0.5;
                continue;
            }
            if fnew <= f + 1e-4 * decrease && fnew <= f {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            if !mem.is_empty() {
                mem.clear();
                continue;
            }
            // no descent possible along the projected gradient
            return result(x, f, it, f.is_finite(), trace, false);
        }
        if gn.iter().any(|v| !v.is_finite()) {
            return result(x, f, it, false, trace, true);
        }
        let s: Vec<f64> = (0..n).map(|i| xn[i] - x[i]).collect();
        let y: Vec<f64> = (0..n).map(|i| gn[i] - g[i]).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() && sy > 0.0 {
            if mem.len() == opts.memory {
                mem.pop_front();
            }
            mem.push_back((s, y, 1.0 / sy));
        }
        let change = f - fnew;
        std::mem::swap(&mut x, &mut xn);
        std::mem::swap(&mut g, &mut gn);
        f = fnew;
        trace.push(f);
        if change < opts.f_tol {
            return result(x, f, it + 1, true, trace, false);
        }
    }
    let conv = projected_gradient_norm(&x, &g, lower, upper) < opts.g_tol;
    result(x, f, opts.max_iter, conv, trace, false)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rosenbrock(x: &[f64], g: &mut [f64]) -> f64 {
        let (a, b) = (x[0], x[1]);
        g[0] = -2.0 * (1.0 - a) - 400.0 * a * (b - a * a);
        g[1] = 200.0 * (b - a * a);
        (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2)
    }

    #[test]
    fn rosenbrock_unconstrained() {
        let r = minimize_box(rosenbrock, &[-1.2, 1.0], -5.0, 5.0, &BoxOptions { f_tol: 0.0, ..Default::default() });
        assert!(r.converged);
        assert!((r.x[0] - 1.0).abs() < 1e-6 && (r.x[1] - 1.0).abs() < 1e-6, "{:?}", r.x);
        assert!(r.trace.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn active_bound() {
        // minimum of (x-3)^2 + (y+1)^2 on [-2, 2]^2 is (2, -1)
        let f = |x: &[f64], g: &mut [f64]| {
            g[0] = 2.0 * (x[0] - 3.0);
            g[1] = 2.0 * (x[1] + 1.0);
            (x[0] - 3.0).powi(2) + (x[1] + 1.0).powi(2)
        };
        let r = minimize_box(f, &[0.0, 0.0], -2.0, 2.0, &BoxOptions::default());
        assert!(r.converged);
        assert!((r.x[0] - 2.0).abs() < 1e-10 && (r.x[1] + 1.0).abs() < 1e-6);
    }

    #[test]
    fn nan_aborts() {
        let f = |_: &[f64], _: &mut [f64]| f64::NAN;
        let r = minimize_box(f, &[0.0], -1.0, 1.0, &BoxOptions::default());
        assert!(r.aborted && !r.converged);
    }

    #[test]
    fn finite_difference_matches() {
        let mut f = |x: &[f64]| x[0].sin() * x[1].exp();
        let mut g = [0.0; 2];
        central_difference(&mut f, &[0.3, -0.2], 1e-6, -10.0, 10.0, &mut g);
        assert!((g[0] - 0.3f64.cos() * (-0.2f64).exp()).abs() < 1e-8);
        assert!((g[1] - 0.3f64.sin() * (-0.2f64).exp()).abs() < 1e-8);
    }
}
