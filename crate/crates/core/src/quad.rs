//! Gauss–Legendre rules, polynomial extrapolation to zero and a bracketed
//! minimizer. Small enough that pulling in a crate is not worth it.

use std::f64::consts::PI;

use crate::linalg::C64;

/// Gauss–Legendre nodes and weights on [-1, 1] (Newton on P_n).
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Gauss–Legendre rule mapped to [a, b].
pub fn gauss_legendre_on(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(n);
    let h = 0.5 * (b - a);
    let m = 0.5 * (b + a);
    (x.iter().map(|t| m + h * t).collect(), w.iter().map(|t| h * t).collect())
}

/// Value at h = 0 of the interpolating polynomial through (h_i, y_i)
/// (Neville). Used for Richardson extrapolation on irregular step sequences.
pub fn extrapolate_to_zero(h: &[f64], y: &[C64]) -> C64 {
    assert_eq!(h.len(), y.len());
    let mut p = y.to_vec();
    let n = h.len();
    for m in 1..n {
        for i in 0..n - m {
            p[i] = (p[i] * h[i + m] - p[i + 1] * h[i]) / (h[i + m] - h[i]);
        }
    }
    p[0]
}

/// Golden-section minimization of a unimodal function on [a, b].
pub fn golden_min<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64, iters: usize, xtol: f64) -> (f64, f64, bool) {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..iters {
        if (b - a).abs() <= xtol * (1.0 + a.abs().max(b.abs())) {
            let x = 0.5 * (a + b);
            return (x, f(x), true);
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x), (b - a).abs() <= xtol * (1.0 + a.abs().max(b.abs())))
}

/// Least-squares slope of log|y| against log h.
pub fn loglog_slope(h: &[f64], y: &[f64]) -> f64 {
    let xs: Vec<f64> = h.iter().map(|v| v.ln()).collect();
    let ys: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::re;

    #[test]
    fn gl_integrates_polynomials_exactly() {
        let (x, w) = gauss_legendre_on(5, 0.0, 2.0);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(9)).sum();
        assert!((s - 2f64.powi(10) / 10.0).abs() < 1e-11);
    }

    #[test]
    fn neville_recovers_quadratic() {
        let h = [1e-2, 3e-3, 1e-3];
        let y: Vec<C64> = h.iter().map(|h| re(2.0 + 3.0 * h - h * h)).collect();
        assert!((extrapolate_to_zero(&h, &y) - re(2.0)).norm() < 1e-13);
    }

    #[test]
    fn golden_finds_v_shaped_minimum() {
        let (x, fx, ok) = golden_min(|x| (x - 0.3).abs(), 0.0, 1.0, 200, 1e-15);
        assert!(ok && (x - 0.3).abs() < 1e-14 && fx < 1e-14);
    }
}
