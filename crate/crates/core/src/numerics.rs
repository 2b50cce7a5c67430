//! Small numerical toolkit: deterministic summation, quadrature, bracketing
//! root finders and half-maximum scans.

use num_complex::Complex64;
use std::f64::consts::PI;

/// Pairwise (cascade) summation. The split points depend only on the length,
/// so the result is independent of how callers chunk their work.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const BLOCK: usize = 16;
    if values.len() <= BLOCK {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

pub fn pairwise_sum_complex(values: &[Complex64]) -> Complex64 {
    const BLOCK: usize = 16;
    if values.len() <= BLOCK {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum_complex(&values[..mid]) + pairwise_sum_complex(&values[mid..])
}

/// Trapezoid rule on an arbitrary (sorted) abscissa grid.
pub fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    if x.len() < 2 {
        return 0.0;
    }
    let panels: Vec<f64> = x
        .windows(2)
        .zip(y.windows(2))
        .map(|(xs, ys)| 0.5 * (xs[1] - xs[0]) * (ys[0] + ys[1]))
        .collect();
    pairwise_sum(&panels)
}

/// `n` evenly spaced points covering `[lo, hi]` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let step = (hi - lo) / (n - 1) as f64;
            (0..n)
                .map(|i| if i == n - 1 { hi } else { lo + step * i as f64 })
                .collect()
        }
    }
}

/// Bisection for a sign change of `f` on `[lo, hi]`. Returns `None` when the
/// endpoints do not bracket a root.
pub fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, rel_tol: f64) -> Option<f64> {
    let mut f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo == 0.0 {
        return Some(lo);
    }
    if f_hi == 0.0 {
        return Some(hi);
    }
    if f_lo.signum() == f_hi.signum() || !f_lo.is_finite() || !f_hi.is_finite() {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (hi - lo).abs() <= rel_tol * mid.abs().max(f64::MIN_POSITIVE) {
            return Some(mid);
        }
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return Some(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Full width at half maximum of a sampled single-peaked profile, with
/// linear interpolation at each half-maximum crossing. Returns `None` if the
/// profile does not fall below half maximum on both sides of its peak.
pub fn fwhm_from_samples(x: &[f64], y: &[f64]) -> Option<f64> {
    let (peak_idx, &peak) = y
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))?;
    let half = 0.5 * peak;
    let crossing = |i: usize, j: usize| {
        let t = (half - y[i]) / (y[j] - y[i]);
        x[i] + t * (x[j] - x[i])
    };
    let left = (1..=peak_idx)
        .rev()
        .find(|&i| y[i - 1] < half)
        .map(|i| crossing(i - 1, i))?;
    let right = (peak_idx..y.len() - 1)
        .find(|&i| y[i + 1] < half)
        .map(|i| crossing(i, i + 1))?;
    Some(right - left)
}

/// Gauss-Legendre nodes and weights on [-1, 1], Newton iteration on P_n.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
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
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Which half-range Fourier kernel to apply.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FourierKernel {
    Sin,
    Cos,
}

/// Ooura-Mori double-exponential rule for `int_0^inf f(x) sin(w x) dx` or
/// `int_0^inf f(x) cos(w x) dx`, for slowly decaying `f` and `w > 0`.
///
/// The transform `x = M phi(t) / w` sends the quadrature nodes onto the
/// zeros of the kernel for large `t`, so the oscillatory tail needs no
/// truncation window. Step `h` controls accuracy; 0.05 gives ~1e-12 on
/// rational integrands.
pub fn fourier_half_line<F>(f: F, w: f64, kernel: FourierKernel, h: f64) -> Complex64
where
    F: Fn(f64) -> Complex64,
{
    assert!(w > 0.0, "fourier_half_line needs a positive frequency");
    let m = PI / h;
    let beta = 0.25;
    let alpha = beta / (1.0 + m * (1.0 + m).ln() / (4.0 * PI)).sqrt();
    let s0 = 2.0 + alpha + beta;
    let phi = |t: f64| -> (f64, f64) {
        if t.abs() < 1e-9 {
            return (1.0 / s0, ((alpha - beta) + s0 * s0) / (2.0 * s0 * s0));
        }
        let u = -2.0 * t - alpha * (1.0 - (-t).exp()) - beta * (t.exp() - 1.0);
        let du = -2.0 - alpha * (-t).exp() - beta * t.exp();
        let e = u.exp();
        let one_minus = 1.0 - e;
        if !one_minus.is_finite() || e.is_infinite() {
            return (0.0, 0.0);
        }
        (t / one_minus, (one_minus + t * e * du) / (one_minus * one_minus))
    };
    let offset = match kernel {
        FourierKernel::Sin => 0.0,
        FourierKernel::Cos => -0.5 * h,
    };
    let k_min = (-14.0 / h).floor() as i64;
    let mut terms = Vec::new();
    let mut quiet = 0;
    let mut k = k_min;
    loop {
        let t = k as f64 * h + offset;
        let (p, dp) = phi(t);
        if dp != 0.0 {
            let arg = m * p;
            let trig = match kernel {
                FourierKernel::Sin => arg.sin(),
                FourierKernel::Cos => arg.cos(),
            };
            let term = f(arg / w) * (trig * dp);
            if t > 4.0 {
                let scale = terms
                    .iter()
                    .map(|c: &Complex64| c.norm())
                    .fold(0.0_f64, f64::max);
                if term.norm() <= 1e-17 * scale {
                    quiet += 1;
                } else {
                    quiet = 0;
                }
            }
            terms.push(term);
        }
        if quiet >= 8 || t > 60.0 {
            break;
        }
        k += 1;
    }
    pairwise_sum_complex(&terms) * (m / w * h)
}

/// `int_{-inf}^{inf} f(x) e^{i tau x} dx` for a complex integrand decaying at
/// least as fast as 1/x. Even and odd parts go through the cosine and sine
/// double-exponential rules; `tau == 0` uses Gauss-Legendre on a finite core
/// plus an algebraic map of the tails.
pub fn fourier_full_line<F>(f: F, tau: f64, core_half_width: f64) -> Complex64
where
    F: Fn(f64) -> Complex64,
{
    if tau == 0.0 {
        return integrate_full_line(&f, core_half_width);
    }
    let w = tau.abs();
    let even = |x: f64| f(x) + f(-x);
    let odd = |x: f64| f(x) - f(-x);
    let c = fourier_half_line(even, w, FourierKernel::Cos, 0.05);
    let s = fourier_half_line(odd, w, FourierKernel::Sin, 0.05);
    c + Complex64::i() * s * tau.signum()
}

/// `int_{-inf}^{inf} f(x) dx` for `f` decaying at least as 1/x^2: composite
/// Gauss-Legendre on `[-X, X]` and the substitution `x = X/u` beyond.
pub fn integrate_full_line<F>(f: &F, core_half_width: f64) -> Complex64
where
    F: Fn(f64) -> Complex64,
{
    let (nodes, weights) = gauss_legendre(32);
    let panels = 64;
    let x_max = core_half_width;
    let width = 2.0 * x_max / panels as f64;
    let mut parts = Vec::with_capacity(panels * nodes.len() + 2 * nodes.len());
    for p in 0..panels {
        let a = -x_max + width * p as f64;
        for (z, w) in nodes.iter().zip(&weights) {
            let x = a + 0.5 * width * (z + 1.0);
            parts.push(f(x) * (0.5 * width * w));
        }
    }
    for (z, w) in nodes.iter().zip(&weights) {
        let u = 0.5 * (z + 1.0);
        let x = x_max / u;
        let jac = x_max / (u * u) * 0.5 * w;
        parts.push((f(x) + f(-x)) * jac);
    }
    pairwise_sum_complex(&parts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_matches_naive_on_integers() {
        let v: Vec<f64> = (1..=1000).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&v), 500_500.0);
    }

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let (x, w) = gauss_legendre(8);
        // degree 15 is the maximum exact degree for 8 points
        let integral: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(14)).sum();
        assert!((integral - 2.0 / 15.0).abs() < 1e-14);
        let total: f64 = w.iter().sum();
        assert!((total - 2.0).abs() < 1e-14);
    }

    #[test]
    fn fourier_cosine_of_lorentzian() {
        // int_0^inf cos(w x)/(1+x^2) dx = pi/2 e^{-w}
        for &w in &[1e-3, 0.1, 1.0, 5.0] {
            let got = fourier_half_line(
                |x| Complex64::new(1.0 / (1.0 + x * x), 0.0),
                w,
                FourierKernel::Cos,
                0.05,
            );
            let want = PI / 2.0 * (-w).exp();
            assert!((got.re - want).abs() < 1e-10, "w={w}: {} vs {want}", got.re);
        }
    }

    #[test]
    fn fourier_sine_of_lorentzian() {
        // int_0^inf x sin(w x)/(1+x^2) dx = pi/2 e^{-w}
        for &w in &[1e-2, 1.0, 4.0] {
            let got = fourier_half_line(
                |x| Complex64::new(x / (1.0 + x * x), 0.0),
                w,
                FourierKernel::Sin,
                0.05,
            );
            let want = PI / 2.0 * (-w).exp();
            assert!((got.re - want).abs() < 1e-10);
        }
    }

    #[test]
    fn full_line_at_zero_frequency() {
        let got = fourier_full_line(|x| Complex64::new(1.0 / (1.0 + x * x), 0.0), 0.0, 20.0);
        assert!((got.re - PI).abs() < 1e-12);
    }

    #[test]
    fn fwhm_of_sampled_triangle() {
        let x = linspace(-2.0, 2.0, 401);
        let y: Vec<f64> = x.iter().map(|v| (1.0 - v.abs()).max(0.0)).collect();
        let w = fwhm_from_samples(&x, &y).unwrap();
        assert!((w - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bisect_finds_sqrt2() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-15).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-14);
        assert!(bisect(|x| x * x + 1.0, -1.0, 1.0, 1e-12).is_none());
    }
}
