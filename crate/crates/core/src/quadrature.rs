//! Composite Simpson quadrature with refinement by interval doubling.

use crate::error::{Error, Result};

/// Composite Simpson rule on `n` intervals (`n` rounded up to even).
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = (n.max(2) + 1) & !1;
    let h = (b - a) / n as f64;
    let mut odd = 0.0;
    let mut even = 0.0;
    for k in 1..n {
        let x = a + k as f64 * h;
        if k % 2 == 1 {
            odd += f(x);
        } else {
            even += f(x);
        }
    }
    h / 3.0 * (f(a) + f(b) + 4.0 * odd + 2.0 * even)
}

/// Simpson rule on samples at uniform spacing `h`; an even interval count is
/// required, otherwise the last interval is closed with the trapezoid rule.
pub fn simpson_samples(y: &[f64], h: f64) -> f64 {
    let m = y.len();
    if m < 2 {
        return 0.0;
    }
    let intervals = m - 1;
    let even = intervals - intervals % 2;
    let mut s = 0.0;
    if even >= 2 {
        s += y[0] + y[even];
        for (k, v) in y.iter().enumerate().take(even).skip(1) {
            s += if k % 2 == 1 { 4.0 * v } else { 2.0 * v };
        }
        s *= h / 3.0;
    }
    if even < intervals {
        s += 0.5 * h * (y[intervals - 1] + y[intervals]);
    }
    s
}

#[derive(Debug, Clone, Copy)]
pub struct AdaptiveConfig {
    pub initial_intervals: usize,
    pub rel_tol: f64,
    /// Absolute floor for the stopping test, so integrals near zero terminate.
    pub abs_tol: f64,
    pub max_intervals: usize,
}

impl Default for AdaptiveConfig {
    fn default() -> Self {
        Self {
            initial_intervals: 10_000,
            rel_tol: 1e-9,
            abs_tol: 1e-14,
            max_intervals: 1 << 24,
        }
    }
}

/// Doubles the interval count until successive Simpson estimates agree to `rel_tol`.
pub fn adaptive_simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, cfg: &AdaptiveConfig) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let mut n = cfg.initial_intervals.max(2);
    let mut prev = simpson(&f, a, b, n);
    loop {
        n *= 2;
        let next = simpson(&f, a, b, n);
        if (next - prev).abs() <= cfg.rel_tol * next.abs().max(prev.abs()) + cfg.abs_tol {
            return Ok(next);
        }
        if n >= cfg.max_intervals {
            return Err(Error::ResolutionTooCoarse {
                spacing: (b - a).abs() / n as f64,
                required: (b - a).abs() / cfg.max_intervals as f64,
            });
        }
        prev = next;
    }
}

/// Sine integral `Si(x) = ∫₀ˣ sin t / t dt`.
///
/// Power series for `|x| ≤ 2`, continued fraction for the complex exponential
/// integral beyond.
pub fn sine_integral(x: f64) -> f64 {
    let t = x.abs();
    if t == 0.0 {
        return 0.0;
    }
    let si = if t <= 2.0 {
        let mut sum = 0.0;
        let mut term = t;
        let mut k = 0usize;
        loop {
            let contrib = term / (2 * k + 1) as f64;
            sum += contrib;
            if contrib.abs() < 1e-17 * sum.abs() {
                break;
            }
            k += 1;
            term *= -t * t / ((2 * k) as f64 * (2 * k + 1) as f64);
        }
        sum
    } else {
        use num_complex::Complex64;
        let tiny = 1e-300;
        let mut b = Complex64::new(1.0, t);
        let mut c = Complex64::new(1.0 / tiny, 0.0);
        let mut d = Complex64::new(1.0, 0.0) / b;
        let mut h = d;
        for i in 2..100_000 {
            let a = -((i - 1) as f64).powi(2);
            b += 2.0;
            d = Complex64::new(1.0, 0.0) / (d * a + b);
            c = b + Complex64::new(a, 0.0) / c;
            let del = c * d;
            h *= del;
            if (del - 1.0).norm() < 1e-16 {
                break;
            }
        }
        h *= Complex64::new(t.cos(), -t.sin());
        std::f64::consts::FRAC_PI_2 + h.im
    };
    si.copysign(x)
}
