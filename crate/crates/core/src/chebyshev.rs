//! Chebyshev interpolation on an interval.

use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Chebyshev {
    pub lo: f64,
    pub hi: f64,
    pub coeffs: Vec<f64>,
}

impl Chebyshev {
    /// Interpolate `f` at the d+1 first-kind nodes of [lo, hi].
    pub fn interpolate<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, degree: usize) -> Chebyshev {
        let n = degree + 1;
        let pi = std::f64::consts::PI;
        let vals: Vec<f64> = (0..n)
            .map(|k| {
                let t = ((2 * k + 1) as f64 * pi / (2 * n) as f64).cos();
                f(0.5 * (lo + hi) + 0.5 * (hi - lo) * t)
            })
            .collect();
        let coeffs = (0..n)
            .map(|j| {
                let s: f64 = vals
                    .iter()
                    .enumerate()
                    .map(|(k, v)| v * (j as f64 * (2 * k + 1) as f64 * pi / (2 * n) as f64).cos())
                    .sum();
                if j == 0 {
                    s / n as f64
                } else {
                    2.0 * s / n as f64
                }
            })
            .collect();
        Chebyshev { lo, hi, coeffs }
    }

    /// Clenshaw recurrence; arguments outside [lo, hi] extrapolate the polynomial.
    pub fn eval(&self, x: f64) -> f64 {
        let t = (2.0 * x - self.lo - self.hi) / (self.hi - self.lo);
        let (mut b1, mut b2) = (0.0, 0.0);
        for c in self.coeffs.iter().skip(1).rev() {
            let b0 = 2.0 * t * b1 - b2 + c;
            b2 = b1;
            b1 = b0;
        }
        t * b1 - b2 + self.coeffs.first().copied().unwrap_or(0.0)
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }
}

/// Inverse of a strictly monotone f on (lo, hi) by bisection; `y` clamped to the bracket.
pub fn invert_monotone<F: Fn(f64) -> f64>(f: F, y: f64, mut lo: f64, mut hi: f64) -> f64 {
    let inc = f(hi) >= f(lo);
    for _ in 0..200 {
        let m = 0.5 * (lo + hi);
        if m <= lo || m >= hi {
            break;
        }
        if (f(m) < y) == inc {
            lo = m;
        } else {
            hi = m;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_polynomials() {
        let c = Chebyshev::interpolate(|x| 3.0 * x * x - x + 0.5, -2.0, 5.0, 4);
        for i in 0..20 {
            let x = -2.0 + 7.0 * i as f64 / 19.0;
            assert!((c.eval(x) - (3.0 * x * x - x + 0.5)).abs() < 1e-11);
        }
        assert!(c.coeffs[3].abs() < 1e-12);
    }

    #[test]
    fn smooth_convergence() {
        let e = |d| {
            let c = Chebyshev::interpolate(f64::exp, 0.0, 1.0, d);
            (0..101).map(|i| (c.eval(i as f64 / 100.0) - (i as f64 / 100.0).exp()).abs()).fold(0.0, f64::max)
        };
        assert!(e(12) < 1e-13 && e(4) > e(8));
    }

    #[test]
    fn inverse_tanh() {
        let x = invert_monotone(f64::tanh, 0.5, -30.0, 30.0);
        assert!((x - 0.5f64.atanh()).abs() < 1e-14);
    }
}
