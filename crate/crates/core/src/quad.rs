//! Adaptive Gauss–Kronrod quadrature.

use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// One 15-point Kronrod panel: (estimate, error estimate).
pub fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let hl = 0.5 * (b - a);
    let fc = f(c);
    let mut rk = fc * WGK[7];
    let mut rg = fc * WG[3];
    for j in 0..7 {
        let x = hl * XGK[j];
        let s = f(c - x) + f(c + x);
        rk += WGK[j] * s;
        if j % 2 == 1 {
            rg += WG[j / 2] * s;
        }
    }
    (rk * hl, ((rk - rg) * hl).abs())
}

struct Panel {
    a: f64,
    b: f64,
    val: f64,
    err: f64,
}

impl PartialEq for Panel {
    fn eq(&self, o: &Self) -> bool {
        self.err == o.err
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Panel {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        self.err.total_cmp(&o.err)
    }
}

/// Integrate over [a, b] split at `breaks`, bisecting the worst panel until the
/// summed error estimate is below `tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, breaks: &[f64], tol: f64, max_panels: usize) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let mut pts = vec![lo];
    let mut inner: Vec<f64> = breaks.iter().copied().filter(|x| *x > lo && *x < hi).collect();
    inner.sort_by(f64::total_cmp);
    inner.dedup();
    pts.extend(inner);
    pts.push(hi);
    let mut heap = BinaryHeap::new();
    let (mut total, mut err) = (0.0, 0.0);
    for w in pts.windows(2) {
        let (v, e) = gk15(&f, w[0], w[1]);
        total += v;
        err += e;
        heap.push(Panel { a: w[0], b: w[1], val: v, err: e });
    }
    while err > tol {
        if heap.len() >= max_panels {
            return Err(Error::QuadratureFailure(format!("error estimate {err:.3e} after {max_panels} panels")));
        }
        let p = heap.pop().unwrap();
        let m = 0.5 * (p.a + p.b);
        if m <= p.a || m >= p.b {
            return Err(Error::QuadratureFailure("panel width underflow".into()));
        }
        let (v1, e1) = gk15(&f, p.a, m);
        let (v2, e2) = gk15(&f, m, p.b);
        total += v1 + v2 - p.val;
        err += e1 + e2 - p.err;
        heap.push(Panel { a: p.a, b: m, val: v1, err: e1 });
        heap.push(Panel { a: m, b: p.b, val: v2, err: e2 });
    }
    // re-sum to shed drift from incremental updates
    let total2: f64 = heap.iter().map(|p| p.val).sum();
    let _ = total;
    Ok(sign * total2)
}

/// Composite trapezoid weights on a uniform grid.
pub fn trapezoid_nodes(a: f64, b: f64, n: usize) -> (Vec<f64>, Vec<f64>) {
    let h = (b - a) / n as f64;
    let xs: Vec<f64> = (0..=n).map(|i| a + h * i as f64).collect();
    let mut ws = vec![h; n + 1];
    ws[0] = 0.5 * h;
    ws[n] = 0.5 * h;
    (xs, ws)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomials_and_kinks() {
        let v = integrate(|x| x * x, 0.0, 3.0, &[], 1e-12, 100).unwrap();
        assert!((v - 9.0).abs() < 1e-12);
        let v = integrate(|x: f64| x.abs(), -1.0, 2.0, &[0.0], 1e-12, 100).unwrap();
        assert!((v - 2.5).abs() < 1e-13);
        let v = integrate(|x: f64| x.abs().sqrt(), -1.0, 1.0, &[], 1e-9, 2000).unwrap();
        assert!((v - 4.0 / 3.0).abs() < 1e-8);
        let v = integrate(|x| x, 1.0, 0.0, &[], 1e-12, 10).unwrap();
        assert!((v + 0.5).abs() < 1e-14);
    }

    #[test]
    fn budget_exhaustion_reported() {
        let r = integrate(|x: f64| (1.0 / x).sin(), 1e-6, 1.0, &[], 1e-14, 8);
        assert!(matches!(r, Err(Error::QuadratureFailure(_))));
    }
}
