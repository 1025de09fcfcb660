//! Piecewise-linear functions on ℝ given by knots and tail slopes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PwlRepr", into = "PwlRepr")]
pub struct PiecewiseLinear {
    xs: Vec<f64>,
    ys: Vec<f64>,
    left_slope: f64,
    right_slope: f64,
}

#[derive(Serialize, Deserialize)]
struct PwlRepr {
    knots: Vec<[f64; 2]>,
    #[serde(default)]
    left_slope: f64,
    #[serde(default)]
    right_slope: f64,
}

impl TryFrom<PwlRepr> for PiecewiseLinear {
    type Error = Error;
    fn try_from(r: PwlRepr) -> Result<Self> {
        PiecewiseLinear::new(
            r.knots.iter().map(|k| (k[0], k[1])).collect(),
            r.left_slope,
            r.right_slope,
        )
    }
}

impl From<PiecewiseLinear> for PwlRepr {
    fn from(p: PiecewiseLinear) -> Self {
        PwlRepr {
            knots: p.xs.iter().zip(&p.ys).map(|(&x, &y)| [x, y]).collect(),
            left_slope: p.left_slope,
            right_slope: p.right_slope,
        }
    }
}

impl PiecewiseLinear {
    pub fn new(knots: Vec<(f64, f64)>, left_slope: f64, right_slope: f64) -> Result<Self> {
        if knots.is_empty() {
            return Err(Error::InvalidInput("piecewise-linear function needs a knot".into()));
        }
        if knots.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return Err(Error::InvalidInput("knots must be strictly increasing".into()));
        }
        if knots.iter().any(|k| !k.0.is_finite() || !k.1.is_finite())
            || !left_slope.is_finite()
            || !right_slope.is_finite()
        {
            return Err(Error::InvalidInput("non-finite knot data".into()));
        }
        let (xs, ys) = knots.into_iter().unzip();
        Ok(PiecewiseLinear { xs, ys, left_slope, right_slope })
    }

    /// Compactly supported function through `knots`, zero outside.
    pub fn compact(knots: Vec<(f64, f64)>) -> Result<Self> {
        let p = Self::new(knots, 0.0, 0.0)?;
        if p.ys[0] != 0.0 || *p.ys.last().unwrap() != 0.0 {
            return Err(Error::InvalidInput("compact profile must vanish at its end knots".into()));
        }
        Ok(p)
    }

    /// Hat of height 1 on [-s, s].
    pub fn hat(s: f64) -> Self {
        Self::new(vec![(-s, 0.0), (0.0, 1.0), (s, 0.0)], 0.0, 0.0).unwrap()
    }

    /// Ramp from 0 at `lo` to 1 at `hi`, constant outside.
    pub fn ramp(lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![(lo, 0.0), (hi, 1.0)], 0.0, 0.0)
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    pub fn knots(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.xs.iter().copied().zip(self.ys.iter().copied())
    }

    pub fn left_slope(&self) -> f64 {
        self.left_slope
    }

    pub fn right_slope(&self) -> f64 {
        self.right_slope
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x <= self.xs[0] {
            return self.ys[0] + self.left_slope * (x - self.xs[0]);
        }
        if x >= self.xs[n - 1] {
            return self.ys[n - 1] + self.right_slope * (x - self.xs[n - 1]);
        }
        let i = self.xs.partition_point(|&k| k <= x);
        let (x0, x1) = (self.xs[i - 1], self.xs[i]);
        let (y0, y1) = (self.ys[i - 1], self.ys[i]);
        let t = (x - x0) / (x1 - x0);
        y0 + t * (y1 - y0)
    }

    /// Interior segment slopes, left to right.
    pub fn slopes(&self) -> Vec<f64> {
        self.xs
            .windows(2)
            .zip(self.ys.windows(2))
            .map(|(x, y)| (y[1] - y[0]) / (x[1] - x[0]))
            .collect()
    }

    pub fn lipschitz(&self) -> f64 {
        self.slopes()
            .into_iter()
            .chain([self.left_slope, self.right_slope])
            .fold(0.0, |m, s| m.max(s.abs()))
    }

    /// Largest |slope| among pieces meeting [a, b].
    pub fn lipschitz_on(&self, a: f64, b: f64) -> f64 {
        let n = self.xs.len();
        let mut m: f64 = 0.0;
        if a < self.xs[0] {
            m = m.max(self.left_slope.abs());
        }
        if b > self.xs[n - 1] {
            m = m.max(self.right_slope.abs());
        }
        for i in 0..n.saturating_sub(1) {
            if self.xs[i + 1] >= a && self.xs[i] <= b {
                let s = (self.ys[i + 1] - self.ys[i]) / (self.xs[i + 1] - self.xs[i]);
                m = m.max(s.abs());
            }
        }
        m
    }

    pub fn is_compact(&self) -> bool {
        self.left_slope == 0.0
            && self.right_slope == 0.0
            && self.ys[0] == 0.0
            && *self.ys.last().unwrap() == 0.0
    }

    pub fn has_constant_tails(&self) -> bool {
        self.left_slope == 0.0 && self.right_slope == 0.0
    }

    /// max |f| over ℝ, infinite when a tail slope is nonzero.
    pub fn sup_abs(&self) -> f64 {
        if !self.has_constant_tails() {
            return f64::INFINITY;
        }
        self.ys.iter().fold(0.0, |m, y| m.max(y.abs()))
    }

    pub fn support(&self) -> (f64, f64) {
        (self.xs[0], *self.xs.last().unwrap())
    }

    pub fn scaled(&self, c: f64) -> Self {
        PiecewiseLinear {
            xs: self.xs.clone(),
            ys: self.ys.iter().map(|y| c * y).collect(),
            left_slope: c * self.left_slope,
            right_slope: c * self.right_slope,
        }
    }

    /// Exact ∫ f(u) uᵖ du over the knot span for p ∈ {0, 1, 2}.
    pub fn moment(&self, p: u32) -> f64 {
        let mut s = 0.0;
        for i in 0..self.xs.len().saturating_sub(1) {
            let (a, b) = (self.xs[i], self.xs[i + 1]);
            let (ya, yb) = (self.ys[i], self.ys[i + 1]);
            let m = (yb - ya) / (b - a);
            // f = ya + m (u - a) = c0 + m u
            let c0 = ya - m * a;
            let pw = |k: i32| (b.powi(k) - a.powi(k)) / k as f64;
            let k = p as i32;
            s += c0 * pw(k + 1) + m * pw(k + 2);
        }
        s
    }

    /// Exact ∫|f| uᵖ du over the knot span, splitting pieces at sign changes.
    pub fn abs_moment(&self, p: u32) -> f64 {
        let mut pieces = Vec::new();
        for i in 0..self.xs.len().saturating_sub(1) {
            let (a, b) = (self.xs[i], self.xs[i + 1]);
            let (ya, yb) = (self.ys[i], self.ys[i + 1]);
            if ya * yb < 0.0 {
                let z = a + (b - a) * ya / (ya - yb);
                pieces.push(((a, ya.abs()), (z, 0.0)));
                pieces.push(((z, 0.0), (b, yb.abs())));
            } else {
                pieces.push(((a, ya.abs()), (b, yb.abs())));
            }
        }
        let mut s = 0.0;
        for ((a, ya), (b, yb)) in pieces {
            if b <= a {
                continue;
            }
            let m = (yb - ya) / (b - a);
            let c0 = ya - m * a;
            let pw = |k: i32| (b.powi(k) - a.powi(k)) / k as f64;
            let k = p as i32;
            s += c0 * pw(k + 1) + m * pw(k + 2);
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eval_interpolates_and_extends() {
        let p = PiecewiseLinear::new(vec![(0.0, 0.0), (1.0, 2.0)], -1.0, 0.5).unwrap();
        assert_eq!(p.eval(0.5), 1.0);
        assert_eq!(p.eval(-2.0), 2.0);
        assert_eq!(p.eval(3.0), 3.0);
        assert_eq!(p.eval(1.0), 2.0);
    }

    #[test]
    fn hat_moments() {
        let h = PiecewiseLinear::hat(2.0);
        assert!((h.moment(0) - 2.0).abs() < 1e-15);
        assert!((h.moment(2) - 8.0 / 6.0).abs() < 1e-15);
        assert!(h.moment(1).abs() < 1e-15);
    }

    #[test]
    fn abs_moment_splits_sign_changes() {
        let p = PiecewiseLinear::compact(vec![(-1.0, 0.0), (0.0, 1.0), (1.0, -1.0), (2.0, 0.0)]).unwrap();
        // |f| is two unit-height hats of width 1 and 0.5+0.5
        assert!((p.abs_moment(0) - (0.5 + 0.25 + 0.25 + 0.5)).abs() < 1e-15);
    }

    #[test]
    fn rejects_unsorted() {
        assert!(PiecewiseLinear::new(vec![(1.0, 0.0), (0.0, 1.0)], 0.0, 0.0).is_err());
    }

    #[test]
    fn serde_shape() {
        let p = PiecewiseLinear::ramp(0.0, 1.0).unwrap();
        let s = serde_json::to_string(&p).unwrap();
        assert_eq!(s, r#"{"knots":[[0.0,0.0],[1.0,1.0]],"left_slope":0.0,"right_slope":0.0}"#);
        let q: PiecewiseLinear = serde_json::from_str(&s).unwrap();
        assert_eq!(p, q);
    }
}
