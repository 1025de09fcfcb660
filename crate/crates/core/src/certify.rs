//! Sup-norm certificates over all of ℝⁿ: grid maximum plus Lipschitz slack
//! inside a ball, an analytic decay bound outside it.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// |f(x)| ≤ c / (1 + ‖x − center‖^exponent) + floor for ‖x − center‖ ≥ inner_radius.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailBound {
    pub c: f64,
    pub exponent: f64,
    pub inner_radius: f64,
    #[serde(default)]
    pub floor: f64,
}

impl TailBound {
    pub fn new(c: f64, exponent: f64, inner_radius: f64) -> Self {
        TailBound { c, exponent, inner_radius, floor: 0.0 }
    }

    /// A function that vanishes identically outside `inner_radius`.
    pub fn vanishing(inner_radius: f64) -> Self {
        TailBound { c: 0.0, exponent: 1.0, inner_radius, floor: 0.0 }
    }

    pub fn with_floor(mut self, floor: f64) -> Self {
        self.floor = floor;
        self
    }

    pub fn at(&self, r: f64) -> f64 {
        self.c / (1.0 + r.powf(self.exponent)) + self.floor
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupNormCertificate {
    pub grid_max: f64,
    #[serde(rename = "slack")]
    pub lipschitz_slack: f64,
    #[serde(rename = "tail")]
    pub tail_bound: f64,
    pub total: f64,
    #[serde(rename = "r")]
    pub domain_radius: f64,
    #[serde(rename = "h")]
    pub grid_step: f64,
}

fn unit_dim(net: &crate::Network) -> f64 {
    net.input_dim() as f64
}

impl SupNormCertificate {
    pub fn exact_zero() -> Self {
        SupNormCertificate {
            grid_max: 0.0,
            lipschitz_slack: 0.0,
            tail_bound: 0.0,
            total: 0.0,
            domain_radius: 0.0,
            grid_step: 0.0,
        }
    }

    /// Floating-point evaluation allowance for a construction that is exact in real arithmetic.
    /// Valid for one-layer networks on |x|∞ ≤ radius, against a target bounded by `target_sup`.
    pub fn rounding(net: &crate::Network, radius: f64, target_sup: f64) -> Self {
        let u = f64::EPSILON;
        let mut acc = 0.0;
        let mut terms = 1.0;
        for layer in net.layers() {
            let phi0 = layer.activation.eval(0.0).abs();
            let lip = layer.activation.lipschitz();
            for (unit, c) in layer.units.iter().zip(net.out_coeffs()) {
                let z: f64 = unit.w.iter().map(|w| w.abs()).sum::<f64>() * radius + unit.b.abs();
                acc += c.abs() * (phi0 + lip * z);
                terms += 1.0;
            }
        }
        let total = 2.0 * u * ((terms + unit_dim(net) + 3.0) * (acc + net.out_bias().abs()) + 4.0 * target_sup);
        SupNormCertificate {
            grid_max: 0.0,
            lipschitz_slack: 0.0,
            tail_bound: total,
            total,
            domain_radius: radius,
            grid_step: 0.0,
        }
    }

    /// Bound for a sum of independently certified pieces.
    pub fn sum(parts: &[SupNormCertificate]) -> Self {
        let mut out = SupNormCertificate::exact_zero();
        for p in parts {
            out.grid_max += p.grid_max;
            out.lipschitz_slack += p.lipschitz_slack;
            out.tail_bound += p.tail_bound;
            out.total += p.total;
            out.domain_radius = out.domain_radius.max(p.domain_radius);
            out.grid_step = out.grid_step.max(p.grid_step);
        }
        out
    }

    pub fn scaled(&self, s: f64) -> Self {
        let s = s.abs();
        SupNormCertificate {
            grid_max: self.grid_max * s,
            lipschitz_slack: self.lipschitz_slack * s,
            tail_bound: self.tail_bound * s,
            total: self.total * s,
            ..*self
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("certificate serializes")
    }
}

/// Uniform grid of step `h` over B_r (origin-centered) in ℝⁿ.
pub fn sup_norm<F>(f: F, n: usize, lipschitz: f64, tail: TailBound, r: f64, h: f64) -> Result<SupNormCertificate>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    if tail.inner_radius > r {
        return Err(Error::InvalidTail { inner: tail.inner_radius, r });
    }
    if n == 0 || !(h > 0.0) || !(r >= 0.0) {
        return Err(Error::InvalidInput("need n ≥ 1, h > 0, r ≥ 0".into()));
    }
    let half_diag = h * (n as f64).sqrt() / 2.0;
    let m = (r / h).ceil() as i64 + 1;
    let reach = (r + half_diag) * (r + half_diag);
    let side = (2 * m + 1) as usize;
    let grid_max = (0..side)
        .into_par_iter()
        .map(|i0| {
            let mut idx = vec![0usize; n];
            idx[0] = i0;
            let mut x = vec![0.0; n];
            let mut best: f64 = 0.0;
            loop {
                let mut r2 = 0.0;
                for (xi, ii) in x.iter_mut().zip(&idx) {
                    *xi = h * (*ii as i64 - m) as f64;
                    r2 += *xi * *xi;
                }
                if r2 <= reach {
                    best = best.max(f(&x).abs());
                }
                // odometer over coordinates 1..n
                let mut k = 1;
                while k < n {
                    idx[k] += 1;
                    if idx[k] < side {
                        break;
                    }
                    idx[k] = 0;
                    k += 1;
                }
                if k >= n {
                    break;
                }
            }
            best
        })
        .reduce(|| 0.0, f64::max);
    let slack = lipschitz * half_diag;
    let tail_v = tail.at(r);
    Ok(SupNormCertificate {
        grid_max,
        lipschitz_slack: slack,
        tail_bound: tail_v,
        total: (grid_max + slack).max(tail_v),
        domain_radius: r,
        grid_step: h,
    })
}

/// 1-D certificate on [−r, r] (around `center`) with a caller-supplied tail value.
pub fn sup_norm_1d<F>(f: F, center: f64, lipschitz: f64, tail_value: f64, r: f64, h: f64) -> SupNormCertificate
where
    F: Fn(f64) -> f64 + Sync,
{
    let n = ((2.0 * r) / h).ceil().max(1.0) as usize;
    let step = 2.0 * r / n as f64;
    let grid_max = (0..=n)
        .into_par_iter()
        .map(|i| f(center - r + step * i as f64).abs())
        .reduce(|| 0.0, f64::max);
    let slack = lipschitz * step / 2.0;
    SupNormCertificate {
        grid_max,
        lipschitz_slack: slack,
        tail_bound: tail_value,
        total: (grid_max + slack).max(tail_value),
        domain_radius: r,
        grid_step: step,
    }
}

/// A 2-D function with local Lipschitz bounds on axis-aligned boxes.
pub trait BlockOracle: Sync {
    fn eval(&self, x: f64, y: f64) -> f64;
    /// Lipschitz constant valid on [x0, x1] × [y0, y1].
    fn lipschitz(&self, x0: f64, x1: f64, y0: f64, y1: f64) -> f64;
}

/// Region covered by the adaptive scan.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Region {
    Disk { cx: f64, cy: f64, r: f64 },
    /// Polar sector of angles [0, angle] around (cx, cy).
    Sector { cx: f64, cy: f64, r: f64, angle: f64 },
}

impl Region {
    fn radius(&self) -> f64 {
        match *self {
            Region::Disk { r, .. } | Region::Sector { r, .. } => r,
        }
    }

    fn bbox(&self) -> (f64, f64, f64, f64) {
        match *self {
            Region::Disk { cx, cy, r } => (cx - r, cx + r, cy - r, cy + r),
            Region::Sector { cx, cy, r, angle } => {
                let mut xs = vec![0.0, r * angle.cos()];
                let mut ys = vec![0.0, r * angle.sin()];
                for k in 1..4 {
                    let t = k as f64 * std::f64::consts::FRAC_PI_2;
                    if t < angle {
                        xs.push(r * t.cos());
                        ys.push(r * t.sin());
                    }
                }
                xs.push(r);
                let fmin = |v: &[f64]| v.iter().copied().fold(f64::INFINITY, f64::min);
                let fmax = |v: &[f64]| v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                (cx + fmin(&xs), cx + fmax(&xs), cy + fmin(&ys), cy + fmax(&ys))
            }
        }
    }

    /// Conservative test whether a box meets the region.
    fn meets(&self, x0: f64, x1: f64, y0: f64, y1: f64) -> bool {
        let (cx, cy, r) = match *self {
            Region::Disk { cx, cy, r } | Region::Sector { cx, cy, r, .. } => (cx, cy, r),
        };
        let dx = (cx - cx.clamp(x0, x1)).abs();
        let dy = (cy - cy.clamp(y0, y1)).abs();
        if dx * dx + dy * dy > r * r {
            return false;
        }
        if let Region::Sector { angle, .. } = *self {
            // box corners' angular span vs [0, angle]
            let inside = x0 <= cx && cx <= x1 && y0 <= cy && cy <= y1;
            if inside {
                return true;
            }
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            let corners = [(x0, y0), (x1, y0), (x0, y1), (x1, y1)];
            let straddles_cut = x1 > cx && y0 < cy && y1 > cy;
            for (x, y) in corners {
                let mut t = (y - cy).atan2(x - cx);
                if straddles_cut {
                    // keep the angle continuous across the positive x-axis
                } else if t < 0.0 {
                    t += 2.0 * std::f64::consts::PI;
                }
                lo = lo.min(t);
                hi = hi.max(t);
            }
            if straddles_cut {
                return true;
            }
            return hi >= 0.0 && lo <= angle;
        }
        true
    }
}

#[derive(Clone, Copy, Debug)]
pub struct AdaptiveOptions {
    /// Per-block slack L_b·h_b/√2 target.
    pub slack_target: f64,
    /// Subdivide when a block would need more grid nodes than this.
    pub max_nodes: usize,
    pub initial_blocks: usize,
    pub max_depth: usize,
}

impl Default for AdaptiveOptions {
    fn default() -> Self {
        AdaptiveOptions { slack_target: 1e-3, max_nodes: 4096, initial_blocks: 16, max_depth: 24 }
    }
}

/// Quadtree certificate: every block gets its own Lipschitz constant and grid.
/// The reported grid_max, slack and h belong to the block attaining the maximum.
pub fn sup_norm_2d_adaptive<O: BlockOracle>(
    oracle: &O,
    region: Region,
    tail: TailBound,
    opts: AdaptiveOptions,
) -> Result<SupNormCertificate> {
    let r = region.radius();
    if tail.inner_radius > r {
        return Err(Error::InvalidTail { inner: tail.inner_radius, r });
    }
    let (bx0, bx1, by0, by1) = region.bbox();
    let side = (bx1 - bx0).max(by1 - by0);
    let nb = opts.initial_blocks.max(1);
    let bs = side / nb as f64;
    let mut work: Vec<(f64, f64, f64, f64, usize)> = Vec::new();
    for i in 0..nb {
        for j in 0..nb {
            let x0 = bx0 + bs * i as f64;
            let y0 = by0 + bs * j as f64;
            work.push((x0, x0 + bs, y0, y0 + bs, 0));
        }
    }
    // (value bound, grid max, slack, h)
    let mut best = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    while !work.is_empty() {
        let results: Vec<std::result::Result<(f64, f64, f64, f64), Vec<(f64, f64, f64, f64, usize)>>> = work
            .par_iter()
            .filter(|b| region.meets(b.0, b.1, b.2, b.3))
            .map(|&(x0, x1, y0, y1, depth)| {
                let l = oracle.lipschitz(x0, x1, y0, y1);
                let w = x1 - x0;
                let cells = if l > 0.0 {
                    let hb = opts.slack_target * std::f64::consts::SQRT_2 / l;
                    (w / hb).ceil().max(1.0)
                } else {
                    1.0
                };
                let nodes = (cells + 1.0) * (cells + 1.0);
                if nodes > opts.max_nodes as f64 && depth < opts.max_depth {
                    let xm = 0.5 * (x0 + x1);
                    let ym = 0.5 * (y0 + y1);
                    return Err(vec![
                        (x0, xm, y0, ym, depth + 1),
                        (xm, x1, y0, ym, depth + 1),
                        (x0, xm, ym, y1, depth + 1),
                        (xm, x1, ym, y1, depth + 1),
                    ]);
                }
                let c = cells as usize;
                let h = w / c as f64;
                let mut gm: f64 = 0.0;
                for i in 0..=c {
                    let x = if i == c { x1 } else { x0 + h * i as f64 };
                    for j in 0..=c {
                        let y = if j == c { y1 } else { y0 + h * j as f64 };
                        gm = gm.max(oracle.eval(x, y).abs());
                    }
                }
                let slack = l * h * std::f64::consts::SQRT_2 / 2.0;
                Ok((gm + slack, gm, slack, h))
            })
            .collect();
        let mut next = Vec::new();
        for r in results {
            match r {
                Ok(v) => {
                    if v.0 > best.0 {
                        best = v;
                    }
                }
                Err(children) => next.extend(children),
            }
        }
        work = next;
    }
    let tail_v = tail.at(r);
    Ok(SupNormCertificate {
        grid_max: best.1,
        lipschitz_slack: best.2,
        tail_bound: tail_v,
        total: best.0.max(tail_v),
        domain_radius: r,
        grid_step: best.3,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub residual: f64,
}

/// Ordinary least squares through (x, y) pairs; residual is the max absolute deviation.
pub fn slope_fit(points: &[(f64, f64)]) -> Result<SlopeFit> {
    if points.len() < 4 {
        return Err(Error::DegenerateData(format!("need at least 4 points, got {}", points.len())));
    }
    if points.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
        return Err(Error::DegenerateData("non-finite coordinate (underflowed value?)".into()));
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx <= 1e-300 {
        return Err(Error::DegenerateData("all abscissae equal".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = points.iter().map(|p| (p.1 - intercept - slope * p.0).abs()).fold(0.0, f64::max);
    Ok(SlopeFit { slope, intercept, residual })
}

/// Halton point in [0,1)^dim.
pub fn halton(index: u64, dim: usize) -> Vec<f64> {
    const PRIMES: [u64; 8] = [2, 3, 5, 7, 11, 13, 17, 19];
    (0..dim)
        .map(|d| {
            let b = PRIMES[d];
            let (mut f, mut r, mut i) = (1.0, 0.0, index + 1);
            while i > 0 {
                f /= b as f64;
                r += f * (i % b) as f64;
                i /= b;
            }
            r
        })
        .collect()
}

/// Quasi-random empirical sup of |f| over ℝⁿ: half the samples uniform in B_r
/// around `center`, half on log-spaced shells out to 2⁴⁰·r.
pub fn empirical_sup<F>(f: F, center: &[f64], r: f64, samples: u64) -> f64
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let n = center.len();
    (0..samples)
        .into_par_iter()
        .map(|i| {
            let u = halton(i / 2, n + 1);
            // direction from the first n coordinates via inverse normal-ish map
            let mut d: Vec<f64> = u[..n].iter().map(|v| (2.0 * v - 1.0).tan().clamp(-1e6, 1e6)).collect();
            if n == 2 {
                let t = 2.0 * std::f64::consts::PI * u[0];
                d = vec![t.cos(), t.sin()];
            }
            let norm = d.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-300);
            let rad = if i % 2 == 0 {
                r * u[n].powf(1.0 / n as f64)
            } else {
                r * 2f64.powf(40.0 * u[n])
            };
            let x: Vec<f64> = d.iter().zip(center).map(|(di, c)| c + rad * di / norm).collect();
            f(&x).abs()
        })
        .reduce(|| 0.0, f64::max)
}
