//! Wedge functions (g∘P_V)·Π g_j(a_j·x), the f_I subset recursion, the sigmoid
//! algebra helpers and compilation into two-layer networks.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::activation::{Activation, Asymptotics};
use crate::certify::{self, SupNormCertificate, TailBound};
use crate::chebyshev::{invert_monotone, Chebyshev};
use crate::error::{Error, Result};
use crate::lift::{self, Bump, Generator};
use crate::network::Network;
use crate::pwl::PiecewiseLinear;
use crate::radon::{self, CompactTarget};
use crate::synth::expand_pwl;

/// Largest factor count accepted by the subset recursion.
pub const MAX_FACTORS: usize = 12;

/// h_m(x) = h(x − m) with h = clamp(·, 0, 1).
pub fn ramp(m: usize) -> PiecewiseLinear {
    PiecewiseLinear::ramp(m as f64, m as f64 + 1.0).expect("ordered knots")
}

#[inline]
fn h_m(m: usize, x: f64) -> f64 {
    (x - m as f64).clamp(0.0, 1.0)
}

/// Piecewise-linear sigmoid: 0 up to lo, 1 from hi, linear between.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SigmoidFactor {
    pub lo: f64,
    pub hi: f64,
}

impl SigmoidFactor {
    pub fn new(lo: f64, hi: f64) -> Result<SigmoidFactor> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::InvalidInput(format!("sigmoid factor needs lo < hi, got [{lo}, {hi}]")));
        }
        Ok(SigmoidFactor { lo, hi })
    }

    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        if t <= self.lo {
            0.0
        } else if t >= self.hi {
            1.0
        } else {
            (t - self.lo) / (self.hi - self.lo)
        }
    }

    pub fn as_pwl(&self) -> PiecewiseLinear {
        PiecewiseLinear::ramp(self.lo, self.hi).expect("validated")
    }

    pub fn lipschitz(&self) -> f64 {
        1.0 / (self.hi - self.lo)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Factor {
    pub a: Vec<f64>,
    #[serde(flatten)]
    pub sigmoid: SigmoidFactor,
}

#[derive(Serialize, Deserialize)]
struct BumpRepr {
    profiles: Vec<PiecewiseLinear>,
}

#[derive(Serialize, Deserialize)]
struct WedgeRepr {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    n: Option<usize>,
    #[serde(rename = "V")]
    v: Vec<Vec<f64>>,
    g: BumpRepr,
    factors: Vec<Factor>,
}

/// (g∘P_V)·Π_j g_j(a_j·x) with g a tensor of nonnegative compact profiles in V-coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "WedgeRepr", into = "WedgeRepr")]
pub struct WedgeFunction {
    n: usize,
    v: Vec<Vec<f64>>,
    profiles: Vec<PiecewiseLinear>,
    factors: Vec<Factor>,
    scale: f64,
}

impl TryFrom<WedgeRepr> for WedgeFunction {
    type Error = Error;
    fn try_from(r: WedgeRepr) -> Result<Self> {
        let n = r
            .n
            .or_else(|| r.v.first().map(|row| row.len()))
            .or_else(|| r.factors.first().map(|f| f.a.len()))
            .ok_or_else(|| Error::InvalidInput("cannot infer the input dimension".into()))?;
        WedgeFunction::new(n, r.v, r.g.profiles, r.factors)
    }
}

impl From<WedgeFunction> for WedgeRepr {
    fn from(w: WedgeFunction) -> Self {
        WedgeRepr { n: Some(w.n), v: w.v, g: BumpRepr { profiles: w.profiles }, factors: w.factors }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Orthonormal basis of the span of `rows` (modified Gram–Schmidt, two passes).
pub fn orthonormal_basis(rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for r in rows {
        let scale = r.iter().map(|x| x * x).sum::<f64>().sqrt();
        if scale == 0.0 {
            continue;
        }
        let mut v: Vec<f64> = r.iter().map(|x| x / scale).collect();
        for _ in 0..2 {
            for b in &basis {
                let c = dot(&v, b);
                for (vi, bi) in v.iter_mut().zip(b) {
                    *vi -= c * bi;
                }
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-9 {
            basis.push(v.iter().map(|x| x / norm).collect());
        }
    }
    basis
}

impl WedgeFunction {
    pub fn new(n: usize, v: Vec<Vec<f64>>, profiles: Vec<PiecewiseLinear>, factors: Vec<Factor>) -> Result<WedgeFunction> {
        if n == 0 {
            return Err(Error::InvalidInput("input dimension must be positive".into()));
        }
        if let Some(row) = v.iter().find(|r| r.len() != n) {
            return Err(Error::DimensionMismatch { expected: n, got: row.len() });
        }
        if let Some(f) = factors.iter().find(|f| f.a.len() != n) {
            return Err(Error::DimensionMismatch { expected: n, got: f.a.len() });
        }
        if profiles.len() != v.len() {
            return Err(Error::DimensionMismatch { expected: v.len(), got: profiles.len() });
        }
        for (i, a) in v.iter().enumerate() {
            for (j, b) in v.iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                if (dot(a, b) - want).abs() > 1e-9 {
                    return Err(Error::InvalidInput("V rows must be orthonormal".into()));
                }
            }
        }
        for p in &profiles {
            if !p.is_compact() || p.ys().iter().any(|y| *y < 0.0) {
                return Err(Error::InvalidInput("bump profiles must be compact and nonnegative".into()));
            }
        }
        for f in &factors {
            SigmoidFactor::new(f.sigmoid.lo, f.sigmoid.hi)?;
        }
        let scale: f64 = profiles.iter().map(|p| p.sup_abs()).product();
        if !(scale > 0.0) {
            return Err(Error::InvalidInput("bump must not vanish identically".into()));
        }
        Ok(WedgeFunction { n, v, profiles, factors, scale })
    }

    /// The mollified AND h(x)h(y): V = {0}, g = 1, two unit-ramp factors along the axes.
    pub fn mollified_and() -> WedgeFunction {
        let f = |a: Vec<f64>| Factor { a, sigmoid: SigmoidFactor { lo: 0.0, hi: 1.0 } };
        WedgeFunction::new(2, vec![], vec![], vec![f(vec![1.0, 0.0]), f(vec![0.0, 1.0])]).expect("static")
    }

    /// Random wedge with hat profiles, for property checks.
    pub fn random<R: Rng>(rng: &mut R, n: usize, dim_v: usize, m: usize) -> WedgeFunction {
        let raw: Vec<Vec<f64>> = (0..dim_v.min(n)).map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let v = orthonormal_basis(&raw);
        let profiles = v
            .iter()
            .map(|_| {
                let c = rng.gen_range(-0.5..0.5);
                let w = rng.gen_range(0.5..2.0);
                let top = rng.gen_range(0.3..1.0);
                PiecewiseLinear::compact(vec![(c - w, 0.0), (c, top), (c + w, 0.0)]).expect("ordered")
            })
            .collect();
        let factors = (0..m)
            .map(|_| {
                let a = (0..n).map(|_| rng.gen_range(-1.5..1.5)).collect();
                let lo = rng.gen_range(-1.0..0.5);
                Factor { a, sigmoid: SigmoidFactor { lo, hi: lo + rng.gen_range(0.3..2.0) } }
            })
            .collect();
        WedgeFunction::new(n, v, profiles, factors).expect("valid by construction")
    }

    pub fn from_json(s: &str) -> Result<WedgeFunction> {
        serde_json::from_str(s).map_err(|e| Error::InvalidInput(format!("wedge JSON: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("wedge serializes")
    }

    pub fn input_dim(&self) -> usize {
        self.n
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn v(&self) -> &[Vec<f64>] {
        &self.v
    }

    /// sup g, the factor that normalizes the bump into [0, 1].
    pub fn scale(&self) -> f64 {
        self.scale
    }

    fn bump_raw(&self, x: &[f64]) -> f64 {
        let mut acc = 1.0;
        for (row, p) in self.v.iter().zip(&self.profiles) {
            acc *= p.eval(dot(row, x));
        }
        acc
    }

    /// g(P_V x) / sup g, in [0, 1].
    pub fn normalized_bump(&self, x: &[f64]) -> f64 {
        self.bump_raw(x) / self.scale
    }

    pub fn factor_values(&self, x: &[f64]) -> Vec<f64> {
        self.factors.iter().map(|f| f.sigmoid.eval(dot(&f.a, x))).collect()
    }

    pub fn evaluate(&self, x: &[f64]) -> f64 {
        let mut acc = self.bump_raw(x);
        for f in &self.factors {
            acc *= f.sigmoid.eval(dot(&f.a, x));
        }
        acc
    }

    /// Product of two wedges on mutually orthogonal subspaces.
    pub fn product(&self, other: &WedgeFunction) -> Result<WedgeFunction> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: other.n });
        }
        if self.v.iter().any(|a| other.v.iter().any(|b| dot(a, b).abs() > 1e-12)) {
            return Err(Error::Unsupported("product wedges need orthogonal V subspaces".into()));
        }
        let mut v = self.v.clone();
        v.extend(other.v.iter().cloned());
        let mut profiles = self.profiles.clone();
        profiles.extend(other.profiles.iter().cloned());
        let mut factors = self.factors.clone();
        factors.extend(other.factors.iter().cloned());
        WedgeFunction::new(self.n, v, profiles, factors)
    }

    fn core(&self) -> Core {
        let (center, radius) = box_ball(&self.profiles.iter().map(|p| p.support()).collect::<Vec<_>>());
        let lip = Bump::Tensor { profiles: self.profiles.clone() }.lipschitz() / self.scale;
        let w = self.clone();
        Core {
            n: self.n,
            vbasis: self.v.clone(),
            bump: Arc::new(move |x: &[f64]| w.normalized_bump(x)),
            bump_const: if self.v.is_empty() { Some(1.0) } else { None },
            bump_center: center,
            bump_radius: radius,
            bump_lip: lip,
            factors: self.factors.clone(),
        }
    }

    /// f_I(x) for I given as factor indices; the bump enters normalized into [0, 1].
    pub fn f_subset(&self, subset: &[usize], x: &[f64]) -> Result<f64> {
        let m = self.factors.len();
        if m > MAX_FACTORS {
            return Err(Error::SubsetBudgetExceeded(m));
        }
        let mut mask = 0usize;
        for &j in subset {
            if j >= m {
                return Err(Error::InvalidInput(format!("factor index {j} out of range")));
            }
            mask |= 1 << j;
        }
        Ok(f_table(self.normalized_bump(x), &self.factor_values(x))[mask])
    }

    /// Bound B with f_I(x) = 0 whenever ‖P_V x − c‖ + Σ_{j∈I} |a_j·x − c_j| > B.
    pub fn support_bound(&self, subset: &[usize]) -> f64 {
        let (_, r) = box_ball(&self.profiles.iter().map(|p| p.support()).collect::<Vec<_>>());
        r + subset.iter().map(|&j| 0.5 * (self.factors[j].sigmoid.hi - self.factors[j].sigmoid.lo)).sum::<f64>()
    }

    /// ‖P_V x − c‖ + Σ_{j∈I} |a_j·x − c_j|, the seminorm compared against `support_bound`.
    pub fn support_seminorm(&self, subset: &[usize], x: &[f64]) -> f64 {
        let (center, _) = box_ball(&self.profiles.iter().map(|p| p.support()).collect::<Vec<_>>());
        let pv: f64 = self.v.iter().zip(&center).map(|(row, c)| (dot(row, x) - c).powi(2)).sum::<f64>().sqrt();
        pv + subset
            .iter()
            .map(|&j| {
                let s = self.factors[j].sigmoid;
                (dot(&self.factors[j].a, x) - 0.5 * (s.lo + s.hi)).abs()
            })
            .sum::<f64>()
    }

    /// Orthogonal projection onto W_I = V + span{a_j : j ∈ I}.
    pub fn project_w(&self, subset: &[usize], x: &[f64]) -> Vec<f64> {
        let mut rows = self.v.clone();
        rows.extend(subset.iter().map(|&j| self.factors[j].a.clone()));
        let q = orthonormal_basis(&rows);
        let mut out = vec![0.0; self.n];
        for b in &q {
            let c = dot(b, x);
            for (o, bi) in out.iter_mut().zip(b) {
                *o += c * bi;
            }
        }
        out
    }
}

fn box_ball(b: &[(f64, f64)]) -> (Vec<f64>, f64) {
    let c = b.iter().map(|(l, h)| 0.5 * (l + h)).collect();
    let r = b.iter().map(|(l, h)| (0.5 * (h - l)).powi(2)).sum::<f64>().sqrt();
    (c, r)
}

/// All f_I for I ⊆ J, indexed by bitmask; g and s_j already evaluated.
pub fn f_table(g: f64, s: &[f64]) -> Vec<f64> {
    let m = s.len();
    let full = 1usize << m;
    let mut prod = vec![1.0; full];
    let mut sum = vec![0.0; full];
    for mask in 1..full {
        let j = mask.trailing_zeros() as usize;
        let rest = mask & (mask - 1);
        prod[mask] = prod[rest] * s[j];
        sum[mask] = sum[rest] + s[j];
    }
    let mut f = vec![0.0; full];
    for mask in 1..full {
        let k = mask.count_ones() as usize;
        let mut v = g * prod[mask] - h_m(k, g + sum[mask]);
        let mut sub = (mask - 1) & mask;
        while sub > 0 {
            v -= f[sub] * prod[mask & !sub];
            sub = (sub - 1) & mask;
        }
        f[mask] = v;
    }
    f
}

/// Wedge value minus Σ_{∅≠H⊆J} f_H·Π_{J∖H} g_j − h_{#J}(g + Σ g_j), with g normalized.
pub fn wedge_identity_residual(w: &WedgeFunction, x: &[f64]) -> Result<f64> {
    let m = w.factors.len();
    if m > MAX_FACTORS {
        return Err(Error::SubsetBudgetExceeded(m));
    }
    let g = w.normalized_bump(x);
    let s = w.factor_values(x);
    let f = f_table(g, &s);
    let full = (1usize << m) - 1;
    let lhs = g * s.iter().product::<f64>();
    let mut rhs = h_m(m, g + s.iter().sum::<f64>());
    for h in 1..=full {
        let mut p = f[h];
        for (j, sj) in s.iter().enumerate() {
            if full & !h >> j & 1 == 1 {
                p *= sj;
            }
        }
        rhs += p;
    }
    Ok(lhs - rhs)
}

/// f = g + c₊·v₁ + c₋·v₂ with v₁ = clamp(x, 0, 1), v₂(x) = v₁(−x) and g vanishing at ±∞.
#[derive(Clone, Debug)]
pub struct FsDecomposition {
    pub f: Activation,
    pub c_plus: f64,
    pub c_minus: f64,
}

impl FsDecomposition {
    pub fn g(&self, x: f64) -> f64 {
        self.f.eval(x) - self.c_plus * x.clamp(0.0, 1.0) - self.c_minus * (-x).clamp(0.0, 1.0)
    }

    /// max |g(±2ᵏ)| for k in `ks`.
    pub fn tail_probe(&self, ks: std::ops::RangeInclusive<i32>) -> f64 {
        ks.map(|k| {
            let t = 2f64.powi(k);
            self.g(t).abs().max(self.g(-t).abs())
        })
        .fold(0.0, f64::max)
    }
}

pub fn fs_decompose(f: &Activation) -> Result<FsDecomposition> {
    match f.asymptotics() {
        Asymptotics::FiniteLimits { left, right } => Ok(FsDecomposition { f: f.clone(), c_plus: right, c_minus: left }),
        _ => Err(Error::LimitsUnknown(format!("{} has no recorded finite limits", f.name()))),
    }
}

/// p with p∘σ ≈ target, and the sup residual over dense and geometric probes.
#[derive(Clone, Debug)]
pub struct PolyInSigma {
    pub poly: Chebyshev,
    pub residual: f64,
}

pub fn polynomial_in_sigma(target: &dyn Fn(f64) -> f64, sigma: &Activation, degree: usize) -> Result<PolyInSigma> {
    let (alpha, beta) = match sigma.asymptotics() {
        Asymptotics::FiniteLimits { left, right } if left != right => (left.min(right), left.max(right)),
        _ => return Err(Error::LimitsUnknown(format!("{} is not a bounded sigmoid", sigma.name()))),
    };
    let s = |x: f64| sigma.eval(x);
    let inv = |y: f64| {
        let mut span = 1.0;
        while span < 1e6 && !(s(-span).min(s(span)) < y && y < s(-span).max(s(span))) {
            span *= 2.0;
        }
        invert_monotone(s, y, -span, span)
    };
    let poly = Chebyshev::interpolate(|y| target(inv(y)), alpha, beta, degree);
    let mut probes: Vec<f64> = (0..=6000).map(|i| -30.0 + 0.01 * i as f64).collect();
    for k in 0..=40 {
        let t = 2f64.powi(k);
        probes.push(t);
        probes.push(-t);
    }
    let residual = probes.iter().map(|&x| (poly.eval(s(x)) - target(x)).abs()).fold(0.0, f64::max);
    Ok(PolyInSigma { poly, residual })
}

/// Internal wedge over a general normalized bump that depends on x only through P_V x.
#[derive(Clone)]
struct Core {
    n: usize,
    vbasis: Vec<Vec<f64>>,
    bump: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>,
    bump_const: Option<f64>,
    /// Support of the bump: ‖V x − center‖ ≤ radius.
    bump_center: Vec<f64>,
    bump_radius: f64,
    bump_lip: f64,
    factors: Vec<Factor>,
}

impl Core {
    fn table(&self, x: &[f64]) -> Vec<f64> {
        let s: Vec<f64> = self.factors.iter().map(|f| f.sigmoid.eval(dot(&f.a, x))).collect();
        f_table((self.bump)(x), &s)
    }

    /// (sup, Lipschitz) bounds for every f_I.
    fn bounds(&self) -> Vec<(f64, f64)> {
        let m = self.factors.len();
        let lj: Vec<f64> = self
            .factors
            .iter()
            .map(|f| f.sigmoid.lipschitz() * f.a.iter().map(|x| x * x).sum::<f64>().sqrt())
            .collect();
        let lsum = |mask: usize| (0..m).filter(|j| mask >> j & 1 == 1).map(|j| lj[j]).sum::<f64>();
        let mut out = vec![(0.0, 0.0); 1 << m];
        for mask in 1usize..1 << m {
            if mask.count_ones() == 1 {
                // f_j = min(g s, (1 − g)(1 − s))
                let trivial = matches!(self.bump_const, Some(c) if c == 0.0 || c == 1.0);
                out[mask] = if trivial { (0.0, 0.0) } else { (0.25, self.bump_lip + lsum(mask)) };
                continue;
            }
            let mut s = 2.0;
            let mut l = 2.0 * (self.bump_lip + lsum(mask));
            let mut sub = (mask - 1) & mask;
            while sub > 0 {
                let (sh, lh) = out[sub];
                s += sh;
                l += lh + sh * lsum(mask & !sub);
                sub = (sub - 1) & mask;
            }
            out[mask] = (s, l);
        }
        out
    }

    /// Orthonormal basis of W_I, and a ball (center in W-coordinates, radius) containing supp f_I ∩ W_I.
    fn support_of(&self, mask: usize) -> Result<(Vec<Vec<f64>>, Vec<f64>, f64)> {
        let mut rows = self.vbasis.clone();
        let idx: Vec<usize> = (0..self.factors.len()).filter(|j| mask >> j & 1 == 1).collect();
        rows.extend(idx.iter().map(|&j| self.factors[j].a.clone()));
        let q = orthonormal_basis(&rows);
        let d = q.len();
        if d == 0 {
            return Ok((q, vec![], 0.0));
        }
        let k = rows.len();
        let m = DMatrix::from_fn(k, d, |i, c| dot(&rows[i], &q[c]));
        let mut yc: Vec<f64> = self.bump_center.clone();
        yc.extend(idx.iter().map(|&j| 0.5 * (self.factors[j].sigmoid.lo + self.factors[j].sigmoid.hi)));
        let spread = (self.bump_radius.powi(2)
            + idx.iter().map(|&j| (0.5 * (self.factors[j].sigmoid.hi - self.factors[j].sigmoid.lo)).powi(2)).sum::<f64>())
        .sqrt();
        let svd = m.clone().svd(true, true);
        let smin = svd.singular_values.iter().copied().fold(f64::INFINITY, f64::min);
        if !(smin > 1e-12) {
            return Err(Error::InvalidInput("degenerate wedge subspace".into()));
        }
        let zc = svd.solve(&DVector::from_vec(yc), 1e-14).map_err(|e| Error::InvalidInput(e.to_string()))?;
        Ok((q, zc.iter().copied().collect(), spread / smin))
    }
}

/// A compact function of x known to depend only on Q x, supported in ‖Q x − center‖ ≤ radius.
struct CompactPiece<'a> {
    q: &'a [Vec<f64>],
    center: &'a [f64],
    radius: f64,
    lipschitz: f64,
    f: &'a (dyn Fn(&[f64]) -> f64 + Sync),
}

impl CompactPiece<'_> {
    fn lift(&self, z: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; self.q.first().map(|r| r.len()).unwrap_or(0)];
        for (b, zi) in self.q.iter().zip(z) {
            for (xi, bi) in x.iter_mut().zip(b) {
                *xi += zi * bi;
            }
        }
        x
    }

    fn dim(&self) -> usize {
        self.q.len()
    }

    /// Certified sup |f| from a grid on the support ball.
    fn certified_sup(&self) -> Result<f64> {
        let d = self.dim();
        if d == 0 {
            return Ok((self.f)(&[]).abs());
        }
        if d > 2 {
            return Err(Error::Unsupported(format!("compact wedge pieces on {d}-dimensional subspaces")));
        }
        let h = 2.0 * self.radius / if d == 1 { 20000.0 } else { 800.0 };
        let g = |z: &[f64]| {
            let zz: Vec<f64> = z.iter().zip(self.center).map(|(a, c)| a + c).collect();
            (self.f)(&self.lift(&zz))
        };
        let c = certify::sup_norm(g, d, self.lipschitz, TailBound::vanishing(self.radius), self.radius, h)?;
        Ok(c.total)
    }

    /// One-layer φ-network on ℝⁿ with certified error.
    fn approximate(&self, n: usize, phi: &Activation, eps: f64) -> Result<(Network, f64)> {
        let d = self.dim();
        match d {
            0 => Ok((Network::constant(n, phi.clone(), 1, (self.f)(&vec![0.0; n])), 0.0)),
            1 => {
                let h_target = (0.25 * eps / self.lipschitz.max(1e-300)).min(self.radius / 8.0);
                let count = ((2.0 * self.radius / h_target).ceil() as usize).clamp(8, 200_000);
                let h = 2.0 * self.radius / count as f64;
                let c = self.center[0];
                let knots: Vec<(f64, f64)> = (0..=count)
                    .map(|i| {
                        let t = c - self.radius + h * i as f64;
                        let v = if i == 0 || i == count { 0.0 } else { (self.f)(&self.lift(&[t])) };
                        (t, v)
                    })
                    .collect();
                let p = PiecewiseLinear::compact(knots)?;
                let sample_err = self.lipschitz * h / 2.0;
                let e = expand_pwl(&p, phi, (eps - sample_err).max(0.0)).map_err(|e| match e {
                    Error::TargetNotMet { achieved, .. } => Error::TargetNotMet { target: eps, achieved: achieved + sample_err },
                    other => other,
                })?;
                let net = e.network.affine_precompose(&[self.q[0].clone()], &[0.0])?;
                Ok((net, e.bound + sample_err))
            }
            2 => {
                let f = |z1: f64, z2: f64| (self.f)(&self.lift(&[z1, z2]));
                let target = CompactTarget {
                    eval: &f,
                    center: [self.center[0], self.center[1]],
                    radius: self.radius,
                    lipschitz: self.lipschitz,
                };
                let a = radon::approx_2d(&target, phi, eps, &radon::default_ladder())?;
                let net = a.ridge.network.affine_precompose(self.q, &[0.0, 0.0])?;
                Ok((net, a.certificate.total))
            }
            _ => Err(Error::Unsupported(format!("compact wedge pieces on {d}-dimensional subspaces"))),
        }
    }
}

#[derive(Default)]
struct Build {
    one: Vec<(Network, f64)>,
    one_sup: f64,
    two: Vec<(Network, f64)>,
    bound: f64,
}

fn compile_core(core: &Arc<Core>, phi: &Activation, eps: f64, coeff: f64, out: &mut Build) -> Result<()> {
    let n = core.n;
    let m = core.factors.len();
    let w = coeff.abs();
    if m == 0 {
        let bump = core.bump.clone();
        let f = move |x: &[f64]| bump(x);
        let piece = CompactPiece {
            q: &core.vbasis,
            center: &core.bump_center,
            radius: core.bump_radius,
            lipschitz: core.bump_lip,
            f: &f,
        };
        let (net, b) = piece.approximate(n, phi, eps / w)?;
        out.one.push((net, coeff));
        out.one_sup += w * (1.0 + b);
        out.bound += w * b;
        return Ok(());
    }
    let bounds = core.bounds();
    let full = (1usize << m) - 1;
    let start = out.bound;
    struct Term {
        mask: usize,
        q: Vec<Vec<f64>>,
        center: Vec<f64>,
        radius: f64,
        lip: f64,
        sup: f64,
    }
    let mut terms = Vec::new();
    for mask in 1..=full {
        let (s_bound, l_bound) = bounds[mask];
        if s_bound == 0.0 {
            continue;
        }
        let (q, center, radius) = core.support_of(mask)?;
        let c2 = core.clone();
        let f = move |x: &[f64]| c2.table(x)[mask];
        let piece = CompactPiece { q: &q, center: &center, radius, lipschitz: l_bound, f: &f };
        let sup = piece.certified_sup()?.min(s_bound);
        if w * sup <= 1e-3 * eps / full as f64 {
            out.bound += w * sup;
        } else {
            terms.push(Term { mask, q, center, radius, lip: l_bound, sup });
        }
    }
    let share = 0.45 * eps / terms.len().max(1) as f64;
    for t in &terms {
        let mask = t.mask;
        if w * t.sup <= share {
            out.bound += w * t.sup;
            continue;
        }
        if mask == full {
            let c2 = core.clone();
            let f = move |x: &[f64]| c2.table(x)[mask];
            let piece = CompactPiece { q: &t.q, center: &t.center, radius: t.radius, lipschitz: t.lip, f: &f };
            let (net, b) = piece.approximate(n, phi, share / w)?;
            out.one.push((net, coeff));
            out.one_sup += w * (t.sup + b);
            out.bound += w * b;
            continue;
        }
        let rest: Vec<Factor> = (0..m).filter(|j| full & !mask >> j & 1 == 1).map(|j| core.factors[j].clone()).collect();
        let sup = t.sup;
        for sign in [1.0, -1.0] {
            let c3 = core.clone();
            let child = Arc::new(Core {
                n,
                vbasis: t.q.clone(),
                bump: Arc::new(move |x: &[f64]| (sign * c3.table(x)[mask]).max(0.0) / sup),
                bump_const: None,
                bump_center: t.center.clone(),
                bump_radius: t.radius,
                bump_lip: t.lip / sup,
                factors: rest.clone(),
            });
            compile_core(&child, phi, 0.5 * share, coeff * sign * sup, out)?;
        }
    }
    // remainder h_m(g + Σ s_j): inner one-layer sum, outer 1-D expansion
    let remaining = eps - (out.bound - start) - 1e-3 * eps;
    if remaining <= 0.0 {
        return Err(Error::TargetNotMet { target: eps, achieved: out.bound - start });
    }
    let budget = remaining / w;
    let inner_parts = m + usize::from(core.bump_const.is_none());
    let e_in = 0.5 * budget / inner_parts as f64;
    let mut parts: Vec<(Network, f64)> = Vec::new();
    let mut inner_err = 0.0;
    match core.bump_const {
        Some(c) => parts.push((Network::constant(n, phi.clone(), 1, c), 1.0)),
        None => {
            let bump = core.bump.clone();
            let f = move |x: &[f64]| bump(x);
            let piece = CompactPiece {
                q: &core.vbasis,
                center: &core.bump_center,
                radius: core.bump_radius,
                lipschitz: core.bump_lip,
                f: &f,
            };
            let (net, b) = piece.approximate(n, phi, e_in)?;
            parts.push((net, 1.0));
            inner_err += b;
        }
    }
    for fac in &core.factors {
        let e = expand_pwl(&fac.sigmoid.as_pwl(), phi, e_in)?;
        parts.push((e.network.affine_precompose(&[fac.a.clone()], &[0.0])?, 1.0));
        inner_err += e.bound;
    }
    let inner = Network::linear_combine(&parts)?;
    let outer = expand_pwl(&ramp(m), phi, budget - inner_err)?;
    out.two.push((inner.compose_1d(&outer.network)?, coeff));
    out.bound += w * (outer.bound + inner_err);
    Ok(())
}

#[derive(Clone, Debug)]
pub struct CompiledWedge {
    pub network: Network,
    /// Certified sup |network − wedge| over ℝⁿ.
    pub bound: f64,
    pub certificate: SupNormCertificate,
}

/// Two-layer φ-network approximating the wedge within ε over ℝⁿ.
pub fn compile_two_layer(w: &WedgeFunction, phi: &Activation, eps: f64) -> Result<CompiledWedge> {
    match phi.asymptotics() {
        Asymptotics::FiniteLimits { left, right } if left != right => {}
        _ => {
            return Err(Error::UnsupportedActivationClass(format!(
                "{} lacks distinct finite limits",
                phi.name()
            )))
        }
    }
    if !(eps > 0.0) {
        return Err(Error::InvalidInput("ε must be positive".into()));
    }
    if w.factors.len() > 3 || w.n > 3 {
        return Err(Error::Unsupported("wedge compilation is limited to n ≤ 3 and at most 3 factors".into()));
    }
    let scale = w.scale;
    let rel = eps / scale;
    let mut out = Build::default();
    if w.factors.is_empty() {
        let gen = Generator::new(w.n, w.v.clone(), Bump::Tensor { profiles: w.profiles.clone() })?;
        let a = lift::generator_approx(&gen, phi, rel * (1.0 - 1e-3))?;
        out.one_sup = 1.0 + a.certificate.total;
        out.bound = a.certificate.total;
        out.one.push((a.network, 1.0));
    } else {
        compile_core(&Arc::new(w.core()), phi, rel, 1.0, &mut out)?;
    }
    let mut nets: Vec<(Network, f64)> = out.two.clone();
    if !out.one.is_empty() {
        let sum = Network::linear_combine(&out.one)?;
        let (lin, err) = linearizer(phi, out.one_sup, 1e-3 * rel)?;
        nets.push((sum.compose_1d(&lin)?, 1.0));
        out.bound += err;
    }
    let bound = out.bound * scale;
    if bound > eps {
        return Err(Error::TargetNotMet { target: eps, achieved: bound });
    }
    let network = if nets.is_empty() {
        Network::constant(w.n, phi.clone(), 2, 0.0)
    } else {
        Network::linear_combine(&nets.iter().map(|(n, c)| (n.clone(), c * scale)).collect::<Vec<_>>())?
    };
    let certificate = SupNormCertificate { grid_max: 0.0, lipschitz_slack: 0.0, tail_bound: 0.0, total: bound, domain_radius: f64::INFINITY, grid_step: 0.0 };
    Ok(CompiledWedge { network, bound, certificate })
}

/// 1-D one-layer network u ↦ (φ(b₀ + w u) − φ(b₀)) / (w φ′(b₀)) and its error bound for |u| ≤ sup.
fn linearizer(phi: &Activation, sup: f64, tol: f64) -> Result<(Network, f64)> {
    let lr = phi
        .linear_regime()
        .ok_or_else(|| Error::UnsupportedActivationClass(format!("{} has no linear regime", phi.name())))?;
    let sup = sup.max(1e-12);
    let (w, err) = match lr.exact_halfwidth {
        Some(hw) if hw > 0.0 && hw.is_finite() => (hw / sup, 0.0),
        _ => {
            let w = (tol * lr.slope.abs() / (lr.cubic * sup.powi(3)).max(1e-300)).sqrt().min(1.0 / sup);
            (w, lr.cubic * w * w * sup.powi(3) / lr.slope.abs())
        }
    };
    let c = 1.0 / (lr.slope * w);
    let net = Network::one_layer(1, phi.clone(), vec![(vec![w], lr.center, c)], -lr.value * c)?;
    Ok((net, err))
}
