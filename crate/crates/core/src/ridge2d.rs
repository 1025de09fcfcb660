//! Rotational ridge integrals on ℝ² and their Riemann-sum networks.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::activation::Activation;
use crate::certify::{self, AdaptiveOptions, BlockOracle, Region, SupNormCertificate, TailBound};
use crate::error::{Error, Result};
use crate::network::Network;
use crate::pwl::PiecewiseLinear;
use crate::quad::integrate;
use crate::synth::{self, Expansion};

/// Compactly supported piecewise-linear ridge profile with its recorded constants.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RidgeProfile {
    pub profile: PiecewiseLinear,
    pub support_radius: f64,
    pub lipschitz: f64,
    pub m0: f64,
    pub m2: f64,
}

impl RidgeProfile {
    pub fn new(profile: PiecewiseLinear) -> Result<RidgeProfile> {
        if !profile.is_compact() {
            return Err(Error::InvalidInput("ridge profiles must be compactly supported".into()));
        }
        let (lo, hi) = profile.support();
        Ok(RidgeProfile {
            support_radius: lo.abs().max(hi.abs()),
            lipschitz: profile.lipschitz(),
            m0: profile.moment(0),
            m2: profile.moment(2),
            profile,
        })
    }

    #[inline]
    pub fn eval(&self, u: f64) -> f64 {
        if u.abs() >= self.support_radius {
            0.0
        } else {
            self.profile.eval(u)
        }
    }

    pub fn sup_abs(&self) -> f64 {
        self.profile.sup_abs()
    }

    /// The zero function on a nominal support.
    pub fn is_zero(&self) -> bool {
        self.profile.ys().iter().all(|y| *y == 0.0)
    }
}

/// Double hat Λ₁ − ½Λ₂: zero mean, m₂ = −½.
pub fn standard_profile() -> RidgeProfile {
    RidgeProfile::new(
        PiecewiseLinear::compact(vec![(-2.0, 0.0), (-1.0, -0.25), (0.0, 0.5), (1.0, -0.25), (2.0, 0.0)])
            .expect("static knots"),
    )
    .expect("compact")
}

/// Unit hat Λ₁ (nonzero mean).
pub fn single_hat() -> RidgeProfile {
    RidgeProfile::new(PiecewiseLinear::hat(1.0)).expect("compact")
}

pub fn profile_by_name(name: &str) -> Result<RidgeProfile> {
    match name {
        "standard" | "double-hat" => Ok(standard_profile()),
        "hat" | "single-hat" => Ok(single_hat()),
        other => Err(Error::InvalidInput(format!("unknown profile '{other}'"))),
    }
}

/// F(R) = ∫₀^{2π} g(R sin θ) dθ.
pub fn radial_f(g: &RidgeProfile, r: f64) -> Result<f64> {
    let r = r.abs();
    let a = g.support_radius;
    if r == 0.0 {
        return Ok(2.0 * PI * g.eval(0.0));
    }
    if r > 2.0 * a {
        // 2 ∫ g(u) / √(R² − u²) du; smooth away from the knots
        let scale = g.profile.abs_moment(0) / r;
        let v = integrate(
            |u| g.eval(u) / ((r - u) * (r + u)).sqrt(),
            -a,
            a,
            g.profile.xs(),
            1e-15 * scale.max(1e-300),
            4000,
        )?;
        return Ok(2.0 * v);
    }
    let breaks: Vec<f64> = g.profile.xs().iter().filter(|k| k.abs() < r).map(|k| (k / r).asin()).collect();
    let v = integrate(|t| g.eval(r * t.sin()), -PI / 2.0, PI / 2.0, &breaks, 1e-12, 4000)?;
    Ok(2.0 * v)
}

/// The rotational integral at (x, y).
pub fn target_f(g: &RidgeProfile, x: f64, y: f64) -> Result<f64> {
    radial_f(g, x.hypot(y))
}

/// |F(R)| ≤ c/(1 + R^p) for R ≥ inner, constants doubled.
pub fn decay_tail(g: &RidgeProfile, inner: f64) -> Result<TailBound> {
    let a = g.support_radius;
    if inner <= a {
        return Err(Error::InvalidInput("decay bound needs inner radius beyond the support".into()));
    }
    let m4 = g.profile.abs_moment(4);
    let r = inner;
    let rem = 0.75 * m4 / (r.powi(5) * (1.0 - (a / r).powi(2)).powf(2.5));
    if g.m0.abs() < 1e-12 {
        let bound = (1.0 + r.powi(3)) * (g.m2.abs() / r.powi(3) + rem);
        Ok(TailBound::new(2.0 * bound, 3.0, inner))
    } else {
        let bound = (1.0 + r) * (2.0 * g.m0.abs() / r + g.m2.abs() / r.powi(3) + rem);
        Ok(TailBound::new(2.0 * bound, 1.0, inner))
    }
}

pub fn directions(n: usize) -> Vec<[f64; 2]> {
    (0..n)
        .map(|k| {
            let t = 2.0 * PI * k as f64 / n as f64;
            [t.cos(), t.sin()]
        })
        .collect()
}

/// f_N = (2π/N) Σ g∘p_{a_k} as a one-layer network whose activation is g.
pub fn riemann_net(g: &RidgeProfile, n: usize) -> Result<Network> {
    if n == 0 {
        return Err(Error::InvalidInput("N must be positive".into()));
    }
    let c = 2.0 * PI / n as f64;
    let units = directions(n).into_iter().map(|d| (d.to_vec(), 0.0, c)).collect();
    Network::one_layer(2, Activation::Pwl(g.profile.clone()), units, 0.0)
}

/// Constructive 1-D φ-expansion of g with certified sup error.
pub fn expand_profile(g: &RidgeProfile, phi: &Activation, eps: f64) -> Result<Expansion> {
    synth::expand_pwl(&g.profile, phi, eps)
}

#[derive(Clone, Debug)]
pub struct CompiledRiemann {
    pub network: Network,
    /// Certified sup |network − f_N|.
    pub bound: f64,
    pub expansion: Expansion,
}

/// Genuine φ-network for f_N: each direction carries a copy of the 1-D expansion.
pub fn compile_riemann(g: &RidgeProfile, n: usize, phi: &Activation, eps: f64) -> Result<CompiledRiemann> {
    if n == 0 {
        return Err(Error::InvalidInput("N must be positive".into()));
    }
    let exp = expand_profile(g, phi, eps)?;
    let c = 2.0 * PI / n as f64;
    let inner = &exp.network.layers()[0];
    let mut units = Vec::with_capacity(n * inner.units.len());
    for d in directions(n) {
        for (u, cu) in inner.units.iter().zip(exp.network.out_coeffs()) {
            let w = u.w[0];
            units.push((vec![w * d[0], w * d[1]], u.b, c * cu));
        }
    }
    let network = Network::one_layer(2, phi.clone(), units, 2.0 * PI * exp.network.out_bias())?;
    Ok(CompiledRiemann { network, bound: 2.0 * PI * exp.bound, expansion: exp })
}

/// ψ(x) = ∫ f(x, y) dy, with the m₂/R³ far field integrated analytically.
pub fn psi(g: &RidgeProfile, x: f64) -> Result<f64> {
    if g.m0.abs() > 1e-10 {
        return Err(Error::ProfileNotZeroMean(g.m0));
    }
    let a = g.support_radius;
    let xa = x.abs();
    let y_max = 1e3 * (xa + a);
    let mut breaks: Vec<f64> = g
        .profile
        .xs()
        .iter()
        .filter(|k| k.abs() > xa)
        .map(|k| (k * k - x * x).sqrt())
        .collect();
    let mut b = (xa + a).max(1.0);
    while b < y_max {
        breaks.push(b);
        b *= 2.0;
    }
    let fail = std::cell::Cell::new(None);
    let body = integrate(
        |y| match radial_f(g, x.hypot(y)) {
            Ok(v) => v,
            Err(e) => {
                fail.set(Some(e));
                0.0
            }
        },
        0.0,
        y_max,
        &breaks,
        1e-11,
        20000,
    )?;
    if let Some(e) = fail.take() {
        return Err(e);
    }
    let far = if xa > 0.0 {
        g.m2 / (x * x) * (1.0 - y_max / (x * x + y_max * y_max).sqrt())
    } else {
        g.m2 / (2.0 * y_max * y_max)
    };
    Ok(2.0 * (body + far))
}

/// Φ_N(x, y): number of directions whose strip |a_k·(x,y)| ≤ a contains the point.
pub fn support_hits(g: &RidgeProfile, n: usize, x: f64, y: f64) -> usize {
    let a = g.support_radius;
    directions(n).iter().filter(|d| (d[0] * x + d[1] * y).abs() <= a).count()
}

/// Radius beyond which Φ_N ≤ 2.
pub fn hit_radius(g: &RidgeProfile, n: usize) -> f64 {
    g.support_radius / (PI / n as f64).sin()
}

/// Least-squares slope of log|f| against log R.
pub fn decay_exponent(points: &[(f64, f64)]) -> Result<f64> {
    if points.iter().any(|p| !(p.1.abs() > 0.0) || !(p.0 > 0.0)) {
        return Err(Error::DegenerateData("radii and values must be positive".into()));
    }
    let lo = points.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let hi = points.iter().map(|p| p.0).fold(0.0, f64::max);
    if hi < 100.0 * lo * (1.0 - 1e-12) {
        return Err(Error::DegenerateData("radii must span two decades".into()));
    }
    let pts: Vec<(f64, f64)> = points.iter().map(|p| (p.0.ln(), p.1.abs().ln())).collect();
    Ok(certify::slope_fit(&pts)?.slope)
}

struct RiemannDiff<'a> {
    g: &'a RidgeProfile,
    dirs: Vec<[f64; 2]>,
    coeff: f64,
}

impl RiemannDiff<'_> {
    fn f_n(&self, x: f64, y: f64) -> f64 {
        let a = self.g.support_radius;
        let mut acc = 0.0;
        for d in &self.dirs {
            let t = 0.0 + d[0] * x + d[1] * y;
            if t.abs() < a {
                acc += self.coeff * self.g.profile.eval(t + 0.0);
            }
        }
        acc + 0.0
    }
}

impl BlockOracle for RiemannDiff<'_> {
    fn eval(&self, x: f64, y: f64) -> f64 {
        // quadrature failure is not expected at these tolerances; surface it as NaN
        self.f_n(x, y) - radial_f(self.g, x.hypot(y)).unwrap_or(f64::NAN)
    }

    fn lipschitz(&self, x0: f64, x1: f64, y0: f64, y1: f64) -> f64 {
        let a = self.g.support_radius;
        let mut l = 0.0;
        for d in &self.dirs {
            let ps = [d[0] * x0 + d[1] * y0, d[0] * x1 + d[1] * y0, d[0] * x0 + d[1] * y1, d[0] * x1 + d[1] * y1];
            let lo = ps.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = ps.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if hi > -a && lo < a {
                l += self.coeff * self.g.profile.lipschitz_on(lo, hi);
            }
        }
        let cx = 0f64.clamp(x0, x1);
        let cy = 0f64.clamp(y0, y1);
        let rmin = cx.hypot(cy);
        let lf = if rmin <= a {
            2.0 * PI * self.g.lipschitz
        } else {
            4.0 * self.g.lipschitz * (a / rmin).asin() * (a / rmin)
        };
        l + lf
    }
}

/// Certified ‖f_N − f‖∞ over ℝ² for N ≥ 2, scanning one dihedral sector.
pub fn certify_riemann(g: &RidgeProfile, n: usize) -> Result<SupNormCertificate> {
    if n < 2 {
        return Err(Error::InvalidInput("certification needs N ≥ 2".into()));
    }
    let a = g.support_radius;
    let r = hit_radius(g, n).max(1.5 * a);
    let coeff = 2.0 * PI / n as f64;
    let floor = coeff * 2.0 * g.sup_abs();
    let tail = decay_tail(g, r)?.with_floor(floor);
    let oracle = RiemannDiff { g, dirs: directions(n), coeff };
    let opts = AdaptiveOptions { slack_target: 0.1 * floor, max_nodes: 1024, initial_blocks: 8, max_depth: 30 };
    let c = certify::sup_norm_2d_adaptive(&oracle, Region::Sector { cx: 0.0, cy: 0.0, r, angle: PI / n as f64 }, tail, opts)?;
    if !c.total.is_finite() {
        return Err(Error::QuadratureFailure("target evaluation failed inside the certified region".into()));
    }
    Ok(c)
}
