//! One-layer ridge synthesis of compactly supported functions on ℝ² by
//! filtered back-projection, with certified error over the whole plane.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::activation::Activation;
use crate::certify::{self, AdaptiveOptions, BlockOracle, Region, SupNormCertificate, TailBound};
use crate::error::{Error, Result};
use crate::network::Network;
use crate::pwl::PiecewiseLinear;
use crate::synth::{exact_pwl_units, is_exact_class, StairTable, Staircase, StepAtom};

/// A function on ℝ² vanishing outside the disk (center, radius), with Lipschitz constant and sup.
pub struct CompactTarget<'a> {
    pub eval: &'a (dyn Fn(f64, f64) -> f64 + Sync),
    pub center: [f64; 2],
    pub radius: f64,
    pub lipschitz: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FbpParams {
    pub n_angles: usize,
    /// Band limit spacing δ as a fraction of the support radius.
    pub delta_frac: f64,
    /// Profile knots per δ.
    pub knots_per_delta: usize,
    /// Step steepness times knot spacing (sigmoid activations).
    pub kappa: f64,
    /// Profiles are truncated at this multiple of the support radius.
    pub tail_extent: f64,
}

impl FbpParams {
    pub fn new(n_angles: usize, delta_frac: f64) -> Self {
        FbpParams { n_angles, delta_frac, knots_per_delta: 2, kappa: 2.0, tail_extent: 3.0 }
    }
}

/// Band-limited ramp filter with cutoff b: ∫_{−b}^{b} |ν| e^{2πiνu} dν.
fn ramp_kernel(u: f64, b: f64) -> f64 {
    let sinc = |x: f64| {
        if x.abs() < 1e-12 {
            1.0
        } else {
            (PI * x).sin() / (PI * x)
        }
    };
    b * b * (2.0 * sinc(2.0 * b * u) - sinc(b * u).powi(2))
}

fn profile_knots(rho: f64, delta: f64, per: usize, extent: f64) -> Vec<f64> {
    let eta = delta / per as f64;
    let n = ((rho + delta) / eta).ceil() as i64;
    let mut right = Vec::new();
    let mut s = eta * n as f64;
    let mut step = eta;
    while s < extent {
        step *= 1.5;
        s += step;
        right.push(s);
    }
    let mut k: Vec<f64> = right.iter().rev().map(|x| -x).collect();
    k.extend((-n..=n).map(|i| eta * i as f64));
    k.extend(right);
    k
}

/// Scaled filtered projections G_k (already multiplied by π/N) as compact piecewise-linear profiles
/// in the variable t = a_k·(x − center), a_k = (cos πk/N, sin πk/N).
pub fn fbp_profiles(target: &CompactTarget, params: &FbpParams) -> Result<(Vec<[f64; 2]>, Vec<PiecewiseLinear>)> {
    let n = params.n_angles;
    if n == 0 || !(params.delta_frac > 0.0) || target.radius <= 0.0 {
        return Err(Error::InvalidInput("need N ≥ 1, δ > 0 and a positive support radius".into()));
    }
    let rho = target.radius;
    let delta = rho * params.delta_frac;
    let band = 0.5 / delta;
    let knots = profile_knots(rho, delta, params.knots_per_delta.max(1), params.tail_extent * rho);
    let ds = delta / 8.0;
    let ns = (rho / ds).ceil() as i64;
    let sf: Vec<f64> = (-ns..=ns).map(|i| ds * i as f64).collect();
    let nu = 400usize;
    let du = 2.0 * rho / nu as f64;
    let [cx, cy] = target.center;
    let dirs: Vec<[f64; 2]> = (0..n)
        .map(|k| {
            let t = PI * k as f64 / n as f64;
            [t.cos(), t.sin()]
        })
        .collect();
    let kern: Vec<Vec<f64>> = knots
        .iter()
        .map(|s| sf.iter().map(|sp| ramp_kernel(s - sp, band) * ds).collect())
        .collect();
    let profiles = dirs
        .par_iter()
        .map(|a| {
            let b = [-a[1], a[0]];
            let proj: Vec<f64> = sf
                .iter()
                .map(|&s| {
                    let mut acc = 0.0;
                    for j in 0..=nu {
                        let u = -rho + du * j as f64;
                        let w = if j == 0 || j == nu { 0.5 * du } else { du };
                        acc += w * (target.eval)(cx + s * a[0] + u * b[0], cy + s * a[1] + u * b[1]);
                    }
                    acc
                })
                .collect();
            let last = knots.len() - 1;
            let vals: Vec<(f64, f64)> = knots
                .iter()
                .enumerate()
                .map(|(i, &s)| {
                    if i == 0 || i == last {
                        return (s, 0.0);
                    }
                    let q: f64 = kern[i].iter().zip(&proj).map(|(k, p)| k * p).sum();
                    (s, q * PI / n as f64)
                })
                .collect();
            PiecewiseLinear::compact(vals)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((dirs, profiles))
}

#[derive(Clone, Debug)]
enum ProfileEval {
    Pwl(PiecewiseLinear),
    Table(StairTable),
}

impl ProfileEval {
    #[inline]
    fn eval(&self, t: f64) -> f64 {
        match self {
            ProfileEval::Pwl(p) => p.eval(t),
            ProfileEval::Table(tb) => tb.eval(t),
        }
    }

    fn lipschitz_on(&self, a: f64, b: f64) -> f64 {
        match self {
            ProfileEval::Pwl(p) => p.lipschitz_on(a, b),
            ProfileEval::Table(tb) => tb.lipschitz_on(a, b),
        }
    }

    fn span(&self) -> (f64, f64) {
        match self {
            ProfileEval::Pwl(p) => p.support(),
            ProfileEval::Table(tb) => tb.span(),
        }
    }

    fn err(&self) -> f64 {
        match self {
            ProfileEval::Pwl(_) => 0.0,
            ProfileEval::Table(tb) => tb.err,
        }
    }
}

/// A φ-network Σ_k G̃_k(a_k·(x − c)) together with fast profile evaluators.
#[derive(Clone, Debug)]
pub struct Ridge2D {
    pub network: Network,
    pub center: [f64; 2],
    pub dirs: Vec<[f64; 2]>,
    evals: Vec<ProfileEval>,
    /// Per-point bound on |fast evaluation − network|.
    eval_err: f64,
    reach: f64,
    sup: f64,
}

impl Ridge2D {
    /// Realize profiles with φ: exactly for piecewise-linear φ, by steps for sigmoids.
    pub fn realize(center: [f64; 2], dirs: Vec<[f64; 2]>, profiles: Vec<PiecewiseLinear>, phi: &Activation, kappa: f64) -> Result<Ridge2D> {
        let mut units = Vec::new();
        let mut bias = 0.0;
        let mut evals = Vec::with_capacity(profiles.len());
        let exact = is_exact_class(phi);
        let atom = if exact { None } else { Some(StepAtom::new(phi)?) };
        for (d, p) in dirs.iter().zip(profiles) {
            let shift = -(d[0] * center[0] + d[1] * center[1]);
            if exact {
                let (us, b) = exact_pwl_units(&p, phi, d, shift, 1.0)?;
                units.extend(us);
                bias += b;
                evals.push(ProfileEval::Pwl(p));
            } else {
                let st = Staircase::from_pwl(&p, atom.as_ref().unwrap(), 1, kappa)?;
                let (us, b) = st.ridge_units(d, shift, 1.0);
                units.extend(us);
                bias += b;
                evals.push(ProfileEval::Table(StairTable::new(&st, 2e-7)));
            }
        }
        let network = Network::one_layer(2, phi.clone(), units, bias)?;
        Ok(Self::assemble(network, center, dirs, evals))
    }

    fn assemble(network: Network, center: [f64; 2], dirs: Vec<[f64; 2]>, evals: Vec<ProfileEval>) -> Ridge2D {
        let eval_err: f64 = evals.iter().map(|e| e.err()).sum();
        let reach = evals.iter().map(|e| e.span()).map(|(a, b)| a.abs().max(b.abs())).fold(0.0, f64::max);
        let sup = evals
            .iter()
            .map(|e| {
                let (a, b) = e.span();
                let n = 4000;
                (0..=n).map(|i| e.eval(a + (b - a) * i as f64 / n as f64).abs()).fold(0.0, f64::max) + e.err()
            })
            .fold(0.0, f64::max);
        let sup = sup * 1.05;
        Ridge2D { network, center, dirs, evals, eval_err, reach, sup }
    }

    #[inline]
    pub fn eval_fast(&self, x: f64, y: f64) -> f64 {
        let (zx, zy) = (x - self.center[0], y - self.center[1]);
        let mut acc = 0.0;
        for (d, e) in self.dirs.iter().zip(&self.evals) {
            acc += e.eval(d[0] * zx + d[1] * zy);
        }
        acc
    }

    /// The exact piecewise-linear profiles, when realized with a piecewise-linear activation.
    pub fn pwl_profiles(&self) -> Option<Vec<PiecewiseLinear>> {
        self.evals
            .iter()
            .map(|e| match e {
                ProfileEval::Pwl(p) => Some(p.clone()),
                ProfileEval::Table(_) => None,
            })
            .collect()
    }

    /// Radius (around the center) beyond which at most one profile is away from its limits.
    pub fn single_hit_radius(&self) -> f64 {
        let n = self.dirs.len();
        self.reach / (PI / (2.0 * n as f64)).sin()
    }

    /// Certified sup |network − target| over ℝ².
    pub fn certify(&self, target: &CompactTarget, slack_target: f64) -> Result<SupNormCertificate> {
        let r = self.single_hit_radius().max(target.radius * 1.01);
        let floor = self.sup + self.eval_err;
        let tail = TailBound::vanishing(r).with_floor(floor);
        let oracle = DiffOracle { ridge: self, target };
        let opts = AdaptiveOptions { slack_target, max_nodes: 1024, initial_blocks: 16, max_depth: 40 };
        let mut c = certify::sup_norm_2d_adaptive(
            &oracle,
            Region::Disk { cx: self.center[0], cy: self.center[1], r },
            tail,
            opts,
        )?;
        c.grid_max += self.eval_err;
        c.total = (c.grid_max + c.lipschitz_slack).max(c.tail_bound);
        Ok(c)
    }
}

struct DiffOracle<'a, 'b> {
    ridge: &'a Ridge2D,
    target: &'a CompactTarget<'b>,
}

impl BlockOracle for DiffOracle<'_, '_> {
    fn eval(&self, x: f64, y: f64) -> f64 {
        self.ridge.eval_fast(x, y) - (self.target.eval)(x, y)
    }

    fn lipschitz(&self, x0: f64, x1: f64, y0: f64, y1: f64) -> f64 {
        let [cx, cy] = self.ridge.center;
        let mut l = 0.0;
        for (d, e) in self.ridge.dirs.iter().zip(&self.ridge.evals) {
            let p0 = d[0] * (x0 - cx) + d[1] * (y0 - cy);
            let p1 = d[0] * (x1 - cx) + d[1] * (y0 - cy);
            let p2 = d[0] * (x0 - cx) + d[1] * (y1 - cy);
            let p3 = d[0] * (x1 - cx) + d[1] * (y1 - cy);
            let lo = p0.min(p1).min(p2).min(p3);
            let hi = p0.max(p1).max(p2).max(p3);
            l += e.lipschitz_on(lo, hi);
        }
        let [tx, ty] = self.target.center;
        let dx = tx - tx.clamp(x0, x1);
        let dy = ty - ty.clamp(y0, y1);
        if dx * dx + dy * dy <= self.target.radius * self.target.radius {
            l += self.target.lipschitz;
        }
        l
    }
}

#[derive(Clone, Debug)]
pub struct Approx2D {
    pub ridge: Ridge2D,
    pub certificate: SupNormCertificate,
    pub params: FbpParams,
}

/// Parameter ladder, coarse to fine.
pub fn default_ladder() -> Vec<FbpParams> {
    vec![FbpParams::new(32, 1.0 / 8.0), FbpParams::new(48, 1.0 / 12.0), FbpParams::new(64, 1.0 / 12.0), FbpParams::new(96, 1.0 / 16.0)]
}

/// Climb the ladder until the certificate meets `eps`.
pub fn approx_2d(target: &CompactTarget, phi: &Activation, eps: f64, ladder: &[FbpParams]) -> Result<Approx2D> {
    let a = approx_2d_best(target, phi, eps, ladder)?;
    if a.certificate.total <= eps {
        Ok(a)
    } else {
        Err(Error::TargetNotMet { target: eps, achieved: a.certificate.total })
    }
}

/// Like `approx_2d`, but returns the best rung when none meets `eps`.
pub fn approx_2d_best(target: &CompactTarget, phi: &Activation, eps: f64, ladder: &[FbpParams]) -> Result<Approx2D> {
    let mut best: Option<Approx2D> = None;
    for params in ladder {
        let (dirs, profiles) = fbp_profiles(target, params)?;
        let ridge = Ridge2D::realize(target.center, dirs, profiles, phi, params.kappa)?;
        let cert = ridge.certify(target, (0.1 * eps).max(1e-6))?;
        let done = cert.total <= eps;
        if best.as_ref().map_or(true, |b| cert.total < b.certificate.total) {
            best = Some(Approx2D { ridge, certificate: cert, params: *params });
        }
        if done {
            break;
        }
    }
    best.ok_or_else(|| Error::InvalidInput("empty parameter ladder".into()))
}
