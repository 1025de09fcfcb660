//! One-dimensional φ-expansions of piecewise-linear functions.
//!
//! Piecewise-linear activations reproduce a piecewise-linear profile exactly.
//! Sigmoids build it from steps: every knot gap carries one 0→1 step whose
//! height is the jump between neighbouring knot values. Gaussian bumps use a
//! least-squares fit over translates.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::activation::{Activation, Asymptotics};
use crate::certify::{sup_norm_1d, SupNormCertificate};
use crate::error::{Error, Result};
use crate::network::Network;
use crate::pwl::PiecewiseLinear;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum AtomKind {
    Tanh,
    Logistic,
    SoftplusPair,
    /// clamp(u + ½, 0, 1), realized exactly.
    Ramp,
}

/// A symmetric 0→1 step S with S(−u) = 1 − S(u), written as Σ cᵢ φ(αᵢ u + γᵢ) + d.
#[derive(Clone, Debug, PartialEq)]
pub struct StepAtom {
    pub kind: AtomKind,
    pub activation: Activation,
    terms: Vec<(f64, f64, f64)>,
    offset: f64,
    d1: f64,
    d2: f64,
}

fn logistic(u: f64) -> f64 {
    if u >= 0.0 {
        1.0 / (1.0 + (-u).exp())
    } else {
        let e = u.exp();
        e / (1.0 + e)
    }
}

fn softplus(u: f64) -> f64 {
    if u > 0.0 {
        u + (-u).exp().ln_1p()
    } else {
        u.exp().ln_1p()
    }
}

impl StepAtom {
    pub fn new(phi: &Activation) -> Result<StepAtom> {
        let (kind, terms, offset) = match phi {
            Activation::Tanh => (AtomKind::Tanh, vec![(1.0, 0.0, 0.5)], 0.5),
            Activation::Logistic => (AtomKind::Logistic, vec![(1.0, 0.0, 1.0)], 0.0),
            Activation::Softplus => (AtomKind::SoftplusPair, vec![(1.0, 0.5, 1.0), (1.0, -0.5, -1.0)], 0.0),
            Activation::Relu => (AtomKind::Ramp, vec![(1.0, 0.5, 1.0), (1.0, -0.5, -1.0)], 0.0),
            Activation::LeakyRelu(a) => {
                let k = 1.0 / (1.0 - a);
                (AtomKind::Ramp, vec![(1.0, 0.5, k), (1.0, -0.5, -k)], -a * k)
            }
            Activation::UnitRamp => (AtomKind::Ramp, vec![(1.0, 0.5, 1.0)], 0.0),
            Activation::Pwl(p) => {
                let xs = p.xs();
                let ys = p.ys();
                if xs.len() == 2 && p.has_constant_tails() && ys[1] != ys[0] {
                    let w = xs[1] - xs[0];
                    let c = 1.0 / (ys[1] - ys[0]);
                    (AtomKind::Ramp, vec![(w, 0.5 * w + xs[0], c)], -ys[0] * c)
                } else if xs.len() == 1 && p.right_slope() != p.left_slope() {
                    let dl = p.right_slope() - p.left_slope();
                    let c = 1.0 / dl;
                    let x0 = xs[0];
                    (
                        AtomKind::Ramp,
                        vec![(1.0, x0 + 0.5, c), (1.0, x0 - 0.5, -c)],
                        -p.left_slope() * c,
                    )
                } else {
                    return Err(Error::UnsupportedActivationClass(format!(
                        "{}: only ramp-shaped or single-kink piecewise-linear activations build steps",
                        phi.name()
                    )));
                }
            }
            other => {
                return Err(Error::UnsupportedActivationClass(format!(
                    "{} does not yield a step function",
                    other.name()
                )))
            }
        };
        let mut atom = StepAtom { kind, activation: phi.clone(), terms, offset, d1: 1.0, d2: f64::INFINITY };
        if kind != AtomKind::Ramp {
            let (mut m1, mut m2): (f64, f64) = (0.0, 0.0);
            for i in 0..=20000 {
                let u = -10.0 + 20.0 * i as f64 / 20000.0;
                m1 = m1.max(atom.deriv(u).abs());
                m2 = m2.max(atom.deriv2(u).abs());
            }
            atom.d1 = m1 * 1.01;
            atom.d2 = m2 * 1.01;
        }
        Ok(atom)
    }

    /// S(u) from closed forms.
    pub fn s(&self, u: f64) -> f64 {
        match self.kind {
            AtomKind::Tanh => logistic(2.0 * u),
            AtomKind::Logistic => logistic(u),
            AtomKind::SoftplusPair => {
                if u < 0.0 {
                    softplus(u + 0.5) - softplus(u - 0.5)
                } else {
                    1.0 - (softplus(-u + 0.5) - softplus(-u - 0.5))
                }
            }
            AtomKind::Ramp => (u + 0.5).clamp(0.0, 1.0),
        }
    }

    pub fn deriv(&self, u: f64) -> f64 {
        match self.kind {
            AtomKind::Tanh => {
                let s = logistic(2.0 * u);
                2.0 * s * (1.0 - s)
            }
            AtomKind::Logistic => logistic(u) * logistic(-u),
            AtomKind::SoftplusPair => logistic(u + 0.5) - logistic(u - 0.5),
            AtomKind::Ramp => {
                if u.abs() < 0.5 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    fn deriv2(&self, u: f64) -> f64 {
        let lp = |v: f64| logistic(v) * logistic(-v);
        match self.kind {
            AtomKind::Tanh => {
                let s = logistic(2.0 * u);
                4.0 * s * (1.0 - s) * (1.0 - 2.0 * s)
            }
            AtomKind::Logistic => lp(u) * (1.0 - 2.0 * logistic(u)),
            AtomKind::SoftplusPair => lp(u + 0.5) - lp(u - 0.5),
            AtomKind::Ramp => 0.0,
        }
    }

    /// max(S(−d), 1 − S(d)) for d ≥ 0, i.e. the worst deviation from the limits at distance d.
    pub fn tail(&self, d: f64) -> f64 {
        self.s(-d.abs())
    }

    /// sup |S′(u)| over |u| ≥ d.
    pub fn deriv_beyond(&self, d: f64) -> f64 {
        if d <= 0.0 {
            return self.d1;
        }
        match self.kind {
            AtomKind::Ramp => {
                if d < 0.5 {
                    1.0
                } else {
                    0.0
                }
            }
            _ => self.deriv(d).min(self.d1),
        }
    }

    pub fn max_deriv(&self) -> f64 {
        self.d1
    }

    pub fn max_second_deriv(&self) -> f64 {
        self.d2
    }

    pub fn is_exact(&self) -> bool {
        self.kind == AtomKind::Ramp
    }

    /// φ-units (w, b, c) and constant d with S(w t + b) = Σ c φ(w' t + b') + d.
    pub fn units(&self, w: f64, b: f64) -> (Vec<(f64, f64, f64)>, f64) {
        let us = self.terms.iter().map(|&(a, g, c)| (a * w, a * b + g, c)).collect();
        (us, self.offset)
    }
}

/// base + Σ jumpⱼ · S(slopeⱼ (t − centerⱼ)).
#[derive(Clone, Debug)]
pub struct Staircase {
    pub atom: StepAtom,
    pub base: f64,
    pub steps: Vec<(f64, f64, f64)>,
}

impl Staircase {
    /// Steps at the gap midpoints of `p`'s knots, each gap split into `refine` pieces;
    /// slope = kappa / gap width. Requires constant tails.
    pub fn from_pwl(p: &PiecewiseLinear, atom: &StepAtom, refine: usize, kappa: f64) -> Result<Staircase> {
        if !p.has_constant_tails() {
            return Err(Error::UnsupportedActivationClass(
                "bounded steps cannot reproduce linear tails".into(),
            ));
        }
        let refine = refine.max(1);
        let xs = p.xs();
        let ys = p.ys();
        let mut steps = Vec::new();
        for i in 0..xs.len().saturating_sub(1) {
            let gap = (xs[i + 1] - xs[i]) / refine as f64;
            for m in 0..refine {
                let a = xs[i] + gap * m as f64;
                let b = if m + 1 == refine { xs[i + 1] } else { a + gap };
                let jump = p.eval(b) - p.eval(a);
                if jump != 0.0 {
                    steps.push((jump, kappa / (b - a), 0.5 * (a + b)));
                }
            }
        }
        Ok(Staircase { atom: atom.clone(), base: ys[0], steps })
    }

    pub fn eval(&self, t: f64) -> f64 {
        let mut acc = self.base;
        for &(j, s, c) in &self.steps {
            acc += j * self.atom.s(s * (t - c));
        }
        acc
    }

    /// Values at lo + i·step, skipping saturated steps; returns the saturation error too.
    pub fn tabulate(&self, lo: f64, step: f64, count: usize) -> (Vec<f64>, f64) {
        const CUT: f64 = 25.0;
        let exact = self.atom.is_exact();
        let cut_err = if exact { 0.0 } else { self.steps.iter().map(|s| s.0.abs()).sum::<f64>() * self.atom.tail(CUT) };
        let mut order: Vec<usize> = (0..self.steps.len()).collect();
        order.sort_by(|&a, &b| self.steps[a].2.total_cmp(&self.steps[b].2));
        let reach: Vec<f64> = order.iter().map(|&j| if exact { 0.5 } else { CUT } / self.steps[j].1).collect();
        let max_reach = reach.iter().copied().fold(0.0, f64::max);
        let centers: Vec<f64> = order.iter().map(|&j| self.steps[j].2).collect();
        let values = (0..count)
            .map(|i| {
                let t = lo + step * i as f64;
                let mut acc = self.base;
                // steps far to the left are saturated at 1
                let first = centers.partition_point(|c| *c < t - max_reach);
                for &j in &order[..first] {
                    acc += self.steps[j].0;
                }
                for (k, &j) in order.iter().enumerate().skip(first) {
                    let (jump, s, c) = self.steps[j];
                    if c > t + max_reach {
                        break;
                    }
                    let d = t - c;
                    if d > reach[k] {
                        acc += jump;
                    } else if d >= -reach[k] {
                        acc += jump * self.atom.s(s * d);
                    }
                }
                acc
            })
            .collect();
        (values, cut_err)
    }

    pub fn left_limit(&self) -> f64 {
        self.base
    }

    pub fn right_limit(&self) -> f64 {
        self.base + self.steps.iter().map(|s| s.0).sum::<f64>()
    }

    /// Lipschitz bound on [t0, t1].
    pub fn lipschitz_on(&self, t0: f64, t1: f64) -> f64 {
        self.steps
            .iter()
            .map(|&(j, s, c)| {
                let d = if c < t0 {
                    t0 - c
                } else if c > t1 {
                    c - t1
                } else {
                    0.0
                };
                j.abs() * s * self.atom.deriv_beyond(s * d)
            })
            .sum()
    }

    pub fn max_second_deriv(&self) -> f64 {
        self.steps.iter().map(|&(j, s, _)| j.abs() * s * s).sum::<f64>() * self.atom.max_second_deriv()
    }

    /// Deviation from the left limit for t ≤ t0 (or right limit for t ≥ t0 when `right`).
    pub fn tail_beyond(&self, t0: f64, right: bool) -> f64 {
        self.steps
            .iter()
            .map(|&(j, s, c)| {
                let d = if right { t0 - c } else { c - t0 };
                if d <= 0.0 {
                    f64::INFINITY
                } else {
                    j.abs() * self.atom.tail(s * d)
                }
            })
            .sum()
    }

    /// Span outside which the staircase is within `tol` of its limits.
    pub fn active_span(&self, tol: f64) -> (f64, f64) {
        if self.steps.is_empty() {
            return (0.0, 0.0);
        }
        let lo = self.steps.iter().map(|s| s.2).fold(f64::INFINITY, f64::min);
        let hi = self.steps.iter().map(|s| s.2).fold(f64::NEG_INFINITY, f64::max);
        let smin = self.steps.iter().map(|s| s.1).fold(f64::INFINITY, f64::min);
        let mut d = 0.5 / smin;
        while self.tail_beyond(hi + d, true).max(self.tail_beyond(lo - d, false)) > tol && d < 1e6 {
            d *= 1.25;
        }
        (lo - d, hi + d)
    }

    /// Units over x ∈ ℝⁿ for t = a·x + shift.
    pub fn ridge_units(&self, a: &[f64], shift: f64, coeff: f64) -> (Vec<(Vec<f64>, f64, f64)>, f64) {
        let mut units = Vec::new();
        let mut bias = coeff * self.base;
        for &(j, s, c) in &self.steps {
            let (us, d) = self.atom.units(s, s * (shift - c));
            for (w, b, cc) in us {
                units.push((a.iter().map(|ai| w * ai).collect(), b, coeff * j * cc));
            }
            bias += coeff * j * d;
        }
        (units, bias)
    }

    pub fn to_network(&self) -> Network {
        let (units, bias) = self.ridge_units(&[1.0], 0.0, 1.0);
        Network::one_layer(1, self.atom.activation.clone(), units, bias).expect("well-formed staircase")
    }
}

/// Piecewise-linear function realized exactly by a piecewise-linear activation.
/// Returns units (w, b, c) for t = a·x + shift, plus the output bias.
pub fn exact_pwl_units(
    p: &PiecewiseLinear,
    phi: &Activation,
    a: &[f64],
    shift: f64,
    coeff: f64,
) -> Result<(Vec<(Vec<f64>, f64, f64)>, f64)> {
    let xs = p.xs();
    let ys = p.ys();
    let slopes = p.slopes();
    let mut all = vec![p.left_slope()];
    all.extend(slopes);
    all.push(p.right_slope());
    let dir = |w: f64| a.iter().map(|ai| w * ai).collect::<Vec<f64>>();
    let mut units = Vec::new();
    match phi {
        Activation::UnitRamp => {
            if !p.has_constant_tails() {
                return Err(Error::UnsupportedActivationClass("unit ramp cannot reproduce linear tails".into()));
            }
            for i in 0..xs.len() - 1 {
                let w = 1.0 / (xs[i + 1] - xs[i]);
                let dy = ys[i + 1] - ys[i];
                if dy != 0.0 {
                    units.push((dir(w), w * (shift - xs[i]), coeff * dy));
                }
            }
            Ok((units, coeff * ys[0]))
        }
        Activation::Pwl(q) if q.xs().len() == 2 && q.has_constant_tails() => {
            let atom = StepAtom::new(phi)?;
            if !p.has_constant_tails() {
                return Err(Error::UnsupportedActivationClass("bounded ramp cannot reproduce linear tails".into()));
            }
            let mut bias = coeff * ys[0];
            for i in 0..xs.len() - 1 {
                let w = 1.0 / (xs[i + 1] - xs[i]);
                let dy = ys[i + 1] - ys[i];
                if dy == 0.0 {
                    continue;
                }
                let (us, d) = atom.units(w, w * (shift - xs[i]) - 0.5);
                for (ww, b, c) in us {
                    units.push((dir(ww), b, coeff * dy * c));
                }
                bias += coeff * dy * d;
            }
            Ok((units, bias))
        }
        _ => {
            // single-kink φ(x0 + u) = y0 + sL u + Δ ReLU(u)
            let (x0, y0, sl, sr) = match phi {
                Activation::Relu => (0.0, 0.0, 0.0, 1.0),
                Activation::LeakyRelu(al) => (0.0, 0.0, *al, 1.0),
                Activation::Pwl(q) if q.xs().len() == 1 => (q.xs()[0], q.ys()[0], q.left_slope(), q.right_slope()),
                other => {
                    return Err(Error::UnsupportedActivationClass(format!(
                        "{} is not a piecewise-linear activation",
                        other.name()
                    )))
                }
            };
            let dl = sr - sl;
            if dl == 0.0 || sl + sr == 0.0 {
                return Err(Error::UnsupportedActivationClass(format!("{} has no usable kink", phi.name())));
            }
            // g(t) = ys[0] + all[0]·(t − xs[0]) + Σ Δsᵢ ReLU(t − xsᵢ)
            let mut lin = all[0];
            let mut cst = ys[0] - all[0] * xs[0];
            for (i, &k) in xs.iter().enumerate() {
                let ds = all[i + 1] - all[i];
                if ds == 0.0 {
                    continue;
                }
                // ReLU(u) = (φ(x0 + u) − y0 − sL u)/Δ with u = t − k
                units.push((dir(1.0), shift - k + x0, coeff * ds / dl));
                cst -= ds * (y0 - sl * k) / dl;
                lin -= ds * sl / dl;
            }
            // t = (φ(x0 + t) − φ(x0 − t))/(sL + sR)
            let lc = lin / (sl + sr);
            units.push((dir(1.0), shift + x0, coeff * lc));
            units.push((dir(-1.0), -shift + x0, -coeff * lc));
            Ok((units, coeff * cst))
        }
    }
}

/// Whether φ reproduces piecewise-linear profiles exactly.
pub fn is_exact_class(phi: &Activation) -> bool {
    match phi {
        Activation::Relu | Activation::LeakyRelu(_) | Activation::UnitRamp => true,
        Activation::Pwl(q) => {
            (q.xs().len() == 2 && q.has_constant_tails() && q.ys()[0] != q.ys()[1])
                || (q.xs().len() == 1 && q.left_slope() != q.right_slope() && q.left_slope() + q.right_slope() != 0.0)
        }
        _ => false,
    }
}

#[derive(Clone, Debug)]
pub struct Expansion {
    pub network: Network,
    /// Certified sup |network − target|; for exact classes, the float rounding allowance on the certificate's domain.
    pub bound: f64,
    pub certificate: SupNormCertificate,
}

/// Grid count used by 1-D certificates.
const GRID_1D: f64 = 20000.0;

const GRID_1D_MAX: f64 = 4.0e6;

fn certify_1d<F: Fn(f64) -> f64 + Sync>(diff: F, lo: f64, hi: f64, lipschitz: f64, tail: f64, eps: f64) -> SupNormCertificate {
    let c = 0.5 * (lo + hi);
    let r = 0.5 * (hi - lo);
    // slack L·h/2 aimed at ε/8
    let nodes = if eps > 0.0 { (8.0 * lipschitz * r / eps).clamp(GRID_1D, GRID_1D_MAX) } else { GRID_1D };
    let h = (2.0 * r / nodes).max(1e-9);
    sup_norm_1d(diff, c, lipschitz, tail, r, h)
}

/// φ-network for a piecewise-linear target with certified sup error ≤ ε.
pub fn expand_pwl(p: &PiecewiseLinear, phi: &Activation, eps: f64) -> Result<Expansion> {
    if is_exact_class(phi) {
        let (units, bias) = exact_pwl_units(p, phi, &[1.0], 0.0, 1.0)?;
        let network = Network::one_layer(1, phi.clone(), units, bias)?;
        let (k0, k1) = p.support();
        let radius = k0.abs().max(k1.abs()) + 4.0 * (k1 - k0) + 4.0;
        let certificate = SupNormCertificate::rounding(&network, radius, p.ys().iter().fold(0.0, |m, y| m.max(y.abs())));
        return Ok(Expansion { network, bound: certificate.total, certificate });
    }
    match phi.asymptotics() {
        Asymptotics::FiniteLimits { left, right } if left != right => expand_steps(p, phi, eps),
        Asymptotics::FiniteLimits { .. } if matches!(phi, Activation::Gaussian) => expand_gaussian(p, eps),
        Asymptotics::AsympLinear { .. } if matches!(phi, Activation::Softplus) => expand_steps(p, phi, eps),
        _ => Err(Error::UnsupportedActivationClass(format!(
            "{}: no constructive expansion for this class",
            phi.name()
        ))),
    }
}

fn expand_steps(p: &PiecewiseLinear, phi: &Activation, eps: f64) -> Result<Expansion> {
    let atom = StepAtom::new(phi)?;
    let (k0, k1) = p.support();
    let lg = p.lipschitz();
    let mut best = f64::INFINITY;
    let mut refine = 1;
    while refine <= 4096 {
        let st = Staircase::from_pwl(p, &atom, refine, 2.0)?;
        let net = st.to_network();
        let margin = 40.0 * (k1 - k0).max(1e-9) / refine as f64 / 2.0;
        let (lo, hi) = (k0 - margin, k1 + margin);
        let tail = st.tail_beyond(hi, true).max(st.tail_beyond(lo, false))
            + (st.right_limit() - p.eval(hi)).abs().max((st.left_limit() - p.eval(lo)).abs());
        let cert = certify_1d(
            |t| net.eval_unchecked(&[t]) - p.eval(t),
            lo,
            hi,
            lg + st.lipschitz_on(lo, hi),
            tail,
            eps,
        );
        best = best.min(cert.total);
        if cert.total <= eps {
            return Ok(Expansion { network: net, bound: cert.total, certificate: cert });
        }
        if eps <= 0.0 {
            break;
        }
        refine *= 2;
    }
    Err(Error::TargetNotMet { target: eps, achieved: best })
}

fn expand_gaussian(p: &PiecewiseLinear, eps: f64) -> Result<Expansion> {
    if !p.is_compact() {
        return Err(Error::UnsupportedActivationClass(
            "gaussian expansions need a compactly supported profile".into(),
        ));
    }
    let (k0, k1) = p.support();
    let span = k1 - k0;
    let lg = p.lipschitz();
    let mut best = f64::INFINITY;
    let mut m = 8usize;
    while m <= 512 {
        let spacing = span / m as f64;
        let width = 1.5 * spacing;
        let centers: Vec<f64> = (0..=m).map(|i| k0 + spacing * i as f64).collect();
        let samples: Vec<f64> = (0..=8 * m).map(|i| k0 - 2.0 * width + (span + 4.0 * width) * i as f64 / (8 * m) as f64).collect();
        let a = DMatrix::from_fn(samples.len(), centers.len(), |i, j| {
            let z = (samples[i] - centers[j]) / width;
            (-z * z).exp()
        });
        let b = DVector::from_iterator(samples.len(), samples.iter().map(|t| p.eval(*t)));
        let svd = a.svd(true, true);
        let c = svd.solve(&b, 1e-10).map_err(|e| Error::NonConvergent(e.to_string()))?;
        let units: Vec<(Vec<f64>, f64, f64)> =
            centers.iter().zip(c.iter()).map(|(mu, ci)| (vec![1.0 / width], -mu / width, *ci)).collect();
        let csum: f64 = c.iter().map(|x| x.abs()).sum();
        let net = Network::one_layer(1, Activation::Gaussian, units, 0.0)?;
        let margin = 6.0 * width;
        let (lo, hi) = (k0 - margin, k1 + margin);
        let tail = csum * (-36.0f64).exp();
        let lnet = csum / width * Activation::Gaussian.lipschitz();
        let cert = certify_1d(|t| net.eval_unchecked(&[t]) - p.eval(t), lo, hi, lg + lnet, tail, eps);
        best = best.min(cert.total);
        if cert.total <= eps {
            return Ok(Expansion { network: net, bound: cert.total, certificate: cert });
        }
        if eps <= 0.0 {
            break;
        }
        m *= 2;
    }
    Err(Error::TargetNotMet { target: eps, achieved: best })
}

/// Linear-interpolation table of a staircase with a rigorous evaluation error.
#[derive(Clone, Debug)]
pub struct StairTable {
    lo: f64,
    step: f64,
    values: Vec<f64>,
    left: f64,
    right: f64,
    /// |table(t) − staircase(t)| ≤ err for all t.
    pub err: f64,
    cell_lip: Vec<Vec<f64>>,
    cell: f64,
}

impl StairTable {
    pub fn new(st: &Staircase, target_err: f64) -> StairTable {
        let (lo, hi) = st.active_span(target_err * 0.5);
        let g2 = st.max_second_deriv();
        let step = if g2 > 0.0 { (4.0 * target_err / g2).sqrt() } else { (hi - lo).max(1e-9) };
        let n = (((hi - lo) / step).ceil() as usize).max(1);
        let step = (hi - lo) / n as f64;
        let (values, cut_err) = st.tabulate(lo, step, n + 1);
        let interp_err = step * step / 8.0 * g2 + cut_err;
        let out_err = st.tail_beyond(hi, true).max(st.tail_beyond(lo, false));
        let cells = 1024.min(n).max(1);
        let cell = (hi - lo) / cells as f64;
        let base: Vec<f64> = (0..cells)
            .map(|i| st.lipschitz_on(lo + cell * i as f64, lo + cell * (i + 1) as f64))
            .collect();
        let mut cell_lip = vec![base];
        while cell_lip.last().unwrap().len() > 1 {
            let prev = cell_lip.last().unwrap();
            let next: Vec<f64> = prev.chunks(2).map(|c| c.iter().copied().fold(0.0, f64::max)).collect();
            cell_lip.push(next);
        }
        StairTable {
            lo,
            step,
            values,
            left: st.left_limit(),
            right: st.right_limit(),
            err: interp_err.max(out_err) + 1e-15,
            cell_lip,
            cell,
        }
    }

    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        let u = (t - self.lo) / self.step;
        if u <= 0.0 {
            return self.left;
        }
        let i = u as usize;
        if i + 1 >= self.values.len() {
            return self.right;
        }
        let f = u - i as f64;
        self.values[i] + f * (self.values[i + 1] - self.values[i])
    }

    pub fn span(&self) -> (f64, f64) {
        (self.lo, self.lo + self.step * (self.values.len() - 1) as f64)
    }

    /// Lipschitz bound of the underlying staircase on [t0, t1].
    pub fn lipschitz_on(&self, t0: f64, t1: f64) -> f64 {
        let n = self.cell_lip[0].len();
        let idx = |t: f64| (((t - self.lo) / self.cell).floor().max(0.0) as usize).min(n - 1);
        let (mut a, mut b) = (idx(t0), idx(t1));
        // segment-tree style range max over levels
        let mut best: f64 = 0.0;
        let mut level = 0;
        while a <= b {
            if a == b {
                best = best.max(self.cell_lip[level][a]);
                break;
            }
            if a % 2 == 1 {
                best = best.max(self.cell_lip[level][a]);
                a += 1;
            }
            if b % 2 == 0 {
                best = best.max(self.cell_lip[level][b]);
                if b == 0 {
                    break;
                }
                b -= 1;
            }
            if a > b {
                break;
            }
            a /= 2;
            b /= 2;
            level += 1;
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn std_profile() -> PiecewiseLinear {
        PiecewiseLinear::compact(vec![(-2.0, 0.0), (-1.0, -0.25), (0.0, 0.5), (1.0, -0.25), (2.0, 0.0)]).unwrap()
    }

    #[test]
    fn atoms_are_symmetric_steps() {
        for phi in [Activation::Tanh, Activation::Logistic, Activation::Softplus, Activation::Relu, Activation::LeakyRelu(0.01), Activation::UnitRamp] {
            let a = StepAtom::new(&phi).unwrap();
            for &u in &[-3.0, -0.7, 0.0, 0.2, 1.3, 8.0] {
                let (us, d) = a.units(1.0, u);
                let via: f64 = us.iter().map(|(w, b, c)| c * phi.eval(w * 0.0 + b)).sum::<f64>() + d;
                assert!((via - a.s(u)).abs() < 1e-12, "{} at {u}", phi.name());
                assert!((a.s(-u) - (1.0 - a.s(u))).abs() < 1e-12);
            }
        }
        assert!(StepAtom::new(&Activation::Gaussian).is_err());
    }

    #[test]
    fn relu_standard_profile_seven_units() {
        let e = expand_pwl(&std_profile(), &Activation::Relu, 0.0).unwrap();
        assert_eq!(e.network.unit_count(), 7);
        assert!(e.bound > 0.0 && e.bound < 1e-11);
        for i in 0..=400 {
            let t = -3.0 + 6.0 * i as f64 / 400.0;
            assert!((e.network.evaluate(&[t]).unwrap() - std_profile().eval(t)).abs() < 1e-15);
        }
    }

    #[test]
    fn exact_classes_reproduce() {
        let q = PiecewiseLinear::new(vec![(-1.0, 2.0), (0.5, -1.0), (2.0, 0.0)], 0.3, -0.2).unwrap();
        for phi in [Activation::Relu, Activation::LeakyRelu(0.1)] {
            let e = expand_pwl(&q, &phi, 0.0).unwrap();
            for i in 0..=100 {
                let t = -5.0 + 10.0 * i as f64 / 100.0;
                assert!((e.network.evaluate(&[t]).unwrap() - q.eval(t)).abs() < 1e-12);
            }
        }
        let e = expand_pwl(&std_profile(), &Activation::UnitRamp, 0.0).unwrap();
        let ramp = Activation::Pwl(PiecewiseLinear::ramp(-1.0, 3.0).unwrap());
        let e2 = expand_pwl(&std_profile(), &ramp, 0.0).unwrap();
        for i in 0..=100 {
            let t = -3.0 + 6.0 * i as f64 / 100.0;
            assert!((e.network.evaluate(&[t]).unwrap() - std_profile().eval(t)).abs() < 1e-14);
            assert!((e2.network.evaluate(&[t]).unwrap() - std_profile().eval(t)).abs() < 1e-14);
        }
    }

    #[test]
    fn tanh_expansion_certified() {
        let p = std_profile();
        let e = expand_pwl(&p, &Activation::Tanh, 0.05).unwrap();
        assert!(e.bound <= 0.05);
        let dense = (0..200001)
            .map(|i| {
                let t = -10.0 + 20.0 * i as f64 / 200000.0;
                (e.network.evaluate(&[t]).unwrap() - p.eval(t)).abs()
            })
            .fold(0.0, f64::max);
        assert!(dense <= e.bound);
        assert!(matches!(expand_pwl(&p, &Activation::Tanh, 0.0), Err(Error::TargetNotMet { .. })));
    }

    #[test]
    fn other_sigmoids_and_gaussian() {
        let p = std_profile();
        for phi in [Activation::Logistic, Activation::Softplus, Activation::Gaussian] {
            let e = expand_pwl(&p, &phi, 0.02).unwrap();
            assert!(e.bound <= 0.02, "{}", phi.name());
        }
        assert!(matches!(expand_pwl(&p, &Activation::Identity, 0.1), Err(Error::UnsupportedActivationClass(_))));
    }

    #[test]
    fn table_error_and_lipschitz() {
        let atom = StepAtom::new(&Activation::Tanh).unwrap();
        let st = Staircase::from_pwl(&std_profile(), &atom, 4, 2.0).unwrap();
        let tab = StairTable::new(&st, 1e-7);
        let mut worst: f64 = 0.0;
        for i in 0..100000 {
            let t = -4.0 + 8.0 * i as f64 / 100000.0;
            worst = worst.max((tab.eval(t) - st.eval(t)).abs());
        }
        assert!(worst <= tab.err && tab.err < 1e-6);
        for &(a, b) in &[(-0.3, 0.1), (-2.5, 2.5), (1.9, 2.0), (-9.0, -8.0)] {
            let l = tab.lipschitz_on(a, b);
            let n = 2000;
            let mut emp: f64 = 0.0;
            for i in 0..n {
                let t0 = a + (b - a) * i as f64 / n as f64;
                let t1 = t0 + (b - a) / n as f64;
                emp = emp.max((st.eval(t1) - st.eval(t0)).abs() / (t1 - t0));
            }
            assert!(emp <= l * (1.0 + 1e-9) + 1e-12, "{a} {b}: {emp} > {l}");
        }
    }
}
