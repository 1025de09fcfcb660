//! Activation functions, their asymptotic classes, and finite-difference bumps.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{Layer, Network, Unit};
use crate::pwl::PiecewiseLinear;

pub const LEAKY_ALPHA: f64 = 0.01;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ActRepr", into = "ActRepr")]
pub enum Activation {
    Relu,
    LeakyRelu(f64),
    Softplus,
    Tanh,
    Logistic,
    Gaussian,
    /// v₁(x) = max(0, min(1, x))
    UnitRamp,
    Identity,
    Pwl(PiecewiseLinear),
    Scaled(f64, Box<Activation>),
    /// x ↦ φ(x−2) − 2φ(x−1) + φ(x)
    SecondDiff(Box<Activation>),
    /// x ↦ φ(x) − φ(x−1)
    ShiftDiff(Box<Activation>),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum ActRepr {
    Name(String),
    Pwl(PiecewiseLinear),
    Second { second_difference: Box<ActRepr> },
    Shift { shift_difference: Box<ActRepr> },
    Scaled { scale: f64, of: Box<ActRepr> },
}

impl TryFrom<ActRepr> for Activation {
    type Error = Error;
    fn try_from(r: ActRepr) -> Result<Self> {
        Ok(match r {
            ActRepr::Name(s) => Activation::from_name(&s)?,
            ActRepr::Pwl(p) => Activation::Pwl(p),
            ActRepr::Second { second_difference } => {
                Activation::SecondDiff(Box::new((*second_difference).try_into()?))
            }
            ActRepr::Shift { shift_difference } => {
                Activation::ShiftDiff(Box::new((*shift_difference).try_into()?))
            }
            ActRepr::Scaled { scale, of } => Activation::Scaled(scale, Box::new((*of).try_into()?)),
        })
    }
}

impl From<Activation> for ActRepr {
    fn from(a: Activation) -> Self {
        match a {
            Activation::Pwl(p) => ActRepr::Pwl(p),
            Activation::SecondDiff(b) => ActRepr::Second { second_difference: Box::new((*b).into()) },
            Activation::ShiftDiff(b) => ActRepr::Shift { shift_difference: Box::new((*b).into()) },
            Activation::Scaled(c, b) => ActRepr::Scaled { scale: c, of: Box::new((*b).into()) },
            Activation::LeakyRelu(a) if a != LEAKY_ALPHA => {
                ActRepr::Name(format!("leaky_relu:{a}"))
            }
            other => ActRepr::Name(other.name()),
        }
    }
}

/// Asymptotic class of a scalar function.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Asymptotics {
    /// Limits at −∞ and +∞.
    FiniteLimits { left: f64, right: f64 },
    /// φ(x) ≈ a1·x + b1 as x→+∞ and φ(x) ≈ a2·x + b2 as x→−∞.
    AsympLinear { a1: f64, b1: f64, a2: f64, b2: f64 },
    Other,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum AsymptoticTag {
    FiniteEqual,
    FiniteDistinct,
    AsympLinear,
    Other,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Classification {
    pub tag: AsymptoticTag,
    pub asymptotics: Asymptotics,
    /// Spread of the last three probe estimates, worst side.
    pub residual: f64,
}

/// An interval on which φ is affine (or within `err` of affine) with nonzero slope.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearRegime {
    pub center: f64,
    pub value: f64,
    pub slope: f64,
    /// |φ(center+z) − value − slope·z| ≤ cubic·|z|³ for all z.
    pub cubic: f64,
    /// Half-width of an exactly affine window around `center`, if any.
    pub exact_halfwidth: Option<f64>,
}

impl Activation {
    pub fn from_name(s: &str) -> Result<Self> {
        let s = s.trim();
        Ok(match s {
            "relu" => Activation::Relu,
            "leaky_relu" => Activation::LeakyRelu(LEAKY_ALPHA),
            "softplus" => Activation::Softplus,
            "tanh" => Activation::Tanh,
            "logistic" | "sigmoid" => Activation::Logistic,
            "gaussian" => Activation::Gaussian,
            "unit_ramp" | "v1" => Activation::UnitRamp,
            "identity" => Activation::Identity,
            _ => {
                if let Some(a) = s.strip_prefix("leaky_relu:") {
                    let a: f64 = a
                        .parse()
                        .map_err(|_| Error::InvalidInput(format!("bad leaky slope in {s:?}")))?;
                    return Ok(Activation::LeakyRelu(a));
                }
                return Err(Error::InvalidInput(format!("unknown activation {s:?}")));
            }
        })
    }

    pub fn builtins() -> Vec<Activation> {
        vec![
            Activation::Relu,
            Activation::LeakyRelu(LEAKY_ALPHA),
            Activation::Softplus,
            Activation::Tanh,
            Activation::Logistic,
            Activation::Gaussian,
            Activation::UnitRamp,
        ]
    }

    pub fn name(&self) -> String {
        match self {
            Activation::Relu => "relu".into(),
            Activation::LeakyRelu(a) if *a == LEAKY_ALPHA => "leaky_relu".into(),
            Activation::LeakyRelu(a) => format!("leaky_relu:{a}"),
            Activation::Softplus => "softplus".into(),
            Activation::Tanh => "tanh".into(),
            Activation::Logistic => "logistic".into(),
            Activation::Gaussian => "gaussian".into(),
            Activation::UnitRamp => "unit_ramp".into(),
            Activation::Identity => "identity".into(),
            Activation::Pwl(_) => "pwl".into(),
            Activation::Scaled(c, b) => format!("{c}*{}", b.name()),
            Activation::SecondDiff(b) => format!("second_difference({})", b.name()),
            Activation::ShiftDiff(b) => format!("shift_difference({})", b.name()),
        }
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Activation::Relu => {
                if x > 0.0 {
                    x
                } else {
                    0.0
                }
            }
            Activation::LeakyRelu(a) => {
                if x > 0.0 {
                    x
                } else {
                    a * x
                }
            }
            Activation::Softplus => {
                if x > 0.0 {
                    x + (-x).exp().ln_1p()
                } else {
                    x.exp().ln_1p()
                }
            }
            Activation::Tanh => x.tanh(),
            Activation::Logistic => {
                if x >= 0.0 {
                    1.0 / (1.0 + (-x).exp())
                } else {
                    let e = x.exp();
                    e / (1.0 + e)
                }
            }
            Activation::Gaussian => (-x * x).exp(),
            Activation::UnitRamp => x.clamp(0.0, 1.0),
            Activation::Identity => x,
            Activation::Pwl(p) => p.eval(x),
            Activation::Scaled(c, b) => c * b.eval(x),
            // Same operation order as Network::evaluate on second_difference_network.
            Activation::SecondDiff(b) => {
                let mut acc = 0.0;
                acc += 1.0 * b.eval(x * 1.0 + -2.0);
                acc += -2.0 * b.eval(x * 1.0 + -1.0);
                acc += 1.0 * b.eval(x * 1.0 + 0.0);
                acc + 0.0
            }
            Activation::ShiftDiff(b) => {
                let mut acc = 0.0;
                acc += 1.0 * b.eval(x * 1.0 + 0.0);
                acc += -1.0 * b.eval(x * 1.0 + -1.0);
                acc + 0.0
            }
        }
    }

    /// Recorded asymptotics for built-ins; derived kinds are computed from their parts.
    pub fn asymptotics(&self) -> Asymptotics {
        use Asymptotics::*;
        match self {
            Activation::Relu => AsympLinear { a1: 1.0, b1: 0.0, a2: 0.0, b2: 0.0 },
            Activation::LeakyRelu(a) => AsympLinear { a1: 1.0, b1: 0.0, a2: *a, b2: 0.0 },
            Activation::Softplus => AsympLinear { a1: 1.0, b1: 0.0, a2: 0.0, b2: 0.0 },
            Activation::Tanh => FiniteLimits { left: -1.0, right: 1.0 },
            Activation::Logistic => FiniteLimits { left: 0.0, right: 1.0 },
            Activation::Gaussian => FiniteLimits { left: 0.0, right: 0.0 },
            Activation::UnitRamp => FiniteLimits { left: 0.0, right: 1.0 },
            Activation::Identity => AsympLinear { a1: 1.0, b1: 0.0, a2: 1.0, b2: 0.0 },
            Activation::Pwl(p) => {
                let (x0, xn) = p.support();
                let (y0, yn) = (p.ys()[0], *p.ys().last().unwrap());
                if p.left_slope() == 0.0 && p.right_slope() == 0.0 {
                    FiniteLimits { left: y0, right: yn }
                } else {
                    AsympLinear {
                        a1: p.right_slope(),
                        b1: yn - p.right_slope() * xn,
                        a2: p.left_slope(),
                        b2: y0 - p.left_slope() * x0,
                    }
                }
            }
            Activation::Scaled(c, b) => match b.asymptotics() {
                FiniteLimits { left, right } => FiniteLimits { left: c * left, right: c * right },
                AsympLinear { a1, b1, a2, b2 } => {
                    AsympLinear { a1: c * a1, b1: c * b1, a2: c * a2, b2: c * b2 }
                }
                Other => Other,
            },
            Activation::SecondDiff(b) => match b.asymptotics() {
                FiniteLimits { .. } | AsympLinear { .. } => FiniteLimits { left: 0.0, right: 0.0 },
                Other => Other,
            },
            Activation::ShiftDiff(b) => match b.asymptotics() {
                FiniteLimits { .. } => FiniteLimits { left: 0.0, right: 0.0 },
                AsympLinear { a1, a2, .. } => FiniteLimits { left: a2, right: a1 },
                Other => Other,
            },
        }
    }

    pub fn has_distinct_limits(&self) -> bool {
        matches!(self.asymptotics(), Asymptotics::FiniteLimits { left, right } if left != right)
    }

    /// Global Lipschitz constant.
    pub fn lipschitz(&self) -> f64 {
        match self {
            Activation::Relu | Activation::Softplus | Activation::Tanh => 1.0,
            Activation::LeakyRelu(a) => a.abs().max(1.0),
            Activation::Logistic => 0.25,
            Activation::Gaussian => std::f64::consts::SQRT_2 * (-0.5f64).exp(),
            Activation::UnitRamp | Activation::Identity => 1.0,
            Activation::Pwl(p) => p.lipschitz(),
            Activation::Scaled(c, b) => c.abs() * b.lipschitz(),
            Activation::SecondDiff(b) => 4.0 * b.lipschitz(),
            Activation::ShiftDiff(b) => 2.0 * b.lipschitz(),
        }
    }

    /// sup |φ| over ℝ (infinite when unbounded).
    pub fn sup_abs(&self) -> f64 {
        match self {
            Activation::Tanh | Activation::Logistic | Activation::Gaussian | Activation::UnitRamp => 1.0,
            Activation::Pwl(p) => p.sup_abs(),
            Activation::Scaled(c, b) => c.abs() * b.sup_abs(),
            Activation::ShiftDiff(b) => match b.asymptotics() {
                Asymptotics::FiniteLimits { .. } => 2.0 * b.sup_abs(),
                _ => f64::INFINITY,
            },
            _ => f64::INFINITY,
        }
    }

    /// Where φ is affine (or nearly so) with nonzero slope, for embedding a layer as identity.
    pub fn linear_regime(&self) -> Option<LinearRegime> {
        match self {
            Activation::Tanh => Some(LinearRegime {
                center: 0.0,
                value: 0.0,
                slope: 1.0,
                cubic: 1.0 / 3.0,
                exact_halfwidth: None,
            }),
            Activation::Logistic => Some(LinearRegime {
                center: 0.0,
                value: 0.5,
                slope: 0.25,
                cubic: 1.0 / 48.0,
                exact_halfwidth: None,
            }),
            Activation::Relu | Activation::LeakyRelu(_) | Activation::Identity => Some(LinearRegime {
                center: 0.0,
                value: 0.0,
                slope: 1.0,
                cubic: 0.0,
                exact_halfwidth: Some(f64::INFINITY),
            }),
            Activation::UnitRamp => Some(LinearRegime {
                center: 0.5,
                value: 0.5,
                slope: 1.0,
                cubic: 0.0,
                exact_halfwidth: Some(0.5),
            }),
            Activation::Pwl(p) => {
                let xs = p.xs();
                let ys = p.ys();
                if p.right_slope() != 0.0 {
                    let x = *xs.last().unwrap();
                    return Some(LinearRegime {
                        center: x,
                        value: *ys.last().unwrap(),
                        slope: p.right_slope(),
                        cubic: 0.0,
                        exact_halfwidth: Some(0.0),
                    });
                }
                for i in 0..xs.len() - 1 {
                    let s = (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i]);
                    if s != 0.0 {
                        let c = 0.5 * (xs[i] + xs[i + 1]);
                        return Some(LinearRegime {
                            center: c,
                            value: p.eval(c),
                            slope: s,
                            cubic: 0.0,
                            exact_halfwidth: Some(0.5 * (xs[i + 1] - xs[i])),
                        });
                    }
                }
                None
            }
            _ => None,
        }
    }
}

/// Default geometric probes t = 2ᵏ, k = 4..20.
pub fn default_probes() -> Vec<f64> {
    (4..=20).map(|k| 2f64.powi(k)).collect()
}

const CLASSIFY_TOL: f64 = 1e-8;

enum Side {
    Limit(f64, f64),
    Linear(f64, f64, f64),
    Diverging,
}

fn classify_side(phi: &dyn Fn(f64) -> f64, name: &str, ts: &[f64], sign: f64) -> Result<Side> {
    let v: Vec<f64> = ts.iter().map(|&t| phi(sign * t)).collect();
    let n = v.len();
    let last3 = &v[n - 3..];
    let spread = |w: &[f64]| {
        let lo = w.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        hi - lo
    };
    if last3.iter().all(|x| x.is_finite()) && spread(last3) <= CLASSIFY_TOL {
        return Ok(Side::Limit(v[n - 1], spread(last3)));
    }
    // secant slopes in the direction of travel, then intercepts
    let slopes: Vec<f64> = (1..n).map(|i| (v[i] - v[i - 1]) / (sign * (ts[i] - ts[i - 1]))).collect();
    let m = slopes.len();
    let s3 = &slopes[m - 3..];
    if s3.iter().all(|x| x.is_finite()) && spread(s3) <= CLASSIFY_TOL {
        let a = slopes[m - 1];
        let b: Vec<f64> = (n - 3..n).map(|i| v[i] - a * sign * ts[i]).collect();
        if spread(&b) <= CLASSIFY_TOL * (1.0 + a.abs()) {
            return Ok(Side::Linear(a, b[2], spread(s3).max(spread(&b))));
        }
    }
    let d: Vec<f64> = (n - 4..n - 1).map(|i| v[i + 1] - v[i]).collect();
    let monotone = d.iter().all(|x| *x > 0.0) || d.iter().all(|x| *x < 0.0);
    if monotone {
        Ok(Side::Diverging)
    } else {
        Err(Error::NonConvergent(format!(
            "{} oscillates at {} infinity (last probes {:?})",
            name,
            if sign > 0.0 { "+" } else { "-" },
            last3
        )))
    }
}

/// Numerically classify the asymptotics of φ from probes at ±t.
pub fn classify(phi: &Activation, probe_ts: &[f64]) -> Result<Classification> {
    classify_fn(&|x| phi.eval(x), &phi.name(), probe_ts)
}

/// [`classify`] for an arbitrary scalar map.
pub fn classify_fn(phi: &dyn Fn(f64) -> f64, name: &str, probe_ts: &[f64]) -> Result<Classification> {
    if probe_ts.len() < 4 || probe_ts.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidInput("probe_ts must be increasing with at least 4 entries".into()));
    }
    let right = classify_side(phi, name, probe_ts, 1.0)?;
    let left = classify_side(phi, name, probe_ts, -1.0)?;
    Ok(match (left, right) {
        (Side::Limit(l, rl), Side::Limit(r, rr)) => Classification {
            tag: if (l - r).abs() <= CLASSIFY_TOL {
                AsymptoticTag::FiniteEqual
            } else {
                AsymptoticTag::FiniteDistinct
            },
            asymptotics: Asymptotics::FiniteLimits { left: l, right: r },
            residual: rl.max(rr),
        },
        (Side::Diverging, _) | (_, Side::Diverging) => Classification {
            tag: AsymptoticTag::Other,
            asymptotics: Asymptotics::Other,
            residual: f64::INFINITY,
        },
        (l, r) => {
            let (a2, b2, rl) = match l {
                Side::Limit(v, s) => (0.0, v, s),
                Side::Linear(a, b, s) => (a, b, s),
                Side::Diverging => unreachable!(),
            };
            let (a1, b1, rr) = match r {
                Side::Limit(v, s) => (0.0, v, s),
                Side::Linear(a, b, s) => (a, b, s),
                Side::Diverging => unreachable!(),
            };
            Classification {
                tag: AsymptoticTag::AsympLinear,
                asymptotics: Asymptotics::AsympLinear { a1, b1, a2, b2 },
                residual: rl.max(rr),
            }
        }
    })
}

fn nontrivial_grid() -> impl Iterator<Item = f64> {
    (-2000..=2000)
        .map(|i| i as f64 * 0.01)
        .chain((0..=20).flat_map(|k| [2f64.powi(k), -(2f64.powi(k))]))
}

/// χ(x) = φ(x−2) − 2φ(x−1) + φ(x).
pub fn second_difference(phi: &Activation) -> Result<Activation> {
    if let Asymptotics::Other = phi.asymptotics() {
        return Err(Error::UnsupportedActivationClass(format!(
            "{} has neither finite limits nor linear asymptotes",
            phi.name()
        )));
    }
    let chi = Activation::SecondDiff(Box::new(phi.clone()));
    let scale = nontrivial_grid().map(|x| phi.eval(x).abs()).fold(0.0, f64::max).max(1.0);
    let peak = nontrivial_grid().map(|x| chi.eval(x).abs()).fold(0.0, f64::max);
    if peak <= 1e-12 * scale {
        return Err(Error::DegenerateActivation(format!("{} is numerically affine", phi.name())));
    }
    Ok(chi)
}

/// x ↦ φ(x) − φ(x−1), requiring finite limits.
pub fn shift_difference(phi: &Activation) -> Result<Activation> {
    match phi.asymptotics() {
        Asymptotics::FiniteLimits { .. } => {}
        _ => {
            return Err(Error::UnsupportedActivationClass(format!(
                "{} lacks finite limits",
                phi.name()
            )))
        }
    }
    let d = Activation::ShiftDiff(Box::new(phi.clone()));
    let peak = nontrivial_grid().map(|x| d.eval(x).abs()).fold(0.0, f64::max);
    if peak <= 1e-14 {
        return Err(Error::DegenerateActivation(format!("{} is numerically constant", phi.name())));
    }
    Ok(d)
}

/// c·φ
pub fn scaled(phi: &Activation, c: f64) -> Activation {
    Activation::Scaled(c, Box::new(phi.clone()))
}

/// The three-unit one-layer network realizing second_difference(φ).
pub fn second_difference_network(phi: &Activation) -> Network {
    let units = vec![
        Unit { w: vec![1.0], b: -2.0 },
        Unit { w: vec![1.0], b: -1.0 },
        Unit { w: vec![1.0], b: 0.0 },
    ];
    Network::new(
        1,
        vec![Layer { activation: phi.clone(), units }],
        vec![1.0, -2.0, 1.0],
        0.0,
    )
    .expect("well-formed")
}

/// The two-unit one-layer network realizing shift_difference(φ).
pub fn shift_difference_network(phi: &Activation) -> Network {
    let units = vec![Unit { w: vec![1.0], b: 0.0 }, Unit { w: vec![1.0], b: -1.0 }];
    Network::new(1, vec![Layer { activation: phi.clone(), units }], vec![1.0, -1.0], 0.0)
        .expect("well-formed")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classify_builtins_match_metadata() {
        let ts = default_probes();
        for phi in Activation::builtins() {
            let c = classify(&phi, &ts).unwrap();
            match (c.asymptotics, phi.asymptotics()) {
                (
                    Asymptotics::FiniteLimits { left, right },
                    Asymptotics::FiniteLimits { left: l0, right: r0 },
                ) => {
                    assert!((left - l0).abs() < 1e-8 && (right - r0).abs() < 1e-8, "{}", phi.name());
                }
                (
                    Asymptotics::AsympLinear { a1, b1, a2, b2 },
                    Asymptotics::AsympLinear { a1: x1, b1: y1, a2: x2, b2: y2 },
                ) => {
                    for (u, v) in [(a1, x1), (b1, y1), (a2, x2), (b2, y2)] {
                        assert!((u - v).abs() < 1e-7, "{}: {u} vs {v}", phi.name());
                    }
                }
                (got, want) => panic!("{}: {got:?} vs {want:?}", phi.name()),
            }
        }
    }

    #[test]
    fn classify_tags() {
        let ts = default_probes();
        assert_eq!(classify(&Activation::Tanh, &ts).unwrap().tag, AsymptoticTag::FiniteDistinct);
        assert_eq!(classify(&Activation::Gaussian, &ts).unwrap().tag, AsymptoticTag::FiniteEqual);
        assert_eq!(classify(&Activation::Relu, &ts).unwrap().tag, AsymptoticTag::AsympLinear);
    }

    #[test]
    fn classify_oscillating_is_nonconvergent() {
        let ts = default_probes();
        let r = classify_fn(&|x: f64| (x.abs().sqrt()).sin(), "sin sqrt", &ts);
        assert!(matches!(r, Err(Error::NonConvergent(_))));
        let c = classify_fn(&|x: f64| x * x, "square", &ts).unwrap();
        assert_eq!(c.tag, AsymptoticTag::Other);
    }

    #[test]
    fn classify_scale_consistent() {
        let ts = default_probes();
        let c = classify(&scaled(&Activation::Tanh, 2.0), &ts).unwrap();
        assert_eq!(c.asymptotics, Asymptotics::FiniteLimits { left: -2.0, right: 2.0 });
    }

    #[test]
    fn relu_second_difference_is_unit_hat() {
        let chi = second_difference(&Activation::Relu).unwrap();
        let hat = PiecewiseLinear::new(vec![(0.0, 0.0), (1.0, 1.0), (2.0, 0.0)], 0.0, 0.0).unwrap();
        for i in -300..=500 {
            let x = i as f64 * 0.01;
            assert_eq!(chi.eval(x), hat.eval(x), "x = {x}");
        }
    }

    #[test]
    fn affine_is_degenerate() {
        let p = PiecewiseLinear::new(vec![(0.0, 1.0)], 3.0, 3.0).unwrap();
        assert!(matches!(
            second_difference(&Activation::Pwl(p)),
            Err(Error::DegenerateActivation(_))
        ));
        let one = PiecewiseLinear::new(vec![(0.0, 1.0)], 0.0, 0.0).unwrap();
        assert!(matches!(
            shift_difference(&Activation::Pwl(one)),
            Err(Error::DegenerateActivation(_))
        ));
    }

    #[test]
    fn tanh_differences_decay() {
        let chi = second_difference(&Activation::Tanh).unwrap();
        assert!(chi.eval(32.0).abs() < 1e-6 && chi.eval(-32.0).abs() < 1e-6);
        let d = shift_difference(&Activation::Tanh).unwrap();
        assert!(d.eval(1024.0).abs() < 1e-12 && d.eval(-1024.0).abs() < 1e-12);
        assert!(d.eval(0.5) > 0.1);
    }

    #[test]
    fn unit_ramp_shift_difference_is_hat_on_0_2() {
        let d = shift_difference(&Activation::UnitRamp).unwrap();
        assert_eq!(d.eval(-0.5), 0.0);
        assert_eq!(d.eval(1.0), 1.0);
        assert_eq!(d.eval(0.25), 0.25);
        assert_eq!(d.eval(1.5), 0.5);
        assert_eq!(d.eval(2.5), 0.0);
    }

    #[test]
    fn network_form_is_bit_identical() {
        for phi in Activation::builtins() {
            let Ok(chi) = second_difference(&phi) else { continue };
            let net = second_difference_network(&phi);
            for i in -500..500 {
                let x = i as f64 * 0.0173;
                assert_eq!(chi.eval(x).to_bits(), net.evaluate(&[x]).unwrap().to_bits());
            }
        }
    }

    #[test]
    fn serde_names() {
        let a: Activation = serde_json::from_str("\"tanh\"").unwrap();
        assert_eq!(a, Activation::Tanh);
        let s = serde_json::to_string(&Activation::SecondDiff(Box::new(Activation::Relu))).unwrap();
        let b: Activation = serde_json::from_str(&s).unwrap();
        assert_eq!(b, Activation::SecondDiff(Box::new(Activation::Relu)));
        assert!(serde_json::from_str::<Activation>("\"swish\"").is_err());
    }
}
