//! Lifting 1-D and 2-D constructions to ℝⁿ: tensor products, generators g∘P
//! and products of generators.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::activation::Activation;
use crate::certify::SupNormCertificate;
use crate::error::{Error, Result};
use crate::network::Network;
use crate::pwl::PiecewiseLinear;
use crate::radon::{self, CompactTarget, FbpParams, Ridge2D};
use crate::ridge2d::{expand_profile, RidgeProfile};

/// Multilinear interpolant on a box, zero outside it. Boundary values must be zero.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridBump {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub counts: Vec<usize>,
    /// Row-major, last axis fastest.
    pub values: Vec<f64>,
    pub lipschitz: f64,
}

impl GridBump {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>, counts: Vec<usize>, values: Vec<f64>) -> Result<GridBump> {
        let k = lo.len();
        if k == 0 || k > 3 || hi.len() != k || counts.len() != k {
            return Err(Error::InvalidInput("grid bumps need 1 to 3 axes with matching bounds".into()));
        }
        if counts.iter().any(|&c| c < 2) || lo.iter().zip(&hi).any(|(a, b)| !(b > a)) {
            return Err(Error::InvalidInput("grid needs ≥ 2 nodes per axis and lo < hi".into()));
        }
        let total: usize = counts.iter().product();
        if values.len() != total {
            return Err(Error::DimensionMismatch { expected: total, got: values.len() });
        }
        let mut g = GridBump { lo, hi, counts, values, lipschitz: 0.0 };
        let strides = g.strides();
        let mut dsq = 0.0;
        for axis in 0..k {
            let h = g.step(axis);
            let mut d: f64 = 0.0;
            for (flat, v) in g.values.iter().enumerate() {
                let idx = (flat / strides[axis]) % g.counts[axis];
                if idx == 0 || idx + 1 == g.counts[axis] {
                    if *v != 0.0 {
                        return Err(Error::InvalidInput("grid bump must vanish on its boundary".into()));
                    }
                }
                if idx + 1 < g.counts[axis] {
                    d = d.max((g.values[flat + strides[axis]] - v).abs() / h);
                }
            }
            dsq += d * d;
        }
        g.lipschitz = dsq.sqrt();
        Ok(g)
    }

    /// Sample f on the grid, forcing boundary nodes to zero.
    pub fn from_fn<F: Fn(&[f64]) -> f64>(lo: Vec<f64>, hi: Vec<f64>, counts: Vec<usize>, f: F) -> Result<GridBump> {
        let total: usize = counts.iter().product();
        let k = counts.len();
        let mut values = Vec::with_capacity(total);
        let mut y = vec![0.0; k];
        for flat in 0..total {
            let mut rem = flat;
            let mut boundary = false;
            for axis in (0..k).rev() {
                let idx = rem % counts[axis];
                rem /= counts[axis];
                boundary |= idx == 0 || idx + 1 == counts[axis];
                y[axis] = lo[axis] + (hi[axis] - lo[axis]) * idx as f64 / (counts[axis] - 1) as f64;
            }
            values.push(if boundary { 0.0 } else { f(&y) });
        }
        GridBump::new(lo, hi, counts, values)
    }

    fn step(&self, axis: usize) -> f64 {
        (self.hi[axis] - self.lo[axis]) / (self.counts[axis] - 1) as f64
    }

    fn strides(&self) -> Vec<usize> {
        let k = self.counts.len();
        let mut s = vec![1; k];
        for axis in (0..k.saturating_sub(1)).rev() {
            s[axis] = s[axis + 1] * self.counts[axis + 1];
        }
        s
    }

    pub fn eval(&self, y: &[f64]) -> f64 {
        let k = self.counts.len();
        let strides = self.strides();
        let mut base = 0;
        let mut frac = [0.0; 3];
        for axis in 0..k {
            if !(y[axis] > self.lo[axis] && y[axis] < self.hi[axis]) {
                return 0.0;
            }
            let u = (y[axis] - self.lo[axis]) / self.step(axis);
            let i = (u.floor() as usize).min(self.counts[axis] - 2);
            frac[axis] = u - i as f64;
            base += i * strides[axis];
        }
        let mut acc = 0.0;
        for corner in 0..(1usize << k) {
            let mut w = 1.0;
            let mut off = 0;
            for axis in 0..k {
                if corner >> axis & 1 == 1 {
                    w *= frac[axis];
                    off += strides[axis];
                } else {
                    w *= 1.0 - frac[axis];
                }
            }
            acc += w * self.values[base + off];
        }
        acc
    }
}

/// A compactly supported function on ℝᵏ.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bump {
    /// g₁(y₁)·…·g_k(y_k); the empty tensor is the constant 1 on ℝ⁰.
    Tensor { profiles: Vec<PiecewiseLinear> },
    Grid(GridBump),
    /// left(y[..k₁])·right(y[k₁..]).
    Product { left: Box<Bump>, right: Box<Bump> },
    /// z ↦ inner(M z) with M a k×cols matrix.
    Linear { cols: usize, matrix: Vec<Vec<f64>>, inner: Box<Bump> },
}

impl Bump {
    pub fn tensor(profiles: Vec<PiecewiseLinear>) -> Result<Bump> {
        if profiles.iter().any(|p| !p.is_compact()) {
            return Err(Error::InvalidInput("tensor factors must be compactly supported".into()));
        }
        Ok(Bump::Tensor { profiles })
    }

    pub fn dim(&self) -> usize {
        match self {
            Bump::Tensor { profiles } => profiles.len(),
            Bump::Grid(g) => g.counts.len(),
            Bump::Product { left, right } => left.dim() + right.dim(),
            Bump::Linear { cols, .. } => *cols,
        }
    }

    pub fn eval(&self, y: &[f64]) -> f64 {
        match self {
            Bump::Tensor { profiles } => {
                let mut acc = 1.0;
                for (p, v) in profiles.iter().zip(y) {
                    acc *= p.eval(*v);
                }
                acc
            }
            Bump::Grid(g) => g.eval(y),
            Bump::Product { left, right } => {
                let k = left.dim();
                left.eval(&y[..k]) * right.eval(&y[k..])
            }
            Bump::Linear { matrix, inner, .. } => {
                let z: Vec<f64> = matrix.iter().map(|row| row.iter().zip(y).map(|(m, v)| m * v).sum()).collect();
                inner.eval(&z)
            }
        }
    }

    /// Flattened tensor factors, when the bump is a (nested) tensor product.
    pub fn profiles(&self) -> Option<Vec<PiecewiseLinear>> {
        match self {
            Bump::Tensor { profiles } => Some(profiles.clone()),
            Bump::Product { left, right } => {
                let mut p = left.profiles()?;
                p.extend(right.profiles()?);
                Some(p)
            }
            _ => None,
        }
    }

    pub fn sup_abs(&self) -> f64 {
        match self {
            Bump::Tensor { profiles } => profiles.iter().map(|p| p.sup_abs()).product(),
            Bump::Grid(g) => g.values.iter().fold(0.0, |m, v| m.max(v.abs())),
            Bump::Product { left, right } => left.sup_abs() * right.sup_abs(),
            Bump::Linear { inner, .. } => inner.sup_abs(),
        }
    }

    pub fn lipschitz(&self) -> f64 {
        match self {
            Bump::Tensor { profiles } => {
                let sups: Vec<f64> = profiles.iter().map(|p| p.sup_abs()).collect();
                profiles
                    .iter()
                    .enumerate()
                    .map(|(i, p)| {
                        let others: f64 = sups.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, s)| s).product();
                        (p.lipschitz() * others).powi(2)
                    })
                    .sum::<f64>()
                    .sqrt()
            }
            Bump::Grid(g) => g.lipschitz,
            Bump::Product { left, right } => (left.lipschitz() * right.sup_abs()).hypot(left.sup_abs() * right.lipschitz()),
            Bump::Linear { matrix, inner, .. } => {
                inner.lipschitz() * matrix.iter().flatten().map(|m| m * m).sum::<f64>().sqrt()
            }
        }
    }

    /// A box outside which the bump vanishes; infinite edges when unbounded.
    pub fn support_box(&self) -> Vec<(f64, f64)> {
        match self {
            Bump::Tensor { profiles } => profiles.iter().map(|p| p.support()).collect(),
            Bump::Grid(g) => g.lo.iter().copied().zip(g.hi.iter().copied()).collect(),
            Bump::Product { left, right } => {
                let mut b = left.support_box();
                b.extend(right.support_box());
                b
            }
            Bump::Linear { cols, matrix, inner } => {
                let reach = inner
                    .support_box()
                    .iter()
                    .map(|(a, b)| a.abs().max(b.abs()).powi(2))
                    .sum::<f64>()
                    .sqrt();
                let k = matrix.len();
                let m = DMatrix::from_fn(k, *cols, |i, j| matrix[i][j]);
                let smin = if k >= *cols && *cols > 0 {
                    m.svd(false, false).singular_values.iter().copied().fold(f64::INFINITY, f64::min)
                } else {
                    0.0
                };
                let r = if smin > 0.0 { reach / smin } else { f64::INFINITY };
                vec![(-r, r); *cols]
            }
        }
    }
}

/// x ↦ g(P x) with P: ℝⁿ → ℝᵏ.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Generator {
    pub input_dim: usize,
    pub p: Vec<Vec<f64>>,
    pub bump: Bump,
}

impl Generator {
    pub fn new(input_dim: usize, p: Vec<Vec<f64>>, bump: Bump) -> Result<Generator> {
        if let Some(row) = p.iter().find(|r| r.len() != input_dim) {
            return Err(Error::DimensionMismatch { expected: input_dim, got: row.len() });
        }
        if bump.dim() != p.len() {
            return Err(Error::DimensionMismatch { expected: p.len(), got: bump.dim() });
        }
        Ok(Generator { input_dim, p, bump })
    }

    pub fn k(&self) -> usize {
        self.p.len()
    }

    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        self.p.iter().map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum()).collect()
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.input_dim {
            return Err(Error::DimensionMismatch { expected: self.input_dim, got: x.len() });
        }
        Ok(self.bump.eval(&self.project(x)))
    }

    /// Equivalent generator whose map has orthonormal rows spanning (ker P)^⊥.
    pub fn orthogonalize(&self) -> Generator {
        let k = self.k();
        let n = self.input_dim;
        if k == 0 || n == 0 {
            return self.clone();
        }
        let m = DMatrix::from_fn(k, n, |i, j| self.p[i][j]);
        let svd = m.svd(true, true);
        let (u, vt) = (svd.u.expect("requested"), svd.v_t.expect("requested"));
        let s = &svd.singular_values;
        let smax = s.iter().copied().fold(0.0, f64::max);
        let tol = smax * 1e-12 * k.max(n) as f64;
        let keep: Vec<usize> = (0..s.len()).filter(|&i| s[i] > tol).collect();
        let rows: Vec<Vec<f64>> = keep.iter().map(|&i| (0..n).map(|j| vt[(i, j)]).collect()).collect();
        let matrix: Vec<Vec<f64>> = (0..k).map(|i| keep.iter().map(|&j| u[(i, j)] * s[j]).collect()).collect();
        let bump = Bump::Linear { cols: keep.len(), matrix, inner: Box::new(self.bump.clone()) };
        Generator { input_dim: n, p: rows, bump }
    }
}

/// (g₁∘P₁)·(g₂∘P₂) as one generator with stacked map and tensor bump.
pub fn product_generator(a: &Generator, b: &Generator) -> Result<Generator> {
    if a.input_dim != b.input_dim {
        return Err(Error::DimensionMismatch { expected: a.input_dim, got: b.input_dim });
    }
    let mut p = a.p.clone();
    p.extend(b.p.iter().cloned());
    let bump = Bump::Product { left: Box::new(a.bump.clone()), right: Box::new(b.bump.clone()) };
    Generator::new(a.input_dim, p, bump)
}

#[derive(Clone, Debug)]
pub struct LiftedApprox {
    pub network: Network,
    pub certificate: SupNormCertificate,
}

fn zero_approx(n: usize, phi: &Activation, value: f64) -> LiftedApprox {
    LiftedApprox { network: Network::constant(n, phi.clone(), 1, value), certificate: SupNormCertificate::exact_zero() }
}

fn box_disk(b: &[(f64, f64)]) -> Result<([f64; 2], f64)> {
    if b.iter().any(|(a, c)| !a.is_finite() || !c.is_finite()) {
        return Err(Error::InvalidInput("bump support is unbounded".into()));
    }
    let c = [0.5 * (b[0].0 + b[0].1), 0.5 * (b[1].0 + b[1].1)];
    let r = (0.5 * (b[0].1 - b[0].0)).hypot(0.5 * (b[1].1 - b[1].0));
    Ok((c, r.max(1e-9)))
}

fn approx_bump_2d(bump: &Bump, phi: &Activation, eps: f64, ladder: &[FbpParams]) -> Result<radon::Approx2D> {
    let (center, radius) = box_disk(&bump.support_box())?;
    let f = |x: f64, y: f64| bump.eval(&[x, y]);
    let target = CompactTarget { eval: &f, center, radius, lipschitz: bump.lipschitz() };
    radon::approx_2d(&target, phi, eps, ladder)
}

/// Pure profile sum approximating a 2-D tensor, for use as an intermediate stage.
fn pwl_stage(g1: &PiecewiseLinear, g2: &PiecewiseLinear, eps: f64) -> Result<(Ridge2D, SupNormCertificate)> {
    let bump = Bump::Tensor { profiles: vec![g1.clone(), g2.clone()] };
    let ladder: Vec<FbpParams> = [FbpParams::new(16, 1.0 / 6.0), FbpParams::new(24, 1.0 / 8.0)]
        .into_iter()
        .chain(radon::default_ladder())
        .map(|p| FbpParams { tail_extent: 2.0, ..p })
        .collect();
    let a = approx_bump_2d(&bump, &Activation::UnitRamp, eps, &ladder)?;
    Ok((a.ridge, a.certificate))
}

/// One-layer φ-network approximating g₁⊗…⊗g_n (n ≤ 3) with certified error over ℝⁿ.
pub fn tensor_approx(profiles: &[RidgeProfile], phi: &Activation, eps: f64) -> Result<LiftedApprox> {
    let n = profiles.len();
    if n == 0 || n > 3 {
        return Err(Error::Unsupported(format!("tensor lifting supports 1 to 3 factors, got {n}")));
    }
    if !(eps > 0.0) {
        return Err(Error::InvalidInput("ε must be positive".into()));
    }
    if profiles.iter().any(|g| g.is_zero()) {
        return Ok(zero_approx(n, phi, 0.0));
    }
    match n {
        1 => {
            let e = expand_profile(&profiles[0], phi, eps)?;
            Ok(LiftedApprox { network: e.network, certificate: e.certificate })
        }
        2 => {
            let bump = Bump::Tensor { profiles: profiles.iter().map(|g| g.profile.clone()).collect() };
            let a = approx_bump_2d(&bump, phi, eps, &radon::default_ladder())?;
            Ok(LiftedApprox { network: a.ridge.network, certificate: a.certificate })
        }
        _ => tensor_approx_3(profiles, phi, eps),
    }
}

/// g₁⊗g₂⊗g₃ ≈ Σ_k G_k(a_k·(x′ − c))·g₃(x₃), then each G_k⊗g₃ by a 2-D ridge sum.
fn tensor_approx_3(profiles: &[RidgeProfile], phi: &Activation, eps: f64) -> Result<LiftedApprox> {
    let g3 = &profiles[2].profile;
    let s3 = g3.sup_abs();
    let (stage1, c1) = pwl_stage(&profiles[0].profile, &profiles[1].profile, 0.5 * eps / s3).map_err(|e| match e {
        Error::TargetNotMet { achieved, .. } => Error::TargetNotMet { target: eps, achieved: achieved * s3 },
        other => other,
    })?;
    let stage1_cert = c1.scaled(s3);
    let gk = stage1.pwl_profiles().expect("piecewise-linear stage");
    let weights: Vec<f64> = gk.iter().map(|p| p.sup_abs()).collect();
    let wsum: f64 = weights.iter().sum();
    let budget = 0.5 * eps;
    let mut parts = vec![(Network::constant(3, phi.clone(), 1, 0.0), 1.0)];
    let mut certs = vec![stage1_cert];
    for ((g, d), w) in gk.iter().zip(&stage1.dirs).zip(&weights) {
        if *w == 0.0 {
            continue;
        }
        let bump = Bump::Tensor { profiles: vec![g.clone(), g3.clone()] };
        let (center, radius) = box_disk(&bump.support_box())?;
        let f = |x: f64, y: f64| bump.eval(&[x, y]);
        let target = CompactTarget { eval: &f, center, radius, lipschitz: bump.lipschitz() };
        let a = radon::approx_2d_best(&target, phi, budget * w / wsum, &radon::default_ladder()[..2])?;
        let c = stage1.center;
        let shift = -(d[0] * c[0] + d[1] * c[1]);
        let net = a.ridge.network.affine_precompose(&[vec![d[0], d[1], 0.0], vec![0.0, 0.0, 1.0]], &[shift, 0.0])?;
        certs.push(a.certificate);
        parts.push((net, 1.0));
    }
    let certificate = SupNormCertificate::sum(&certs);
    if certificate.total > eps {
        return Err(Error::TargetNotMet { target: eps, achieved: certificate.total });
    }
    let network = Network::linear_combine(&parts)?.dedup();
    Ok(LiftedApprox { network, certificate })
}

/// One-layer φ-network for g∘P: approximate g on ℝᵏ, then precompose with P.
pub fn generator_approx(gen: &Generator, phi: &Activation, eps: f64) -> Result<LiftedApprox> {
    let n = gen.input_dim;
    let k = gen.k();
    if k == 0 {
        return Ok(zero_approx(n, phi, gen.bump.eval(&[])));
    }
    let inner = match gen.bump.profiles() {
        Some(ps) => {
            let rps = ps.into_iter().map(RidgeProfile::new).collect::<Result<Vec<_>>>()?;
            tensor_approx(&rps, phi, eps)?
        }
        None if k == 2 => {
            let a = approx_bump_2d(&gen.bump, phi, eps, &radon::default_ladder())?;
            LiftedApprox { network: a.ridge.network, certificate: a.certificate }
        }
        None => return Err(Error::Unsupported("generator bumps must be tensors of profiles or 2-D".into())),
    };
    let network = inner.network.affine_precompose(&gen.p, &vec![0.0; k])?;
    Ok(LiftedApprox { network, certificate: inner.certificate })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ridge2d::standard_profile;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn hat_gen(n: usize, row: Vec<f64>) -> Generator {
        Generator::new(n, vec![row], Bump::tensor(vec![PiecewiseLinear::hat(1.0)]).unwrap()).unwrap()
    }

    #[test]
    fn orthogonalize_scaled_row() {
        let g = hat_gen(2, vec![2.0, 0.0]);
        let o = g.orthogonalize();
        assert_eq!(o.k(), 1);
        let x = [0.3, 7.0];
        assert!((o.evaluate(&x).unwrap() - g.evaluate(&x).unwrap()).abs() < 1e-12);
        assert!((g.evaluate(&x).unwrap() - PiecewiseLinear::hat(1.0).eval(0.6)).abs() < 1e-15);
    }

    #[test]
    fn orthogonalize_reduces_rank() {
        let p = vec![vec![1.0, 2.0, -1.0], vec![1.0, 2.0, -1.0], vec![0.5, 0.0, 1.0]];
        let bump = Bump::tensor(vec![PiecewiseLinear::hat(1.0), PiecewiseLinear::hat(1.5), PiecewiseLinear::hat(0.7)]).unwrap();
        let g = Generator::new(3, p, bump).unwrap();
        let o = g.orthogonalize();
        assert_eq!(o.k(), 2);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let x: Vec<f64> = (0..3).map(|_| rng.gen_range(-2.0..2.0)).collect();
            assert!((o.evaluate(&x).unwrap() - g.evaluate(&x).unwrap()).abs() < 1e-10);
        }
        let b = o.bump.support_box();
        assert!(b.iter().all(|(a, c)| a.is_finite() && c.is_finite()));
    }

    #[test]
    fn product_is_pointwise() {
        let a = hat_gen(2, vec![1.0, 0.0]);
        let b = hat_gen(2, vec![0.3, 1.0]);
        let p = product_generator(&a, &b).unwrap();
        assert_eq!(p.k(), 2);
        let sq = product_generator(&a, &a).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..1000 {
            let x = [rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)];
            let (va, vb) = (a.evaluate(&x).unwrap(), b.evaluate(&x).unwrap());
            assert_eq!(p.evaluate(&x).unwrap(), va * vb);
            assert_eq!(sq.evaluate(&x).unwrap(), va * va);
        }
        assert!(product_generator(&a, &hat_gen(3, vec![1.0, 0.0, 0.0])).is_err());
    }

    #[test]
    fn grid_bump_interpolates() {
        let g = GridBump::from_fn(vec![-1.0, -1.0], vec![1.0, 1.0], vec![21, 21], |y| {
            (1.0 - y[0].abs()).max(0.0) * (1.0 - y[1].abs()).max(0.0)
        })
        .unwrap();
        assert!((g.eval(&[0.0, 0.0]) - 1.0).abs() < 1e-12);
        assert!((g.eval(&[0.05, 0.0]) - 0.95).abs() < 1e-12);
        assert_eq!(g.eval(&[1.5, 0.0]), 0.0);
        assert!(g.lipschitz <= 2f64.sqrt() + 1e-9);
        assert!(GridBump::new(vec![0.0], vec![1.0], vec![2], vec![1.0, 0.0]).is_err());
    }

    #[test]
    fn zero_profile_gives_zero_network() {
        let z = RidgeProfile::new(PiecewiseLinear::compact(vec![(-1.0, 0.0), (1.0, 0.0)]).unwrap()).unwrap();
        let a = tensor_approx(&[standard_profile(), z], &Activation::Relu, 0.1).unwrap();
        assert_eq!(a.certificate.total, 0.0);
        assert_eq!(a.network.evaluate(&[0.1, 0.2]).unwrap(), 0.0);
        let four = vec![standard_profile(); 4];
        assert!(matches!(tensor_approx(&four, &Activation::Relu, 0.1), Err(Error::Unsupported(_))));
    }

    #[test]
    fn ridge_generator_is_constant_on_hyperplanes() {
        let g = hat_gen(3, vec![1.0, -2.0, 0.5]);
        let a = generator_approx(&g, &Activation::Relu, 0.01).unwrap();
        let x = [0.2, 0.1, 0.4];
        let y = [0.2 + 2.0, 0.1 + 1.0, 0.4];
        let (vx, vy) = (a.network.evaluate(&x).unwrap(), a.network.evaluate(&y).unwrap());
        assert!((vx - vy).abs() < 1e-12);
        assert!((vx - g.evaluate(&x).unwrap()).abs() <= a.certificate.total + 1e-12);
    }
}
