//! Ray limits, the lower bound separating the mollified AND from one-layer
//! networks, and the vanishing identity for ridge sums.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::activation::{Activation, Asymptotics};
use crate::error::{Error, Result};
use crate::network::Network;

const FIRST_PROBE: i32 = 6;
const LAST_PROBE: i32 = 24;
const RAY_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RayLimit {
    /// g(tv) + g(−tv) at the largest probe.
    pub limit: f64,
    /// Spread of the last three probes.
    pub residual: f64,
    pub converged: bool,
}

/// Probes g(tv) + g(−tv) at t = 2ᵏ, k = 6..24.
pub fn ray_probe(g: &dyn Fn(&[f64]) -> f64, v: &[f64]) -> Result<RayLimit> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidInput(format!("direction must be a unit vector (norm {norm})")));
    }
    let vals: Vec<f64> = (FIRST_PROBE..=LAST_PROBE)
        .map(|k| {
            let t = 2f64.powi(k);
            let p: Vec<f64> = v.iter().map(|x| t * x).collect();
            let q: Vec<f64> = p.iter().map(|x| -x).collect();
            g(&p) + g(&q)
        })
        .collect();
    let last = &vals[vals.len() - 3..];
    let hi = last.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = last.iter().copied().fold(f64::INFINITY, f64::min);
    let residual = hi - lo;
    Ok(RayLimit { limit: vals[vals.len() - 1], residual, converged: residual <= RAY_TOL && residual.is_finite() })
}

/// l_g(v) = lim (g(tv) + g(−tv)); NonConvergent when the probes disagree.
pub fn ray_limit(g: &dyn Fn(&[f64]) -> f64, v: &[f64]) -> Result<RayLimit> {
    let r = ray_probe(g, v)?;
    if r.converged {
        Ok(r)
    } else {
        Err(Error::NonConvergent(format!("ray probes spread {:e}", r.residual)))
    }
}

/// h(x)h(y) with h = clamp(·, 0, 1).
pub fn mollified_and(x: &[f64]) -> f64 {
    x[0].clamp(0.0, 1.0) * x[1].clamp(0.0, 1.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DirectionReport {
    pub angle: f64,
    pub target: RayLimit,
    pub candidate: RayLimit,
    /// ½|target − candidate| at the largest probe.
    pub deficit: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeparationReport {
    pub bound: f64,
    pub best_angle: f64,
    pub directions: Vec<DirectionReport>,
    /// Spread of the candidate's limits across probed directions.
    pub candidate_spread: f64,
}

/// Angles (mod π) of directions orthogonal to some unit's weight vector.
pub fn exceptional_angles(net: &Network) -> Vec<f64> {
    net.layers()[0]
        .units
        .iter()
        .filter(|u| u.w[0] != 0.0 || u.w[1] != 0.0)
        .map(|u| (u.w[1].atan2(u.w[0]) + 0.5 * PI).rem_euclid(PI))
        .collect()
}

fn angle_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(PI);
    d.min(PI - d)
}

/// Lower bound on ‖mollified_and − candidate‖∞ from ray sums on `count` directions.
///
/// For every probed v and t, |l_f − l_g| ≤ |f(tv) − g(tv)| + |f(−tv) − g(−tv)|, so half the
/// discrepancy of the two ray sums bounds the sup distance from below.
pub fn one_layer_lower_bound(candidate: &Network, count: usize) -> Result<SeparationReport> {
    if candidate.depth() != 1 {
        return Err(Error::NotOneLayer(candidate.depth()));
    }
    if candidate.input_dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: candidate.input_dim() });
    }
    let phi = &candidate.layers()[0].activation;
    if !matches!(phi.asymptotics(), Asymptotics::FiniteLimits { .. }) {
        return Err(Error::UnsupportedActivationClass(format!("{} lacks finite limits", phi.name())));
    }
    let mut avoid = exceptional_angles(candidate);
    avoid.extend([0.0, 0.5 * PI]);
    let angles: Vec<f64> = (0..count.max(1))
        .map(|i| 2.0 * PI * (i as f64 + 0.5) / count.max(1) as f64)
        .filter(|&a| avoid.iter().all(|&b| angle_gap(a, b) >= 1e-3))
        .collect();
    let g = |x: &[f64]| candidate.eval_unchecked(x);
    let directions = angles
        .par_iter()
        .map(|&a| {
            let v = [a.cos(), a.sin()];
            let target = ray_probe(&mollified_and, &v)?;
            let cand = ray_probe(&g, &v)?;
            if !cand.converged {
                return Err(Error::NonConvergent(format!("candidate ray at angle {a:.6}: spread {:e}", cand.residual)));
            }
            Ok(DirectionReport { angle: a, target, candidate: cand, deficit: 0.5 * (target.limit - cand.limit).abs() })
        })
        .collect::<Result<Vec<_>>>()?;
    let best = directions
        .iter()
        .max_by(|a, b| a.deficit.total_cmp(&b.deficit))
        .ok_or_else(|| Error::InvalidInput("no admissible directions".into()))?;
    let hi = directions.iter().map(|d| d.candidate.limit).fold(f64::NEG_INFINITY, f64::max);
    let lo = directions.iter().map(|d| d.candidate.limit).fold(f64::INFINITY, f64::min);
    Ok(SeparationReport { bound: best.deficit, best_angle: best.angle, candidate_spread: hi - lo, directions: directions.clone() })
}

/// Random one-layer network x ↦ Σ c φ(a·x + b) + d.
pub fn random_one_layer<R: Rng>(rng: &mut R, n: usize, m: usize, phi: &Activation) -> Network {
    let units = (0..m)
        .map(|_| {
            let a = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
            (a, rng.gen_range(-2.0..2.0), rng.gen_range(-1.0..1.0))
        })
        .collect();
    Network::one_layer(n, phi.clone(), units, rng.gen_range(-0.5..0.5)).expect("consistent dimensions")
}

/// Ridge-regression fit of `units` random tanh features to the mollified AND on a grid over [−10, 10]².
pub fn least_squares_baseline(units: usize, seed: u64) -> Network {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let feats: Vec<(Vec<f64>, f64)> = (0..units)
        .map(|_| {
            let th = rng.gen_range(0.0..2.0 * PI);
            let s = rng.gen_range(0.5..3.0);
            let w = vec![s * th.cos(), s * th.sin()];
            (w, rng.gen_range(-3.0..3.0))
        })
        .collect();
    let side = 61;
    let pts: Vec<[f64; 2]> = (0..side * side)
        .map(|i| [-10.0 + 20.0 * (i % side) as f64 / (side - 1) as f64, -10.0 + 20.0 * (i / side) as f64 / (side - 1) as f64])
        .collect();
    let cols = units + 1;
    let a = DMatrix::from_fn(pts.len(), cols, |r, c| {
        if c == units {
            1.0
        } else {
            let (w, b) = &feats[c];
            (w[0] * pts[r][0] + w[1] * pts[r][1] + b).tanh()
        }
    });
    let y = DVector::from_iterator(pts.len(), pts.iter().map(|p| mollified_and(p)));
    let lambda = 1e-6 * pts.len() as f64;
    let mut ata = a.transpose() * &a;
    for i in 0..cols {
        ata[(i, i)] += lambda;
    }
    let rhs = a.transpose() * y;
    let c = ata.cholesky().map(|ch| ch.solve(&rhs)).unwrap_or_else(|| DVector::zeros(cols));
    let us = feats.into_iter().enumerate().map(|(i, (w, b))| (w, b, c[i])).collect();
    Network::one_layer(2, Activation::Tanh, us, c[units]).expect("consistent dimensions")
}

/// v_j ⊥ a_j with ‖v_j‖ = 2^{j−1}, so every nonempty partial sum v(I) is nonzero.
pub fn null_vectors(a: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let n = a.first().map(|r| r.len()).unwrap_or(2);
    if n < 2 {
        return Err(Error::InvalidInput("null vectors need n ≥ 2".into()));
    }
    a.iter()
        .enumerate()
        .map(|(j, aj)| {
            if aj.len() != n {
                return Err(Error::DimensionMismatch { expected: n, got: aj.len() });
            }
            let norm = aj.iter().map(|x| x * x).sum::<f64>().sqrt();
            let mut v = vec![0.0; n];
            if norm == 0.0 {
                v[0] = 1.0;
            } else {
                let u: Vec<f64> = aj.iter().map(|x| x / norm).collect();
                let k = (0..n).min_by(|&p, &q| u[p].abs().total_cmp(&u[q].abs())).expect("n ≥ 2");
                v[k] = 1.0;
                for _ in 0..2 {
                    let c: f64 = v.iter().zip(&u).map(|(x, y)| x * y).sum();
                    for (vi, ui) in v.iter_mut().zip(&u) {
                        *vi -= c * ui;
                    }
                }
                let vn = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                v.iter_mut().for_each(|x| *x /= vn);
            }
            let s = 2f64.powi(j as i32);
            Ok(v.into_iter().map(|x| x * s).collect())
        })
        .collect()
}

fn subset_sums(v: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = v.first().map(|r| r.len()).unwrap_or(0);
    let m = v.len();
    let mut out = vec![vec![0.0; n]; 1 << m];
    for mask in 1usize..1 << m {
        let j = mask.trailing_zeros() as usize;
        let rest = mask & (mask - 1);
        out[mask] = out[rest].iter().zip(&v[j]).map(|(a, b)| a + b).collect();
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Vanishing {
    pub residual: f64,
    /// max |f| over the evaluated points.
    pub scale: f64,
}

impl Vanishing {
    pub fn relative(&self) -> f64 {
        self.residual.abs() / (1.0 + self.scale)
    }
}

/// f(x) + Σ_{∅≠I}(−1)^{#I} f(x + t v(I)) for f a ridge sum along `dirs`.
pub fn vanishing_residual(f: &dyn Fn(&[f64]) -> f64, dirs: &[Vec<f64>], x: &[f64], t: f64) -> Result<Vanishing> {
    if dirs.len() > 12 {
        return Err(Error::SubsetBudgetExceeded(dirs.len()));
    }
    if let Some(d) = dirs.iter().find(|d| d.len() != x.len()) {
        return Err(Error::DimensionMismatch { expected: x.len(), got: d.len() });
    }
    let v = null_vectors(dirs)?;
    let sums = subset_sums(&v);
    let f0 = f(x);
    let mut acc = f0;
    let mut scale = f0.abs();
    for (mask, s) in sums.iter().enumerate().skip(1) {
        let p: Vec<f64> = x.iter().zip(s).map(|(a, b)| a + t * b).collect();
        let val = f(&p);
        scale = scale.max(val.abs());
        if mask.count_ones() % 2 == 1 {
            acc -= val;
        } else {
            acc += val;
        }
    }
    Ok(Vanishing { residual: acc, scale })
}

/// Unit weight vectors of a one-layer network, its ridge directions.
pub fn ridge_directions(net: &Network) -> Result<Vec<Vec<f64>>> {
    if net.depth() != 1 {
        return Err(Error::NotOneLayer(net.depth()));
    }
    Ok(net.layers()[0].units.iter().map(|u| u.w.clone()).collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExclusionRow {
    pub t: f64,
    pub value: f64,
    /// Σ_{∅≠I} |f(x + t v(I))|, an upper bound for |f(x)|.
    pub bound: f64,
}

pub fn c0_exclusion_demo(f: &dyn Fn(&[f64]) -> f64, dirs: &[Vec<f64>], x: &[f64], ts: &[f64]) -> Result<Vec<ExclusionRow>> {
    if dirs.len() > 12 {
        return Err(Error::SubsetBudgetExceeded(dirs.len()));
    }
    let v = null_vectors(dirs)?;
    let sums = subset_sums(&v);
    let value = f(x);
    Ok(ts
        .iter()
        .map(|&t| {
            let bound = sums
                .iter()
                .skip(1)
                .map(|s| {
                    let p: Vec<f64> = x.iter().zip(s).map(|(a, b)| a + t * b).collect();
                    f(&p).abs()
                })
                .sum();
            ExclusionRow { t, value, bound }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn and_ray_limits() {
        let d = 0.5f64.sqrt();
        assert!((ray_limit(&mollified_and, &[d, d]).unwrap().limit - 1.0).abs() < 1e-12);
        assert!(ray_limit(&mollified_and, &[-d, d]).unwrap().limit.abs() < 1e-12);
        assert_eq!(mollified_and(&[2.0, 3.0]), 1.0);
        assert_eq!(mollified_and(&[-1.0, 5.0]), 0.0);
        assert_eq!(mollified_and(&[0.5, 1.0]), 0.5);
        let t = |x: &[f64]| (0.3 * x[0] - 1.1 * x[1]).tanh();
        assert!(ray_limit(&t, &[0.6, 0.8]).unwrap().limit.abs() < 1e-12);
        assert!(ray_limit(&mollified_and, &[1.0, 1.0]).is_err());
    }

    #[test]
    fn constant_along_null_ray() {
        let net = Network::one_layer(2, Activation::Tanh, vec![(vec![1.0, 2.0], 0.3, 1.7)], 0.0).unwrap();
        let v = [-2.0 / 5f64.sqrt(), 1.0 / 5f64.sqrt()];
        let r = ray_probe(&|x: &[f64]| net.eval_unchecked(x), &v).unwrap();
        assert!((r.limit - 2.0 * 1.7 * 0.3f64.tanh()).abs() < 1e-12);
    }

    #[test]
    fn zero_network_bound() {
        let z = Network::constant(2, Activation::Tanh, 1, 0.0);
        let r = one_layer_lower_bound(&z, 64).unwrap();
        assert!(r.bound >= 0.5 - 1e-3);
        let deep = Network::constant(2, Activation::Tanh, 2, 0.0);
        assert!(matches!(one_layer_lower_bound(&deep, 8), Err(Error::NotOneLayer(2))));
    }

    #[test]
    fn null_vector_chain() {
        let a = vec![vec![1.0, 0.0], vec![1.0, 0.0]];
        let v = null_vectors(&a).unwrap();
        assert!(v[0][0].abs() < 1e-15 && v[1][0].abs() < 1e-15);
        assert!(v[1][1].abs() > v[0][1].abs());
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a: Vec<Vec<f64>> = (0..4).map(|_| (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let v = null_vectors(&a).unwrap();
        for (aj, vj) in a.iter().zip(&v) {
            assert!(aj.iter().zip(vj).map(|(x, y)| x * y).sum::<f64>().abs() < 1e-12);
        }
        for s in subset_sums(&v).iter().skip(1) {
            assert!(s.iter().map(|x| x * x).sum::<f64>() > 0.0);
        }
        assert!(null_vectors(&[vec![1.0]]).is_err());
    }

    #[test]
    fn single_ridge_vanishes_exactly() {
        let f = |x: &[f64]| (0.7 * x[0] + 0.2 * x[1]).sin();
        let r = vanishing_residual(&f, &[vec![0.7, 0.2]], &[0.3, -1.0], 5.0).unwrap();
        assert!(r.residual.abs() < 1e-15);
    }

    #[test]
    fn baseline_fits_something() {
        let net = least_squares_baseline(32, 42);
        assert_eq!(net.unit_count(), 32);
        let e = (net.evaluate(&[5.0, 5.0]).unwrap() - 1.0).abs();
        assert!(e < 0.6, "{e}");
    }
}
