//! Layered ridge-expansion networks over ℝⁿ.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::activation::Activation;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Unit {
    pub w: Vec<f64>,
    pub b: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub activation: Activation,
    pub units: Vec<Unit>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "NetRepr")]
pub struct Network {
    input_dim: usize,
    layers: Vec<Layer>,
    out_coeffs: Vec<f64>,
    out_bias: f64,
}

#[derive(Deserialize)]
struct NetRepr {
    input_dim: usize,
    layers: Vec<Layer>,
    out_coeffs: Vec<f64>,
    out_bias: f64,
}

impl TryFrom<NetRepr> for Network {
    type Error = Error;
    fn try_from(r: NetRepr) -> Result<Self> {
        Network::new(r.input_dim, r.layers, r.out_coeffs, r.out_bias)
    }
}

impl Network {
    pub fn new(input_dim: usize, layers: Vec<Layer>, out_coeffs: Vec<f64>, out_bias: f64) -> Result<Self> {
        if input_dim == 0 {
            return Err(Error::InvalidInput("input_dim must be positive".into()));
        }
        if layers.is_empty() {
            return Err(Error::InvalidInput("a network needs at least one hidden layer".into()));
        }
        let mut fan_in = input_dim;
        for layer in &layers {
            for u in &layer.units {
                if u.w.len() != fan_in {
                    return Err(Error::DimensionMismatch { expected: fan_in, got: u.w.len() });
                }
            }
            fan_in = layer.units.len();
        }
        if out_coeffs.len() != fan_in {
            return Err(Error::DimensionMismatch { expected: fan_in, got: out_coeffs.len() });
        }
        Ok(Network { input_dim, layers, out_coeffs, out_bias })
    }

    /// One hidden layer: Σ c_j φ(w_j·x + b_j) + d.
    pub fn one_layer(
        input_dim: usize,
        activation: Activation,
        units: Vec<(Vec<f64>, f64, f64)>,
        out_bias: f64,
    ) -> Result<Self> {
        let (us, cs): (Vec<Unit>, Vec<f64>) =
            units.into_iter().map(|(w, b, c)| (Unit { w, b }, c)).unzip();
        Network::new(input_dim, vec![Layer { activation, units: us }], cs, out_bias)
    }

    /// The constant network with no units.
    pub fn constant(input_dim: usize, activation: Activation, depth: usize, value: f64) -> Self {
        let layers = (0..depth.max(1)).map(|_| Layer { activation: activation.clone(), units: vec![] }).collect();
        Network { input_dim, layers, out_coeffs: vec![], out_bias: value }
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn out_coeffs(&self) -> &[f64] {
        &self.out_coeffs
    }

    pub fn out_bias(&self) -> f64 {
        self.out_bias
    }

    pub fn unit_count(&self) -> usize {
        self.layers.iter().map(|l| l.units.len()).sum()
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.input_dim {
            return Err(Error::DimensionMismatch { expected: self.input_dim, got: x.len() });
        }
        Ok(self.eval_unchecked(x))
    }

    pub fn eval_unchecked(&self, x: &[f64]) -> f64 {
        let mut cur: Vec<f64> = x.to_vec();
        let mut next = Vec::new();
        for layer in &self.layers {
            next.clear();
            for u in &layer.units {
                let mut s = 0.0;
                for (wi, xi) in u.w.iter().zip(&cur) {
                    s += wi * xi;
                }
                next.push(layer.activation.eval(s + u.b));
            }
            std::mem::swap(&mut cur, &mut next);
        }
        let mut acc = 0.0;
        for (c, z) in self.out_coeffs.iter().zip(&cur) {
            acc += c * z;
        }
        acc + self.out_bias
    }

    pub fn evaluate_batch(&self, points: &[Vec<f64>]) -> Result<Vec<f64>> {
        if let Some(p) = points.iter().find(|p| p.len() != self.input_dim) {
            return Err(Error::DimensionMismatch { expected: self.input_dim, got: p.len() });
        }
        Ok(points.par_iter().map(|p| self.eval_unchecked(p)).collect())
    }

    /// x ↦ net(Ax + b) with A given as n rows of length n'.
    pub fn affine_precompose(&self, a: &[Vec<f64>], b: &[f64]) -> Result<Network> {
        let n = self.input_dim;
        if a.len() != n || b.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: a.len().min(b.len()) });
        }
        let n2 = a.first().map(|r| r.len()).unwrap_or(0);
        if n2 == 0 || a.iter().any(|r| r.len() != n2) {
            return Err(Error::InvalidInput("A must be a nonempty rectangular matrix".into()));
        }
        let mut out = self.clone();
        out.input_dim = n2;
        for u in &mut out.layers[0].units {
            let mut w2 = vec![0.0; n2];
            for (i, row) in a.iter().enumerate() {
                for (j, aij) in row.iter().enumerate() {
                    w2[j] += u.w[i] * aij;
                }
            }
            let mut shift = 0.0;
            for (wi, bi) in u.w.iter().zip(b) {
                shift += wi * bi;
            }
            u.b += shift;
            u.w = w2;
        }
        Ok(out)
    }

    /// Replace the last layer's activation by a one-layer 1-D network: each unit
    /// φ(f_j + b_j) becomes Σ_k c̃_k ψ(ã_k (f_j + b_j) + b̃_k) + d̃. Depth is unchanged.
    pub fn insert_hidden(&self, inner_1d: &Network) -> Result<Network> {
        if inner_1d.input_dim != 1 {
            return Err(Error::DimensionMismatch { expected: 1, got: inner_1d.input_dim });
        }
        if inner_1d.depth() != 1 {
            return Err(Error::NotOneLayer(inner_1d.depth()));
        }
        let inner = &inner_1d.layers[0];
        let last = self.layers.last().unwrap();
        let mut units = Vec::with_capacity(last.units.len() * inner.units.len());
        let mut coeffs = Vec::with_capacity(units.capacity());
        let mut bias = self.out_bias;
        for (u, c) in last.units.iter().zip(&self.out_coeffs) {
            for (v, ck) in inner.units.iter().zip(&inner_1d.out_coeffs) {
                let a = v.w[0];
                units.push(Unit { w: u.w.iter().map(|w| a * w).collect(), b: a * u.b + v.b });
                coeffs.push(c * ck);
            }
            bias += c * inner_1d.out_bias;
        }
        let mut layers = self.layers.clone();
        *layers.last_mut().unwrap() = Layer { activation: inner.activation.clone(), units };
        Network::new(self.input_dim, layers, coeffs, bias)
    }

    /// x ↦ outer(self(x)) for a one-layer `self` and a one-layer 1-D `outer`; two layers.
    pub fn compose_1d(&self, outer: &Network) -> Result<Network> {
        if self.depth() != 1 {
            return Err(Error::NotOneLayer(self.depth()));
        }
        if outer.input_dim != 1 {
            return Err(Error::DimensionMismatch { expected: 1, got: outer.input_dim });
        }
        if outer.depth() != 1 {
            return Err(Error::NotOneLayer(outer.depth()));
        }
        let top = &outer.layers[0];
        let units = top
            .units
            .iter()
            .map(|v| {
                let a = v.w[0];
                Unit { w: self.out_coeffs.iter().map(|c| a * c).collect(), b: a * self.out_bias + v.b }
            })
            .collect();
        let mut layers = self.layers.clone();
        layers.push(Layer { activation: top.activation.clone(), units });
        Network::new(self.input_dim, layers, outer.out_coeffs.clone(), outer.out_bias)
    }

    /// Σ coeff_i · net_i, block-concatenating each layer.
    pub fn linear_combine(nets: &[(Network, f64)]) -> Result<Network> {
        let (first, _) = nets
            .first()
            .ok_or_else(|| Error::IncompatibleNetworks("empty combination".into()))?;
        for (n, _) in nets {
            if n.input_dim != first.input_dim {
                return Err(Error::IncompatibleNetworks(format!(
                    "input_dim {} vs {}",
                    n.input_dim, first.input_dim
                )));
            }
            if n.depth() != first.depth() {
                return Err(Error::IncompatibleNetworks(format!("depth {} vs {}", n.depth(), first.depth())));
            }
            for (l1, l2) in n.layers.iter().zip(&first.layers) {
                if l1.activation != l2.activation {
                    return Err(Error::IncompatibleNetworks(format!(
                        "activation {} vs {}",
                        l1.activation.name(),
                        l2.activation.name()
                    )));
                }
            }
        }
        let depth = first.depth();
        let mut layers = Vec::with_capacity(depth);
        let mut prev_offsets: Vec<usize> = vec![0; nets.len()];
        let mut prev_total = first.input_dim;
        for k in 0..depth {
            let mut units = Vec::new();
            let mut offsets = Vec::with_capacity(nets.len());
            for (i, (n, _)) in nets.iter().enumerate() {
                offsets.push(units.len());
                for u in &n.layers[k].units {
                    let w = if k == 0 {
                        u.w.clone()
                    } else {
                        let mut w = vec![0.0; prev_total];
                        w[prev_offsets[i]..prev_offsets[i] + u.w.len()].copy_from_slice(&u.w);
                        w
                    };
                    units.push(Unit { w, b: u.b });
                }
            }
            prev_total = units.len();
            prev_offsets = offsets;
            layers.push(Layer { activation: first.layers[k].activation.clone(), units });
        }
        let mut coeffs = Vec::with_capacity(prev_total);
        let mut bias = 0.0;
        for (n, c) in nets {
            coeffs.extend(n.out_coeffs.iter().map(|x| c * x));
            bias += c * n.out_bias;
        }
        Network::new(first.input_dim, layers, coeffs, bias)
    }

    /// Merge units with identical weights and bias; drop units nothing reads from.
    pub fn dedup(&self) -> Network {
        let mut net = self.clone();
        for k in (0..net.layers.len()).rev() {
            let units = std::mem::take(&mut net.layers[k].units);
            let mut keep: Vec<Unit> = Vec::new();
            let mut map = Vec::with_capacity(units.len());
            for u in units {
                let key_bits: Vec<u64> = u.w.iter().map(|x| x.to_bits()).chain([u.b.to_bits()]).collect();
                if let Some(pos) = keep.iter().position(|v| {
                    v.w.iter().map(|x| x.to_bits()).chain([v.b.to_bits()]).eq(key_bits.iter().copied())
                }) {
                    map.push(pos);
                } else {
                    map.push(keep.len());
                    keep.push(u);
                }
            }
            // fold consumers of layer k
            let fold = |old: &[f64]| {
                let mut v = vec![0.0; keep.len()];
                for (j, x) in old.iter().enumerate() {
                    v[map[j]] += x;
                }
                v
            };
            if k + 1 == net.layers.len() {
                net.out_coeffs = fold(&net.out_coeffs);
            } else {
                for u in &mut net.layers[k + 1].units {
                    u.w = fold(&u.w);
                }
            }
            net.layers[k].units = keep;
            // drop units with no outgoing weight
            let used: Vec<bool> = if k + 1 == net.layers.len() {
                net.out_coeffs.iter().map(|c| *c != 0.0).collect()
            } else {
                (0..net.layers[k].units.len())
                    .map(|j| net.layers[k + 1].units.iter().any(|u| u.w[j] != 0.0))
                    .collect()
            };
            if used.iter().any(|u| !u) {
                let filt = |v: &[f64]| v.iter().zip(&used).filter(|(_, u)| **u).map(|(x, _)| *x).collect::<Vec<f64>>();
                if k + 1 == net.layers.len() {
                    net.out_coeffs = filt(&net.out_coeffs);
                } else {
                    for u in &mut net.layers[k + 1].units {
                        u.w = filt(&u.w);
                    }
                }
                let units = std::mem::take(&mut net.layers[k].units);
                net.layers[k].units = units.into_iter().zip(&used).filter(|(_, u)| **u).map(|(x, _)| x).collect();
            }
        }
        net
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("network serializes")
    }

    pub fn from_json(s: &str) -> Result<Network> {
        serde_json::from_str(s).map_err(|e| Error::InvalidInput(format!("network JSON: {e}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::activation::second_difference_network;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_net(rng: &mut ChaCha8Rng, n: usize, units: usize, depth: usize) -> Network {
        let mut layers = Vec::new();
        let mut fan = n;
        for _ in 0..depth {
            let us = (0..units)
                .map(|_| Unit { w: (0..fan).map(|_| rng.gen_range(-2.0..2.0)).collect(), b: rng.gen_range(-1.0..1.0) })
                .collect();
            layers.push(Layer { activation: Activation::Tanh, units: us });
            fan = units;
        }
        let c = (0..units).map(|_| rng.gen_range(-1.0..1.0)).collect();
        Network::new(n, layers, c, rng.gen_range(-1.0..1.0)).unwrap()
    }

    #[test]
    fn examples() {
        let n = Network::one_layer(2, Activation::Tanh, vec![(vec![0.0, 0.0], 0.0, 1.0)], 0.0).unwrap();
        assert_eq!(n.evaluate(&[3.0, -1.0]).unwrap(), 0.0);
        let r = Network::one_layer(2, Activation::Relu, vec![(vec![1.0, 0.0], 0.0, 1.0)], 0.0).unwrap();
        assert_eq!(r.evaluate(&[2.0, 5.0]).unwrap(), 2.0);
        assert_eq!(second_difference_network(&Activation::Relu).evaluate(&[1.0]).unwrap(), 1.0);
        assert!(matches!(r.evaluate(&[1.0]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn compose_matches() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let inner = random_net(&mut rng, 2, 4, 1);
        let outer = random_net(&mut rng, 1, 3, 1);
        let c = inner.compose_1d(&outer).unwrap();
        assert_eq!(c.depth(), 2);
        for _ in 0..50 {
            let x = [rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)];
            let want = outer.evaluate(&[inner.evaluate(&x).unwrap()]).unwrap();
            assert!((c.evaluate(&x).unwrap() - want).abs() < 1e-12);
        }
        assert!(c.compose_1d(&outer).is_err());
    }

    #[test]
    fn precompose_matches() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let net = random_net(&mut rng, 3, 5, 2);
            let a: Vec<Vec<f64>> = (0..3).map(|_| (0..2).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
            let b: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let p = net.affine_precompose(&a, &b).unwrap();
            let x = [rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)];
            let ax: Vec<f64> = (0..3).map(|i| a[i][0] * x[0] + a[i][1] * x[1] + b[i]).collect();
            let lhs = p.evaluate(&x).unwrap();
            let rhs = net.evaluate(&ax).unwrap();
            assert!((lhs - rhs).abs() <= 1e-13 * (1.0 + rhs.abs()));
        }
    }

    #[test]
    fn insert_hidden_counts_and_substitution() {
        let outer = Network::one_layer(
            2,
            Activation::Identity,
            vec![(vec![1.0, 0.5], 0.1, 2.0), (vec![-1.0, 1.0], -0.2, -1.0)],
            0.3,
        )
        .unwrap();
        let inner = Network::one_layer(
            1,
            Activation::Tanh,
            vec![(vec![1.0], 0.0, 1.0), (vec![2.0], 1.0, 0.5), (vec![-1.0], 0.2, 0.25)],
            0.1,
        )
        .unwrap();
        let r = outer.insert_hidden(&inner).unwrap();
        assert_eq!(r.layers()[0].units.len(), 6);
        let x = [0.4, -0.7];
        let f1 = 1.0 * 0.4 + 0.5 * -0.7 + 0.1;
        let f2 = -0.4 + -0.7 - 0.2;
        let want = 2.0 * inner.evaluate(&[f1]).unwrap() - inner.evaluate(&[f2]).unwrap() + 0.3;
        assert!((r.evaluate(&x).unwrap() - want).abs() < 1e-14);

        let single = Network::one_layer(1, Activation::Tanh, vec![(vec![1.0], 0.0, 1.0)], 0.0).unwrap();
        let r2 = outer.insert_hidden(&single).unwrap();
        let want2 = 2.0 * f1.tanh() - f2.tanh() + 0.3;
        assert!((r2.evaluate(&x).unwrap() - want2).abs() < 1e-15);
    }

    #[test]
    fn combine_and_serde() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_net(&mut rng, 2, 4, 2);
        let b = random_net(&mut rng, 2, 3, 2);
        let z = Network::linear_combine(&[(a.clone(), 1.0), (a.clone(), -1.0)]).unwrap();
        let s = Network::linear_combine(&[(a.clone(), 2.0), (b.clone(), 0.5)]).unwrap();
        for _ in 0..10 {
            let x = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
            assert!(z.evaluate(&x).unwrap().abs() < 1e-14);
            let want = 2.0 * a.evaluate(&x).unwrap() + 0.5 * b.evaluate(&x).unwrap();
            assert!((s.evaluate(&x).unwrap() - want).abs() < 1e-13);
        }
        let back = Network::from_json(&s.to_json()).unwrap();
        assert_eq!(back, s);
        let one = random_net(&mut rng, 2, 4, 1);
        assert!(matches!(Network::linear_combine(&[(a, 1.0), (one, 1.0)]), Err(Error::IncompatibleNetworks(_))));
    }

    #[test]
    fn json_shape() {
        let r = Network::one_layer(1, Activation::Relu, vec![(vec![1.0], 0.5, 2.0)], 0.0).unwrap();
        let v: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(v["input_dim"], 1);
        assert_eq!(v["layers"][0]["activation"], "relu");
        assert_eq!(v["layers"][0]["units"][0]["b"], 0.5);
        assert_eq!(v["out_coeffs"][0], 2.0);
        assert!(Network::from_json(r#"{"input_dim":2,"layers":[{"activation":"relu","units":[{"w":[1],"b":0}]}],"out_coeffs":[1],"out_bias":0}"#).is_err());
    }

    #[test]
    fn dedup_preserves_values() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = random_net(&mut rng, 2, 3, 2);
        let twice = Network::linear_combine(&[(a.clone(), 1.0), (a.clone(), 1.0)]).unwrap();
        let d = twice.dedup();
        assert!(d.unit_count() < twice.unit_count());
        for _ in 0..20 {
            let x = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
            assert!((d.evaluate(&x).unwrap() - 2.0 * a.evaluate(&x).unwrap()).abs() < 1e-13);
        }
    }
}
