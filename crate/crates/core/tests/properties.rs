use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use uniapprox::lift::{product_generator, Bump, Generator};
use uniapprox::ridge2d::{standard_profile, support_hits};
use uniapprox::separation::{random_one_layer, ridge_directions, vanishing_residual};
use uniapprox::wedge::{wedge_identity_residual, WedgeFunction};
use uniapprox::{Activation, Network, PiecewiseLinear};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn network_json_round_trip(seed in 0u64..1000, n in 1usize..4, m in 1usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let net = random_one_layer(&mut rng, n, m, &Activation::Tanh);
        let back = Network::from_json(&net.to_json()).unwrap();
        let x: Vec<f64> = (0..n).map(|i| 0.3 * i as f64 - 0.2).collect();
        prop_assert_eq!(net.evaluate(&x).unwrap(), back.evaluate(&x).unwrap());
    }

    #[test]
    fn wedge_identity_holds(seed in 0u64..1000, x0 in -4.0f64..4.0, x1 in -4.0f64..4.0, m in 0usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = WedgeFunction::random(&mut rng, 2, (seed % 2) as usize, m);
        prop_assert!(wedge_identity_residual(&w, &[x0, x1]).unwrap().abs() < 1e-9);
    }

    #[test]
    fn ridge_sums_vanish(seed in 0u64..1000, x0 in -3.0f64..3.0, x1 in -3.0f64..3.0, t in -5.0f64..5.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let net = random_one_layer(&mut rng, 2, 1 + (seed % 4) as usize, &Activation::Logistic);
        let dirs = ridge_directions(&net).unwrap();
        let v = vanishing_residual(&|x: &[f64]| net.eval_unchecked(x), &dirs, &[x0, x1], t).unwrap();
        prop_assert!(v.relative() < 1e-9);
    }

    #[test]
    fn product_generator_multiplies(w1 in 0.5f64..2.0, w2 in 0.5f64..2.0, x in prop::collection::vec(-2.0f64..2.0, 2)) {
        let a = Generator::new(2, vec![vec![1.0, 0.5]], Bump::tensor(vec![PiecewiseLinear::hat(w1)]).unwrap()).unwrap();
        let b = Generator::new(2, vec![vec![-0.2, 1.0]], Bump::tensor(vec![PiecewiseLinear::hat(w2)]).unwrap()).unwrap();
        let ab = product_generator(&a, &b).unwrap();
        let expect = a.evaluate(&x).unwrap() * b.evaluate(&x).unwrap();
        prop_assert!((ab.evaluate(&x).unwrap() - expect).abs() <= 1e-12);
    }

    #[test]
    fn support_count_recursion(x in -30.0f64..30.0, y in -30.0f64..30.0, m in 1u32..7) {
        let g = standard_profile();
        let n = 1usize << m;
        let rot = std::f64::consts::PI / n as f64;
        let (xr, yr) = (rot.cos() * x - rot.sin() * y, rot.sin() * x + rot.cos() * y);
        prop_assert_eq!(support_hits(&g, 2 * n, x, y), support_hits(&g, n, x, y) + support_hits(&g, n, xr, yr));
    }
}
