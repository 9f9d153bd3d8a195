use graphopt::costs::{CostField, Profile};
use graphopt::gains::PowerLawGain;
use graphopt::graphon::{DiscretizedGraphon, GraphonKernel};
use graphopt::lemma_lab::{bound7, envelope8, CoefficientPath};
use graphopt::metrics::Snapshot;
use graphopt::noise::OuSpec;
use proptest::prelude::*;

fn snapshot(values: Vec<f64>, n_nodes: usize, n_replicas: usize) -> Snapshot<f64> {
    Snapshot::from_states(0.0, &values, n_nodes, n_replicas, 1)
}

fn states() -> impl Strategy<Value = (Vec<f64>, usize, usize)> {
    (2usize..8, 2usize..6).prop_flat_map(|(n, r)| (prop::collection::vec(-10.0f64..10.0, n * r), Just(n), Just(r)))
}

proptest! {
    #[test]
    fn sup_deviation_dominates_mean_deviation((v, n, r) in states()) {
        let s = snapshot(v, n, r);
        prop_assert!(s.consensus_linf() >= s.consensus_l2() - 1e-12);
        prop_assert!(s.consensus_l2() >= 0.0);
    }

    #[test]
    fn second_moment_splits_into_variance_and_mean((v, n, r) in states()) {
        let s = snapshot(v, n, r);
        let split: f64 = (0..n).map(|i| s.variances[i] + s.means[i] * s.means[i]).sum::<f64>() / n as f64;
        prop_assert!((s.second_moment_int() - split).abs() <= 1e-9 * (1.0 + split));
    }

    #[test]
    fn mse_is_variance_plus_squared_bias((v, n, r) in states(), x in -5.0f64..5.0) {
        let s = snapshot(v, n, r);
        let (l, mse) = s.minimizer_errors(&[x]);
        let grid: f64 = s.means.iter().sum::<f64>() / n as f64;
        prop_assert!((l - (grid - x).powi(2)).abs() <= 1e-9 * (1.0 + l));
        let sup = (0..n).map(|i| s.variances[i] + (s.means[i] - x).powi(2)).fold(0.0, f64::max);
        prop_assert!((mse - sup).abs() <= 1e-9 * (1.0 + mse));
    }

    #[test]
    fn symmetric_coupling_sums_to_zero(c in 0.05f64..1.0, w in 0.0f64..1.0, v in prop::collection::vec(-5.0f64..5.0, 24)) {
        for kernel in [
            GraphonKernel::constant(c).unwrap(),
            GraphonKernel::block_model(vec![0.0, 0.4, 1.0], vec![vec![c, w], vec![w, c]]).unwrap(),
        ] {
            let disc = DiscretizedGraphon::new(&kernel, v.len()).unwrap();
            let sums = disc.weighted_sums(&v, 1);
            let net: f64 = (0..v.len()).map(|i| sums[i] - disc.degrees()[i] * v[i]).sum();
            prop_assert!(net.abs() <= 1e-10);
        }
    }

    #[test]
    fn ou_transition_preserves_stationary_variance(rho in 0.01f64..50.0, s in 0.0f64..3.0, h in 1e-4f64..2.0) {
        let ou = OuSpec::new(rho, s).unwrap();
        let (decay, innovation) = ou.transition(h);
        prop_assert!((decay * decay * s * s + innovation * innovation - s * s).abs() <= 1e-12 * (1.0 + s * s));
    }

    #[test]
    fn power_law_integral_is_additive(a in 0.1f64..3.0, g in 0.0f64..2.0, t1 in 0.0f64..50.0, d1 in 0.0f64..50.0, d2 in 0.0f64..50.0) {
        let p = PowerLawGain::new(a, g).unwrap();
        let (t2, t3) = (t1 + d1, t1 + d1 + d2);
        let whole = p.integral(t1, t3);
        prop_assert!((p.integral(t1, t2) + p.integral(t2, t3) - whole).abs() <= 1e-9 * (1.0 + whole.abs()));
    }

    #[test]
    fn quadratic_gradient_vanishes_at_target(q in 0.1f64..5.0, b in -2.0f64..2.0, m in -2.0f64..2.0, p in 0.0f64..1.0) {
        let cost = CostField::quadratic(Profile::constant(q), vec![Profile::affine(b, m)]).unwrap();
        let target = cost.center(p);
        prop_assert!(cost.grad(p, &target)[0].abs() <= 1e-12);
    }

    #[test]
    fn constant_envelope_is_the_pointwise_bound(a1 in 0.1f64..10.0, a2 in 0.0f64..10.0, a3 in 0.0f64..10.0) {
        let (c1, c2, c3) = (CoefficientPath::constant(a1), CoefficientPath::constant(a2), CoefficientPath::constant(a3));
        let env = envelope8(&c1, &c2, &c3, 0.0, 3.0);
        let b7 = bound7(&c1, &c2, &c3, 1.0);
        prop_assert!((env - b7).abs() <= 1e-12 * (1.0 + env));
        // the bound is the positive root of −a₁y + a₂√y + a₃ = 0
        let u = env.sqrt();
        prop_assert!((-a1 * env + a2 * u + a3).abs() <= 1e-9 * (1.0 + a1 * env));
    }
}
