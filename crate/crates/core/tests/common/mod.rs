//! Configurations shared by the acceptance binary and the strict tests.

#![allow(dead_code)]

use graphopt::costs::{CostField, Profile};
use graphopt::dynamics::{
    init_ensemble, step_tracking, step_tracking_direct, to_direct_form, tracking_output, InitialLaw, Mode, SimConfig,
};
use graphopt::gains::{SgdGains, TrackingGains};
use graphopt::graphon::{DiscretizedGraphon, GraphonKernel};
use graphopt::linalg::Matrix;
use graphopt::noise::OuSpec;

pub const SEED: u64 = 0;
pub const X_STAR: [f64; 1] = [0.5];

pub fn quadratic_ramp() -> CostField<f64> {
    CostField::quadratic(Profile::constant(1.0), vec![Profile::affine(0.0, 1.0)]).unwrap()
}

pub fn sgd_config(n_replicas: usize) -> SimConfig<f64> {
    SimConfig {
        kernel: GraphonKernel::constant(1.0).unwrap(),
        mode: Mode::Sgd {
            cost: quadratic_ramp(),
            gains: SgdGains::default(),
            sigma1: Matrix::from_rows(&[vec![0.5]]).unwrap(),
        },
        init: InitialLaw::standard(1),
        n_nodes: 64,
        n_replicas,
        dt: 0.01,
        horizon: 200.0,
        record_every: 100,
        seed: SEED,
    }
}

pub fn tracking_config() -> SimConfig<f64> {
    SimConfig {
        kernel: GraphonKernel::constant(1.0).unwrap(),
        mode: Mode::Tracking { cost: quadratic_ramp(), gains: TrackingGains::default(), eta: OuSpec::new(1.0, 0.5).unwrap() },
        init: InitialLaw::standard(1),
        n_nodes: 64,
        n_replicas: 64,
        dt: 0.005,
        horizon: 500.0,
        record_every: 2000,
        seed: SEED,
    }
}

/// Sup-norm gap between the `y` paths of the two tracking integrators.
/// `local` restarts the direct form from the transformed state every step.
pub fn tracking_gap(h: f64, steps: usize, local: bool) -> f64 {
    let mut cfg = tracking_config();
    cfg.n_replicas = 4;
    cfg.init = InitialLaw::gaussian(vec![Profile::affine(0.0, 1.0)], 1.0).unwrap();
    let Mode::Tracking { cost, gains, eta } = cfg.mode.clone() else { unreachable!() };
    let disc = DiscretizedGraphon::new(&cfg.kernel, cfg.n_nodes).unwrap();
    let mut e = init_ensemble(&cfg).unwrap();
    let mut d = to_direct_form(&e, &cost, &gains);
    let mut worst: f64 = 0.0;
    for _ in 0..steps {
        if local {
            d = to_direct_form(&e, &cost, &gains);
        }
        step_tracking(&mut e, &disc, &cost, &gains, &eta, SEED, h).unwrap();
        step_tracking_direct(&mut d, &disc, &cost, &gains, &eta, SEED, h).unwrap();
        let y = tracking_output(&e, &cost, &gains);
        worst = y.iter().zip(d.aux().unwrap()).map(|(a, b)| (a - b).abs()).fold(worst, f64::max);
    }
    worst
}
