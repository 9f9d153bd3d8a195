//! Graphon-coupled stochastic optimization.

// `!(a < b)` is the NaN-rejecting form of `a >= b`.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod costs;
pub mod dynamics;
pub mod error;
pub mod gains;
pub mod graphon;
pub mod lemma_lab;
pub mod linalg;
pub mod metrics;
pub mod noise;
pub mod rng;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Real;

/// Double-precision instantiations of the generic types.
pub mod f64 {
    pub type Profile = crate::costs::Profile<f64>;
    pub type CostConstants = crate::costs::CostConstants<f64>;
    pub type CostField = crate::costs::CostField<f64>;
    pub type PowerLawGain = crate::gains::PowerLawGain<f64>;
    pub type SgdGains = crate::gains::SgdGains<f64>;
    pub type TrackingGains = crate::gains::TrackingGains<f64>;
    pub type GeneralGains = crate::gains::GeneralGains<f64>;
    pub type GraphonKernel = crate::graphon::GraphonKernel<f64>;
    pub type DiscretizedGraphon = crate::graphon::DiscretizedGraphon<f64>;
    pub type ConnectivityReport = crate::graphon::ConnectivityReport<f64>;
    pub type Matrix = crate::linalg::Matrix<f64>;
    pub type Snapshot = crate::metrics::Snapshot<f64>;
    pub type MetricRow = crate::metrics::MetricRow<f64>;
    pub type OuSpec = crate::noise::OuSpec<f64>;
    pub type DriftFn = crate::dynamics::DriftFn<f64>;
    pub type GeneralSystemSpec = crate::dynamics::GeneralSystemSpec<f64>;
    pub type InitialLaw = crate::dynamics::InitialLaw<f64>;
    pub type Mode = crate::dynamics::Mode<f64>;
    pub type SimConfig = crate::dynamics::SimConfig<f64>;
    pub type Ensemble = crate::dynamics::Ensemble<f64>;
    pub type Simulation = crate::dynamics::Simulation<f64>;
    pub type MeanTrajectory = crate::dynamics::MeanTrajectory<f64>;
}
