//! Euler–Maruyama integration of the graphon particle systems.
//!
//! Each node `p_i` of the midpoint grid carries `R` independent replicas; the
//! replica mean at a node estimates `E[x_{p_i}(t)]`, which is the only way
//! the law enters the coupling. Steps read every mean-field aggregate from
//! the pre-step snapshot and then update nodes in parallel.

mod general;
mod oracle;
mod steps;

pub use general::{DriftFn, GeneralSystemSpec};
pub use oracle::{mean_ode_from, mean_ode_oracle, MeanTrajectory};
pub use steps::{
    from_direct_form, step_general, step_sgd, step_tracking, step_tracking_direct, to_direct_form,
    tracking_output,
};

use rayon::prelude::*;

use crate::costs::{CostField, Profile};
use crate::error::{invalid, Error, Result};
use crate::gains::{SgdGains, TrackingGains, Validation};
use crate::graphon::{midpoint_grid, DiscretizedGraphon, GraphonKernel};
use crate::linalg::Matrix;
use crate::metrics::Snapshot;
use crate::noise::OuSpec;
use crate::rng::{stream, Channel};
use crate::scalar::Real;

/// Default Euler step.
pub const DEFAULT_DT: f64 = 0.01;

/// Law of the initial states: independent Gaussians with per-node mean
/// profile and a common standard deviation.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialLaw<T> {
    pub mean: Vec<Profile<T>>,
    pub std: T,
}

impl<T: Real> InitialLaw<T> {
    pub fn gaussian(mean: Vec<Profile<T>>, std: T) -> Result<Self> {
        if mean.is_empty() {
            return Err(invalid("initial mean needs at least one component"));
        }
        if !(std >= T::zero() && std.is_finite()) {
            return Err(invalid(format!("initial std must be nonnegative, got {std}")));
        }
        Ok(InitialLaw { mean, std })
    }

    /// Zero mean, unit standard deviation.
    pub fn standard(dim: usize) -> Self {
        InitialLaw { mean: vec![Profile::Constant(T::zero()); dim], std: T::one() }
    }

    /// Bound on `sup_p E‖x_p(0)‖²`.
    pub fn second_moment_bound(&self) -> T {
        let m2: T = self.mean.iter().map(|m| m.sup_abs() * m.sup_abs()).sum();
        m2 + T::from_usize_lossy(self.mean.len()) * self.std * self.std
    }

    pub fn mean_at(&self, p: T) -> Vec<T> {
        self.mean.iter().map(|m| m.eval(p)).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Mode<T> {
    /// Consensus plus stochastic gradient, diffusion `α₂ Σ₁ dw`.
    Sgd { cost: CostField<T>, gains: SgdGains<T>, sigma1: Matrix<T> },
    /// Gradient tracking with OU drive η on the auxiliary state.
    Tracking { cost: CostField<T>, gains: TrackingGains<T>, eta: OuSpec<T> },
    General(GeneralSystemSpec<T>),
}

impl<T: Real> Mode<T> {
    pub fn name(&self) -> &'static str {
        match self {
            Mode::Sgd { .. } => "sgd",
            Mode::Tracking { .. } => "tracking",
            Mode::General(_) => "general",
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Mode::Sgd { cost, .. } | Mode::Tracking { cost, .. } => cost.dim(),
            Mode::General(spec) => spec.dim(),
        }
    }

    pub fn cost(&self) -> Option<&CostField<T>> {
        match self {
            Mode::Sgd { cost, .. } | Mode::Tracking { cost, .. } => Some(cost),
            Mode::General(_) => None,
        }
    }

    /// Decay-condition check of the configured gains.
    pub fn validate_gains(&self) -> Validation {
        match self {
            Mode::Sgd { gains, .. } => gains.validate(),
            Mode::Tracking { gains, .. } => gains.validate(),
            Mode::General(spec) => spec.gains.validate(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig<T> {
    pub kernel: GraphonKernel<T>,
    pub mode: Mode<T>,
    pub init: InitialLaw<T>,
    pub n_nodes: usize,
    pub n_replicas: usize,
    pub dt: T,
    pub horizon: T,
    /// Steps between recorded snapshots (0 records only the endpoints).
    pub record_every: usize,
    pub seed: u64,
}

impl<T: Real> SimConfig<T> {
    pub fn dim(&self) -> usize {
        self.mode.dim()
    }

    /// Structural checks: sizes, step, horizon and matrix shapes. The gain
    /// decay conditions are checked separately by [`Mode::validate_gains`].
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > T::zero() && self.dt.is_finite()) {
            return Err(invalid(format!("step h must be positive, got {}", self.dt)));
        }
        if !(self.horizon >= self.dt && self.horizon.is_finite()) {
            return Err(invalid(format!("horizon T = {} must be at least h = {}", self.horizon, self.dt)));
        }
        if self.n_nodes < 2 {
            return Err(invalid("need at least 2 nodes"));
        }
        if self.n_replicas < 1 {
            return Err(invalid("need at least 1 replica"));
        }
        let n = self.dim();
        if self.init.mean.len() != n {
            return Err(invalid(format!("initial mean has {} components, state has {n}", self.init.mean.len())));
        }
        match &self.mode {
            Mode::Sgd { sigma1, .. } => {
                if sigma1.rows() != n || sigma1.cols() != n {
                    return Err(invalid(format!("Σ₁ must be {n}×{n}")));
                }
            }
            Mode::Tracking { .. } => {}
            Mode::General(spec) => spec.validate()?,
        }
        Ok(())
    }

    pub fn n_steps(&self) -> u64 {
        (self.horizon / self.dt).round().to_u64().unwrap_or(0).max(1)
    }
}

/// Per-(node, replica) states stored node-major: entry `k` of replica `r` at
/// node `i` lives at `(i·R + r)·n + k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble<T> {
    n_nodes: usize,
    n_replicas: usize,
    dim: usize,
    coords: Vec<T>,
    states: Vec<T>,
    aux: Option<Vec<T>>,
    drive: Option<Vec<T>>,
    time: T,
    step: u64,
}

impl<T: Real> Ensemble<T> {
    pub fn new(
        n_nodes: usize,
        n_replicas: usize,
        dim: usize,
        states: Vec<T>,
        aux: Option<Vec<T>>,
        drive: Option<Vec<T>>,
        time: T,
    ) -> Result<Self> {
        let len = n_nodes * n_replicas * dim;
        if n_nodes == 0 || n_replicas == 0 || dim == 0 {
            return Err(invalid("ensemble sizes must be positive"));
        }
        for (name, v) in [("states", Some(&states)), ("aux", aux.as_ref()), ("drive", drive.as_ref())] {
            if let Some(v) = v {
                if v.len() != len {
                    return Err(invalid(format!("{name} has length {}, expected {len}", v.len())));
                }
                if v.iter().any(|x| !x.is_finite()) {
                    return Err(invalid(format!("{name} contains non-finite entries")));
                }
            }
        }
        Ok(Ensemble { n_nodes, n_replicas, dim, coords: midpoint_grid(n_nodes), states, aux, drive, time, step: 0 })
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn n_replicas(&self) -> usize {
        self.n_replicas
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn coords(&self) -> &[T] {
        &self.coords
    }

    pub fn states(&self) -> &[T] {
        &self.states
    }

    pub fn aux(&self) -> Option<&[T]> {
        self.aux.as_deref()
    }

    pub fn drive(&self) -> Option<&[T]> {
        self.drive.as_deref()
    }

    pub fn time(&self) -> T {
        self.time
    }

    /// Number of steps taken; also the counter keying the next step's draws.
    pub fn step_index(&self) -> u64 {
        self.step
    }

    /// State of replica `r` at node `i`.
    pub fn state(&self, i: usize, r: usize) -> &[T] {
        let at = (i * self.n_replicas + r) * self.dim;
        &self.states[at..at + self.dim]
    }

    pub(crate) fn advance(&mut self, h: T) -> Result<()> {
        self.step += 1;
        self.time = T::from_u64(self.step).expect("step count") * h;
        let bad = |v: &[T]| v.par_iter().any(|x| !x.is_finite());
        if bad(&self.states) || self.aux.as_deref().is_some_and(bad) {
            return Err(Error::BlowUp { step: self.step, time: self.time.as_f64() });
        }
        Ok(())
    }
}

/// Draws the initial ensemble; tracking mode also sets `ỹ(0) = (1 − β₂(0))·∇V`
/// (zero when `β₂(0) = 1`) and starts the OU drive in its stationary law.
pub fn init_ensemble<T: Real>(config: &SimConfig<T>) -> Result<Ensemble<T>> {
    config.validate()?;
    let (nn, rr, n) = (config.n_nodes, config.n_replicas, config.dim());
    let coords = midpoint_grid::<T>(nn);
    let mut states = vec![T::zero(); nn * rr * n];
    states.par_chunks_mut(rr * n).enumerate().for_each(|(i, chunk)| {
        let mean = config.init.mean_at(coords[i]);
        let mut rng = stream(config.seed, 0, i as u64, Channel::Init);
        for x in chunk.chunks_mut(n) {
            for (xk, &mk) in x.iter_mut().zip(&mean) {
                let z: T = rng.normal();
                *xk = mk + config.init.std * z;
            }
        }
    });
    let stationary_drive = |ou: &OuSpec<T>| {
        let mut drive = vec![T::zero(); nn * rr * n];
        if !ou.is_off() {
            drive.par_chunks_mut(rr * n).enumerate().for_each(|(i, chunk)| {
                let mut rng = stream(config.seed, 0, i as u64, Channel::DriveInit);
                chunk.iter_mut().for_each(|v| *v = ou.stationary_std() * rng.normal());
            });
        }
        drive
    };
    let (aux, drive) = match &config.mode {
        Mode::Sgd { .. } => (None, None),
        Mode::Tracking { cost, gains, eta } => {
            let shift = T::one() - gains.beta2.eval(T::zero());
            let mut aux = vec![T::zero(); nn * rr * n];
            if shift != T::zero() {
                aux.par_chunks_mut(rr * n).zip(states.par_chunks(rr * n)).enumerate().for_each(|(i, (a, z))| {
                    for (ar, zr) in a.chunks_mut(n).zip(z.chunks(n)) {
                        cost.grad_into(coords[i], zr, ar);
                        ar.iter_mut().for_each(|v| *v = *v * shift);
                    }
                });
            }
            (Some(aux), Some(stationary_drive(eta)))
        }
        Mode::General(spec) => (None, Some(stationary_drive(&spec.xi))),
    };
    Ensemble::new(nn, rr, n, states, aux, drive, T::zero())
}

fn replica_means<T: Real>(values: &[T], n_nodes: usize, n_replicas: usize, dim: usize) -> Vec<T> {
    let inv_r = T::one() / T::from_usize_lossy(n_replicas);
    let mut out = vec![T::zero(); n_nodes * dim];
    out.par_chunks_mut(dim).zip(values.par_chunks(n_replicas * dim)).for_each(|(m, block)| {
        for x in block.chunks(dim) {
            m.iter_mut().zip(x).for_each(|(a, &b)| *a = *a + b);
        }
        m.iter_mut().for_each(|a| *a = *a * inv_r);
    });
    out
}

/// Replica average per node (`N × n`, node-major).
pub fn node_means<T: Real>(ensemble: &Ensemble<T>) -> Vec<T> {
    replica_means(&ensemble.states, ensemble.n_nodes, ensemble.n_replicas, ensemble.dim)
}

/// Replica average of the auxiliary state, if any.
pub fn aux_means<T: Real>(ensemble: &Ensemble<T>) -> Option<Vec<T>> {
    ensemble.aux.as_ref().map(|a| replica_means(a, ensemble.n_nodes, ensemble.n_replicas, ensemble.dim))
}

/// `(1/N) Σ_j A(p_i, p_j)(m_j − state)` by a direct sum over row `i`.
pub fn coupling_term<T: Real>(disc: &DiscretizedGraphon<T>, means: &[T], node: usize, state: &[T]) -> Vec<T> {
    let n = state.len();
    let nn = disc.n_grid();
    let inv_n = T::one() / T::from_usize_lossy(nn);
    let row = disc.weight_matrix().row(node);
    (0..n)
        .map(|k| row.iter().enumerate().map(|(j, &a)| a * (means[j * n + k] - state[k])).sum::<T>() * inv_n)
        .collect()
}

/// A running simulation: configuration, discretized kernel and ensemble.
#[derive(Debug, Clone)]
pub struct Simulation<T> {
    config: SimConfig<T>,
    disc: DiscretizedGraphon<T>,
    ensemble: Ensemble<T>,
}

impl<T: Real> Simulation<T> {
    pub fn new(config: SimConfig<T>) -> Result<Self> {
        let ensemble = init_ensemble(&config)?;
        let disc = DiscretizedGraphon::new(&config.kernel, config.n_nodes)?;
        Ok(Simulation { config, disc, ensemble })
    }

    pub fn config(&self) -> &SimConfig<T> {
        &self.config
    }

    pub fn discretized(&self) -> &DiscretizedGraphon<T> {
        &self.disc
    }

    pub fn ensemble(&self) -> &Ensemble<T> {
        &self.ensemble
    }

    pub fn is_done(&self) -> bool {
        self.ensemble.step >= self.config.n_steps()
    }

    pub fn step(&mut self) -> Result<()> {
        let (h, seed) = (self.config.dt, self.config.seed);
        match &self.config.mode {
            Mode::Sgd { cost, gains, sigma1 } => step_sgd(&mut self.ensemble, &self.disc, cost, gains, sigma1, seed, h),
            Mode::Tracking { cost, gains, eta } => {
                step_tracking(&mut self.ensemble, &self.disc, cost, gains, eta, seed, h)
            }
            Mode::General(spec) => step_general(&mut self.ensemble, &self.disc, spec, seed, h),
        }
    }

    /// Tracking output `y = ỹ + β₂(t)∇V(p, z)`.
    pub fn output(&self) -> Option<Vec<T>> {
        match &self.config.mode {
            Mode::Tracking { cost, gains, .. } => Some(tracking_output(&self.ensemble, cost, gains)),
            _ => None,
        }
    }

    pub fn snapshot(&self) -> Snapshot<T> {
        let e = &self.ensemble;
        let mut snap = Snapshot::from_states(e.time, e.states(), e.n_nodes, e.n_replicas, e.dim);
        if let (Some(aux), Some(y)) = (e.aux(), self.output()) {
            snap = snap.with_tracking(aux, &y);
        }
        snap
    }

    fn should_record(&self) -> bool {
        let k = self.ensemble.step;
        let every = self.config.record_every as u64;
        k == 0 || self.is_done() || (every > 0 && k.is_multiple_of(every))
    }

    /// Runs to the horizon, calling `record` at step 0, every `record_every`
    /// steps and at the final step.
    pub fn run_with<F: FnMut(&Self) -> Result<()>>(&mut self, mut record: F) -> Result<()> {
        record(self)?;
        while !self.is_done() {
            self.step()?;
            if self.should_record() {
                record(self)?;
            }
        }
        Ok(())
    }

    /// Runs to the horizon and collects snapshots at the recording times.
    pub fn run(&mut self) -> Result<Vec<Snapshot<T>>> {
        let mut snaps = Vec::new();
        self.run_with(|s| {
            snaps.push(s.snapshot());
            Ok(())
        })?;
        Ok(snaps)
    }
}

/// Snapshots of an SGD run.
pub fn run_sgd<T: Real>(config: SimConfig<T>) -> Result<Vec<Snapshot<T>>> {
    if !matches!(config.mode, Mode::Sgd { .. }) {
        return Err(Error::UnsupportedMode(format!("run_sgd called with mode {}", config.mode.name())));
    }
    Simulation::new(config)?.run()
}

/// Snapshots of a tracking run.
pub fn run_tracking<T: Real>(config: SimConfig<T>) -> Result<Vec<Snapshot<T>>> {
    if !matches!(config.mode, Mode::Tracking { .. }) {
        return Err(Error::UnsupportedMode(format!("run_tracking called with mode {}", config.mode.name())));
    }
    Simulation::new(config)?.run()
}
