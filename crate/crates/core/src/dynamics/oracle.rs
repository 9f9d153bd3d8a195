use super::{Mode, SimConfig};
use crate::costs::CostField;
use crate::error::{Error, Result};
use crate::graphon::{midpoint_grid, DiscretizedGraphon};
use crate::scalar::Real;

/// Deterministic node-mean trajectory at the simulation's recording times.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanTrajectory<T> {
    pub times: Vec<T>,
    /// `N × n` node means per recorded time.
    pub means: Vec<Vec<T>>,
    /// ỹ means per recorded time (tracking only).
    pub aux_means: Option<Vec<Vec<T>>>,
}

/// Number of RK4 substeps per simulation step.
const SUBSTEPS: u64 = 10;

/// Mean ODE started from the initial law's node means (and ỹ means zero).
pub fn mean_ode_oracle<T: Real>(config: &SimConfig<T>) -> Result<MeanTrajectory<T>> {
    config.validate()?;
    let coords = midpoint_grid::<T>(config.n_nodes);
    let m0: Vec<T> = coords.iter().flat_map(|&p| config.init.mean_at(p)).collect();
    let y0 = match &config.mode {
        Mode::Tracking { cost, gains, .. } => {
            let shift = T::one() - gains.beta2.eval(T::zero());
            let mut y = quadratic_grad(cost, &coords, &m0)?;
            y.iter_mut().for_each(|v| *v = *v * shift);
            Some(y)
        }
        _ => None,
    };
    mean_ode_from(config, m0, y0)
}

/// `∇V(p_i, m_i)` of a quadratic field, which equals `E[∇V(p_i, x)]`.
fn quadratic_grad<T: Real>(cost: &CostField<T>, coords: &[T], m: &[T]) -> Result<Vec<T>> {
    if !cost.is_quadratic() {
        return Err(Error::UnsupportedMode("mean ODE closes only for quadratic costs".into()));
    }
    let n = cost.dim();
    let mut g = vec![T::zero(); m.len()];
    for (i, &p) in coords.iter().enumerate() {
        cost.grad_into(p, &m[i * n..(i + 1) * n], &mut g[i * n..(i + 1) * n]);
    }
    Ok(g)
}

/// Mean ODE from given node means (and ỹ means for tracking), integrated
/// by classical RK4 at step `h/10`.
pub fn mean_ode_from<T: Real>(config: &SimConfig<T>, m0: Vec<T>, y0: Option<Vec<T>>) -> Result<MeanTrajectory<T>> {
    config.validate()?;
    let cost = config.mode.cost().ok_or_else(|| Error::UnsupportedMode("mean ODE needs a cost".into()))?;
    if !cost.is_quadratic() {
        return Err(Error::UnsupportedMode("mean ODE closes only for quadratic costs".into()));
    }
    let disc = DiscretizedGraphon::new(&config.kernel, config.n_nodes)?;
    let coords = disc.coords().to_vec();
    let (nn, n) = (config.n_nodes, config.dim());
    let degrees = disc.degrees();
    let coupling = |v: &[T]| -> Vec<T> {
        let w = disc.weighted_sums(v, n);
        (0..nn * n).map(|j| w[j] - degrees[j / n] * v[j]).collect()
    };
    let tracking = matches!(config.mode, Mode::Tracking { .. });
    // state vector: means, followed by ỹ means in tracking mode
    let rhs = |t: T, s: &[T]| -> Vec<T> {
        let m = &s[..nn * n];
        let g = quadratic_grad(cost, &coords, m).expect("quadratic checked");
        match &config.mode {
            Mode::Sgd { gains, .. } => {
                let (a1, a2) = (gains.alpha1.eval(t), gains.alpha2.eval(t));
                coupling(m).iter().zip(&g).map(|(&c, &gi)| a1 * c - a2 * gi).collect()
            }
            Mode::Tracking { gains, .. } => {
                let y = &s[nn * n..];
                let (b1, b2, b3) = (gains.beta1.eval(t), gains.beta2.eval(t), gains.beta3.eval(t));
                let (cz, cy, cg) = (coupling(m), coupling(y), coupling(&g));
                let mut out = Vec::with_capacity(2 * nn * n);
                out.extend((0..nn * n).map(|j| {
                    -b1 * y[j] - b1 * b2 * g[j] + b3 * cz[j] - b1 * b2 * b3 * cg[j] - b1 * b3 * cy[j]
                }));
                out.extend((0..nn * n).map(|j| b3 * cy[j] + b2 * b3 * cg[j]));
                out
            }
            Mode::General(_) => unreachable!("cost checked above"),
        }
    };
    let mut state = m0;
    if tracking {
        state.extend(y0.unwrap_or_else(|| vec![T::zero(); nn * n]));
    }
    let total = config.n_steps();
    let every = config.record_every as u64;
    let dt = config.dt / T::from_u64(SUBSTEPS).expect("small");
    let mut traj = MeanTrajectory { times: vec![], means: vec![], aux_means: tracking.then(Vec::new) };
    let record = |k: u64, s: &[T], traj: &mut MeanTrajectory<T>| {
        traj.times.push(T::from_u64(k).expect("step count") * config.dt);
        traj.means.push(s[..nn * n].to_vec());
        if let Some(a) = traj.aux_means.as_mut() {
            a.push(s[nn * n..].to_vec());
        }
    };
    record(0, &state, &mut traj);
    let half = T::lit(0.5);
    let sixth = T::one() / T::lit(6.0);
    let axpy = |s: &[T], k: &[T], a: T| -> Vec<T> { s.iter().zip(k).map(|(&x, &y)| x + a * y).collect() };
    for k in 1..=total {
        for sub in 0..SUBSTEPS {
            let t = T::from_u64((k - 1) * SUBSTEPS + sub).expect("step count") * dt;
            let k1 = rhs(t, &state);
            let k2 = rhs(t + half * dt, &axpy(&state, &k1, half * dt));
            let k3 = rhs(t + half * dt, &axpy(&state, &k2, half * dt));
            let k4 = rhs(t + dt, &axpy(&state, &k3, dt));
            for j in 0..state.len() {
                state[j] = state[j] + dt * sixth * (k1[j] + (k2[j] + k3[j]) * T::lit(2.0) + k4[j]);
            }
        }
        if k == total || (every > 0 && k % every == 0) {
            record(k, &state, &mut traj);
        }
    }
    Ok(traj)
}
