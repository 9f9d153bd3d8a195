use rayon::prelude::*;

use super::general::GeneralSystemSpec;
use super::{aux_means, node_means, replica_means, Ensemble};
use crate::costs::CostField;
use crate::error::{invalid, Result};
use crate::gains::{SgdGains, TrackingGains};
use crate::graphon::DiscretizedGraphon;
use crate::linalg::Matrix;
use crate::noise::OuSpec;
use crate::rng::{stream, Channel};
use crate::scalar::Real;

fn check_shape<T: Real>(e: &Ensemble<T>, disc: &DiscretizedGraphon<T>, dim: usize) -> Result<()> {
    if disc.n_grid() != e.n_nodes || dim != e.dim {
        return Err(invalid("ensemble does not match the grid or state dimension"));
    }
    Ok(())
}

/// Advances an OU drive block in place with the exact transition.
fn advance_drive<T: Real>(drive: &mut [T], ou: &OuSpec<T>, h: T, seed: u64, step: u64, node: usize) {
    if ou.is_off() {
        return;
    }
    let (decay, innov) = ou.transition(h);
    let mut rng = stream(seed, step, node as u64, Channel::Drive);
    drive.iter_mut().for_each(|v| *v = decay * *v + innov * rng.normal());
}

/// Gradients of every replica, laid out like the states.
fn gradients<T: Real>(e: &Ensemble<T>, cost: &CostField<T>) -> Vec<T> {
    let (rn, n) = (e.n_replicas * e.dim, e.dim);
    let mut g = vec![T::zero(); e.states.len()];
    g.par_chunks_mut(rn).zip(e.states.par_chunks(rn)).enumerate().for_each(|(i, (gi, zi))| {
        let p = e.coords[i];
        for (gr, zr) in gi.chunks_mut(n).zip(zi.chunks(n)) {
            cost.grad_into(p, zr, gr);
        }
    });
    g
}

/// One Euler–Maruyama step of
/// `dx = [α₁ ∫A(p,q)(E x_q − x)dq − α₂ ∇V(p,x)]dt − α₂ Σ₁ dw`.
pub fn step_sgd<T: Real>(
    e: &mut Ensemble<T>,
    disc: &DiscretizedGraphon<T>,
    cost: &CostField<T>,
    gains: &SgdGains<T>,
    sigma1: &Matrix<T>,
    seed: u64,
    h: T,
) -> Result<()> {
    check_shape(e, disc, cost.dim())?;
    let (n, rn) = (e.dim, e.n_replicas * e.dim);
    let sums = disc.weighted_sums(&node_means(e), n);
    let (a1, a2) = (gains.alpha1.eval(e.time), gains.alpha2.eval(e.time));
    let noise_scale = a2 * h.sqrt();
    let noisy = !sigma1.is_zero();
    let (step, coords, degrees) = (e.step, &e.coords, disc.degrees());
    e.states.par_chunks_mut(rn).enumerate().for_each(|(i, chunk)| {
        let (p, d, w) = (coords[i], degrees[i], &sums[i * n..(i + 1) * n]);
        let mut rng = stream(seed, step, i as u64, Channel::Diffusion);
        let (mut g, mut xi, mut sx) = (vec![T::zero(); n], vec![T::zero(); n], vec![T::zero(); n]);
        for x in chunk.chunks_mut(n) {
            cost.grad_into(p, x, &mut g);
            if noisy {
                rng.fill_normal(&mut xi);
                sigma1.mul_vec_into(&xi, &mut sx);
            }
            for k in 0..n {
                x[k] = x[k] + h * (a1 * (w[k] - d * x[k]) - a2 * g[k]) - noise_scale * sx[k];
            }
        }
    });
    e.advance(h)
}

/// One Euler step of the transformed tracking system in `(z, ỹ)`, with
/// `ỹ = y − β₂∇V(p, z)`; the ensemble's aux holds ỹ.
pub fn step_tracking<T: Real>(
    e: &mut Ensemble<T>,
    disc: &DiscretizedGraphon<T>,
    cost: &CostField<T>,
    gains: &TrackingGains<T>,
    eta: &OuSpec<T>,
    seed: u64,
    h: T,
) -> Result<()> {
    check_shape(e, disc, cost.dim())?;
    let (nn, rr, n) = (e.n_nodes, e.n_replicas, e.dim);
    let rn = rr * n;
    let grads = gradients(e, cost);
    let wz = disc.weighted_sums(&node_means(e), n);
    let wy = disc.weighted_sums(&aux_means(e).ok_or_else(|| invalid("tracking ensemble lacks aux"))?, n);
    let wg = disc.weighted_sums(&replica_means(&grads, nn, rr, n), n);
    let t = e.time;
    let (b1, b2, b3) = (gains.beta1.eval(t), gains.beta2.eval(t), gains.beta3.eval(t));
    let (b12, b13, b23, b123) = (b1 * b2, b1 * b3, b2 * b3, b1 * b2 * b3);
    let (step, degrees) = (e.step, disc.degrees());
    let aux = e.aux.as_mut().expect("checked above");
    let drive = e.drive.as_mut().ok_or_else(|| invalid("tracking ensemble lacks drive"))?;
    e.states
        .par_chunks_mut(rn)
        .zip(aux.par_chunks_mut(rn))
        .zip(drive.par_chunks_mut(rn))
        .enumerate()
        .for_each(|(i, ((zi, yi), etai))| {
            let d = degrees[i];
            let (wz, wy, wg) = (&wz[i * n..(i + 1) * n], &wy[i * n..(i + 1) * n], &wg[i * n..(i + 1) * n]);
            let gi = &grads[i * rn..(i + 1) * rn];
            for j in 0..rn {
                let k = j % n;
                let (z, y, g) = (zi[j], yi[j], gi[j]);
                let (cz, cy, cg) = (wz[k] - d * z, wy[k] - d * y, wg[k] - d * g);
                let dz = -b1 * y - b12 * g + b3 * cz - b123 * cg - b13 * cy;
                let dy = b3 * cy + b2 * etai[j] + b23 * cg;
                zi[j] = z + h * dz;
                yi[j] = y + h * dy;
            }
            advance_drive(etai, eta, h, seed, step, i);
        });
    e.advance(h)
}

/// One Euler step of the untransformed tracking system, where the
/// ensemble's aux holds `y` itself. The Hessian term `β₂ H dz` uses the
/// realized increment of `z`; `β₂′` is analytic.
pub fn step_tracking_direct<T: Real>(
    e: &mut Ensemble<T>,
    disc: &DiscretizedGraphon<T>,
    cost: &CostField<T>,
    gains: &TrackingGains<T>,
    eta: &OuSpec<T>,
    seed: u64,
    h: T,
) -> Result<()> {
    check_shape(e, disc, cost.dim())?;
    let (n, rn) = (e.dim, e.n_replicas * e.dim);
    let grads = gradients(e, cost);
    let wz = disc.weighted_sums(&node_means(e), n);
    let wy = disc.weighted_sums(&aux_means(e).ok_or_else(|| invalid("tracking ensemble lacks aux"))?, n);
    let t = e.time;
    let (b1, b2, b3, db2) = (gains.beta1.eval(t), gains.beta2.eval(t), gains.beta3.eval(t), gains.beta2_prime(t));
    let (step, coords, degrees) = (e.step, &e.coords, disc.degrees());
    let aux = e.aux.as_mut().expect("checked above");
    let drive = e.drive.as_mut().ok_or_else(|| invalid("tracking ensemble lacks drive"))?;
    e.states
        .par_chunks_mut(rn)
        .zip(aux.par_chunks_mut(rn))
        .zip(drive.par_chunks_mut(rn))
        .enumerate()
        .for_each(|(i, ((zi, yi), etai))| {
            let (p, d) = (coords[i], degrees[i]);
            let (wz, wy) = (&wz[i * n..(i + 1) * n], &wy[i * n..(i + 1) * n]);
            let gi = &grads[i * rn..(i + 1) * rn];
            let mut dz = vec![T::zero(); n];
            for ((z, y), (g, eta_r)) in zi.chunks_mut(n).zip(yi.chunks_mut(n)).zip(gi.chunks(n).zip(etai.chunks(n))) {
                let hess = cost.hessian(p, z);
                for k in 0..n {
                    let (cz, cy) = (wz[k] - d * z[k], wy[k] - d * y[k]);
                    dz[k] = h * (b3 * cz - b1 * y[k] - b1 * b3 * cy);
                }
                let hdz = hess.mul_vec(&dz);
                for k in 0..n {
                    let cy = wy[k] - d * y[k];
                    y[k] = y[k] + h * (b3 * cy + b2 * eta_r[k] + db2 * g[k]) + b2 * hdz[k];
                    z[k] = z[k] + dz[k];
                }
            }
            advance_drive(etai, eta, h, seed, step, i);
        });
    e.advance(h)
}

/// `y = ỹ + β₂(t)∇V(p, z)` for a transformed tracking ensemble.
pub fn tracking_output<T: Real>(e: &Ensemble<T>, cost: &CostField<T>, gains: &TrackingGains<T>) -> Vec<T> {
    let b2 = gains.beta2.eval(e.time);
    let mut y = gradients(e, cost);
    let aux = e.aux.as_deref().expect("tracking ensemble has aux");
    y.par_iter_mut().zip(aux.par_iter()).for_each(|(v, &a)| *v = a + b2 * *v);
    y
}

/// Converts a transformed ensemble (aux = ỹ) to direct form (aux = y).
pub fn to_direct_form<T: Real>(e: &Ensemble<T>, cost: &CostField<T>, gains: &TrackingGains<T>) -> Ensemble<T> {
    let mut out = e.clone();
    out.aux = Some(tracking_output(e, cost, gains));
    out
}

/// Converts a direct-form ensemble (aux = y) to transformed form (aux = ỹ).
pub fn from_direct_form<T: Real>(e: &Ensemble<T>, cost: &CostField<T>, gains: &TrackingGains<T>) -> Ensemble<T> {
    let b2 = gains.beta2.eval(e.time);
    let g = gradients(e, cost);
    let mut out = e.clone();
    if let Some(aux) = out.aux.as_mut() {
        aux.iter_mut().zip(&g).for_each(|(a, &gi)| *a = *a - b2 * gi);
    }
    out
}

/// One Euler–Maruyama step of the general system
/// `dz = [c₁ ∫A(z̄_q − z) + c₂ ∫A(f̄_q − f(z)) + c₃ g(z) + c₄ ξ]dt + c₅ Σ dw`.
pub fn step_general<T: Real>(
    e: &mut Ensemble<T>,
    disc: &DiscretizedGraphon<T>,
    spec: &GeneralSystemSpec<T>,
    seed: u64,
    h: T,
) -> Result<()> {
    check_shape(e, disc, spec.dim())?;
    let (nn, rr, n) = (e.n_nodes, e.n_replicas, e.dim);
    let rn = rr * n;
    let t = e.time;
    let c: Vec<T> = spec.gains.c.iter().map(|g| g.eval(t)).collect();
    let wz = disc.weighted_sums(&node_means(e), n);
    let use_f = !spec.f.is_zero();
    let f_vals = if use_f {
        let mut f = vec![T::zero(); e.states.len()];
        f.par_chunks_mut(n).zip(e.states.par_chunks(n)).for_each(|(o, z)| spec.f.apply(z, o));
        f
    } else {
        Vec::new()
    };
    let wf = if use_f { disc.weighted_sums(&replica_means(&f_vals, nn, rr, n), n) } else { vec![T::zero(); nn * n] };
    let noisy = !spec.sigma.is_zero();
    let noise_scale = c[4] * h.sqrt();
    let (step, degrees) = (e.step, disc.degrees());
    let drive = e.drive.as_mut().ok_or_else(|| invalid("general ensemble lacks drive"))?;
    e.states.par_chunks_mut(rn).zip(drive.par_chunks_mut(rn)).enumerate().for_each(|(i, (zi, xii))| {
        let d = degrees[i];
        let (wz, wf) = (&wz[i * n..(i + 1) * n], &wf[i * n..(i + 1) * n]);
        let mut rng = stream(seed, step, i as u64, Channel::Diffusion);
        let (mut gv, mut w, mut sw) = (vec![T::zero(); n], vec![T::zero(); n], vec![T::zero(); n]);
        for (r, (z, xi)) in zi.chunks_mut(n).zip(xii.chunks(n)).enumerate() {
            spec.g.apply(z, &mut gv);
            if noisy {
                rng.fill_normal(&mut w);
                spec.sigma.mul_vec_into(&w, &mut sw);
            }
            for k in 0..n {
                let fz = if use_f { f_vals[(i * rr + r) * n + k] } else { T::zero() };
                let drift = c[0] * (wz[k] - d * z[k]) + c[1] * (wf[k] - d * fz) + c[2] * gv[k] + c[3] * xi[k];
                z[k] = z[k] + h * drift + noise_scale * sw[k];
            }
        }
        advance_drive(xii, &spec.xi, h, seed, step, i);
    });
    e.advance(h)
}
