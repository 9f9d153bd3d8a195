//! Consensus, variance and optimality functionals of ensemble snapshots,
//! and the explicit consensus bound for the SGD flow.

use std::io::{self, Write};

use crate::costs::CostConstants;
use crate::error::{invalid, Error, Result};
use crate::gains::SgdGains;
use crate::scalar::{dist2, norm2, pairwise_sum, Real};

/// Replica statistics of one ensemble at one time. Per-node arrays are
/// node-major; vector quantities have `dim` entries per node.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot<T> {
    pub time: T,
    pub n_nodes: usize,
    pub n_replicas: usize,
    pub dim: usize,
    /// Replica means `m_i`.
    pub means: Vec<T>,
    /// `(1/R) Σ_r ‖x_r − m_i‖²` per node.
    pub variances: Vec<T>,
    /// `(1/R) Σ_r ‖x_r‖²` per node.
    pub second_moments: Vec<T>,
    /// Replica means of ỹ (tracking).
    pub aux_means: Option<Vec<T>>,
    /// `(1/R) Σ_r ‖y_r‖²` per node (tracking).
    pub output_second_moments: Option<Vec<T>>,
}

fn node_stats<T: Real>(values: &[T], n_nodes: usize, n_replicas: usize, dim: usize) -> (Vec<T>, Vec<T>, Vec<T>) {
    let inv_r = T::one() / T::from_usize_lossy(n_replicas);
    let mut means = vec![T::zero(); n_nodes * dim];
    let mut var = vec![T::zero(); n_nodes];
    let mut second = vec![T::zero(); n_nodes];
    for i in 0..n_nodes {
        let block = &values[i * n_replicas * dim..(i + 1) * n_replicas * dim];
        let m = &mut means[i * dim..(i + 1) * dim];
        for x in block.chunks(dim) {
            m.iter_mut().zip(x).for_each(|(a, &b)| *a = *a + b);
        }
        m.iter_mut().for_each(|a| *a = *a * inv_r);
        let (mut v, mut s) = (T::zero(), T::zero());
        for x in block.chunks(dim) {
            v = v + dist2(x, m);
            s = s + norm2(x);
        }
        var[i] = v * inv_r;
        second[i] = s * inv_r;
    }
    (means, var, second)
}

impl<T: Real> Snapshot<T> {
    pub fn from_states(time: T, states: &[T], n_nodes: usize, n_replicas: usize, dim: usize) -> Self {
        assert_eq!(states.len(), n_nodes * n_replicas * dim, "state array size");
        let (means, variances, second_moments) = node_stats(states, n_nodes, n_replicas, dim);
        Snapshot {
            time,
            n_nodes,
            n_replicas,
            dim,
            means,
            variances,
            second_moments,
            aux_means: None,
            output_second_moments: None,
        }
    }

    /// Adds tracking statistics from ỹ (`aux`) and the output `y`.
    pub fn with_tracking(mut self, aux: &[T], y: &[T]) -> Self {
        let (aux_means, _, _) = node_stats(aux, self.n_nodes, self.n_replicas, self.dim);
        let (_, _, y2) = node_stats(y, self.n_nodes, self.n_replicas, self.dim);
        self.aux_means = Some(aux_means);
        self.output_second_moments = Some(y2);
        self
    }

    fn node_mean(&self, i: usize) -> &[T] {
        &self.means[i * self.dim..(i + 1) * self.dim]
    }

    /// Grid mean `R₁ = (1/N) Σ_i m_i`.
    pub fn grid_mean(&self) -> Vec<T> {
        let inv_n = T::one() / T::from_usize_lossy(self.n_nodes);
        (0..self.dim)
            .map(|k| {
                let col: Vec<T> = (0..self.n_nodes).map(|i| self.means[i * self.dim + k]).collect();
                pairwise_sum(&col) * inv_n
            })
            .collect()
    }

    fn deviations(&self) -> Vec<T> {
        let r1 = self.grid_mean();
        (0..self.n_nodes).map(|i| dist2(self.node_mean(i), &r1)).collect()
    }

    /// `(1/N) Σ_i ‖m_i − R₁‖²`.
    pub fn consensus_l2(&self) -> T {
        pairwise_sum(&self.deviations()) / T::from_usize_lossy(self.n_nodes)
    }

    /// `max_i ‖m_i − R₁‖²`.
    pub fn consensus_linf(&self) -> T {
        self.deviations().into_iter().fold(T::zero(), T::max)
    }

    /// Largest unbiased replica variance over nodes (trace form).
    pub fn variance_sup(&self) -> Result<T> {
        if self.n_replicas < 2 {
            return Err(Error::InsufficientReplicas(self.n_replicas));
        }
        let r = T::from_usize_lossy(self.n_replicas);
        let bessel = r / (r - T::one());
        Ok(self.variances.iter().copied().fold(T::zero(), T::max) * bessel)
    }

    /// `(L, node_mse_sup)`: `L = ‖R₁ − x*‖²` and
    /// `node_mse_sup = max_i [var_i + ‖m_i − x*‖²]`.
    pub fn minimizer_errors(&self, x_star: &[T]) -> (T, T) {
        assert_eq!(x_star.len(), self.dim);
        let l = dist2(&self.grid_mean(), x_star);
        let mse = (0..self.n_nodes)
            .map(|i| self.variances[i] + dist2(self.node_mean(i), x_star))
            .fold(T::zero(), T::max);
        (l, mse)
    }

    /// `max_i Ê‖y_i‖²` (tracking output against the zero gradient target).
    pub fn tracking_error(&self) -> Result<T> {
        self.output_second_moments
            .as_ref()
            .map(|y2| y2.iter().copied().fold(T::zero(), T::max))
            .ok_or_else(|| Error::UnsupportedMode("tracking error needs a tracking snapshot".into()))
    }

    /// `Y(t) = (1/N) Σ_i Ê‖x_i‖²`.
    pub fn second_moment_int(&self) -> T {
        pairwise_sum(&self.second_moments) / T::from_usize_lossy(self.n_nodes)
    }

    /// `max_i Ê‖x_i‖²`.
    pub fn second_moment_sup(&self) -> T {
        self.second_moments.iter().copied().fold(T::zero(), T::max)
    }

    /// `(1/N) Σ_i ‖E ỹ_i‖²` (tracking).
    pub fn aux_mean_energy(&self) -> Option<T> {
        self.aux_means.as_ref().map(|a| {
            let e: Vec<T> = a.chunks(self.dim).map(norm2).collect();
            pairwise_sum(&e) / T::from_usize_lossy(self.n_nodes)
        })
    }

    /// `(1/N) Σ_i var_i` with the unbiased replica variance.
    pub fn dispersion_int(&self) -> Result<T> {
        if self.n_replicas < 2 {
            return Err(Error::InsufficientReplicas(self.n_replicas));
        }
        let r = T::from_usize_lossy(self.n_replicas);
        Ok(pairwise_sum(&self.variances) / T::from_usize_lossy(self.n_nodes) * r / (r - T::one()))
    }

    /// `max(consensus_l2, aux_mean_energy)` (tracking).
    pub fn tracking_lyapunov(&self) -> Option<T> {
        self.aux_mean_energy().map(|e| e.max(self.consensus_l2()))
    }

    /// Monte Carlo half-width `5 σ̂ / √R` for a node mean, with `σ̂` the
    /// largest unbiased per-node standard deviation.
    pub fn mean_band(&self) -> T {
        match self.variance_sup() {
            Ok(v) => T::lit(5.0) * (v / T::from_usize_lossy(self.n_replicas)).sqrt(),
            Err(_) => T::infinity(),
        }
    }
}

/// Half-width for a squared deviation `‖m − c‖²` estimated with both `m`
/// and `c` perturbed by at most `eps`: `4 eps √v + 4 eps²`.
pub fn squared_deviation_band<T: Real>(value: T, eps: T) -> T {
    let four = T::lit(4.0);
    four * eps * value.max(T::zero()).sqrt() + four * eps * eps
}

/// Right side of the consensus bound for the SGD flow,
/// `Ψ₀(0,t)ζ + ∫₀ᵗ 8(σ_v K₀ + C_v √K₀) α₂(s) Ψ₀(s,t) ds` with
/// `Ψ₀(s,t) = exp(−2λ₂ ∫ₛᵗ α₁)`.
pub fn bound12<T: Real>(
    t: T,
    lambda2: T,
    gains: &SgdGains<T>,
    k0: T,
    constants: &CostConstants<T>,
    zeta: T,
) -> Result<T> {
    bound12_with(
        t,
        lambda2,
        |s, t| gains.alpha1.integral(s, t),
        |s| gains.alpha2.eval(s),
        k0,
        constants,
        zeta,
    )
}

/// [`bound12`] with arbitrary `∫ₛᵗ α₁` and `α₂`.
pub fn bound12_with<T: Real>(
    t: T,
    lambda2: T,
    int_alpha1: impl Fn(T, T) -> T,
    alpha2: impl Fn(T) -> T,
    k0: T,
    constants: &CostConstants<T>,
    zeta: T,
) -> Result<T> {
    if !(lambda2 > T::zero()) {
        return Err(Error::DegenerateConnectivity(lambda2.as_f64()));
    }
    if !(t >= T::zero() && k0 >= T::zero() && zeta >= T::zero()) {
        return Err(invalid("bound12 needs t, K₀, ζ ≥ 0"));
    }
    let two_l = lambda2 + lambda2;
    let psi = |s: T| (-two_l * int_alpha1(s, t)).exp();
    let coef = T::lit(8.0) * (constants.sigma_v * k0 + constants.c_v * k0.sqrt());
    let head = psi(T::zero()) * zeta;
    if t == T::zero() || coef == T::zero() {
        return Ok(head);
    }
    let integral = adaptive_simpson(|s| alpha2(s) * psi(s), T::zero(), t, T::lit(1e-8).max(T::epsilon() * T::lit(64.0)));
    Ok(head + coef * integral)
}

/// Adaptive Simpson quadrature to relative tolerance `rel` (after an
/// initial split into 32 panels).
pub fn adaptive_simpson<T: Real>(f: impl Fn(T) -> T, a: T, b: T, rel: T) -> T {
    fn simpson<T: Real>(fa: T, fm: T, fb: T, w: T) -> T {
        w / T::lit(6.0) * (fa + T::lit(4.0) * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn refine<T: Real>(f: &impl Fn(T) -> T, a: T, b: T, fa: T, fm: T, fb: T, whole: T, tol: T, depth: u32) -> T {
        let m = (a + b) / T::lit(2.0);
        let (lm, rm) = ((a + m) / T::lit(2.0), (m + b) / T::lit(2.0));
        let (flm, frm) = (f(lm), f(rm));
        let left = simpson(fa, flm, fm, m - a);
        let right = simpson(fm, frm, fb, b - m);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= T::lit(15.0) * tol {
            return left + right + delta / T::lit(15.0);
        }
        let half = tol / T::lit(2.0);
        refine(f, a, m, fa, flm, fm, left, half, depth - 1) + refine(f, m, b, fm, frm, fb, right, half, depth - 1)
    }
    let panels = 32usize;
    let w = (b - a) / T::from_usize_lossy(panels);
    let edges: Vec<T> = (0..=panels).map(|k| a + w * T::from_usize_lossy(k)).collect();
    let coarse: Vec<(T, T, T, T)> = edges
        .windows(2)
        .map(|e| {
            let m = (e[0] + e[1]) / T::lit(2.0);
            let (fa, fm, fb) = (f(e[0]), f(m), f(e[1]));
            (fa, fm, fb, simpson(fa, fm, fb, e[1] - e[0]))
        })
        .collect();
    let scale = coarse.iter().map(|c| c.3.abs()).sum::<T>().max(T::min_positive_value());
    let tol = rel * scale / T::from_usize_lossy(panels);
    edges
        .windows(2)
        .zip(&coarse)
        .map(|(e, &(fa, fm, fb, whole))| refine(&f, e[0], e[1], fa, fm, fb, whole, tol, 40))
        .sum()
}

/// One row of the metrics table. `None` fields are written empty.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricRow<T> {
    pub t: T,
    pub consensus_l2: T,
    pub consensus_linf: T,
    pub variance_sup: Option<T>,
    pub minimizer_err: Option<T>,
    pub node_mse_sup: Option<T>,
    pub tracking_err: Option<T>,
    pub bound12: Option<T>,
    pub second_moment_int: T,
}

impl<T: Real> MetricRow<T> {
    /// Row for `snap`; minimizer errors need `x_star`. The bound is filled
    /// in separately because it depends on the whole run.
    pub fn from_snapshot(snap: &Snapshot<T>, x_star: Option<&[T]>) -> Self {
        let (l, mse) = match x_star {
            Some(x) => {
                let (l, m) = snap.minimizer_errors(x);
                (Some(l), Some(m))
            }
            None => (None, None),
        };
        MetricRow {
            t: snap.time,
            consensus_l2: snap.consensus_l2(),
            consensus_linf: snap.consensus_linf(),
            variance_sup: snap.variance_sup().ok(),
            minimizer_err: l,
            node_mse_sup: mse,
            tracking_err: snap.tracking_error().ok(),
            bound12: None,
            second_moment_int: snap.second_moment_int(),
        }
    }

    fn fields(&self) -> [Option<T>; 9] {
        [
            Some(self.t),
            Some(self.consensus_l2),
            Some(self.consensus_linf),
            self.variance_sup,
            self.minimizer_err,
            self.node_mse_sup,
            self.tracking_err,
            self.bound12,
            Some(self.second_moment_int),
        ]
    }
}

pub const CSV_HEADER: &str = "t,consensus_l2,consensus_linf,variance_sup,L,node_mse_sup,tracking_err,bound12,second_moment_int";

/// Shortest decimal string that parses back to the same `f64`.
pub fn format_number(v: f64) -> String {
    format!("{v:?}")
}

pub fn write_csv<T: Real, W: Write>(rows: &[MetricRow<T>], mut out: W) -> io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for row in rows {
        let line: Vec<String> =
            row.fields().iter().map(|f| f.map(|v| format_number(v.as_f64())).unwrap_or_default()).collect();
        writeln!(out, "{}", line.join(","))?;
    }
    Ok(())
}

/// Fills `bound12` on every row from the run's measured `ζ` (initial sup
/// second moment) and `K₀` (largest sup second moment, plus 5%).
pub fn attach_bound12<T: Real>(
    rows: &mut [MetricRow<T>],
    snapshots: &[Snapshot<T>],
    lambda2: T,
    gains: &SgdGains<T>,
    constants: &CostConstants<T>,
) -> Result<(T, T)> {
    let first = snapshots.first().ok_or_else(|| invalid("no snapshots"))?;
    let zeta = first.second_moment_sup();
    let k0 = snapshots.iter().map(Snapshot::second_moment_sup).fold(T::zero(), T::max) * T::lit(1.05);
    for (row, snap) in rows.iter_mut().zip(snapshots) {
        row.bound12 = Some(bound12(snap.time, lambda2, gains, k0, constants, zeta)?);
    }
    Ok((zeta, k0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn scalar_snapshot(values: &[f64], n_nodes: usize, n_replicas: usize) -> Snapshot<f64> {
        Snapshot::from_states(0.0, values, n_nodes, n_replicas, 1)
    }

    #[test]
    fn consensus_examples() {
        let s = scalar_snapshot(&[1.0, 1.0, 1.0], 3, 1);
        assert_eq!(s.consensus_l2(), 0.0);
        assert_eq!(s.consensus_linf(), 0.0);
        let s = scalar_snapshot(&[0.0, 2.0], 2, 1);
        assert_eq!(s.consensus_l2(), 1.0);
        assert_eq!(s.consensus_linf(), 1.0);
        assert_eq!(s.grid_mean(), vec![1.0]);
    }

    #[test]
    fn variance_examples() {
        let s = scalar_snapshot(&[0.5, 0.5, 0.5], 1, 3);
        assert_eq!(s.variance_sup().unwrap(), 0.0);
        let s = scalar_snapshot(&[-1.0, 1.0], 1, 2);
        assert_eq!(s.variance_sup().unwrap(), 2.0);
        assert!(matches!(scalar_snapshot(&[1.0, 2.0], 2, 1).variance_sup(), Err(Error::InsufficientReplicas(1))));
    }

    #[test]
    fn minimizer_error_examples() {
        let s = scalar_snapshot(&[0.3, 0.3, 0.3, 0.3], 2, 2);
        assert_eq!(s.minimizer_errors(&[0.3]), (0.0, 0.0));
        // mean at x* with biased replica variance 1
        let s = scalar_snapshot(&[-0.7, 1.3, -0.7, 1.3], 2, 2);
        let (l, mse) = s.minimizer_errors(&[0.3]);
        assert!(l.abs() < 1e-30);
        assert_relative_eq!(mse, 1.0, max_relative = 1e-15);
    }

    #[test]
    fn tracking_error_examples() {
        let s = scalar_snapshot(&[0.0, 0.0], 1, 2);
        assert!(s.tracking_error().is_err());
        let s = s.with_tracking(&[0.0, 0.0], &[1.0, 1.0]);
        assert_eq!(s.tracking_error().unwrap(), 1.0);
        let s = scalar_snapshot(&[0.0, 0.0], 2, 1).with_tracking(&[0.0, 0.0], &[0.0, 0.0]);
        assert_eq!(s.tracking_error().unwrap(), 0.0);
    }

    #[test]
    fn csv_uses_empty_fields_and_round_trip_numbers() {
        let row = MetricRow {
            t: 0.1,
            consensus_l2: 1.0 / 3.0,
            consensus_linf: 1e-20,
            variance_sup: None,
            minimizer_err: Some(2.5),
            node_mse_sup: None,
            tracking_err: None,
            bound12: None,
            second_moment_int: 1e300,
        };
        let mut buf = Vec::new();
        write_csv(&[row], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), CSV_HEADER);
        let fields: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(fields.len(), 9);
        assert_eq!(fields[0], "0.1");
        assert_eq!(fields[1].parse::<f64>().unwrap(), 1.0 / 3.0);
        assert_eq!(fields[2].parse::<f64>().unwrap(), 1e-20);
        assert_eq!(fields[3], "");
        assert_eq!(fields[8].parse::<f64>().unwrap(), 1e300);
    }

    fn unit_constants() -> CostConstants<f64> {
        CostConstants { kappa: 1.0, kappa2: 1.0, sigma_v: 1.0, c_v: 0.0 }
    }

    #[test]
    fn bound12_examples() {
        let g = SgdGains::default();
        assert_eq!(bound12(0.0, 0.3, &g, 2.0, &unit_constants(), 1.7).unwrap(), 1.7);
        let b = bound12_with(2.5, 1.0, |s, t| t - s, |_| 0.0, 1.0, &unit_constants(), 1.0).unwrap();
        assert_relative_eq!(b, (-5.0f64).exp(), max_relative = 1e-15);
        assert!(matches!(bound12(1.0, 0.0, &g, 1.0, &unit_constants(), 1.0), Err(Error::DegenerateConnectivity(_))));
    }

    #[test]
    fn bound12_matches_fine_riemann_sum() {
        let g = SgdGains::default();
        let c = CostConstants { kappa: 1.0, kappa2: 1.0, sigma_v: 1.0, c_v: 0.5 };
        let (t, lambda2, k0, zeta) = (20.0, 0.3, 1.2, 1.0);
        let b = bound12(t, lambda2, &g, k0, &c, zeta).unwrap();
        let m = 100_000;
        let ds = t / m as f64;
        let riemann: f64 = (0..m)
            .map(|j| {
                let s = (j as f64 + 0.5) * ds;
                g.alpha2.eval(s) * (-2.0 * lambda2 * g.alpha1.integral(s, t)).exp()
            })
            .sum::<f64>()
            * ds;
        let expect = (-2.0 * lambda2 * g.alpha1.integral(0.0, t)).exp() * zeta
            + 8.0 * (c.sigma_v * k0 + c.c_v * k0.sqrt()) * riemann;
        assert_relative_eq!(b, expect, max_relative = 1e-6);
    }

    #[test]
    fn bound12_is_monotone_in_zeta_and_k0() {
        let g = SgdGains::default();
        let c = CostConstants { kappa: 1.0, kappa2: 1.0, sigma_v: 1.0, c_v: 0.5 };
        let mut prev = 0.0;
        for k0 in [0.1, 0.5, 1.0, 2.0] {
            let b = bound12(5.0, 0.5, &g, k0, &c, 1.0).unwrap();
            assert!(b > prev);
            prev = b;
        }
        let mut prev = 0.0;
        for zeta in [0.1, 0.5, 1.0, 2.0] {
            let b = bound12(5.0, 0.5, &g, 1.0, &c, zeta).unwrap();
            assert!(b > prev);
            prev = b;
        }
    }

    #[test]
    fn adaptive_simpson_integrates_smooth_functions() {
        let v = adaptive_simpson(|x: f64| x.exp(), 0.0, 3.0, 1e-10);
        assert_relative_eq!(v, 3f64.exp() - 1.0, max_relative = 1e-10);
        let v = adaptive_simpson(|x: f64| (-50.0 * (3.0 - x)).exp(), 0.0, 3.0, 1e-10);
        assert_relative_eq!(v, (1.0 - (-150f64).exp()) / 50.0, max_relative = 1e-9);
    }
}
