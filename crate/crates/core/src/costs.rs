//! Local cost fields `V(p, x)` over the node continuum, their derivatives,
//! regularity constants and the minimizer of the aggregate `∫ V(p, x) dp`.

use crate::error::{invalid, Error, Result};
use crate::graphon::midpoint;
use crate::linalg::Matrix;
use crate::scalar::{dist2, norm2, Real};

/// Default number of midpoint nodes for minimizer quadrature.
pub const DEFAULT_MINIMIZER_QUADRATURE: usize = 4096;

/// A scalar closed-form function of the node coordinate `p ∈ [0,1]`.
#[derive(Debug, Clone, PartialEq)]
pub enum Profile<T> {
    Constant(T),
    /// `intercept + slope · p`.
    Affine { intercept: T, slope: T },
    /// Piecewise constant: `values[k]` on `[cuts[k], cuts[k+1])`.
    Blocks { cuts: Vec<T>, values: Vec<T> },
}

impl<T: Real> Profile<T> {
    pub fn constant(v: T) -> Self {
        Profile::Constant(v)
    }

    pub fn affine(intercept: T, slope: T) -> Self {
        Profile::Affine { intercept, slope }
    }

    pub fn blocks(cuts: Vec<T>, values: Vec<T>) -> Result<Self> {
        let k = values.len();
        if k == 0 || cuts.len() != k + 1 {
            return Err(invalid("block profile needs K+1 cuts for K values"));
        }
        if cuts[0] != T::zero() || cuts[k] != T::one() || cuts.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(invalid("block profile cuts must increase strictly from 0 to 1"));
        }
        Ok(Profile::Blocks { cuts, values })
    }

    pub fn eval(&self, p: T) -> T {
        match self {
            Profile::Constant(v) => *v,
            Profile::Affine { intercept, slope } => *intercept + *slope * p,
            Profile::Blocks { cuts, values } => {
                let k = values.len();
                let b = (0..k).find(|&b| p < cuts[b + 1]).unwrap_or(k - 1);
                values[b]
            }
        }
    }

    fn extreme_values(&self) -> Vec<T> {
        match self {
            Profile::Constant(v) => vec![*v],
            Profile::Affine { intercept, slope } => vec![*intercept, *intercept + *slope],
            Profile::Blocks { values, .. } => values.clone(),
        }
    }

    pub fn inf(&self) -> T {
        self.extreme_values().into_iter().fold(T::infinity(), T::min)
    }

    pub fn sup(&self) -> T {
        self.extreme_values().into_iter().fold(T::neg_infinity(), T::max)
    }

    pub fn sup_abs(&self) -> T {
        self.sup().abs().max(self.inf().abs())
    }

    fn breakpoints(&self) -> Vec<T> {
        match self {
            Profile::Blocks { cuts, .. } => cuts.clone(),
            _ => vec![T::zero(), T::one()],
        }
    }

    fn is_finite(&self) -> bool {
        self.extreme_values().iter().all(|v| v.is_finite())
    }
}

/// Exact `∫₀¹ f(p) g(p) dp` for piecewise-affine profiles: two-point
/// Gauss–Legendre on every piece of the merged partition.
pub fn integrate_product<T: Real>(f: &Profile<T>, g: &Profile<T>) -> T {
    let mut cuts = f.breakpoints();
    cuts.extend(g.breakpoints());
    cuts.sort_by(|a, b| a.partial_cmp(b).expect("finite cuts"));
    cuts.dedup();
    let node = T::one() / T::lit(3.0).sqrt();
    let half = T::lit(0.5);
    cuts.windows(2)
        .map(|w| {
            let (mid, rad) = ((w[0] + w[1]) * half, (w[1] - w[0]) * half);
            let (a, b) = (mid - rad * node, mid + rad * node);
            rad * (f.eval(a) * g.eval(a) + f.eval(b) * g.eval(b))
        })
        .sum()
}

/// Regularity constants: gradient Lipschitz `kappa`, strong convexity
/// `kappa2`, and linear growth `‖∇V(p,x)‖ ≤ sigma_v ‖x‖ + c_v`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostConstants<T> {
    pub kappa: T,
    pub kappa2: T,
    pub sigma_v: T,
    pub c_v: T,
}

impl<T: Real> CostConstants<T> {
    pub fn validate(&self) -> Result<()> {
        let ok = self.kappa2 > T::zero()
            && self.kappa2 <= self.kappa
            && self.sigma_v >= self.kappa2
            && self.c_v >= T::zero();
        if ok {
            Ok(())
        } else {
            Err(invalid(format!("inconsistent cost constants {self:?}")))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CostField<T> {
    /// `V(p,x) = q(p)/2 · ‖x − θ(p)‖²`.
    Quadratic { weight: Profile<T>, target: Vec<Profile<T>> },
    /// `V(p,x) = κ₂/2 · ‖x‖² + Σ_k log cosh(x_k − θ_k(p))`.
    RegularizedSmooth { kappa2: T, shift: Vec<Profile<T>> },
}

fn log_cosh<T: Real>(x: T) -> T {
    let a = x.abs();
    a + (-(a + a)).exp().ln_1p() - T::LN_2()
}

fn sup_norm<T: Real>(profiles: &[Profile<T>]) -> T {
    // bound on sup_p ‖θ(p)‖ from componentwise suprema (exact when n = 1)
    profiles.iter().map(|p| p.sup_abs() * p.sup_abs()).sum::<T>().sqrt()
}

impl<T: Real> CostField<T> {
    pub fn quadratic(weight: Profile<T>, target: Vec<Profile<T>>) -> Result<Self> {
        if target.is_empty() {
            return Err(invalid("cost dimension must be at least 1"));
        }
        if !weight.is_finite() || target.iter().any(|t| !t.is_finite()) {
            return Err(invalid("cost profiles must be finite"));
        }
        if !(weight.inf() > T::zero()) {
            return Err(invalid(format!("quadratic weight must be bounded below by a positive constant (inf = {})", weight.inf())));
        }
        Ok(CostField::Quadratic { weight, target })
    }

    pub fn regularized_smooth(kappa2: T, shift: Vec<Profile<T>>) -> Result<Self> {
        if shift.is_empty() {
            return Err(invalid("cost dimension must be at least 1"));
        }
        if !(kappa2 > T::zero() && kappa2.is_finite()) {
            return Err(invalid(format!("kappa2 must be positive, got {kappa2}")));
        }
        if shift.iter().any(|t| !t.is_finite()) {
            return Err(invalid("cost profiles must be finite"));
        }
        Ok(CostField::RegularizedSmooth { kappa2, shift })
    }

    pub fn dim(&self) -> usize {
        match self {
            CostField::Quadratic { target, .. } => target.len(),
            CostField::RegularizedSmooth { shift, .. } => shift.len(),
        }
    }

    pub fn is_quadratic(&self) -> bool {
        matches!(self, CostField::Quadratic { .. })
    }

    /// Per-node target (quadratic) or shift (regularized) θ(p).
    pub fn center(&self, p: T) -> Vec<T> {
        let profiles = match self {
            CostField::Quadratic { target, .. } => target,
            CostField::RegularizedSmooth { shift, .. } => shift,
        };
        profiles.iter().map(|f| f.eval(p)).collect()
    }

    pub fn value(&self, p: T, x: &[T]) -> T {
        debug_assert_eq!(x.len(), self.dim());
        match self {
            CostField::Quadratic { weight, target } => {
                let d2 = x.iter().zip(target).map(|(&xi, t)| (xi - t.eval(p)) * (xi - t.eval(p))).sum::<T>();
                weight.eval(p) * d2 / T::lit(2.0)
            }
            CostField::RegularizedSmooth { kappa2, shift } => {
                *kappa2 * norm2(x) / T::lit(2.0)
                    + x.iter().zip(shift).map(|(&xi, s)| log_cosh(xi - s.eval(p))).sum::<T>()
            }
        }
    }

    /// Writes `∇ₓV(p, x)` into `out`.
    pub fn grad_into(&self, p: T, x: &[T], out: &mut [T]) {
        match self {
            CostField::Quadratic { weight, target } => {
                let q = weight.eval(p);
                for ((o, &xi), t) in out.iter_mut().zip(x).zip(target) {
                    *o = q * (xi - t.eval(p));
                }
            }
            CostField::RegularizedSmooth { kappa2, shift } => {
                for ((o, &xi), s) in out.iter_mut().zip(x).zip(shift) {
                    *o = *kappa2 * xi + (xi - s.eval(p)).tanh();
                }
            }
        }
    }

    pub fn grad(&self, p: T, x: &[T]) -> Vec<T> {
        let mut g = vec![T::zero(); self.dim()];
        self.grad_into(p, x, &mut g);
        g
    }

    pub fn hessian(&self, p: T, x: &[T]) -> Matrix<T> {
        let n = self.dim();
        match self {
            CostField::Quadratic { weight, .. } => Matrix::scaled_identity(n, weight.eval(p)),
            CostField::RegularizedSmooth { kappa2, shift } => {
                let mut h = Matrix::zeros(n, n);
                for k in 0..n {
                    let c = (x[k] - shift[k].eval(p)).cosh();
                    h[(k, k)] = *kappa2 + T::one() / (c * c);
                }
                h
            }
        }
    }

    pub fn constants(&self) -> CostConstants<T> {
        match self {
            CostField::Quadratic { weight, target } => {
                let (q_min, q_max) = (weight.inf(), weight.sup());
                CostConstants { kappa: q_max, kappa2: q_min, sigma_v: q_max, c_v: q_max * sup_norm(target) }
            }
            CostField::RegularizedSmooth { kappa2, shift } => CostConstants {
                kappa: *kappa2 + T::one(),
                kappa2: *kappa2,
                sigma_v: *kappa2 + T::one(),
                c_v: sup_norm(shift),
            },
        }
    }

    /// Minimizer of the midpoint-quadrature aggregate `(1/M) Σ_j V(p_j, x)`.
    /// Quadratic fields use the weighted-mean closed form; regularized fields
    /// solve the (componentwise separable) aggregated gradient equation by
    /// safeguarded Newton.
    pub fn global_minimizer(&self, n_quad: usize) -> Result<Vec<T>> {
        if n_quad == 0 {
            return Err(invalid("n_quad must be at least 1"));
        }
        let nodes: Vec<T> = (0..n_quad).map(|j| midpoint(j, n_quad)).collect();
        match self {
            CostField::Quadratic { weight, target } => {
                let q: Vec<T> = nodes.iter().map(|&p| weight.eval(p)).collect();
                let total: T = q.iter().copied().sum();
                Ok(target
                    .iter()
                    .map(|t| nodes.iter().zip(&q).map(|(&p, &w)| w * t.eval(p)).sum::<T>() / total)
                    .collect())
            }
            CostField::RegularizedSmooth { kappa2, shift } => shift
                .iter()
                .map(|s| {
                    let centres: Vec<T> = nodes.iter().map(|&p| s.eval(p)).collect();
                    solve_component(*kappa2, &centres)
                })
                .collect(),
        }
    }

    /// Exact minimizer `∫ q θ / ∫ q` of a quadratic field.
    pub fn global_minimizer_exact(&self) -> Result<Vec<T>> {
        match self {
            CostField::Quadratic { weight, target } => {
                let one = Profile::Constant(T::one());
                let total = integrate_product(weight, &one);
                Ok(target.iter().map(|t| integrate_product(weight, t) / total).collect())
            }
            CostField::RegularizedSmooth { .. } => {
                Err(Error::UnsupportedMode("closed-form minimizer exists for quadratic fields only".into()))
            }
        }
    }
}

/// Root of `κ₂ x + mean_j tanh(x − c_j)`, which is increasing with slope
/// at least κ₂ and has its root in `[min c − 1/κ₂, max c + 1/κ₂]`.
fn solve_component<T: Real>(kappa2: T, centres: &[T]) -> Result<T> {
    let m = T::from_usize_lossy(centres.len());
    let g = |x: T| -> (T, T) {
        let (mut s, mut ds) = (T::zero(), T::zero());
        for &c in centres {
            let t = (x - c).tanh();
            s = s + t;
            ds = ds + (T::one() - t * t);
        }
        (kappa2 * x + s / m, kappa2 + ds / m)
    };
    let reach = T::one() / kappa2;
    let mut lo = -reach;
    let mut hi = reach;
    let tol = T::lit(1e-13).max(T::epsilon() * T::lit(8.0));
    let mut x = T::zero();
    let mut last = T::infinity();
    for _ in 0..200 {
        let (gx, dg) = g(x);
        last = gx.abs();
        if last <= tol {
            return Ok(x);
        }
        if gx > T::zero() {
            hi = x;
        } else {
            lo = x;
        }
        let newton = x - gx / dg;
        x = if newton > lo && newton < hi { newton } else { (lo + hi) / T::lit(2.0) };
        if hi - lo <= T::epsilon() * (T::one() + x.abs()) {
            return Ok(x);
        }
    }
    Err(Error::NonConvergence { what: "aggregated gradient root", residual: last.as_f64() })
}

/// Residual `‖(1/N) Σ_i ∇V(p_i, x)‖` of the aggregated gradient on the
/// `n`-node midpoint grid.
pub fn aggregated_gradient_norm<T: Real>(cost: &CostField<T>, x: &[T], n: usize) -> T {
    let mut acc = vec![T::zero(); cost.dim()];
    let mut g = vec![T::zero(); cost.dim()];
    for i in 0..n {
        cost.grad_into(midpoint(i, n), x, &mut g);
        acc.iter_mut().zip(&g).for_each(|(a, &gi)| *a = *a + gi);
    }
    norm2(&acc).sqrt() / T::from_usize_lossy(n)
}

/// Distance helper used by metrics and tests.
pub fn squared_distance<T: Real>(a: &[T], b: &[T]) -> T {
    dist2(a, b)
}
