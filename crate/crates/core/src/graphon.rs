//! Graphon kernels, their midpoint discretization, degrees and the algebraic
//! connectivity of the graphon Laplacian
//! `(𝕃 z)(p) = ∫ A(p,q) (z(p) − z(q)) dq`.

use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::linalg::{dense_min_eigenvalue, lanczos_smallest, Matrix};
use crate::scalar::{dot, norm2, Real};

/// Residual tolerance of the iterative λ₂ solve.
pub const LAMBDA2_RESIDUAL_TOL: f64 = 1e-10;
/// Largest grid on which the dense eigensolve is used as a fallback.
pub const DENSE_FALLBACK_MAX_N: usize = 512;
/// Default threshold for declaring a graphon connected.
pub const DEFAULT_CONNECTIVITY_TOL: f64 = 1e-8;

const SYMMETRY_CHECK_GRID: usize = 32;

/// Closed-form kernels available through [`GraphonKernel::custom`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CustomKind {
    /// `exp(−r |p − q|)`, params `[r]`, `r ≥ 0`.
    ExpDecay,
    /// `exp(−(p − q)² / (2 w²))`, params `[w]`, `w > 0`.
    Gaussian,
    /// `1 − max(p, q)`, no params.
    OneMinusMax,
    /// `p^a q^b`, params `[a, b]`; symmetric only when `a = b`.
    Power,
}

impl CustomKind {
    pub fn name(self) -> &'static str {
        match self {
            CustomKind::ExpDecay => "exp_decay",
            CustomKind::Gaussian => "gaussian",
            CustomKind::OneMinusMax => "one_minus_max",
            CustomKind::Power => "power",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        [Self::ExpDecay, Self::Gaussian, Self::OneMinusMax, Self::Power]
            .into_iter()
            .find(|k| k.name() == name)
    }

    fn arity(self) -> usize {
        match self {
            CustomKind::ExpDecay | CustomKind::Gaussian => 1,
            CustomKind::OneMinusMax => 0,
            CustomKind::Power => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CustomKernel<T> {
    kind: CustomKind,
    params: Vec<T>,
}

impl<T: Real> CustomKernel<T> {
    pub fn kind(&self) -> CustomKind {
        self.kind
    }

    pub fn params(&self) -> &[T] {
        &self.params
    }

    fn eval(&self, p: T, q: T) -> T {
        match self.kind {
            CustomKind::ExpDecay => (-self.params[0] * (p - q).abs()).exp(),
            CustomKind::Gaussian => {
                let w = self.params[0];
                (-(p - q) * (p - q) / (T::lit(2.0) * w * w)).exp()
            }
            CustomKind::OneMinusMax => T::one() - p.max(q),
            CustomKind::Power => p.powf(self.params[0]) * q.powf(self.params[1]),
        }
    }
}

/// Stochastic block model: piecewise-constant kernel on a partition of [0,1].
#[derive(Debug, Clone, PartialEq)]
pub struct BlockModel<T> {
    cuts: Vec<T>,
    weights: Matrix<T>,
}

impl<T: Real> BlockModel<T> {
    pub fn cuts(&self) -> &[T] {
        &self.cuts
    }

    pub fn weights(&self) -> &Matrix<T> {
        &self.weights
    }

    pub fn n_blocks(&self) -> usize {
        self.weights.rows()
    }

    /// Index of the block containing `p`; the right end point belongs to the
    /// last block.
    pub fn block_of(&self, p: T) -> usize {
        let k = self.n_blocks();
        (0..k).find(|&b| p < self.cuts[b + 1]).unwrap_or(k - 1)
    }
}

/// Symmetric measurable kernel `A : [0,1]² → [0,1]`.
#[derive(Debug, Clone, PartialEq)]
pub enum GraphonKernel<T> {
    Constant { c: T },
    BlockModel(BlockModel<T>),
    /// `A(p,q) = min(p,q)`.
    Min,
    /// `A(p,q) = p q`.
    Product,
    Custom(CustomKernel<T>),
}

fn check_unit<T: Real>(x: T) -> Result<()> {
    if x >= T::zero() && x <= T::one() {
        Ok(())
    } else {
        Err(Error::Domain { value: x.as_f64() })
    }
}

impl<T: Real> GraphonKernel<T> {
    pub fn constant(c: T) -> Result<Self> {
        if !(c >= T::zero() && c <= T::one()) {
            return Err(invalid(format!("constant kernel weight {c} outside [0, 1]")));
        }
        Ok(Self::Constant { c })
    }

    pub fn block_model(cuts: Vec<T>, weights: Vec<Vec<T>>) -> Result<Self> {
        let k = weights.len();
        if k == 0 || cuts.len() != k + 1 {
            return Err(invalid(format!(
                "block model needs K+1 cuts for K blocks (got {} cuts, {} blocks)",
                cuts.len(),
                k
            )));
        }
        if cuts[0] != T::zero() || cuts[k] != T::one() {
            return Err(invalid("block cuts must start at 0 and end at 1"));
        }
        if cuts.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(invalid("block cuts must be strictly increasing"));
        }
        let weights = Matrix::from_rows(&weights)?;
        if !weights.is_square() {
            return Err(invalid("block weight matrix must be K×K"));
        }
        for i in 0..k {
            for j in 0..k {
                let w = weights[(i, j)];
                if !(w >= T::zero() && w <= T::one()) {
                    return Err(invalid(format!("block weight {w} outside [0, 1]")));
                }
            }
        }
        if !weights.is_symmetric(T::zero()) {
            return Err(invalid("block weight matrix must be symmetric"));
        }
        Ok(Self::BlockModel(BlockModel { cuts, weights }))
    }

    /// Builds a named closed-form kernel. The caller must declare the kernel
    /// symmetric; the declaration is checked on a 32×32 grid together with the
    /// `[0,1]` range.
    pub fn custom(kind: CustomKind, params: Vec<T>, declared_symmetric: bool) -> Result<Self> {
        if !declared_symmetric {
            return Err(invalid(format!("custom kernel '{}' must declare symmetry", kind.name())));
        }
        if params.len() != kind.arity() {
            return Err(invalid(format!(
                "custom kernel '{}' takes {} parameter(s), got {}",
                kind.name(),
                kind.arity(),
                params.len()
            )));
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(invalid("custom kernel parameters must be finite"));
        }
        match kind {
            CustomKind::ExpDecay if params[0] < T::zero() => {
                return Err(invalid("exp_decay rate must be nonnegative"))
            }
            CustomKind::Gaussian if params[0] <= T::zero() => {
                return Err(invalid("gaussian width must be positive"))
            }
            CustomKind::Power if params.iter().any(|&a| a < T::zero()) => {
                return Err(invalid("power exponents must be nonnegative"))
            }
            _ => {}
        }
        let kernel = CustomKernel { kind, params };
        let m = SYMMETRY_CHECK_GRID;
        let tol = T::epsilon() * T::lit(16.0);
        for i in 0..m {
            let p = midpoint::<T>(i, m);
            for j in 0..m {
                let q = midpoint::<T>(j, m);
                let a = kernel.eval(p, q);
                if !(a >= T::zero() && a <= T::one()) {
                    return Err(invalid(format!("custom kernel value {a} at ({p}, {q}) outside [0, 1]")));
                }
                if (a - kernel.eval(q, p)).abs() > tol {
                    return Err(invalid(format!(
                        "custom kernel '{}' declared symmetric but A({p}, {q}) != A({q}, {p})",
                        kind.name()
                    )));
                }
            }
        }
        Ok(Self::Custom(kernel))
    }

    /// `A(p, q)` without domain checks.
    pub fn eval_unchecked(&self, p: T, q: T) -> T {
        match self {
            GraphonKernel::Constant { c } => *c,
            GraphonKernel::BlockModel(b) => b.weights[(b.block_of(p), b.block_of(q))],
            GraphonKernel::Min => p.min(q),
            GraphonKernel::Product => p * q,
            GraphonKernel::Custom(k) => k.eval(p, q),
        }
    }

    pub fn eval(&self, p: T, q: T) -> Result<T> {
        check_unit(p)?;
        check_unit(q)?;
        Ok(self.eval_unchecked(p, q))
    }

    /// Midpoint-rule estimate of `∫₀¹ A(p, q) dq`.
    pub fn degree(&self, p: T, n_quad: usize) -> Result<T> {
        check_unit(p)?;
        if n_quad == 0 {
            return Err(invalid("n_quad must be at least 1"));
        }
        let sum: T = (0..n_quad).map(|j| self.eval_unchecked(p, midpoint(j, n_quad))).sum();
        Ok(sum / T::from_usize_lossy(n_quad))
    }

    pub fn name(&self) -> &'static str {
        match self {
            GraphonKernel::Constant { .. } => "constant",
            GraphonKernel::BlockModel(_) => "block",
            GraphonKernel::Min => "min",
            GraphonKernel::Product => "product",
            GraphonKernel::Custom(k) => k.kind.name(),
        }
    }
}

/// Midpoint node `(i + 1/2) / n`.
pub fn midpoint<T: Real>(i: usize, n: usize) -> T {
    (T::from_usize_lossy(i) + T::lit(0.5)) / T::from_usize_lossy(n)
}

/// Midpoint grid of `n` nodes on [0,1].
pub fn midpoint_grid<T: Real>(n: usize) -> Vec<T> {
    (0..n).map(|i| midpoint(i, n)).collect()
}

/// Aggregation shortcut for kernels with low-rank or blockwise structure.
#[derive(Debug, Clone, PartialEq)]
enum FastPath<T> {
    /// Node-to-block assignment and K×K block weights (also used for the
    /// constant kernel with K = 1).
    Blocks { assign: Vec<usize>, weights: Matrix<T>, n_blocks: usize },
    /// `A(p,q) = p q`.
    RankOne,
    Dense,
}

/// A kernel sampled on the midpoint grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscretizedGraphon<T> {
    kernel: GraphonKernel<T>,
    coords: Vec<T>,
    weights: Matrix<T>,
    degrees: Vec<T>,
    fast: FastPath<T>,
}

impl<T: Real> DiscretizedGraphon<T> {
    pub fn new(kernel: &GraphonKernel<T>, n_grid: usize) -> Result<Self> {
        if n_grid == 0 {
            return Err(invalid("grid size must be positive"));
        }
        let coords = midpoint_grid::<T>(n_grid);
        // upper triangle only; the lower half is mirrored so symmetry is exact
        let upper: Vec<Vec<T>> = (0..n_grid)
            .into_par_iter()
            .map(|i| (i..n_grid).map(|j| kernel.eval_unchecked(coords[i], coords[j])).collect())
            .collect();
        let mut weights = Matrix::zeros(n_grid, n_grid);
        for (i, row) in upper.iter().enumerate() {
            for (offset, &a) in row.iter().enumerate() {
                let j = i + offset;
                weights[(i, j)] = a;
                weights[(j, i)] = a;
            }
        }
        let inv_n = T::one() / T::from_usize_lossy(n_grid);
        let degrees = (0..n_grid)
            .map(|i| weights.row(i).iter().copied().sum::<T>() * inv_n)
            .collect();
        let fast = match kernel {
            GraphonKernel::Constant { c } => FastPath::Blocks {
                assign: vec![0; n_grid],
                weights: Matrix::scaled_identity(1, *c),
                n_blocks: 1,
            },
            GraphonKernel::BlockModel(b) => FastPath::Blocks {
                assign: coords.iter().map(|&p| b.block_of(p)).collect(),
                weights: b.weights.clone(),
                n_blocks: b.n_blocks(),
            },
            GraphonKernel::Product => FastPath::RankOne,
            _ => FastPath::Dense,
        };
        Ok(Self { kernel: kernel.clone(), coords, weights, degrees, fast })
    }

    pub fn kernel(&self) -> &GraphonKernel<T> {
        &self.kernel
    }

    pub fn n_grid(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[T] {
        &self.coords
    }

    pub fn weight_matrix(&self) -> &Matrix<T> {
        &self.weights
    }

    pub fn degrees(&self) -> &[T] {
        &self.degrees
    }

    pub fn min_degree(&self) -> T {
        self.degrees.iter().copied().fold(T::infinity(), T::min)
    }

    pub fn has_fast_path(&self) -> bool {
        !matches!(self.fast, FastPath::Dense)
    }

    /// Kernel-weighted node averages `out_i = (1/N) Σ_j A(p_i, p_j) v_j` for a
    /// field `values` of `dim`-vectors stored node-major.
    pub fn weighted_sums(&self, values: &[T], dim: usize) -> Vec<T> {
        let n = self.n_grid();
        debug_assert_eq!(values.len(), n * dim);
        let inv_n = T::one() / T::from_usize_lossy(n);
        match &self.fast {
            FastPath::Blocks { assign, weights, n_blocks } => {
                let mut block_sums = vec![T::zero(); n_blocks * dim];
                for (j, &b) in assign.iter().enumerate() {
                    for k in 0..dim {
                        block_sums[b * dim + k] = block_sums[b * dim + k] + values[j * dim + k];
                    }
                }
                let mut out = vec![T::zero(); n * dim];
                for (i, &bi) in assign.iter().enumerate() {
                    for b in 0..*n_blocks {
                        let w = weights[(bi, b)];
                        for k in 0..dim {
                            out[i * dim + k] = out[i * dim + k] + w * block_sums[b * dim + k];
                        }
                    }
                    for k in 0..dim {
                        out[i * dim + k] = out[i * dim + k] * inv_n;
                    }
                }
                out
            }
            FastPath::RankOne => {
                let mut moment = vec![T::zero(); dim];
                for (j, &q) in self.coords.iter().enumerate() {
                    for k in 0..dim {
                        moment[k] = moment[k] + q * values[j * dim + k];
                    }
                }
                let mut out = vec![T::zero(); n * dim];
                for (i, &p) in self.coords.iter().enumerate() {
                    for k in 0..dim {
                        out[i * dim + k] = p * moment[k] * inv_n;
                    }
                }
                out
            }
            FastPath::Dense => self.weighted_sums_dense(values, dim),
        }
    }

    /// Reference `O(N²)` evaluation of [`Self::weighted_sums`].
    pub fn weighted_sums_dense(&self, values: &[T], dim: usize) -> Vec<T> {
        let n = self.n_grid();
        let inv_n = T::one() / T::from_usize_lossy(n);
        let mut out = vec![T::zero(); n * dim];
        for i in 0..n {
            let row = self.weights.row(i);
            for (j, &a) in row.iter().enumerate() {
                for k in 0..dim {
                    out[i * dim + k] = out[i * dim + k] + a * values[j * dim + k];
                }
            }
            for k in 0..dim {
                out[i * dim + k] = out[i * dim + k] * inv_n;
            }
        }
        out
    }

    /// Discrete Laplacian `(L z)_i = d_i z_i − (1/N) Σ_j A_ij z_j` (scalar field).
    pub fn laplacian_apply(&self, z: &[T], out: &mut [T]) {
        let sums = self.weighted_sums(z, 1);
        for i in 0..z.len() {
            out[i] = self.degrees[i] * z[i] - sums[i];
        }
    }

    /// Rayleigh quotient `zᵀ L z / zᵀ z` of a scalar grid field.
    pub fn rayleigh_quotient(&self, z: &[T]) -> T {
        let mut lz = vec![T::zero(); z.len()];
        self.laplacian_apply(z, &mut lz);
        dot(z, &lz) / norm2(z)
    }

    /// Dense Laplacian with the constant direction shifted above the spectrum,
    /// so its smallest eigenvalue is λ₂ restricted to the zero-mean subspace.
    fn deflated_dense_laplacian(&self) -> Matrix<T> {
        let n = self.n_grid();
        let inv_n = T::one() / T::from_usize_lossy(n);
        let max_deg = self.degrees.iter().copied().fold(T::zero(), T::max);
        let shift = T::lit(2.0) * max_deg + T::one();
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let lap = if i == j { self.degrees[i] } else { T::zero() } - inv_n * self.weights[(i, j)];
                m[(i, j)] = lap + shift * inv_n;
            }
        }
        m
    }
}

fn start_vector<T: Real>(n: usize) -> Vec<T> {
    // deterministic, generic (non-symmetric under reflection) start
    (0..n)
        .map(|i| {
            let x = (i as f64 + 0.5) / n as f64;
            T::lit((7.3 * x).sin() + 0.37 * (19.1 * x * x).cos() + x)
        })
        .collect()
}

/// λ₂ of the discretized graphon Laplacian: smallest eigenvalue on the
/// zero-mean subspace, by Lanczos with a dense fallback for `N ≤ 512`.
pub fn algebraic_connectivity<T: Real>(disc: &DiscretizedGraphon<T>) -> Result<T> {
    let n = disc.n_grid();
    if n < 2 {
        return Err(invalid("algebraic connectivity needs at least two grid nodes"));
    }
    let ones = vec![T::one() / T::from_usize_lossy(n).sqrt(); n];
    let tol = T::lit(LAMBDA2_RESIDUAL_TOL);
    match lanczos_smallest(n, |x, y| disc.laplacian_apply(x, y), &[ones], &start_vector(n), tol) {
        Ok(pair) => Ok(pair.value),
        Err(err @ Error::NonConvergence { .. }) => {
            if n <= DENSE_FALLBACK_MAX_N {
                algebraic_connectivity_dense(disc)
            } else {
                Err(err)
            }
        }
        Err(e) => Err(e),
    }
}

/// λ₂ by full dense symmetric eigensolve of the deflated Laplacian.
pub fn algebraic_connectivity_dense<T: Real>(disc: &DiscretizedGraphon<T>) -> Result<T> {
    if disc.n_grid() < 2 {
        return Err(invalid("algebraic connectivity needs at least two grid nodes"));
    }
    dense_min_eigenvalue(&disc.deflated_dense_laplacian())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConnectivityReport<T> {
    pub connected: bool,
    pub min_degree: T,
    pub lambda2: T,
}

/// Connectivity certificate: minimum grid degree and λ₂ both above `tol`.
pub fn is_connected<T: Real>(kernel: &GraphonKernel<T>, n_grid: usize, tol: T) -> Result<ConnectivityReport<T>> {
    if n_grid < 2 {
        return Err(invalid("connectivity check needs n_grid >= 2"));
    }
    let disc = DiscretizedGraphon::new(kernel, n_grid)?;
    let lambda2 = algebraic_connectivity(&disc)?;
    let min_degree = disc.min_degree();
    Ok(ConnectivityReport { connected: min_degree > tol && lambda2 > tol, min_degree, lambda2 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn two_block(off: f64, on: f64) -> GraphonKernel<f64> {
        GraphonKernel::block_model(vec![0.0, 0.5, 1.0], vec![vec![on, off], vec![off, on]]).unwrap()
    }

    #[test]
    fn eval_examples() {
        assert_eq!(GraphonKernel::constant(0.5).unwrap().eval(0.1, 0.9).unwrap(), 0.5);
        assert_eq!(GraphonKernel::<f64>::Min.eval(0.3, 0.7).unwrap(), 0.3);
        assert_eq!(two_block(0.2, 1.0).eval(0.25, 0.75).unwrap(), 0.2);
    }

    #[test]
    fn eval_rejects_out_of_domain() {
        let k = GraphonKernel::<f64>::Product;
        assert_eq!(k.eval(1.5, 0.2), Err(Error::Domain { value: 1.5 }));
        assert!(k.eval(0.2, -0.1).is_err());
        assert!(k.degree(2.0, 8).is_err());
    }

    #[test]
    fn degree_examples() {
        assert_abs_diff_eq!(GraphonKernel::constant(0.3).unwrap().degree(0.77, 5).unwrap(), 0.3, epsilon = 1e-15);
        // closed form p - p²/2 at p = 1/2
        let d = GraphonKernel::<f64>::Min.degree(0.5, 4096).unwrap();
        assert_abs_diff_eq!(d, 0.375, epsilon = 1e-7);
        assert_abs_diff_eq!(two_block(0.2, 1.0).degree(0.25, 64).unwrap(), 0.6, epsilon = 1e-14);
        assert!(GraphonKernel::<f64>::Min.degree(0.5, 0).is_err());
    }

    #[test]
    fn degree_error_shrinks_quadratically_for_smooth_kernel() {
        let k = GraphonKernel::<f64>::custom(CustomKind::Gaussian, vec![0.3], true).unwrap();
        // reference by very fine quadrature
        let exact = k.degree(0.4, 1 << 16).unwrap();
        let e1 = (k.degree(0.4, 32).unwrap() - exact).abs();
        let e2 = (k.degree(0.4, 64).unwrap() - exact).abs();
        let ratio = e1 / e2;
        assert!((3.5..4.5).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn invalid_block_models_rejected() {
        assert!(GraphonKernel::block_model(vec![0.0, 0.6, 0.5, 1.0], vec![vec![1.0; 3]; 3]).is_err());
        assert!(GraphonKernel::block_model(vec![0.1, 1.0], vec![vec![1.0]]).is_err());
        assert!(GraphonKernel::block_model(vec![0.0, 0.5, 1.0], vec![vec![1.0, 0.2], vec![0.3, 1.0]]).is_err());
        assert!(GraphonKernel::block_model(vec![0.0, 0.5, 1.0], vec![vec![1.2, 0.2], vec![0.2, 1.0]]).is_err());
        assert!(GraphonKernel::block_model(vec![0.0, 1.0], vec![vec![1.0, 0.0]]).is_err());
        assert!(GraphonKernel::constant(1.5).is_err());
    }

    #[test]
    fn custom_kernels_checked_at_construction() {
        assert!(GraphonKernel::custom(CustomKind::ExpDecay, vec![2.0], false).is_err());
        assert!(GraphonKernel::custom(CustomKind::Power, vec![1.0, 2.0], true).is_err());
        assert!(GraphonKernel::custom(CustomKind::Power, vec![1.5, 1.5], true).is_ok());
        assert!(GraphonKernel::custom(CustomKind::Gaussian, vec![0.0], true).is_err());
        assert!(GraphonKernel::<f64>::custom(CustomKind::ExpDecay, vec![], true).is_err());
        assert_eq!(CustomKind::from_name("one_minus_max"), Some(CustomKind::OneMinusMax));
    }

    #[test]
    fn discretized_degrees_and_symmetry() {
        let d = DiscretizedGraphon::new(&GraphonKernel::<f64>::Min, 64).unwrap();
        assert!(d.weight_matrix().is_symmetric(0.0));
        for (&p, &deg) in d.coords().iter().zip(d.degrees()) {
            assert!((0.0..=1.0).contains(&deg));
            // midpoint quadrature of min(p, ·) has O(1/N²) error
            assert!((deg - (p - p * p / 2.0)).abs() < 1.0 / 64.0f64.powi(2));
        }
    }

    #[test]
    fn fast_paths_match_dense_sums() {
        let fields: Vec<f64> = (0..64 * 2).map(|i| ((i * 37) % 17) as f64 / 17.0 - 0.4).collect();
        for k in [two_block(0.1, 0.8), GraphonKernel::constant(0.3).unwrap(), GraphonKernel::Product] {
            let d = DiscretizedGraphon::new(&k, 64).unwrap();
            assert!(d.has_fast_path());
            let fast = d.weighted_sums(&fields, 2);
            let dense = d.weighted_sums_dense(&fields, 2);
            for (a, b) in fast.iter().zip(&dense) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn lambda2_constant_kernel() {
        let d = DiscretizedGraphon::new(&GraphonKernel::constant(0.3).unwrap(), 256).unwrap();
        assert_abs_diff_eq!(algebraic_connectivity(&d).unwrap(), 0.3, epsilon = 1e-6);
        assert_abs_diff_eq!(algebraic_connectivity_dense(&d).unwrap(), 0.3, epsilon = 1e-6);
    }

    #[test]
    fn lambda2_disconnected_blocks_is_zero() {
        let d = DiscretizedGraphon::new(&two_block(0.0, 1.0), 64).unwrap();
        assert!(algebraic_connectivity(&d).unwrap().abs() <= 1e-8);
        // the block indicator (centred) attains the zero quotient
        let z: Vec<f64> = d.coords().iter().map(|&p| if p < 0.5 { 1.0 } else { -1.0 }).collect();
        assert!(d.rayleigh_quotient(&z).abs() < 1e-15);
    }

    #[test]
    fn iterative_and_dense_lambda2_agree() {
        for k in [two_block(0.1, 0.8), GraphonKernel::Min, GraphonKernel::Product] {
            let d = DiscretizedGraphon::new(&k, 64).unwrap();
            let it = algebraic_connectivity(&d).unwrap();
            let de = algebraic_connectivity_dense(&d).unwrap();
            assert!((it - de).abs() < 1e-8, "{}: {it} vs {de}", k.name());
        }
    }

    #[test]
    fn connectivity_examples() {
        let c = is_connected(&GraphonKernel::constant(0.3).unwrap(), 64, 1e-8).unwrap();
        assert!(c.connected);
        assert_abs_diff_eq!(c.min_degree, 0.3, epsilon = 1e-12);
        assert!(!is_connected(&two_block(0.0, 1.0), 64, 1e-8).unwrap().connected);
        assert!(is_connected(&two_block(0.1, 0.8), 64, 1e-8).unwrap().connected);
        assert!(is_connected(&GraphonKernel::constant(0.3).unwrap(), 1, 1e-8).is_err());
    }

    #[test]
    fn single_precision_lambda2() {
        let d = DiscretizedGraphon::new(&GraphonKernel::constant(0.3f32).unwrap(), 64).unwrap();
        assert!((algebraic_connectivity_dense(&d).unwrap() - 0.3).abs() < 1e-4);
    }
}
