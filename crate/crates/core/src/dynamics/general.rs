use crate::error::{invalid, Result};
use crate::gains::GeneralGains;
use crate::linalg::Matrix;
use crate::noise::OuSpec;
use crate::rng::{stream, Channel};
use crate::scalar::{dist2, norm2, Real};

/// Built-in time-invariant drift maps `ℝⁿ → ℝⁿ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DriftFn<T> {
    Zero,
    /// `z ↦ scale · z`.
    Linear { scale: T },
    /// `z ↦ scale · clamp(z, −clip, clip)` componentwise.
    ClippedLinear { scale: T, clip: T },
}

impl<T: Real> DriftFn<T> {
    pub fn apply(&self, z: &[T], out: &mut [T]) {
        match *self {
            DriftFn::Zero => out.iter_mut().for_each(|o| *o = T::zero()),
            DriftFn::Linear { scale } => out.iter_mut().zip(z).for_each(|(o, &x)| *o = scale * x),
            DriftFn::ClippedLinear { scale, clip } => {
                out.iter_mut().zip(z).for_each(|(o, &x)| *o = scale * x.max(-clip).min(clip))
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        match *self {
            DriftFn::Zero => true,
            DriftFn::Linear { scale } | DriftFn::ClippedLinear { scale, .. } => scale == T::zero(),
        }
    }

    pub fn lipschitz(&self) -> T {
        match *self {
            DriftFn::Zero => T::zero(),
            DriftFn::Linear { scale } | DriftFn::ClippedLinear { scale, .. } => scale.abs(),
        }
    }

    /// `(λ₁₁, λ₁₂)` in `‖F(z)‖ ≤ λ₁₁‖z‖ + λ₁₂`.
    pub fn growth(&self) -> (T, T) {
        (self.lipschitz(), T::zero())
    }

    fn validate(&self) -> Result<()> {
        match *self {
            DriftFn::Zero => Ok(()),
            DriftFn::Linear { scale } if scale.is_finite() => Ok(()),
            DriftFn::ClippedLinear { scale, clip } if scale.is_finite() && clip > T::zero() && clip.is_finite() => {
                Ok(())
            }
            _ => Err(invalid(format!("invalid drift {self:?}"))),
        }
    }
}

/// Coefficients, drifts and noises of the general coupled system.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneralSystemSpec<T> {
    pub gains: GeneralGains<T>,
    pub f: DriftFn<T>,
    pub g: DriftFn<T>,
    pub xi: OuSpec<T>,
    pub sigma: Matrix<T>,
}

impl<T: Real> GeneralSystemSpec<T> {
    pub fn dim(&self) -> usize {
        self.sigma.rows()
    }

    pub fn validate(&self) -> Result<()> {
        if !self.sigma.is_square() || self.sigma.rows() == 0 {
            return Err(invalid("Σ must be a nonempty square matrix"));
        }
        self.f.validate()?;
        self.g.validate()
    }

    /// Declared `λ₁ = Lip(f) + Lip(g)`.
    pub fn lambda1(&self) -> T {
        self.f.lipschitz() + self.g.lipschitz()
    }

    /// Declared `(λ₁₁, λ₁₂)` for `‖f‖ + ‖g‖`.
    pub fn growth(&self) -> (T, T) {
        let (a, b) = self.f.growth();
        let (c, d) = self.g.growth();
        (a + c, b + d)
    }

    /// Bound `r₁ = n s²` on the second moment of ξ.
    pub fn r1(&self) -> T {
        self.xi.second_moment_bound(self.dim())
    }

    /// Checks the declared Lipschitz and growth constants on `samples`
    /// random pairs; returns the worst observed ratio `lhs / rhs`.
    pub fn verify_constants(&self, samples: usize, seed: u64) -> Result<T> {
        let n = self.dim();
        let lambda1 = self.lambda1();
        let (l11, l12) = self.growth();
        let mut rng = stream(seed, 0, 0, Channel::Aux);
        let (mut z1, mut z2) = (vec![T::zero(); n], vec![T::zero(); n]);
        let (mut f1, mut f2, mut g1, mut g2) = (vec![T::zero(); n], vec![T::zero(); n], vec![T::zero(); n], vec![T::zero(); n]);
        let mut worst = T::zero();
        let slack = T::lit(1e-12);
        for _ in 0..samples {
            let scale = T::lit(4.0) * rng.normal::<T>().abs();
            z1.iter_mut().for_each(|v| *v = scale * rng.normal());
            z2.iter_mut().for_each(|v| *v = scale * rng.normal());
            self.f.apply(&z1, &mut f1);
            self.f.apply(&z2, &mut f2);
            self.g.apply(&z1, &mut g1);
            self.g.apply(&z2, &mut g2);
            let lhs = dist2(&f1, &f2).sqrt() + dist2(&g1, &g2).sqrt();
            let rhs = lambda1 * dist2(&z1, &z2).sqrt();
            let growth_lhs = norm2(&f1).sqrt() + norm2(&g1).sqrt();
            let growth_rhs = l11 * norm2(&z1).sqrt() + l12;
            for (l, r) in [(lhs, rhs), (growth_lhs, growth_rhs)] {
                if l > r + slack {
                    return Err(invalid(format!("declared drift constant violated: {l} > {r}")));
                }
                if r > T::zero() {
                    worst = worst.max(l / r);
                }
            }
        }
        Ok(worst)
    }
}
