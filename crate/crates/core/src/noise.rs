//! Stationary Ornstein–Uhlenbeck drives for the η (tracking) and ξ
//! (general system) noise terms.

use crate::error::{invalid, Result};
use crate::scalar::Real;

/// Zero-mean OU process `dη = −ρ η dt + s √(2ρ) dW`, started in its
/// stationary law `N(0, s² I)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OuSpec<T> {
    reversion: T,
    stationary_std: T,
}

impl<T: Real> OuSpec<T> {
    pub fn new(reversion: T, stationary_std: T) -> Result<Self> {
        if !(reversion > T::zero() && reversion.is_finite()) {
            return Err(invalid(format!("OU reversion must be positive, got {reversion}")));
        }
        if !(stationary_std >= T::zero() && stationary_std.is_finite()) {
            return Err(invalid(format!("OU stationary std must be nonnegative, got {stationary_std}")));
        }
        Ok(Self { reversion, stationary_std })
    }

    /// A drive that is identically zero.
    pub fn off() -> Self {
        Self { reversion: T::one(), stationary_std: T::zero() }
    }

    pub fn reversion(&self) -> T {
        self.reversion
    }

    pub fn stationary_std(&self) -> T {
        self.stationary_std
    }

    pub fn is_off(&self) -> bool {
        self.stationary_std.is_zero()
    }

    /// Bound on `sup_t E‖η(t)‖²` for an `dim`-dimensional drive: `dim · s²`.
    pub fn second_moment_bound(&self, dim: usize) -> T {
        T::from_usize_lossy(dim) * self.stationary_std * self.stationary_std
    }

    /// Coefficients `(decay, innovation_std)` of the exact transition over `h`:
    /// `η(t+h) = decay · η(t) + innovation_std · N(0, I)`.
    pub fn transition(&self, h: T) -> (T, T) {
        let decay = (-self.reversion * h).exp();
        let innovation = self.stationary_std * (T::one() - decay * decay).max(T::zero()).sqrt();
        (decay, innovation)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Channel};

    #[test]
    fn rejects_bad_parameters() {
        assert!(OuSpec::new(0.0, 1.0).is_err());
        assert!(OuSpec::new(1.0, -1.0).is_err());
        assert!(OuSpec::new(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn transition_preserves_stationary_variance() {
        let ou = OuSpec::<f64>::new(2.0, 0.5).unwrap();
        let (a, b) = ou.transition(0.1);
        let s2 = 0.25;
        assert!((a * a * s2 + b * b - s2).abs() < 1e-15);
    }

    #[test]
    fn simulated_path_has_stationary_moments_and_correlation() {
        let ou = OuSpec::new(1.5, 0.5).unwrap();
        let h = 0.05;
        let (a, b) = ou.transition(h);
        let mut s = stream(5, 0, 0, Channel::Aux);
        let mut x: f64 = 0.5 * s.normal::<f64>();
        let n = 400_000;
        let (mut m, mut m2, mut lag) = (0.0, 0.0, 0.0);
        for _ in 0..n {
            let next = a * x + b * s.normal::<f64>();
            m += x;
            m2 += x * x;
            lag += x * next;
            x = next;
        }
        let nf = n as f64;
        assert!((m / nf).abs() < 0.01);
        assert!((m2 / nf - 0.25).abs() < 0.01);
        // lag-h autocorrelation of a stationary OU process is exp(-rho h)
        assert!((lag / m2 - (-1.5 * h).exp()).abs() < 0.01);
    }

    #[test]
    fn moment_bound_is_dim_times_variance() {
        let ou = OuSpec::new(1.0, 0.5).unwrap();
        assert_eq!(ou.second_moment_bound(3), 0.75);
        assert!(OuSpec::<f64>::off().is_off());
    }
}
