//! Power-law gain schedules `a·(1+t)^(−γ)` and validators for the decay
//! conditions the convergence results need.

use std::fmt;

use crate::error::{invalid, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLawGain<T> {
    scale: T,
    exponent: T,
}

impl<T: Real> PowerLawGain<T> {
    pub fn new(scale: T, exponent: T) -> Result<Self> {
        if !(scale > T::zero() && scale.is_finite()) {
            return Err(invalid(format!("gain scale must be positive, got {scale}")));
        }
        if !(exponent >= T::zero() && exponent.is_finite()) {
            return Err(invalid(format!("gain exponent must be nonnegative, got {exponent}")));
        }
        Ok(PowerLawGain { scale, exponent })
    }

    pub fn constant(value: T) -> Result<Self> {
        Self::new(value, T::zero())
    }

    pub fn scale(&self) -> T {
        self.scale
    }

    pub fn exponent(&self) -> T {
        self.exponent
    }

    pub fn eval(&self, t: T) -> T {
        debug_assert!(t >= T::zero());
        if self.exponent == T::zero() {
            self.scale
        } else {
            self.scale * (T::one() + t).powf(-self.exponent)
        }
    }

    pub fn derivative(&self, t: T) -> T {
        -self.exponent * self.scale * (T::one() + t).powf(-self.exponent - T::one())
    }

    pub fn second_derivative(&self, t: T) -> T {
        let g = self.exponent;
        g * (g + T::one()) * self.scale * (T::one() + t).powf(-g - T::lit(2.0))
    }

    /// `∫ₛᵗ a(1+u)^(−γ) du` in closed form.
    pub fn integral(&self, s: T, t: T) -> T {
        power_integral(self.scale, self.exponent, s, t)
    }

    /// Pointwise product, again a power law.
    pub fn product(&self, other: &Self) -> Self {
        PowerLawGain { scale: self.scale * other.scale, exponent: self.exponent + other.exponent }
    }

    pub fn powi(&self, k: i32) -> Self {
        PowerLawGain { scale: self.scale.powi(k), exponent: self.exponent * T::from_i32(k).expect("small integer") }
    }
}

/// `∫ₛᵗ a(1+u)^(−γ) du`.
pub fn power_integral<T: Real>(a: T, gamma: T, s: T, t: T) -> T {
    let (u, v) = (T::one() + s, T::one() + t);
    let e = T::one() - gamma;
    if e.abs() < T::lit(1e-12) {
        a * (v.ln() - u.ln())
    } else {
        a * (v.powf(e) - u.powf(e)) / e
    }
}

/// One failed assumption clause.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub clause: &'static str,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({})", self.clause, self.detail)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Validation {
    pub violations: Vec<Violation>,
}

impl Validation {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn clauses(&self) -> Vec<&'static str> {
        self.violations.iter().map(|v| v.clause).collect()
    }

    fn check(&mut self, holds: bool, clause: &'static str, detail: impl FnOnce() -> String) {
        if !holds {
            self.violations.push(Violation { clause, detail: detail() });
        }
    }
}

pub const SGD_INTEGRAL: &str = "∫α₂ = ∞";
pub const SGD_SQUARE_INTEGRAL: &str = "∫α₂² < ∞";
pub const SGD_RATIO: &str = "α₂/α₁ → 0";
pub const SGD_ALPHA1_LIMIT: &str = "lim α₁(t) = 0";
pub const TRACKING_BETA2_INIT: &str = "β₂(0) = 1";
pub const TRACKING_BETA3_INTEGRAL: &str = "∫β₃ = ∞";
pub const TRACKING_PRODUCT_INTEGRAL: &str = "∫β₁β₂ = ∞";
pub const TRACKING_RATIO1: &str = "β₁/β₃ → 0";
pub const TRACKING_RATIO2: &str = "β₂/β₃ → 0";
pub const TRACKING_BETA3_LIMIT: &str = "lim β₃(t) = 0";
pub const GENERAL_C1_INTEGRAL: &str = "∫c₁ = ∞";
pub const GENERAL_C1_LIMIT: &str = "lim c₁(t) = 0";
pub const GENERAL_RATIOS: [&str; 4] = ["c₂/c₁ → 0", "c₃/c₁ → 0", "c₄/c₁ → 0", "c₅/c₁ → 0"];
pub const GENERAL_C5_SQUARE: &str = "∫c₅² < ∞";

/// Gains `(α₁, α₂)` of the consensus-plus-gradient SGD flow.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SgdGains<T> {
    pub alpha1: PowerLawGain<T>,
    pub alpha2: PowerLawGain<T>,
}

impl<T: Real> Default for SgdGains<T> {
    fn default() -> Self {
        SgdGains {
            alpha1: PowerLawGain { scale: T::one(), exponent: T::lit(0.25) },
            alpha2: PowerLawGain { scale: T::one(), exponent: T::lit(0.75) },
        }
    }
}

impl<T: Real> SgdGains<T> {
    pub fn new(a: T, gamma1: T, b: T, gamma2: T) -> Result<Self> {
        Ok(SgdGains { alpha1: PowerLawGain::new(a, gamma1)?, alpha2: PowerLawGain::new(b, gamma2)? })
    }

    pub fn validate(&self) -> Validation {
        validate_sgd(self)
    }
}

pub fn validate_sgd<T: Real>(g: &SgdGains<T>) -> Validation {
    let (g1, g2) = (g.alpha1.exponent, g.alpha2.exponent);
    let half = T::lit(0.5);
    let mut v = Validation::default();
    v.check(g2 <= T::one(), SGD_INTEGRAL, || format!("γ₂ = {g2} > 1"));
    v.check(g2 > half, SGD_SQUARE_INTEGRAL, || format!("2γ₂ = {} ≤ 1", g2 + g2));
    v.check(g2 > g1, SGD_RATIO, || format!("γ₂ = {g2} ≤ γ₁ = {g1}"));
    v.check(g1 > T::zero(), SGD_ALPHA1_LIMIT, || "γ₁ = 0".into());
    v
}

/// Gains `(β₁, β₂, β₃)` of the gradient-tracking flow; `β₂(0) = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackingGains<T> {
    pub beta1: PowerLawGain<T>,
    pub beta2: PowerLawGain<T>,
    pub beta3: PowerLawGain<T>,
}

impl<T: Real> Default for TrackingGains<T> {
    fn default() -> Self {
        TrackingGains {
            beta1: PowerLawGain { scale: T::one(), exponent: T::lit(0.4) },
            beta2: PowerLawGain { scale: T::one(), exponent: T::lit(0.4) },
            beta3: PowerLawGain { scale: T::one(), exponent: T::lit(0.2) },
        }
    }
}

impl<T: Real> TrackingGains<T> {
    pub fn new(beta1: PowerLawGain<T>, beta2: PowerLawGain<T>, beta3: PowerLawGain<T>) -> Self {
        TrackingGains { beta1, beta2, beta3 }
    }

    pub fn from_exponents(gamma1: T, gamma2: T, gamma3: T) -> Result<Self> {
        Ok(TrackingGains {
            beta1: PowerLawGain::new(T::one(), gamma1)?,
            beta2: PowerLawGain::new(T::one(), gamma2)?,
            beta3: PowerLawGain::new(T::one(), gamma3)?,
        })
    }

    /// Analytic `β₂′(t)`.
    pub fn beta2_prime(&self, t: T) -> T {
        self.beta2.derivative(t)
    }

    pub fn validate(&self) -> Validation {
        validate_tracking(self)
    }
}

pub fn validate_tracking<T: Real>(g: &TrackingGains<T>) -> Validation {
    let (g1, g2, g3) = (g.beta1.exponent, g.beta2.exponent, g.beta3.exponent);
    let mut v = Validation::default();
    let b20 = g.beta2.eval(T::zero());
    v.check(b20 == T::one(), TRACKING_BETA2_INIT, || format!("β₂(0) = {b20}"));
    v.check(g3 <= T::one(), TRACKING_BETA3_INTEGRAL, || format!("γ₃ = {g3} > 1"));
    v.check(g1 + g2 <= T::one(), TRACKING_PRODUCT_INTEGRAL, || format!("γ₁ + γ₂ = {} > 1", g1 + g2));
    v.check(g1 > g3, TRACKING_RATIO1, || format!("γ₁ = {g1} ≤ γ₃ = {g3}"));
    v.check(g2 > g3, TRACKING_RATIO2, || format!("γ₂ = {g2} ≤ γ₃ = {g3}"));
    v.check(g3 > T::zero(), TRACKING_BETA3_LIMIT, || "γ₃ = 0".into());
    v
}

/// Coefficients `c₁..c₅` of the general coupled system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneralGains<T> {
    pub c: [PowerLawGain<T>; 5],
}

impl<T: Real> GeneralGains<T> {
    pub fn new(c: [PowerLawGain<T>; 5]) -> Self {
        GeneralGains { c }
    }

    pub fn validate(&self) -> Validation {
        validate_general(&self.c)
    }
}

pub fn validate_general<T: Real>(c: &[PowerLawGain<T>; 5]) -> Validation {
    let g1 = c[0].exponent;
    let mut v = Validation::default();
    v.check(g1 <= T::one(), GENERAL_C1_INTEGRAL, || format!("γ(c₁) = {g1} > 1"));
    v.check(g1 > T::zero(), GENERAL_C1_LIMIT, || "γ(c₁) = 0".into());
    for (i, clause) in GENERAL_RATIOS.iter().enumerate() {
        let gi = c[i + 1].exponent;
        v.check(gi > g1, clause, || format!("γ(c{}) = {gi} ≤ γ(c₁) = {g1}", i + 2));
    }
    let g5 = c[4].exponent;
    v.check(g5 > T::lit(0.5), GENERAL_C5_SQUARE, || format!("2γ(c₅) = {} ≤ 1", g5 + g5));
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn pl(a: f64, g: f64) -> PowerLawGain<f64> {
        PowerLawGain::new(a, g).unwrap()
    }

    #[test]
    fn eval_examples() {
        assert_eq!(pl(1.0, 0.75).eval(0.0), 1.0);
        assert_relative_eq!(pl(1.0, 0.75).eval(15.0), 0.125, max_relative = 1e-15);
        assert_eq!(pl(2.0, 0.0).eval(1234.5), 2.0);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(PowerLawGain::new(0.0, 0.5).is_err());
        assert!(PowerLawGain::new(1.0, -0.1).is_err());
        assert!(PowerLawGain::new(f64::NAN, 0.1).is_err());
    }

    #[test]
    fn derivative_and_integral_agree_with_eval() {
        let g = pl(1.7, 0.4);
        let h = 1e-5;
        let fd = (g.eval(3.0 + h) - g.eval(3.0 - h)) / (2.0 * h);
        assert_relative_eq!(g.derivative(3.0), fd, max_relative = 1e-8);
        let fd2 = (g.derivative(3.0 + h) - g.derivative(3.0 - h)) / (2.0 * h);
        assert_relative_eq!(g.second_derivative(3.0), fd2, max_relative = 1e-7);
        // composite Simpson reference
        let n = 2000;
        let (s, t) = (0.5, 7.0);
        let dx = (t - s) / n as f64;
        let simpson: f64 = (0..=n)
            .map(|k| {
                let w = if k == 0 || k == n { 1.0 } else if k % 2 == 1 { 4.0 } else { 2.0 };
                w * g.eval(s + k as f64 * dx)
            })
            .sum::<f64>()
            * dx
            / 3.0;
        assert_relative_eq!(g.integral(s, t), simpson, max_relative = 1e-12);
        assert_relative_eq!(pl(2.0, 1.0).integral(0.0, 9.0), 2.0 * 10f64.ln(), max_relative = 1e-15);
    }

    #[test]
    fn sgd_validator_examples() {
        assert!(SgdGains::<f64>::default().validate().ok());
        let v = SgdGains::new(1.0, 0.25, 1.0, 0.4).unwrap().validate();
        assert_eq!(v.clauses(), vec![SGD_SQUARE_INTEGRAL]);
        let v = SgdGains::new(1.0, 0.8, 1.0, 0.75).unwrap().validate();
        assert_eq!(v.clauses(), vec![SGD_RATIO]);
        let v = SgdGains::new(1.0, 0.0, 1.0, 1.2).unwrap().validate();
        assert_eq!(v.clauses(), vec![SGD_INTEGRAL, SGD_ALPHA1_LIMIT]);
    }

    #[test]
    fn tracking_validator_examples() {
        let d = TrackingGains::<f64>::default();
        assert!(d.validate().ok());
        let v = TrackingGains::from_exponents(0.6, 0.6, 0.2).unwrap().validate();
        assert_eq!(v.clauses(), vec![TRACKING_PRODUCT_INTEGRAL]);
        let v = TrackingGains::from_exponents(0.1, 0.4, 0.2).unwrap().validate();
        assert_eq!(v.clauses(), vec![TRACKING_RATIO1]);
        let bad = TrackingGains::new(pl(1.0, 0.4), pl(2.0, 0.4), pl(1.0, 0.2));
        assert_eq!(bad.validate().clauses(), vec![TRACKING_BETA2_INIT]);
        assert_relative_eq!(d.beta2_prime(1.0), -0.4 * 2f64.powf(-1.4), max_relative = 1e-15);
    }

    #[test]
    fn general_validator_examples() {
        let ok = [pl(1.0, 0.3), pl(1.0, 0.8), pl(1.0, 0.8), pl(1.0, 0.8), pl(1.0, 0.8)];
        assert!(validate_general(&ok).ok());
        let mut c = ok;
        c[0] = pl(1.0, 0.0);
        assert_eq!(validate_general(&c).clauses(), vec![GENERAL_C1_LIMIT]);
        let mut c = ok;
        c[4] = pl(1.0, 0.4);
        assert_eq!(validate_general(&c).clauses(), vec![GENERAL_C5_SQUARE]);
    }

    #[test]
    fn product_is_power_law() {
        let p = pl(2.0, 0.3).product(&pl(0.5, 0.4));
        assert_relative_eq!(p.eval(4.0), pl(2.0, 0.3).eval(4.0) * pl(0.5, 0.4).eval(4.0), max_relative = 1e-14);
        assert_relative_eq!(pl(3.0, 0.6).powi(2).eval(2.0), 9.0 * 3f64.powf(-1.2), max_relative = 1e-14);
    }
}
