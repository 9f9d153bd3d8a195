//! Differential-inequality lemmas checked against their extremal equality ODEs.
//!
//! A scalar inequality `y' ≤ −a₁y + a₂√y + a₃` is dominated by the solution of
//! the corresponding equality (comparison theorem), so the equality solution
//! is the worst case for any envelope bound. The same holds componentwise for
//! the coupled pair `(Y₁, Y₂)`.
//!
//! Everything here works in `f64`.

use crate::error::{Error, Result};
use crate::gains::TrackingGains;
use crate::rng::{stream, Channel};

/// Nonnegative coefficient function of time.
#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    Constant(f64),
    /// `scale·(1 + t)^(−exponent)`.
    PowerLaw { scale: f64, exponent: f64 },
    /// `scale·e^(−rate·t)`.
    ExpDecay { scale: f64, rate: f64 },
    /// Linear interpolation of samples, held constant outside the sample range.
    Piecewise { times: Vec<f64>, values: Vec<f64> },
    Sum(Vec<Shape>),
    Product(Vec<Shape>),
}

/// Tail behaviour as `t → ∞`, ordered from fastest to slowest decay.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Tail {
    /// Identically zero for large `t`.
    Zero,
    /// `~ e^(−rate·t)`.
    Exp(f64),
    /// `~ t^(−exponent)`; a nonzero constant is `Power(0)`.
    Power(f64),
}

impl Tail {
    /// True when `self / other → 0`.
    pub fn vanishes_against(self, other: Tail) -> bool {
        match (self, other) {
            (_, Tail::Zero) => false,
            (Tail::Zero, _) => true,
            (Tail::Exp(r), Tail::Exp(s)) => r > s,
            (Tail::Exp(_), Tail::Power(_)) => true,
            (Tail::Power(_), Tail::Exp(_)) => false,
            (Tail::Power(g), Tail::Power(h)) => g > h,
        }
    }

    /// True when `limsup self / other < ∞`.
    pub fn bounded_by(self, other: Tail) -> bool {
        self.vanishes_against(other) || self == other || self == Tail::Zero
    }

    pub fn is_integrable(self) -> bool {
        match self {
            Tail::Zero | Tail::Exp(_) => true,
            Tail::Power(g) => g > 1.0,
        }
    }

    pub fn tends_to_zero(self) -> bool {
        match self {
            Tail::Zero | Tail::Exp(_) => true,
            Tail::Power(g) => g > 0.0,
        }
    }

    fn slowest(self, other: Tail) -> Tail {
        if self.vanishes_against(other) { other } else { self }
    }

    fn times(self, other: Tail) -> Tail {
        match (self, other) {
            (Tail::Zero, _) | (_, Tail::Zero) => Tail::Zero,
            (Tail::Exp(r), Tail::Exp(s)) => Tail::Exp(r + s),
            (Tail::Exp(r), Tail::Power(_)) | (Tail::Power(_), Tail::Exp(r)) => Tail::Exp(r),
            (Tail::Power(g), Tail::Power(h)) => Tail::Power(g + h),
        }
    }
}

impl Shape {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Shape::Constant(c) => *c,
            Shape::PowerLaw { scale, exponent } => scale * (1.0 + t).powf(-exponent),
            Shape::ExpDecay { scale, rate } => scale * (-rate * t).exp(),
            Shape::Piecewise { times, values } => {
                let k = times.partition_point(|&s| s <= t);
                if k == 0 {
                    values[0]
                } else if k == times.len() {
                    values[k - 1]
                } else {
                    let w = (t - times[k - 1]) / (times[k] - times[k - 1]);
                    values[k - 1] + w * (values[k] - values[k - 1])
                }
            }
            Shape::Sum(parts) => parts.iter().map(|p| p.eval(t)).sum(),
            Shape::Product(parts) => parts.iter().map(|p| p.eval(t)).product(),
        }
    }

    pub fn tail(&self) -> Tail {
        match self {
            Shape::Constant(c) if *c == 0.0 => Tail::Zero,
            Shape::Constant(_) => Tail::Power(0.0),
            Shape::PowerLaw { scale, .. } if *scale == 0.0 => Tail::Zero,
            Shape::PowerLaw { exponent, .. } => Tail::Power(*exponent),
            Shape::ExpDecay { scale, .. } if *scale == 0.0 => Tail::Zero,
            Shape::ExpDecay { rate, .. } if *rate == 0.0 => Tail::Power(0.0),
            Shape::ExpDecay { rate, .. } => Tail::Exp(*rate),
            Shape::Piecewise { values, .. } => {
                if *values.last().expect("validated") == 0.0 { Tail::Zero } else { Tail::Power(0.0) }
            }
            Shape::Sum(parts) => parts.iter().map(Shape::tail).fold(Tail::Zero, Tail::slowest),
            Shape::Product(parts) => parts.iter().map(Shape::tail).fold(Tail::Power(0.0), Tail::times),
        }
    }

    fn check(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidParameter(format!("coefficient path: {what}")));
        match self {
            Shape::Constant(c) if !(c.is_finite() && *c >= 0.0) => bad("constant must be finite and ≥ 0"),
            Shape::PowerLaw { scale, exponent } if !(scale.is_finite() && *scale >= 0.0 && exponent.is_finite()) => {
                bad("power law needs finite scale ≥ 0 and finite exponent")
            }
            Shape::ExpDecay { scale, rate } if !(scale.is_finite() && *scale >= 0.0 && rate.is_finite() && *rate >= 0.0) => {
                bad("exponential decay needs finite scale ≥ 0 and rate ≥ 0")
            }
            Shape::Piecewise { times, values } => {
                if times.is_empty() || times.len() != values.len() {
                    return bad("piecewise samples need matching nonempty times and values");
                }
                if times.windows(2).any(|w| !(w[0] < w[1])) || times.iter().any(|t| !t.is_finite()) {
                    return bad("piecewise times must be finite and strictly increasing");
                }
                if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                    return bad("piecewise values must be finite and ≥ 0");
                }
                Ok(())
            }
            Shape::Sum(parts) | Shape::Product(parts) => parts.iter().try_for_each(Shape::check),
            _ => Ok(()),
        }
    }
}

/// Smallest value a positivity-required path may take.
pub const POSITIVITY_FLOOR: f64 = 1e-12;

/// A nonnegative coefficient, optionally required to stay positive.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientPath {
    pub shape: Shape,
    pub positive: bool,
}

impl CoefficientPath {
    pub fn new(shape: Shape) -> Self {
        CoefficientPath { shape, positive: false }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(Shape::Constant(c))
    }

    pub fn power_law(scale: f64, exponent: f64) -> Self {
        Self::new(Shape::PowerLaw { scale, exponent })
    }

    pub fn exp_decay(scale: f64, rate: f64) -> Self {
        Self::new(Shape::ExpDecay { scale, rate })
    }

    pub fn piecewise(times: Vec<f64>, values: Vec<f64>) -> Self {
        Self::new(Shape::Piecewise { times, values })
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    /// Marks the path as required to stay ≥ [`POSITIVITY_FLOOR`].
    pub fn positive(mut self) -> Self {
        self.positive = true;
        self
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.shape.eval(t)
    }

    pub fn tail(&self) -> Tail {
        self.shape.tail()
    }

    /// Checks the parameters and samples the path on `[0, horizon]`.
    pub fn validate(&self, horizon: f64) -> Result<()> {
        self.shape.check()?;
        let floor = if self.positive { POSITIVITY_FLOOR } else { 0.0 };
        for t in sample_grid(horizon, ENVELOPE_GRID) {
            let v = self.eval(t);
            if !(v.is_finite() && v >= floor) {
                return Err(Error::InvalidParameter(format!("coefficient path equals {v} at t = {t}, below {floor}")));
            }
        }
        Ok(())
    }
}

fn sample_grid(horizon: f64, points: usize) -> impl Iterator<Item = f64> {
    (0..points).map(move |k| horizon * k as f64 / (points - 1) as f64)
}

/// Integration tolerances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    /// Local error per accepted step, relative to `1 + |y|`.
    pub local: f64,
    /// Maximal number of step halvings below the output step.
    pub max_halvings: u32,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance { local: 1e-10, max_halvings: 30 }
    }
}

type Rhs<'a, const M: usize> = dyn Fn(f64, &[f64; M]) -> [f64; M] + 'a;

fn rk4<const M: usize>(f: &Rhs<'_, M>, t: f64, y: &[f64; M], h: f64) -> [f64; M] {
    let shift = |y: &[f64; M], k: &[f64; M], a: f64| std::array::from_fn::<f64, M, _>(|j| y[j] + a * k[j]);
    let k1 = f(t, y);
    let k2 = f(t + 0.5 * h, &shift(y, &k1, 0.5 * h));
    let k3 = f(t + 0.5 * h, &shift(y, &k2, 0.5 * h));
    let k4 = f(t + h, &shift(y, &k3, h));
    std::array::from_fn(|j| y[j] + h / 6.0 * (k1[j] + 2.0 * (k2[j] + k3[j]) + k4[j]))
}

/// One step in a chosen formulation: `(t, y, h) → y(t + h)`.
trait Stepper<const M: usize> {
    fn step(&self, t: f64, y: &[f64; M], h: f64) -> [f64; M];
}

/// Step doubling: a full RK4 step is compared with two half steps, and the
/// interval is bisected until they agree.
fn advance<const M: usize>(s: &impl Stepper<M>, t: f64, y: &[f64; M], h: f64, tol: Tolerance, depth: u32) -> Result<[f64; M]> {
    let full = s.step(t, y, h);
    let half = s.step(t, y, 0.5 * h);
    let two = s.step(t + 0.5 * h, &half, 0.5 * h);
    let err = (0..M)
        .map(|j| (full[j] - two[j]).abs() / (1.0 + two[j].abs()))
        .fold(0.0, |a: f64, e| if e.is_nan() { f64::INFINITY } else { a.max(e) });
    if err <= tol.local && two.iter().all(|v| v.is_finite()) {
        return Ok(two);
    }
    if depth >= tol.max_halvings {
        return Err(Error::Accuracy { time: t, error: err });
    }
    let mid = advance(s, t, y, 0.5 * h, tol, depth + 1)?;
    advance(s, t + 0.5 * h, &mid, 0.5 * h, tol, depth + 1)
}

/// Sampled solution on the output grid `t_k = k·h`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledPath {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

impl SampledPath {
    pub fn last(&self) -> f64 {
        *self.values.last().expect("nonempty path")
    }
}

/// Below this value of `u = √y` the `a₃/(2u)` term is linearized.
pub const U_GUARD: f64 = 1e-8;
/// Below this `y`, with `a₃ > 0`, the step runs in the `y` variable.
const Y_FORM_BELOW: f64 = 1e-2;

struct ScalarEquality<'a> {
    a1: &'a CoefficientPath,
    a2: &'a CoefficientPath,
    a3: &'a CoefficientPath,
    slack: Option<&'a CoefficientPath>,
}

impl ScalarEquality<'_> {
    fn forcing(&self, t: f64) -> f64 {
        self.a3.eval(t) - self.slack.map_or(0.0, |s| s.eval(t))
    }
}

impl Stepper<1> for ScalarEquality<'_> {
    fn step(&self, t: f64, y: &[f64; 1], h: f64) -> [f64; 1] {
        let y0 = y[0].max(0.0);
        if y0 < Y_FORM_BELOW && self.forcing(t) > 0.0 {
            let f = |s: f64, y: &[f64; 1]| {
                let v = y[0].max(0.0);
                [-self.a1.eval(s) * v + self.a2.eval(s) * v.sqrt() + self.forcing(s)]
            };
            return [rk4(&f, t, &[y0], h)[0].max(0.0)];
        }
        // u′ = (−a₁u² + a₂u + a₃)/(2u)
        let f = |s: f64, u: &[f64; 1]| {
            let c = self.forcing(s);
            let u = u[0];
            let lin = -0.5 * self.a1.eval(s) * u + 0.5 * self.a2.eval(s);
            let src = if c == 0.0 { 0.0 } else { 0.5 * c / u.max(U_GUARD) };
            [lin + src]
        };
        let u = rk4(&f, t, &[y0.sqrt()], h)[0].max(0.0);
        [u * u]
    }
}

fn check_horizon(horizon: f64, h: f64) -> Result<usize> {
    if !(horizon.is_finite() && horizon > 0.0 && h.is_finite() && h > 0.0 && h <= horizon) {
        return Err(Error::InvalidParameter(format!("need 0 < h ≤ T, got h = {h}, T = {horizon}")));
    }
    Ok((horizon / h).round().max(1.0) as usize)
}

fn check_initial(y0: f64) -> Result<()> {
    if !(y0.is_finite() && y0 >= 0.0) {
        return Err(Error::InvalidParameter(format!("initial value must be finite and ≥ 0, got {y0}")));
    }
    Ok(())
}

fn check_scalar_coefficients(a1: &CoefficientPath, a2: &CoefficientPath, a3: &CoefficientPath, horizon: f64) -> Result<()> {
    a1.clone().positive().validate(horizon)?;
    a2.validate(horizon)?;
    a3.validate(horizon)
}

/// Integrates `y′ = −a₁y + a₂√y + a₃` on `[0, T]`, sampled every `h`.
pub fn integrate_scalar_equality(
    a1: &CoefficientPath,
    a2: &CoefficientPath,
    a3: &CoefficientPath,
    y0: f64,
    horizon: f64,
    h: f64,
) -> Result<SampledPath> {
    integrate_scalar_with(a1, a2, a3, None, y0, horizon, h, Tolerance::default())
}

/// Same as [`integrate_scalar_equality`] with a nonnegative `slack` subtracted
/// from the right side, and explicit tolerances.
#[allow(clippy::too_many_arguments)]
pub fn integrate_scalar_with(
    a1: &CoefficientPath,
    a2: &CoefficientPath,
    a3: &CoefficientPath,
    slack: Option<&CoefficientPath>,
    y0: f64,
    horizon: f64,
    h: f64,
    tol: Tolerance,
) -> Result<SampledPath> {
    let steps = check_horizon(horizon, h)?;
    check_initial(y0)?;
    check_scalar_coefficients(a1, a2, a3, horizon)?;
    if let Some(s) = slack {
        s.validate(horizon)?;
    }
    let sys = ScalarEquality { a1, a2, a3, slack };
    let dt = horizon / steps as f64;
    let mut path = SampledPath { times: Vec::with_capacity(steps + 1), values: Vec::with_capacity(steps + 1) };
    let mut y = [y0];
    path.times.push(0.0);
    path.values.push(y0);
    for k in 0..steps {
        let t = k as f64 * dt;
        y = advance(&sys, t, &y, dt, tol, 0)?;
        path.times.push((k + 1) as f64 * dt);
        path.values.push(y[0]);
    }
    Ok(path)
}

/// Grid size for the envelope suprema.
pub const ENVELOPE_GRID: usize = 4096;
const ENVELOPE_STABLE: f64 = 1e-10;
const ENVELOPE_MAX_REFINEMENTS: usize = 6;

/// Pointwise ratios `(a₂/(2a₁), a₂²/(4a₁²), a₃/a₁)` at `t`.
fn ratios(a1: &CoefficientPath, a2: &CoefficientPath, a3: &CoefficientPath, t: f64) -> [f64; 3] {
    let (b1, b2, b3) = (a1.eval(t), a2.eval(t), a3.eval(t));
    let r = b2 / (2.0 * b1);
    [r, r * r, b3 / b1]
}

fn envelope_from(y0: f64, sups: [f64; 3]) -> f64 {
    y0.max((sups[0] + (sups[1] + sups[2]).sqrt()).powi(2))
}

/// Right side of the envelope bound `max{y(0), (sup r₂ + (sup r₂² + sup r₃)^½)²}`,
/// with suprema over `[0, t]` taken on a sample grid refined until stable.
pub fn envelope8(a1: &CoefficientPath, a2: &CoefficientPath, a3: &CoefficientPath, y0: f64, t: f64) -> f64 {
    let sup_on = |points: usize| {
        let mut s = [f64::NEG_INFINITY; 3];
        let pts: Box<dyn Iterator<Item = f64>> = if t > 0.0 { Box::new(sample_grid(t, points)) } else { Box::new(std::iter::once(0.0)) };
        for p in pts {
            let r = ratios(a1, a2, a3, p);
            (0..3).for_each(|j| s[j] = s[j].max(r[j]));
        }
        envelope_from(y0, s)
    };
    let mut points = ENVELOPE_GRID;
    let mut env = sup_on(points);
    for _ in 0..ENVELOPE_MAX_REFINEMENTS {
        points = 4 * (points - 1) + 1;
        let next = sup_on(points);
        let stable = (next - env).abs() <= ENVELOPE_STABLE * (1.0 + next.abs());
        env = next;
        if stable {
            break;
        }
    }
    env
}

/// Pointwise bound `(r₂(t) + (r₂(t)² + r₃(t))^½)²`.
pub fn bound7(a1: &CoefficientPath, a2: &CoefficientPath, a3: &CoefficientPath, t: f64) -> f64 {
    envelope_from(0.0, ratios(a1, a2, a3, t))
}

/// Relative slack allowed above the envelope.
pub const ENVELOPE_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct Lemma22Verdict {
    pub holds: bool,
    /// `max_t (y(t) − envelope(t))`.
    pub max_violation: f64,
    /// `max_t (y(t) − envelope(t)) / (1 + envelope(t))`.
    pub max_relative_violation: f64,
    pub y_final: f64,
    pub envelope_final: f64,
    /// `max_t (y(t) − bound7(t))`, reported only.
    pub bound7_max_violation: f64,
}

/// Integrates the equality ODE and compares it with the envelope at every
/// sample.
///
/// Suprema along the path are running maxima over the output grid refined
/// four times. At the final time the envelope is [`envelope8`] itself.
pub fn check_lemma22(
    a1: &CoefficientPath,
    a2: &CoefficientPath,
    a3: &CoefficientPath,
    y0: f64,
    horizon: f64,
    h: f64,
) -> Result<Lemma22Verdict> {
    let path = integrate_scalar_equality(a1, a2, a3, y0, horizon, h)?;
    let mut sups = ratios(a1, a2, a3, 0.0);
    let mut worst = f64::NEG_INFINITY;
    let mut worst_rel = f64::NEG_INFINITY;
    let mut worst7 = f64::NEG_INFINITY;
    let last = path.times.len() - 1;
    for (k, (&t, &y)) in path.times.iter().zip(&path.values).enumerate() {
        if k > 0 {
            let t0 = path.times[k - 1];
            for j in 1..=4 {
                let r = ratios(a1, a2, a3, t0 + (t - t0) * j as f64 / 4.0);
                (0..3).for_each(|m| sups[m] = sups[m].max(r[m]));
            }
        }
        let env = if k == last { envelope8(a1, a2, a3, y0, t) } else { envelope_from(y0, sups) };
        worst = worst.max(y - env);
        worst_rel = worst_rel.max((y - env) / (1.0 + env));
        worst7 = worst7.max(y - bound7(a1, a2, a3, t));
    }
    Ok(Lemma22Verdict {
        holds: worst_rel <= ENVELOPE_TOLERANCE,
        max_violation: worst,
        max_relative_violation: worst_rel,
        y_final: path.last(),
        envelope_final: envelope8(a1, a2, a3, y0, horizon),
        bound7_max_violation: worst7,
    })
}

/// Coefficients of the coupled pair
/// `Y₁′ = (−a₁ + a₂)Y₁ + a₃Y₂ + a₄`, `Y₂′ = −b₁Y₂ + b₂√Y₂(√Y₁ + Y₃)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoupledFamily {
    pub a1: CoefficientPath,
    pub a2: CoefficientPath,
    pub a3: CoefficientPath,
    pub a4: CoefficientPath,
    pub b1: CoefficientPath,
    pub b2: CoefficientPath,
    pub y3: CoefficientPath,
}

pub const HYP_A1_POSITIVE: &str = "a₁ > 0";
pub const HYP_A2_RATIO: &str = "a₂/a₁ → 0";
pub const HYP_A3_RATIO: &str = "a₃/a₁ → 0";
pub const HYP_A4_RATIO: &str = "a₄/a₁ → 0";
pub const HYP_A1_INTEGRAL: &str = "∫a₁ = ∞";
pub const HYP_B1_POSITIVE: &str = "b₁ > 0";
pub const HYP_B1_INTEGRAL: &str = "∫b₁ = ∞";
pub const HYP_B2_RATIO: &str = "limsup b₂/b₁ < ∞";
pub const HYP_Y3_LIMIT: &str = "Y₃ → 0";
pub const HYP_NONNEGATIVE: &str = "coefficients ≥ 0";

impl CoupledFamily {
    /// Hypotheses of the decoupling lemma that fail, by clause name.
    ///
    /// Limits and integrals are decided from the tails of the paths;
    /// positivity and nonnegativity are sampled on `[0, horizon]`.
    pub fn hypothesis_violations(&self, horizon: f64) -> Vec<&'static str> {
        let mut out = Vec::new();
        let positive = |p: &CoefficientPath| p.clone().positive().validate(horizon).is_ok();
        if !positive(&self.a1) {
            out.push(HYP_A1_POSITIVE);
        }
        if !positive(&self.b1) {
            out.push(HYP_B1_POSITIVE);
        }
        if [&self.a2, &self.a3, &self.a4, &self.b2, &self.y3].iter().any(|p| p.validate(horizon).is_err()) {
            out.push(HYP_NONNEGATIVE);
        }
        let a1 = self.a1.tail();
        for (p, clause) in [(&self.a2, HYP_A2_RATIO), (&self.a3, HYP_A3_RATIO), (&self.a4, HYP_A4_RATIO)] {
            if !p.tail().vanishes_against(a1) {
                out.push(clause);
            }
        }
        if a1.is_integrable() {
            out.push(HYP_A1_INTEGRAL);
        }
        if self.b1.tail().is_integrable() {
            out.push(HYP_B1_INTEGRAL);
        }
        if !self.b2.tail().bounded_by(self.b1.tail()) {
            out.push(HYP_B2_RATIO);
        }
        if !self.y3.tail().tends_to_zero() {
            out.push(HYP_Y3_LIMIT);
        }
        out
    }
}

/// The coupled pair in units of `e^s`: `Y₁ = e^s ŷ₁`, `Y₂ = e^s ŷ₂`.
///
/// The pair is homogeneous apart from `a₄` and `Y₃`, so only those pick up
/// the factor `e^(−s)`. This keeps transients far beyond the `f64` range
/// representable.
struct ScaledPair<'a> {
    family: &'a CoupledFamily,
    /// `e^(−s)`.
    inv: f64,
}

impl Stepper<2> for ScaledPair<'_> {
    fn step(&self, t: f64, y: &[f64; 2], h: f64) -> [f64; 2] {
        let fam = self.family;
        let root_inv = self.inv.sqrt();
        // state (ŷ₁, v̂) with v̂ = √ŷ₂: v̂′ = −b₁v̂/2 + b₂(√ŷ₁ + Y₃e^(−s/2))/2
        let f = |s: f64, y: &[f64; 2]| {
            let (y1, v) = (y[0].max(0.0), y[1]);
            [
                (-fam.a1.eval(s) + fam.a2.eval(s)) * y1 + fam.a3.eval(s) * v * v + fam.a4.eval(s) * self.inv,
                0.5 * (-fam.b1.eval(s) * v + fam.b2.eval(s) * (y1.sqrt() + fam.y3.eval(s) * root_inv)),
            ]
        };
        let next = rk4(&f, t, &[y[0], y[1].sqrt()], h);
        [next[0].max(0.0), next[1].max(0.0).powi(2)]
    }
}

/// Rescaling is triggered above this magnitude.
const RESCALE_ABOVE: f64 = 1e100;

/// Decay threshold `min(1e−3, Y(0)/10)`.
pub fn decay_threshold(y0: f64) -> f64 {
    (1e-3f64).min(y0 / 10.0)
}

fn has_decayed(y0: f64, y_final: f64) -> bool {
    y_final < decay_threshold(y0) || (y0 == 0.0 && y_final == 0.0)
}

#[derive(Debug, Clone, PartialEq)]
pub enum Lemma41Verdict {
    /// The family violates the named hypotheses; nothing was integrated.
    Rejected { violations: Vec<&'static str> },
    Integrated { y1_final: f64, y2_final: f64, decayed: bool },
}

impl Lemma41Verdict {
    pub fn decayed(&self) -> Option<bool> {
        match self {
            Lemma41Verdict::Integrated { decayed, .. } => Some(*decayed),
            Lemma41Verdict::Rejected { .. } => None,
        }
    }
}

/// Final values of the coupled equality system, sampled every `h`.
pub fn integrate_coupled(family: &CoupledFamily, y10: f64, y20: f64, horizon: f64, h: f64, tol: Tolerance) -> Result<SampledPair> {
    let steps = check_horizon(horizon, h)?;
    check_initial(y10)?;
    check_initial(y20)?;
    let dt = horizon / steps as f64;
    let mut y = [y10, y20];
    let mut log_scale = 0.0f64;
    let mut log_sup = y10.max(y20).ln();
    for k in 0..steps {
        let sys = ScaledPair { family, inv: (-log_scale).exp() };
        y = advance(&sys, k as f64 * dt, &y, dt, tol, 0)?;
        let top = y[0].max(y[1]);
        log_sup = log_sup.max(top.ln() + log_scale);
        let shift = if top > RESCALE_ABOVE {
            top.ln()
        } else if log_scale > 0.0 && top < 1.0 {
            // move back towards unit scale without letting a₄ overflow
            (top.max(f64::MIN_POSITIVE).ln()).max(-log_scale)
        } else {
            0.0
        };
        if shift != 0.0 {
            let factor = (-shift).exp();
            y = [y[0] * factor, y[1] * factor];
            log_scale += shift;
        }
    }
    let scale = log_scale.exp();
    Ok(SampledPair {
        y1_final: y[0] * scale,
        y2_final: y[1] * scale,
        log_y1_final: y[0].ln() + log_scale,
        log_y2_final: y[1].ln() + log_scale,
        log_sup,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampledPair {
    pub y1_final: f64,
    pub y2_final: f64,
    /// `ln Y₁(T)`, finite even when `Y₁(T)` overflows `f64`.
    pub log_y1_final: f64,
    pub log_y2_final: f64,
    /// `ln max_t max(Y₁(t), Y₂(t))`, finite even when the peak overflows `f64`.
    pub log_sup: f64,
}

/// Checks the hypotheses and integrates the coupled equality system.
pub fn check_lemma41(family: &CoupledFamily, y10: f64, y20: f64, horizon: f64, h: f64) -> Result<Lemma41Verdict> {
    let violations = family.hypothesis_violations(horizon);
    if !violations.is_empty() {
        return Ok(Lemma41Verdict::Rejected { violations });
    }
    let r = integrate_coupled(family, y10, y20, horizon, h, Tolerance::default())?;
    Ok(Lemma41Verdict::Integrated {
        y1_final: r.y1_final,
        y2_final: r.y2_final,
        decayed: has_decayed(y10, r.y1_final) && has_decayed(y20, r.y2_final),
    })
}

/// Relative change of the final values when the output step is halved.
pub fn refinement_gap(family: &CoupledFamily, y10: f64, y20: f64, horizon: f64, h: f64) -> Result<f64> {
    let coarse = integrate_coupled(family, y10, y20, horizon, h, Tolerance::default())?;
    let fine = integrate_coupled(family, y10, y20, horizon, 0.5 * h, Tolerance::default())?;
    // relative difference from logs, so overflowing values still compare
    let rel = |a: f64, b: f64| if a == b { 0.0 } else { (a - b).exp_m1().abs() };
    Ok(rel(coarse.log_y1_final, fine.log_y1_final).max(rel(coarse.log_y2_final, fine.log_y2_final)))
}

/// Problem constants entering the tracking instantiation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackingConstants {
    pub lambda2: f64,
    pub kappa: f64,
    pub kappa2: f64,
    pub sigma_v: f64,
    pub c_v: f64,
    /// `‖x*‖²`.
    pub x_star_sq: f64,
}

/// Coupled family of the tracking algorithm for power-law gains `β₁, β₂, β₃`
/// and a vanishing disturbance `B(t)`.
pub fn tracking_family(gains: &TrackingGains<f64>, c: TrackingConstants, b: CoefficientPath) -> CoupledFamily {
    let pl = |scale: f64, g: [&crate::gains::PowerLawGain<f64>; 3], mask: [u8; 3]| {
        let (mut s, mut e) = (scale, 0.0);
        for (gain, &m) in g.iter().zip(&mask) {
            s *= gain.scale().powi(m as i32);
            e += gain.exponent() * m as f64;
        }
        Shape::PowerLaw { scale: s, exponent: e }
    };
    let g = [&gains.beta1, &gains.beta2, &gains.beta3];
    let (k2, s2, cv2) = (c.kappa * c.kappa, c.sigma_v * c.sigma_v, c.c_v * c.c_v);
    let sum = |terms: Vec<Shape>| CoefficientPath::new(Shape::Sum(terms));
    let a1 = CoefficientPath::new(pl(2.0 * c.lambda2, g, [0, 0, 1])).positive();
    let a2 = sum(vec![
        pl(1.0, g, [1, 0, 0]),
        pl(2.0 + 4.0 * k2, g, [1, 1, 0]),
        pl(6.0, g, [1, 0, 1]),
        pl(3.0 * (2.0 + 8.0 * s2), g, [1, 1, 1]),
        pl(24.0 * s2, g, [0, 1, 1]),
    ]);
    let a3 = sum(vec![
        pl(4.0 * k2, g, [1, 1, 0]),
        pl(6.0, g, [1, 0, 1]),
        pl(3.0 * (2.0 + 8.0 * s2), g, [1, 1, 1]),
        pl(24.0 * s2, g, [0, 1, 1]),
    ]);
    let with_b = |s: Shape| Shape::Product(vec![s, b.shape.clone()]);
    let x2 = c.x_star_sq;
    let a4 = sum(vec![
        with_b(pl(2.0 * k2, g, [1, 1, 0])),
        with_b(pl(4.0 * k2, g, [1, 1, 1])),
        with_b(pl(4.0 * k2, g, [0, 1, 1])),
        pl(2.0 * s2 * x2, g, [1, 1, 0]),
        pl(3.0 * (2.0 + 8.0 * s2) * x2, g, [1, 1, 1]),
        pl(6.0 * x2, g, [1, 0, 1]),
        pl(24.0 * s2 * x2, g, [0, 1, 1]),
        pl(2.0 * cv2, g, [1, 1, 0]),
        pl(8.0 * cv2, g, [1, 1, 1]),
        pl(8.0 * cv2, g, [0, 1, 1]),
    ]);
    let b1 = CoefficientPath::new(pl(2.0 * c.kappa2, g, [1, 1, 0])).positive();
    let b2 = CoefficientPath::new(pl(2.0 * std::f64::consts::SQRT_2 * c.kappa, g, [1, 1, 0]));
    CoupledFamily { a1, a2, a3, a4, b1, b2, y3: b }
}

/// One scalar comparison case.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarCase {
    pub name: String,
    pub a1: CoefficientPath,
    pub a2: CoefficientPath,
    pub a3: CoefficientPath,
    pub y0: f64,
    pub horizon: f64,
    pub h: f64,
}

impl ScalarCase {
    pub fn check(&self) -> Result<Lemma22Verdict> {
        check_lemma22(&self.a1, &self.a2, &self.a3, self.y0, self.horizon, self.h)
    }
}

/// One coupled comparison case.
#[derive(Debug, Clone, PartialEq)]
pub struct CoupledCase {
    pub name: String,
    pub family: CoupledFamily,
    pub y10: f64,
    pub y20: f64,
    pub horizon: f64,
    pub h: f64,
}

impl CoupledCase {
    pub fn check(&self) -> Result<Lemma41Verdict> {
        check_lemma41(&self.family, self.y10, self.y20, self.horizon, self.h)
    }
}

/// Random constant triples with `a₁ ∈ [0.1, 10]`, `a₂, a₃ ∈ [0, 10]`, `y₀ ∈ [0, 100]`.
pub fn constant_scalar_cases(count: usize, seed: u64) -> Vec<ScalarCase> {
    (0..count)
        .map(|k| {
            let mut s = stream(seed, k as u64, 0, Channel::Aux);
            let (a1, a2, a3, y0) = (s.uniform(0.1, 10.0), s.uniform(0.0, 10.0), s.uniform(0.0, 10.0), s.uniform(0.0, 100.0));
            ScalarCase {
                name: format!("constant-{k}"),
                a1: CoefficientPath::constant(a1),
                a2: CoefficientPath::constant(a2),
                a3: CoefficientPath::constant(a3),
                y0,
                horizon: 50.0,
                h: 0.01,
            }
        })
        .collect()
}

/// Power-law cases, including the shapes of the SGD consensus argument:
/// `a₁ = 2κ₂α₂`, `a₂ = c₂α₂`, `a₃ = c₃α₂ + c₄α₂²` with `α₂ = (1 + t)^(−3/4)`.
pub fn power_law_scalar_cases() -> Vec<ScalarCase> {
    let pl = CoefficientPath::power_law;
    let sum = |a: CoefficientPath, b: CoefficientPath| CoefficientPath::new(Shape::Sum(vec![a.shape, b.shape]));
    let sgd = |name: &str, kappa2: f64, c2: f64, c3: f64, c4: f64, y0: f64| ScalarCase {
        name: name.into(),
        a1: pl(2.0 * kappa2, 0.75),
        a2: pl(c2, 0.75),
        a3: sum(pl(c3, 0.75), pl(c4, 1.5)),
        y0,
        horizon: 200.0,
        h: 0.05,
    };
    let generic = |name: &str, a1: CoefficientPath, a2: CoefficientPath, a3: CoefficientPath, y0: f64| ScalarCase {
        name: name.into(),
        a1,
        a2,
        a3,
        y0,
        horizon: 200.0,
        h: 0.05,
    };
    vec![
        sgd("sgd-unit", 1.0, 2.0, 3.0, 1.0, 0.0),
        sgd("sgd-weak-convexity", 0.2, 4.4, 7.9, 3.0, 5.0),
        sgd("sgd-large-start", 1.0, 2.0, 3.0, 1.0, 80.0),
        sgd("sgd-noise-dominated", 0.5, 1.0, 12.0, 6.0, 1.0),
        generic("slow-a1", pl(1.0, 0.3), pl(2.0, 0.5), pl(1.0, 0.8), 2.0),
        generic("growing-ratio", pl(1.0, 0.8), pl(1.0, 0.4), pl(1.0, 0.6), 0.0),
        generic("decaying-forcing", pl(2.0, 0.5), pl(0.5, 1.0), pl(4.0, 1.5), 10.0),
        generic("no-sqrt-term", pl(1.5, 0.6), CoefficientPath::zero(), pl(3.0, 0.6), 0.5),
        generic("exp-forcing", pl(1.0, 0.5), CoefficientPath::exp_decay(3.0, 0.1), pl(1.0, 0.5), 0.0),
        generic(
            "piecewise-a2",
            pl(1.0, 0.25),
            CoefficientPath::piecewise(vec![0.0, 20.0, 60.0, 200.0], vec![0.0, 5.0, 1.0, 2.0]),
            pl(0.5, 0.5),
            3.0,
        ),
    ]
}

/// Random admissible power-law families for the coupled lemma, integrated to
/// `T = 10⁴` at output step `0.1`.
pub fn admissible_coupled_cases(count: usize, seed: u64) -> Vec<CoupledCase> {
    (0..count)
        .map(|k| {
            let mut s = stream(seed, k as u64, 1, Channel::Aux);
            let (s1, g1) = (s.uniform(0.5, 2.0), s.uniform(0.1, 0.5));
            let pl = CoefficientPath::power_law;
            let a2 = pl(s1 * s.uniform(0.0, 0.5), g1 + s.uniform(0.3, 0.8));
            let a3 = pl(s.uniform(0.0, 1.0), g1 + s.uniform(0.3, 0.8));
            let a4 = pl(s.uniform(0.0, 1.0), g1 + s.uniform(1.0, 1.5));
            let (sb, gb) = (s.uniform(0.5, 2.0), s.uniform(0.1, 0.5));
            let b2 = pl(sb * s.uniform(0.0, 1.0), gb + s.uniform(0.0, 0.5));
            let y3 = pl(s.uniform(0.0, 1.0), s.uniform(0.75, 1.5));
            let (y10, y20) = (s.uniform(0.5, 5.0), s.uniform(0.5, 5.0));
            CoupledCase {
                name: format!("admissible-{k}"),
                family: CoupledFamily {
                    a1: pl(s1, g1).positive(),
                    a2,
                    a3,
                    a4,
                    b1: pl(sb, gb).positive(),
                    b2,
                    y3,
                },
                y10,
                y20,
                horizon: 1e4,
                h: 0.1,
            }
        })
        .collect()
}

/// Families that break one hypothesis each, starting with `∫a₁ < ∞`.
pub fn inadmissible_coupled_cases() -> Vec<CoupledCase> {
    let pl = CoefficientPath::power_law;
    let base = CoupledFamily {
        a1: pl(1.0, 0.5).positive(),
        a2: pl(0.2, 1.0),
        a3: pl(0.5, 1.0),
        a4: pl(0.5, 1.6),
        b1: pl(1.0, 0.4).positive(),
        b2: pl(0.5, 0.4),
        y3: pl(1.0, 1.0),
    };
    let case = |name: &str, edit: &dyn Fn(&mut CoupledFamily)| {
        let mut family = base.clone();
        edit(&mut family);
        CoupledCase { name: name.into(), family, y10: 1.0, y20: 1.0, horizon: 1e4, h: 0.1 }
    };
    vec![
        case("integrable-a1", &|f| f.a1 = pl(1.0, 1.5).positive()),
        case("integrable-a1-exp", &|f| f.a1 = CoefficientPath::exp_decay(1.0, 0.01).positive()),
        case("integrable-b1", &|f| {
            f.b1 = pl(1.0, 1.2).positive();
            f.b2 = pl(0.5, 1.2);
        }),
        case("b2-outgrows-b1", &|f| f.b2 = pl(0.5, 0.1)),
        case("persistent-y3", &|f| f.y3 = CoefficientPath::constant(0.1)),
        case("a2-matches-a1", &|f| f.a2 = pl(0.5, 0.5)),
    ]
}

#[cfg(test)]
mod tests;
