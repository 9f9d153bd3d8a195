//! JSON sweep specification for the comparison checks.

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use graphopt::lemma_lab::{
    admissible_coupled_cases, constant_scalar_cases, decay_threshold, inadmissible_coupled_cases,
    power_law_scalar_cases, CoefficientPath, CoupledCase, CoupledFamily, Lemma41Verdict, ScalarCase, Shape,
};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    #[serde(default)]
    pub scalar: Vec<ScalarCaseSpec>,
    #[serde(default)]
    pub coupled: Vec<CoupledCaseSpec>,
}

/// `y′ = −a₁y + a₂√y + a₃`, `y(0) = y0`, on `[0, T]` with output step `h`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalarCaseSpec {
    pub case: String,
    pub a1: ShapeSpec,
    pub a2: ShapeSpec,
    pub a3: ShapeSpec,
    pub y0: f64,
    #[serde(rename = "T")]
    pub horizon: f64,
    pub h: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoupledCaseSpec {
    pub case: String,
    pub a1: ShapeSpec,
    pub a2: ShapeSpec,
    pub a3: ShapeSpec,
    pub a4: ShapeSpec,
    pub b1: ShapeSpec,
    pub b2: ShapeSpec,
    pub y3: ShapeSpec,
    pub y10: f64,
    pub y20: f64,
    #[serde(rename = "T")]
    pub horizon: f64,
    pub h: f64,
}

/// A coefficient path; a bare number is a constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ShapeSpec {
    Constant(f64),
    Shaped(ShapedSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ShapedSpec {
    PowerLaw { scale: f64, exponent: f64 },
    ExpDecay { scale: f64, rate: f64 },
    Piecewise { times: Vec<f64>, values: Vec<f64> },
    Sum { terms: Vec<ShapeSpec> },
    Product { terms: Vec<ShapeSpec> },
}

impl ShapeSpec {
    fn shape(&self) -> Shape {
        match self {
            ShapeSpec::Constant(c) => Shape::Constant(*c),
            ShapeSpec::Shaped(s) => match s {
                ShapedSpec::PowerLaw { scale, exponent } => Shape::PowerLaw { scale: *scale, exponent: *exponent },
                ShapedSpec::ExpDecay { scale, rate } => Shape::ExpDecay { scale: *scale, rate: *rate },
                ShapedSpec::Piecewise { times, values } => Shape::Piecewise { times: times.clone(), values: values.clone() },
                ShapedSpec::Sum { terms } => Shape::Sum(terms.iter().map(ShapeSpec::shape).collect()),
                ShapedSpec::Product { terms } => Shape::Product(terms.iter().map(ShapeSpec::shape).collect()),
            },
        }
    }

    fn path(&self) -> CoefficientPath {
        CoefficientPath::new(self.shape())
    }
}

impl From<&ScalarCaseSpec> for ScalarCase {
    fn from(s: &ScalarCaseSpec) -> Self {
        ScalarCase {
            name: s.case.clone(),
            a1: s.a1.path().positive(),
            a2: s.a2.path(),
            a3: s.a3.path(),
            y0: s.y0,
            horizon: s.horizon,
            h: s.h,
        }
    }
}

impl From<&CoupledCaseSpec> for CoupledCase {
    fn from(s: &CoupledCaseSpec) -> Self {
        CoupledCase {
            name: s.case.clone(),
            family: CoupledFamily {
                a1: s.a1.path().positive(),
                a2: s.a2.path(),
                a3: s.a3.path(),
                a4: s.a4.path(),
                b1: s.b1.path().positive(),
                b2: s.b2.path(),
                y3: s.y3.path(),
            },
            y10: s.y10,
            y20: s.y20,
            horizon: s.horizon,
            h: s.h,
        }
    }
}

/// Result for one case. `holds` is `None` when the hypotheses rejected it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaseVerdict {
    pub case: String,
    pub kind: &'static str,
    pub holds: Option<bool>,
    pub max_violation: Option<f64>,
    pub y_final: Vec<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub rejected_by: Vec<&'static str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl CaseVerdict {
    /// A case that was checked and did not hold, or could not be integrated.
    pub fn failed(&self) -> bool {
        self.holds == Some(false) || self.error.is_some()
    }
}

/// Asserts the envelope bound on the equality solution.
pub fn check_scalar(case: &ScalarCase) -> CaseVerdict {
    let mut v = CaseVerdict {
        case: case.name.clone(),
        kind: "scalar",
        holds: None,
        max_violation: None,
        y_final: vec![],
        rejected_by: vec![],
        error: None,
    };
    match case.check() {
        Ok(r) => {
            v.holds = Some(r.holds);
            v.max_violation = Some(r.max_relative_violation);
            v.y_final = vec![r.y_final];
        }
        Err(e) => v.error = Some(e.to_string()),
    }
    v
}

/// Asserts decay of the coupled pair, or reports the rejected hypotheses.
/// `max_violation` is the larger final value minus its decay threshold.
pub fn check_coupled(case: &CoupledCase) -> CaseVerdict {
    let mut v = CaseVerdict {
        case: case.name.clone(),
        kind: "coupled",
        holds: None,
        max_violation: None,
        y_final: vec![],
        rejected_by: vec![],
        error: None,
    };
    match case.check() {
        Ok(Lemma41Verdict::Rejected { violations }) => v.rejected_by = violations,
        Ok(Lemma41Verdict::Integrated { y1_final, y2_final, decayed }) => {
            v.holds = Some(decayed);
            v.max_violation =
                Some((y1_final - decay_threshold(case.y10)).max(y2_final - decay_threshold(case.y20)));
            v.y_final = vec![y1_final, y2_final];
        }
        Err(e) => v.error = Some(e.to_string()),
    }
    v
}

pub const DEFAULT_CONSTANT_CASES: usize = 100;
pub const DEFAULT_COUPLED_CASES: usize = 20;

/// Built-in sweep: random constant and power-law scalar cases, random
/// admissible coupled families and the inadmissible set.
pub fn default_cases(seed: u64) -> (Vec<ScalarCase>, Vec<CoupledCase>) {
    let scalar = constant_scalar_cases(DEFAULT_CONSTANT_CASES, seed).into_iter().chain(power_law_scalar_cases()).collect();
    let coupled = admissible_coupled_cases(DEFAULT_COUPLED_CASES, seed).into_iter().chain(inadmissible_coupled_cases()).collect();
    (scalar, coupled)
}

pub fn cases_from(spec: &SweepSpec) -> (Vec<ScalarCase>, Vec<CoupledCase>) {
    (spec.scalar.iter().map(Into::into).collect(), spec.coupled.iter().map(Into::into).collect())
}

pub fn read_sweep(path: &str) -> Result<SweepSpec> {
    crate::config::read_config(path).context("sweep specification")
}
