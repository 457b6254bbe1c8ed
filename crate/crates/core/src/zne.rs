//! Richardson extrapolation to the zero-noise limit.
//!
//! Given estimates `E(cᵢλ)` at stretch factors `c₀ = 1 < c₁ < … < cₙ`, the
//! combination `Σ γᵢ E(cᵢλ)` with `Σ γᵢ = 1` and `Σ γᵢ cᵢᵏ = 0` for
//! `k = 1..n` cancels the first `n` orders of the noise expansion. The
//! weights have the closed form `γᵢ = Π_{j≠i} cⱼ / (cⱼ - cᵢ)`.
//!
//! Results are never clamped: a mitigated value outside the physical range
//! of the observable is a useful diagnostic, not an error.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Vandermonde condition number above which a warning is attached.
pub const ILL_CONDITIONED: f64 = 1e12;

/// Strictly increasing stretch factors starting at exactly 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct StretchSet(Vec<f64>);

impl StretchSet {
    pub fn new(factors: Vec<f64>) -> Result<Self> {
        if let Some(v) = Self::violations(&factors).into_iter().next() {
            return Err(Error::validation(v.0, v.1));
        }
        Ok(StretchSet(factors))
    }

    /// All rule violations of a candidate list, as `(code, message)`.
    pub fn violations(factors: &[f64]) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        match factors.first() {
            None => out.push(("stretch.empty", "stretch list is empty".to_string())),
            Some(&c) if c != 1.0 => out.push((
                "stretch.first_must_be_1",
                format!("first stretch factor is {c}, expected 1"),
            )),
            _ => {}
        }
        if factors.iter().any(|c| !c.is_finite()) {
            out.push(("stretch.not_finite", "stretch factors must be finite".into()));
        }
        if factors.windows(2).any(|w| w[1] == w[0]) {
            out.push(("stretch.duplicate", "stretch factors must be distinct".into()));
        } else if factors.windows(2).any(|w| !(w[1] > w[0])) {
            out.push((
                "stretch.not_increasing",
                "stretch factors must be strictly increasing".into(),
            ));
        }
        out
    }

    pub fn factors(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn order(&self) -> usize {
        self.0.len() - 1
    }
}

impl TryFrom<Vec<f64>> for StretchSet {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        StretchSet::new(v)
    }
}

impl From<StretchSet> for Vec<f64> {
    fn from(s: StretchSet) -> Vec<f64> {
        s.0
    }
}

impl std::str::FromStr for StretchSet {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let factors = s
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::usage(format!("bad stretch factor '{t}'")))
            })
            .collect::<Result<Vec<_>>>()?;
        StretchSet::new(factors)
    }
}

/// Extrapolation weights plus conditioning diagnostics.
#[derive(Clone, Debug, PartialEq)]
pub struct Coefficients {
    pub gammas: Vec<f64>,
    pub condition_number: f64,
    pub warning: Option<String>,
}

/// Richardson weights for `factors` (distinct, any order).
pub fn coefficients_for(factors: &[f64]) -> Result<Coefficients> {
    if factors.is_empty() {
        return Err(Error::usage("need at least one stretch factor"));
    }
    for (i, a) in factors.iter().enumerate() {
        if factors[..i].contains(a) {
            return Err(Error::usage(format!("duplicate stretch factor {a}")));
        }
    }
    let gammas: Vec<f64> = (0..factors.len())
        .map(|i| {
            factors
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, &cj)| cj / (cj - factors[i]))
                .product()
        })
        .collect();
    let condition_number = vandermonde_condition(factors);
    let warning = (condition_number > ILL_CONDITIONED).then(|| {
        format!("ill-conditioned stretch set (condition number {condition_number:.3e})")
    });
    Ok(Coefficients {
        gammas,
        condition_number,
        warning,
    })
}

pub fn coefficients(stretch: &StretchSet) -> Coefficients {
    coefficients_for(stretch.factors()).expect("stretch set factors are distinct")
}

/// 2-norm condition number of the matrix `V[k][i] = cᵢᵏ`.
fn vandermonde_condition(factors: &[f64]) -> f64 {
    let n = factors.len();
    let v = DMatrix::from_fn(n, n, |k, i| factors[i].powi(k as i32));
    let sv = v.singular_values();
    let max = sv.max();
    let min = sv.min();
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// One measured point: stretch factor, estimate, and its variance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub c: f64,
    pub estimate: f64,
    pub variance: f64,
}

impl Measurement {
    pub fn new(c: f64, estimate: f64, variance: f64) -> Self {
        Measurement {
            c,
            estimate,
            variance,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MitigatedEstimate {
    pub value: f64,
    pub variance: f64,
    pub order: usize,
    pub coefficients: Vec<f64>,
    pub inputs: Vec<Measurement>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

impl MitigatedEstimate {
    /// Builds an estimate from linear weights over the inputs.
    pub fn from_weights(
        inputs: Vec<Measurement>,
        weights: Vec<f64>,
        order: usize,
        warning: Option<String>,
    ) -> Result<Self> {
        let value = inputs
            .iter()
            .zip(&weights)
            .map(|(m, g)| g * m.estimate)
            .sum();
        let variances: Vec<f64> = inputs.iter().map(|m| m.variance).collect();
        let variance = variance_of(&weights, &variances)?;
        Ok(MitigatedEstimate {
            value,
            variance,
            order,
            coefficients: weights,
            inputs,
            warning,
        })
    }

    pub fn std_error(&self) -> f64 {
        self.variance.sqrt()
    }

    /// Unmitigated input at the smallest stretch factor.
    pub fn raw(&self) -> &Measurement {
        &self.inputs[0]
    }
}

/// Richardson extrapolation of order `measurements.len() - 1`.
pub fn extrapolate(measurements: &[Measurement]) -> Result<MitigatedEstimate> {
    if measurements.is_empty() {
        return Err(Error::usage("extrapolation needs at least one measurement"));
    }
    let mut inputs = measurements.to_vec();
    inputs.sort_by(|a, b| a.c.total_cmp(&b.c));
    let factors: Vec<f64> = inputs.iter().map(|m| m.c).collect();
    StretchSet::new(factors.clone()).map_err(|e| Error::usage(e.to_string()))?;
    let coeffs = coefficients_for(&factors)?;
    let order = inputs.len() - 1;
    MitigatedEstimate::from_weights(inputs, coeffs.gammas, order, coeffs.warning)
}

/// `Σ γᵢ² σᵢ²` for independent inputs.
pub fn variance_of(coefficients: &[f64], variances: &[f64]) -> Result<f64> {
    if coefficients.len() != variances.len() {
        return Err(Error::usage(format!(
            "{} coefficients but {} variances",
            coefficients.len(),
            variances.len()
        )));
    }
    if let Some(v) = variances.iter().find(|v| !(**v >= 0.0)) {
        return Err(Error::usage(format!("variance {v} must be ≥ 0")));
    }
    Ok(coefficients
        .iter()
        .zip(variances)
        .map(|(g, v)| g * g * v)
        .sum())
}

/// Fitted straight line `E(c) ≈ intercept + slope · c`.
#[derive(Clone, Debug, PartialEq)]
pub struct LineFit {
    pub intercept: MitigatedEstimate,
    pub slope: f64,
}

/// Weighted least-squares line through the points, extrapolated to `c = 0`.
///
/// Weights are `1/σᵢ²` when every variance is positive and uniform
/// otherwise. The intercept is linear in the estimates, so its weights and
/// propagated variance are reported like a Richardson estimate of order 1.
pub fn wls_line(measurements: &[Measurement]) -> Result<LineFit> {
    if measurements.len() < 2 {
        return Err(Error::usage("a line fit needs at least two points"));
    }
    let mut inputs = measurements.to_vec();
    inputs.sort_by(|a, b| a.c.total_cmp(&b.c));
    if inputs.windows(2).any(|w| w[0].c == w[1].c) {
        return Err(Error::usage("line fit needs distinct stretch factors"));
    }
    let w: Vec<f64> = if inputs.iter().all(|m| m.variance > 0.0) {
        inputs.iter().map(|m| 1.0 / m.variance).collect()
    } else {
        vec![1.0; inputs.len()]
    };
    let sw: f64 = w.iter().sum();
    let sc: f64 = w.iter().zip(&inputs).map(|(w, m)| w * m.c).sum();
    let scc: f64 = w.iter().zip(&inputs).map(|(w, m)| w * m.c * m.c).sum();
    let det = sw * scc - sc * sc;
    // intercept = Σ gᵢ yᵢ, slope = Σ hᵢ yᵢ
    let g: Vec<f64> = w
        .iter()
        .zip(&inputs)
        .map(|(w, m)| w * (scc - sc * m.c) / det)
        .collect();
    let slope = w
        .iter()
        .zip(&inputs)
        .map(|(w, m)| w * (sw * m.c - sc) / det * m.estimate)
        .sum();
    let intercept = MitigatedEstimate::from_weights(inputs, g, 1, None)?;
    Ok(LineFit { intercept, slope })
}
