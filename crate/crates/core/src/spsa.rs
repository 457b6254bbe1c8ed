//! Simultaneous perturbation stochastic approximation.
//!
//! Each iteration perturbs all parameters at once along a random ±1
//! direction `Δ` and estimates the gradient from two objective values:
//!
//! ```text
//! ĝₖ = (y(θ + cₖΔ) - y(θ - cₖΔ)) / (2cₖ) · Δ⁻¹
//! aₖ = a / (k + 1 + A)^α,   cₖ = c / (k + 1)^γ
//! ```

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::stream_rng;

/// Stream used for perturbation directions.
const DIRECTION_STREAM: u64 = 0x5e5a_0001;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpsaConfig {
    /// Step gain; calibrated from the first gradients when absent.
    pub a: Option<f64>,
    /// Perturbation size.
    pub c: f64,
    pub alpha: f64,
    pub gamma_exp: f64,
    /// Stability constant; `0.1 · iterations` when absent.
    #[serde(rename = "A")]
    pub big_a: Option<f64>,
    pub iterations: usize,
    pub seed: u64,
    pub averaging_window: usize,
    /// Desired magnitude of the first parameter update, used to calibrate `a`.
    pub first_step: f64,
    /// Gradient samples for the calibration of `a`.
    pub calibration_samples: usize,
}

impl Default for SpsaConfig {
    fn default() -> Self {
        SpsaConfig {
            a: None,
            c: 0.1,
            alpha: 0.602,
            gamma_exp: 0.101,
            big_a: None,
            iterations: 200,
            seed: 0,
            averaging_window: 25,
            first_step: 0.1,
            calibration_samples: 10,
        }
    }
}

impl SpsaConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |code: &str, msg: String| Err(Error::validation(code, msg));
        if let Some(a) = self.a {
            if !(a >= 0.0 && a.is_finite()) {
                return bad("spsa.a_negative", format!("a = {a} must be ≥ 0"));
            }
        }
        if !(self.c > 0.0) {
            return bad("spsa.c_not_positive", format!("c = {} must be > 0", self.c));
        }
        if self.iterations < self.averaging_window || self.averaging_window == 0 {
            return bad(
                "spsa.window_exceeds_iterations",
                format!(
                    "averaging window {} must be in 1..={}",
                    self.averaging_window, self.iterations
                ),
            );
        }
        Ok(())
    }

    pub fn stability(&self) -> f64 {
        self.big_a.unwrap_or(0.1 * self.iterations as f64)
    }

    pub fn gain_a(&self, a: f64, k: usize) -> f64 {
        a / (k as f64 + 1.0 + self.stability()).powf(self.alpha)
    }

    pub fn gain_c(&self, k: usize) -> f64 {
        self.c / (k as f64 + 1.0).powf(self.gamma_exp)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpsaStep {
    /// Parameters after this iteration's update.
    pub theta: Vec<f64>,
    pub y_plus: f64,
    pub y_minus: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpsaRun {
    pub a: f64,
    pub history: Vec<SpsaStep>,
    pub final_controls: Vec<f64>,
}

pub fn random_direction(dim: usize, rng: &mut impl Rng) -> Vec<f64> {
    (0..dim)
        .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
        .collect()
}

/// Two-point gradient estimate along `delta`; returns the estimate and the
/// two objective values.
pub fn gradient_estimate<F>(
    objective: &mut F,
    theta: &[f64],
    ck: f64,
    delta: &[f64],
    eval_index: u64,
) -> Result<(Vec<f64>, f64, f64)>
where
    F: FnMut(&[f64], u64) -> Result<f64>,
{
    let plus: Vec<f64> = theta.iter().zip(delta).map(|(t, d)| t + ck * d).collect();
    let minus: Vec<f64> = theta.iter().zip(delta).map(|(t, d)| t - ck * d).collect();
    let yp = objective(&plus, 2 * eval_index)?;
    let ym = objective(&minus, 2 * eval_index + 1)?;
    let scale = (yp - ym) / (2.0 * ck);
    Ok((delta.iter().map(|d| scale / d).collect(), yp, ym))
}

/// Minimizes `objective(θ, evaluation index)`.
///
/// The evaluation index is unique per call so a stochastic objective can
/// derive its own random stream from it.
pub fn spsa_optimize<F>(mut objective: F, config: &SpsaConfig, theta0: &[f64]) -> Result<SpsaRun>
where
    F: FnMut(&[f64], u64) -> Result<f64>,
{
    config.validate()?;
    let dim = theta0.len();
    let mut rng: ChaCha8Rng = stream_rng(config.seed, DIRECTION_STREAM);
    let mut eval: u64 = 0;
    let a = match config.a {
        Some(a) => a,
        None => {
            let c0 = config.gain_c(0);
            let mut total = 0.0;
            for _ in 0..config.calibration_samples.max(1) {
                let delta = random_direction(dim, &mut rng);
                let (g, yp, ym) = gradient_estimate(&mut objective, theta0, c0, &delta, eval)
                    .map_err(|e| nonfinite_at(e, 0))?;
                eval += 1;
                if !(yp.is_finite() && ym.is_finite()) {
                    return Err(Error::NonFiniteObjective { iteration: 0 });
                }
                total += g.iter().map(|x| x.abs()).sum::<f64>() / dim as f64;
            }
            let mean = total / config.calibration_samples.max(1) as f64;
            if mean > 0.0 {
                config.first_step * (1.0 + config.stability()).powf(config.alpha) / mean
            } else {
                0.0
            }
        }
    };
    let mut theta = theta0.to_vec();
    let mut history = Vec::with_capacity(config.iterations);
    for k in 0..config.iterations {
        let ck = config.gain_c(k);
        let ak = config.gain_a(a, k);
        let delta = random_direction(dim, &mut rng);
        let (g, yp, ym) = gradient_estimate(&mut objective, &theta, ck, &delta, eval)
            .map_err(|e| nonfinite_at(e, k))?;
        eval += 1;
        if !(yp.is_finite() && ym.is_finite()) {
            return Err(Error::NonFiniteObjective { iteration: k });
        }
        for (t, gi) in theta.iter_mut().zip(&g) {
            *t -= ak * gi;
        }
        history.push(SpsaStep {
            theta: theta.clone(),
            y_plus: yp,
            y_minus: ym,
        });
    }
    let final_controls = average_tail(&history, config.averaging_window);
    Ok(SpsaRun {
        a,
        history,
        final_controls,
    })
}

fn nonfinite_at(e: Error, iteration: usize) -> Error {
    match e {
        Error::NonFiniteObjective { .. } => Error::NonFiniteObjective { iteration },
        other => other,
    }
}

/// Mean of the last `window` parameter vectors.
pub fn average_tail(history: &[SpsaStep], window: usize) -> Vec<f64> {
    let tail = &history[history.len() - window..];
    let dim = tail[0].theta.len();
    (0..dim)
        .map(|i| tail.iter().map(|s| s.theta[i]).sum::<f64>() / window as f64)
        .collect()
}
