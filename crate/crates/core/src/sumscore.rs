//! Summated Usability Metric: four z-standardized usability measures combined
//! with weights into one score.

// Negated comparisons are deliberate: NaN must fail every range check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use crate::num::Real;
use crate::stats;

/// Terminal row of printed standard normal tables.
pub const Z_CLAMP: f64 = 3.49;
/// Midpoint of the 1..5 rating scale.
pub const RATING_MIDPOINT: f64 = 3.0;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SumError {
    #[error("E_DOMAIN: {0}")]
    Domain(String),
    #[error("E_ZERO_VARIANCE: {0}")]
    ZeroVariance(&'static str),
    #[error("E_BAD_WEIGHTS: weights sum to {0}, expected 1")]
    BadWeights(f64),
    #[error("E_BAD_INPUT: line {line}: {reason}")]
    BadInput { line: usize, reason: String },
}

impl SumError {
    pub fn code(&self) -> &'static str {
        match self {
            SumError::Domain(_) => "E_DOMAIN",
            SumError::ZeroVariance(_) => "E_ZERO_VARIANCE",
            SumError::BadWeights(_) => "E_BAD_WEIGHTS",
            SumError::BadInput { .. } => "E_BAD_INPUT",
        }
    }
}

/// Standard normal CDF.
pub fn norm_cdf<F: Real>(z: F) -> F {
    F::lit(0.5) * (-z / F::lit(std::f64::consts::SQRT_2)).erfc()
}

// Acklam's rational approximation coefficients.
// Kept digit for digit as published.
#[allow(clippy::excessive_precision)]
const A: [f64; 6] = [
    -3.969683028665376e+01,
    2.209460984245205e+02,
    -2.759285104469687e+02,
    1.383577518672690e+02,
    -3.066479806614716e+01,
    2.506628277459239e+00,
];
const B: [f64; 5] = [
    -5.447609879822406e+01,
    1.615858368580409e+02,
    -1.556989798598866e+02,
    6.680131188771972e+01,
    -1.328068155288572e+01,
];
const C: [f64; 6] = [
    -7.784894002430293e-03,
    -3.223964580411365e-01,
    -2.400758277161838e+00,
    -2.549732539343734e+00,
    4.374664141464968e+00,
    2.938163982698783e+00,
];
const D: [f64; 4] = [
    7.784695709041462e-03,
    3.224671290700398e-01,
    2.445134137142996e+00,
    3.754408661907416e+00,
];
const P_LOW: f64 = 0.02425;

fn poly<F: Real>(coeffs: &[f64], x: F) -> F {
    coeffs.iter().fold(F::zero(), |acc, &c| acc * x + F::lit(c))
}

/// Quantile of the standard normal distribution.
///
/// Acklam's approximation (relative error about 1.15e-9) followed by one
/// Halley step against the erfc-based CDF.
pub fn inv_norm_cdf<F: Real>(p: F) -> Result<F, SumError> {
    if !(p > F::zero() && p < F::one()) {
        return Err(SumError::Domain(format!("probability {p} outside (0, 1)")));
    }
    let one = F::one();
    let low = F::lit(P_LOW);
    let rational_tail = |q: F| {
        let q = (F::lit(-2.0) * q.ln()).sqrt();
        poly(&C, q) / (poly(&D, q) * q + one)
    };
    let x = if p < low {
        rational_tail(p)
    } else if p > one - low {
        -rational_tail(one - p)
    } else {
        let q = p - F::lit(0.5);
        let r = q * q;
        poly(&A, r) * q / (poly(&B, r) * r + one)
    };
    let e = norm_cdf(x) - p;
    let u = e * F::lit((2.0 * std::f64::consts::PI).sqrt()) * (x * x / F::lit(2.0)).exp();
    Ok(x - u / (one + x * u / F::lit(2.0)))
}

fn clamp_z<F: Real>(z: F) -> F {
    let c = F::lit(Z_CLAMP);
    z.max(-c).min(c)
}

/// z-equivalent of a proportion, with 0 and 1 mapped to the table bounds.
fn proportion_z<F: Real>(p: F) -> Result<F, SumError> {
    if p <= F::zero() {
        Ok(-F::lit(Z_CLAMP))
    } else if p >= F::one() {
        Ok(F::lit(Z_CLAMP))
    } else {
        inv_norm_cdf(p).map(clamp_z)
    }
}

fn ratio<F: Real>(part: u64, whole: u64, what: &str) -> Result<F, SumError> {
    if whole == 0 {
        return Err(SumError::Domain(format!("{what}: denominator must be >= 1")));
    }
    if part > whole {
        return Err(SumError::Domain(format!("{what}: {part} exceeds {whole}")));
    }
    let f = |n: u64| F::from_u64(n).expect("u64 fits in a float");
    Ok(f(part) / f(whole))
}

fn spread<F: Real>(xs: &[F], what: &'static str) -> Result<(F, F), SumError> {
    let mean = stats::mean(xs);
    let sd = stats::sample_std_dev(xs);
    match (mean, sd) {
        (Some(m), Some(sd)) if sd > F::zero() => Ok((m, sd)),
        (Some(_), Some(_)) => Err(SumError::ZeroVariance(what)),
        _ => Err(SumError::Domain(format!("{what}: need at least 2 values"))),
    }
}

/// `(ideal - mean) / sd` with the n-1 standard deviation.
pub fn z_task_time<F: Real>(times: &[F], ideal: F) -> Result<F, SumError> {
    if !(ideal > F::zero()) {
        return Err(SumError::Domain(format!("ideal time must be > 0, got {ideal}")));
    }
    if let Some(t) = times.iter().find(|t| !(**t >= F::zero()) || !t.is_finite()) {
        return Err(SumError::Domain(format!("task time {t} is not a non-negative number")));
    }
    let (mean, sd) = spread(times, "task times")?;
    Ok((ideal - mean) / sd)
}

pub fn z_error_rate<F: Real>(errors: u64, opportunities: u64) -> Result<F, SumError> {
    proportion_z(ratio::<F>(errors, opportunities, "error rate")?)
}

pub fn z_completion<F: Real>(completed: u64, attempted: u64) -> Result<F, SumError> {
    proportion_z(ratio::<F>(completed, attempted, "completion")?)
}

/// `(3 - mean) / sd`. Ratings above the midpoint give a negative z.
pub fn z_satisfaction<F: Real>(ratings: &[F]) -> Result<F, SumError> {
    if let Some(r) = ratings
        .iter()
        .find(|r| !(**r >= F::one() && **r <= F::lit(5.0)))
    {
        return Err(SumError::Domain(format!("rating {r} outside [1, 5]")));
    }
    let (mean, sd) = spread(ratings, "ratings")?;
    Ok((F::lit(RATING_MIDPOINT) - mean) / sd)
}

/// Order: time, error, completion, satisfaction.
pub fn equal_weights<F: Real>() -> [F; 4] {
    [F::lit(0.25); 4]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SumScore<F> {
    pub z_time: F,
    pub z_error: F,
    pub z_completion: F,
    pub z_satisfaction: F,
    pub weights: [F; 4],
    pub sum: F,
}

impl<F: Real> SumScore<F> {
    pub fn z_values(&self) -> [F; 4] {
        [self.z_time, self.z_error, self.z_completion, self.z_satisfaction]
    }

    pub fn weighted(&self) -> [F; 4] {
        let z = self.z_values();
        std::array::from_fn(|i| self.weights[i] * z[i])
    }
}

pub fn sum_score<F: Real>(
    z_time: F,
    z_error: F,
    z_completion: F,
    z_satisfaction: F,
    weights: [F; 4],
) -> Result<SumScore<F>, SumError> {
    let total = weights.iter().fold(F::zero(), |a, &w| a + w);
    let off = (total - F::one()).abs();
    if !(off.to_f64().unwrap_or(f64::INFINITY) <= 1e-9) {
        return Err(SumError::BadWeights(total.to_f64().unwrap_or(f64::NAN)));
    }
    let mut score = SumScore {
        z_time,
        z_error,
        z_completion,
        z_satisfaction,
        weights,
        sum: F::zero(),
    };
    score.sum = score.weighted().iter().fold(F::zero(), |a, &w| a + w);
    Ok(score)
}

/// Raw usability observations.
#[derive(Debug, Clone, PartialEq)]
pub struct SumInputs<F> {
    pub task_times_s: Vec<F>,
    pub ideal_time_s: F,
    pub errors: u64,
    pub error_opportunities: u64,
    pub completed_tasks: u64,
    pub attempted_tasks: u64,
    pub ratings: Vec<F>,
}

/// Score plus the literal error proportion, kept for transparency since the
/// z-equivalent alone hides it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SumReport<F> {
    pub score: SumScore<F>,
    pub error_ratio: F,
}

impl<F: Real> SumInputs<F> {
    pub fn score(&self, weights: [F; 4]) -> Result<SumReport<F>, SumError> {
        let score = sum_score(
            z_task_time(&self.task_times_s, self.ideal_time_s)?,
            z_error_rate(self.errors, self.error_opportunities)?,
            z_completion(self.completed_tasks, self.attempted_tasks)?,
            z_satisfaction(&self.ratings)?,
            weights,
        )?;
        Ok(SumReport {
            score,
            error_ratio: ratio(self.errors, self.error_opportunities, "error rate")?,
        })
    }
}

/// Parses the line-oriented `key=value` input of `tfpsum`. Lists are comma
/// separated. An optional `weights` key overrides the equal weighting.
pub fn parse_sum_inputs<F: Real>(text: &str) -> Result<(SumInputs<F>, [F; 4]), SumError> {
    let mut times = None;
    let mut ideal = None;
    let mut errors = None;
    let mut opportunities = None;
    let mut completed = None;
    let mut attempted = None;
    let mut ratings = None;
    let mut weights = None;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |reason: String| SumError::BadInput { line: i + 1, reason };
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| bad("expected key=value".into()))?;
        let (key, value) = (key.trim(), value.trim());
        let real = |s: &str| -> Result<F, SumError> {
            s.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .map(F::lit)
                .ok_or_else(|| bad(format!("{key}: {s:?} is not a number")))
        };
        let list = |s: &str| -> Result<Vec<F>, SumError> { s.split(',').map(real).collect() };
        let count = |s: &str| -> Result<u64, SumError> {
            s.parse()
                .map_err(|_| bad(format!("{key}: {s:?} is not a non-negative integer")))
        };
        match key {
            "task_times" => times = Some(list(value)?),
            "ideal_time" => ideal = Some(real(value)?),
            "errors" => errors = Some(count(value)?),
            "opportunities" => opportunities = Some(count(value)?),
            "completed" => completed = Some(count(value)?),
            "attempted" => attempted = Some(count(value)?),
            "ratings" => ratings = Some(list(value)?),
            "weights" => {
                let w = list(value)?;
                let w: [F; 4] = w
                    .try_into()
                    .map_err(|_| bad("weights needs exactly 4 values".into()))?;
                weights = Some(w);
            }
            other => return Err(bad(format!("unknown key {other:?}"))),
        }
    }
    let missing = |key: &str| SumError::BadInput {
        line: 0,
        reason: format!("missing key {key:?}"),
    };
    let inputs = SumInputs {
        task_times_s: times.ok_or_else(|| missing("task_times"))?,
        ideal_time_s: ideal.ok_or_else(|| missing("ideal_time"))?,
        errors: errors.ok_or_else(|| missing("errors"))?,
        error_opportunities: opportunities.ok_or_else(|| missing("opportunities"))?,
        completed_tasks: completed.ok_or_else(|| missing("completed"))?,
        attempted_tasks: attempted.ok_or_else(|| missing("attempted"))?,
        ratings: ratings.ok_or_else(|| missing("ratings"))?,
    };
    Ok((inputs, weights.unwrap_or_else(equal_weights)))
}

/// Four-row table of z and weighted z, then the SUM line.
pub fn render_table<F: Real>(report: &SumReport<F>) -> String {
    let labels = ["Task Time", "Error Rates", "Task Completion", "Satisfaction"];
    let z = report.score.z_values();
    let w = report.score.weighted();
    let mut out = format!("{:<16} {:>10} {:>14}\n", "Metric", "Z-Value", "Weighted Z");
    for i in 0..4 {
        out.push_str(&format!(
            "{:<16} {:>10.4} {:>14.4}\n",
            labels[i],
            z[i].to_f64().unwrap_or(f64::NAN),
            w[i].to_f64().unwrap_or(f64::NAN)
        ));
    }
    out.push_str(&format!(
        "{:<16} {:>10} {:>14.4}\n",
        "SUM",
        "",
        report.score.sum.to_f64().unwrap_or(f64::NAN)
    ));
    out.push_str(&format!(
        "error ratio {:.6}\n",
        report.error_ratio.to_f64().unwrap_or(f64::NAN)
    ));
    out
}
