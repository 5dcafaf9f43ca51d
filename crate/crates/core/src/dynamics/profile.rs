//! Time-dependent stiffness `k(t)` of the oscillator.

use serde::{Deserialize, Serialize};

use super::DynamicsError;

/// The stiffness coefficient `k(t)` in `q̈ + k(t) q = 0`.
///
/// Profiles are plain values: evaluation is a pure function of the parameters
/// and `t`, so two equal profiles evaluate bit-identically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum StiffnessProfile {
    /// `k(t) = k0`.
    Constant { k0: f64 },
    /// `k(t) = a + q cos(omega t)`.
    Mathieu { a: f64, q: f64, omega: f64 },
    /// Linear interpolation through sorted `(t, k)` samples; no extrapolation.
    #[serde(alias = "piecewise-linear-table")]
    Table {
        #[serde(deserialize_with = "de_table")]
        points: Vec<(f64, f64)>,
    },
    /// `k(t) = c0 + c1 t + c2 t² + ...`.
    #[serde(alias = "polynomial-in-t")]
    Polynomial { coefficients: Vec<f64> },
}

fn de_table<'de, D>(deserializer: D) -> Result<Vec<(f64, f64)>, D::Error>
where
    D: serde::Deserializer<'de>,
{
    let points = Vec::<(f64, f64)>::deserialize(deserializer)?;
    validate_table(&points).map_err(serde::de::Error::custom)?;
    Ok(points)
}

fn validate_table(points: &[(f64, f64)]) -> Result<(), DynamicsError> {
    if points.len() < 2 {
        return Err(DynamicsError::InvalidProfile(format!(
            "table needs at least 2 points, got {}",
            points.len()
        )));
    }
    if points.iter().any(|(t, k)| !t.is_finite() || !k.is_finite()) {
        return Err(DynamicsError::InvalidProfile("table entries must be finite".into()));
    }
    if let Some(w) = points.windows(2).find(|w| w[1].0 <= w[0].0) {
        return Err(DynamicsError::InvalidProfile(format!(
            "table times must be strictly increasing ({} followed by {})",
            w[0].0, w[1].0
        )));
    }
    Ok(())
}

impl StiffnessProfile {
    pub fn constant(k0: f64) -> Self {
        StiffnessProfile::Constant { k0 }
    }

    pub fn mathieu(a: f64, q: f64, omega: f64) -> Self {
        StiffnessProfile::Mathieu { a, q, omega }
    }

    /// Builds a table profile, rejecting unsorted or too-short tables.
    pub fn table(points: Vec<(f64, f64)>) -> Result<Self, DynamicsError> {
        validate_table(&points)?;
        Ok(StiffnessProfile::Table { points })
    }

    pub fn polynomial(coefficients: Vec<f64>) -> Self {
        StiffnessProfile::Polynomial { coefficients }
    }

    /// Closed interval on which the profile is defined.
    pub fn domain(&self) -> (f64, f64) {
        match self {
            StiffnessProfile::Table { points } => (points[0].0, points[points.len() - 1].0),
            _ => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    /// Fails with a domain error if `[t0, t1]` is not inside the profile's domain.
    pub fn check_span(&self, t0: f64, t1: f64) -> Result<(), DynamicsError> {
        let (lo, hi) = self.domain();
        let (a, b) = if t0 <= t1 { (t0, t1) } else { (t1, t0) };
        if a < lo || b > hi {
            let t = if a < lo { a } else { b };
            return Err(DynamicsError::Domain { t, lo, hi });
        }
        Ok(())
    }

    /// Evaluates `k(t)`.
    pub fn eval(&self, t: f64) -> Result<f64, DynamicsError> {
        match self {
            StiffnessProfile::Table { points } => {
                let (lo, hi) = self.domain();
                if !(lo..=hi).contains(&t) {
                    return Err(DynamicsError::Domain { t, lo, hi });
                }
                // first index with time > t, clamped so the last sample still interpolates
                let idx = points.partition_point(|(ti, _)| *ti <= t).clamp(1, points.len() - 1);
                let (t0, k0) = points[idx - 1];
                let (t1, k1) = points[idx];
                let w = (t - t0) / (t1 - t0);
                Ok(k0 + w * (k1 - k0))
            }
            _ => Ok(self.eval_unchecked(t)),
        }
    }

    /// Evaluation without the domain check, for hot loops whose span was
    /// validated up front with [`StiffnessProfile::check_span`]. Table
    /// profiles clamp to their end values.
    pub fn eval_unchecked(&self, t: f64) -> f64 {
        match self {
            StiffnessProfile::Constant { k0 } => *k0,
            StiffnessProfile::Mathieu { a, q, omega } => a + q * (omega * t).cos(),
            StiffnessProfile::Table { .. } => {
                let (lo, hi) = self.domain();
                self.eval(t.clamp(lo, hi)).expect("clamped into domain")
            }
            StiffnessProfile::Polynomial { coefficients } => {
                coefficients.iter().rev().fold(0.0, |acc, c| acc * t + c)
            }
        }
    }
}
