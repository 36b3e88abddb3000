//! Lower confidence bounds on keyword-match precision from a reviewed sample.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundMethod {
    /// Normal approximation, p̂ − z·sqrt(p̂(1−p̂)/n).
    Wald,
    /// Wilson score interval lower endpoint.
    Wilson,
}

/// Which normal quantile backs the bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tail {
    /// z = Φ⁻¹(1 − (1 − c)/2): lower end of a two-sided interval.
    TwoSided,
    /// z = Φ⁻¹(c): a one-sided lower bound.
    OneSided,
}

impl BoundMethod {
    /// Wald defaults to the two-sided quantile, Wilson to a one-sided bound.
    pub fn default_tail(self) -> Tail {
        match self {
            BoundMethod::Wald => Tail::TwoSided,
            BoundMethod::Wilson => Tail::OneSided,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PrecisionError {
    #[error("sample size must be at least 1")]
    EmptySample,
    #[error("{errors} errors exceed sample size {n}")]
    TooManyErrors { n: u64, errors: u64 },
    #[error("confidence {0} is not in (0, 1)")]
    Confidence(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrecisionBound {
    pub lower: f64,
    pub point: f64,
    pub z: f64,
    /// p̂ is 0 or 1 under Wald: the interval has zero width and Wilson
    /// should be preferred.
    pub degenerate: bool,
}

pub fn precision_lower_bound(
    n: u64,
    errors: u64,
    confidence: f64,
    method: BoundMethod,
) -> Result<PrecisionBound, PrecisionError> {
    precision_lower_bound_with_tail(n, errors, confidence, method, method.default_tail())
}

pub fn precision_lower_bound_with_tail(
    n: u64,
    errors: u64,
    confidence: f64,
    method: BoundMethod,
    tail: Tail,
) -> Result<PrecisionBound, PrecisionError> {
    if n == 0 {
        return Err(PrecisionError::EmptySample);
    }
    if errors > n {
        return Err(PrecisionError::TooManyErrors { n, errors });
    }
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(PrecisionError::Confidence(confidence));
    }
    let z = z_score(confidence, tail);
    let nf = n as f64;
    let p = (n - errors) as f64 / nf;
    let bound = match method {
        BoundMethod::Wald => {
            let degenerate = errors == 0 || errors == n;
            PrecisionBound {
                lower: (p - z * (p * (1.0 - p) / nf).sqrt()).max(0.0),
                point: p,
                z,
                degenerate,
            }
        }
        BoundMethod::Wilson => {
            let z2 = z * z;
            let denom = 1.0 + z2 / nf;
            let centre = (p + z2 / (2.0 * nf)) / denom;
            let half = z / denom * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt();
            PrecisionBound {
                lower: (centre - half).max(0.0),
                point: p,
                z,
                degenerate: false,
            }
        }
    };
    Ok(bound)
}

fn z_score(confidence: f64, tail: Tail) -> f64 {
    let normal = Normal::standard();
    match tail {
        Tail::TwoSided => normal.inverse_cdf(1.0 - (1.0 - confidence) / 2.0),
        Tail::OneSided => normal.inverse_cdf(confidence),
    }
}
