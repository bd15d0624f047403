use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A uniformly sampled scalar signal.
///
/// Invariants: at least one sample, all samples finite, strictly positive
/// sample interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalSeries {
    values: Vec<f64>,
    dt: f64,
}

impl SignalSeries {
    pub fn new(values: Vec<f64>, dt: f64) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::SeriesTooShort { needed: 1, got: 0 });
        }
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "sample interval must be a positive finite number, got {dt}"
            )));
        }
        if let Some(step) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { step });
        }
        Ok(Self { values, dt })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Time of sample `i`, counted from zero.
    pub fn time_at(&self, i: usize) -> f64 {
        i as f64 * self.dt
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

/// Model output paired with per-sample validity flags.
///
/// Warm-up samples (and, for partially identified operators, samples whose
/// window touches never-updated entries) carry a zero fill value and a
/// `false` flag.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub series: SignalSeries,
    pub valid: Vec<bool>,
}

impl Prediction {
    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|v| **v).count()
    }
}
