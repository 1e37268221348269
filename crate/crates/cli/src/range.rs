//! Inclusive `min:max:steps` activity ranges with linear or log spacing.

use std::str::FromStr;

use crate::CmdError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaRange {
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

impl FromStr for LambdaRange {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(format!("expected min:max:steps, got '{s}'"));
        }
        let min: f64 = parts[0].parse().map_err(|_| format!("bad range minimum '{}'", parts[0]))?;
        let max: f64 = parts[1].parse().map_err(|_| format!("bad range maximum '{}'", parts[1]))?;
        let steps: usize =
            parts[2].parse().map_err(|_| format!("bad range step count '{}'", parts[2]))?;
        Ok(Self { min, max, steps })
    }
}

impl LambdaRange {
    pub fn validate(&self) -> Result<(), CmdError> {
        if !(self.min > 0.0) || !self.min.is_finite() || !self.max.is_finite() {
            return Err(CmdError::Usage(format!(
                "activities must be positive and finite, got {}:{}",
                self.min, self.max
            )));
        }
        if self.steps < 1 {
            return Err(CmdError::Usage("a range needs at least one step".into()));
        }
        if self.steps == 1 {
            if self.max != self.min {
                return Err(CmdError::Usage(
                    "a single-step range must have max equal to min".into(),
                ));
            }
        } else if !(self.max > self.min) {
            return Err(CmdError::Usage(format!(
                "range maximum {} must exceed minimum {}",
                self.max, self.min
            )));
        }
        Ok(())
    }

    /// Grid values, endpoints included.
    pub fn values(&self, log: bool) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.min];
        }
        let n = self.steps;
        (0..n)
            .map(|i| {
                let f = i as f64 / (n - 1) as f64;
                if log {
                    (self.min.ln() + (self.max.ln() - self.min.ln()) * f).exp()
                } else {
                    self.min + (self.max - self.min) * f
                }
            })
            .collect()
    }
}
