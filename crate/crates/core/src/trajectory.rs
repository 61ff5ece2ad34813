//! Sampled solutions with their diagnostic series.

use crate::error::{Error, Result};
use crate::phase::PhaseState;

/// States at uniformly spaced times plus series recorded alongside them.
///
/// Every series, when present, has one entry per sample.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trajectory {
    pub samples: Vec<PhaseState>,
    /// One cumulative series per reservoir.
    pub reservoirs: Vec<Vec<f64>>,
    pub series_h: Option<Vec<f64>>,
    pub series_k: Option<Vec<f64>>,
    pub series_div: Option<Vec<f64>>,
}

impl Trajectory {
    /// Wraps bare samples after checking a fixed dimension and strictly
    /// increasing timestamps.
    pub fn from_samples(samples: Vec<PhaseState>) -> Result<Self> {
        if let Some(first) = samples.first() {
            let d = first.dim();
            for w in samples.windows(2) {
                if w[1].dim() != d {
                    return Err(Error::Dimension {
                        expected: d,
                        got: w[1].dim(),
                    });
                }
                if !(w[1].t > w[0].t) {
                    return Err(Error::InvalidArgument(format!(
                        "timestamps must increase strictly ({} then {})",
                        w[0].t, w[1].t
                    )));
                }
            }
        }
        Ok(Self {
            samples,
            ..Default::default()
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn dim(&self) -> Option<usize> {
        self.samples.first().map(PhaseState::dim)
    }

    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }

    /// Coordinate `i` over time.
    pub fn component(&self, i: usize) -> Vec<f64> {
        self.samples.iter().map(|s| s.x[i]).collect()
    }

    pub fn last(&self) -> Option<&PhaseState> {
        self.samples.last()
    }

    /// True when consecutive gaps agree to `1e-12` relative.
    pub fn is_uniform(&self) -> bool {
        let Some(h) = self.step() else { return true };
        self.samples
            .windows(2)
            .all(|w| ((w[1].t - w[0].t) - h).abs() <= 1e-12 * h.abs().max(w[1].t.abs()))
    }

    /// Gap between the first two samples.
    pub fn step(&self) -> Option<f64> {
        (self.samples.len() >= 2).then(|| self.samples[1].t - self.samples[0].t)
    }
}

/// `max_k |series[k] - series[0]|`, zero for an empty series and NaN if any
/// entry is NaN.
pub fn max_drift(series: &[f64]) -> f64 {
    let Some(first) = series.first() else { return 0.0 };
    let mut worst = 0.0f64;
    for v in series {
        let d = (v - first).abs();
        if d.is_nan() {
            return f64::NAN;
        }
        worst = worst.max(d);
    }
    worst
}
