//! Interval-valued series in bound form and center/range form.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Interval series stored as lower and upper bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalSeries {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl IntervalSeries {
    /// Validates `lower[t] <= upper[t]` for every `t` and equal, nonzero lengths.
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::LengthMismatch(format!(
                "lower has {} points, upper has {}",
                lower.len(),
                upper.len()
            )));
        }
        if lower.is_empty() {
            return Err(Error::InvalidSeries("series is empty".into()));
        }
        for (row, (&l, &u)) in lower.iter().zip(&upper).enumerate() {
            if !l.is_finite() || !u.is_finite() {
                return Err(Error::InvalidSeries(format!("non-finite bound at index {row}")));
            }
            if l > u {
                return Err(Error::BoundViolation { row, lower: l, upper: u });
            }
        }
        Ok(Self { lower, upper })
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn len(&self) -> usize {
        self.lower.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lower.is_empty()
    }

    /// `center = (lower + upper) / 2`, `range = (upper - lower) / 2`.
    pub fn to_center_range(&self) -> CenterRangeSeries {
        let center = self
            .lower
            .iter()
            .zip(&self.upper)
            .map(|(l, u)| (l + u) / 2.0)
            .collect();
        let range = self
            .lower
            .iter()
            .zip(&self.upper)
            .map(|(l, u)| (u - l) / 2.0)
            .collect();
        CenterRangeSeries { center, range }
    }
}

/// Interval series stored as center and (half-width) range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CenterRangeSeries {
    center: Vec<f64>,
    range: Vec<f64>,
}

impl CenterRangeSeries {
    pub fn new(center: Vec<f64>, range: Vec<f64>) -> Result<Self> {
        if center.len() != range.len() {
            return Err(Error::LengthMismatch(format!(
                "center has {} points, range has {}",
                center.len(),
                range.len()
            )));
        }
        if center.is_empty() {
            return Err(Error::InvalidSeries("series is empty".into()));
        }
        if let Some((index, &value)) = range.iter().enumerate().find(|(_, r)| !(**r >= 0.0)) {
            return Err(Error::NegativeRange { index, value });
        }
        Ok(Self { center, range })
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn range(&self) -> &[f64] {
        &self.range
    }

    pub fn len(&self) -> usize {
        self.center.len()
    }

    pub fn is_empty(&self) -> bool {
        self.center.is_empty()
    }

    /// Recovers the bounds: `lower = center - range`, `upper = center + range`.
    pub fn to_interval(&self) -> IntervalSeries {
        IntervalSeries {
            lower: self.center.iter().zip(&self.range).map(|(c, r)| c - r).collect(),
            upper: self.center.iter().zip(&self.range).map(|(c, r)| c + r).collect(),
        }
    }
}

/// Free-function form of [`IntervalSeries::to_center_range`].
pub fn to_center_range(s: &IntervalSeries) -> CenterRangeSeries {
    s.to_center_range()
}

/// Builds bounds from raw center/range vectors, rejecting negative ranges.
pub fn from_center_range(center: &[f64], range: &[f64]) -> Result<IntervalSeries> {
    Ok(CenterRangeSeries::new(center.to_vec(), range.to_vec())?.to_interval())
}

/// Which component of a center/range series a derived dataset was built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Component {
    Center,
    Range,
}

impl std::fmt::Display for Component {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Component::Center => "center",
            Component::Range => "range",
        })
    }
}
