//! Tensor-product sampling grids used by the offline certification routines.

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One axis of a tensor grid: `points` samples evenly spaced over `[lo, hi]`.
///
/// A single-point axis (`points == 1`) is allowed only when `lo == hi`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridAxis {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

impl GridAxis {
    pub fn new(lo: f64, hi: f64, points: usize) -> Self {
        Self { lo, hi, points }
    }

    pub fn point(value: f64) -> Self {
        Self {
            lo: value,
            hi: value,
            points: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.lo.is_finite() || !self.hi.is_finite() || self.lo > self.hi {
            return Err(Error::InvalidParameter(format!(
                "grid axis range [{}, {}] is not a finite nonempty interval",
                self.lo, self.hi
            )));
        }
        match self.points {
            0 => Err(Error::EmptyGrid),
            1 if self.lo != self.hi => Err(Error::InvalidParameter(
                "a single-point grid axis needs lo == hi".into(),
            )),
            1 => Ok(()),
            _ if self.lo == self.hi => Err(Error::InvalidParameter(
                "a multi-point grid axis needs lo < hi".into(),
            )),
            _ => Ok(()),
        }
    }

    /// Sample `i`, computed as `((points - 1 - i) lo + i hi) / (points - 1)`
    /// so that symmetric axes hit their midpoint exactly.
    pub fn value(&self, i: usize) -> f64 {
        if self.points <= 1 {
            return self.lo;
        }
        if i + 1 == self.points {
            return self.hi;
        }
        let n = (self.points - 1) as f64;
        let i = i as f64;
        ((n - i) * self.lo + i * self.hi) / n
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.points).map(move |i| self.value(i))
    }

    pub fn spacing(&self) -> f64 {
        if self.points <= 1 {
            0.0
        } else {
            (self.hi - self.lo) / (self.points - 1) as f64
        }
    }

    /// Refines by an integer factor; every original sample is kept.
    pub fn refined(&self, factor: usize) -> Self {
        if self.points <= 1 {
            return self.clone();
        }
        Self {
            points: (self.points - 1) * factor.max(1) + 1,
            ..self.clone()
        }
    }
}

/// Tensor-product grid over an ordered list of coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub axes: Vec<GridAxis>,
}

impl GridSpec {
    pub fn new(axes: Vec<GridAxis>) -> Self {
        Self { axes }
    }

    /// `dim` copies of the same axis.
    pub fn uniform(dim: usize, lo: f64, hi: f64, points: usize) -> Self {
        Self::new(vec![GridAxis::new(lo, hi, points); dim])
    }

    /// Concatenates axes: `self` coordinates first.
    pub fn product(&self, other: &GridSpec) -> Self {
        let mut axes = self.axes.clone();
        axes.extend(other.axes.iter().cloned());
        Self { axes }
    }

    /// Default configuration grid: `[-pi, pi]^n` at 101 points per axis.
    pub fn default_configuration(dof: usize) -> Self {
        Self::uniform(dof, -std::f64::consts::PI, std::f64::consts::PI, 101)
    }

    /// Default velocity grid: `[-2, 2]^n` at 41 points per axis.
    pub fn default_velocity(dof: usize) -> Self {
        Self::uniform(dof, -2.0, 2.0, 41)
    }

    pub fn default_state(dof: usize) -> Self {
        Self::default_configuration(dof).product(&Self::default_velocity(dof))
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn len(&self) -> usize {
        if self.axes.is_empty() {
            0
        } else {
            self.axes.iter().map(|a| a.points).product()
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn validate(&self) -> Result<()> {
        if self.axes.is_empty() {
            return Err(Error::EmptyGrid);
        }
        self.axes.iter().try_for_each(GridAxis::validate)
    }

    pub fn refined(&self, factor: usize) -> Self {
        Self::new(self.axes.iter().map(|a| a.refined(factor)).collect())
    }

    /// Writes grid point `index` into `out`. The last axis varies fastest.
    pub fn fill_point(&self, mut index: usize, out: &mut DVector<f64>) {
        for (k, axis) in self.axes.iter().enumerate().rev() {
            let i = index % axis.points;
            index /= axis.points;
            out[k] = axis.value(i);
        }
    }

    pub fn point(&self, index: usize) -> DVector<f64> {
        let mut out = DVector::zeros(self.dim());
        self.fill_point(index, &mut out);
        out
    }

    pub fn points(&self) -> impl Iterator<Item = DVector<f64>> + '_ {
        (0..self.len()).map(move |i| self.point(i))
    }
}

const CHUNK: usize = 4096;

/// Evaluates `visit` on every grid point in parallel and returns the results
/// in grid-index order. `visit` returns `None` for points outside the region
/// of interest; the second element of the result counts evaluated points.
pub(crate) fn scan<T, F>(grid: &GridSpec, visit: F) -> Result<(Vec<T>, usize)>
where
    T: Send,
    F: Fn(&DVector<f64>) -> Result<Option<Vec<T>>> + Sync,
{
    grid.validate()?;
    let total = grid.len();
    let chunks = total.div_ceil(CHUNK);
    let partial: Vec<Result<(Vec<T>, usize)>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut found = Vec::new();
            let mut evaluated = 0usize;
            let mut x = DVector::zeros(grid.dim());
            for index in c * CHUNK..((c + 1) * CHUNK).min(total) {
                grid.fill_point(index, &mut x);
                if let Some(items) = visit(&x)? {
                    evaluated += 1;
                    found.extend(items);
                }
            }
            Ok((found, evaluated))
        })
        .collect();
    let mut found = Vec::new();
    let mut evaluated = 0;
    for part in partial {
        let (items, n) = part?;
        found.extend(items);
        evaluated += n;
    }
    Ok((found, evaluated))
}
