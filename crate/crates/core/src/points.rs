use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A list of points in ℝᵈ stored row-major in one buffer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointSet {
    dim: usize,
    coords: Vec<f64>,
}

impl PointSet {
    pub fn new(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter(
                "point dimension must be at least 1".into(),
            ));
        }
        if coords.len() % dim != 0 {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: coords.len() % dim,
            });
        }
        if let Some(bad) = coords.iter().find(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "non-finite coordinate {bad}"
            )));
        }
        Ok(Self { dim, coords })
    }

    /// One-dimensional points.
    pub fn from_scalars(values: Vec<f64>) -> Result<Self> {
        Self::new(1, values)
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let dim = rows
            .first()
            .map(|r| r.as_ref().len())
            .ok_or(Error::EmptyInput("point list"))?;
        let mut coords = Vec::with_capacity(dim * rows.len());
        for row in rows {
            let row = row.as_ref();
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: row.len(),
                });
            }
            coords.extend_from_slice(row);
        }
        Self::new(dim, coords)
    }

    pub fn empty(dim: usize) -> Self {
        Self {
            dim: dim.max(1),
            coords: Vec::new(),
        }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    #[inline]
    pub fn get(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim)
    }

    /// Raw row-major coordinates.
    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// Coordinates of one-dimensional points, `None` otherwise.
    pub fn as_scalars(&self) -> Option<&[f64]> {
        (self.dim == 1).then_some(self.coords.as_slice())
    }

    pub fn select(&self, indices: &[usize]) -> Self {
        let mut coords = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            coords.extend_from_slice(self.get(i));
        }
        Self {
            dim: self.dim,
            coords,
        }
    }

    pub(crate) fn push(&mut self, point: &[f64]) {
        debug_assert_eq!(point.len(), self.dim);
        self.coords.extend_from_slice(point);
    }

    pub(crate) fn extend(&mut self, other: &PointSet) {
        debug_assert_eq!(other.dim, self.dim);
        self.coords.extend_from_slice(&other.coords);
    }

    /// Shift every point by `offset` (same dimension).
    pub fn translated(&self, offset: &[f64]) -> Result<Self> {
        self.check_dim(offset.len())?;
        let coords = self
            .coords
            .chunks_exact(self.dim)
            .flat_map(|p| p.iter().zip(offset).map(|(a, b)| a + b))
            .collect();
        Self::new(self.dim, coords)
    }

    pub(crate) fn check_dim(&self, other: usize) -> Result<()> {
        if other == self.dim {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: other,
            })
        }
    }
}

#[inline]
pub(crate) fn squared_distance(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum()
}

#[inline]
pub(crate) fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}
