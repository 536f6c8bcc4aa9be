use crate::error::{ModalError, Result};

/// Immutable set of `n >= 1` points in `R^dim`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    data: Vec<f64>,
    dim: usize,
    source_tag: String,
}

impl Sample {
    /// Builds a sample from row-major coordinates.
    pub fn from_flat(data: Vec<f64>, dim: usize, source_tag: impl Into<String>) -> Result<Self> {
        if dim == 0 {
            return Err(ModalError::param("sample dimension must be positive"));
        }
        if data.is_empty() {
            return Err(ModalError::EmptySample);
        }
        if data.len() % dim != 0 {
            return Err(ModalError::DimensionMismatch {
                expected: dim,
                found: data.len() % dim,
            });
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(ModalError::NonFinite(format!(
                "coordinate {} of point {}",
                pos % dim,
                pos / dim
            )));
        }
        Ok(Sample {
            data,
            dim,
            source_tag: source_tag.into(),
        })
    }

    pub fn from_points(points: &[Vec<f64>]) -> Result<Self> {
        let dim = points.first().ok_or(ModalError::EmptySample)?.len();
        let mut data = Vec::with_capacity(points.len() * dim);
        for p in points {
            if p.len() != dim {
                return Err(ModalError::DimensionMismatch {
                    expected: dim,
                    found: p.len(),
                });
            }
            data.extend_from_slice(p);
        }
        Self::from_flat(data, dim, "points")
    }

    pub fn univariate(values: Vec<f64>) -> Result<Self> {
        Self::from_flat(values, 1, "values")
    }

    pub fn with_tag(mut self, tag: impl Into<String>) -> Self {
        self.source_tag = tag.into();
        self
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    /// Always false; a `Sample` holds at least one point.
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn source_tag(&self) -> &str {
        &self.source_tag
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> std::slice::ChunksExact<'_, f64> {
        self.data.chunks_exact(self.dim)
    }

    /// Row-major coordinates; for `dim == 1` these are the observations.
    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.points().map(|p| p[j]).collect()
    }

    /// The observations of a univariate sample.
    pub fn univariate_values(&self) -> Result<&[f64]> {
        if self.dim != 1 {
            return Err(ModalError::DimensionMismatch {
                expected: 1,
                found: self.dim,
            });
        }
        Ok(&self.data)
    }

    pub fn mean(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.dim];
        for p in self.points() {
            for (acc, v) in m.iter_mut().zip(p) {
                *acc += v;
            }
        }
        let n = self.len() as f64;
        m.iter_mut().for_each(|v| *v /= n);
        m
    }

    /// Per-coordinate variance with divisor `n - 1` (zero for a singleton).
    pub fn variance(&self) -> Vec<f64> {
        let n = self.len();
        if n < 2 {
            return vec![0.0; self.dim];
        }
        let m = self.mean();
        let mut v = vec![0.0; self.dim];
        for p in self.points() {
            for j in 0..self.dim {
                let d = p[j] - m[j];
                v[j] += d * d;
            }
        }
        v.iter_mut().for_each(|x| *x /= (n - 1) as f64);
        v
    }

    /// Per-coordinate `(min, max)`.
    pub fn bounds(&self) -> Vec<(f64, f64)> {
        let mut b = vec![(f64::INFINITY, f64::NEG_INFINITY); self.dim];
        for p in self.points() {
            for (r, &v) in b.iter_mut().zip(p) {
                r.0 = r.0.min(v);
                r.1 = r.1.max(v);
            }
        }
        b
    }

    /// Applies `x -> scale * x + shift` coordinatewise.
    pub fn affine(&self, scale: f64, shift: f64) -> Result<Sample> {
        let data = self.data.iter().map(|v| scale * v + shift).collect();
        Sample::from_flat(data, self.dim, self.source_tag.clone())
    }

    pub fn subset(&self, indices: &[usize]) -> Result<Sample> {
        let mut data = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            data.extend_from_slice(self.point(i));
        }
        Sample::from_flat(data, self.dim, self.source_tag.clone())
    }
}

/// Sorted copy of a univariate sample; ties keep their input order.
pub fn order_statistics(s: &Sample) -> Result<Vec<f64>> {
    let mut v = s.univariate_values()?.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    Ok(v)
}
