use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Time-major multichannel signal: sample `t` occupies
/// `data[t * dim .. (t + 1) * dim]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    dim: usize,
    data: Vec<f64>,
}

impl Series {
    pub fn new(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 && !data.is_empty() {
            return Err(Error::Dimension(format!("zero-width series with data")));
        }
        if dim > 0 && data.len() % dim != 0 {
            return Err(Error::Dimension(format!(
                "series length {} is not a multiple of width {dim}",
                data.len()
            )));
        }
        Ok(Self { dim, data })
    }

    pub fn zeros(dim: usize, len: usize) -> Self {
        Self { dim, data: alloc::vec![0.0; dim * len] }
    }

    pub fn from_rows<R: AsRef<[f64]>>(dim: usize, rows: &[R]) -> Result<Self> {
        let mut data = Vec::with_capacity(dim * rows.len());
        for (t, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != dim {
                return Err(Error::Dimension(format!("row {t} has {} entries, expected {dim}", row.len())));
            }
            data.extend_from_slice(row);
        }
        Ok(Self { dim, data })
    }

    /// One row per time step.
    pub fn from_matrix(m: &Matrix) -> Self {
        let mut data = Vec::with_capacity(m.len());
        for row in m.row_iter() {
            data.extend(row.iter().copied());
        }
        Self { dim: m.ncols(), data }
    }

    pub fn to_matrix(&self) -> Matrix {
        Matrix::from_row_slice(self.len(), self.dim, &self.data)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of time steps.
    pub fn len(&self) -> usize {
        if self.dim == 0 {
            0
        } else {
            self.data.len() / self.dim
        }
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.data[t * self.dim..(t + 1) * self.dim]
    }

    pub fn row_mut(&mut self, t: usize) -> &mut [f64] {
        &mut self.data[t * self.dim..(t + 1) * self.dim]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim.max(1))
    }

    /// Samples `start..` as a new series.
    pub fn skip(&self, start: usize) -> Series {
        let start = start.min(self.len());
        Series { dim: self.dim, data: self.data[start * self.dim..].to_vec() }
    }

    /// Channels `[from, from + width)` of every sample.
    pub fn columns(&self, from: usize, width: usize) -> Series {
        let mut data = Vec::with_capacity(width * self.len());
        for row in self.rows() {
            data.extend_from_slice(&row[from..from + width]);
        }
        Series { dim: width, data }
    }

    /// Concatenates channels sample by sample.
    pub fn hcat(&self, other: &Series) -> Result<Series> {
        if self.len() != other.len() {
            return Err(Error::Dimension(format!(
                "cannot join series of length {} and {}",
                self.len(),
                other.len()
            )));
        }
        let mut data = Vec::with_capacity(self.data.len() + other.data.len());
        for t in 0..self.len() {
            data.extend_from_slice(self.row(t));
            data.extend_from_slice(other.row(t));
        }
        Ok(Series { dim: self.dim + other.dim, data })
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// Per-channel sample mean.
    pub fn mean(&self) -> Vec<f64> {
        let mut mean = alloc::vec![0.0; self.dim];
        for row in self.rows() {
            for (m, x) in mean.iter_mut().zip(row) {
                *m += x;
            }
        }
        let n = self.len().max(1) as f64;
        mean.iter_mut().for_each(|m| *m /= n);
        mean
    }

    /// `(1/N) Σₜ s(t) s(t)ᵀ`, without centering.
    pub fn second_moment(&self) -> Matrix {
        let d = self.dim;
        let mut acc = Matrix::zeros(d, d);
        for row in self.rows() {
            for i in 0..d {
                for j in 0..d {
                    acc[(i, j)] += row[i] * row[j];
                }
            }
        }
        acc / self.len().max(1) as f64
    }
}

/// Jointly sampled processes: output `y`, input `w`, and optionally the
/// state `x` and innovation `e` when produced by the simulator.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub y: Series,
    pub w: Series,
    pub x: Option<Series>,
    pub e: Option<Series>,
    pub seed: Option<u64>,
}

impl Trajectory {
    pub fn new(y: Series, w: Series) -> Result<Self> {
        let t = Self { y, w, x: None, e: None, seed: None };
        t.check()?;
        Ok(t)
    }

    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.len() == 0
    }

    /// Stacked `(y, w)` per sample.
    pub fn joint(&self) -> Series {
        self.y.hcat(&self.w).expect("trajectory lengths are checked")
    }

    pub fn check(&self) -> Result<()> {
        let n = self.w.len();
        let mut lens = alloc::vec![("y", self.y.len())];
        if let Some(x) = &self.x {
            lens.push(("x", x.len()));
        }
        if let Some(e) = &self.e {
            lens.push(("e", e.len()));
        }
        for (name, len) in lens {
            if len != n {
                return Err(Error::Dimension(format!("{name} has {len} samples, w has {n}")));
            }
        }
        let all_finite = self.y.is_finite()
            && self.w.is_finite()
            && self.x.as_ref().is_none_or(Series::is_finite)
            && self.e.as_ref().is_none_or(Series::is_finite);
        if !all_finite {
            return Err(Error::NonFinite { what: "trajectory" });
        }
        Ok(())
    }

    /// Drops the first `start` samples of every channel.
    pub fn skip(&self, start: usize) -> Trajectory {
        Trajectory {
            y: self.y.skip(start),
            w: self.w.skip(start),
            x: self.x.as_ref().map(|s| s.skip(start)),
            e: self.e.as_ref().map(|s| s.skip(start)),
            seed: self.seed,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rows_and_matrix_round_trip() {
        let s = Series::from_rows(2, &[[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]]).unwrap();
        assert_eq!(s.len(), 3);
        assert_eq!(s.row(1), &[3.0, 4.0]);
        assert_eq!(Series::from_matrix(&s.to_matrix()), s);
        assert_eq!(s.columns(1, 1).as_slice(), &[2.0, 4.0, 6.0]);
        assert_eq!(s.skip(2).as_slice(), &[5.0, 6.0]);
    }

    #[test]
    fn rejects_ragged_and_mismatched() {
        assert!(Series::new(2, alloc::vec![1.0, 2.0, 3.0]).is_err());
        let y = Series::zeros(1, 3);
        let w = Series::zeros(1, 4);
        assert!(Trajectory::new(y, w).is_err());
        let bad = Series::new(1, alloc::vec![f64::NAN]).unwrap();
        assert!(Trajectory::new(bad, Series::zeros(1, 1)).is_err());
    }

    #[test]
    fn moments() {
        let s = Series::from_rows(1, &[[1.0], [3.0]]).unwrap();
        assert_eq!(s.mean(), [2.0]);
        assert_eq!(s.second_moment()[(0, 0)], 5.0);
    }
}
