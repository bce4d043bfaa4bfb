use super::{NetError, Result};

/// Activation tensor laid out as rows x cols x channels, channel fastest.
///
/// Fully-connected outputs use the shape `(1, 1, n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: [usize; 3],
    data: Vec<f64>,
}

impl Tensor {
    pub fn new(rows: usize, cols: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        let expected = rows * cols * channels;
        if data.len() != expected {
            return Err(NetError::IncompatibleShape(format!(
                "{rows}x{cols}x{channels} tensor needs {expected} values, got {}",
                data.len()
            )));
        }
        Ok(Self {
            shape: [rows, cols, channels],
            data,
        })
    }

    pub fn zeros(rows: usize, cols: usize, channels: usize) -> Self {
        Self {
            shape: [rows, cols, channels],
            data: vec![0.0; rows * cols * channels],
        }
    }

    /// A `(1, 1, n)` tensor.
    pub fn flat(data: Vec<f64>) -> Self {
        Self {
            shape: [1, 1, data.len()],
            data,
        }
    }

    pub fn shape(&self) -> [usize; 3] {
        self.shape
    }

    pub fn rows(&self) -> usize {
        self.shape[0]
    }

    pub fn cols(&self) -> usize {
        self.shape[1]
    }

    pub fn channels(&self) -> usize {
        self.shape[2]
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.shape[1] + j) * self.shape[2] + k
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data[self.index(i, j, k)]
    }

    /// `(row, col, channel)` of a flat index.
    pub fn unravel(&self, flat: usize) -> (usize, usize, usize) {
        let k = flat % self.shape[2];
        let rest = flat / self.shape[2];
        (rest / self.shape[1], rest % self.shape[1], k)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Tensor {
        Tensor {
            shape: self.shape,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }
}
