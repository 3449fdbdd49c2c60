//! Minimal (batch, channels, length) tensor used by the 1D network ops.

use crate::error::{Error, Result};

/// Dense row-major tensor: index (b, c, t) maps to ((b*C + c)*L + t).
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor3 {
    pub batch: usize,
    pub channels: usize,
    pub len: usize,
    pub data: Vec<f64>,
}

impl Tensor3 {
    pub fn zeros(batch: usize, channels: usize, len: usize) -> Tensor3 {
        Tensor3 {
            batch,
            channels,
            len,
            data: vec![0.0; batch * channels * len],
        }
    }

    pub fn from_vec(batch: usize, channels: usize, len: usize, data: Vec<f64>) -> Result<Tensor3> {
        if data.len() != batch * channels * len {
            return Err(Error::Shape(format!(
                "{} values cannot fill shape ({batch}, {channels}, {len})",
                data.len()
            )));
        }
        Ok(Tensor3 { batch, channels, len, data })
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.batch, self.channels, self.len)
    }

    pub fn numel(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn row(&self, b: usize, c: usize) -> &[f64] {
        let off = (b * self.channels + c) * self.len;
        &self.data[off..off + self.len]
    }

    #[inline]
    pub fn row_mut(&mut self, b: usize, c: usize) -> &mut [f64] {
        let off = (b * self.channels + c) * self.len;
        &mut self.data[off..off + self.len]
    }

    #[inline]
    pub fn get(&self, b: usize, c: usize, t: usize) -> f64 {
        self.data[(b * self.channels + c) * self.len + t]
    }

    #[inline]
    pub fn set(&mut self, b: usize, c: usize, t: usize, v: f64) {
        self.data[(b * self.channels + c) * self.len + t] = v;
    }

    /// Errors with the producing op's name if any value is NaN/Inf.
    pub fn check_finite(&self, op: &'static str) -> Result<()> {
        if self.data.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::NumericHealth { op })
        }
    }
}
