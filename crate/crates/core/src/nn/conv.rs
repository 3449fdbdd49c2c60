//! 1D convolution with same-length zero padding, forward and backward.

use super::tensor::Tensor3;
use crate::error::{Error, Result};
use rand::Rng;

/// Convolution parameters. Weights are laid out (out_ch, in_ch, kernel),
/// row-major. The kernel must be odd so output length equals input length
/// under symmetric zero padding.
#[derive(Debug, Clone, PartialEq)]
pub struct Conv1d {
    pub out_ch: usize,
    pub in_ch: usize,
    pub kernel: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Conv1d {
    pub fn new(out_ch: usize, in_ch: usize, kernel: usize) -> Result<Conv1d> {
        if kernel % 2 == 0 || kernel == 0 {
            return Err(Error::Config(format!(
                "conv kernel must be odd and positive, got {kernel}"
            )));
        }
        Ok(Conv1d {
            out_ch,
            in_ch,
            kernel,
            weights: vec![0.0; out_ch * in_ch * kernel],
            bias: vec![0.0; out_ch],
        })
    }

    /// He-style fan-in scaled uniform initialization, zero bias.
    pub fn init<R: Rng>(out_ch: usize, in_ch: usize, kernel: usize, rng: &mut R) -> Result<Conv1d> {
        let mut conv = Conv1d::new(out_ch, in_ch, kernel)?;
        let fan_in = (in_ch * kernel) as f64;
        let limit = (6.0 / fan_in).sqrt();
        for w in conv.weights.iter_mut() {
            *w = rng.random_range(-limit..limit);
        }
        Ok(conv)
    }

    #[inline]
    fn w(&self, o: usize, c: usize, k: usize) -> f64 {
        self.weights[(o * self.in_ch + c) * self.kernel + k]
    }

    pub fn param_count(&self) -> usize {
        self.weights.len() + self.bias.len()
    }
}

/// Gradients of one convolution, shaped like the parameters.
#[derive(Debug, Clone)]
pub struct Conv1dGrads {
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Conv1dGrads {
    pub fn zeros_like(p: &Conv1d) -> Conv1dGrads {
        Conv1dGrads {
            weights: vec![0.0; p.weights.len()],
            bias: vec![0.0; p.bias.len()],
        }
    }
}

/// Valid output/input index ranges for a kernel offset `off` (= k - K/2):
/// out[t] pairs with in[t + off].
#[inline]
fn shifted_ranges(len: usize, off: isize) -> (std::ops::Range<usize>, usize) {
    if off >= 0 {
        (0..len - off as usize, off as usize)
    } else {
        ((-off) as usize..len, 0)
    }
}

/// out[b,o,t] = bias[o] + sum_{c,k} w[o,c,k] * x[b,c,t+k-K/2], zero padded.
pub fn conv1d_forward(x: &Tensor3, p: &Conv1d) -> Result<Tensor3> {
    if x.channels != p.in_ch {
        return Err(Error::Shape(format!(
            "conv expects {} input channels, got {}",
            p.in_ch, x.channels
        )));
    }
    let half = (p.kernel / 2) as isize;
    let len = x.len;
    let mut out = Tensor3::zeros(x.batch, p.out_ch, len);
    for b in 0..x.batch {
        for o in 0..p.out_ch {
            {
                let out_row = out.row_mut(b, o);
                out_row.fill(p.bias[o]);
            }
            for c in 0..p.in_ch {
                let x_row = x.row(b, c);
                for k in 0..p.kernel {
                    let w = p.w(o, c, k);
                    if w == 0.0 {
                        continue;
                    }
                    let off = k as isize - half;
                    let (out_range, x_start) = shifted_ranges(len, off);
                    let x_slice = &x_row[x_start..x_start + out_range.len()];
                    let out_row = out.row_mut(b, o);
                    for (ov, xv) in out_row[out_range].iter_mut().zip(x_slice) {
                        *ov += w * xv;
                    }
                }
            }
        }
    }
    out.check_finite("conv1d_forward")?;
    Ok(out)
}

/// Exact adjoints of [`conv1d_forward`].
pub fn conv1d_backward(
    x: &Tensor3,
    p: &Conv1d,
    grad_out: &Tensor3,
) -> Result<(Tensor3, Conv1dGrads)> {
    if grad_out.shape() != (x.batch, p.out_ch, x.len) {
        return Err(Error::Shape(format!(
            "grad_out shape {:?} does not match conv output ({}, {}, {})",
            grad_out.shape(),
            x.batch,
            p.out_ch,
            x.len
        )));
    }
    let half = (p.kernel / 2) as isize;
    let len = x.len;
    let mut grad_x = Tensor3::zeros(x.batch, x.channels, len);
    let mut grads = Conv1dGrads::zeros_like(p);

    for b in 0..x.batch {
        for o in 0..p.out_ch {
            let go_row = grad_out.row(b, o);
            grads.bias[o] += go_row.iter().sum::<f64>();
            for c in 0..p.in_ch {
                let x_row = x.row(b, c);
                for k in 0..p.kernel {
                    let off = k as isize - half;
                    let (out_range, x_start) = shifted_ranges(len, off);
                    let n = out_range.len();
                    // dW[o,c,k] += <grad_out shifted, x shifted>
                    let go = &go_row[out_range.clone()];
                    let xs = &x_row[x_start..x_start + n];
                    grads.weights[(o * p.in_ch + c) * p.kernel + k] += dot(go, xs);
                    // dX[t+off] += w * grad_out[t]
                    let w = p.w(o, c, k);
                    if w != 0.0 {
                        let gx_row = grad_x.row_mut(b, c);
                        for (gx, g) in gx_row[x_start..x_start + n].iter_mut().zip(go) {
                            *gx += w * g;
                        }
                    }
                }
            }
        }
    }
    grad_x.check_finite("conv1d_backward")?;
    Ok((grad_x, grads))
}

/// Unrolled dot product with a fixed reduction order.
#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let chunks = a.len() / 4;
    let mut acc = [0.0f64; 4];
    for i in 0..chunks {
        let j = i * 4;
        acc[0] += a[j] * b[j];
        acc[1] += a[j + 1] * b[j + 1];
        acc[2] += a[j + 2] * b[j + 2];
        acc[3] += a[j + 3] * b[j + 3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for j in chunks * 4..a.len() {
        s += a[j] * b[j];
    }
    s
}
