//! Max pooling, nearest upsampling and channel concatenation.

use super::tensor::Tensor3;
use crate::error::{Error, Result};

/// Non-overlapping max pool by `factor`; the returned indices point at the
/// argmax inside the input (first maximum on ties) for the backward pass.
pub fn maxpool1d(x: &Tensor3, factor: usize) -> Result<(Tensor3, Vec<u32>)> {
    if factor == 0 {
        return Err(Error::Config("pool factor must be positive".into()));
    }
    if x.len % factor != 0 {
        return Err(Error::Shape(format!(
            "length {} is not divisible by pool factor {factor}",
            x.len
        )));
    }
    let out_len = x.len / factor;
    let mut out = Tensor3::zeros(x.batch, x.channels, out_len);
    let mut argmax = vec![0u32; x.batch * x.channels * out_len];
    for b in 0..x.batch {
        for c in 0..x.channels {
            let row = x.row(b, c);
            let base = (b * x.channels + c) * out_len;
            let out_row = out.row_mut(b, c);
            for (t, ov) in out_row.iter_mut().enumerate() {
                let s = t * factor;
                let mut best = row[s];
                let mut best_i = s;
                for (i, &v) in row[s + 1..s + factor].iter().enumerate() {
                    if v > best {
                        best = v;
                        best_i = s + 1 + i;
                    }
                }
                *ov = best;
                argmax[base + t] = best_i as u32;
            }
        }
    }
    out.check_finite("maxpool1d")?;
    Ok((out, argmax))
}

/// Routes each output gradient to its stored argmax position.
pub fn maxpool1d_backward(
    grad_out: &Tensor3,
    argmax: &[u32],
    in_len: usize,
) -> Result<Tensor3> {
    if argmax.len() != grad_out.numel() {
        return Err(Error::Shape(format!(
            "argmax has {} entries for {} gradients",
            argmax.len(),
            grad_out.numel()
        )));
    }
    let mut grad_in = Tensor3::zeros(grad_out.batch, grad_out.channels, in_len);
    let out_len = grad_out.len;
    for b in 0..grad_out.batch {
        for c in 0..grad_out.channels {
            let go = grad_out.row(b, c);
            let base = (b * grad_out.channels + c) * out_len;
            let gi = grad_in.row_mut(b, c);
            for (t, &g) in go.iter().enumerate() {
                gi[argmax[base + t] as usize] += g;
            }
        }
    }
    Ok(grad_in)
}

/// Repeats every value `factor` times along the time axis.
pub fn upsample1d_nearest(x: &Tensor3, factor: usize) -> Result<Tensor3> {
    if factor == 0 {
        return Err(Error::Config("upsample factor must be positive".into()));
    }
    let out_len = x.len * factor;
    let mut out = Tensor3::zeros(x.batch, x.channels, out_len);
    for b in 0..x.batch {
        for c in 0..x.channels {
            let src = x.row(b, c);
            let dst = out.row_mut(b, c);
            for (t, &v) in src.iter().enumerate() {
                dst[t * factor..(t + 1) * factor].fill(v);
            }
        }
    }
    Ok(out)
}

/// Sums gradients over each replication group.
pub fn upsample1d_backward(grad_out: &Tensor3, factor: usize) -> Result<Tensor3> {
    if factor == 0 || grad_out.len % factor != 0 {
        return Err(Error::Shape(format!(
            "gradient length {} is not divisible by upsample factor {factor}",
            grad_out.len
        )));
    }
    let in_len = grad_out.len / factor;
    let mut grad_in = Tensor3::zeros(grad_out.batch, grad_out.channels, in_len);
    for b in 0..grad_out.batch {
        for c in 0..grad_out.channels {
            let go = grad_out.row(b, c);
            let gi = grad_in.row_mut(b, c);
            for (t, g) in gi.iter_mut().enumerate() {
                *g = go[t * factor..(t + 1) * factor].iter().sum();
            }
        }
    }
    Ok(grad_in)
}

/// Stacks `a`'s channels before `b`'s; batch and length must agree.
pub fn concat_channels(a: &Tensor3, b: &Tensor3) -> Result<Tensor3> {
    if a.batch != b.batch || a.len != b.len {
        return Err(Error::Shape(format!(
            "concat operands disagree: {:?} vs {:?}",
            a.shape(),
            b.shape()
        )));
    }
    let mut out = Tensor3::zeros(a.batch, a.channels + b.channels, a.len);
    for bi in 0..a.batch {
        for c in 0..a.channels {
            out.row_mut(bi, c).copy_from_slice(a.row(bi, c));
        }
        for c in 0..b.channels {
            out.row_mut(bi, a.channels + c).copy_from_slice(b.row(bi, c));
        }
    }
    Ok(out)
}

/// Splits a concatenated gradient back into the two operand shapes.
pub fn split_channels(grad: &Tensor3, ch_a: usize) -> Result<(Tensor3, Tensor3)> {
    if ch_a > grad.channels {
        return Err(Error::Shape(format!(
            "cannot split {} channels off a {}-channel tensor",
            ch_a, grad.channels
        )));
    }
    let ch_b = grad.channels - ch_a;
    let mut ga = Tensor3::zeros(grad.batch, ch_a, grad.len);
    let mut gb = Tensor3::zeros(grad.batch, ch_b, grad.len);
    for b in 0..grad.batch {
        for c in 0..ch_a {
            ga.row_mut(b, c).copy_from_slice(grad.row(b, c));
        }
        for c in 0..ch_b {
            gb.row_mut(b, c).copy_from_slice(grad.row(b, ch_a + c));
        }
    }
    Ok((ga, gb))
}
