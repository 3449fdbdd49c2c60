//! Pointwise nonlinearities.

use super::tensor::Tensor3;
use crate::error::Result;

pub fn relu(x: &Tensor3) -> Result<Tensor3> {
    let mut out = x.clone();
    for v in out.data.iter_mut() {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    out.check_finite("relu")?;
    Ok(out)
}

/// grad_in = grad_out where the forward input was positive, else 0.
pub fn relu_backward(x: &Tensor3, grad_out: &Tensor3) -> Tensor3 {
    let mut grad_in = grad_out.clone();
    for (g, &v) in grad_in.data.iter_mut().zip(&x.data) {
        if v <= 0.0 {
            *g = 0.0;
        }
    }
    grad_in
}

pub fn sigmoid(x: &Tensor3) -> Result<Tensor3> {
    let mut out = x.clone();
    for v in out.data.iter_mut() {
        *v = 1.0 / (1.0 + (-*v).exp());
    }
    out.check_finite("sigmoid")?;
    Ok(out)
}

/// grad_in = grad_out * s * (1 - s), with s the forward output.
pub fn sigmoid_backward(sig_out: &Tensor3, grad_out: &Tensor3) -> Tensor3 {
    let mut grad_in = grad_out.clone();
    for (g, &s) in grad_in.data.iter_mut().zip(&sig_out.data) {
        *g *= s * (1.0 - s);
    }
    grad_in
}
