//! Dice loss over flat probability/label slices.
//!
//! DL = 1 - (2 * sum(p*g) + eps) / (sum(p) + sum(g) + eps)
//!
//! The loss is computed jointly over the whole batch. The smoothing term
//! keeps the all-negative case well defined (p = g = 0 gives DL = 0) while
//! staying small enough not to distort the analytic limits: all-zero
//! predictions against a non-empty target score ~1, perfect predictions
//! score ~0, and all-one predictions score 1 - 2a/(1+a) for positive
//! rate a.

use crate::error::{Error, Result};

/// Smoothing added to numerator and denominator.
pub const DICE_EPS: f64 = 1e-6;

/// Returns the loss and its exact gradient with respect to `p`.
pub fn dice_loss(p: &[f64], g: &[u8]) -> Result<(f64, Vec<f64>)> {
    if p.is_empty() || p.len() != g.len() {
        return Err(Error::Shape(format!(
            "dice loss needs equal non-empty slices, got {} and {}",
            p.len(),
            g.len()
        )));
    }
    if let Some(i) = p.iter().position(|v| !(0.0..=1.0).contains(v)) {
        return Err(Error::Validation(format!(
            "probability p[{i}] = {} outside [0, 1]",
            p[i]
        )));
    }
    let mut intersection = 0.0;
    let mut sum_p = 0.0;
    let mut sum_g = 0.0;
    for (pi, &gi) in p.iter().zip(g) {
        sum_p += pi;
        if gi == 1 {
            intersection += pi;
            sum_g += 1.0;
        }
    }
    let num = 2.0 * intersection + DICE_EPS;
    let den = sum_p + sum_g + DICE_EPS;
    let loss = 1.0 - num / den;
    // quotient rule: d/dp_i [num/den] = (2*g_i*den - num) / den^2
    let den2 = den * den;
    let grad: Vec<f64> = g
        .iter()
        .map(|&gi| {
            let dnum = if gi == 1 { 2.0 } else { 0.0 };
            -(dnum * den - num) / den2
        })
        .collect();
    Ok((loss, grad))
}

/// Loss value only, for validation passes.
pub fn dice_value(p: &[f64], g: &[u8]) -> Result<f64> {
    dice_loss(p, g).map(|(l, _)| l)
}

/// Streaming accumulator so validation loss can be computed over many
/// batches without holding all outputs.
#[derive(Debug, Clone, Copy, Default)]
pub struct DiceAccumulator {
    intersection: f64,
    sum_p: f64,
    sum_g: f64,
}

impl DiceAccumulator {
    pub fn update(&mut self, p: &[f64], g: &[u8]) {
        for (pi, &gi) in p.iter().zip(g) {
            self.sum_p += pi;
            if gi == 1 {
                self.intersection += pi;
                self.sum_g += 1.0;
            }
        }
    }

    pub fn value(&self) -> f64 {
        1.0 - (2.0 * self.intersection + DICE_EPS) / (self.sum_p + self.sum_g + DICE_EPS)
    }
}
