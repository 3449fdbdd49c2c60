//! Logistic regression fitted by full-batch maximum likelihood.
//!
//! Features are standardized internally with training statistics; the
//! stored coefficients are mapped back to the original scale, so the model
//! predicts directly on raw feature rows. The optimizer is gradient ascent
//! on the Bernoulli log-likelihood with Armijo backtracking, stopping when
//! the gradient infinity norm drops below 1e-6 or after 10,000 iterations.

use crate::error::{Error, Result};

pub const GRAD_TOL: f64 = 1e-6;
pub const MAX_ITERS: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct LogisticModel {
    /// Coefficients in original feature scale.
    pub weights: Vec<f64>,
    pub intercept: f64,
}

impl LogisticModel {
    pub fn predict_proba(&self, row: &[f64]) -> f64 {
        assert_eq!(row.len(), self.weights.len(), "feature width mismatch");
        let z = self.intercept
            + self
                .weights
                .iter()
                .zip(row)
                .map(|(w, x)| w * x)
                .sum::<f64>();
        sigmoid(z)
    }

    pub fn predict_proba_table(&self, rows: &[Vec<f64>]) -> Vec<f64> {
        rows.iter().map(|r| self.predict_proba(r)).collect()
    }
}

#[inline]
fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// log(1 + e^z) without overflow.
#[inline]
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

struct Standardizer {
    mean: Vec<f64>,
    scale: Vec<f64>,
}

impl Standardizer {
    fn fit(rows: &[Vec<f64>], d: usize) -> Standardizer {
        let n = rows.len() as f64;
        let mut mean = vec![0.0; d];
        for row in rows {
            for (m, x) in mean.iter_mut().zip(row) {
                *m += x;
            }
        }
        for m in mean.iter_mut() {
            *m /= n;
        }
        let mut var = vec![0.0; d];
        for row in rows {
            for ((v, x), m) in var.iter_mut().zip(row).zip(&mean) {
                *v += (x - m) * (x - m);
            }
        }
        let scale = var
            .iter()
            .map(|v| {
                let s = (v / n).sqrt();
                if s > 0.0 {
                    s
                } else {
                    1.0
                }
            })
            .collect();
        Standardizer { mean, scale }
    }

    fn apply(&self, rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
        rows.iter()
            .map(|row| {
                row.iter()
                    .zip(&self.mean)
                    .zip(&self.scale)
                    .map(|((x, m), s)| (x - m) / s)
                    .collect()
            })
            .collect()
    }
}

/// Fits the model. Both classes must be present and all features finite.
pub fn logreg_fit(rows: &[Vec<f64>], labels: &[u8]) -> Result<LogisticModel> {
    if rows.len() != labels.len() || rows.is_empty() {
        return Err(Error::Validation(format!(
            "need matching non-empty rows/labels, got {} rows, {} labels",
            rows.len(),
            labels.len()
        )));
    }
    let positives = labels.iter().filter(|&&y| y == 1).count();
    if positives == 0 || positives == labels.len() {
        return Err(Error::SingleClass(
            "logistic regression needs at least one row of each class".into(),
        ));
    }
    let d = rows[0].len();
    if rows.iter().any(|r| r.len() != d) {
        return Err(Error::Validation("ragged feature rows".into()));
    }
    if rows.iter().flatten().any(|x| !x.is_finite()) {
        return Err(Error::Validation("non-finite feature value".into()));
    }

    let std = Standardizer::fit(rows, d);
    let x = std.apply(rows);
    let n = x.len();

    // log-likelihood: sum y*z - softplus(z)
    let loglik = |w: &[f64], b: f64| -> f64 {
        let mut ll = 0.0;
        for (row, &y) in x.iter().zip(labels) {
            let z = b + dot(w, row);
            ll += y as f64 * z - softplus(z);
        }
        ll
    };

    let mut w = vec![0.0; d];
    let mut b = 0.0;
    let mut ll = loglik(&w, b);
    let mut step = 1.0 / n as f64;
    let mut grad_w = vec![0.0; d];

    for _ in 0..MAX_ITERS {
        grad_w.iter_mut().for_each(|g| *g = 0.0);
        let mut grad_b = 0.0;
        for (row, &y) in x.iter().zip(labels) {
            let r = y as f64 - sigmoid(b + dot(&w, row));
            grad_b += r;
            for (g, v) in grad_w.iter_mut().zip(row) {
                *g += r * v;
            }
        }
        let inf_norm = grad_w
            .iter()
            .chain(std::iter::once(&grad_b))
            .fold(0.0f64, |m, g| m.max(g.abs()));
        if inf_norm < GRAD_TOL {
            break;
        }
        let g2 = dot(&grad_w, &grad_w) + grad_b * grad_b;
        step *= 2.0;
        loop {
            let cand_w: Vec<f64> = w.iter().zip(&grad_w).map(|(wi, g)| wi + step * g).collect();
            let cand_b = b + step * grad_b;
            let cand_ll = loglik(&cand_w, cand_b);
            if cand_ll >= ll + 1e-4 * step * g2 {
                w = cand_w;
                b = cand_b;
                ll = cand_ll;
                break;
            }
            step *= 0.5;
            if step < 1e-18 {
                // flat to machine precision
                return Ok(unstandardize(&w, b, &std));
            }
        }
    }
    Ok(unstandardize(&w, b, &std))
}

fn unstandardize(w: &[f64], b: f64, std: &Standardizer) -> LogisticModel {
    let weights: Vec<f64> = w.iter().zip(&std.scale).map(|(wi, s)| wi / s).collect();
    let intercept = b
        - weights
            .iter()
            .zip(&std.mean)
            .map(|(wi, m)| wi * m)
            .sum::<f64>();
    LogisticModel { weights, intercept }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
