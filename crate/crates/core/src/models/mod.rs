//! The three buzz detectors, data splitting and prediction plumbing.

pub mod checkpoint;
pub mod forest;
pub mod logreg;
pub mod split;
pub mod unet;

pub use checkpoint::{checkpoint_load, checkpoint_save, Model};
pub use forest::{rf_fit, ForestModel, RfConfig};
pub use logreg::{logreg_fit, LogisticModel};
pub use split::{split, Fold, Span, SplitMode, SplitPlan};
pub use unet::{unet_build, unet_train, EpochStats, TrainOutcome, UNetConfig, UNetModel};

use crate::data::WhaleRecord;
use crate::error::Result;
use crate::features::{featurize, FeatureTable, WindowSpec};

/// Binarization threshold shared by every detector; strictly greater wins.
pub const DECISION_THRESHOLD: f64 = 0.5;

/// Labels = probability > 0.5 (a probability of exactly 0.5 is negative).
pub fn binarize(probs: &[f64]) -> Vec<u8> {
    probs.iter().map(|&p| (p > DECISION_THRESHOLD) as u8).collect()
}

/// Paints each positive window's span onto the 100 Hz timeline, combining
/// overlaps by logical OR. Samples past the last window stay 0.
pub fn expand_window_labels(window_labels: &[u8], spec: WindowSpec, n_samples: usize) -> Vec<u8> {
    let mut out = vec![0u8; n_samples];
    for (w, &lab) in window_labels.iter().enumerate() {
        if lab == 1 {
            let s = w * spec.stride;
            let e = (s + spec.size).min(n_samples);
            for v in out[s..e].iter_mut() {
                *v = 1;
            }
        }
    }
    out
}

/// Model output on one record.
#[derive(Debug, Clone, PartialEq)]
pub enum Prediction {
    /// U-Net: one probability and label per sample.
    PerSample { probs: Vec<f64>, labels: Vec<u8> },
    /// Tabular models: per-window probabilities, with the binarized labels
    /// expanded back to the sample timeline.
    PerWindow {
        probs: Vec<f64>,
        window_labels: Vec<u8>,
        sample_labels: Vec<u8>,
    },
}

impl Prediction {
    pub fn sample_labels(&self) -> &[u8] {
        match self {
            Prediction::PerSample { labels, .. } => labels,
            Prediction::PerWindow { sample_labels, .. } => sample_labels,
        }
    }
}

/// Runs any detector on a record.
pub fn predict(model: &Model, record: &WhaleRecord, spec: WindowSpec) -> Result<Prediction> {
    match model {
        Model::UNet(m) => {
            let probs = m.predict_record(record)?;
            let labels = binarize(&probs);
            Ok(Prediction::PerSample { probs, labels })
        }
        Model::Logistic(m) => {
            let table = featurize(record, spec);
            let rows = feature_rows(&table);
            let probs = m.predict_proba_table(&rows);
            tabular_prediction(probs, spec, record.len())
        }
        Model::Forest(m) => {
            let table = featurize(record, spec);
            let rows = feature_rows(&table);
            let probs = m.predict_proba_table(&rows);
            tabular_prediction(probs, spec, record.len())
        }
    }
}

fn tabular_prediction(probs: Vec<f64>, spec: WindowSpec, n: usize) -> Result<Prediction> {
    let window_labels = binarize(&probs);
    let sample_labels = expand_window_labels(&window_labels, spec, n);
    Ok(Prediction::PerWindow { probs, window_labels, sample_labels })
}

/// Feature matrix of a table as plain rows, in the model input order.
pub fn feature_rows(table: &FeatureTable) -> Vec<Vec<f64>> {
    table.rows.iter().map(|r| r.features.to_vec()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binarize_is_strict() {
        assert_eq!(binarize(&[0.0, 0.5, 0.500001, 1.0]), vec![0, 0, 1, 1]);
        assert_eq!(binarize(&[0.0; 4]), vec![0; 4]);
    }

    #[test]
    fn window_expansion_or_combines() {
        let spec = WindowSpec::default();
        let out = expand_window_labels(&[1, 0], spec, 150);
        assert!(out[..100].iter().all(|&v| v == 1));
        assert!(out[100..150].iter().all(|&v| v == 0));
        // overlapping positives merge
        let out = expand_window_labels(&[1, 1], spec, 150);
        assert!(out.iter().all(|&v| v == 1));
    }

    #[test]
    fn expansion_truncates_at_record_end() {
        let spec = WindowSpec::default();
        let out = expand_window_labels(&[1], spec, 60);
        assert_eq!(out.len(), 60);
        assert!(out.iter().all(|&v| v == 1));
    }
}
