//! Jerk computation and threshold sweeps against buzz labels.
//!
//! Jerk is the scaled first difference of each accelerometer axis in mG/s.
//! The RMS jerk summarizes 200 ms windows (20 samples, 60 per-axis values);
//! sweeping a detection threshold over the RMS series against the windowed
//! buzz labels yields the precision/recall curves, optionally with the jerk
//! window delayed relative to the buzz.

use crate::data::WhaleRecord;
use crate::error::{Error, Result};

/// Samples per RMS window (200 ms at 100 Hz).
pub const WINDOW_SAMPLES: usize = 20;
/// Window duration in seconds.
pub const WINDOW_S: f64 = 0.2;
/// Default sweep upper bound, mG/s.
pub const DEFAULT_THRESHOLD_MAX: f64 = 166_000.0;
/// Default sweep step, mG/s.
pub const DEFAULT_THRESHOLD_STEP: f64 = 2_000.0;
/// Default delays in seconds.
pub const DEFAULT_DELAYS: [f64; 6] = [0.0, 0.2, 0.4, 0.6, 0.8, 1.0];

/// Per-axis jerk series, length N-1.
#[derive(Debug, Clone, PartialEq)]
pub struct JerkSeries {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
}

impl JerkSeries {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }
}

/// Whether the three axes are kept separate or collapsed to a Euclidean
/// norm per time step before the RMS.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum JerkKind {
    #[default]
    PerAxis,
    Euclidean,
}

/// One confusion row of a threshold sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub threshold: f64,
    pub delay_s: f64,
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tn: usize,
    /// None when no window was predicted positive.
    pub precision: Option<f64>,
    /// None when no window carries a positive label.
    pub recall: Option<f64>,
}

#[derive(Debug, Clone, Default)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
}

/// Per-axis first differences scaled to mG/s: jerk[i] = (a[i+1] - a[i]) * 100.
pub fn compute_jerk(record: &WhaleRecord) -> Result<JerkSeries> {
    if record.len() < 2 {
        return Err(Error::Validation(
            "jerk needs at least two accel samples".into(),
        ));
    }
    let diff = |a: &[f64]| -> Vec<f64> {
        a.windows(2).map(|w| (w[1] - w[0]) * 100.0).collect()
    };
    Ok(JerkSeries {
        x: diff(&record.ax),
        y: diff(&record.ay),
        z: diff(&record.az),
    })
}

/// RMS of the 60 per-axis jerk values (or 20 Euclidean norms) over
/// non-overlapping 200 ms windows; a trailing partial window is dropped.
pub fn rms_jerk(jerks: &JerkSeries, kind: JerkKind) -> Result<Vec<f64>> {
    if jerks.len() < WINDOW_SAMPLES {
        return Err(Error::Validation(format!(
            "need at least {WINDOW_SAMPLES} jerk samples, got {}",
            jerks.len()
        )));
    }
    let n_windows = jerks.len() / WINDOW_SAMPLES;
    let denom = match kind {
        JerkKind::PerAxis => (3 * WINDOW_SAMPLES) as f64,
        JerkKind::Euclidean => WINDOW_SAMPLES as f64,
    };
    let mut out = Vec::with_capacity(n_windows);
    for w in 0..n_windows {
        let s = w * WINDOW_SAMPLES;
        let mut acc = 0.0;
        for i in s..s + WINDOW_SAMPLES {
            acc += jerks.x[i] * jerks.x[i] + jerks.y[i] * jerks.y[i] + jerks.z[i] * jerks.z[i];
        }
        out.push((acc / denom).sqrt());
    }
    Ok(out)
}

/// Buzz label per 200 ms window: 1 iff at least half of the 20 samples
/// are buzzing.
pub fn window_buzz_labels(buzz: &[u8]) -> Vec<u8> {
    buzz.chunks_exact(WINDOW_SAMPLES)
        .map(|c| {
            let ones: usize = c.iter().map(|&b| b as usize).sum();
            (2 * ones >= WINDOW_SAMPLES) as u8
        })
        .collect()
}

/// RMS series and aligned window labels for a record, truncated to the
/// common window count.
pub fn jerk_windows(record: &WhaleRecord, kind: JerkKind) -> Result<(Vec<f64>, Vec<u8>)> {
    let jerks = compute_jerk(record)?;
    let mut rms = rms_jerk(&jerks, kind)?;
    let mut labels = window_buzz_labels(&record.buzz);
    let n = rms.len().min(labels.len());
    rms.truncate(n);
    labels.truncate(n);
    Ok((rms, labels))
}

/// Inclusive threshold grid 0..=max in fixed steps.
pub fn default_thresholds(max: f64, step: f64) -> Vec<f64> {
    let mut t = Vec::new();
    let mut v = 0.0;
    while v <= max + 1e-9 {
        t.push(v);
        v += step;
    }
    t
}

/// Sweeps detection thresholds and delays over the RMS series.
///
/// A window is predicted positive when its RMS exceeds the threshold
/// strictly. With delay d the RMS window at time t is compared against the
/// buzz label at time t - d, checking whether big jerks trail the buzz.
/// Rows are ordered by delay, then threshold.
pub fn sweep(
    rms: &[f64],
    labels: &[u8],
    thresholds: &[f64],
    delays_s: &[f64],
) -> Result<SweepResult> {
    if rms.len() != labels.len() {
        return Err(Error::Shape(format!(
            "rms has {} windows, labels {}",
            rms.len(),
            labels.len()
        )));
    }
    let mut rows = Vec::with_capacity(thresholds.len() * delays_s.len());
    for &delay in delays_s {
        let steps = delay / WINDOW_S;
        if (steps - steps.round()).abs() > 1e-9 || delay < 0.0 {
            return Err(Error::Config(format!(
                "delay {delay} s is not a multiple of the {WINDOW_S} s window"
            )));
        }
        let k = steps.round() as usize;
        if k >= rms.len() {
            return Err(Error::Config(format!(
                "delay {delay} s exceeds the record's {} windows",
                rms.len()
            )));
        }
        for &threshold in thresholds {
            let mut tp = 0;
            let mut fp = 0;
            let mut fn_ = 0;
            let mut tn = 0;
            for i in k..rms.len() {
                let pos = rms[i] > threshold;
                let lab = labels[i - k] == 1;
                match (pos, lab) {
                    (true, true) => tp += 1,
                    (true, false) => fp += 1,
                    (false, true) => fn_ += 1,
                    (false, false) => tn += 1,
                }
            }
            rows.push(SweepRow {
                threshold,
                delay_s: delay,
                tp,
                fp,
                fn_,
                tn,
                precision: ratio(tp, tp + fp),
                recall: ratio(tp, tp + fn_),
            });
        }
    }
    Ok(SweepResult { rows })
}

fn ratio(num: usize, denom: usize) -> Option<f64> {
    if denom == 0 {
        None
    } else {
        Some(num as f64 / denom as f64)
    }
}
