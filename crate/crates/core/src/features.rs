//! Window-level feature extraction for the tabular detectors.
//!
//! The record is cut into 1 s windows (100 samples) with 50% overlap. Each
//! window yields 26 real-valued summaries of the accelerometer and depth
//! channels plus the one-hot dive phase, and a binary label that is 1 when
//! a strict majority of the window's samples lie inside a buzz.
//!
//! Conventions (both the extractor and the test oracle follow these):
//! - STD uses the sample denominator (n-1); RMS divides by n.
//! - Peaks are strict local maxima; plateaus do not count.
//! - Fewer than two peaks gives a 0.0 mean peak interval.
//! - A zero-variance channel has correlation 0 with everything.
//! - The variance across the three per-axis peak counts uses the sample
//!   denominator (2).

use crate::data::WhaleRecord;
use crate::dive::DivePhase;
use crate::error::{Error, Result};

/// Number of real-valued feature columns (excluding the one-hot phase).
pub const N_REAL_FEATURES: usize = 26;
/// Total model input width: real features plus the 4 one-hot phase columns.
pub const N_FEATURES: usize = N_REAL_FEATURES + 4;

/// Column names in table order, without `w_idx`/`start_s`/`label`.
pub const FEATURE_NAMES: [&str; N_FEATURES] = [
    "ax_mean", "ax_std", "ax_rms", "ax_minmax",
    "ay_mean", "ay_std", "ay_rms", "ay_minmax",
    "az_mean", "az_std", "az_rms", "az_minmax",
    "depth_mean",
    "am_std", "am_rms", "am_minmax",
    "ax_peaks", "ay_peaks", "az_peaks",
    "ax_peak_gap_s", "ay_peak_gap_s", "az_peak_gap_s",
    "peak_count_var",
    "corr_xy", "corr_yz", "corr_zx",
    "phase_surface", "phase_descent", "phase_bottom", "phase_ascent",
];

/// Window geometry in samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WindowSpec {
    pub size: usize,
    pub stride: usize,
}

impl Default for WindowSpec {
    fn default() -> Self {
        WindowSpec { size: 100, stride: 50 }
    }
}

impl WindowSpec {
    pub fn new(size: usize, stride: usize) -> Result<WindowSpec> {
        if stride == 0 || stride > size {
            return Err(Error::Config(format!(
                "window stride must satisfy 0 < stride <= size, got size {size}, stride {stride}"
            )));
        }
        Ok(WindowSpec { size, stride })
    }
}

/// How a window's dive phase is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PhaseRule {
    /// Phase of the center sample.
    #[default]
    Center,
    /// Most frequent phase in the window, earliest phase wins ties.
    Majority,
}

/// Number of windows that fit: floor((n - size) / stride) + 1, or zero.
pub fn window_count(n_samples: usize, spec: WindowSpec) -> usize {
    if n_samples < spec.size {
        0
    } else {
        (n_samples - spec.size) / spec.stride + 1
    }
}

/// 1 iff strictly more than half of the samples are buzz.
pub fn label_window(buzz: &[u8]) -> u8 {
    let ones: usize = buzz.iter().map(|&b| b as usize).sum();
    (2 * ones > buzz.len()) as u8
}

/// Strict local maxima count; the first and last sample never qualify.
pub fn count_peaks(signal: &[f64]) -> usize {
    peak_indices(signal).len()
}

fn peak_indices(signal: &[f64]) -> Vec<usize> {
    if signal.len() < 3 {
        return Vec::new();
    }
    (1..signal.len() - 1)
        .filter(|&i| signal[i] > signal[i - 1] && signal[i] > signal[i + 1])
        .collect()
}

/// Mean gap between consecutive peaks in seconds (at 100 Hz); 0.0 when
/// fewer than two peaks exist.
pub fn mean_peak_interval(signal: &[f64]) -> f64 {
    let peaks = peak_indices(signal);
    if peaks.len() < 2 {
        return 0.0;
    }
    let total: usize = peaks.windows(2).map(|w| w[1] - w[0]).sum();
    (total as f64 / (peaks.len() - 1) as f64) * 0.01
}

/// Pearson correlation; 0.0 when either side has zero variance.
pub fn pearson_corr(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "pearson_corr requires equal lengths");
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let mut sab = 0.0;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    for i in 0..a.len() {
        let da = a[i] - ma;
        let db = b[i] - mb;
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    if saa == 0.0 || sbb == 0.0 {
        0.0
    } else {
        sab / (saa * sbb).sqrt()
    }
}

/// One extracted window: 30 feature columns plus label and provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRow {
    pub w_idx: usize,
    pub start_s: f64,
    pub features: [f64; N_FEATURES],
    pub label: u8,
}

/// Extracted feature table, rows ordered by window index.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FeatureTable {
    pub rows: Vec<FeatureRow>,
}

impl FeatureTable {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn labels(&self) -> Vec<u8> {
        self.rows.iter().map(|r| r.label).collect()
    }

    pub fn append(&mut self, mut other: FeatureTable) {
        self.rows.append(&mut other.rows);
    }
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

fn std_sample(x: &[f64], m: f64) -> f64 {
    (x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (x.len() - 1) as f64).sqrt()
}

fn rms(x: &[f64]) -> f64 {
    (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt()
}

fn minmax(x: &[f64]) -> f64 {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &v in x {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    hi - lo
}

fn window_phase(phase: &[DivePhase], rule: PhaseRule) -> DivePhase {
    match rule {
        PhaseRule::Center => phase[phase.len() / 2],
        PhaseRule::Majority => {
            let mut counts = [0usize; 4];
            for p in phase {
                counts[*p as usize] += 1;
            }
            let best = (0..4).max_by_key(|&i| (counts[i], std::cmp::Reverse(i))).unwrap();
            DivePhase::from_u8(best as u8).unwrap()
        }
    }
}

/// Computes the 30 feature columns of one window.
pub fn window_features(
    ax: &[f64],
    ay: &[f64],
    az: &[f64],
    depth: &[f64],
    phase: DivePhase,
) -> [f64; N_FEATURES] {
    let mut f = [0.0; N_FEATURES];
    let mut k = 0;
    for axis in [ax, ay, az] {
        let m = mean(axis);
        f[k] = m;
        f[k + 1] = std_sample(axis, m);
        f[k + 2] = rms(axis);
        f[k + 3] = minmax(axis);
        k += 4;
    }
    f[12] = mean(depth);
    let am: Vec<f64> = (0..ax.len())
        .map(|i| (ax[i] * ax[i] + ay[i] * ay[i] + az[i] * az[i]).sqrt())
        .collect();
    let am_mean = mean(&am);
    f[13] = std_sample(&am, am_mean);
    f[14] = rms(&am);
    f[15] = minmax(&am);
    let peaks = [
        count_peaks(ax) as f64,
        count_peaks(ay) as f64,
        count_peaks(az) as f64,
    ];
    f[16] = peaks[0];
    f[17] = peaks[1];
    f[18] = peaks[2];
    f[19] = mean_peak_interval(ax);
    f[20] = mean_peak_interval(ay);
    f[21] = mean_peak_interval(az);
    let pm = mean(&peaks);
    f[22] = peaks.iter().map(|p| (p - pm) * (p - pm)).sum::<f64>() / 2.0;
    f[23] = pearson_corr(ax, ay);
    f[24] = pearson_corr(ay, az);
    f[25] = pearson_corr(az, ax);
    let oh = phase.one_hot();
    f[26..30].copy_from_slice(&oh);
    f
}

/// Extracts the full feature table from a record. Windows start at
/// multiples of the stride; a trailing remainder shorter than one window
/// is dropped.
pub fn featurize(record: &WhaleRecord, spec: WindowSpec) -> FeatureTable {
    featurize_with(record, spec, PhaseRule::Center)
}

pub fn featurize_with(record: &WhaleRecord, spec: WindowSpec, rule: PhaseRule) -> FeatureTable {
    let n_windows = window_count(record.len(), spec);
    let mut rows = Vec::with_capacity(n_windows);
    for w in 0..n_windows {
        let s = w * spec.stride;
        let e = s + spec.size;
        let phase = window_phase(&record.phase[s..e], rule);
        rows.push(FeatureRow {
            w_idx: w,
            start_s: s as f64 * 0.01,
            features: window_features(
                &record.ax[s..e],
                &record.ay[s..e],
                &record.az[s..e],
                &record.depth[s..e],
                phase,
            ),
            label: label_window(&record.buzz[s..e]),
        });
    }
    FeatureTable { rows }
}
