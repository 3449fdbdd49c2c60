//! Aligned time-series data model and channel ingestion.
//!
//! Raw deployments carry tri-axial acceleration at 100 Hz, depth at 10 Hz
//! and binary buzz labels at 10 Hz (or as a list of time intervals). A
//! [`WhaleRecord`] holds everything resampled to a single 100 Hz timeline:
//! depth by linear interpolation, labels by hold expansion, plus the dive
//! phase annotation.

use crate::dive::{self, DivePhase};
use crate::error::{Error, Result};

/// Samples per second of the common timeline.
pub const SAMPLE_RATE_HZ: f64 = 100.0;
/// Depth channel rate of the raw instrument.
pub const DEPTH_RATE_HZ: f64 = 10.0;
/// Ratio between the accelerometer and depth sampling rates.
pub const DEPTH_UPSAMPLE: usize = 10;
/// Allowed length slack between 10x the depth length and the accel length,
/// in 100 Hz samples.
pub const ALIGN_SLACK: usize = 10;
/// Depth readings below this are rejected as sensor faults, in meters.
pub const MIN_DEPTH_M: f64 = -1.0;

/// Buzz ground truth as delivered: a 10 Hz binary sequence or a sorted list
/// of `(start_s, end_s)` intervals.
#[derive(Debug, Clone)]
pub enum BuzzInput {
    Labels10Hz(Vec<u8>),
    Intervals(Vec<(f64, f64)>),
}

/// Raw per-deployment channels before alignment.
#[derive(Debug, Clone)]
pub struct RawChannels {
    pub whale_id: String,
    /// Acceleration in mG at 100 Hz.
    pub accel_x: Vec<f64>,
    pub accel_y: Vec<f64>,
    pub accel_z: Vec<f64>,
    /// Depth in meters (positive down) at 10 Hz.
    pub depth_10hz: Vec<f64>,
    pub buzz: BuzzInput,
}

/// Fully aligned 100 Hz record: three accel axes, depth, dive phase and the
/// binary buzz response, all of identical length.
#[derive(Debug, Clone, PartialEq)]
pub struct WhaleRecord {
    pub whale_id: String,
    /// Optional epoch timestamp of sample 0, seconds.
    pub t0: Option<f64>,
    pub ax: Vec<f64>,
    pub ay: Vec<f64>,
    pub az: Vec<f64>,
    pub depth: Vec<f64>,
    pub phase: Vec<DivePhase>,
    pub buzz: Vec<u8>,
}

impl WhaleRecord {
    pub fn len(&self) -> usize {
        self.ax.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ax.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.len() as f64 / SAMPLE_RATE_HZ
    }

    /// Checks the record invariants: equal channel lengths, depth above the
    /// sensor-fault floor, binary labels.
    pub fn validate(&self) -> Result<()> {
        let n = self.ax.len();
        if [
            self.ay.len(),
            self.az.len(),
            self.depth.len(),
            self.phase.len(),
            self.buzz.len(),
        ]
        .iter()
        .any(|&l| l != n)
        {
            return Err(Error::Validation(format!(
                "channel lengths differ in record {}",
                self.whale_id
            )));
        }
        if let Some(i) = self.depth.iter().position(|d| *d < MIN_DEPTH_M || !d.is_finite()) {
            return Err(Error::Validation(format!(
                "depth[{i}] = {} m is below the {MIN_DEPTH_M} m floor",
                self.depth[i]
            )));
        }
        if let Some(i) = self.buzz.iter().position(|b| *b > 1) {
            return Err(Error::Validation(format!(
                "buzz[{i}] = {} is not binary",
                self.buzz[i]
            )));
        }
        Ok(())
    }

    /// Copies the half-open sample range `[start, end)` into a new record.
    pub fn slice(&self, start: usize, end: usize) -> WhaleRecord {
        WhaleRecord {
            whale_id: self.whale_id.clone(),
            t0: self.t0.map(|t| t + start as f64 / SAMPLE_RATE_HZ),
            ax: self.ax[start..end].to_vec(),
            ay: self.ay[start..end].to_vec(),
            az: self.az[start..end].to_vec(),
            depth: self.depth[start..end].to_vec(),
            phase: self.phase[start..end].to_vec(),
            buzz: self.buzz[start..end].to_vec(),
        }
    }
}

fn check_slack(source_len: usize, target_len: usize) -> Result<()> {
    let nominal = source_len * DEPTH_UPSAMPLE;
    let diff = nominal.abs_diff(target_len);
    if diff > ALIGN_SLACK {
        return Err(Error::Alignment(format!(
            "10 Hz channel of {source_len} samples cannot align to {target_len} \
             100 Hz samples (off by {diff}, slack {ALIGN_SLACK})"
        )));
    }
    Ok(())
}

/// Upsamples a 10 Hz depth series to `target_len` 100 Hz samples by linear
/// interpolation between consecutive readings, holding the last value over
/// the trailing slack.
pub fn resample_depth(depth_10hz: &[f64], target_len: usize) -> Result<Vec<f64>> {
    if depth_10hz.is_empty() {
        return Err(Error::Validation("empty depth channel".into()));
    }
    check_slack(depth_10hz.len(), target_len)?;
    let last = depth_10hz.len() - 1;
    let mut out = Vec::with_capacity(target_len);
    for i in 0..target_len {
        let j = i / DEPTH_UPSAMPLE;
        if j >= last {
            out.push(depth_10hz[last]);
        } else {
            let frac = (i % DEPTH_UPSAMPLE) as f64 / DEPTH_UPSAMPLE as f64;
            out.push(depth_10hz[j] + frac * (depth_10hz[j + 1] - depth_10hz[j]));
        }
    }
    Ok(out)
}

/// Expands 10 Hz binary labels to `target_len` 100 Hz samples by repeating
/// each label ten times; the trailing slack holds the last label.
pub fn expand_buzz_labels(buzz_10hz: &[u8], target_len: usize) -> Result<Vec<u8>> {
    if buzz_10hz.is_empty() {
        return Err(Error::Validation("empty buzz channel".into()));
    }
    if let Some(i) = buzz_10hz.iter().position(|b| *b > 1) {
        return Err(Error::Validation(format!(
            "buzz label[{i}] = {} is not binary",
            buzz_10hz[i]
        )));
    }
    check_slack(buzz_10hz.len(), target_len)?;
    let last = buzz_10hz.len() - 1;
    Ok((0..target_len)
        .map(|i| buzz_10hz[(i / DEPTH_UPSAMPLE).min(last)])
        .collect())
}

/// Rasterizes `(start_s, end_s)` intervals onto an `n`-sample 100 Hz grid.
/// A sample belongs to the interval containing its left edge (half-open).
pub fn rasterize_intervals(intervals: &[(f64, f64)], n: usize) -> Result<Vec<u8>> {
    let duration = n as f64 / SAMPLE_RATE_HZ;
    let mut prev_end = 0.0_f64;
    for &(s, e) in intervals {
        if !(s >= 0.0 && s < e && e <= duration) {
            return Err(Error::Validation(format!(
                "interval ({s}, {e}) outside [0, {duration}] or empty"
            )));
        }
        if s < prev_end {
            return Err(Error::Validation(format!(
                "interval ({s}, {e}) overlaps or is unsorted (previous end {prev_end})"
            )));
        }
        prev_end = e;
    }
    let mut out = vec![0u8; n];
    for &(s, e) in intervals {
        // sample i is inside iff start <= i/100 < end (left-edge rule)
        let mut i = (s * SAMPLE_RATE_HZ).ceil() as usize;
        while i < n && (i as f64) / SAMPLE_RATE_HZ < e {
            out[i] = 1;
            i += 1;
        }
    }
    Ok(out)
}

/// Assembles a [`WhaleRecord`] from raw channels: resamples depth, expands
/// or rasterizes buzz labels, annotates dive phases.
pub fn build_record(raw: &RawChannels) -> Result<WhaleRecord> {
    let n = raw.accel_x.len();
    if raw.accel_y.len() != n || raw.accel_z.len() != n {
        return Err(Error::Validation(format!(
            "accel channel lengths differ: x {}, y {}, z {}",
            n,
            raw.accel_y.len(),
            raw.accel_z.len()
        )));
    }
    if n == 0 {
        return Err(Error::Validation("empty accel channels".into()));
    }
    let depth = resample_depth(&raw.depth_10hz, n)?;
    let buzz = match &raw.buzz {
        BuzzInput::Labels10Hz(labels) => expand_buzz_labels(labels, n)?,
        BuzzInput::Intervals(iv) => rasterize_intervals(iv, n)?,
    };
    let (phase, _) = dive::annotate(&depth);
    let record = WhaleRecord {
        whale_id: raw.whale_id.clone(),
        t0: None,
        ax: raw.accel_x.clone(),
        ay: raw.accel_y.clone(),
        az: raw.accel_z.clone(),
        depth,
        phase,
        buzz,
    };
    record.validate()?;
    Ok(record)
}

/// Fraction of samples labeled 1.
pub fn positive_rate(buzz: &[u8]) -> Result<f64> {
    if buzz.is_empty() {
        return Err(Error::Validation("positive rate of an empty sequence".into()));
    }
    Ok(buzz.iter().map(|&b| b as f64).sum::<f64>() / buzz.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn resample_constant_depth() {
        let out = resample_depth(&[5.0; 30], 300).unwrap();
        assert_eq!(out.len(), 300);
        assert!(out.iter().all(|&d| d == 5.0));
    }

    #[test]
    fn resample_two_samples_with_trailing_hold() {
        let out = resample_depth(&[0.0, 10.0], 20).unwrap();
        let expect: Vec<f64> = (0..10)
            .map(|i| i as f64)
            .chain(std::iter::repeat(10.0).take(10))
            .collect();
        assert_eq!(out, expect);
    }

    #[test]
    fn resample_single_sample_holds() {
        let out = resample_depth(&[7.3], 10).unwrap();
        assert_eq!(out, vec![7.3; 10]);
    }

    #[test]
    fn resample_rejects_misaligned_lengths() {
        assert!(matches!(
            resample_depth(&[1.0; 10], 200),
            Err(Error::Alignment(_))
        ));
    }

    #[test]
    fn resample_preserves_order_statistics() {
        let src = [3.0, 8.5, 1.2, 40.0, 39.9, 2.0];
        let out = resample_depth(&src, 60).unwrap();
        let (min, max) = (
            out.iter().cloned().fold(f64::INFINITY, f64::min),
            out.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        );
        assert_eq!(min, 1.2);
        assert_eq!(max, 40.0);
    }

    #[test]
    fn expand_repeats_each_label_ten_times() {
        let out = expand_buzz_labels(&[0, 1, 0], 30).unwrap();
        let mut expect = vec![0u8; 10];
        expect.extend(vec![1u8; 10]);
        expect.extend(vec![0u8; 10]);
        assert_eq!(out, expect);
    }

    #[test]
    fn expand_holds_last_label_over_slack() {
        assert_eq!(expand_buzz_labels(&[1], 12).unwrap(), vec![1u8; 12]);
    }

    #[test]
    fn expand_rejects_non_binary() {
        assert!(matches!(
            expand_buzz_labels(&[0, 2], 20),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn expand_then_majority_downsample_roundtrips() {
        let src: Vec<u8> = (0..50).map(|i| (i % 3 == 0) as u8).collect();
        let out = expand_buzz_labels(&src, 500).unwrap();
        let back: Vec<u8> = out
            .chunks(10)
            .map(|c| (c.iter().map(|&b| b as u32).sum::<u32>() * 2 > c.len() as u32) as u8)
            .collect();
        assert_eq!(back, src);
    }

    #[test]
    fn rasterize_marks_half_open_span() {
        let buzz = rasterize_intervals(&[(1.0, 2.0)], 300).unwrap();
        assert!(buzz[..100].iter().all(|&b| b == 0));
        assert!(buzz[100..200].iter().all(|&b| b == 1));
        assert!(buzz[200..].iter().all(|&b| b == 0));
    }

    #[test]
    fn rasterize_empty_list_gives_zeros() {
        let buzz = rasterize_intervals(&[], 100).unwrap();
        assert!(buzz.iter().all(|&b| b == 0));
    }

    #[test]
    fn rasterize_rejects_overlap() {
        assert!(rasterize_intervals(&[(0.0, 1.0), (0.5, 2.0)], 300).is_err());
    }

    #[test]
    fn build_record_keeps_accel_length() {
        let raw = RawChannels {
            whale_id: "w1".into(),
            accel_x: vec![0.0; 1000],
            accel_y: vec![0.0; 1000],
            accel_z: vec![0.0; 1000],
            depth_10hz: vec![0.0; 100],
            buzz: BuzzInput::Intervals(vec![(1.0, 2.0)]),
        };
        let rec = build_record(&raw).unwrap();
        assert_eq!(rec.len(), 1000);
        assert_eq!(rec.buzz[100..200], [1u8; 100]);
        assert_eq!(rec.buzz.iter().map(|&b| b as usize).sum::<usize>(), 100);
    }

    #[test]
    fn build_record_rejects_deep_negative_depth() {
        let raw = RawChannels {
            whale_id: "w1".into(),
            accel_x: vec![0.0; 100],
            accel_y: vec![0.0; 100],
            accel_z: vec![0.0; 100],
            depth_10hz: vec![-2.0; 10],
            buzz: BuzzInput::Labels10Hz(vec![0; 10]),
        };
        assert!(build_record(&raw).is_err());
    }

    #[test]
    fn positive_rate_basics() {
        assert_eq!(positive_rate(&[0; 100]).unwrap(), 0.0);
        assert!(positive_rate(&[]).is_err());
        // one 1 s buzz in 100 s at 100 Hz
        let mut buzz = vec![0u8; 10_000];
        for b in buzz[400..500].iter_mut() {
            *b = 1;
        }
        assert_eq!(positive_rate(&buzz).unwrap(), 0.01);
    }
}
