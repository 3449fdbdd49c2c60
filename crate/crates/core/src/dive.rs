//! Dive detection and phase segmentation from the depth channel.
//!
//! A dive is a maximal run of samples deeper than 10 m whose maximum depth
//! reaches at least 20 m. Within each dive the bottom phase is the contiguous
//! span between the first and last sample at or below 75% of the dive's
//! maximum depth; descent and ascent are the spans before and after it.
//! Samples outside all dives are surface.

use crate::error::Result;

/// Depth that opens and closes a dive, in meters.
pub const DIVE_EDGE_M: f64 = 10.0;
/// Minimum maximum depth for a run to count as a dive, in meters.
pub const DIVE_MIN_MAX_M: f64 = 20.0;
/// Bottom phase threshold as a fraction of the dive's maximum depth.
pub const BOTTOM_FRACTION: f64 = 0.75;

/// Per-sample dive phase. The discriminants fix the one-hot column order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum DivePhase {
    Surface = 0,
    Descent = 1,
    Bottom = 2,
    Ascent = 3,
}

impl DivePhase {
    /// One-hot encoding: surface (1,0,0,0), descent (0,1,0,0),
    /// bottom (0,0,1,0), ascent (0,0,0,1).
    pub fn one_hot(self) -> [f64; 4] {
        let mut v = [0.0; 4];
        v[self as usize] = 1.0;
        v
    }

    pub fn from_u8(b: u8) -> Option<DivePhase> {
        match b {
            0 => Some(DivePhase::Surface),
            1 => Some(DivePhase::Descent),
            2 => Some(DivePhase::Bottom),
            3 => Some(DivePhase::Ascent),
            _ => None,
        }
    }
}

/// One detected dive. All indices are 100 Hz sample indices and ranges are
/// half-open.
#[derive(Debug, Clone, PartialEq)]
pub struct Dive {
    pub start_idx: usize,
    pub end_idx: usize,
    pub max_depth_m: f64,
    pub bottom_start_idx: usize,
    pub bottom_end_idx: usize,
}

impl Dive {
    pub fn len(&self) -> usize {
        self.end_idx - self.start_idx
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Start of the dive in seconds.
    pub fn start_s(&self) -> f64 {
        self.start_idx as f64 * 0.01
    }

    /// End of the dive in seconds (half-open).
    pub fn end_s(&self) -> f64 {
        self.end_idx as f64 * 0.01
    }
}

/// Detects dives as maximal runs of depth > 10 m whose maximum is >= 20 m.
///
/// Ties at exactly 10.0 m are surface. Runs whose maximum stays below 20 m
/// are ignored. Bottom boundaries are filled by the 75% rule.
pub fn detect_dives(depth: &[f64]) -> Vec<Dive> {
    let mut dives = Vec::new();
    let mut run_start: Option<usize> = None;
    for i in 0..=depth.len() {
        let submerged = i < depth.len() && depth[i] > DIVE_EDGE_M;
        match (run_start, submerged) {
            (None, true) => run_start = Some(i),
            (Some(s), false) => {
                run_start = None;
                let run = &depth[s..i];
                let max = run.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                if max >= DIVE_MIN_MAX_M {
                    let (bs, be) = bottom_span(depth, s, i, max);
                    dives.push(Dive {
                        start_idx: s,
                        end_idx: i,
                        max_depth_m: max,
                        bottom_start_idx: bs,
                        bottom_end_idx: be,
                    });
                }
            }
            _ => {}
        }
    }
    dives
}

/// Bottom = [first, last] sample with depth >= 0.75 * max, half-open on exit.
fn bottom_span(depth: &[f64], start: usize, end: usize, max: f64) -> (usize, usize) {
    let threshold = BOTTOM_FRACTION * max;
    let first = (start..end)
        .find(|&i| depth[i] >= threshold)
        .expect("max sample always qualifies");
    let last = (start..end)
        .rev()
        .find(|&i| depth[i] >= threshold)
        .expect("max sample always qualifies");
    (first, last + 1)
}

/// Phase assignment for one dive's samples, `dive.len()` entries.
///
/// Descent runs from the dive start to the bottom onset, ascent from the
/// bottom end to the dive end.
pub fn segment_phases(dive: &Dive, _depth: &[f64]) -> Vec<DivePhase> {
    let mut phases = vec![DivePhase::Surface; dive.len()];
    for (off, p) in phases.iter_mut().enumerate() {
        let i = dive.start_idx + off;
        *p = if i < dive.bottom_start_idx {
            DivePhase::Descent
        } else if i < dive.bottom_end_idx {
            DivePhase::Bottom
        } else {
            DivePhase::Ascent
        };
    }
    phases
}

/// Detects dives and annotates every sample of the record with its phase.
pub fn annotate(depth: &[f64]) -> (Vec<DivePhase>, Vec<Dive>) {
    let dives = detect_dives(depth);
    let mut phases = vec![DivePhase::Surface; depth.len()];
    for dive in &dives {
        for (off, p) in segment_phases(dive, depth).into_iter().enumerate() {
            phases[dive.start_idx + off] = p;
        }
    }
    (phases, dives)
}

/// Running median over an odd window, endpoints held. Optional pre-filter
/// for noisy depth traces; detection itself never smooths.
pub fn median_filter(depth: &[f64], window: usize) -> Result<Vec<f64>> {
    if window == 0 || window % 2 == 0 {
        return Err(crate::error::Error::Config(format!(
            "median filter window must be odd and positive, got {window}"
        )));
    }
    let half = window / 2;
    let n = depth.len();
    let mut out = Vec::with_capacity(n);
    let mut buf = Vec::with_capacity(window);
    for i in 0..n {
        let lo = i.saturating_sub(half);
        let hi = (i + half + 1).min(n);
        buf.clear();
        buf.extend_from_slice(&depth[lo..hi]);
        buf.sort_by(|a, b| a.partial_cmp(b).unwrap());
        out.push(buf[buf.len() / 2]);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Triangle profile: 0 up to `peak` meters and back, `secs` seconds total,
    /// 100 Hz.
    fn triangle(peak: f64, secs: f64) -> Vec<f64> {
        let n = (secs * 100.0) as usize;
        (0..n)
            .map(|i| {
                let t = i as f64 / (n - 1) as f64;
                peak * (1.0 - (2.0 * t - 1.0).abs())
            })
            .collect()
    }

    #[test]
    fn constant_surface_has_no_dives() {
        assert!(detect_dives(&vec![0.0; 1000]).is_empty());
    }

    #[test]
    fn shallow_excursion_below_20m_is_ignored() {
        let depth = triangle(15.0, 60.0);
        assert!(detect_dives(&depth).is_empty());
    }

    #[test]
    fn triangular_dive_boundaries_at_10m_crossings() {
        // 0 -> 30 m -> 0 over 60 s: depth crosses 10 m at t = 10 s and t = 50 s.
        let depth = triangle(30.0, 60.0);
        let dives = detect_dives(&depth);
        assert_eq!(dives.len(), 1);
        let d = &dives[0];
        assert!((d.max_depth_m - 30.0).abs() < 0.02);
        // 10 m upward crossing at sample ~1000, downward at ~5000.
        assert!((d.start_idx as i64 - 1000).abs() <= 2, "start {}", d.start_idx);
        assert!((d.end_idx as i64 - 5000).abs() <= 2, "end {}", d.end_idx);
        assert!(depth[d.start_idx] > 10.0);
        assert!(depth[d.start_idx - 1] <= 10.0);
    }

    #[test]
    fn bottom_phase_spans_075_crossings() {
        // Symmetric triangle to 40 m: bottom is exactly the span >= 30 m.
        let depth = triangle(40.0, 80.0);
        let dives = detect_dives(&depth);
        assert_eq!(dives.len(), 1);
        let d = &dives[0];
        let thr = 0.75 * d.max_depth_m;
        assert!(depth[d.bottom_start_idx] >= thr);
        assert!(depth[d.bottom_start_idx - 1] < thr);
        assert!(depth[d.bottom_end_idx - 1] >= thr);
        assert!(depth[d.bottom_end_idx] < thr);
    }

    #[test]
    fn square_dive_has_degenerate_descent() {
        let mut depth = vec![0.0; 100];
        depth.extend(vec![50.0; 200]);
        depth.extend(vec![0.0; 100]);
        let dives = detect_dives(&depth);
        assert_eq!(dives.len(), 1);
        let d = &dives[0];
        assert_eq!(d.bottom_start_idx - d.start_idx, 0);
    }

    #[test]
    fn phase_ordering_surface_descent_bottom_ascent_surface() {
        let depth = triangle(100.0, 120.0);
        let (phases, dives) = annotate(&depth);
        assert_eq!(dives.len(), 1);
        let mut order = vec![phases[0]];
        for w in phases.windows(2) {
            if w[1] != w[0] {
                order.push(w[1]);
            }
        }
        assert_eq!(
            order,
            vec![
                DivePhase::Surface,
                DivePhase::Descent,
                DivePhase::Bottom,
                DivePhase::Ascent,
                DivePhase::Surface
            ]
        );
    }

    #[test]
    fn shallow_spike_splits_a_dive() {
        // Two lobes above 10 m separated by a 5 m spike: two candidate runs.
        let mut depth = triangle(30.0, 60.0);
        let mid = depth.len() / 2;
        for d in depth[mid - 50..mid + 50].iter_mut() {
            *d = 5.0;
        }
        let dives = detect_dives(&depth);
        assert_eq!(dives.len(), 2);
        assert!(dives[0].end_idx <= dives[1].start_idx);
    }

    #[test]
    fn exactly_10m_is_surface() {
        let depth = vec![10.0; 500];
        assert!(detect_dives(&depth).is_empty());
    }

    #[test]
    fn one_hot_columns() {
        assert_eq!(DivePhase::Surface.one_hot(), [1.0, 0.0, 0.0, 0.0]);
        assert_eq!(DivePhase::Descent.one_hot(), [0.0, 1.0, 0.0, 0.0]);
        assert_eq!(DivePhase::Bottom.one_hot(), [0.0, 0.0, 1.0, 0.0]);
        assert_eq!(DivePhase::Ascent.one_hot(), [0.0, 0.0, 0.0, 1.0]);
        for p in [
            DivePhase::Surface,
            DivePhase::Descent,
            DivePhase::Bottom,
            DivePhase::Ascent,
        ] {
            assert_eq!(p.one_hot().iter().sum::<f64>(), 1.0);
        }
    }

    #[test]
    fn phases_cover_whole_record_without_overlap() {
        let mut depth = triangle(50.0, 100.0);
        depth.extend(triangle(25.0, 40.0));
        depth.extend(vec![0.0; 300]);
        let (phases, dives) = annotate(&depth);
        assert_eq!(phases.len(), depth.len());
        // Every non-surface sample lies inside exactly one dive.
        for (i, p) in phases.iter().enumerate() {
            let inside = dives.iter().any(|d| i >= d.start_idx && i < d.end_idx);
            assert_eq!(*p != DivePhase::Surface, inside, "sample {i}");
        }
    }

    #[test]
    fn time_shift_invariance() {
        let depth = triangle(60.0, 90.0);
        let (phases, _) = annotate(&depth);
        let shift = 321;
        let mut shifted = vec![0.0; shift];
        shifted.extend_from_slice(&depth);
        let (phases2, _) = annotate(&shifted);
        assert_eq!(&phases2[shift..], &phases[..]);
        assert!(phases2[..shift].iter().all(|p| *p == DivePhase::Surface));
    }

    #[test]
    fn bottom_nonempty_for_every_dive() {
        let mut depth = Vec::new();
        for peak in [20.0, 35.0, 200.0, 1000.0] {
            depth.extend(triangle(peak, 60.0));
            depth.extend(vec![0.0; 100]);
        }
        for d in detect_dives(&depth) {
            assert!(d.bottom_end_idx > d.bottom_start_idx);
            assert!(d.start_idx <= d.bottom_start_idx);
            assert!(d.bottom_end_idx <= d.end_idx);
        }
    }

    #[test]
    fn median_filter_rejects_even_window() {
        assert!(median_filter(&[1.0, 2.0], 4).is_err());
        assert!(median_filter(&[1.0, 2.0], 0).is_err());
    }

    #[test]
    fn median_filter_removes_single_spike() {
        let mut depth = vec![30.0; 101];
        depth[50] = 5.0;
        let f = median_filter(&depth, 5).unwrap();
        assert_eq!(f[50], 30.0);
    }
}
