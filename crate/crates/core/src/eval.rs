//! Event-level evaluation of buzz predictions.
//!
//! Predictions and ground truth are compared as time intervals: overlap
//! criteria ask how much of each true buzz was found, distance criteria ask
//! how far each predicted buzz sits from its nearest true buzz. Dive-level
//! reports classify dives as foraging (any true buzz) versus not and count
//! buzzes per dive.

use crate::data::SAMPLE_RATE_HZ;
use crate::dive::Dive;
use crate::error::Result;

/// A buzz event as a half-open time interval in seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventInterval {
    pub start_s: f64,
    pub end_s: f64,
}

impl EventInterval {
    pub fn new(start_s: f64, end_s: f64) -> EventInterval {
        EventInterval { start_s, end_s }
    }

    pub fn duration_s(&self) -> f64 {
        self.end_s - self.start_s
    }

    pub fn midpoint_s(&self) -> f64 {
        0.5 * (self.start_s + self.end_s)
    }
}

/// Maximal runs of ones become intervals; runs shorter than `min_len_s`
/// are discarded (0.0 disables the filter).
pub fn extract_events(labels: &[u8], min_len_s: f64) -> Vec<EventInterval> {
    let mut events = Vec::new();
    let mut run_start: Option<usize> = None;
    for i in 0..=labels.len() {
        let one = i < labels.len() && labels[i] == 1;
        match (run_start, one) {
            (None, true) => run_start = Some(i),
            (Some(s), false) => {
                run_start = None;
                let ev = EventInterval::new(s as f64 / SAMPLE_RATE_HZ, i as f64 / SAMPLE_RATE_HZ);
                if ev.duration_s() >= min_len_s - 1e-12 {
                    events.push(ev);
                }
            }
            _ => {}
        }
    }
    events
}

/// Gap between two intervals in seconds; 0 when they overlap or touch.
pub fn interval_distance(a: &EventInterval, b: &EventInterval) -> f64 {
    (a.start_s.max(b.start_s) - a.end_s.min(b.end_s)).max(0.0)
}

/// Overlap as a fraction of the truth interval's length.
pub fn overlap_fraction(pred: &EventInterval, truth: &EventInterval) -> f64 {
    let inter = (pred.end_s.min(truth.end_s) - pred.start_s.max(truth.start_s)).max(0.0);
    inter / truth.duration_s()
}

/// Intersection over union, the alternative overlap criterion.
pub fn overlap_iou(pred: &EventInterval, truth: &EventInterval) -> f64 {
    let inter = (pred.end_s.min(truth.end_s) - pred.start_s.max(truth.start_s)).max(0.0);
    let union = pred.duration_s() + truth.duration_s() - inter;
    if union <= 0.0 {
        0.0
    } else {
        inter / union
    }
}

/// A matching criterion of the event report.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Criterion {
    /// A truth event counts as found when some prediction covers at least
    /// this fraction of it.
    Overlap(f64),
    /// A predicted event counts as correct when its nearest truth event is
    /// strictly closer than this many seconds.
    Distance(f64),
}

impl Criterion {
    pub fn label(&self) -> String {
        match self {
            Criterion::Overlap(t) => format!("overlap_{t}"),
            Criterion::Distance(d) => format!("distance_{d}"),
        }
    }
}

/// Default criteria: four overlap fractions, then the distance ladder.
pub fn default_criteria() -> Vec<Criterion> {
    let mut c: Vec<Criterion> = [0.25, 0.5, 0.75, 1.0]
        .iter()
        .map(|&t| Criterion::Overlap(t))
        .collect();
    c.extend([0.1, 0.5, 1.0, 2.0, 3.0, 4.0, 5.0].iter().map(|&d| Criterion::Distance(d)));
    c
}

/// Matched/total for one criterion; `proportion` is None when the
/// denominator set is empty.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchRow {
    pub criterion: Criterion,
    pub matched: usize,
    pub total: usize,
}

impl MatchRow {
    pub fn proportion(&self) -> Option<f64> {
        if self.total == 0 {
            None
        } else {
            Some(self.matched as f64 / self.total as f64)
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MatchReport {
    pub rows: Vec<MatchRow>,
}

/// Evaluates every criterion. Overlap criteria iterate over truth events,
/// distance criteria over predictions. Both lists must be sorted.
pub fn match_report(
    preds: &[EventInterval],
    truths: &[EventInterval],
    criteria: &[Criterion],
) -> MatchReport {
    let rows = criteria
        .iter()
        .map(|&criterion| match criterion {
            Criterion::Overlap(theta) => {
                let matched = truths
                    .iter()
                    .filter(|t| best_overlap(preds, t) >= theta)
                    .count();
                MatchRow { criterion, matched, total: truths.len() }
            }
            Criterion::Distance(d) => {
                let matched = preds
                    .iter()
                    .filter(|p| nearest_distance(truths, p) < d)
                    .count();
                MatchRow { criterion, matched, total: preds.len() }
            }
        })
        .collect();
    MatchReport { rows }
}

/// Largest fraction of `truth` covered by any single prediction.
fn best_overlap(preds: &[EventInterval], truth: &EventInterval) -> f64 {
    // only predictions intersecting [start, end) can contribute
    let first = preds.partition_point(|p| p.end_s <= truth.start_s);
    preds[first..]
        .iter()
        .take_while(|p| p.start_s < truth.end_s)
        .map(|p| overlap_fraction(p, truth))
        .fold(0.0, f64::max)
}

/// Distance from `pred` to the nearest truth event; infinity when there are
/// no truth events. Within a sorted non-overlapping list the nearest event
/// is adjacent in start order.
fn nearest_distance(truths: &[EventInterval], pred: &EventInterval) -> f64 {
    if truths.is_empty() {
        return f64::INFINITY;
    }
    let i = truths.partition_point(|t| t.start_s <= pred.start_s);
    let mut best = f64::INFINITY;
    if i > 0 {
        best = best.min(interval_distance(pred, &truths[i - 1]));
    }
    if i < truths.len() {
        best = best.min(interval_distance(pred, &truths[i]));
    }
    best
}

/// Merges per-whale match reports by summing matched/total per criterion.
/// All reports must share the same criterion list.
pub fn merge_match_reports(reports: &[MatchReport]) -> MatchReport {
    let mut merged: Vec<MatchRow> = Vec::new();
    for rep in reports {
        if merged.is_empty() {
            merged = rep.rows.clone();
        } else {
            for (acc, row) in merged.iter_mut().zip(&rep.rows) {
                assert_eq!(acc.criterion, row.criterion, "criterion lists differ");
                acc.matched += row.matched;
                acc.total += row.total;
            }
        }
    }
    MatchReport { rows: merged }
}

/// Per-dive event counts and durations.
#[derive(Debug, Clone, PartialEq)]
pub struct DiveRow {
    pub dive_id: usize,
    pub truth_count: usize,
    pub pred_count: usize,
    pub truth_secs: f64,
    pub pred_secs: f64,
}

/// Dive-level foraging classification: a dive is truth-positive when it
/// contains at least one truth buzz, predicted-positive when at least one
/// predicted buzz falls inside it (by midpoint).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DiveReport {
    pub rows: Vec<DiveRow>,
    pub tn: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tp: usize,
    /// Events whose midpoint lies outside every dive.
    pub surface_truth: usize,
    pub surface_pred: usize,
}

impl DiveReport {
    pub fn precision(&self) -> Option<f64> {
        let d = self.tp + self.fp;
        if d == 0 { None } else { Some(self.tp as f64 / d as f64) }
    }

    pub fn recall(&self) -> Option<f64> {
        let d = self.tp + self.fn_;
        if d == 0 { None } else { Some(self.tp as f64 / d as f64) }
    }
}

/// Assigns events to dives by midpoint containment and computes the
/// foraging confusion.
pub fn dive_report(
    dives: &[Dive],
    pred_events: &[EventInterval],
    truth_events: &[EventInterval],
) -> DiveReport {
    let mut rows: Vec<DiveRow> = dives
        .iter()
        .enumerate()
        .map(|(dive_id, _)| DiveRow {
            dive_id,
            truth_count: 0,
            pred_count: 0,
            truth_secs: 0.0,
            pred_secs: 0.0,
        })
        .collect();
    let mut surface_truth = 0;
    let mut surface_pred = 0;
    for ev in truth_events {
        match containing_dive(dives, ev) {
            Some(i) => {
                rows[i].truth_count += 1;
                rows[i].truth_secs += ev.duration_s();
            }
            None => surface_truth += 1,
        }
    }
    for ev in pred_events {
        match containing_dive(dives, ev) {
            Some(i) => {
                rows[i].pred_count += 1;
                rows[i].pred_secs += ev.duration_s();
            }
            None => surface_pred += 1,
        }
    }
    let mut report = DiveReport {
        rows,
        tn: 0,
        fp: 0,
        fn_: 0,
        tp: 0,
        surface_truth,
        surface_pred,
    };
    for row in &report.rows {
        match (row.pred_count > 0, row.truth_count > 0) {
            (true, true) => report.tp += 1,
            (true, false) => report.fp += 1,
            (false, true) => report.fn_ += 1,
            (false, false) => report.tn += 1,
        }
    }
    report
}

fn containing_dive(dives: &[Dive], ev: &EventInterval) -> Option<usize> {
    let mid = ev.midpoint_s();
    dives
        .iter()
        .position(|d| mid >= d.start_s() && mid < d.end_s())
}

/// Merges per-whale dive reports, renumbering dive ids consecutively.
pub fn merge_dive_reports(reports: &[DiveReport]) -> DiveReport {
    let mut merged = DiveReport::default();
    for rep in reports {
        for row in &rep.rows {
            merged.rows.push(DiveRow {
                dive_id: merged.rows.len(),
                ..row.clone()
            });
        }
        merged.tn += rep.tn;
        merged.fp += rep.fp;
        merged.fn_ += rep.fn_;
        merged.tp += rep.tp;
        merged.surface_truth += rep.surface_truth;
        merged.surface_pred += rep.surface_pred;
    }
    merged
}

/// Per-dive prediction-minus-truth differences.
#[derive(Debug, Clone, PartialEq)]
pub struct DifferenceHistograms {
    pub dive_ids: Vec<usize>,
    pub count_diff: Vec<i64>,
    pub duration_diff_s: Vec<f64>,
}

pub fn difference_histograms(report: &DiveReport) -> DifferenceHistograms {
    let mut out = DifferenceHistograms {
        dive_ids: Vec::with_capacity(report.rows.len()),
        count_diff: Vec::with_capacity(report.rows.len()),
        duration_diff_s: Vec::with_capacity(report.rows.len()),
    };
    for row in &report.rows {
        out.dive_ids.push(row.dive_id);
        out.count_diff.push(row.pred_count as i64 - row.truth_count as i64);
        out.duration_diff_s.push(row.pred_secs - row.truth_secs);
    }
    out
}

/// Sanity check used by loaders: sorted, non-overlapping, positive length.
pub fn validate_events(events: &[EventInterval]) -> Result<()> {
    let mut prev_end = f64::NEG_INFINITY;
    for ev in events {
        if !(ev.start_s < ev.end_s) {
            return Err(crate::error::Error::Validation(format!(
                "event ({}, {}) is empty or inverted",
                ev.start_s, ev.end_s
            )));
        }
        if ev.start_s < prev_end {
            return Err(crate::error::Error::Validation(format!(
                "event ({}, {}) overlaps its predecessor",
                ev.start_s, ev.end_s
            )));
        }
        prev_end = ev.end_s;
    }
    Ok(())
}
