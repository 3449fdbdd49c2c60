//! Train/validation/test splitting of whale records.

use crate::data::WhaleRecord;
use crate::error::{Error, Result};

/// Splitting strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitMode {
    /// Per-whale chronological 60:20:20 cut, sets combined across whales.
    Chrono602020,
    /// Per-whale chronological 80:20 cut, no validation set.
    Chrono8020,
    /// One fold per whale: the fold's whale is the test set, the next
    /// whale (cyclically) validates, the rest train.
    LeaveOneWhaleOut,
}

impl SplitMode {
    pub fn parse(s: &str) -> Result<SplitMode> {
        match s {
            "chrono-60-20-20" => Ok(SplitMode::Chrono602020),
            "chrono-80-20" => Ok(SplitMode::Chrono8020),
            "leave-one-whale-out" | "lowo" => Ok(SplitMode::LeaveOneWhaleOut),
            other => Err(Error::Config(format!("unknown split mode '{other}'"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SplitMode::Chrono602020 => "chrono-60-20-20",
            SplitMode::Chrono8020 => "chrono-80-20",
            SplitMode::LeaveOneWhaleOut => "leave-one-whale-out",
        }
    }
}

/// A contiguous sample range of one record.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Span {
    /// Index into the record list handed to [`split`].
    pub whale: usize,
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// One train/val/test partition. Windows and segments are cut within each
/// span, so nothing straddles a boundary.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Fold {
    pub train: Vec<Span>,
    pub val: Vec<Span>,
    pub test: Vec<Span>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitPlan {
    pub mode: SplitMode,
    pub folds: Vec<Fold>,
}

/// Builds the split plan. Chronological modes produce one fold; the
/// leave-one-whale-out mode produces one fold per whale and requires at
/// least three whales.
pub fn split(records: &[WhaleRecord], mode: SplitMode) -> Result<SplitPlan> {
    if records.is_empty() {
        return Err(Error::Config("split needs at least one record".into()));
    }
    let folds = match mode {
        SplitMode::Chrono602020 => {
            let mut fold = Fold::default();
            for (w, rec) in records.iter().enumerate() {
                let n = rec.len();
                let c1 = (n as f64 * 0.6).floor() as usize;
                let c2 = (n as f64 * 0.8).floor() as usize;
                fold.train.push(Span { whale: w, start: 0, end: c1 });
                fold.val.push(Span { whale: w, start: c1, end: c2 });
                fold.test.push(Span { whale: w, start: c2, end: n });
            }
            vec![fold]
        }
        SplitMode::Chrono8020 => {
            let mut fold = Fold::default();
            for (w, rec) in records.iter().enumerate() {
                let n = rec.len();
                let c = (n as f64 * 0.8).floor() as usize;
                fold.train.push(Span { whale: w, start: 0, end: c });
                fold.test.push(Span { whale: w, start: c, end: n });
            }
            vec![fold]
        }
        SplitMode::LeaveOneWhaleOut => {
            if records.len() < 3 {
                return Err(Error::Config(format!(
                    "leave-one-whale-out needs >= 3 whales, got {}",
                    records.len()
                )));
            }
            (0..records.len())
                .map(|test_w| {
                    let val_w = (test_w + 1) % records.len();
                    let mut fold = Fold::default();
                    for (w, rec) in records.iter().enumerate() {
                        let span = Span { whale: w, start: 0, end: rec.len() };
                        if w == test_w {
                            fold.test.push(span);
                        } else if w == val_w {
                            fold.val.push(span);
                        } else {
                            fold.train.push(span);
                        }
                    }
                    fold
                })
                .collect()
        }
    };
    Ok(SplitPlan { mode, folds })
}
