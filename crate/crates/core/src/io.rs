//! File formats: channel CSV ingestion, the binary record container and
//! the CSV/JSON report emitters.
//!
//! Record container (extension `.bzrc`, little endian):
//!   magic `BZRC` | version u16 | whale_id (u32 len + utf8) |
//!   t0 flag u8 (+ f64 when set) | n u64 |
//!   ax, ay, az, depth as n x f64 | phase as n x u8 | buzz as n x u8
//!
//! The container round-trips bit-exactly, which the plain-text formats
//! cannot guarantee for f64.

use crate::data::{BuzzInput, RawChannels, WhaleRecord};
use crate::dive::{Dive, DivePhase};
use crate::error::{Error, Result};
use crate::eval::{DiveReport, EventInterval, MatchReport};
use crate::features::{FeatureTable, FEATURE_NAMES};
use crate::jerk::SweepResult;
use crate::models::EpochStats;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

pub const RECORD_MAGIC: [u8; 4] = *b"BZRC";
pub const RECORD_VERSION: u16 = 1;

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        file: path.display().to_string(),
        line,
        msg: msg.into(),
    }
}

struct CsvReader {
    lines: std::io::Lines<BufReader<File>>,
    path: std::path::PathBuf,
    line_no: usize,
}

impl CsvReader {
    fn open(path: &Path, expected_header: &[&str]) -> Result<CsvReader> {
        let file = File::open(path)
            .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
        let mut reader = CsvReader {
            lines: BufReader::new(file).lines(),
            path: path.to_path_buf(),
            line_no: 0,
        };
        let header = reader
            .next_row()?
            .ok_or_else(|| parse_err(path, 1, "empty file, expected a header"))?;
        if header != expected_header {
            return Err(parse_err(
                path,
                1,
                format!("header {header:?}, expected {expected_header:?}"),
            ));
        }
        Ok(reader)
    }

    fn next_row(&mut self) -> Result<Option<Vec<String>>> {
        for line in self.lines.by_ref() {
            self.line_no += 1;
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() {
                continue;
            }
            return Ok(Some(trimmed.split(',').map(|s| s.trim().to_string()).collect()));
        }
        Ok(None)
    }

    fn f64(&self, field: &str) -> Result<f64> {
        field
            .parse::<f64>()
            .map_err(|_| parse_err(&self.path, self.line_no, format!("bad number '{field}'")))
    }
}

/// Reads `idx,ax_mG,ay_mG,az_mG` with idx counting from 0.
pub fn read_accel_csv(path: &Path) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let mut r = CsvReader::open(path, &["idx", "ax_mG", "ay_mG", "az_mG"])?;
    let (mut ax, mut ay, mut az) = (Vec::new(), Vec::new(), Vec::new());
    while let Some(row) = r.next_row()? {
        if row.len() != 4 {
            return Err(parse_err(&r.path, r.line_no, format!("expected 4 fields, got {}", row.len())));
        }
        check_idx(&r, &row[0], ax.len())?;
        ax.push(r.f64(&row[1])?);
        ay.push(r.f64(&row[2])?);
        az.push(r.f64(&row[3])?);
    }
    Ok((ax, ay, az))
}

/// Reads `idx,depth_m` at 10 Hz.
pub fn read_depth_csv(path: &Path) -> Result<Vec<f64>> {
    let mut r = CsvReader::open(path, &["idx", "depth_m"])?;
    let mut depth = Vec::new();
    while let Some(row) = r.next_row()? {
        if row.len() != 2 {
            return Err(parse_err(&r.path, r.line_no, format!("expected 2 fields, got {}", row.len())));
        }
        check_idx(&r, &row[0], depth.len())?;
        depth.push(r.f64(&row[1])?);
    }
    Ok(depth)
}

fn check_idx(r: &CsvReader, field: &str, expected: usize) -> Result<()> {
    let idx: usize = field
        .parse()
        .map_err(|_| parse_err(&r.path, r.line_no, format!("bad index '{field}'")))?;
    if idx != expected {
        return Err(parse_err(
            &r.path,
            r.line_no,
            format!("index {idx} out of order, expected {expected}"),
        ));
    }
    Ok(())
}

/// Reads buzz ground truth; the header picks the representation:
/// `idx,buzz` for 10 Hz labels or `start_s,end_s` for intervals.
pub fn read_buzz_csv(path: &Path) -> Result<BuzzInput> {
    let file = File::open(path)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
    let mut first = String::new();
    BufReader::new(file).read_line(&mut first)?;
    let header: Vec<&str> = first.trim().split(',').map(|s| s.trim()).collect();
    match header.as_slice() {
        ["idx", "buzz"] => {
            let mut r = CsvReader::open(path, &["idx", "buzz"])?;
            let mut labels = Vec::new();
            while let Some(row) = r.next_row()? {
                if row.len() != 2 {
                    return Err(parse_err(&r.path, r.line_no, "expected 2 fields"));
                }
                check_idx(&r, &row[0], labels.len())?;
                let v: u8 = row[1]
                    .parse()
                    .map_err(|_| parse_err(&r.path, r.line_no, format!("bad label '{}'", row[1])))?;
                if v > 1 {
                    return Err(parse_err(&r.path, r.line_no, format!("label {v} is not binary")));
                }
                labels.push(v);
            }
            Ok(BuzzInput::Labels10Hz(labels))
        }
        ["start_s", "end_s"] => {
            let mut r = CsvReader::open(path, &["start_s", "end_s"])?;
            let mut intervals = Vec::new();
            while let Some(row) = r.next_row()? {
                if row.len() != 2 {
                    return Err(parse_err(&r.path, r.line_no, "expected 2 fields"));
                }
                intervals.push((r.f64(&row[0])?, r.f64(&row[1])?));
            }
            Ok(BuzzInput::Intervals(intervals))
        }
        other => Err(parse_err(
            path,
            1,
            format!("buzz header {other:?}, expected idx,buzz or start_s,end_s"),
        )),
    }
}

/// Assembles raw channel CSVs into a record, optionally dropping the first
/// `skip_hours` of data before alignment.
pub fn read_raw_record(
    accel: &Path,
    depth: &Path,
    buzz: &Path,
    whale_id: &str,
    skip_hours: f64,
) -> Result<WhaleRecord> {
    let (mut ax, mut ay, mut az) = read_accel_csv(accel)?;
    let mut depth_10 = read_depth_csv(depth)?;
    let mut buzz_in = read_buzz_csv(buzz)?;
    if skip_hours > 0.0 {
        let skip_100 = (skip_hours * 3600.0 * 100.0).round() as usize;
        let skip_10 = (skip_hours * 3600.0 * 10.0).round() as usize;
        if skip_100 >= ax.len() {
            return Err(Error::Validation(format!(
                "--skip-hours {skip_hours} drops the whole record"
            )));
        }
        ax.drain(..skip_100);
        ay.drain(..skip_100);
        az.drain(..skip_100);
        depth_10.drain(..skip_10.min(depth_10.len()));
        buzz_in = match buzz_in {
            BuzzInput::Labels10Hz(mut l) => {
                l.drain(..skip_10.min(l.len()));
                BuzzInput::Labels10Hz(l)
            }
            BuzzInput::Intervals(iv) => {
                let shift = skip_hours * 3600.0;
                BuzzInput::Intervals(
                    iv.into_iter()
                        .filter(|&(_, e)| e > shift)
                        .map(|(s, e)| ((s - shift).max(0.0), e - shift))
                        .collect(),
                )
            }
        };
    }
    crate::data::build_record(&RawChannels {
        whale_id: whale_id.to_string(),
        accel_x: ax,
        accel_y: ay,
        accel_z: az,
        depth_10hz: depth_10,
        buzz: buzz_in,
    })
}

pub fn write_record(record: &WhaleRecord, path: &Path) -> Result<()> {
    record.validate()?;
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&RECORD_MAGIC)?;
    w.write_all(&RECORD_VERSION.to_le_bytes())?;
    let id = record.whale_id.as_bytes();
    w.write_all(&(id.len() as u32).to_le_bytes())?;
    w.write_all(id)?;
    match record.t0 {
        Some(t0) => {
            w.write_all(&[1])?;
            w.write_all(&t0.to_le_bytes())?;
        }
        None => w.write_all(&[0])?,
    }
    w.write_all(&(record.len() as u64).to_le_bytes())?;
    for chan in [&record.ax, &record.ay, &record.az, &record.depth] {
        for v in chan.iter() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    let phases: Vec<u8> = record.phase.iter().map(|&p| p as u8).collect();
    w.write_all(&phases)?;
    w.write_all(&record.buzz)?;
    w.flush()?;
    Ok(())
}

pub fn read_record(path: &Path) -> Result<WhaleRecord> {
    let mut bytes = Vec::new();
    File::open(path)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?
        .read_to_end(&mut bytes)?;
    let mut pos = 0usize;
    let take = |pos: &mut usize, n: usize| -> Result<&[u8]> {
        if *pos + n > bytes.len() {
            return Err(Error::Format(format!(
                "{}: truncated at offset {pos:?}",
                path.display()
            )));
        }
        let s = &bytes[*pos..*pos + n];
        *pos += n;
        Ok(s)
    };
    if take(&mut pos, 4)? != RECORD_MAGIC {
        return Err(Error::Format(format!("{}: not a record container", path.display())));
    }
    let version = u16::from_le_bytes(take(&mut pos, 2)?.try_into().unwrap());
    if version != RECORD_VERSION {
        return Err(Error::Format(format!(
            "{}: record version {version} unsupported",
            path.display()
        )));
    }
    let id_len = u32::from_le_bytes(take(&mut pos, 4)?.try_into().unwrap()) as usize;
    let whale_id = String::from_utf8(take(&mut pos, id_len)?.to_vec())
        .map_err(|_| Error::Format(format!("{}: whale id is not utf8", path.display())))?;
    let t0 = match take(&mut pos, 1)?[0] {
        0 => None,
        _ => Some(f64::from_le_bytes(take(&mut pos, 8)?.try_into().unwrap())),
    };
    let n = u64::from_le_bytes(take(&mut pos, 8)?.try_into().unwrap()) as usize;
    let mut chans: Vec<Vec<f64>> = Vec::with_capacity(4);
    for _ in 0..4 {
        let raw = take(&mut pos, n * 8)?;
        chans.push(
            raw.chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect(),
        );
    }
    let phase_bytes = take(&mut pos, n)?;
    let phase: Vec<DivePhase> = phase_bytes
        .iter()
        .map(|&b| {
            DivePhase::from_u8(b)
                .ok_or_else(|| Error::Format(format!("{}: bad phase byte {b}", path.display())))
        })
        .collect::<Result<_>>()?;
    let buzz = take(&mut pos, n)?.to_vec();
    if pos != bytes.len() {
        return Err(Error::Format(format!(
            "{}: {} trailing bytes",
            path.display(),
            bytes.len() - pos
        )));
    }
    let depth = chans.pop().unwrap();
    let az = chans.pop().unwrap();
    let ay = chans.pop().unwrap();
    let ax = chans.pop().unwrap();
    let record = WhaleRecord { whale_id, t0, ax, ay, az, depth, phase, buzz };
    record.validate()?;
    Ok(record)
}

pub fn write_dives_csv(dives: &[Dive], path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "dive_id,start_s,end_s,max_depth_m,bottom_start_s,bottom_end_s")?;
    for (i, d) in dives.iter().enumerate() {
        writeln!(
            w,
            "{i},{},{},{},{},{}",
            d.start_s(),
            d.end_s(),
            d.max_depth_m,
            d.bottom_start_idx as f64 * 0.01,
            d.bottom_end_idx as f64 * 0.01
        )?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_features_csv(table: &FeatureTable, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "w_idx,start_s,{},label", FEATURE_NAMES.join(","))?;
    for row in &table.rows {
        write!(w, "{},{}", row.w_idx, row.start_s)?;
        for v in row.features.iter() {
            write!(w, ",{v}")?;
        }
        writeln!(w, ",{}", row.label)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_events_csv(events: &[EventInterval], path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "start_s,end_s")?;
    for ev in events {
        writeln!(w, "{},{}", ev.start_s, ev.end_s)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_events_csv(path: &Path) -> Result<Vec<EventInterval>> {
    let mut r = CsvReader::open(path, &["start_s", "end_s"])?;
    let mut events = Vec::new();
    while let Some(row) = r.next_row()? {
        if row.len() != 2 {
            return Err(parse_err(&r.path, r.line_no, "expected 2 fields"));
        }
        events.push(EventInterval::new(r.f64(&row[0])?, r.f64(&row[1])?));
    }
    crate::eval::validate_events(&events)?;
    Ok(events)
}

pub fn write_sweep_csv(sweep: &SweepResult, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "threshold_mGps,delay_s,tp,fp,fn,tn,precision,recall")?;
    for row in &sweep.rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            row.threshold,
            row.delay_s,
            row.tp,
            row.fp,
            row.fn_,
            row.tn,
            opt(row.precision),
            opt(row.recall)
        )?;
    }
    w.flush()?;
    Ok(())
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_match_report_csv(report: &MatchReport, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "criterion,matched,total,proportion")?;
    for row in &report.rows {
        writeln!(
            w,
            "{},{},{},{}",
            row.criterion.label(),
            row.matched,
            row.total,
            opt(row.proportion())
        )?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_dive_report_csv(report: &DiveReport, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "dive_id,truth_count,pred_count,truth_secs,pred_secs")?;
    for row in &report.rows {
        writeln!(
            w,
            "{},{},{},{},{}",
            row.dive_id, row.truth_count, row.pred_count, row.truth_secs, row.pred_secs
        )?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_confusion_json(report: &DiveReport, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(
        w,
        "{{\"tn\": {}, \"fp\": {}, \"fn\": {}, \"tp\": {}, \"precision\": {}, \"recall\": {}}}",
        report.tn,
        report.fp,
        report.fn_,
        report.tp,
        json_opt(report.precision()),
        json_opt(report.recall())
    )?;
    w.flush()?;
    Ok(())
}

fn json_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_else(|| "null".into())
}

pub fn write_epochs_csv(trace: &[EpochStats], path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "epoch,train_dice,val_dice")?;
    for e in trace {
        writeln!(w, "{},{},{}", e.epoch, e.train_dice, e.val_dice)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{synth_generate, SynthConfig};

    #[test]
    fn record_container_roundtrips_bit_exactly() {
        let rec = synth_generate(&SynthConfig {
            duration_s: 120.0,
            dive_rate_per_hour: 30.0,
            seed: 77,
            ..Default::default()
        })
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rec.bzrc");
        write_record(&rec, &path).unwrap();
        let back = read_record(&path).unwrap();
        assert_eq!(rec, back);
        // byte-identical on rewrite
        let bytes1 = std::fs::read(&path).unwrap();
        write_record(&back, &path).unwrap();
        assert_eq!(bytes1, std::fs::read(&path).unwrap());
    }

    #[test]
    fn record_container_rejects_corruption() {
        let rec = synth_generate(&SynthConfig { duration_s: 10.0, seed: 1, ..Default::default() })
            .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rec.bzrc");
        write_record(&rec, &path).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        bytes.truncate(bytes.len() - 7);
        std::fs::write(&path, &bytes).unwrap();
        assert!(matches!(read_record(&path), Err(Error::Format(_))));
    }

    #[test]
    fn channel_csvs_roundtrip_through_build() {
        let dir = tempfile::tempdir().unwrap();
        let accel = dir.path().join("a.csv");
        let depth = dir.path().join("d.csv");
        let buzz = dir.path().join("b.csv");
        let mut f = String::from("idx,ax_mG,ay_mG,az_mG\n");
        for i in 0..200 {
            f.push_str(&format!("{i},{},{},{}\n", i as f64 * 0.5, 1.0, -2.0));
        }
        std::fs::write(&accel, f).unwrap();
        let mut f = String::from("idx,depth_m\n");
        for i in 0..20 {
            f.push_str(&format!("{i},{}\n", i as f64));
        }
        std::fs::write(&depth, f).unwrap();
        std::fs::write(&buzz, "start_s,end_s\n0.5,1.0\n").unwrap();
        let rec = read_raw_record(&accel, &depth, &buzz, "w9", 0.0).unwrap();
        assert_eq!(rec.len(), 200);
        assert_eq!(rec.buzz[50..100], [1u8; 50]);
        assert_eq!(rec.whale_id, "w9");
    }

    #[test]
    fn buzz_csv_mode_by_header() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("b.csv");
        std::fs::write(&p, "idx,buzz\n0,0\n1,1\n").unwrap();
        assert!(matches!(read_buzz_csv(&p).unwrap(), BuzzInput::Labels10Hz(v) if v == vec![0, 1]));
        std::fs::write(&p, "start_s,end_s\n1.5,2\n").unwrap();
        assert!(matches!(read_buzz_csv(&p).unwrap(), BuzzInput::Intervals(v) if v == vec![(1.5, 2.0)]));
        std::fs::write(&p, "foo,bar\n1,2\n").unwrap();
        assert!(read_buzz_csv(&p).is_err());
    }

    #[test]
    fn csv_errors_carry_file_and_line() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.csv");
        std::fs::write(&p, "idx,depth_m\n0,1.0\n1,zzz\n").unwrap();
        let err = read_depth_csv(&p).unwrap_err().to_string();
        assert!(err.contains("d.csv:3"), "{err}");
        std::fs::write(&p, "idx,depth_m\n5,1.0\n").unwrap();
        let err = read_depth_csv(&p).unwrap_err().to_string();
        assert!(err.contains("out of order"), "{err}");
    }

    #[test]
    fn events_csv_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("e.csv");
        let events = vec![EventInterval::new(0.5, 1.25), EventInterval::new(3.0, 3.01)];
        write_events_csv(&events, &p).unwrap();
        assert_eq!(read_events_csv(&p).unwrap(), events);
    }
}
