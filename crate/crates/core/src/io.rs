//! Long-format CSV files: per-replicate metric frames, event logs,
//! aggregates and consistency residuals.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::analysis::{metric_index, AggregateRow, MetricRow, TimeSeriesFrame, METRICS};
use crate::engine::ResidualRecord;
use crate::error::{Error, Result};
use crate::labour_market::{EventLog, MatchEvent, MatchKind};

pub const FRAME_HEADER: [&str; 4] = ["step", "replicate", "metric", "value"];
pub const EVENT_HEADER: [&str; 4] = ["step", "kind", "household", "firm"];
pub const AGGREGATE_HEADER: [&str; 7] = ["step", "metric", "mean", "p10", "p90", "trend", "cycle"];
pub const RESIDUAL_HEADER: [&str; 4] = ["step", "row", "residual", "relative"];

fn csv_err(e: csv::Error) -> Error {
    Error::InvalidInput(format!("csv: {e}"))
}

#[derive(Debug, Serialize, Deserialize)]
struct FrameRecord<'a> {
    step: u32,
    replicate: usize,
    metric: &'a str,
    value: f64,
}

#[derive(Debug, Deserialize)]
struct OwnedFrameRecord {
    step: u32,
    replicate: usize,
    metric: String,
    value: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct EventRecord {
    step: u32,
    kind: String,
    household: usize,
    firm: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct ResidualCsv<'a> {
    step: u32,
    row: &'a str,
    residual: f64,
    relative: f64,
}

fn check_header<R: Read>(r: &mut csv::Reader<R>, want: &[&str]) -> Result<()> {
    let got = r.headers().map_err(csv_err)?;
    if got.iter().ne(want.iter().copied()) {
        return Err(Error::InvalidInput(format!(
            "unexpected header {:?}, expected {}",
            got.iter().collect::<Vec<_>>(),
            want.join(",")
        )));
    }
    Ok(())
}

/// Writes frames in long format, one line per (step, replicate, metric).
/// Replicates may share a file.
pub fn write_frames<W: Write>(out: W, frames: &[&TimeSeriesFrame]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(FRAME_HEADER).map_err(csv_err)?;
    for f in frames {
        for row in &f.rows {
            for (metric, &value) in METRICS.iter().zip(&row.values) {
                w.serialize(FrameRecord {
                    step: row.step,
                    replicate: f.replicate,
                    metric,
                    value,
                })
                .map_err(csv_err)?;
            }
        }
    }
    w.flush().map_err(|e| Error::InvalidInput(e.to_string()))
}

/// Reads a long-format file back into one frame per replicate, sorted by
/// replicate. Metrics missing from the file are NaN.
pub fn read_frames<R: Read>(input: R, scenario: &str) -> Result<Vec<TimeSeriesFrame>> {
    let mut r = csv::Reader::from_reader(input);
    check_header(&mut r, &FRAME_HEADER)?;
    let mut by_rep: std::collections::BTreeMap<usize, std::collections::BTreeMap<u32, Vec<f64>>> =
        Default::default();
    for rec in r.deserialize::<OwnedFrameRecord>() {
        let rec = rec.map_err(csv_err)?;
        let i = metric_index(&rec.metric)
            .ok_or_else(|| Error::InvalidInput(format!("unknown metric {:?}", rec.metric)))?;
        let row = by_rep
            .entry(rec.replicate)
            .or_default()
            .entry(rec.step)
            .or_insert_with(|| vec![f64::NAN; METRICS.len()]);
        row[i] = rec.value;
    }
    Ok(by_rep
        .into_iter()
        .map(|(replicate, rows)| TimeSeriesFrame {
            scenario: scenario.to_string(),
            replicate,
            rows: rows.into_iter().map(|(step, values)| MetricRow { step, values }).collect(),
        })
        .collect())
}

pub fn write_events<W: Write>(out: W, log: &EventLog) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(EVENT_HEADER).map_err(csv_err)?;
    for e in log.events() {
        w.serialize(EventRecord {
            step: e.step,
            kind: e.kind.name().to_string(),
            household: e.household,
            firm: e.firm,
        })
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::InvalidInput(e.to_string()))
}

pub fn read_events<R: Read>(input: R) -> Result<EventLog> {
    let mut r = csv::Reader::from_reader(input);
    check_header(&mut r, &EVENT_HEADER)?;
    let mut log = EventLog::new();
    for rec in r.deserialize::<EventRecord>() {
        let rec = rec.map_err(csv_err)?;
        let kind: MatchKind = rec.kind.parse()?;
        log.push(MatchEvent {
            step: rec.step,
            kind,
            household: rec.household,
            firm: rec.firm,
        });
    }
    Ok(log)
}

pub fn write_aggregate<W: Write>(out: W, rows: &[AggregateRow]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(AGGREGATE_HEADER).map_err(csv_err)?;
    for row in rows {
        w.serialize(row).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::InvalidInput(e.to_string()))
}

pub fn read_aggregate<R: Read>(input: R) -> Result<Vec<AggregateRow>> {
    let mut r = csv::Reader::from_reader(input);
    check_header(&mut r, &AGGREGATE_HEADER)?;
    r.deserialize().map(|rec| rec.map_err(csv_err)).collect()
}

pub fn write_residuals<W: Write>(out: W, rows: &[ResidualRecord]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(RESIDUAL_HEADER).map_err(csv_err)?;
    for r in rows {
        w.serialize(ResidualCsv {
            step: r.step,
            row: &r.check,
            residual: r.residual,
            relative: r.relative,
        })
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::InvalidInput(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frame_round_trip() {
        let mut f = TimeSeriesFrame::new("baseline", 3);
        for s in 1..=4 {
            let mut values: Vec<f64> = (0..METRICS.len()).map(|i| i as f64 * 0.1 + s as f64).collect();
            values[11] = f64::NAN;
            f.rows.push(MetricRow { step: s, values });
        }
        let mut buf = Vec::new();
        write_frames(&mut buf, &[&f]).unwrap();
        assert!(buf.starts_with(b"step,replicate,metric,value\n"));
        let back = read_frames(&buf[..], "baseline").unwrap();
        assert_eq!(back.len(), 1);
        assert_eq!(back[0].replicate, 3);
        for (a, b) in back[0].rows.iter().zip(&f.rows) {
            assert_eq!(a.step, b.step);
            for (x, y) in a.values.iter().zip(&b.values) {
                assert!(x == y || (x.is_nan() && y.is_nan()));
            }
        }
    }

    #[test]
    fn events_round_trip() {
        let mut log = EventLog::new();
        log.push(MatchEvent { step: 2, kind: MatchKind::SignalHire, household: 7, firm: 1 });
        log.push(MatchEvent { step: 3, kind: MatchKind::Quit, household: 7, firm: 1 });
        let mut buf = Vec::new();
        write_events(&mut buf, &log).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text, "step,kind,household,firm\n2,signal-hire,7,1\n3,quit,7,1\n");
        assert_eq!(read_events(&buf[..]).unwrap().events(), log.events());
    }

    #[test]
    fn aggregate_header_and_round_trip() {
        let rows = vec![AggregateRow {
            step: 51,
            metric: "turnover".into(),
            mean: 0.5,
            p10: 0.1,
            p90: 0.9,
            trend: 0.45,
            cycle: 0.05,
        }];
        let mut buf = Vec::new();
        write_aggregate(&mut buf, &rows).unwrap();
        assert!(buf.starts_with(b"step,metric,mean,p10,p90,trend,cycle\n"));
        assert_eq!(read_aggregate(&buf[..]).unwrap(), rows);
        let mut empty = Vec::new();
        write_aggregate(&mut empty, &[]).unwrap();
        assert_eq!(empty, b"step,metric,mean,p10,p90,trend,cycle\n");
    }

    #[test]
    fn wrong_header_rejected() {
        assert!(read_events(&b"a,b\n1,2\n"[..]).is_err());
    }
}
