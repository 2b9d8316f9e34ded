//! CSV export of simulated datasets.
//!
//! Scans are written one reading per row as `timestamp,ap_id,rss`, rows of a
//! scan kept together. Labels (BLE estimates for training, true points for
//! tests) go to a companion file `timestamp,x,y,confidence` keyed by the
//! same timestamps, so scans that heard nothing still have a label row.

use std::collections::HashMap;
use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::model::{ApId, Reading, WifiScan};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabelRow {
    pub timestamp: f64,
    pub x: f64,
    pub y: f64,
    pub confidence: f64,
}

fn csv_err(e: impl std::fmt::Display) -> Error {
    Error::InvalidArgument(format!("csv: {e}"))
}

pub fn write_scans_csv<'a, W: Write>(
    sink: W,
    scans: impl IntoIterator<Item = &'a WifiScan>,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["timestamp", "ap_id", "rss"]).map_err(csv_err)?;
    for scan in scans {
        for r in scan.readings() {
            w.write_record([
                scan.timestamp().to_string(),
                r.id.to_string(),
                r.rss.to_string(),
            ])
            .map_err(csv_err)?;
        }
    }
    w.flush().map_err(csv_err)
}

pub fn write_labels_csv<W: Write>(sink: W, labels: &[LabelRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["timestamp", "x", "y", "confidence"]).map_err(csv_err)?;
    for l in labels {
        w.write_record([
            l.timestamp.to_string(),
            l.x.to_string(),
            l.y.to_string(),
            l.confidence.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(csv_err)
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize) -> Result<T> {
    rec.get(i)
        .and_then(|s| s.trim().parse().ok())
        .ok_or_else(|| csv_err(format!("bad field {i} in {rec:?}")))
}

/// Scans keyed by timestamp.
pub fn read_scans_csv<R: Read>(source: R) -> Result<HashMap<u64, WifiScan>> {
    let mut rdr = csv::Reader::from_reader(source);
    let mut grouped: Vec<(f64, Vec<Reading>)> = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err)?;
        let t: f64 = field(&rec, 0)?;
        let id = ApId::new(rec.get(1).unwrap_or("").trim())?;
        let rss: f64 = field(&rec, 2)?;
        match grouped.last_mut() {
            Some((last, readings)) if *last == t => readings.push(Reading::new(id, rss)),
            _ => grouped.push((t, vec![Reading::new(id, rss)])),
        }
    }
    let mut out = HashMap::with_capacity(grouped.len());
    for (t, readings) in grouped {
        if out.insert(t.to_bits(), WifiScan::new(t, readings)?).is_some() {
            return Err(csv_err(format!("scan at t={t} is split across the file")));
        }
    }
    Ok(out)
}

pub fn read_labels_csv<R: Read>(source: R) -> Result<Vec<LabelRow>> {
    let mut rdr = csv::Reader::from_reader(source);
    rdr.records()
        .map(|rec| {
            let rec = rec.map_err(csv_err)?;
            Ok(LabelRow {
                timestamp: field(&rec, 0)?,
                x: field(&rec, 1)?,
                y: field(&rec, 2)?,
                confidence: field(&rec, 3)?,
            })
        })
        .collect()
}

/// Pairs every label with its scan; labels without readings get an empty scan.
pub fn join_labels(
    labels: &[LabelRow],
    mut scans: HashMap<u64, WifiScan>,
) -> Result<Vec<(LabelRow, WifiScan)>> {
    labels
        .iter()
        .map(|l| {
            let scan = match scans.remove(&l.timestamp.to_bits()) {
                Some(s) => s,
                None => WifiScan::new(l.timestamp, Vec::new())?,
            };
            Ok((*l, scan))
        })
        .collect()
}
