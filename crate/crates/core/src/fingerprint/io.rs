//! Line-oriented text format for finalized fingerprints.
//!
//! ```text
//! FPDB v1 <cols> <rows> <cell_size> <origin_x> <origin_y>
//! M <min_cell_weight>
//! <col> <row> <ap_id> <weight_sum> <mean> <variance>     (per cell and AP)
//! C <col> <row> <total_weight> <centroid_x> <centroid_y> (per cell)
//! END <record_count>
//! ```
//!
//! Floats are written with 17 significant digits so they parse back to the
//! same bits. `record_count` counts every line between the header and `END`.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, Write};

use thiserror::Error;

use crate::model::{ApId, ApStats, CellId, CellStats, FingerprintDb, GridSpec, Point};

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("unsupported fingerprint format version {0}")]
    UnsupportedVersion(u32),
    #[error("malformed record at line {line}: {reason}")]
    MalformedRecord { line: usize, reason: String },
    #[error("record count mismatch: trailer says {expected}, file has {found}")]
    ChecksumMismatch { expected: usize, found: usize },
}

impl LoadError {
    pub fn kind(&self) -> &'static str {
        match self {
            LoadError::Io(_) => "Io",
            LoadError::UnsupportedVersion(_) => "UnsupportedVersion",
            LoadError::MalformedRecord { .. } => "MalformedRecord",
            LoadError::ChecksumMismatch { .. } => "ChecksumMismatch",
        }
    }
}

fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes a finalized fingerprint.
pub fn save_db<W: Write>(db: &FingerprintDb, mut sink: W) -> std::io::Result<()> {
    if !db.is_finalized() {
        return Err(std::io::Error::new(
            std::io::ErrorKind::InvalidInput,
            "only finalized fingerprints can be saved",
        ));
    }
    let g = db.grid();
    writeln!(
        sink,
        "FPDB v{} {} {} {} {} {}",
        FingerprintDb::FORMAT_VERSION,
        g.cols(),
        g.rows(),
        fmt_f64(g.cell_size()),
        fmt_f64(g.origin().x),
        fmt_f64(g.origin().y)
    )?;
    writeln!(sink, "M {}", fmt_f64(db.min_cell_weight()))?;
    let mut records = 1usize;
    for (id, cell) in db.cells() {
        let (col, row) = (id.0 % g.cols(), id.0 / g.cols());
        for (ap, s) in &cell.per_ap {
            let variance = s.variance().map_err(|e| {
                std::io::Error::new(std::io::ErrorKind::InvalidInput, e.to_string())
            })?;
            writeln!(
                sink,
                "{col} {row} {ap} {} {} {}",
                fmt_f64(s.weight_sum()),
                fmt_f64(s.mean()),
                fmt_f64(variance)
            )?;
            records += 1;
        }
        writeln!(
            sink,
            "C {col} {row} {} {} {}",
            fmt_f64(cell.total_weight),
            fmt_f64(cell.mass_centroid.x),
            fmt_f64(cell.mass_centroid.y)
        )?;
        records += 1;
    }
    writeln!(sink, "END {records}")?;
    sink.flush()
}

struct Parser {
    line: usize,
}

impl Parser {
    fn err(&self, reason: impl Into<String>) -> LoadError {
        LoadError::MalformedRecord {
            line: self.line,
            reason: reason.into(),
        }
    }

    fn f64(&self, tok: &str) -> Result<f64, LoadError> {
        tok.parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| self.err(format!("bad number {tok:?}")))
    }

    fn usize(&self, tok: &str) -> Result<usize, LoadError> {
        tok.parse::<usize>()
            .map_err(|_| self.err(format!("bad integer {tok:?}")))
    }

    fn cell(&self, grid: &GridSpec, col: &str, row: &str) -> Result<CellId, LoadError> {
        let (col, row) = (self.usize(col)?, self.usize(row)?);
        grid.cell(col, row)
            .map_err(|_| self.err(format!("cell ({col}, {row}) outside the grid")))
    }
}

/// Reads a fingerprint written by [`save_db`].
pub fn load_db<R: BufRead>(source: R) -> Result<FingerprintDb, LoadError> {
    let mut lines = source.lines();
    let mut p = Parser { line: 1 };

    let header = lines.next().ok_or_else(|| p.err("empty file"))??;
    let tok: Vec<&str> = header.split_whitespace().collect();
    if tok.first() != Some(&"FPDB") {
        return Err(p.err("missing FPDB magic"));
    }
    let version = tok
        .get(1)
        .and_then(|v| v.strip_prefix('v'))
        .and_then(|v| v.parse::<u32>().ok())
        .ok_or_else(|| p.err("missing version"))?;
    if version != FingerprintDb::FORMAT_VERSION {
        return Err(LoadError::UnsupportedVersion(version));
    }
    if tok.len() != 7 {
        return Err(p.err("header needs 7 fields"));
    }
    let grid = GridSpec::new(
        Point::new(p.f64(tok[5])?, p.f64(tok[6])?),
        p.f64(tok[4])?,
        p.usize(tok[2])?,
        p.usize(tok[3])?,
    )
    .map_err(|e| p.err(e.to_string()))?;

    let mut min_cell_weight = None;
    let mut per_ap: BTreeMap<CellId, BTreeMap<ApId, ApStats>> = BTreeMap::new();
    let mut cells: BTreeMap<CellId, CellStats> = BTreeMap::new();
    let mut records = 0usize;
    let mut trailer = None;

    for line in lines {
        p.line += 1;
        let line = line?;
        if trailer.is_some() {
            if line.trim().is_empty() {
                continue;
            }
            return Err(p.err("content after END"));
        }
        let tok: Vec<&str> = line.split_whitespace().collect();
        match tok.as_slice() {
            ["END", n] => trailer = Some(p.usize(n)?),
            ["M", w] => {
                if min_cell_weight.replace(p.f64(w)?).is_some() {
                    return Err(p.err("duplicate M record"));
                }
                records += 1;
            }
            ["C", col, row, total, cx, cy] => {
                let id = p.cell(&grid, col, row)?;
                let mut cell = CellStats::new(id);
                cell.total_weight = p.f64(total)?;
                if cell.total_weight < 0.0 {
                    return Err(p.err("negative total weight"));
                }
                cell.mass_centroid = Point::new(p.f64(cx)?, p.f64(cy)?);
                if cells.insert(id, cell).is_some() {
                    return Err(p.err("duplicate cell record"));
                }
                records += 1;
            }
            [col, row, ap, w, mean, var] => {
                let id = p.cell(&grid, col, row)?;
                let ap = ApId::new(*ap).map_err(|e| p.err(e.to_string()))?;
                let stats = ApStats::from_moments(p.f64(w)?, p.f64(mean)?, p.f64(var)?)
                    .map_err(|e| p.err(e.to_string()))?;
                if per_ap.entry(id).or_default().insert(ap, stats).is_some() {
                    return Err(p.err("duplicate AP record"));
                }
                records += 1;
            }
            _ => return Err(p.err(format!("unrecognized record {line:?}"))),
        }
    }

    let expected = trailer.ok_or_else(|| p.err("missing END trailer (truncated file?)"))?;
    if expected != records {
        return Err(LoadError::ChecksumMismatch {
            expected,
            found: records,
        });
    }
    let min_cell_weight = min_cell_weight.ok_or_else(|| p.err("missing M record"))?;

    let mut ap_universe = BTreeSet::new();
    for (id, aps) in per_ap {
        let cell = cells
            .get_mut(&id)
            .ok_or_else(|| p.err(format!("AP records for cell {} without a C record", id.0)))?;
        ap_universe.extend(aps.keys().cloned());
        cell.per_ap = aps;
    }
    Ok(FingerprintDb {
        grid,
        cells,
        ap_universe,
        min_cell_weight,
        finalized: true,
    })
}
