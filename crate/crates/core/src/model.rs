//! Domain types shared by the fingerprint builder, the estimator and the simulator.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::ops::{Add, Mul, Sub};

use crate::error::{Error, Result};

/// Lowest RSS accepted in a scan, in dBm.
pub const RSS_MIN: f64 = -110.0;
/// Highest RSS accepted in a scan, in dBm.
pub const RSS_MAX: f64 = 0.0;
/// Default minimum per-AP variance applied when a fingerprint is finalized (dB²).
pub const DEFAULT_SIGMA_FLOOR: f64 = 1.0;

/// A 2D point in meters.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, rhs: Point) -> Point {
        Point::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, rhs: Point) -> Point {
        Point::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, rhs: f64) -> Point {
        Point::new(self.x * rhs, self.y * rhs)
    }
}

/// Axis-aligned rectangle, `min` inclusive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub min: Point,
    pub max: Point,
}

impl Rect {
    pub fn new(min: Point, max: Point) -> Result<Self> {
        if !(min.is_finite() && max.is_finite()) || max.x <= min.x || max.y <= min.y {
            return Err(Error::InvalidArgument(format!(
                "degenerate rectangle ({}, {})-({}, {})",
                min.x, min.y, max.x, max.y
            )));
        }
        Ok(Rect { min, max })
    }

    pub fn width(&self) -> f64 {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> f64 {
        self.max.y - self.min.y
    }

    /// Closed containment test.
    pub fn contains(&self, p: &Point) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }

    pub fn clamp(&self, p: Point) -> Point {
        Point::new(
            p.x.clamp(self.min.x, self.max.x),
            p.y.clamp(self.min.y, self.max.y),
        )
    }
}

/// Identifier of a WiFi access point or a BLE beacon.
///
/// Identifiers are opaque but must be non-empty and free of whitespace so
/// that they survive the line-oriented file formats.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ApId(String);

impl ApId {
    pub fn new(id: impl Into<String>) -> Result<Self> {
        let id = id.into();
        if id.is_empty() || id.chars().any(char::is_whitespace) || id.contains(',') {
            return Err(Error::InvalidArgument(format!(
                "identifier {id:?} must be non-empty without whitespace or commas"
            )));
        }
        Ok(ApId(id))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ApId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Beacons share the identifier rules of access points.
pub type BeaconId = ApId;

/// One (transmitter, RSS) pair of a scan.
#[derive(Debug, Clone, PartialEq)]
pub struct Reading {
    pub id: ApId,
    pub rss: f64,
}

impl Reading {
    pub fn new(id: ApId, rss: f64) -> Self {
        Reading { id, rss }
    }
}

fn validate_readings(readings: &[Reading]) -> Result<()> {
    let mut seen = HashSet::with_capacity(readings.len());
    for r in readings {
        if !(RSS_MIN..=RSS_MAX).contains(&r.rss) {
            return Err(Error::InvalidScan(format!(
                "rss {} for {} outside [{RSS_MIN}, {RSS_MAX}] dBm",
                r.rss, r.id
            )));
        }
        if !seen.insert(&r.id) {
            return Err(Error::InvalidScan(format!("duplicate id {}", r.id)));
        }
    }
    Ok(())
}

/// RSS vector of the access points heard at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct WifiScan {
    timestamp: f64,
    readings: Vec<Reading>,
}

impl WifiScan {
    pub fn new(timestamp: f64, readings: Vec<Reading>) -> Result<Self> {
        validate_readings(&readings)?;
        Ok(WifiScan {
            timestamp,
            readings,
        })
    }

    pub fn timestamp(&self) -> f64 {
        self.timestamp
    }

    pub fn readings(&self) -> &[Reading] {
        &self.readings
    }

    pub fn is_empty(&self) -> bool {
        self.readings.is_empty()
    }

    /// Copy of the scan with `delta` dB added to every reading, clamped to the valid range.
    pub fn shifted(&self, delta: f64) -> WifiScan {
        WifiScan {
            timestamp: self.timestamp,
            readings: self
                .readings
                .iter()
                .map(|r| Reading::new(r.id.clone(), (r.rss + delta).clamp(RSS_MIN, RSS_MAX)))
                .collect(),
        }
    }
}

/// RSS vector of the BLE beacons heard at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct BleScan {
    timestamp: f64,
    readings: Vec<Reading>,
}

impl BleScan {
    pub fn new(timestamp: f64, readings: Vec<Reading>) -> Result<Self> {
        validate_readings(&readings)?;
        Ok(BleScan {
            timestamp,
            readings,
        })
    }

    pub fn timestamp(&self) -> f64 {
        self.timestamp
    }

    pub fn readings(&self) -> &[Reading] {
        &self.readings
    }
}

/// A BLE-derived location label and the radius of its confidence circle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroundTruthEstimate {
    pub location: Point,
    pub confidence_radius: f64,
}

impl GroundTruthEstimate {
    pub fn new(location: Point, confidence_radius: f64) -> Result<Self> {
        if !location.is_finite() {
            return Err(Error::InvalidArgument("non-finite location".into()));
        }
        if !(confidence_radius >= 0.0 && confidence_radius.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "confidence radius {confidence_radius} must be finite and >= 0"
            )));
        }
        Ok(GroundTruthEstimate {
            location,
            confidence_radius,
        })
    }
}

/// A WiFi scan labeled with a (noisy) location.
#[derive(Debug, Clone, PartialEq)]
pub struct TaggedScan {
    pub wifi: WifiScan,
    pub truth: GroundTruthEstimate,
}

/// Row-major index of a grid cell: `row * cols + col`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CellId(pub usize);

impl CellId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Square grid laid over the area of interest.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    origin: Point,
    cell_size: f64,
    cols: usize,
    rows: usize,
}

impl GridSpec {
    pub fn new(origin: Point, cell_size: f64, cols: usize, rows: usize) -> Result<Self> {
        if !origin.is_finite() {
            return Err(Error::InvalidArgument("non-finite grid origin".into()));
        }
        if !(cell_size > 0.0 && cell_size.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "cell size {cell_size} must be positive"
            )));
        }
        if cols == 0 || rows == 0 {
            return Err(Error::InvalidArgument("grid needs at least one cell".into()));
        }
        Ok(GridSpec {
            origin,
            cell_size,
            cols,
            rows,
        })
    }

    /// Smallest grid anchored at `area.min` whose cells cover `area`.
    pub fn covering(area: &Rect, cell_size: f64) -> Result<Self> {
        if !(cell_size > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "cell size {cell_size} must be positive"
            )));
        }
        // the small slack keeps 37 / 1.0 from becoming 38 columns through rounding
        let cols = ((area.width() / cell_size) - 1e-9).ceil().max(1.0) as usize;
        let rows = ((area.height() / cell_size) - 1e-9).ceil().max(1.0) as usize;
        GridSpec::new(area.min, cell_size, cols, rows)
    }

    pub fn origin(&self) -> Point {
        self.origin
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn n_cells(&self) -> usize {
        self.cols * self.rows
    }

    pub fn bounds(&self) -> Rect {
        Rect {
            min: self.origin,
            max: Point::new(
                self.origin.x + self.cols as f64 * self.cell_size,
                self.origin.y + self.rows as f64 * self.cell_size,
            ),
        }
    }

    pub fn cell(&self, col: usize, row: usize) -> Result<CellId> {
        if col >= self.cols || row >= self.rows {
            return Err(Error::InvalidCell(CellId(row.saturating_mul(self.cols) + col)));
        }
        Ok(CellId(row * self.cols + col))
    }

    pub fn check(&self, cell: CellId) -> Result<()> {
        if cell.0 >= self.n_cells() {
            return Err(Error::InvalidCell(cell));
        }
        Ok(())
    }

    /// `(col, row)` of a valid cell.
    pub fn col_row(&self, cell: CellId) -> Result<(usize, usize)> {
        self.check(cell)?;
        Ok((cell.0 % self.cols, cell.0 / self.cols))
    }

    pub fn cells(&self) -> impl Iterator<Item = CellId> {
        (0..self.n_cells()).map(CellId)
    }

    /// The cell whose half-open square `[x0, x0 + size) x [y0, y0 + size)` holds `point`.
    pub fn cell_of(&self, point: Point) -> Result<CellId> {
        if !point.is_finite() {
            return Err(Error::OutOfArea(point));
        }
        let fx = ((point.x - self.origin.x) / self.cell_size).floor();
        let fy = ((point.y - self.origin.y) / self.cell_size).floor();
        if fx < 0.0 || fy < 0.0 || fx >= self.cols as f64 || fy >= self.rows as f64 {
            return Err(Error::OutOfArea(point));
        }
        Ok(CellId(fy as usize * self.cols + fx as usize))
    }

    pub fn cell_geometric_center(&self, cell: CellId) -> Result<Point> {
        let (col, row) = self.col_row(cell)?;
        Ok(Point::new(
            self.origin.x + (col as f64 + 0.5) * self.cell_size,
            self.origin.y + (row as f64 + 0.5) * self.cell_size,
        ))
    }

    pub fn cell_bounds(&self, cell: CellId) -> Result<Rect> {
        let (col, row) = self.col_row(cell)?;
        let min = Point::new(
            self.origin.x + col as f64 * self.cell_size,
            self.origin.y + row as f64 * self.cell_size,
        );
        Ok(Rect {
            min,
            max: Point::new(min.x + self.cell_size, min.y + self.cell_size),
        })
    }
}

/// Weighted Gaussian statistics of one AP inside one cell.
///
/// Moments accumulate with a weighted one-pass update; `variance` is only
/// meaningful once the owning fingerprint has been finalized.
#[derive(Debug, Clone, Copy)]
pub struct ApStats {
    weight_sum: f64,
    mean: f64,
    m2: f64,
    variance: f64,
    finalized: bool,
}

impl Default for ApStats {
    fn default() -> Self {
        ApStats {
            weight_sum: 0.0,
            mean: 0.0,
            m2: 0.0,
            variance: 0.0,
            finalized: false,
        }
    }
}

// The sum-of-squares accumulator is not persisted, so finalized stats
// compare on their published moments only.
impl PartialEq for ApStats {
    fn eq(&self, other: &Self) -> bool {
        self.weight_sum == other.weight_sum
            && self.mean == other.mean
            && self.finalized == other.finalized
            && if self.finalized {
                self.variance == other.variance
            } else {
                self.m2 == other.m2
            }
    }
}

impl ApStats {
    /// Finalized statistics built directly from moments.
    pub fn from_moments(weight_sum: f64, mean: f64, variance: f64) -> Result<Self> {
        if !(weight_sum >= 0.0 && weight_sum.is_finite()) {
            return Err(Error::InvalidArgument(format!("weight sum {weight_sum}")));
        }
        if !(variance > 0.0 && variance.is_finite()) || !mean.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "mean {mean} / variance {variance}"
            )));
        }
        Ok(ApStats {
            weight_sum,
            mean,
            m2: variance * weight_sum,
            variance,
            finalized: true,
        })
    }

    pub fn push(&mut self, rss: f64, weight: f64) {
        if weight <= 0.0 {
            return;
        }
        self.weight_sum += weight;
        let delta = rss - self.mean;
        self.mean += delta * weight / self.weight_sum;
        self.m2 += weight * delta * (rss - self.mean);
        self.finalized = false;
    }

    /// Combines two partial accumulators as if all samples went into one.
    pub fn merge(&mut self, other: &ApStats) {
        if other.weight_sum <= 0.0 {
            return;
        }
        if self.weight_sum <= 0.0 {
            *self = *other;
            self.finalized = false;
            return;
        }
        let total = self.weight_sum + other.weight_sum;
        let delta = other.mean - self.mean;
        self.mean += delta * other.weight_sum / total;
        self.m2 += other.m2 + delta * delta * self.weight_sum * other.weight_sum / total;
        self.weight_sum = total;
        self.finalized = false;
    }

    pub fn weight_sum(&self) -> f64 {
        self.weight_sum
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Weighted population variance of the pushed samples, without the floor.
    pub fn raw_variance(&self) -> f64 {
        if self.weight_sum > 0.0 {
            (self.m2 / self.weight_sum).max(0.0)
        } else {
            0.0
        }
    }

    pub fn finalize(&mut self, sigma_floor: f64) {
        self.variance = self.raw_variance().max(sigma_floor);
        self.finalized = true;
    }

    pub fn is_finalized(&self) -> bool {
        self.finalized
    }

    pub fn variance(&self) -> Result<f64> {
        if self.finalized {
            Ok(self.variance)
        } else {
            Err(Error::NotFinalized)
        }
    }
}

/// Everything the fingerprint knows about one grid cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellStats {
    pub cell: CellId,
    pub per_ap: BTreeMap<ApId, ApStats>,
    /// Weighted center of mass of the labels that contributed to this cell.
    pub mass_centroid: Point,
    pub total_weight: f64,
}

impl CellStats {
    pub fn new(cell: CellId) -> Self {
        CellStats {
            cell,
            per_ap: BTreeMap::new(),
            mass_centroid: Point::default(),
            total_weight: 0.0,
        }
    }

    pub(crate) fn add_location(&mut self, location: Point, weight: f64) {
        if weight <= 0.0 {
            return;
        }
        self.total_weight += weight;
        let f = weight / self.total_weight;
        self.mass_centroid = self.mass_centroid + (location - self.mass_centroid) * f;
    }

    pub(crate) fn merge(&mut self, other: &CellStats) {
        for (ap, stats) in &other.per_ap {
            self.per_ap.entry(ap.clone()).or_default().merge(stats);
        }
        if other.total_weight > 0.0 {
            let total = self.total_weight + other.total_weight;
            let f = other.total_weight / total;
            self.mass_centroid = self.mass_centroid + (other.mass_centroid - self.mass_centroid) * f;
            self.total_weight = total;
        }
    }
}

/// How a cell is represented by a single point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RepresentativeMode {
    #[default]
    GeometricCenter,
    MassCentroid,
}

impl RepresentativeMode {
    pub fn name(self) -> &'static str {
        match self {
            RepresentativeMode::GeometricCenter => "geometric_center",
            RepresentativeMode::MassCentroid => "mass_centroid",
        }
    }
}

impl std::str::FromStr for RepresentativeMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "geometric_center" | "geometric" => Ok(RepresentativeMode::GeometricCenter),
            "mass_centroid" | "centroid" => Ok(RepresentativeMode::MassCentroid),
            other => Err(Error::InvalidArgument(format!(
                "unknown representative mode {other:?}"
            ))),
        }
    }
}

/// Online tracking options.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackerConfig {
    pub window_k: usize,
    pub offset_correction: bool,
    /// Estimate the device offset once against fingerprint-wide AP means
    /// instead of per candidate cell. Only used with `offset_correction`.
    pub global_offset: bool,
    pub representative_mode: RepresentativeMode,
    pub spatial_com: bool,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        TrackerConfig {
            window_k: 10,
            offset_correction: false,
            global_offset: false,
            representative_mode: RepresentativeMode::GeometricCenter,
            spatial_com: true,
        }
    }
}

impl TrackerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window_k == 0 {
            return Err(Error::InvalidArgument("window_k must be >= 1".into()));
        }
        Ok(())
    }
}

/// The complete radio map: grid plus per-cell statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct FingerprintDb {
    pub(crate) grid: GridSpec,
    pub(crate) cells: BTreeMap<CellId, CellStats>,
    pub(crate) ap_universe: BTreeSet<ApId>,
    pub(crate) min_cell_weight: f64,
    pub(crate) finalized: bool,
}

impl FingerprintDb {
    pub const FORMAT_VERSION: u32 = 1;

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn cells(&self) -> &BTreeMap<CellId, CellStats> {
        &self.cells
    }

    pub fn cell(&self, cell: CellId) -> Option<&CellStats> {
        self.cells.get(&cell)
    }

    pub fn ap_universe(&self) -> &BTreeSet<ApId> {
        &self.ap_universe
    }

    pub fn min_cell_weight(&self) -> f64 {
        self.min_cell_weight
    }

    pub fn is_finalized(&self) -> bool {
        self.finalized
    }

    pub fn is_usable(&self, cell: &CellStats) -> bool {
        cell.total_weight > 0.0 && cell.total_weight >= self.min_cell_weight
    }

    /// Cells that take part in queries, in row-major order.
    pub fn usable_cells(&self) -> impl Iterator<Item = &CellStats> {
        self.cells.values().filter(move |c| self.is_usable(c))
    }

    /// Checks the structural invariants of the database.
    pub fn check_invariants(&self) -> Result<()> {
        for (id, cell) in &self.cells {
            self.grid.check(*id)?;
            if cell.cell != *id {
                return Err(Error::InvalidArgument(format!(
                    "cell record {:?} stored under {:?}",
                    cell.cell, id
                )));
            }
            if !(cell.total_weight >= 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "negative weight in cell {id:?}"
                )));
            }
            for (ap, stats) in &cell.per_ap {
                if !self.ap_universe.contains(ap) {
                    return Err(Error::InvalidArgument(format!(
                        "AP {ap} missing from the universe"
                    )));
                }
                if stats.weight_sum > 0.0 && !(RSS_MIN..=RSS_MAX).contains(&stats.mean) {
                    return Err(Error::InvalidArgument(format!(
                        "mean {} of AP {ap} out of range",
                        stats.mean
                    )));
                }
                if self.finalized && !stats.finalized {
                    return Err(Error::NotFinalized);
                }
            }
        }
        Ok(())
    }
}
