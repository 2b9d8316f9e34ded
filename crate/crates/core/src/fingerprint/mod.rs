//! Offline phase: turns location-tagged WiFi scans into a probabilistic
//! per-cell radio map.

mod io;

pub use io::{load_db, save_db, LoadError};

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::geometry::{self, Circle};
use crate::model::{
    ApId, ApStats, CellId, CellStats, FingerprintDb, GridSpec, GroundTruthEstimate, Point,
    Reading, RepresentativeMode, TaggedScan, DEFAULT_SIGMA_FLOOR, RSS_MAX, RSS_MIN,
};

/// Default total weight a cell needs before it is used at query time.
pub const DEFAULT_MIN_CELL_WEIGHT: f64 = 3.0;

/// How a noisy-labeled scan is spread over grid cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AssignmentStrategy {
    /// The cell enclosing the label gets the whole scan.
    LocationOnly,
    /// Every cell touched by the confidence circle gets weight 1.
    UnweightedConfidence,
    /// Cells get the fraction of the confidence disk they cover.
    #[default]
    WeightedConfidence,
}

impl AssignmentStrategy {
    pub const ALL: [AssignmentStrategy; 3] = [
        AssignmentStrategy::LocationOnly,
        AssignmentStrategy::UnweightedConfidence,
        AssignmentStrategy::WeightedConfidence,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AssignmentStrategy::LocationOnly => "location_only",
            AssignmentStrategy::UnweightedConfidence => "unweighted_confidence",
            AssignmentStrategy::WeightedConfidence => "weighted_confidence",
        }
    }
}

impl std::str::FromStr for AssignmentStrategy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "location_only" | "location" => Ok(AssignmentStrategy::LocationOnly),
            "unweighted_confidence" | "unweighted" => Ok(AssignmentStrategy::UnweightedConfidence),
            "weighted_confidence" | "weighted" => Ok(AssignmentStrategy::WeightedConfidence),
            other => Err(Error::InvalidArgument(format!("unknown strategy {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BuilderConfig {
    pub strategy: AssignmentStrategy,
    pub grid: GridSpec,
    /// Minimum per-AP variance (dB²) applied at finalization.
    pub sigma_floor: f64,
    pub min_cell_weight: f64,
    /// Shift each training scan by its mean residual against the running
    /// fingerprint-wide AP means before accumulating it.
    pub offline_offset_correction: bool,
}

impl BuilderConfig {
    pub fn new(grid: GridSpec, strategy: AssignmentStrategy) -> Self {
        BuilderConfig {
            strategy,
            grid,
            sigma_floor: DEFAULT_SIGMA_FLOOR,
            min_cell_weight: DEFAULT_MIN_CELL_WEIGHT,
            offline_offset_correction: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_floor > 0.0 && self.sigma_floor.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "sigma_floor {} must be positive",
                self.sigma_floor
            )));
        }
        if !(self.min_cell_weight >= 0.0 && self.min_cell_weight.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "min_cell_weight {} must be >= 0",
                self.min_cell_weight
            )));
        }
        Ok(())
    }
}

/// Cells (and weights) a labeled scan contributes to.
///
/// A zero confidence radius degrades every strategy to location-only.
pub fn assign_scan(truth: &GroundTruthEstimate, config: &BuilderConfig) -> Result<Vec<(CellId, f64)>> {
    let home = config.grid.cell_of(truth.location)?;
    if truth.confidence_radius == 0.0 {
        return Ok(vec![(home, 1.0)]);
    }
    let circle = Circle::new(truth.location, truth.confidence_radius)?;
    match config.strategy {
        AssignmentStrategy::LocationOnly => Ok(vec![(home, 1.0)]),
        AssignmentStrategy::UnweightedConfidence => Ok(geometry::overlapped_cells(&circle, &config.grid)
            .into_iter()
            .map(|(cell, _)| (cell, 1.0))
            .collect()),
        AssignmentStrategy::WeightedConfidence => geometry::assignment_weights(&circle, &config.grid),
    }
}

/// Single-writer accumulator for a fingerprint.
#[derive(Debug, Clone)]
pub struct FingerprintBuilder {
    config: BuilderConfig,
    cells: BTreeMap<CellId, CellStats>,
    ap_universe: BTreeSet<ApId>,
    global: BTreeMap<ApId, ApStats>,
    ingested: usize,
    skipped: usize,
    assigned_weight: f64,
}

impl FingerprintBuilder {
    pub fn new(config: BuilderConfig) -> Result<Self> {
        config.validate()?;
        Ok(FingerprintBuilder {
            config,
            cells: BTreeMap::new(),
            ap_universe: BTreeSet::new(),
            global: BTreeMap::new(),
            ingested: 0,
            skipped: 0,
            assigned_weight: 0.0,
        })
    }

    pub fn config(&self) -> &BuilderConfig {
        &self.config
    }

    /// Scans that were accumulated.
    pub fn ingested(&self) -> usize {
        self.ingested
    }

    /// Scans dropped because their label fell outside the grid.
    pub fn skipped(&self) -> usize {
        self.skipped
    }

    /// Sum of all assignment weights handed out so far.
    pub fn assigned_weight(&self) -> f64 {
        self.assigned_weight
    }

    pub fn cells(&self) -> &BTreeMap<CellId, CellStats> {
        &self.cells
    }

    /// Mean residual of the readings against the running global AP means.
    fn offline_offset(&self, readings: &[Reading]) -> f64 {
        let (sum, n) = readings
            .iter()
            .filter_map(|r| self.global.get(&r.id).map(|g| r.rss - g.mean()))
            .fold((0.0, 0usize), |(s, n), d| (s + d, n + 1));
        if n >= 2 {
            sum / n as f64
        } else {
            0.0
        }
    }

    /// Accumulates one tagged scan. Scans labeled outside the grid are counted
    /// and skipped; any other problem is reported.
    pub fn ingest(&mut self, scan: &TaggedScan) -> Result<()> {
        let assignments = match assign_scan(&scan.truth, &self.config) {
            Ok(a) => a,
            Err(Error::OutOfArea(_)) => {
                self.skipped += 1;
                return Ok(());
            }
            Err(e) => return Err(e),
        };

        let offset = if self.config.offline_offset_correction {
            self.offline_offset(scan.wifi.readings())
        } else {
            0.0
        };
        let readings: Vec<(ApId, f64)> = scan
            .wifi
            .readings()
            .iter()
            .map(|r| (r.id.clone(), (r.rss - offset).clamp(RSS_MIN, RSS_MAX)))
            .collect();

        for (cell, weight) in &assignments {
            let stats = self
                .cells
                .entry(*cell)
                .or_insert_with(|| CellStats::new(*cell));
            stats.add_location(scan.truth.location, *weight);
            for (ap, rss) in &readings {
                stats.per_ap.entry(ap.clone()).or_default().push(*rss, *weight);
            }
            self.assigned_weight += weight;
        }
        for (ap, rss) in readings {
            if self.config.offline_offset_correction {
                self.global.entry(ap.clone()).or_default().push(rss, 1.0);
            }
            self.ap_universe.insert(ap);
        }
        self.ingested += 1;
        Ok(())
    }

    pub fn ingest_all<'a>(&mut self, scans: impl IntoIterator<Item = &'a TaggedScan>) -> Result<()> {
        for scan in scans {
            self.ingest(scan)?;
        }
        Ok(())
    }

    /// Folds a builder fed with a disjoint shard of scans into this one.
    pub fn merge(&mut self, other: FingerprintBuilder) -> Result<()> {
        if other.config.grid != self.config.grid {
            return Err(Error::InvalidArgument("cannot merge builders over different grids".into()));
        }
        for (id, cell) in other.cells {
            match self.cells.get_mut(&id) {
                Some(mine) => mine.merge(&cell),
                None => {
                    self.cells.insert(id, cell);
                }
            }
        }
        for (ap, g) in other.global {
            self.global.entry(ap).or_default().merge(&g);
        }
        self.ap_universe.extend(other.ap_universe);
        self.ingested += other.ingested;
        self.skipped += other.skipped;
        self.assigned_weight += other.assigned_weight;
        Ok(())
    }

    /// Clamps variances to the floor and freezes the fingerprint.
    pub fn finalize(self) -> Result<FingerprintDb> {
        let mut cells = self.cells;
        for cell in cells.values_mut() {
            for stats in cell.per_ap.values_mut() {
                stats.finalize(self.config.sigma_floor);
            }
        }
        let db = FingerprintDb {
            grid: self.config.grid,
            cells,
            ap_universe: self.ap_universe,
            min_cell_weight: self.config.min_cell_weight,
            finalized: true,
        };
        if db.usable_cells().next().is_none() {
            return Err(Error::EmptyFingerprint);
        }
        Ok(db)
    }
}

/// Builds and finalizes a fingerprint from a batch of scans.
pub fn build_fingerprint<'a>(
    scans: impl IntoIterator<Item = &'a TaggedScan>,
    config: &BuilderConfig,
) -> Result<FingerprintDb> {
    let mut builder = FingerprintBuilder::new(*config)?;
    builder.ingest_all(scans)?;
    builder.finalize()
}

/// Point standing in for a usable cell.
pub fn representative_location(
    db: &FingerprintDb,
    cell: CellId,
    mode: RepresentativeMode,
) -> Result<Point> {
    db.grid().check(cell)?;
    let stats = db
        .cell(cell)
        .filter(|c| db.is_usable(c))
        .ok_or(Error::UnusableCell(cell))?;
    match mode {
        RepresentativeMode::GeometricCenter => db.grid().cell_geometric_center(cell),
        RepresentativeMode::MassCentroid => Ok(stats.mass_centroid),
    }
}
