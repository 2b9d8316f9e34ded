//! Online phase: Gaussian likelihoods, device-offset correction, MAP cell
//! selection, spatial center of mass and temporal smoothing.
//!
//! All scoring happens in the log domain; posteriors are normalized by
//! subtracting the best score before exponentiating.

use std::collections::{HashMap, VecDeque};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::model::{
    ApId, ApStats, CellId, CellStats, FingerprintDb, Point, RepresentativeMode, TrackerConfig,
    WifiScan,
};

/// An AP heard in the scan but missing from a cell is scored against this
/// near-sensitivity Gaussian.
pub const MISSING_AP_MEAN: f64 = -95.0;
pub const MISSING_AP_VARIANCE: f64 = 25.0;

pub fn log_gaussian(x: f64, mean: f64, variance: f64) -> f64 {
    let d = x - mean;
    -0.5 * (2.0 * PI * variance).ln() - d * d / (2.0 * variance)
}

/// Probability density of observing `rss` under a finalized AP fit.
pub fn gaussian_density(rss: f64, stats: &ApStats) -> Result<f64> {
    let var = stats.variance()?;
    let d = rss - stats.mean();
    Ok((-d * d / (2.0 * var)).exp() / (var.sqrt() * (2.0 * PI).sqrt()))
}

/// Mean residual `s_i - μ_i` over the APs shared by scan and cell.
pub fn common_offset(scan: &WifiScan, cell: &CellStats) -> Result<f64> {
    let (sum, n) = scan
        .readings()
        .iter()
        .filter_map(|r| cell.per_ap.get(&r.id).map(|s| r.rss - s.mean()))
        .fold((0.0, 0usize), |(s, n), d| (s + d, n + 1));
    if n == 0 {
        return Err(Error::NoOverlap);
    }
    Ok(sum / n as f64)
}

/// How the device offset enters a cell's score.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Offset {
    None,
    PerCell,
    Fixed(f64),
}

/// Scores one cell from `(rss, Some((mean, variance)))` pairs, `None` marking
/// APs the cell has never seen. Returns `None` when nothing is shared.
fn score(pairs: &[(f64, Option<(f64, f64)>)], offset: Offset) -> Option<f64> {
    let mut shared = 0usize;
    let mut residual = 0.0;
    let mut var_sum = 0.0;
    for (rss, fit) in pairs {
        if let Some((mean, var)) = fit {
            shared += 1;
            residual += rss - mean;
            var_sum += var;
        }
    }
    if shared == 0 {
        return None;
    }
    let q = shared as f64;
    let (lambda, inflation) = match offset {
        Offset::None => (0.0, 0.0),
        Offset::PerCell => (residual / q, var_sum / (q * q)),
        Offset::Fixed(lambda) => (lambda, var_sum / (q * q)),
    };
    let ll = pairs
        .iter()
        .map(|(rss, fit)| match fit {
            Some((mean, var)) => log_gaussian(rss - lambda, *mean, var + inflation),
            None => log_gaussian(rss - lambda, MISSING_AP_MEAN, MISSING_AP_VARIANCE),
        })
        .sum();
    Some(ll)
}

fn cell_pairs(scan: &WifiScan, cell: &CellStats) -> Result<Vec<(f64, Option<(f64, f64)>)>> {
    scan.readings()
        .iter()
        .map(|r| match cell.per_ap.get(&r.id) {
            Some(s) => Ok((r.rss, Some((s.mean(), s.variance()?)))),
            None => Ok((r.rss, None)),
        })
        .collect()
}

/// Log-likelihood of a scan at a cell, optionally with per-cell offset correction.
pub fn cell_log_likelihood(scan: &WifiScan, cell: &CellStats, offset_correction: bool) -> Result<f64> {
    if scan.is_empty() {
        return Err(Error::InvalidScan("empty scan".into()));
    }
    let pairs = cell_pairs(scan, cell)?;
    let offset = if offset_correction {
        Offset::PerCell
    } else {
        Offset::None
    };
    score(&pairs, offset).ok_or(Error::NoOverlap)
}

/// Normalized posterior over the cells that share at least one AP with a scan.
#[derive(Debug, Clone, PartialEq)]
pub struct CellPosterior {
    /// `(cell, probability)` in row-major order.
    pub entries: Vec<(CellId, f64)>,
    /// `log P(s)` under a uniform prior over the scored cells.
    pub log_evidence: f64,
}

impl CellPosterior {
    pub fn probability(&self, cell: CellId) -> f64 {
        self.entries
            .binary_search_by_key(&cell, |e| e.0)
            .map(|i| self.entries[i].1)
            .unwrap_or(0.0)
    }
}

struct DenseCell {
    id: CellId,
    geometric: Point,
    centroid: Point,
    /// `(mean, variance)` per AP slot; NaN mean marks an unseen AP.
    fits: Vec<(f64, f64)>,
}

/// Query-ready view of a finalized fingerprint.
pub struct Estimator<'a> {
    db: &'a FingerprintDb,
    config: TrackerConfig,
    ap_index: HashMap<&'a ApId, usize>,
    global_means: Vec<f64>,
    cells: Vec<DenseCell>,
}

impl<'a> Estimator<'a> {
    pub fn new(db: &'a FingerprintDb, config: TrackerConfig) -> Result<Self> {
        config.validate()?;
        if !db.is_finalized() {
            return Err(Error::NotFinalized);
        }
        let ap_index: HashMap<&ApId, usize> =
            db.ap_universe().iter().enumerate().map(|(i, a)| (a, i)).collect();
        let n_ap = ap_index.len();
        let mut cells = Vec::new();
        let mut global = vec![ApStats::default(); n_ap];
        for cell in db.usable_cells() {
            let mut fits = vec![(f64::NAN, f64::NAN); n_ap];
            for (ap, stats) in &cell.per_ap {
                let i = ap_index[ap];
                fits[i] = (stats.mean(), stats.variance()?);
                global[i].push(stats.mean(), stats.weight_sum());
            }
            cells.push(DenseCell {
                id: cell.cell,
                geometric: db.grid().cell_geometric_center(cell.cell)?,
                centroid: cell.mass_centroid,
                fits,
            });
        }
        if cells.is_empty() {
            return Err(Error::EmptyFingerprint);
        }
        Ok(Estimator {
            db,
            config,
            ap_index,
            global_means: global.iter().map(|g| g.mean()).collect(),
            cells,
        })
    }

    pub fn db(&self) -> &FingerprintDb {
        self.db
    }

    pub fn config(&self) -> &TrackerConfig {
        &self.config
    }

    fn representative(&self, cell: &DenseCell) -> Point {
        match self.config.representative_mode {
            RepresentativeMode::GeometricCenter => cell.geometric,
            RepresentativeMode::MassCentroid => cell.centroid,
        }
    }

    fn global_offset(&self, readings: &[(f64, Option<usize>)]) -> f64 {
        let (sum, n) = readings
            .iter()
            .filter_map(|(rss, i)| i.map(|i| rss - self.global_means[i]))
            .fold((0.0, 0usize), |(s, n), d| (s + d, n + 1));
        if n > 0 {
            sum / n as f64
        } else {
            0.0
        }
    }

    /// MAP cell and the normalized posterior for one scan.
    pub fn estimate(&self, scan: &WifiScan) -> Result<(CellId, CellPosterior)> {
        if scan.is_empty() {
            return Err(Error::NoOverlap);
        }
        let readings: Vec<(f64, Option<usize>)> = scan
            .readings()
            .iter()
            .map(|r| (r.rss, self.ap_index.get(&r.id).copied()))
            .collect();
        let offset = match (self.config.offset_correction, self.config.global_offset) {
            (false, _) => Offset::None,
            (true, false) => Offset::PerCell,
            (true, true) => Offset::Fixed(self.global_offset(&readings)),
        };

        let mut pairs = Vec::with_capacity(readings.len());
        let mut scored: Vec<(usize, f64)> = Vec::new();
        for (ci, cell) in self.cells.iter().enumerate() {
            pairs.clear();
            pairs.extend(readings.iter().map(|(rss, slot)| {
                let fit = slot
                    .map(|i| cell.fits[i])
                    .filter(|(mean, _)| !mean.is_nan());
                (*rss, fit)
            }));
            if let Some(ll) = score(&pairs, offset) {
                scored.push((ci, ll));
            }
        }
        if scored.is_empty() {
            return Err(Error::NoOverlap);
        }

        // strict comparison keeps the lowest row-major index on ties
        let (mut best, mut best_ll) = scored[0];
        for &(ci, ll) in &scored[1..] {
            if ll > best_ll {
                best = ci;
                best_ll = ll;
            }
        }
        let weights: Vec<f64> = scored.iter().map(|(_, ll)| (ll - best_ll).exp()).collect();
        let total: f64 = weights.iter().sum();
        let entries = scored
            .iter()
            .zip(&weights)
            .map(|((ci, _), w)| (self.cells[*ci].id, w / total))
            .collect();
        let posterior = CellPosterior {
            entries,
            log_evidence: best_ll + total.ln() - (scored.len() as f64).ln(),
        };
        Ok((self.cells[best].id, posterior))
    }

    /// Representative location of a scored cell.
    pub fn representative_of(&self, cell: CellId) -> Result<Point> {
        let i = self
            .cells
            .binary_search_by_key(&cell, |c| c.id)
            .map_err(|_| Error::UnusableCell(cell))?;
        Ok(self.representative(&self.cells[i]))
    }

    /// Posterior-weighted mean of cell representative locations.
    pub fn center_of_mass(&self, posterior: &CellPosterior) -> Result<Point> {
        let mut acc = Point::default();
        let mut mass = 0.0;
        for (cell, p) in &posterior.entries {
            acc = acc + self.representative_of(*cell)? * *p;
            mass += p;
        }
        if !(mass > 0.0) {
            return Err(Error::InvalidArgument("posterior has no mass".into()));
        }
        Ok(acc * (1.0 / mass))
    }

    /// Discrete plus optional spatial estimate, before temporal smoothing.
    pub fn locate(&self, scan: &WifiScan) -> Result<Point> {
        let (best, posterior) = self.estimate(scan)?;
        if self.config.spatial_com {
            self.center_of_mass(&posterior)
        } else {
            self.representative_of(best)
        }
    }

    /// Runs the full tracker over a scan stream. Scans that share no AP with
    /// the fingerprint yield `None` and leave the smoothing window untouched.
    pub fn track<'s>(&self, scans: impl IntoIterator<Item = &'s WifiScan>) -> Result<Vec<Option<Point>>> {
        let mut state = TrackState::new(self.config.window_k)?;
        self.track_with(&mut state, scans)
    }

    pub fn track_with<'s>(
        &self,
        state: &mut TrackState,
        scans: impl IntoIterator<Item = &'s WifiScan>,
    ) -> Result<Vec<Option<Point>>> {
        scans
            .into_iter()
            .map(|scan| match self.locate(scan) {
                Ok(p) => Ok(Some(state.push(scan.timestamp(), p))),
                Err(Error::NoOverlap) => Ok(None),
                Err(e) => Err(e),
            })
            .collect()
    }
}

/// MAP cell and posterior of `scan` against `db`.
pub fn discrete_estimate(
    scan: &WifiScan,
    db: &FingerprintDb,
    config: &TrackerConfig,
) -> Result<(CellId, CellPosterior)> {
    Estimator::new(db, *config)?.estimate(scan)
}

/// Center of mass of the posterior using `config.representative_mode`.
pub fn spatial_center_of_mass(
    posterior: &CellPosterior,
    db: &FingerprintDb,
    config: &TrackerConfig,
) -> Result<Point> {
    Estimator::new(db, *config)?.center_of_mass(posterior)
}

/// One location estimate per scan; `None` marks a scan with no overlap.
pub fn track<'s>(
    scans: impl IntoIterator<Item = &'s WifiScan>,
    db: &FingerprintDb,
    config: &TrackerConfig,
) -> Result<Vec<Option<Point>>> {
    Estimator::new(db, *config)?.track(scans)
}

/// Sliding window over the last `k` location estimates of one device.
#[derive(Debug, Clone)]
pub struct TrackState {
    k: usize,
    history: VecDeque<(f64, Point)>,
}

impl TrackState {
    pub fn new(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidArgument("window k must be >= 1".into()));
        }
        Ok(TrackState {
            k,
            history: VecDeque::with_capacity(k),
        })
    }

    pub fn len(&self) -> usize {
        self.history.len()
    }

    pub fn is_empty(&self) -> bool {
        self.history.is_empty()
    }

    pub fn history(&self) -> impl Iterator<Item = &(f64, Point)> {
        self.history.iter()
    }

    pub fn clear(&mut self) {
        self.history.clear();
    }

    /// Adds an estimate and returns the mean of the last `min(k, t)` estimates.
    pub fn push(&mut self, timestamp: f64, estimate: Point) -> Point {
        if self.history.len() == self.k {
            self.history.pop_front();
        }
        self.history.push_back((timestamp, estimate));
        let n = self.history.len() as f64;
        let sum = self
            .history
            .iter()
            .fold(Point::default(), |acc, (_, p)| acc + *p);
        sum * (1.0 / n)
    }
}

/// Pushes `new_estimate` into `state` and returns the smoothed location.
pub fn temporal_smooth(state: &mut TrackState, timestamp: f64, new_estimate: Point) -> Point {
    state.push(timestamp, new_estimate)
}
