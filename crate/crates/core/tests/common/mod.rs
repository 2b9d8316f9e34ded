//! Shared fixtures for the integration tests.
#![allow(dead_code)]

use hybridloc::{
    build_fingerprint, ApId, AssignmentStrategy, BuilderConfig, CellId, FingerprintDb, GridSpec,
    GroundTruthEstimate, Point, Reading, TaggedScan, WifiScan,
};
use rand::Rng;
use rand_distr::StandardNormal;

pub fn ap(i: usize) -> ApId {
    ApId::new(format!("ap{i}")).unwrap()
}

/// A random fingerprint on a `cols x rows` grid of 1 m cells. Every AP has a
/// random mean level per cell; some cells are left sparse so the usability
/// threshold matters.
pub fn random_db<R: Rng>(rng: &mut R, cols: usize, rows: usize, n_aps: usize) -> FingerprintDb {
    let grid = GridSpec::new(Point::new(0.0, 0.0), 1.0, cols, rows).unwrap();
    let levels: Vec<Vec<f64>> = (0..cols * rows)
        .map(|_| (0..n_aps).map(|_| rng.random_range(-90.0..-40.0)).collect())
        .collect();
    let mut scans = Vec::new();
    for cell in grid.cells() {
        let n = rng.random_range(0..6);
        let (c, r) = grid.col_row(cell).unwrap();
        for _ in 0..n {
            let mut readings = Vec::new();
            for i in 0..n_aps {
                if rng.random_bool(0.8) {
                    let z: f64 = rng.sample(StandardNormal);
                    readings.push(Reading::new(ap(i), (levels[cell.0][i] + 3.0 * z).clamp(-110.0, 0.0)));
                }
            }
            let loc = Point::new(c as f64 + rng.random_range(0.0..1.0), r as f64 + rng.random_range(0.0..1.0));
            scans.push(TaggedScan {
                wifi: WifiScan::new(0.0, readings).unwrap(),
                truth: GroundTruthEstimate::new(loc, 0.0).unwrap(),
            });
        }
    }
    let cfg = BuilderConfig {
        min_cell_weight: 2.0,
        ..BuilderConfig::new(grid, AssignmentStrategy::LocationOnly)
    };
    build_fingerprint(&scans, &cfg).unwrap()
}

/// A scan drawn around the fit of a random usable cell, plus the odd
/// reading from an AP that cell has never seen.
pub fn scan_near<R: Rng>(rng: &mut R, db: &FingerprintDb, n_aps: usize) -> WifiScan {
    let usable: Vec<_> = db.usable_cells().collect();
    let cell = usable[rng.random_range(0..usable.len())];
    let mut readings = Vec::new();
    for i in 0..n_aps {
        let id = ap(i);
        let rss = match cell.per_ap.get(&id) {
            Some(s) => {
                let z: f64 = rng.sample(StandardNormal);
                s.mean() + s.variance().unwrap().sqrt() * z
            }
            None if rng.random_bool(0.3) => rng.random_range(-95.0..-80.0),
            None => continue,
        };
        readings.push(Reading::new(id, rss.clamp(-110.0, 0.0)));
    }
    WifiScan::new(1.0, readings).unwrap()
}

fn density(x: f64, mean: f64, var: f64) -> f64 {
    (-(x - mean) * (x - mean) / (2.0 * var)).exp() / (2.0 * std::f64::consts::PI * var).sqrt()
}

/// Posterior by direct products of densities over usable cells that share
/// at least one AP with the scan, uniform prior, no offset correction.
pub fn brute_force_posterior(db: &FingerprintDb, scan: &WifiScan) -> Vec<(CellId, f64)> {
    let mut lik = Vec::new();
    for cell in db.usable_cells() {
        if !scan.readings().iter().any(|r| cell.per_ap.contains_key(&r.id)) {
            continue;
        }
        let mut p = 1.0;
        for r in scan.readings() {
            p *= match cell.per_ap.get(&r.id) {
                Some(s) => density(r.rss, s.mean(), s.variance().unwrap()),
                None => density(r.rss, -95.0, 25.0),
            };
        }
        lik.push((cell.cell, p));
    }
    let total: f64 = lik.iter().map(|l| l.1).sum();
    lik.into_iter().map(|(c, p)| (c, p / total)).collect()
}

/// First cell with the largest probability.
pub fn argmax(post: &[(CellId, f64)]) -> CellId {
    let mut best = post[0];
    for &e in &post[1..] {
        if e.1 > best.1 {
            best = e;
        }
    }
    best.0
}
