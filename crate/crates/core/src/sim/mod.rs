//! Seeded RF world used in place of a physical testbed.
//!
//! WiFi and BLE RSS follow a log-distance path loss with Gaussian shadowing;
//! BLE-based localization is replaced by a parametric oracle that perturbs
//! the true location and reports a confidence radius. Every output is a pure
//! function of the configuration and its seed.

mod config;
mod export;
mod shadowing;

pub use config::{parse_config, ConfigError};
pub use shadowing::StaticShadowing;
pub use export::{
    join_labels, read_labels_csv, read_scans_csv, write_labels_csv, write_scans_csv, LabelRow,
};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::fingerprint::{AssignmentStrategy, BuilderConfig};
use crate::model::{
    ApId, BleScan, GridSpec, GroundTruthEstimate, Point, Reading, Rect, TaggedScan, TrackerConfig,
    WifiScan, RSS_MAX, RSS_MIN,
};

/// A WiFi access point or BLE beacon.
#[derive(Debug, Clone, PartialEq)]
pub struct Transmitter {
    pub id: ApId,
    pub position: Point,
    /// Transmit power in dBm.
    pub tx_power: f64,
}

impl Transmitter {
    pub fn new(id: &str, x: f64, y: f64, tx_power: f64) -> Result<Self> {
        Ok(Transmitter {
            id: ApId::new(id)?,
            position: Point::new(x, y),
            tx_power,
        })
    }
}

/// Log-distance path loss with log-normal shadowing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathLoss {
    /// Loss at the reference distance (dB).
    pub pl0: f64,
    /// Reference distance (m).
    pub d0: f64,
    pub exponent: f64,
    /// Standard deviation of the per-reading shadowing term (dB).
    pub shadowing_sigma: f64,
}

impl Default for PathLoss {
    fn default() -> Self {
        PathLoss {
            pl0: 40.0,
            d0: 1.0,
            exponent: 3.0,
            shadowing_sigma: 4.0,
        }
    }
}

impl PathLoss {
    pub fn loss(&self, distance: f64) -> f64 {
        self.pl0 + 10.0 * self.exponent * (distance.max(self.d0) / self.d0).log10()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Environment {
    pub bounds: Rect,
    pub aps: Vec<Transmitter>,
    pub beacons: Vec<Transmitter>,
    pub pathloss: PathLoss,
    /// Readings below this level (dBm) are not reported.
    pub sensitivity: f64,
    /// Frozen location-dependent term on top of the path loss. Experiments
    /// reseed it from their own seed, so each seed is a different building.
    pub static_shadowing: StaticShadowing,
}

impl Default for Environment {
    /// A 37 m x 17 m floor with four in-floor APs, twelve weaker APs leaking
    /// in from neighbouring floors and twenty beacons on a regular layout.
    fn default() -> Self {
        let (w, h) = (37.0, 17.0);
        let mut aps = Vec::new();
        for (i, (x, y)) in [(6.0, 4.0), (30.0, 3.5), (8.0, 13.5), (29.0, 13.0)]
            .into_iter()
            .enumerate()
        {
            aps.push(Transmitter::new(&format!("ap{:02}", i + 1), x, y, 0.0).unwrap());
        }
        for i in 0..12 {
            let x = 2.0 + (i % 6) as f64 * 6.6;
            let y = if i < 6 { 1.5 } else { 15.5 };
            let x = x + if i < 6 { 0.0 } else { 3.3 };
            aps.push(
                Transmitter::new(&format!("ext{:02}", i + 1), x.min(w - 0.5), y, -12.0).unwrap(),
            );
        }
        let mut beacons = Vec::new();
        for r in 0..4 {
            for c in 0..5 {
                let x = w * (c as f64 + 0.5) / 5.0;
                let y = h * (r as f64 + 0.5) / 4.0;
                beacons.push(
                    Transmitter::new(&format!("b{:02}", r * 5 + c + 1), x, y, -20.0).unwrap(),
                );
            }
        }
        Environment {
            bounds: Rect::new(Point::new(0.0, 0.0), Point::new(w, h)).unwrap(),
            aps,
            beacons,
            pathloss: PathLoss::default(),
            sensitivity: -88.0,
            static_shadowing: StaticShadowing {
                sigma: 4.0,
                ..StaticShadowing::default()
            },
        }
    }
}

impl Environment {
    pub fn validate(&self) -> Result<()> {
        let pl = &self.pathloss;
        let st = &self.static_shadowing;
        if !(pl.exponent > 0.0)
            || !(pl.d0 > 0.0)
            || !(pl.shadowing_sigma >= 0.0)
            || !(st.sigma >= 0.0)
            || !(st.correlation_length > 0.0)
        {
            return Err(Error::InvalidArgument(
                "path loss needs exponent > 0, d0 > 0, shadowing >= 0, correlation length > 0"
                    .into(),
            ));
        }
        for t in self.aps.iter().chain(&self.beacons) {
            if !self.bounds.contains(&t.position) {
                return Err(Error::InvalidArgument(format!(
                    "transmitter {} lies outside the area",
                    t.id
                )));
            }
        }
        let mut ids: Vec<&ApId> = self.aps.iter().map(|t| &t.id).collect();
        ids.sort();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidArgument("duplicate AP id".into()));
        }
        Ok(())
    }

    /// Received power predicted by the path loss alone, before static
    /// shadowing, per-reading noise and device offset.
    pub fn mean_rss(&self, tx: &Transmitter, point: Point) -> f64 {
        tx.tx_power - self.pathloss.loss(tx.position.distance(&point))
    }

    /// Noiseless received power at `point`: path loss plus static shadowing.
    pub fn expected_rss(&self, tx: &Transmitter, point: Point) -> f64 {
        self.mean_rss(tx, point) + self.static_shadowing.offset(&tx.id, point)
    }

    /// One RSS draw, or `None` when it falls under the sensitivity.
    ///
    /// Exactly one normal variate is consumed per call whatever the
    /// outcome, so streams stay aligned across parameter changes.
    pub fn rss_at<R: Rng + ?Sized>(
        &self,
        tx: &Transmitter,
        point: Point,
        device: &DeviceProfile,
        rng: &mut R,
    ) -> Option<f64> {
        let z: f64 = rng.sample(StandardNormal);
        let rss = self.expected_rss(tx, point)
            + self.pathloss.shadowing_sigma * z
            + device.rss_offset;
        if rss < self.sensitivity {
            return None;
        }
        let rss = if device.quantize { rss.round() } else { rss };
        Some(rss.clamp(RSS_MIN, RSS_MAX))
    }

    fn readings<R: Rng + ?Sized>(
        &self,
        txs: &[Transmitter],
        point: Point,
        device: &DeviceProfile,
        rng: &mut R,
    ) -> Vec<Reading> {
        txs.iter()
            .filter_map(|t| {
                self.rss_at(t, point, device, rng)
                    .map(|rss| Reading::new(t.id.clone(), rss))
            })
            .collect()
    }

    pub fn wifi_scan<R: Rng + ?Sized>(
        &self,
        timestamp: f64,
        point: Point,
        device: &DeviceProfile,
        rng: &mut R,
    ) -> WifiScan {
        WifiScan::new(timestamp, self.readings(&self.aps, point, device, rng))
            .expect("simulated readings are unique and in range")
    }

    pub fn ble_scan<R: Rng + ?Sized>(
        &self,
        timestamp: f64,
        point: Point,
        device: &DeviceProfile,
        rng: &mut R,
    ) -> BleScan {
        BleScan::new(timestamp, self.readings(&self.beacons, point, device, rng))
            .expect("simulated readings are unique and in range")
    }
}

/// Parametric stand-in for a BLE localizer with a confidence estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BleOracleParams {
    /// Per-axis standard deviation of the location error (m).
    pub loc_noise_sigma: f64,
    /// Confidence radius as a multiple of `loc_noise_sigma`.
    pub confidence_factor: f64,
    pub min_confidence: f64,
}

impl Default for BleOracleParams {
    fn default() -> Self {
        BleOracleParams {
            loc_noise_sigma: 2.0,
            confidence_factor: 1.25,
            min_confidence: 0.5,
        }
    }
}

impl BleOracleParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.loc_noise_sigma >= 0.0) || !(self.confidence_factor > 0.0) || !(self.min_confidence >= 0.0) {
            return Err(Error::InvalidArgument(
                "oracle needs loc_noise_sigma >= 0, confidence_factor > 0, min_confidence >= 0".into(),
            ));
        }
        Ok(())
    }

    pub fn confidence_radius(&self) -> f64 {
        self.min_confidence.max(self.confidence_factor * self.loc_noise_sigma)
    }
}

/// Noisy location label for a device standing at `true_point`.
pub fn ble_ground_truth<R: Rng + ?Sized>(
    true_point: Point,
    oracle: &BleOracleParams,
    bounds: &Rect,
    rng: &mut R,
) -> GroundTruthEstimate {
    let zx: f64 = rng.sample(StandardNormal);
    let zy: f64 = rng.sample(StandardNormal);
    let s = oracle.loc_noise_sigma;
    let location = bounds.clamp(Point::new(true_point.x + s * zx, true_point.y + s * zy));
    GroundTruthEstimate {
        location,
        confidence_radius: oracle.confidence_radius(),
    }
}

/// A phone model: constant RSS bias and optional integer reporting.
#[derive(Debug, Clone, PartialEq)]
pub struct DeviceProfile {
    pub device_id: String,
    pub rss_offset: f64,
    pub quantize: bool,
}

impl DeviceProfile {
    pub fn new(device_id: &str, rss_offset: f64) -> Result<Self> {
        let d = DeviceProfile {
            device_id: device_id.to_string(),
            rss_offset,
            quantize: false,
        };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rss_offset.abs() <= 30.0) {
            return Err(Error::InvalidArgument(format!(
                "device offset {} exceeds 30 dB",
                self.rss_offset
            )));
        }
        Ok(())
    }
}

impl Default for DeviceProfile {
    fn default() -> Self {
        DeviceProfile {
            device_id: "reference".into(),
            rss_offset: 0.0,
            quantize: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimedPoint {
    pub t: f64,
    pub point: Point,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Trajectory {
    Stationary { at: Point, samples: usize, interval: f64 },
    /// Walk at `speed` m/s toward uniformly drawn waypoints, sampling every `interval` s.
    RandomWaypoint { speed: f64, samples: usize, interval: f64 },
    /// Every vertex of a lattice with the given spacing, row by row.
    GridSweep { spacing: f64 },
}

pub fn generate_trajectory<R: Rng + ?Sized>(
    env: &Environment,
    kind: &Trajectory,
    rng: &mut R,
) -> Result<Vec<TimedPoint>> {
    let b = env.bounds;
    match *kind {
        Trajectory::Stationary { at, samples, interval } => {
            if !b.contains(&at) || !(interval > 0.0) {
                return Err(Error::InvalidArgument("stationary point must be in bounds".into()));
            }
            Ok((0..samples)
                .map(|i| TimedPoint {
                    t: i as f64 * interval,
                    point: at,
                })
                .collect())
        }
        Trajectory::RandomWaypoint { speed, samples, interval } => {
            if !(speed > 0.0) || !(interval > 0.0) {
                return Err(Error::InvalidArgument(
                    "random waypoint needs positive speed and interval".into(),
                ));
            }
            let uniform = |rng: &mut R| {
                Point::new(
                    rng.random_range(b.min.x..b.max.x),
                    rng.random_range(b.min.y..b.max.y),
                )
            };
            let mut pos = uniform(rng);
            let mut target = uniform(rng);
            let mut out = Vec::with_capacity(samples);
            for i in 0..samples {
                out.push(TimedPoint {
                    t: i as f64 * interval,
                    point: pos,
                });
                let mut step = speed * interval;
                while step > 0.0 {
                    let d = pos.distance(&target);
                    if d <= step {
                        pos = target;
                        step -= d;
                        target = uniform(rng);
                    } else {
                        pos = pos + (target - pos) * (step / d);
                        step = 0.0;
                    }
                }
            }
            Ok(out)
        }
        Trajectory::GridSweep { spacing } => {
            if !(spacing > 0.0) {
                return Err(Error::InvalidArgument("grid sweep spacing must be positive".into()));
            }
            let nx = (b.width() / spacing + 1e-9).floor() as usize;
            let ny = (b.height() / spacing + 1e-9).floor() as usize;
            let mut out = Vec::with_capacity((nx + 1) * (ny + 1));
            for j in 0..=ny {
                for i in 0..=nx {
                    out.push(TimedPoint {
                        t: out.len() as f64,
                        point: Point::new(b.min.x + i as f64 * spacing, b.min.y + j as f64 * spacing),
                    });
                }
            }
            Ok(out)
        }
    }
}

/// Everything needed to run one simulated study.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub environment: Environment,
    pub cell_size: f64,
    /// Number of training scans (N_s).
    pub n_training: usize,
    /// Test locations drawn without replacement from the 1 m lattice over
    /// the area; the default covers all 38 x 18 vertices of the default floor.
    pub test_points: usize,
    /// Consecutive scans taken while standing at each test location.
    pub scans_per_test_point: usize,
    pub strategy: AssignmentStrategy,
    pub tracker: TrackerConfig,
    pub oracle: BleOracleParams,
    pub train_device: DeviceProfile,
    pub test_device: DeviceProfile,
    pub sigma_floor: f64,
    pub min_cell_weight: f64,
    pub offline_offset_correction: bool,
    /// Walking speed of training users (m/s).
    pub walk_speed: f64,
    /// Time between scans (s).
    pub scan_interval: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: 0,
            environment: Environment::default(),
            cell_size: 2.0,
            n_training: 700,
            test_points: 684,
            scans_per_test_point: 10,
            strategy: AssignmentStrategy::WeightedConfidence,
            tracker: TrackerConfig::default(),
            oracle: BleOracleParams::default(),
            train_device: DeviceProfile::default(),
            test_device: DeviceProfile::default(),
            sigma_floor: 4.0,
            min_cell_weight: 0.25,
            offline_offset_correction: false,
            walk_speed: 1.2,
            scan_interval: 1.0,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.environment.validate()?;
        self.oracle.validate()?;
        self.tracker.validate()?;
        self.train_device.validate()?;
        self.test_device.validate()?;
        self.builder_config()?.validate()?;
        if self.n_training == 0 {
            return Err(Error::InvalidArgument("n_training must be >= 1".into()));
        }
        if self.test_points == 0 || self.scans_per_test_point == 0 {
            return Err(Error::InvalidArgument("test set must not be empty".into()));
        }
        if !(self.walk_speed > 0.0) || !(self.scan_interval > 0.0) {
            return Err(Error::InvalidArgument("walk speed and scan interval must be positive".into()));
        }
        Ok(())
    }

    /// The environment with its static shadowing drawn for this seed.
    pub fn realized_environment(&self) -> Environment {
        let mut env = self.environment.clone();
        env.static_shadowing.seed = self.seed;
        env
    }

    pub fn grid(&self) -> Result<GridSpec> {
        GridSpec::covering(&self.environment.bounds, self.cell_size)
    }

    pub fn builder_config(&self) -> Result<BuilderConfig> {
        Ok(BuilderConfig {
            strategy: self.strategy,
            grid: self.grid()?,
            sigma_floor: self.sigma_floor,
            min_cell_weight: self.min_cell_weight,
            offline_offset_correction: self.offline_offset_correction,
        })
    }

    pub fn n_test_scans(&self) -> usize {
        self.test_points * self.scans_per_test_point
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Training,
    Test,
}

// Independent ChaCha streams per purpose, all keyed by the experiment seed.
const STREAM_TRAIN_PATH: u64 = 1;
const STREAM_TRAIN_WIFI: u64 = 2;
const STREAM_ORACLE: u64 = 3;
const STREAM_TEST_POINTS: u64 = 4;
const STREAM_TEST_WIFI: u64 = 5;

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// A training scan together with the location it was really taken at.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSample {
    pub true_point: Point,
    pub tagged: TaggedScan,
}

/// A test scan and the evaluation ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct TestSample {
    /// Index of the test location; scans of one location are consecutive.
    pub point_index: usize,
    pub true_point: Point,
    pub scan: WifiScan,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Dataset {
    Training(Vec<TaggedScan>),
    Test(Vec<(Point, WifiScan)>),
}

/// Training walk: one BLE label and one WiFi scan per trajectory sample.
///
/// Path, WiFi noise and oracle noise come from separate streams, so changing
/// the oracle leaves the WiFi readings untouched and a larger `n_training`
/// extends a smaller one.
pub fn simulate_training(config: &ExperimentConfig) -> Result<Vec<TrainingSample>> {
    config.validate()?;
    let env = &config.realized_environment();
    let path = generate_trajectory(
        env,
        &Trajectory::RandomWaypoint {
            speed: config.walk_speed,
            samples: config.n_training,
            interval: config.scan_interval,
        },
        &mut stream(config.seed, STREAM_TRAIN_PATH),
    )?;
    let mut wifi_rng = stream(config.seed, STREAM_TRAIN_WIFI);
    let mut oracle_rng = stream(config.seed, STREAM_ORACLE);
    Ok(path
        .into_iter()
        .map(|tp| {
            let wifi = env.wifi_scan(tp.t, tp.point, &config.train_device, &mut wifi_rng);
            let truth = ble_ground_truth(tp.point, &config.oracle, &env.bounds, &mut oracle_rng);
            TrainingSample {
                true_point: tp.point,
                tagged: TaggedScan { wifi, truth },
            }
        })
        .collect())
}

/// Stationary bursts at test locations drawn from the 1 m lattice.
pub fn simulate_test(config: &ExperimentConfig) -> Result<Vec<TestSample>> {
    config.validate()?;
    let env = &config.realized_environment();
    let mut lattice = generate_trajectory(
        env,
        &Trajectory::GridSweep { spacing: 1.0 },
        &mut stream(config.seed, STREAM_TEST_POINTS),
    )?;
    lattice.shuffle(&mut stream(config.seed, STREAM_TEST_POINTS));
    let mut wifi_rng = stream(config.seed, STREAM_TEST_WIFI);
    let mut out = Vec::with_capacity(config.n_test_scans());
    let mut t = 0.0;
    for (point_index, tp) in lattice.iter().take(config.test_points).enumerate() {
        for _ in 0..config.scans_per_test_point {
            let scan = env.wifi_scan(t, tp.point, &config.test_device, &mut wifi_rng);
            out.push(TestSample {
                point_index,
                true_point: tp.point,
                scan,
            });
            t += config.scan_interval;
        }
    }
    Ok(out)
}

pub fn simulate_dataset(config: &ExperimentConfig, phase: Phase) -> Result<Dataset> {
    Ok(match phase {
        Phase::Training => Dataset::Training(
            simulate_training(config)?
                .into_iter()
                .map(|s| s.tagged)
                .collect(),
        ),
        Phase::Test => Dataset::Test(
            simulate_test(config)?
                .into_iter()
                .map(|s| (s.true_point, s.scan))
                .collect(),
        ),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quiet_env() -> Environment {
        let mut env = Environment::default();
        env.pathloss.shadowing_sigma = 0.0;
        env.static_shadowing.sigma = 0.0;
        env
    }

    #[test]
    fn reference_distance_and_cutoff() {
        let env = quiet_env();
        let tx = Transmitter::new("t", 10.0, 10.0, -20.0).unwrap();
        let dev = DeviceProfile::default();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(env.rss_at(&tx, Point::new(11.0, 10.0), &dev, &mut rng), Some(-60.0));
        assert_eq!(env.mean_rss(&tx, Point::new(20.0, 10.0)), -90.0);
        assert_eq!(env.rss_at(&tx, Point::new(20.0, 10.0), &dev, &mut rng), None);
    }

    #[test]
    fn mean_rss_decreases_with_distance() {
        let env = quiet_env();
        let tx = &env.aps[0];
        let mut prev = f64::INFINITY;
        for i in 1..60 {
            let d = 1.0 + i as f64 * 0.5;
            let v = env.mean_rss(tx, Point::new(tx.position.x, tx.position.y) + Point::new(d * 0.6, d * 0.8));
            assert!(v < prev);
            prev = v;
        }
    }

    #[test]
    fn device_offset_commutes_with_noise() {
        let env = Environment::default();
        let p = Point::new(12.0, 8.0);
        let base = DeviceProfile::default();
        let shifted = DeviceProfile::new("s4", 8.0).unwrap();
        let mut a = ChaCha8Rng::seed_from_u64(3);
        let mut b = ChaCha8Rng::seed_from_u64(3);
        for tx in &env.aps {
            if let (Some(x), Some(y)) = (
                env.rss_at(tx, p, &base, &mut a),
                env.rss_at(tx, p, &shifted, &mut b),
            ) {
                assert!((y - x - 8.0).abs() < 1e-9);
            }
        }
        assert!(DeviceProfile::new("bad", 31.0).is_err());
    }

    #[test]
    fn quantized_device_reports_integers() {
        let env = Environment::default();
        let dev = DeviceProfile {
            quantize: true,
            ..DeviceProfile::default()
        };
        let scan = env.wifi_scan(0.0, Point::new(5.0, 5.0), &dev, &mut ChaCha8Rng::seed_from_u64(9));
        assert!(!scan.is_empty());
        assert!(scan.readings().iter().all(|r| r.rss.fract() == 0.0));
    }

    #[test]
    fn hear_rate_drops_toward_sensitivity() {
        // Monte Carlo hear rate at increasing distance must be non-increasing.
        let mut env = Environment::default();
        env.static_shadowing.sigma = 0.0;
        let tx = Transmitter::new("t", 0.0, 8.0, -20.0).unwrap();
        let dev = DeviceProfile::default();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut rates = Vec::new();
        for d in [2.0, 4.0, 6.0, 8.0, 10.0, 14.0] {
            let heard = (0..4000)
                .filter(|_| env.rss_at(&tx, Point::new(d, 8.0), &dev, &mut rng).is_some())
                .count();
            rates.push(heard as f64 / 4000.0);
        }
        assert!(rates.windows(2).all(|w| w[1] <= w[0] + 0.02), "{rates:?}");
        assert!(rates[0] > 0.99 && *rates.last().unwrap() < 0.1, "{rates:?}");
    }

    #[test]
    fn oracle_examples() {
        let b = Environment::default().bounds;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let exact = BleOracleParams {
            loc_noise_sigma: 0.0,
            confidence_factor: 2.0,
            min_confidence: 0.7,
        };
        let g = ble_ground_truth(Point::new(3.0, 4.0), &exact, &b, &mut rng);
        assert_eq!(g.location, Point::new(3.0, 4.0));
        assert_eq!(g.confidence_radius, 0.7);
        let unit = BleOracleParams {
            loc_noise_sigma: 1.0,
            confidence_factor: 2.0,
            min_confidence: 0.0,
        };
        assert_eq!(ble_ground_truth(Point::new(18.0, 8.0), &unit, &b, &mut rng).confidence_radius, 2.0);
    }

    #[test]
    fn oracle_containment_matches_rayleigh_law() {
        // P(|err| <= 2σ) for an isotropic 2D Gaussian is 1 - e^{-2}.
        let b = Rect::new(Point::new(-1e6, -1e6), Point::new(1e6, 1e6)).unwrap();
        let params = BleOracleParams {
            loc_noise_sigma: 1.0,
            confidence_factor: 2.0,
            min_confidence: 0.0,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let n = 10_000;
        let inside = (0..n)
            .filter(|_| {
                let g = ble_ground_truth(Point::new(0.0, 0.0), &params, &b, &mut rng);
                g.location.distance(&Point::new(0.0, 0.0)) <= g.confidence_radius
            })
            .count();
        let frac = inside as f64 / n as f64;
        let expected = 1.0 - (-2.0f64).exp();
        assert!((frac - expected).abs() < 0.015, "{frac}");
    }

    #[test]
    fn trajectories() {
        let env = Environment::default();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let st = generate_trajectory(
            &env,
            &Trajectory::Stationary {
                at: Point::new(5.0, 5.0),
                samples: 10,
                interval: 1.0,
            },
            &mut rng,
        )
        .unwrap();
        assert_eq!(st.len(), 10);
        assert!(st.iter().all(|p| p.point == Point::new(5.0, 5.0)));

        let mut small = env.clone();
        small.bounds = Rect::new(Point::new(0.0, 0.0), Point::new(3.0, 3.0)).unwrap();
        let sweep = generate_trajectory(&small, &Trajectory::GridSweep { spacing: 1.0 }, &mut rng).unwrap();
        assert_eq!(sweep.len(), 16);

        let rw = Trajectory::RandomWaypoint {
            speed: 1.2,
            samples: 200,
            interval: 1.0,
        };
        let a = generate_trajectory(&env, &rw, &mut ChaCha8Rng::seed_from_u64(7)).unwrap();
        let b = generate_trajectory(&env, &rw, &mut ChaCha8Rng::seed_from_u64(7)).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().all(|p| env.bounds.contains(&p.point)));
        assert!(a.windows(2).all(|w| w[0].point.distance(&w[1].point) <= 1.2 + 1e-9));
        assert!(generate_trajectory(
            &env,
            &Trajectory::RandomWaypoint {
                speed: 0.0,
                samples: 3,
                interval: 1.0
            },
            &mut rng
        )
        .is_err());
    }

    #[test]
    fn datasets_are_sized_and_reproducible() {
        let cfg = ExperimentConfig {
            n_training: 100,
            test_points: 5,
            scans_per_test_point: 3,
            seed: 17,
            ..ExperimentConfig::default()
        };
        let a = simulate_dataset(&cfg, Phase::Training).unwrap();
        let Dataset::Training(scans) = &a else { panic!() };
        assert_eq!(scans.len(), 100);
        assert_eq!(a, simulate_dataset(&cfg, Phase::Training).unwrap());
        let Dataset::Test(test) = simulate_dataset(&cfg, Phase::Test).unwrap() else { panic!() };
        assert_eq!(test.len(), 15);
    }

    #[test]
    fn test_device_offset_is_injected_uniformly() {
        let mut cfg = ExperimentConfig {
            n_training: 10,
            test_points: 20,
            scans_per_test_point: 2,
            seed: 4,
            ..ExperimentConfig::default()
        };
        cfg.environment.pathloss.shadowing_sigma = 0.0;
        let base = simulate_test(&cfg).unwrap();
        cfg.test_device.rss_offset = 8.0;
        let shifted = simulate_test(&cfg).unwrap();
        for (a, b) in base.iter().zip(&shifted) {
            for r in a.scan.readings() {
                let env = cfg.realized_environment();
                let tx = env.aps.iter().find(|t| t.id == r.id).unwrap();
                let expected = env.expected_rss(tx, a.true_point);
                assert!((r.rss - expected).abs() < 1e-9);
                let s = b.scan.readings().iter().find(|x| x.id == r.id).unwrap();
                assert!((s.rss - expected - 8.0).abs() < 1e-9);
            }
        }
    }
}
