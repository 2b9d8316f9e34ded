//! Experiment runner: simulate, build, track, score.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimator::{Estimator, TrackState};
use crate::fingerprint::{build_fingerprint, AssignmentStrategy, BuilderConfig};
use crate::model::{FingerprintDb, GroundTruthEstimate, TaggedScan, TrackerConfig};
use crate::sim::{simulate_test, simulate_training, ExperimentConfig, TestSample, TrainingSample};

/// Header shared by every report CSV.
pub const REPORT_CSV_HEADER: &str = "param_value,p25,p50,p75,p90,mean,count";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Percentiles {
    pub p25: f64,
    pub p50: f64,
    pub p75: f64,
    pub p90: f64,
}

/// `ceil(p/100 * N)`-th order statistic of an ascending slice.
fn nearest_rank(sorted: &[f64], percent: usize) -> f64 {
    let n = sorted.len();
    let rank = (percent * n).div_ceil(100).clamp(1, n);
    sorted[rank - 1]
}

/// Nearest-rank quartiles and 90th percentile.
pub fn error_percentiles(errors: &[f64]) -> Result<Percentiles> {
    if errors.is_empty() {
        return Err(Error::InvalidArgument("no errors to summarize".into()));
    }
    let mut sorted = errors.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(Percentiles {
        p25: nearest_rank(&sorted, 25),
        p50: nearest_rank(&sorted, 50),
        p75: nearest_rank(&sorted, 75),
        p90: nearest_rank(&sorted, 90),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    /// Per-scan Euclidean errors in evaluation order (m).
    pub errors: Vec<f64>,
    pub percentiles: Percentiles,
    pub mean: f64,
    pub count: usize,
}

impl ErrorReport {
    pub fn from_errors(errors: Vec<f64>) -> Result<Self> {
        let percentiles = error_percentiles(&errors)?;
        let mean = errors.iter().sum::<f64>() / errors.len() as f64;
        Ok(ErrorReport {
            count: errors.len(),
            errors,
            percentiles,
            mean,
        })
    }

    pub fn median(&self) -> f64 {
        self.percentiles.p50
    }

    pub fn csv_row(&self, label: &str) -> String {
        let p = &self.percentiles;
        format!(
            "{label},{:.6},{:.6},{:.6},{:.6},{:.6},{}",
            p.p25, p.p50, p.p75, p.p90, self.mean, self.count
        )
    }
}

/// Simulated training and test data for one configuration.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub training: Vec<TrainingSample>,
    pub test: Vec<TestSample>,
}

impl Experiment {
    pub fn simulate(config: &ExperimentConfig) -> Result<Self> {
        Ok(Experiment {
            config: config.clone(),
            training: simulate_training(config)?,
            test: simulate_test(config)?,
        })
    }

    fn builder(&self, strategy: AssignmentStrategy) -> Result<BuilderConfig> {
        Ok(BuilderConfig {
            strategy,
            ..self.config.builder_config()?
        })
    }

    /// Fingerprint from the BLE-labeled training scans.
    pub fn build_db(&self, strategy: AssignmentStrategy) -> Result<FingerprintDb> {
        let cfg = self.builder(strategy)?;
        build_fingerprint(self.training.iter().map(|s| &s.tagged), &cfg)
    }

    /// Site-survey fingerprint: the same scans labeled with their exact
    /// positions and assigned location-only.
    pub fn manual_baseline(&self) -> Result<FingerprintDb> {
        let cfg = self.builder(AssignmentStrategy::LocationOnly)?;
        let exact: Vec<TaggedScan> = self
            .training
            .iter()
            .map(|s| TaggedScan {
                wifi: s.tagged.wifi.clone(),
                truth: GroundTruthEstimate {
                    location: s.true_point,
                    confidence_radius: 0.0,
                },
            })
            .collect();
        build_fingerprint(&exact, &cfg)
    }

    /// Tracks every test burst from a fresh window and scores each emitted estimate.
    pub fn evaluate(&self, db: &FingerprintDb, tracker: &TrackerConfig) -> Result<ErrorReport> {
        let estimator = Estimator::new(db, *tracker)?;
        let mut state = TrackState::new(tracker.window_k)?;
        let mut current = None;
        let mut errors = Vec::with_capacity(self.test.len());
        for sample in &self.test {
            if current != Some(sample.point_index) {
                state.clear();
                current = Some(sample.point_index);
            }
            if let Some(p) = estimator.track_with(&mut state, [&sample.scan])?[0] {
                errors.push(p.distance(&sample.true_point));
            }
        }
        ErrorReport::from_errors(errors)
    }

    pub fn run(&self) -> Result<ErrorReport> {
        let db = self.build_db(self.config.strategy)?;
        self.evaluate(&db, &self.config.tracker)
    }
}

/// Simulate, build, track and score one configuration.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ErrorReport> {
    Experiment::simulate(config)?.run()
}

pub fn build_manual_baseline(config: &ExperimentConfig) -> Result<FingerprintDb> {
    Experiment::simulate(config)?.manual_baseline()
}

/// Manual-survey baseline next to each crowdsourced assignment strategy.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselineComparison {
    pub manual: ErrorReport,
    pub variants: Vec<(AssignmentStrategy, ErrorReport)>,
}

impl BaselineComparison {
    pub fn variant(&self, strategy: AssignmentStrategy) -> &ErrorReport {
        &self
            .variants
            .iter()
            .find(|(s, _)| *s == strategy)
            .expect("all strategies are evaluated")
            .1
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(REPORT_CSV_HEADER);
        out.push('\n');
        out.push_str(&self.manual.csv_row("manual"));
        out.push('\n');
        for (s, r) in &self.variants {
            out.push_str(&r.csv_row(s.name()));
            out.push('\n');
        }
        out
    }
}

pub fn compare_baseline(config: &ExperimentConfig) -> Result<BaselineComparison> {
    let exp = Experiment::simulate(config)?;
    let tracker = &config.tracker;
    let manual = exp.evaluate(&exp.manual_baseline()?, tracker)?;
    let variants = AssignmentStrategy::ALL
        .iter()
        .map(|s| Ok((*s, exp.evaluate(&exp.build_db(*s)?, tracker)?)))
        .collect::<Result<_>>()?;
    Ok(BaselineComparison { manual, variants })
}

/// Parameters a sweep can vary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    CellSize,
    NTraining,
    WindowK,
    Strategy,
    LocNoiseSigma,
    DeviceOffset,
    RepresentativeMode,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::CellSize => "cell_size",
            SweepParam::NTraining => "n_training",
            SweepParam::WindowK => "window_k",
            SweepParam::Strategy => "strategy",
            SweepParam::LocNoiseSigma => "loc_noise_sigma",
            SweepParam::DeviceOffset => "device_offset",
            SweepParam::RepresentativeMode => "representative_mode",
        }
    }

    /// Sets the parameter on `config`.
    pub fn apply(self, config: &mut ExperimentConfig, value: &str) -> Result<()> {
        let key = match self {
            SweepParam::DeviceOffset => "test_offset",
            other => other.name(),
        };
        config.set(key, value)
    }
}

impl std::str::FromStr for SweepParam {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "cell_size" => SweepParam::CellSize,
            "n_training" => SweepParam::NTraining,
            "window_k" => SweepParam::WindowK,
            "strategy" => SweepParam::Strategy,
            "loc_noise_sigma" => SweepParam::LocNoiseSigma,
            "device_offset" => SweepParam::DeviceOffset,
            "representative_mode" => SweepParam::RepresentativeMode,
            other => {
                return Err(Error::InvalidArgument(format!(
                    "unknown sweep parameter {other:?}"
                )))
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub parameter: SweepParam,
    pub values: Vec<String>,
    pub reports: Vec<ErrorReport>,
}

impl Sweep {
    pub fn medians(&self) -> Vec<f64> {
        self.reports.iter().map(ErrorReport::median).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(REPORT_CSV_HEADER);
        out.push('\n');
        for (v, r) in self.values.iter().zip(&self.reports) {
            out.push_str(&r.csv_row(v));
            out.push('\n');
        }
        out
    }
}

/// One experiment per value and repetition. Repetition `i` runs with seed
/// `base.seed + i` for every value, so values differ only in the swept
/// parameter; errors of all repetitions are pooled per value.
pub fn run_sweep(
    base: &ExperimentConfig,
    parameter: SweepParam,
    values: &[String],
    repetitions: usize,
) -> Result<Sweep> {
    if values.is_empty() || repetitions == 0 {
        return Err(Error::InvalidArgument(
            "a sweep needs at least one value and one repetition".into(),
        ));
    }
    let mut configs = Vec::with_capacity(values.len() * repetitions);
    for v in values {
        for rep in 0..repetitions {
            let mut cfg = base.clone();
            parameter.apply(&mut cfg, v)?;
            cfg.seed = base.seed.wrapping_add(rep as u64);
            cfg.validate()?;
            configs.push(cfg);
        }
    }
    let results: Vec<Result<ErrorReport>> = configs.par_iter().map(run_experiment).collect();
    let mut reports = Vec::with_capacity(values.len());
    let mut results = results.into_iter();
    for _ in values {
        let mut pooled = Vec::new();
        for r in results.by_ref().take(repetitions) {
            pooled.extend(r?.errors);
        }
        reports.push(ErrorReport::from_errors(pooled)?);
    }
    Ok(Sweep {
        parameter,
        values: values.to_vec(),
        reports,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nearest_rank_examples() {
        let p = error_percentiles(&[4.0, 2.0, 3.0, 1.0]).unwrap();
        assert_eq!(p.p50, 2.0);
        let p = error_percentiles(&[5.0]).unwrap();
        assert_eq!((p.p25, p.p50, p.p75, p.p90), (5.0, 5.0, 5.0, 5.0));
        let v: Vec<f64> = (1..=100).map(f64::from).collect();
        assert_eq!(error_percentiles(&v).unwrap().p90, 90.0);
        assert!(matches!(error_percentiles(&[]), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn unknown_sweep_parameter() {
        assert!("grid".parse::<SweepParam>().is_err());
        assert_eq!("n_training".parse::<SweepParam>().unwrap(), SweepParam::NTraining);
    }

    proptest::proptest! {
        #[test]
        fn percentiles_are_ordered(errors in proptest::collection::vec(0.0f64..100.0, 1..200)) {
            let r = ErrorReport::from_errors(errors.clone()).unwrap();
            let p = r.percentiles;
            proptest::prop_assert!(p.p25 <= p.p50 && p.p50 <= p.p75 && p.p75 <= p.p90);
            proptest::prop_assert_eq!(r.count, errors.len());
        }
    }
}
