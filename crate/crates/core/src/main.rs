use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use hybridloc::harness::{compare_baseline, run_experiment, run_sweep, SweepParam};
use hybridloc::sim::{
    join_labels, parse_config, read_labels_csv, read_scans_csv, simulate_test, simulate_training,
    write_labels_csv, write_scans_csv, ConfigError, ExperimentConfig, LabelRow,
};
use hybridloc::{
    build_fingerprint, load_db, save_db, Error, Estimator, GroundTruthEstimate, LoadError, Point,
    TaggedScan, WifiScan,
};

#[derive(Parser)]
#[command(name = "hybridloc", version, about = "Crowdsourced WiFi fingerprinting toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct ConfigArgs {
    /// Configuration file of `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a configuration key; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[arg(long)]
    strategy: Option<String>,
    #[arg(long)]
    cell_size: Option<f64>,
    #[arg(long)]
    n_training: Option<usize>,
    #[arg(long)]
    window_k: Option<usize>,
    #[arg(long)]
    loc_noise_sigma: Option<f64>,
    #[arg(long)]
    test_offset: Option<f64>,
    #[arg(long)]
    offset_correction: Option<bool>,
}

#[derive(Clone, Copy, ValueEnum)]
enum PhaseArg {
    Training,
    Test,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a training or test dataset as CSV.
    Simulate {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum, default_value = "training")]
        phase: PhaseArg,
        /// Scan readings (`timestamp,ap_id,rss`).
        #[arg(long)]
        scans: PathBuf,
        /// Labels (`timestamp,x,y,confidence`); true points for the test phase.
        #[arg(long)]
        labels: PathBuf,
    },
    /// Build a fingerprint database from labeled scans.
    Build {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        scans: PathBuf,
        #[arg(long)]
        labels: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Track a scan stream against a fingerprint database.
    Track {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        db: PathBuf,
        #[arg(long)]
        scans: PathBuf,
        /// Optional true locations; adds an error column.
        #[arg(long)]
        labels: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulate, build, track and report error percentiles.
    Experiment {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one experiment per parameter value.
    Sweep {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        param: String,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
        #[arg(long, default_value_t = 1)]
        repetitions: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Manual-survey baseline against every assignment strategy.
    CompareBaseline {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Core(#[from] Error),
    #[error(transparent)]
    Load(#[from] LoadError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
}

impl CliError {
    fn kind(&self) -> &'static str {
        match self {
            CliError::Core(e) => e.kind(),
            CliError::Load(e) => e.kind(),
            CliError::Config(_) => "InvalidConfig",
            CliError::Io { .. } => "Io",
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path).map(BufReader::new).map_err(io_err(path))
}

fn write_output(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(p) => fs::write(p, text).map_err(io_err(p)),
        None => io::stdout()
            .write_all(text.as_bytes())
            .map_err(io_err(Path::new("<stdout>"))),
    }
}

impl ConfigArgs {
    fn load(&self, seed: Option<u64>) -> Result<ExperimentConfig, CliError> {
        let mut cfg = match &self.config {
            Some(p) => {
                let text = fs::read_to_string(p).map_err(io_err(p))?;
                parse_config(&text, ExperimentConfig::default())?
            }
            None => ExperimentConfig::default(),
        };
        let named = [
            ("strategy", self.strategy.clone()),
            ("cell_size", self.cell_size.map(|v| v.to_string())),
            ("n_training", self.n_training.map(|v| v.to_string())),
            ("window_k", self.window_k.map(|v| v.to_string())),
            ("loc_noise_sigma", self.loc_noise_sigma.map(|v| v.to_string())),
            ("test_offset", self.test_offset.map(|v| v.to_string())),
            ("offset_correction", self.offset_correction.map(|v| v.to_string())),
            ("seed", seed.map(|v| v.to_string())),
        ];
        for (k, v) in named {
            if let Some(v) = v {
                cfg.set(k, &v)?;
            }
        }
        for o in &self.overrides {
            let (k, v) = o
                .split_once('=')
                .ok_or_else(|| Error::InvalidArgument(format!("--set expects KEY=VALUE, got {o:?}")))?;
            cfg.set(k.trim(), v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn read_labeled(scans: &Path, labels: &Path) -> Result<Vec<(LabelRow, WifiScan)>, CliError> {
    let s = read_scans_csv(open(scans)?)?;
    let l = read_labels_csv(open(labels)?)?;
    Ok(join_labels(&l, s)?)
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate {
            cfg,
            seed,
            phase,
            scans,
            labels,
        } => {
            let cfg = cfg.load(seed)?;
            let (rows, wifi): (Vec<LabelRow>, Vec<WifiScan>) = match phase {
                PhaseArg::Training => simulate_training(&cfg)?
                    .into_iter()
                    .map(|s| {
                        let t = &s.tagged.truth;
                        let row = LabelRow {
                            timestamp: s.tagged.wifi.timestamp(),
                            x: t.location.x,
                            y: t.location.y,
                            confidence: t.confidence_radius,
                        };
                        (row, s.tagged.wifi)
                    })
                    .unzip(),
                PhaseArg::Test => simulate_test(&cfg)?
                    .into_iter()
                    .map(|s| {
                        let row = LabelRow {
                            timestamp: s.scan.timestamp(),
                            x: s.true_point.x,
                            y: s.true_point.y,
                            confidence: 0.0,
                        };
                        (row, s.scan)
                    })
                    .unzip(),
            };
            write_scans_csv(BufWriter::new(File::create(&scans).map_err(io_err(&scans))?), &wifi)?;
            write_labels_csv(BufWriter::new(File::create(&labels).map_err(io_err(&labels))?), &rows)?;
        }
        Command::Build {
            cfg,
            scans,
            labels,
            out,
        } => {
            let cfg = cfg.load(None)?;
            let tagged = read_labeled(&scans, &labels)?
                .into_iter()
                .map(|(l, wifi)| {
                    Ok(TaggedScan {
                        wifi,
                        truth: GroundTruthEstimate::new(Point::new(l.x, l.y), l.confidence)?,
                    })
                })
                .collect::<Result<Vec<_>, Error>>()?;
            let db = build_fingerprint(&tagged, &cfg.builder_config()?)?;
            let mut w = BufWriter::new(File::create(&out).map_err(io_err(&out))?);
            save_db(&db, &mut w)
                .and_then(|_| w.flush())
                .map_err(io_err(&out))?;
        }
        Command::Track {
            cfg,
            db,
            scans,
            labels,
            out,
        } => {
            let cfg = cfg.load(None)?;
            let fp = load_db(open(&db)?)?;
            let estimator = Estimator::new(&fp, cfg.tracker)?;
            let stream: Vec<(Option<Point>, WifiScan)> = match &labels {
                Some(l) => read_labeled(&scans, l)?
                    .into_iter()
                    .map(|(l, s)| (Some(Point::new(l.x, l.y)), s))
                    .collect(),
                None => {
                    let mut v: Vec<WifiScan> = read_scans_csv(open(&scans)?)?.into_values().collect();
                    v.sort_by(|a, b| a.timestamp().total_cmp(&b.timestamp()));
                    v.into_iter().map(|s| (None, s)).collect()
                }
            };
            let estimates = estimator.track(stream.iter().map(|(_, s)| s))?;
            let mut text = String::from("timestamp,x,y,error\n");
            for ((truth, scan), est) in stream.iter().zip(estimates) {
                let _ = match (est, truth) {
                    (Some(p), Some(t)) => writeln!(
                        text,
                        "{},{:.6},{:.6},{:.6}",
                        scan.timestamp(),
                        p.x,
                        p.y,
                        p.distance(t)
                    ),
                    (Some(p), None) => writeln!(text, "{},{:.6},{:.6},", scan.timestamp(), p.x, p.y),
                    (None, _) => writeln!(text, "{},,,", scan.timestamp()),
                };
            }
            write_output(out.as_deref(), &text)?;
        }
        Command::Experiment { cfg, seed, out } => {
            let cfg = cfg.load(Some(seed))?;
            let report = run_experiment(&cfg)?;
            let text = format!(
                "{}\n{}\n",
                hybridloc::harness::REPORT_CSV_HEADER,
                report.csv_row(cfg.strategy.name())
            );
            write_output(out.as_deref(), &text)?;
        }
        Command::Sweep {
            cfg,
            seed,
            param,
            values,
            repetitions,
            out,
        } => {
            let cfg = cfg.load(Some(seed))?;
            let param: SweepParam = param.parse()?;
            let sweep = run_sweep(&cfg, param, &values, repetitions)?;
            write_output(out.as_deref(), &sweep.to_csv())?;
        }
        Command::CompareBaseline { cfg, seed, out } => {
            let cfg = cfg.load(Some(seed))?;
            write_output(out.as_deref(), &compare_baseline(&cfg)?.to_csv())?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = e.to_string().replace('\\', "\\\\").replace('"', "\\\"");
            eprintln!("error kind={} message=\"{msg}\"", e.kind());
            ExitCode::FAILURE
        }
    }
}
