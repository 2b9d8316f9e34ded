//! Plain-text `key = value` configuration for environments and experiments.
//!
//! Blank lines and `#` comments are ignored. Scalar keys may appear once;
//! `ap = <id> <x> <y> <tx_power>` and `beacon = ...` may repeat, and the first
//! such line replaces the default transmitter list of its kind.
//!
//! Recognized scalar keys:
//!
//! | key | meaning |
//! |-----|---------|
//! | `seed` | base seed |
//! | `cell_size` | grid spacing (m) |
//! | `n_training` | training scans |
//! | `test_points`, `scans_per_test_point` | test set shape |
//! | `strategy` | `location_only`, `unweighted_confidence`, `weighted_confidence` |
//! | `window_k`, `offset_correction`, `global_offset`, `representative_mode`, `spatial_com` | tracker |
//! | `loc_noise_sigma`, `confidence_factor`, `min_confidence` | BLE oracle |
//! | `train_offset`, `test_offset`, `train_quantize`, `test_quantize` | devices |
//! | `sigma_floor`, `min_cell_weight`, `offline_offset_correction` | builder |
//! | `walk_speed`, `scan_interval` | training walk |
//! | `area_width`, `area_height` | floor size (m), anchored at the origin |
//! | `pl0`, `d0`, `pathloss_exponent`, `shadowing_sigma`, `sensitivity` | channel |
//! | `static_shadowing_sigma`, `static_shadowing_length` | frozen spatial shadowing (dB, m) |

use std::collections::HashSet;
use std::fmt::Write as _;
use std::str::FromStr;

use thiserror::Error;

use super::{ExperimentConfig, Transmitter};
use crate::error::Error;
use crate::model::{Point, Rect};

#[derive(Debug, Error, PartialEq)]
#[error("config line {line}: {message}")]
pub struct ConfigError {
    pub line: usize,
    pub message: String,
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, Error> {
    value
        .parse()
        .map_err(|_| Error::InvalidArgument(format!("bad value {value:?} for {key}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool, Error> {
    match value {
        "on" | "true" | "yes" | "1" => Ok(true),
        "off" | "false" | "no" | "0" => Ok(false),
        _ => Err(Error::InvalidArgument(format!("bad boolean {value:?} for {key}"))),
    }
}

fn parse_transmitter(value: &str) -> Result<Transmitter, Error> {
    let tok: Vec<&str> = value.split_whitespace().collect();
    let [id, x, y, tx] = tok.as_slice() else {
        return Err(Error::InvalidArgument(format!(
            "transmitter needs `<id> <x> <y> <tx_power>`, got {value:?}"
        )));
    };
    Transmitter::new(id, parse("x", x)?, parse("y", y)?, parse("tx_power", tx)?)
}

impl ExperimentConfig {
    /// Applies one scalar `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), Error> {
        let v = value.trim();
        match key {
            "seed" => self.seed = parse(key, v)?,
            "cell_size" => self.cell_size = parse(key, v)?,
            "n_training" => self.n_training = parse(key, v)?,
            "test_points" => self.test_points = parse(key, v)?,
            "scans_per_test_point" => self.scans_per_test_point = parse(key, v)?,
            "strategy" => self.strategy = v.parse()?,
            "window_k" => self.tracker.window_k = parse(key, v)?,
            "offset_correction" => self.tracker.offset_correction = parse_bool(key, v)?,
            "global_offset" => self.tracker.global_offset = parse_bool(key, v)?,
            "representative_mode" => self.tracker.representative_mode = v.parse()?,
            "spatial_com" => self.tracker.spatial_com = parse_bool(key, v)?,
            "loc_noise_sigma" => self.oracle.loc_noise_sigma = parse(key, v)?,
            "confidence_factor" => self.oracle.confidence_factor = parse(key, v)?,
            "min_confidence" => self.oracle.min_confidence = parse(key, v)?,
            "train_offset" => self.train_device.rss_offset = parse(key, v)?,
            "test_offset" => self.test_device.rss_offset = parse(key, v)?,
            "train_quantize" => self.train_device.quantize = parse_bool(key, v)?,
            "test_quantize" => self.test_device.quantize = parse_bool(key, v)?,
            "sigma_floor" => self.sigma_floor = parse(key, v)?,
            "min_cell_weight" => self.min_cell_weight = parse(key, v)?,
            "offline_offset_correction" => self.offline_offset_correction = parse_bool(key, v)?,
            "walk_speed" => self.walk_speed = parse(key, v)?,
            "scan_interval" => self.scan_interval = parse(key, v)?,
            "area_width" | "area_height" => {
                let x: f64 = parse(key, v)?;
                let b = self.environment.bounds;
                let max = if key == "area_width" {
                    Point::new(b.min.x + x, b.max.y)
                } else {
                    Point::new(b.max.x, b.min.y + x)
                };
                self.environment.bounds = Rect::new(b.min, max)?;
            }
            "pl0" => self.environment.pathloss.pl0 = parse(key, v)?,
            "d0" => self.environment.pathloss.d0 = parse(key, v)?,
            "pathloss_exponent" => self.environment.pathloss.exponent = parse(key, v)?,
            "shadowing_sigma" => self.environment.pathloss.shadowing_sigma = parse(key, v)?,
            "sensitivity" => self.environment.sensitivity = parse(key, v)?,
            "static_shadowing_sigma" => self.environment.static_shadowing.sigma = parse(key, v)?,
            "static_shadowing_length" => {
                self.environment.static_shadowing.correlation_length = parse(key, v)?
            }
            other => return Err(Error::InvalidArgument(format!("unknown key {other:?}"))),
        }
        Ok(())
    }

    /// Full configuration in the text format read by [`parse_config`].
    pub fn to_config_string(&self) -> String {
        let mut s = String::new();
        let b = &self.environment.bounds;
        let pl = &self.environment.pathloss;
        let scalars: Vec<(&str, String)> = vec![
            ("seed", self.seed.to_string()),
            ("cell_size", self.cell_size.to_string()),
            ("n_training", self.n_training.to_string()),
            ("test_points", self.test_points.to_string()),
            ("scans_per_test_point", self.scans_per_test_point.to_string()),
            ("strategy", self.strategy.name().to_string()),
            ("window_k", self.tracker.window_k.to_string()),
            ("offset_correction", self.tracker.offset_correction.to_string()),
            ("global_offset", self.tracker.global_offset.to_string()),
            ("representative_mode", self.tracker.representative_mode.name().to_string()),
            ("spatial_com", self.tracker.spatial_com.to_string()),
            ("loc_noise_sigma", self.oracle.loc_noise_sigma.to_string()),
            ("confidence_factor", self.oracle.confidence_factor.to_string()),
            ("min_confidence", self.oracle.min_confidence.to_string()),
            ("train_offset", self.train_device.rss_offset.to_string()),
            ("test_offset", self.test_device.rss_offset.to_string()),
            ("train_quantize", self.train_device.quantize.to_string()),
            ("test_quantize", self.test_device.quantize.to_string()),
            ("sigma_floor", self.sigma_floor.to_string()),
            ("min_cell_weight", self.min_cell_weight.to_string()),
            ("offline_offset_correction", self.offline_offset_correction.to_string()),
            ("walk_speed", self.walk_speed.to_string()),
            ("scan_interval", self.scan_interval.to_string()),
            ("area_width", b.width().to_string()),
            ("area_height", b.height().to_string()),
            ("pl0", pl.pl0.to_string()),
            ("d0", pl.d0.to_string()),
            ("pathloss_exponent", pl.exponent.to_string()),
            ("shadowing_sigma", pl.shadowing_sigma.to_string()),
            ("sensitivity", self.environment.sensitivity.to_string()),
            ("static_shadowing_sigma", self.environment.static_shadowing.sigma.to_string()),
            (
                "static_shadowing_length",
                self.environment.static_shadowing.correlation_length.to_string(),
            ),
        ];
        for (k, v) in scalars {
            let _ = writeln!(s, "{k} = {v}");
        }
        for (key, list) in [("ap", &self.environment.aps), ("beacon", &self.environment.beacons)] {
            for t in list {
                let _ = writeln!(
                    s,
                    "{key} = {} {} {} {}",
                    t.id, t.position.x, t.position.y, t.tx_power
                );
            }
        }
        s
    }
}

/// Parses a configuration text on top of `base`.
pub fn parse_config(text: &str, base: ExperimentConfig) -> Result<ExperimentConfig, ConfigError> {
    let mut cfg = base;
    let mut seen = HashSet::new();
    let mut aps_replaced = false;
    let mut beacons_replaced = false;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let err = |message: String| ConfigError { line, message };
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| err(format!("expected `key = value`, got {content:?}")))?;
        let (key, value) = (key.trim(), value.trim());
        match key {
            "ap" | "beacon" => {
                let t = parse_transmitter(value).map_err(|e| err(e.to_string()))?;
                let (list, replaced) = if key == "ap" {
                    (&mut cfg.environment.aps, &mut aps_replaced)
                } else {
                    (&mut cfg.environment.beacons, &mut beacons_replaced)
                };
                if !*replaced {
                    list.clear();
                    *replaced = true;
                }
                list.push(t);
            }
            _ => {
                if !seen.insert(key.to_string()) {
                    return Err(err(format!("duplicate key {key:?}")));
                }
                cfg.set(key, value).map_err(|e| err(e.to_string()))?;
            }
        }
    }
    cfg.environment.validate().map_err(|e| ConfigError {
        line: 0,
        message: e.to_string(),
    })?;
    Ok(cfg)
}
