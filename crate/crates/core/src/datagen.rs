//! Synthetic smart-meter data with known ground truth.
//!
//! Feel-like temperature is an annual plus a daily sinusoid plus AR(1) noise.
//! Hourly load is
//!
//! ```text
//! load_i = max(0, base + amp·profile[hour] + k·max(0, T_ref − θ_{i−lag}) + noise)
//! ```
//!
//! where `load_i` is the energy used between grid instants `i − 1` and `i`.
//! The meter counter is the running sum of load, starting at zero. Raw series
//! are derived from the hourly grid by timestamp jitter and random dropout;
//! the first and last readings are always kept exactly on the grid.

use chrono::{DateTime, Datelike, Timelike, Utc};
use serde::{Deserialize, Serialize};

use crate::rng::XorShift64Star;
use crate::series::{RawSeries, RegularSeries, Timestamp, Unit, HOUR};
use crate::{Error, Result};

/// 2021-01-01T00:00:00Z.
pub const DEFAULT_START: Timestamp = 1_609_459_200;

const TEMP_NOISE_PERSISTENCE: f64 = 0.8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenConfig {
    pub days: usize,
    /// kWh/h.
    pub base_load: f64,
    /// Scale of the daily profile, kWh/h.
    pub seasonal_amplitude: f64,
    /// Shape of the daily profile, one value per hour of day, summing to 0.
    pub daily_profile: Vec<f64>,
    /// kWh/h per °C below the reference temperature.
    pub temp_coupling: f64,
    pub temp_reference: f64,
    pub annual_temp_mean: f64,
    pub annual_temp_amplitude: f64,
    pub daily_temp_amplitude: f64,
    /// Stationary standard deviation of the AR(1) temperature noise, °C.
    pub temp_noise_stddev: f64,
    /// kWh/h.
    pub noise_stddev: f64,
    /// Steps between a temperature and the load it drives.
    pub coupling_lag: usize,
    /// Seconds.
    pub jitter_stddev: f64,
    pub dropout_prob: f64,
    pub rng_seed: u64,
    /// First grid instant, seconds since the epoch (UTC, on the hour).
    pub start: Timestamp,
}

/// Morning and evening peaks, centred and scaled to a maximum of 1.
pub fn default_daily_profile() -> Vec<f64> {
    let raw: Vec<f64> = (0..24)
        .map(|h| {
            let h = h as f64;
            0.6 * (-(h - 7.0).powi(2) / 4.0).exp() + 0.8 * (-(h - 19.0).powi(2) / 6.0).exp()
        })
        .collect();
    let mean = raw.iter().sum::<f64>() / 24.0;
    let centred: Vec<f64> = raw.iter().map(|v| v - mean).collect();
    let peak = centred.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    centred.iter().map(|v| v / peak).collect()
}

impl Default for GenConfig {
    fn default() -> Self {
        Self {
            days: 32,
            base_load: 0.6,
            seasonal_amplitude: 0.15,
            daily_profile: default_daily_profile(),
            temp_coupling: 0.12,
            temp_reference: 17.0,
            annual_temp_mean: 8.0,
            annual_temp_amplitude: 8.0,
            daily_temp_amplitude: 3.0,
            temp_noise_stddev: 1.5,
            noise_stddev: 0.03,
            coupling_lag: 1,
            jitter_stddev: 60.0,
            dropout_prob: 0.02,
            rng_seed: 7,
            start: DEFAULT_START,
        }
    }
}

impl GenConfig {
    /// One 16-day window with every random term switched off and a flat
    /// daily profile: load depends only on the lag-1 temperature.
    pub fn noiseless() -> Self {
        Self {
            days: 16,
            seasonal_amplitude: 0.0,
            temp_noise_stddev: 0.0,
            noise_stddev: 0.0,
            jitter_stddev: 0.0,
            dropout_prob: 0.0,
            ..Self::default()
        }
    }

    /// A full calendar year with load noise at 5% of the base load.
    pub fn year() -> Self {
        let base = Self::default();
        Self {
            days: 365,
            noise_stddev: 0.05 * base.base_load,
            jitter_stddev: 120.0,
            ..base
        }
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "default" => Some(Self::default()),
            "noiseless" => Some(Self::noiseless()),
            "year" => Some(Self::year()),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.days == 0 {
            return bad("days must be >= 1");
        }
        if !(self.base_load > 0.0) {
            return bad("base_load must be > 0");
        }
        if !(self.noise_stddev >= 0.0) || !(self.temp_noise_stddev >= 0.0) {
            return bad("noise standard deviations must be >= 0");
        }
        if !(self.jitter_stddev >= 0.0) {
            return bad("jitter_stddev must be >= 0");
        }
        if !(0.0..1.0).contains(&self.dropout_prob) {
            return bad("dropout_prob must lie in [0, 1)");
        }
        if self.daily_profile.len() != 24 {
            return bad("daily_profile needs 24 values");
        }
        let sum: f64 = self.daily_profile.iter().sum();
        let scale: f64 = self.daily_profile.iter().map(|v| v.abs()).sum();
        if sum.abs() > 1e-9 * (1.0 + scale) {
            return bad("daily_profile must sum to 0");
        }
        if self.start % HOUR != 0 {
            return bad("start must fall on the hour");
        }
        let finite = [
            self.base_load,
            self.seasonal_amplitude,
            self.temp_coupling,
            self.temp_reference,
            self.annual_temp_mean,
            self.annual_temp_amplitude,
            self.daily_temp_amplitude,
        ];
        if finite.iter().any(|v| !v.is_finite()) || self.daily_profile.iter().any(|v| !v.is_finite()) {
            return bad("parameters must be finite");
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Generated {
    pub raw_consumption: RawSeries<f64>,
    pub raw_temperature: RawSeries<f64>,
    /// Hourly load, `days·24` values starting one step after `start`.
    pub true_load: RegularSeries<f64>,
    /// The counter on the hourly grid, `days·24 + 1` values.
    pub accumulated: RegularSeries<f64>,
    /// Temperature on the hourly grid, aligned with `accumulated`.
    pub temperature: RegularSeries<f64>,
}

fn temperature_at(cfg: &GenConfig, ts: Timestamp) -> f64 {
    let dt = DateTime::<Utc>::from_timestamp(ts, 0).expect("timestamp in range");
    let day_of_year = dt.ordinal0() as f64 + dt.hour() as f64 / 24.0;
    let hour = dt.hour() as f64;
    let tau = std::f64::consts::TAU;
    // coldest around mid-January, warmest mid-afternoon
    cfg.annual_temp_mean - cfg.annual_temp_amplitude * (tau * (day_of_year - 15.0) / 365.25).cos()
        + cfg.daily_temp_amplitude * (tau * (hour - 15.0) / 24.0).cos()
}

fn degrade(
    grid: &[f64],
    start: Timestamp,
    cfg: &GenConfig,
    rng: &mut XorShift64Star,
    unit: Unit,
) -> Result<RawSeries<f64>> {
    let n = grid.len();
    let max_jitter = (HOUR / 2 - 1) as f64;
    let mut points = Vec::with_capacity(n);
    for (i, &v) in grid.iter().enumerate() {
        let ts = start + i as i64 * HOUR;
        let edge = i == 0 || i + 1 == n;
        let jitter = if cfg.jitter_stddev > 0.0 {
            (rng.normal() * cfg.jitter_stddev).round().clamp(-max_jitter, max_jitter)
        } else {
            0.0
        };
        let dropped = cfg.dropout_prob > 0.0 && rng.bernoulli(cfg.dropout_prob);
        if edge {
            points.push((ts, v));
            continue;
        }
        if dropped {
            continue;
        }
        let j = jitter as i64;
        // linear between the neighbouring grid values
        let value = if j > 0 {
            v + (grid[i + 1] - v) * (j as f64 / HOUR as f64)
        } else if j < 0 {
            v + (grid[i - 1] - v) * (-j as f64 / HOUR as f64)
        } else {
            v
        };
        points.push((ts + j, value));
    }
    RawSeries::new(points, unit)
}

pub fn generate(cfg: &GenConfig) -> Result<Generated> {
    cfg.validate()?;
    let mut rng = XorShift64Star::new(cfg.rng_seed);
    let n = cfg.days * 24 + 1;
    let lag = cfg.coupling_lag;

    // temperature on indices -lag ..= n-1
    let a = TEMP_NOISE_PERSISTENCE;
    let innovation = cfg.temp_noise_stddev * (1.0 - a * a).sqrt();
    let mut ar = cfg.temp_noise_stddev * rng.normal();
    let mut temp_ext = Vec::with_capacity(n + lag);
    for k in 0..n + lag {
        if k > 0 {
            ar = a * ar + innovation * rng.normal();
        }
        let ts = cfg.start + (k as i64 - lag as i64) * HOUR;
        temp_ext.push(temperature_at(cfg, ts) + ar);
    }
    let temperature: Vec<f64> = temp_ext[lag..].to_vec();

    let mut load = Vec::with_capacity(n - 1);
    for i in 1..n {
        let hour_of_day = ((cfg.start / HOUR + i as i64 - 1).rem_euclid(24)) as usize;
        // temp_ext[k] sits at grid index k - lag
        let theta = temp_ext[i];
        let heating = cfg.temp_coupling * (cfg.temp_reference - theta).max(0.0);
        let noise = if cfg.noise_stddev > 0.0 {
            cfg.noise_stddev * rng.normal()
        } else {
            0.0
        };
        let v = cfg.base_load + cfg.seasonal_amplitude * cfg.daily_profile[hour_of_day] + heating + noise;
        load.push(v.max(0.0));
    }
    let mut acc = Vec::with_capacity(n);
    acc.push(0.0);
    for &l in &load {
        acc.push(acc[acc.len() - 1] + l);
    }

    let raw_consumption = degrade(&acc, cfg.start, cfg, &mut rng, Unit::KwhAccumulated)?;
    let raw_temperature = degrade(&temperature, cfg.start, cfg, &mut rng, Unit::DegC)?;
    Ok(Generated {
        raw_consumption,
        raw_temperature,
        true_load: RegularSeries::hourly(cfg.start + HOUR, load, Unit::KwhPerStep)?,
        accumulated: RegularSeries::hourly(cfg.start, acc, Unit::KwhAccumulated)?,
        temperature: RegularSeries::hourly(cfg.start, temperature, Unit::DegC)?,
    })
}
