//! Time-series core: raw meter readings, the evenly spaced hourly grid,
//! accumulation and differencing.
//!
//! Timestamps are integer seconds since the Unix epoch (UTC).

use std::io::{Read, Write};

use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};

use crate::{Error, Result, Scalar};

/// Seconds since the Unix epoch, UTC.
pub type Timestamp = i64;

pub const HOUR: i64 = 3600;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Unit {
    /// Running meter counter in kWh.
    KwhAccumulated,
    /// Energy consumed during one step (load), kWh.
    KwhPerStep,
    /// Feel-like temperature in °C.
    DegC,
    /// Energy without counter semantics, e.g. a decomposition component.
    Kwh,
}

impl Unit {
    pub fn name(self) -> &'static str {
        match self {
            Unit::KwhAccumulated => "kWh_accumulated",
            Unit::KwhPerStep => "kWh_per_step",
            Unit::DegC => "degC",
            Unit::Kwh => "kWh",
        }
    }
}

pub fn format_timestamp(ts: Timestamp) -> String {
    DateTime::<Utc>::from_timestamp(ts, 0)
        .map(|dt| dt.to_rfc3339_opts(SecondsFormat::Secs, false))
        .unwrap_or_else(|| ts.to_string())
}

pub fn parse_timestamp(s: &str) -> Option<Timestamp> {
    DateTime::parse_from_rfc3339(s.trim()).ok().map(|dt| dt.timestamp())
}

fn check_finite<T: Scalar>(values: impl IntoIterator<Item = T>) -> Result<()> {
    match values.into_iter().position(|v| !v.is_finite()) {
        Some(index) => Err(Error::NonFinite { index }),
        None => Ok(()),
    }
}

fn check_monotone<T: Scalar>(values: impl IntoIterator<Item = T>) -> Result<()> {
    let mut prev: Option<T> = None;
    for (i, v) in values.into_iter().enumerate() {
        if let Some(p) = prev {
            if v < p {
                return Err(Error::NonMonotoneCounter { index: i });
            }
        }
        prev = Some(v);
    }
    Ok(())
}

/// Unevenly spaced readings as delivered by a meter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawSeries<T> {
    points: Vec<(Timestamp, T)>,
    unit: Unit,
}

impl<T: Scalar> RawSeries<T> {
    pub fn new(points: Vec<(Timestamp, T)>, unit: Unit) -> Result<Self> {
        for (i, w) in points.windows(2).enumerate() {
            if w[1].0 <= w[0].0 {
                return Err(Error::NonIncreasingTimestamps { index: i + 1 });
            }
        }
        check_finite(points.iter().map(|p| p.1))?;
        if unit == Unit::KwhAccumulated {
            check_monotone(points.iter().map(|p| p.1))?;
        }
        Ok(Self { points, unit })
    }

    pub fn points(&self) -> &[(Timestamp, T)] {
        &self.points
    }

    pub fn unit(&self) -> Unit {
        self.unit
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn first_timestamp(&self) -> Option<Timestamp> {
        self.points.first().map(|p| p.0)
    }

    pub fn last_timestamp(&self) -> Option<Timestamp> {
        self.points.last().map(|p| p.0)
    }
}

/// Evenly spaced, gap-free series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularSeries<T> {
    start: Timestamp,
    step: i64,
    values: Vec<T>,
    unit: Unit,
}

impl<T: Scalar> RegularSeries<T> {
    pub fn new(start: Timestamp, step: i64, values: Vec<T>, unit: Unit) -> Result<Self> {
        if step <= 0 {
            return Err(Error::NonPositiveStep(step));
        }
        check_finite(values.iter().copied())?;
        if unit == Unit::KwhAccumulated {
            check_monotone(values.iter().copied())?;
        }
        Ok(Self {
            start,
            step,
            values,
            unit,
        })
    }

    /// Hourly series starting at `start`.
    pub fn hourly(start: Timestamp, values: Vec<T>, unit: Unit) -> Result<Self> {
        Self::new(start, HOUR, values, unit)
    }

    pub fn start(&self) -> Timestamp {
        self.start
    }

    pub fn step(&self) -> i64 {
        self.step
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn unit(&self) -> Unit {
        self.unit
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn timestamp(&self, index: usize) -> Timestamp {
        self.start + index as i64 * self.step
    }

    pub fn timestamps(&self) -> impl Iterator<Item = Timestamp> + '_ {
        (0..self.values.len()).map(|i| self.timestamp(i))
    }

    /// Same start and step.
    pub fn is_aligned_with(&self, other: &Self) -> bool {
        self.start == other.start && self.step == other.step
    }

    /// Sub-series `[from, to)`, keeping the grid.
    pub fn slice(&self, from: usize, to: usize) -> Self {
        Self {
            start: self.timestamp(from),
            step: self.step,
            values: self.values[from..to].to_vec(),
            unit: self.unit,
        }
    }

    pub(crate) fn expect_unit(&self, unit: Unit) -> Result<()> {
        if self.unit == unit {
            Ok(())
        } else {
            Err(Error::WrongUnit {
                expected: unit.name(),
                got: self.unit.name(),
            })
        }
    }
}

/// Piecewise-linear interpolation of `raw` onto `n` instants
/// `start, start + step, ...`.
///
/// A grid instant that coincides with a raw timestamp returns the raw value
/// unchanged. Instants outside the raw span are rejected.
pub fn resample<T: Scalar>(
    raw: &RawSeries<T>,
    start: Timestamp,
    step: i64,
    n: usize,
) -> Result<RegularSeries<T>> {
    if raw.len() < 2 {
        return Err(Error::TooFewPoints {
            needed: 2,
            got: raw.len(),
        });
    }
    if step <= 0 {
        return Err(Error::NonPositiveStep(step));
    }
    if n == 0 {
        return Err(Error::TooFewPoints { needed: 1, got: 0 });
    }
    let pts = raw.points();
    let first = pts[0].0;
    let last = pts[pts.len() - 1].0;
    let end = start + (n as i64 - 1) * step;
    for instant in [start, end] {
        if instant < first || instant > last {
            return Err(Error::OutsideSpan {
                instant,
                first,
                last,
            });
        }
    }

    let mut values = Vec::with_capacity(n);
    // grid instants are increasing, so the segment cursor only moves forward
    let mut seg = 0usize;
    for k in 0..n {
        let t = start + k as i64 * step;
        while seg + 1 < pts.len() && pts[seg + 1].0 <= t {
            seg += 1;
        }
        let (t0, v0) = pts[seg];
        if t0 == t {
            values.push(v0);
            continue;
        }
        let (t1, v1) = pts[seg + 1];
        let frac = T::lit((t - t0) as f64 / (t1 - t0) as f64);
        let v = v0 + (v1 - v0) * frac;
        values.push(v.max(v0.min(v1)).min(v0.max(v1)));
    }
    RegularSeries::new(start, step, values, raw.unit())
}

/// Running sum of a non-negative load series.
pub fn accumulate<T: Scalar>(load: &RegularSeries<T>) -> Result<RegularSeries<T>> {
    load.expect_unit(Unit::KwhPerStep)?;
    let mut total = T::zero();
    let mut out = Vec::with_capacity(load.len());
    for (index, &v) in load.values().iter().enumerate() {
        if v < T::zero() {
            return Err(Error::NegativeLoad {
                index,
                value: v.as_f64(),
            });
        }
        total = total + v;
        out.push(total);
    }
    RegularSeries::new(load.start(), load.step(), out, Unit::KwhAccumulated)
}

/// First differences of an accumulated series, moved `tau` steps earlier.
///
/// Naive differencing places `acc[i] - acc[i-1]` at instant `i`. Here that
/// value is placed at instant `i - tau`; values that would land before
/// instant 1 are dropped, so the output starts at `start + step` and has
/// `len - 1 - tau` values.
pub fn differentiate_shift<T: Scalar>(
    acc: &RegularSeries<T>,
    tau: usize,
) -> Result<RegularSeries<T>> {
    acc.expect_unit(Unit::KwhAccumulated)?;
    let needed = tau + 2;
    if acc.len() < needed {
        return Err(Error::SeriesTooShort {
            needed,
            got: acc.len(),
        });
    }
    let v = acc.values();
    let d: Vec<T> = (1 + tau..v.len()).map(|i| v[i] - v[i - 1]).collect();
    RegularSeries::new(acc.start() + acc.step(), acc.step(), d, Unit::KwhPerStep)
}

/// Reads the two-column `timestamp,value` CSV format.
///
/// A header row is required; any unparsable row is an error.
pub fn read_csv<T: Scalar, R: Read>(reader: R, unit: Unit) -> Result<RawSeries<T>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut records = rdr.records();
    let header = records
        .next()
        .ok_or_else(|| Error::Csv {
            line: 1,
            msg: "missing header row".into(),
        })?
        .map_err(|e| Error::Csv {
            line: 1,
            msg: e.to_string(),
        })?;
    if header.len() != 2 || &header[0] != "timestamp" || &header[1] != "value" {
        return Err(Error::Csv {
            line: 1,
            msg: "header must be `timestamp,value`".into(),
        });
    }
    let mut points = Vec::new();
    for (i, rec) in records.enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| Error::Csv {
            line,
            msg: e.to_string(),
        })?;
        if rec.len() != 2 {
            return Err(Error::Csv {
                line,
                msg: format!("expected 2 fields, got {}", rec.len()),
            });
        }
        let ts = parse_timestamp(&rec[0]).ok_or_else(|| Error::Csv {
            line,
            msg: format!("bad timestamp `{}`", &rec[0]),
        })?;
        let value: f64 = rec[1].parse().map_err(|_| Error::Csv {
            line,
            msg: format!("bad value `{}`", &rec[1]),
        })?;
        points.push((ts, T::lit(value)));
    }
    RawSeries::new(points, unit)
}

fn write_rows<T: Scalar, W: Write>(
    mut w: W,
    rows: impl Iterator<Item = (Timestamp, T)>,
) -> Result<()> {
    writeln!(w, "timestamp,value")?;
    for (ts, v) in rows {
        writeln!(w, "{},{}", format_timestamp(ts), v)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_raw_csv<T: Scalar, W: Write>(raw: &RawSeries<T>, w: W) -> Result<()> {
    write_rows(w, raw.points().iter().copied())
}

pub fn write_regular_csv<T: Scalar, W: Write>(series: &RegularSeries<T>, w: W) -> Result<()> {
    write_rows(w, series.timestamps().zip(series.values().iter().copied()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn raw(points: &[(i64, f64)], unit: Unit) -> RawSeries<f64> {
        RawSeries::new(points.to_vec(), unit).unwrap()
    }

    #[test]
    fn resample_midpoint() {
        let r = raw(&[(0, 1.0), (2 * HOUR, 3.0)], Unit::DegC);
        let s = resample(&r, HOUR, HOUR, 1).unwrap();
        assert_eq!(s.values(), &[2.0]);
    }

    #[test]
    fn resample_identity_on_grid() {
        let vals = [0.1, 0.7, 1.3, 2.9, 3.0];
        let pts: Vec<_> = vals
            .iter()
            .enumerate()
            .map(|(i, &v)| (i as i64 * HOUR, v))
            .collect();
        let s = resample(&raw(&pts, Unit::KwhAccumulated), 0, HOUR, 5).unwrap();
        assert_eq!(s.values(), &vals);
    }

    #[test]
    fn resample_rejects_extrapolation() {
        let r = raw(&[(100, 1.0), (200, 2.0)], Unit::DegC);
        assert!(matches!(
            resample(&r, 50, 10, 3),
            Err(Error::OutsideSpan { .. })
        ));
        assert!(matches!(
            resample(&r, 100, 60, 3),
            Err(Error::OutsideSpan { .. })
        ));
        let one = raw(&[(100, 1.0)], Unit::DegC);
        assert!(matches!(
            resample(&one, 100, 1, 1),
            Err(Error::TooFewPoints { .. })
        ));
    }

    #[test]
    fn raw_rejects_bad_input() {
        assert!(RawSeries::new(vec![(0, 1.0), (0, 2.0)], Unit::DegC).is_err());
        assert!(RawSeries::new(vec![(0, f64::NAN)], Unit::DegC).is_err());
        assert!(matches!(
            RawSeries::new(vec![(0, 5.0), (1, 4.0)], Unit::KwhAccumulated),
            Err(Error::NonMonotoneCounter { index: 1 })
        ));
    }

    #[test]
    fn accumulate_examples() {
        let l = RegularSeries::hourly(0, vec![2.0, 3.0, 5.0], Unit::KwhPerStep).unwrap();
        assert_eq!(accumulate(&l).unwrap().values(), &[2.0, 5.0, 10.0]);
        let z = RegularSeries::hourly(0, vec![0.0; 3], Unit::KwhPerStep).unwrap();
        assert_eq!(accumulate(&z).unwrap().values(), &[0.0; 3]);
        let neg = RegularSeries::hourly(0, vec![1.0, -1.0], Unit::KwhPerStep).unwrap();
        assert!(matches!(
            accumulate(&neg),
            Err(Error::NegativeLoad { index: 1, .. })
        ));
    }

    #[test]
    fn differentiate_examples() {
        let acc = RegularSeries::hourly(0, vec![2.0, 5.0, 10.0], Unit::KwhAccumulated).unwrap();
        let d = differentiate_shift(&acc, 0).unwrap();
        assert_eq!(d.values(), &[3.0, 5.0]);
        assert_eq!(d.start(), HOUR);
        assert!(matches!(
            differentiate_shift(&acc, 2),
            Err(Error::SeriesTooShort { .. })
        ));
    }

    #[test]
    fn differentiate_shift_moves_values_earlier() {
        let acc: Vec<f64> = (0..26).map(|i| (i * i) as f64).collect();
        let acc = RegularSeries::hourly(1000 * HOUR, acc, Unit::KwhAccumulated).unwrap();
        let naive = differentiate_shift(&acc, 0).unwrap();
        let shifted = differentiate_shift(&acc, 1).unwrap();
        assert_eq!(shifted.len(), 24);
        assert_eq!(shifted.start(), naive.start());
        // the value naively stamped at instant i + 1 now sits at instant i
        for k in 0..24 {
            assert_eq!(shifted.values()[k], naive.values()[k + 1]);
        }
    }

    #[test]
    fn csv_round_trip_and_errors() {
        let text = "timestamp,value\n2020-01-15T13:00:00+00:00,1.5\n2020-01-15T15:00:00+01:00,2.5\n";
        let r: RawSeries<f64> = read_csv(text.as_bytes(), Unit::DegC).unwrap();
        assert_eq!(r.points()[0].0, parse_timestamp("2020-01-15T13:00:00Z").unwrap());
        assert_eq!(r.points()[1].0 - r.points()[0].0, HOUR);

        let text = "timestamp,value\n2020-01-15T13:00:00+00:00,1.5\n2020-01-15T15:00:00+00:00,2.5\n";
        let r: RawSeries<f64> = read_csv(text.as_bytes(), Unit::DegC).unwrap();
        let mut out = Vec::new();
        write_raw_csv(&r, &mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), text);

        let bad = "timestamp,value\n2020-01-15T13:00:00+00:00,abc\n";
        assert!(matches!(
            read_csv::<f64, _>(bad.as_bytes(), Unit::DegC),
            Err(Error::Csv { line: 2, .. })
        ));
        let no_header = "2020-01-15T13:00:00+00:00,1.0\n";
        assert!(read_csv::<f64, _>(no_header.as_bytes(), Unit::DegC).is_err());
    }

    #[test]
    fn regular_series_invariants() {
        assert!(RegularSeries::new(0, 0, vec![1.0], Unit::DegC).is_err());
        assert!(RegularSeries::hourly(0, vec![1.0, 0.5], Unit::KwhAccumulated).is_err());
        assert!(RegularSeries::hourly(0, vec![1.0, f64::INFINITY], Unit::DegC).is_err());
    }

    #[test]
    fn works_in_single_precision() {
        let l = RegularSeries::<f32>::hourly(0, vec![1.5, 2.5], Unit::KwhPerStep).unwrap();
        let acc = accumulate(&l).unwrap();
        assert_eq!(differentiate_shift(&acc, 0).unwrap().values(), &[2.5f32]);
    }
}
