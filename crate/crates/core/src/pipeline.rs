//! End-to-end forecasting: windowing, PSO-tuned training, 24-hour forecasts
//! of the meter counter and conversion back to hourly load.

use serde::{Deserialize, Serialize};

use crate::ksvr::{self, FeatureRow, Hyperparams, Scalers, SvrModel};
use crate::pso::{self, PsoConfig, PsoResult};
use crate::series::{differentiate_shift, resample, RawSeries, RegularSeries, Timestamp, Unit, HOUR};
use crate::{Error, Result, Scalar};

const DAY: i64 = 24 * HOUR;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowSpec {
    pub window_days: usize,
    pub train_days: usize,
    pub val_days: usize,
    pub test_days: usize,
    /// Seconds.
    pub step: i64,
    /// Forecast length in steps.
    pub horizon: usize,
}

impl Default for WindowSpec {
    fn default() -> Self {
        Self {
            window_days: 16,
            train_days: 14,
            val_days: 1,
            test_days: 1,
            step: HOUR,
            horizon: 24,
        }
    }
}

impl WindowSpec {
    pub fn steps_per_day(&self) -> usize {
        (DAY / self.step) as usize
    }

    pub fn validate(&self) -> Result<()> {
        if self.step <= 0 || DAY % self.step != 0 {
            return Err(Error::InvalidConfig("step must divide one day".into()));
        }
        if self.train_days + self.val_days + self.test_days != self.window_days {
            return Err(Error::InvalidConfig(
                "train + validation + test days must equal the window length".into(),
            ));
        }
        if self.train_days == 0 || self.val_days == 0 || self.test_days == 0 {
            return Err(Error::InvalidConfig("every split needs at least one day".into()));
        }
        if self.horizon == 0 || self.horizon > self.test_days * self.steps_per_day() {
            return Err(Error::InvalidConfig(
                "horizon must be within the test split".into(),
            ));
        }
        Ok(())
    }

    /// Steps in one window (rows per window).
    pub fn window_steps(&self) -> usize {
        self.window_days * self.steps_per_day()
    }

    /// Rows before the test split.
    pub fn pre_test_steps(&self) -> usize {
        (self.train_days + self.val_days) * self.steps_per_day()
    }
}

/// Resamples both raw series onto the common grid of multiples of `step`
/// inside their shared span.
pub fn align<T: Scalar>(
    consumption: &RawSeries<T>,
    temperature: &RawSeries<T>,
    step: i64,
) -> Result<(RegularSeries<T>, RegularSeries<T>)> {
    if step <= 0 {
        return Err(Error::NonPositiveStep(step));
    }
    let span = |r: &RawSeries<T>| match (r.first_timestamp(), r.last_timestamp()) {
        (Some(a), Some(b)) if r.len() >= 2 => Ok((a, b)),
        _ => Err(Error::TooFewPoints { needed: 2, got: r.len() }),
    };
    let (a0, a1) = span(consumption)?;
    let (b0, b1) = span(temperature)?;
    let first = a0.max(b0).div_euclid(step) * step;
    let first = if first < a0.max(b0) { first + step } else { first };
    let last = a1.min(b1).div_euclid(step) * step;
    if last < first {
        return Err(Error::TooFewPoints { needed: 1, got: 0 });
    }
    let n = ((last - first) / step) as usize + 1;
    Ok((
        resample(consumption, first, step, n)?,
        resample(temperature, first, step, n)?,
    ))
}

/// One non-overlapping window of aligned counter and temperature data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Window<T> {
    pub index: usize,
    pub train: Vec<FeatureRow<T>>,
    pub validation: Vec<FeatureRow<T>>,
    pub test: Vec<FeatureRow<T>>,
    /// `window_steps + 1` counter values (the extra one feeds the first lag).
    pub accumulated: RegularSeries<T>,
    pub temperature: RegularSeries<T>,
    pub spec: WindowSpec,
}

impl<T: Scalar> Window<T> {
    pub fn start(&self) -> Timestamp {
        self.accumulated.start()
    }

    /// Grid index (within the window) of the last counter value before the
    /// test split.
    pub fn origin(&self) -> usize {
        self.spec.pre_test_steps()
    }

    /// Timestamp of the last known counter value.
    pub fn origin_timestamp(&self) -> Timestamp {
        self.accumulated.timestamp(self.origin())
    }

    pub fn last_known_accumulated(&self) -> T {
        self.accumulated.values()[self.origin()]
    }

    /// Temperatures feeding the forecast steps, starting at the origin.
    pub fn forecast_temperature(&self) -> RegularSeries<T> {
        let o = self.origin();
        self.temperature.slice(o, o + self.spec.horizon)
    }

    /// True counter over `[origin − back, origin + horizon]`.
    pub fn actual_accumulated(&self, back: usize) -> Result<RegularSeries<T>> {
        let o = self.origin();
        if back > o {
            return Err(Error::SeriesTooShort { needed: back, got: o });
        }
        Ok(self.accumulated.slice(o - back, o + self.spec.horizon + 1))
    }

    /// Hourly load up to the origin, `pre_test_steps` values.
    pub fn history_load(&self) -> Result<RegularSeries<T>> {
        differentiate_shift(&self.accumulated.slice(0, self.origin() + 1), 0)
    }

    pub fn pre_test_rows(&self) -> Vec<FeatureRow<T>> {
        self.train.iter().chain(&self.validation).copied().collect()
    }
}

/// Tiles aligned hourly series into consecutive non-overlapping windows.
pub fn make_windows<T: Scalar>(
    consumption: &RegularSeries<T>,
    temperature: &RegularSeries<T>,
    spec: &WindowSpec,
) -> Result<Vec<Window<T>>> {
    spec.validate()?;
    consumption.expect_unit(Unit::KwhAccumulated)?;
    temperature.expect_unit(Unit::DegC)?;
    if !consumption.is_aligned_with(temperature) || consumption.step() != spec.step {
        return Err(Error::Misaligned);
    }
    if consumption.len() != temperature.len() {
        return Err(Error::LengthMismatch {
            left: consumption.len(),
            right: temperature.len(),
        });
    }
    let w = spec.window_steps();
    let per_day = spec.steps_per_day();
    let (n_train, n_val) = (spec.train_days * per_day, spec.val_days * per_day);
    let count = consumption.len().saturating_sub(1) / w;
    let (h, th) = (consumption.values(), temperature.values());
    let mut windows = Vec::with_capacity(count);
    for index in 0..count {
        let base = index * w;
        let rows: Vec<FeatureRow<T>> = (base + 1..=base + w)
            .map(|t| FeatureRow::new(h[t - 1], th[t - 1], h[t]))
            .collect();
        let mut rows = rows.into_iter();
        let train: Vec<_> = rows.by_ref().take(n_train).collect();
        let validation: Vec<_> = rows.by_ref().take(n_val).collect();
        let test: Vec<_> = rows.collect();
        windows.push(Window {
            index,
            train,
            validation,
            test,
            accumulated: consumption.slice(base, base + w + 1),
            temperature: temperature.slice(base, base + w + 1),
            spec: spec.clone(),
        });
    }
    Ok(windows)
}

fn hyper_from_position<T: Scalar>(p: &[T]) -> Result<Hyperparams<T>> {
    Hyperparams::new(p[0], p[1], p[2])
}

/// Validation mean-squared error (standardized units) of a model trained on
/// `train` with the given hyper-parameters.
pub fn validation_mse<T: Scalar>(
    train_z: &[FeatureRow<T>],
    val_z: &[FeatureRow<T>],
    hyper: Hyperparams<T>,
    svr_tol: T,
) -> Result<T> {
    let model = ksvr::train(train_z, hyper, svr_tol, ksvr::default_max_passes(train_z.len()))?;
    let n = T::from_usize_lossy(val_z.len());
    Ok(val_z
        .iter()
        .map(|r| {
            let e = model.decision(&r.features()) - r.target;
            e * e
        })
        .sum::<T>()
        / n)
}

/// Tunes `(C, γ, ε)` by PSO on validation MSE, then refits on
/// train ∪ validation at the best position. Scalers come from the training
/// split.
pub fn tune_and_train<T: Scalar>(
    train: &[FeatureRow<T>],
    validation: &[FeatureRow<T>],
    pso_config: &PsoConfig<T>,
    svr_tol: T,
) -> Result<(SvrModel<T>, PsoResult<T>)> {
    if train.len() < 2 || validation.is_empty() {
        return Err(Error::TooFewPoints {
            needed: 2,
            got: train.len().min(validation.len()),
        });
    }
    if pso_config.bounds.len() != 3 {
        return Err(Error::InvalidConfig(
            "hyper-parameter search needs a 3-dimensional box (C, gamma, epsilon)".into(),
        ));
    }
    let scalers = Scalers::fit(train);
    let train_z = scalers.transform_rows(train);
    let val_z = scalers.transform_rows(validation);
    let fitness = |p: &[T]| {
        hyper_from_position(p)
            .and_then(|h| validation_mse(&train_z, &val_z, h, svr_tol))
            .unwrap_or(T::nan())
    };
    let result = pso::optimize(fitness, pso_config)?;
    let hyper = hyper_from_position(&result.best_position)?;
    let all: Vec<FeatureRow<T>> = train.iter().chain(validation).copied().collect();
    let model = ksvr::train_with_scalers(&all, scalers, hyper, svr_tol)?;
    Ok((model, result))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForecastMode {
    /// Each prediction becomes the next step's lagged counter value.
    Recursive,
    /// The true lagged counter values are used at every step.
    OpenLoop,
}

/// Predicts the counter for each step following the instants of
/// `temperature` (whose values are the lag-1 temperatures of those steps).
/// The result is clamped to be non-decreasing and never below
/// `last_known_accumulated`.
pub fn forecast_24h<T: Scalar>(
    model: &SvrModel<T>,
    last_known_accumulated: T,
    temperature: &RegularSeries<T>,
    mode: ForecastMode,
    test_rows: Option<&[FeatureRow<T>]>,
) -> Result<RegularSeries<T>> {
    let temps = temperature.values();
    let truth = match mode {
        ForecastMode::Recursive => None,
        ForecastMode::OpenLoop => {
            let rows = test_rows.ok_or(Error::MissingTestRows)?;
            if rows.len() < temps.len() {
                return Err(Error::LengthMismatch {
                    left: rows.len(),
                    right: temps.len(),
                });
            }
            Some(rows)
        }
    };
    let mut out = Vec::with_capacity(temps.len());
    let mut prev = last_known_accumulated;
    for (k, &theta) in temps.iter().enumerate() {
        let lagged = match truth {
            Some(rows) => rows[k].h_lag1,
            None => prev,
        };
        let y = model.predict([lagged, theta]);
        let y = if y.is_finite() { y.max(prev) } else { prev };
        out.push(y);
        prev = y;
    }
    RegularSeries::new(
        temperature.start() + temperature.step(),
        temperature.step(),
        out,
        Unit::KwhAccumulated,
    )
}

fn check_aligned<T: Scalar>(a: &RegularSeries<T>, b: &RegularSeries<T>) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    if !a.is_aligned_with(b) {
        return Err(Error::Misaligned);
    }
    if a.is_empty() {
        return Err(Error::TooFewPoints { needed: 1, got: 0 });
    }
    Ok(())
}

pub fn rmse<T: Scalar>(predicted: &RegularSeries<T>, actual: &RegularSeries<T>) -> Result<T> {
    check_aligned(predicted, actual)?;
    let n = T::from_usize_lossy(actual.len());
    let sse: T = predicted
        .values()
        .iter()
        .zip(actual.values())
        .map(|(&p, &a)| (p - a) * (p - a))
        .sum();
    Ok((sse / n).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZeroPolicy {
    /// Zero or negative ground truth is an error.
    Error,
    /// Shift both series by the dynamic range of the ground truth when any
    /// ground-truth value is zero or negative.
    DynamicRangeOffset,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mape<T> {
    pub percent: T,
    pub offset_used: T,
}

pub fn mape<T: Scalar>(
    predicted: &RegularSeries<T>,
    actual: &RegularSeries<T>,
    zero_policy: ZeroPolicy,
) -> Result<Mape<T>> {
    check_aligned(predicted, actual)?;
    let y = actual.values();
    let mut offset = T::zero();
    if let Some(index) = y.iter().position(|&v| v <= T::zero()) {
        match zero_policy {
            ZeroPolicy::Error => return Err(Error::NonPositiveTruth { index }),
            ZeroPolicy::DynamicRangeOffset => {
                let (lo, hi) = y
                    .iter()
                    .fold((T::infinity(), T::neg_infinity()), |(lo, hi), &v| (lo.min(v), hi.max(v)));
                offset = hi - lo;
                if let Some(index) = y.iter().position(|&v| v + offset <= T::zero()) {
                    return if offset > T::zero() {
                        Err(Error::NonPositiveTruth { index })
                    } else {
                        Err(Error::ZeroDynamicRange)
                    };
                }
            }
        }
    }
    let n = T::from_usize_lossy(y.len());
    let sum: T = predicted
        .values()
        .iter()
        .zip(y)
        .map(|(&p, &a)| ((p + offset) - (a + offset)).abs() / (a + offset))
        .sum();
    Ok(Mape {
        percent: T::lit(100.0) * sum / n,
        offset_used: offset,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    PsoKsvr,
    Arima,
    SeasonalNaive,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::PsoKsvr => "pso_ksvr",
            Method::Arima => "arima",
            Method::SeasonalNaive => "seasonal_naive",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastReport<T> {
    pub model: Method,
    pub window: usize,
    pub predicted_load: RegularSeries<T>,
    pub actual_load: RegularSeries<T>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub predicted_accumulated: Option<RegularSeries<T>>,
    pub rmse: T,
    pub mape_percent: T,
    pub mape_offset_used: T,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hyper: Option<Hyperparams<T>>,
    pub converged: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<ForecastMode>,
    pub tau: usize,
}

impl<T: Scalar> ForecastReport<T> {
    /// Plot data: `timestamp actual predicted` per line.
    pub fn to_plot_data(&self) -> String {
        let mut out = String::from("# timestamp actual_kWh predicted_kWh\n");
        for ((ts, a), p) in self
            .actual_load
            .timestamps()
            .zip(self.actual_load.values())
            .zip(self.predicted_load.values())
        {
            out.push_str(&format!("{} {} {}\n", crate::series::format_timestamp(ts), a, p));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig<T> {
    pub window: WindowSpec,
    pub pso: PsoConfig<T>,
    pub svr_tol: T,
    pub mode: ForecastMode,
    /// Time-shift applied when differencing the counter forecast.
    pub tau: usize,
    pub zero_policy: ZeroPolicy,
}

impl<T: Scalar> Default for PipelineConfig<T> {
    fn default() -> Self {
        Self {
            window: WindowSpec::default(),
            pso: PsoConfig::default(),
            svr_tol: T::lit(ksvr::DEFAULT_TOL),
            mode: ForecastMode::Recursive,
            tau: 1,
            zero_policy: ZeroPolicy::DynamicRangeOffset,
        }
    }
}

/// Turns counter values into load over the forecast horizon.
///
/// `forecast` holds the predicted counter for the `horizon` steps after the
/// origin. It is prefixed with the `tau + 1` known counter values ending at
/// the origin and differenced with a `tau`-step shift; the true counter goes
/// through the same path, so both load series share one time axis.
pub fn loads_from_forecast<T: Scalar>(
    window: &Window<T>,
    forecast: &RegularSeries<T>,
    tau: usize,
) -> Result<(RegularSeries<T>, RegularSeries<T>)> {
    let actual_acc = window.actual_accumulated(tau)?;
    let mut values = actual_acc.values()[..=tau].to_vec();
    values.extend_from_slice(forecast.values());
    let predicted_acc =
        RegularSeries::new(actual_acc.start(), actual_acc.step(), values, Unit::KwhAccumulated)?;
    Ok((
        differentiate_shift(&predicted_acc, tau)?,
        differentiate_shift(&actual_acc, tau)?,
    ))
}

/// Scores a load forecast that is already on the actual-load time axis.
pub fn score<T: Scalar>(
    method: Method,
    window: usize,
    predicted_load: RegularSeries<T>,
    actual_load: RegularSeries<T>,
    zero_policy: ZeroPolicy,
) -> Result<ForecastReport<T>> {
    let r = rmse(&predicted_load, &actual_load)?;
    let m = mape(&predicted_load, &actual_load, zero_policy)?;
    Ok(ForecastReport {
        model: method,
        window,
        predicted_load,
        actual_load,
        predicted_accumulated: None,
        rmse: r,
        mape_percent: m.percent,
        mape_offset_used: m.offset_used,
        hyper: None,
        converged: true,
        mode: None,
        tau: 0,
    })
}

/// Forecast report for an already trained model on one window.
pub fn forecast_window<T: Scalar>(
    model: &SvrModel<T>,
    window: &Window<T>,
    config: &PipelineConfig<T>,
) -> Result<ForecastReport<T>> {
    let forecast = forecast_24h(
        model,
        window.last_known_accumulated(),
        &window.forecast_temperature(),
        config.mode,
        Some(&window.test),
    )?;
    let (predicted_load, actual_load) = loads_from_forecast(window, &forecast, config.tau)?;
    let mut report = score(
        Method::PsoKsvr,
        window.index,
        predicted_load,
        actual_load,
        config.zero_policy,
    )?;
    report.predicted_accumulated = Some(forecast);
    report.hyper = Some(model.hyper);
    report.converged = model.converged;
    report.mode = Some(config.mode);
    report.tau = config.tau;
    Ok(report)
}

/// Everything produced for one window.
#[derive(Debug, Clone)]
pub struct WindowRun<T> {
    pub model: SvrModel<T>,
    pub tuning: PsoResult<T>,
    pub report: ForecastReport<T>,
}

/// Tune, train and forecast one window.
pub fn run_window<T: Scalar>(window: &Window<T>, config: &PipelineConfig<T>) -> Result<WindowRun<T>> {
    let (model, tuning) = tune_and_train(&window.train, &window.validation, &config.pso, config.svr_tol)?;
    let report = forecast_window(&model, window, config)?;
    Ok(WindowRun {
        model,
        tuning,
        report,
    })
}

/// Mean and sample standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
    pub n: usize,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Self {
                mean: f64::NAN,
                std: f64::NAN,
                n,
            };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let std = if n > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Self { mean, std, n }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub rmse: MeanStd,
    pub mape_percent: MeanStd,
}

pub fn summarize<T: Scalar>(reports: &[ForecastReport<T>]) -> Summary {
    let r: Vec<f64> = reports.iter().map(|r| r.rmse.as_f64()).collect();
    let m: Vec<f64> = reports.iter().map(|r| r.mape_percent.as_f64()).collect();
    Summary {
        rmse: MeanStd::of(&r),
        mape_percent: MeanStd::of(&m),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineConfig {
    pub max_p: usize,
    pub max_q: usize,
    /// Seasonal-naive period in steps.
    pub period: usize,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        Self {
            max_p: 5,
            max_q: 5,
            period: 24,
        }
    }
}

/// Integrates a load forecast from the origin so that baselines go through
/// the same counter-to-load path as the SVR.
fn baseline_report<T: Scalar>(
    method: Method,
    window: &Window<T>,
    load: &RegularSeries<T>,
    config: &PipelineConfig<T>,
) -> Result<ForecastReport<T>> {
    let mut level = window.last_known_accumulated();
    let acc: Vec<T> = load
        .values()
        .iter()
        .map(|&v| {
            level = level + v.max(T::zero());
            level
        })
        .collect();
    let acc = RegularSeries::new(
        window.origin_timestamp() + window.spec.step,
        window.spec.step,
        acc,
        Unit::KwhAccumulated,
    )?;
    let (predicted, actual) = loads_from_forecast(window, &acc, config.tau)?;
    let mut report = score(method, window.index, predicted, actual, config.zero_policy)?;
    report.predicted_accumulated = Some(acc);
    report.tau = config.tau;
    Ok(report)
}

/// ARIMA (order chosen by AIC on the pre-test load) and seasonal-naive
/// reports for one window.
pub fn baseline_reports<T: Scalar>(
    window: &Window<T>,
    config: &PipelineConfig<T>,
    baseline: &BaselineConfig,
) -> Result<[ForecastReport<T>; 2]> {
    let history = window.history_load()?;
    let horizon = window.spec.horizon;
    let arima = crate::baseline::select_order(&history, baseline.max_p, baseline.max_q)?;
    let arima = crate::baseline::forecast_arima(&arima, &history, horizon)?;
    let naive = crate::baseline::seasonal_naive(&history, baseline.period, horizon)?;
    Ok([
        baseline_report(Method::Arima, window, &arima, config)?,
        baseline_report(Method::SeasonalNaive, window, &naive, config)?,
    ])
}

/// Calendar month (1–12, UTC) of the first forecast step.
pub fn test_month<T: Scalar>(window: &Window<T>) -> u32 {
    use chrono::{Datelike, TimeZone, Utc};
    let ts = window.origin_timestamp() + window.spec.step;
    Utc.timestamp_opt(ts, 0)
        .single()
        .map(|d| d.month())
        .unwrap_or(1)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MethodStats {
    pub method: Method,
    pub mape_percent: MeanStd,
    pub rmse: MeanStd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonthRow {
    pub month: u32,
    pub windows: Vec<usize>,
    pub methods: Vec<MethodStats>,
    /// Lowest mean MAPE; ties go to the earlier method.
    pub winner: Method,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub rows: Vec<MonthRow>,
    /// Mean over months of each method's monthly mean MAPE / RMSE.
    pub overall: Vec<MethodStats>,
    pub wins: Vec<(Method, usize)>,
}

fn stats<T: Scalar>(method: Method, reports: &[&ForecastReport<T>]) -> MethodStats {
    let m: Vec<f64> = reports.iter().map(|r| r.mape_percent.as_f64()).collect();
    let r: Vec<f64> = reports.iter().map(|r| r.rmse.as_f64()).collect();
    MethodStats {
        method,
        mape_percent: MeanStd::of(&m),
        rmse: MeanStd::of(&r),
    }
}

/// Groups per-window reports by test month. `reports[w]` holds one report per
/// method for window `w`, in the same method order for every window.
pub fn monthly_table<T: Scalar>(
    months: &[u32],
    reports: &[Vec<ForecastReport<T>>],
) -> Result<ComparisonTable> {
    if months.len() != reports.len() {
        return Err(Error::LengthMismatch {
            left: months.len(),
            right: reports.len(),
        });
    }
    let methods: Vec<Method> = reports
        .first()
        .map(|r| r.iter().map(|r| r.model).collect())
        .unwrap_or_default();
    let mut unique: Vec<u32> = months.to_vec();
    unique.sort_unstable();
    unique.dedup();
    let mut rows = Vec::with_capacity(unique.len());
    for month in unique {
        let windows: Vec<usize> = (0..months.len()).filter(|&w| months[w] == month).collect();
        let per_method: Vec<MethodStats> = methods
            .iter()
            .enumerate()
            .map(|(k, &method)| {
                let rs: Vec<&ForecastReport<T>> = windows.iter().map(|&w| &reports[w][k]).collect();
                stats(method, &rs)
            })
            .collect();
        let winner = per_method
            .iter()
            .fold(None::<&MethodStats>, |best, s| match best {
                Some(b) if b.mape_percent.mean <= s.mape_percent.mean => Some(b),
                _ => Some(s),
            })
            .map(|s| s.method)
            .unwrap_or(Method::PsoKsvr);
        rows.push(MonthRow {
            month,
            windows,
            methods: per_method,
            winner,
        });
    }
    let overall = methods
        .iter()
        .enumerate()
        .map(|(k, &method)| {
            let m: Vec<f64> = rows.iter().map(|r| r.methods[k].mape_percent.mean).collect();
            let r: Vec<f64> = rows.iter().map(|r| r.methods[k].rmse.mean).collect();
            MethodStats {
                method,
                mape_percent: MeanStd::of(&m),
                rmse: MeanStd::of(&r),
            }
        })
        .collect();
    let wins = methods
        .iter()
        .map(|&m| (m, rows.iter().filter(|r| r.winner == m).count()))
        .collect();
    Ok(ComparisonTable { rows, overall, wins })
}

const MONTHS: [&str; 12] = [
    "Jan", "Feb", "Mar", "Apr", "May", "Jun", "Jul", "Aug", "Sep", "Oct", "Nov", "Dec",
];

impl ComparisonTable {
    pub fn wins_of(&self, method: Method) -> usize {
        self.wins
            .iter()
            .find(|(m, _)| *m == method)
            .map_or(0, |(_, n)| *n)
    }

    pub fn overall_of(&self, method: Method) -> Option<&MethodStats> {
        self.overall.iter().find(|s| s.method == method)
    }

    /// Markdown table, one row per month, winner in bold.
    pub fn to_markdown(&self) -> String {
        let methods: Vec<Method> = self
            .overall
            .iter()
            .map(|s| s.method)
            .collect();
        let mut out = String::from("| Month | Windows |");
        for m in &methods {
            out.push_str(&format!(" {} MAPE % | {} RMSE kWh |", m.name(), m.name()));
        }
        out.push_str(" Winner |\n|---|---|");
        for _ in &methods {
            out.push_str("---|---|");
        }
        out.push_str("---|\n");
        let cell = |s: &MeanStd, bold: bool, digits: usize| {
            let v = format!("{:.*} ± {:.*}", digits, s.mean, digits, s.std);
            if bold {
                format!("**{v}**")
            } else {
                v
            }
        };
        for row in &self.rows {
            let name = MONTHS[(row.month as usize).clamp(1, 12) - 1];
            out.push_str(&format!("| {name} | {} |", row.windows.len()));
            for s in &row.methods {
                let bold = s.method == row.winner;
                out.push_str(&format!(
                    " {} | {} |",
                    cell(&s.mape_percent, bold, 3),
                    cell(&s.rmse, false, 4)
                ));
            }
            out.push_str(&format!(" {} |\n", row.winner.name()));
        }
        out.push_str("| Mean | |");
        for s in &self.overall {
            out.push_str(&format!(
                " {} | {} |",
                cell(&s.mape_percent, false, 3),
                cell(&s.rmse, false, 4)
            ));
        }
        out.push_str(" |\n");
        out
    }
}
