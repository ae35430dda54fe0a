//! Correlation analysis and classical decomposition, used to confirm which
//! lagged features carry information before fitting a model.

use serde::{Deserialize, Serialize};

use crate::series::{RegularSeries, Unit};
use crate::{Error, Result, Scalar};

/// Coefficients per lag with an approximate 95% white-noise band.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelogramResult<T> {
    pub lags: Vec<usize>,
    pub coefficients: Vec<T>,
    /// `2 / sqrt(N)`.
    #[serde(rename = "band")]
    pub confidence_band: T,
}

impl<T: Scalar> CorrelogramResult<T> {
    /// Coefficient at `lag`, if computed.
    pub fn at(&self, lag: usize) -> Option<T> {
        self.lags
            .iter()
            .position(|&l| l == lag)
            .map(|i| self.coefficients[i])
    }

    /// Fraction of lags ≥ 1 whose coefficient lies inside the band.
    pub fn fraction_inside_band(&self) -> f64 {
        let inside = self
            .lags
            .iter()
            .zip(&self.coefficients)
            .filter(|(&l, _)| l >= 1)
            .filter(|(_, c)| c.abs() < self.confidence_band)
            .count();
        let total = self.lags.iter().filter(|&&l| l >= 1).count();
        inside as f64 / total.max(1) as f64
    }

    /// Plot data: one `lag coefficient` pair per line.
    pub fn to_plot_data(&self) -> String {
        let mut out = String::from("# lag coefficient\n");
        for (l, c) in self.lags.iter().zip(&self.coefficients) {
            out.push_str(&format!("{l} {c}\n"));
        }
        out
    }
}

fn band<T: Scalar>(n: usize) -> T {
    T::lit(2.0) / T::from_usize_lossy(n).sqrt()
}

fn mean<T: Scalar>(x: &[T]) -> T {
    x.iter().copied().sum::<T>() / T::from_usize_lossy(x.len())
}

/// Biased sample autocovariances `γ_0 .. γ_max_lag` (divided by N).
pub fn autocovariance<T: Scalar>(x: &[T], max_lag: usize) -> Vec<T> {
    let n = x.len();
    let m = mean(x);
    let nn = T::from_usize_lossy(n);
    (0..=max_lag)
        .map(|k| {
            (0..n - k)
                .map(|t| (x[t] - m) * (x[t + k] - m))
                .sum::<T>()
                / nn
        })
        .collect()
}

fn check_acf_input<T: Scalar>(x: &[T], max_lag: usize) -> Result<()> {
    if x.len() <= max_lag + 1 {
        return Err(Error::SeriesTooShort {
            needed: max_lag + 2,
            got: x.len(),
        });
    }
    Ok(())
}

/// Sample autocorrelation on a slice, lags `0..=max_lag`.
pub fn acf_values<T: Scalar>(x: &[T], max_lag: usize) -> Result<Vec<T>> {
    check_acf_input(x, max_lag)?;
    let g = autocovariance(x, max_lag);
    if !(g[0] > T::zero()) {
        return Err(Error::ConstantSeries);
    }
    Ok(g.iter().map(|&v| v / g[0]).collect())
}

pub fn acf<T: Scalar>(series: &RegularSeries<T>, max_lag: usize) -> Result<CorrelogramResult<T>> {
    let coefficients = acf_values(series.values(), max_lag)?;
    Ok(CorrelogramResult {
        lags: (0..=max_lag).collect(),
        coefficients,
        confidence_band: band(series.len()),
    })
}

/// Output of the Levinson–Durbin recursion.
#[derive(Debug, Clone)]
pub struct LevinsonDurbin<T> {
    /// Reflection coefficients `κ_1 .. κ_K` (the partial autocorrelations).
    pub reflection: Vec<T>,
    /// AR coefficients of the order-K predictor, `φ_1 .. φ_K`.
    pub ar: Vec<T>,
    /// Final prediction-error variance.
    pub error: T,
}

/// Solves the Yule–Walker Toeplitz system for autocovariances `r[0..=K]`.
pub fn levinson_durbin<T: Scalar>(r: &[T]) -> Result<LevinsonDurbin<T>> {
    let order = r.len().saturating_sub(1);
    let floor = r[0].abs() * T::lit(1e-12);
    let mut err = r[0];
    let mut phi: Vec<T> = Vec::with_capacity(order);
    let mut reflection = Vec::with_capacity(order);
    for k in 1..=order {
        if !(err > floor) {
            return Err(Error::SingularToeplitz { order: k });
        }
        let acc = r[k]
            - phi
                .iter()
                .enumerate()
                .map(|(j, &p)| p * r[k - 1 - j])
                .sum::<T>();
        let kappa = acc / err;
        let prev = phi.clone();
        for j in 0..k - 1 {
            phi[j] = prev[j] - kappa * prev[k - 2 - j];
        }
        phi.push(kappa);
        reflection.push(kappa);
        err = err * (T::one() - kappa * kappa);
    }
    Ok(LevinsonDurbin {
        reflection,
        ar: phi,
        error: err,
    })
}

/// Partial autocorrelation, lag 0 reported as 1 by convention.
pub fn parcor<T: Scalar>(
    series: &RegularSeries<T>,
    max_lag: usize,
) -> Result<CorrelogramResult<T>> {
    let x = series.values();
    check_acf_input(x, max_lag)?;
    let g = autocovariance(x, max_lag);
    if !(g[0] > T::zero()) {
        return Err(Error::ConstantSeries);
    }
    let ld = levinson_durbin(&g)?;
    let mut coefficients = Vec::with_capacity(max_lag + 1);
    coefficients.push(T::one());
    coefficients.extend(ld.reflection);
    Ok(CorrelogramResult {
        lags: (0..=max_lag).collect(),
        coefficients,
        confidence_band: band(series.len()),
    })
}

/// Correlation of `a_t` with `b_{t-k}` for `k = 0..=max_lag`, normalised by
/// the full-sample standard deviations of both series.
pub fn cross_correlation<T: Scalar>(
    a: &RegularSeries<T>,
    b: &RegularSeries<T>,
    max_lag: usize,
) -> Result<CorrelogramResult<T>> {
    let (x, y) = (a.values(), b.values());
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    check_acf_input(x, max_lag)?;
    let (mx, my) = (mean(x), mean(y));
    let sx = x.iter().map(|&v| (v - mx) * (v - mx)).sum::<T>();
    let sy = y.iter().map(|&v| (v - my) * (v - my)).sum::<T>();
    if !(sx > T::zero()) || !(sy > T::zero()) {
        return Err(Error::ConstantSeries);
    }
    let denom = (sx * sy).sqrt();
    let coefficients = (0..=max_lag)
        .map(|k| {
            (k..x.len())
                .map(|t| (x[t] - mx) * (y[t - k] - my))
                .sum::<T>()
                / denom
        })
        .collect();
    Ok(CorrelogramResult {
        lags: (0..=max_lag).collect(),
        coefficients,
        confidence_band: band(x.len()),
    })
}

/// Additive trend + seasonal + residual split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decomposition<T> {
    pub trend: RegularSeries<T>,
    pub seasonal: RegularSeries<T>,
    pub residual: RegularSeries<T>,
    pub period: usize,
}

fn fit_line<T: Scalar>(xs: impl Iterator<Item = (usize, T)> + Clone) -> (T, T) {
    let n = T::from_usize_lossy(xs.clone().count());
    let mx = xs.clone().map(|(i, _)| T::from_usize_lossy(i)).sum::<T>() / n;
    let my = xs.clone().map(|(_, v)| v).sum::<T>() / n;
    let (mut sxy, mut sxx) = (T::zero(), T::zero());
    for (i, v) in xs {
        let dx = T::from_usize_lossy(i) - mx;
        sxy = sxy + dx * (v - my);
        sxx = sxx + dx * dx;
    }
    let slope = if sxx > T::zero() { sxy / sxx } else { T::zero() };
    (slope, my - slope * mx)
}

/// Classical additive decomposition with a centred moving-average trend.
///
/// Even periods use the 2×`period` moving average. Trend values at the ends,
/// where the window does not fit, are extended by a least-squares line through
/// the `period` nearest interior trend values.
pub fn decompose<T: Scalar>(series: &RegularSeries<T>, period: usize) -> Result<Decomposition<T>> {
    let x = series.values();
    let n = x.len();
    if period < 2 || n < 2 * period {
        return Err(Error::SeriesTooShort {
            needed: 2 * period.max(2),
            got: n,
        });
    }
    let half = period / 2;
    let p = T::from_usize_lossy(period);
    let mut trend = vec![T::zero(); n];
    for t in half..n - half {
        trend[t] = if period % 2 == 0 {
            let edge = (x[t - half] + x[t + half]) * T::lit(0.5);
            (edge + x[t - half + 1..t + half].iter().copied().sum::<T>()) / p
        } else {
            x[t - half..=t + half].iter().copied().sum::<T>() / p
        };
    }
    let (lo, hi) = (half, n - half);
    let (s0, c0) = fit_line((lo..lo + period).map(|i| (i, trend[i])));
    for (t, v) in trend.iter_mut().enumerate().take(lo) {
        *v = s0 * T::from_usize_lossy(t) + c0;
    }
    let (s1, c1) = fit_line((hi - period..hi).map(|i| (i, trend[i])));
    for (t, v) in trend.iter_mut().enumerate().skip(hi) {
        *v = s1 * T::from_usize_lossy(t) + c1;
    }

    let mut sums = vec![T::zero(); period];
    let mut counts = vec![0usize; period];
    for t in lo..hi {
        sums[t % period] = sums[t % period] + (x[t] - trend[t]);
        counts[t % period] += 1;
    }
    let mut profile: Vec<T> = sums
        .iter()
        .zip(&counts)
        .map(|(&s, &c)| s / T::from_usize_lossy(c))
        .collect();
    let centre = mean(&profile);
    profile.iter_mut().for_each(|v| *v = *v - centre);

    let seasonal: Vec<T> = (0..n).map(|t| profile[t % period]).collect();
    let residual: Vec<T> = (0..n).map(|t| x[t] - trend[t] - seasonal[t]).collect();
    let unit = match series.unit() {
        Unit::DegC => Unit::DegC,
        _ => Unit::Kwh,
    };
    let mk = |v| RegularSeries::new(series.start(), series.step(), v, unit);
    Ok(Decomposition {
        trend: mk(trend)?,
        seasonal: mk(seasonal)?,
        residual: mk(residual)?,
        period,
    })
}

/// Rolling mean and (population) variance over trailing windows of `window`
/// steps; the first value covers indices `0..window`.
pub fn rolling_stats<T: Scalar>(x: &[T], window: usize) -> Result<(Vec<T>, Vec<T>)> {
    if window == 0 || x.len() < window {
        return Err(Error::SeriesTooShort {
            needed: window.max(1),
            got: x.len(),
        });
    }
    let w = T::from_usize_lossy(window);
    let mut means = Vec::with_capacity(x.len() - window + 1);
    let mut vars = Vec::with_capacity(x.len() - window + 1);
    for chunk in x.windows(window) {
        let m = chunk.iter().copied().sum::<T>() / w;
        let v = chunk.iter().map(|&c| (c - m) * (c - m)).sum::<T>() / w;
        means.push(m);
        vars.push(v);
    }
    Ok((means, vars))
}
