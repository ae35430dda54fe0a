//! Statistical baselines: ARIMA(p, d, q) fitted by conditional sum of
//! squares, and the seasonal-naive forecast.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::acf_values;
use crate::series::RegularSeries;
use crate::{Error, Result, Scalar};

pub const MAX_P: usize = 5;
pub const MAX_Q: usize = 5;

const NM_MAX_ITER: usize = 500;
const NM_DIAMETER: f64 = 1e-8;
const STATIONARITY_MARGIN: f64 = 1e-6;
/// Lag-1 autocorrelation above which the series is differenced once.
const DIFFERENCE_THRESHOLD: f64 = 0.95;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ArimaOrder {
    pub p: usize,
    pub d: usize,
    pub q: usize,
}

impl ArimaOrder {
    pub fn new(p: usize, d: usize, q: usize) -> Result<Self> {
        if p > MAX_P || q > MAX_Q || d > 1 {
            return Err(Error::InvalidConfig(format!(
                "ARIMA order ({p},{d},{q}) outside p,q <= 5, d <= 1"
            )));
        }
        Ok(Self { p, d, q })
    }

    fn n_params(&self) -> usize {
        self.p + self.q + 1
    }
}

/// `w_t = c + Σ φ_i w_{t-i} + e_t + Σ θ_j e_{t-j}` where `w` is the series
/// differenced `d` times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArimaModel<T> {
    pub order: ArimaOrder,
    pub ar_coefs: Vec<T>,
    pub ma_coefs: Vec<T>,
    pub intercept: T,
    /// CSS residual variance.
    pub sigma2: T,
    pub aic: T,
    /// Index (in the differenced series) of the first residual counted.
    pub conditioning: usize,
}

fn difference(y: &[f64], d: usize) -> Vec<f64> {
    if d == 0 {
        y.to_vec()
    } else {
        y.windows(2).map(|w| w[1] - w[0]).collect()
    }
}

/// Residuals with pre-sample residuals set to zero. Entries before `start`
/// are zero.
fn css_residuals(w: &[f64], c: f64, phi: &[f64], theta: &[f64], start: usize) -> Vec<f64> {
    let mut e = vec![0.0; w.len()];
    for t in start..w.len() {
        let mut v = w[t] - c;
        for (i, &a) in phi.iter().enumerate() {
            v -= a * w[t - 1 - i];
        }
        for (j, &b) in theta.iter().enumerate() {
            if t > j {
                v -= b * e[t - 1 - j];
            }
        }
        e[t] = v;
    }
    e
}

/// Step-down recursion from AR coefficients to reflection coefficients.
/// True when every `|κ| < 1 − margin`, i.e. all roots lie outside the unit
/// circle.
pub fn is_stationary(phi: &[f64]) -> bool {
    let mut a = phi.to_vec();
    while let Some(&k) = a.last() {
        if !(k.abs() < 1.0 - STATIONARITY_MARGIN) {
            return false;
        }
        let m = a.len();
        let denom = 1.0 - k * k;
        a = (0..m - 1).map(|i| (a[i] + k * a[m - 2 - i]) / denom).collect();
    }
    true
}

fn is_invertible(theta: &[f64]) -> bool {
    let neg: Vec<f64> = theta.iter().map(|t| -t).collect();
    is_stationary(&neg)
}

/// Least-squares AR(p) with intercept on `w[start..]`.
fn ols_ar(w: &[f64], p: usize, start: usize) -> (f64, Vec<f64>) {
    let n = w.len() - start;
    let x = DMatrix::from_fn(n, p + 1, |r, c| if c == 0 { 1.0 } else { w[start + r - c] });
    let y = DVector::from_iterator(n, w[start..].iter().copied());
    let xtx = x.transpose() * &x;
    let xty = x.transpose() * y;
    match xtx.cholesky() {
        Some(ch) => {
            let b = ch.solve(&xty);
            (b[0], b.iter().skip(1).copied().collect())
        }
        None => (w[start..].iter().sum::<f64>() / n as f64, vec![0.0; p]),
    }
}

/// Nelder–Mead with reflection 1, expansion 2, contraction 0.5 and shrink
/// 0.5. Stops after `NM_MAX_ITER` iterations or when the simplex diameter
/// drops below `NM_DIAMETER`.
pub fn nelder_mead<F: Fn(&[f64]) -> f64>(f: F, x0: &[f64], scale: &[f64]) -> (Vec<f64>, f64) {
    let n = x0.len();
    let eval = |x: &[f64]| {
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((x0.to_vec(), eval(x0)));
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += scale[i];
        let v = eval(&x);
        simplex.push((x, v));
    }
    let combine = |a: &[f64], b: &[f64], t: f64| -> Vec<f64> {
        a.iter().zip(b).map(|(&a, &b)| a + t * (b - a)).collect()
    };
    for _ in 0..NM_MAX_ITER {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let diameter = simplex
            .iter()
            .flat_map(|a| simplex.iter().map(move |b| (a, b)))
            .map(|(a, b)| {
                a.0.iter()
                    .zip(&b.0)
                    .map(|(x, y)| (x - y) * (x - y))
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0, f64::max);
        if diameter < NM_DIAMETER {
            break;
        }
        let mut centroid = vec![0.0; n];
        for (x, _) in &simplex[..n] {
            for (c, v) in centroid.iter_mut().zip(x) {
                *c += v / n as f64;
            }
        }
        let worst = simplex[n].clone();
        let reflected = combine(&centroid, &worst.0, -1.0);
        let fr = eval(&reflected);
        if fr < simplex[0].1 {
            let expanded = combine(&centroid, &worst.0, -2.0);
            let fe = eval(&expanded);
            simplex[n] = if fe < fr { (expanded, fe) } else { (reflected, fr) };
            continue;
        }
        if fr < simplex[n - 1].1 {
            simplex[n] = (reflected, fr);
            continue;
        }
        let (contracted, fc) = if fr < worst.1 {
            let x = combine(&centroid, &reflected, 0.5);
            let v = eval(&x);
            (x, v)
        } else {
            let x = combine(&centroid, &worst.0, 0.5);
            let v = eval(&x);
            (x, v)
        };
        if fc < worst.1.min(fr) {
            simplex[n] = (contracted, fc);
            continue;
        }
        let best = simplex[0].0.clone();
        for (x, v) in simplex.iter_mut().skip(1) {
            *x = combine(&best, x, 0.5);
            *v = eval(x);
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    simplex.swap_remove(0)
}

fn fit_differenced(w: &[f64], p: usize, q: usize, start: usize) -> Result<(f64, Vec<f64>, Vec<f64>, f64)> {
    let (c0, phi0) = ols_ar(w, p, start);
    let phi0 = if is_stationary(&phi0) { phi0 } else { vec![0.0; p] };
    let mut x0 = vec![c0];
    x0.extend_from_slice(&phi0);
    x0.extend(std::iter::repeat(0.0).take(q));
    let spread = {
        let m = w[start..].iter().sum::<f64>() / (w.len() - start) as f64;
        (w[start..].iter().map(|v| (v - m).powi(2)).sum::<f64>() / (w.len() - start) as f64).sqrt()
    };
    let mut scale = vec![0.1 * spread.max(1e-3)];
    scale.extend(std::iter::repeat(0.1).take(p + q));
    let sse = |x: &[f64]| {
        let (phi, theta) = x[1..].split_at(p);
        if !is_stationary(phi) || !is_invertible(theta) {
            return f64::INFINITY;
        }
        css_residuals(w, x[0], phi, theta, start)[start..]
            .iter()
            .map(|e| e * e)
            .sum()
    };
    let (x, f) = if p + q == 0 {
        // the intercept-only fit has a closed form
        let c = w[start..].iter().sum::<f64>() / (w.len() - start) as f64;
        let x = vec![c];
        let f = sse(&x);
        (x, f)
    } else {
        nelder_mead(sse, &x0, &scale)
    };
    let (phi, theta) = x[1..].split_at(p);
    if !f.is_finite() || !is_stationary(phi) {
        return Err(Error::NonStationary(format!("AR coefficients {phi:?}")));
    }
    Ok((x[0], phi.to_vec(), theta.to_vec(), f))
}

fn fit_with_start<T: Scalar>(y: &[f64], order: ArimaOrder, start: usize) -> Result<ArimaModel<T>> {
    let w = difference(y, order.d);
    let needed = 10 * order.n_params() + start;
    if w.len() < needed {
        return Err(Error::SeriesTooShort {
            needed: needed + order.d,
            got: y.len(),
        });
    }
    let (c, phi, theta, sse) = fit_differenced(&w, order.p, order.q, start)?;
    let n = (w.len() - start) as f64;
    let sigma2 = sse / n;
    let aic = n * sigma2.max(f64::MIN_POSITIVE).ln() + 2.0 * order.n_params() as f64;
    Ok(ArimaModel {
        order,
        ar_coefs: phi.into_iter().map(T::lit).collect(),
        ma_coefs: theta.into_iter().map(T::lit).collect(),
        intercept: T::lit(c),
        sigma2: T::lit(sigma2),
        aic: T::lit(aic),
        conditioning: start,
    })
}

fn to_f64<T: Scalar>(series: &RegularSeries<T>) -> Vec<f64> {
    series.values().iter().map(|v| v.as_f64()).collect()
}

/// CSS fit conditioned on the first `p` values of the differenced series.
pub fn fit_arima<T: Scalar>(series: &RegularSeries<T>, order: ArimaOrder) -> Result<ArimaModel<T>> {
    ArimaOrder::new(order.p, order.d, order.q)?;
    fit_with_start(&to_f64(series), order, order.p)
}

/// Picks `d` from the lag-1 autocorrelation, then `(p, q)` on the grid
/// `0..=max_p × 0..=max_q` by AIC. Every candidate is conditioned on the same
/// number of leading values so the criteria are comparable. Ties go to the
/// smaller `p + q`, then the smaller `p`.
pub fn select_order<T: Scalar>(
    series: &RegularSeries<T>,
    max_p: usize,
    max_q: usize,
) -> Result<ArimaModel<T>> {
    ArimaOrder::new(max_p, 0, max_q)?;
    let y = to_f64(series);
    let r1 = acf_values(&y, 1)?[1];
    let d = usize::from(r1 > DIFFERENCE_THRESHOLD);
    let grid: Vec<ArimaOrder> = (0..=max_p)
        .flat_map(|p| (0..=max_q).map(move |q| ArimaOrder { p, d, q }))
        .collect();
    let fits: Vec<ArimaModel<T>> = grid
        .par_iter()
        .filter_map(|&o| fit_with_start(&y, o, max_p).ok())
        .collect();
    fits.into_iter()
        .min_by(|a, b| {
            a.aic
                .as_f64()
                .total_cmp(&b.aic.as_f64())
                .then((a.order.p + a.order.q).cmp(&(b.order.p + b.order.q)))
                .then(a.order.p.cmp(&b.order.p))
        })
        .ok_or(Error::AllCandidatesFailed)
}

/// Forecasts `horizon` steps past the end of `history` (the series the model
/// was fitted on, or its continuation). Future innovations are zero.
pub fn forecast_arima<T: Scalar>(
    model: &ArimaModel<T>,
    history: &RegularSeries<T>,
    horizon: usize,
) -> Result<RegularSeries<T>> {
    let y = to_f64(history);
    let w = difference(&y, model.order.d);
    let p = model.order.p;
    let start = model.conditioning.max(p);
    if w.len() <= start {
        return Err(Error::SeriesTooShort {
            needed: start + 1 + model.order.d,
            got: y.len(),
        });
    }
    let phi: Vec<f64> = model.ar_coefs.iter().map(|v| v.as_f64()).collect();
    let theta: Vec<f64> = model.ma_coefs.iter().map(|v| v.as_f64()).collect();
    let c = model.intercept.as_f64();
    let mut e = css_residuals(&w, c, &phi, &theta, start);
    let mut w = w;
    let n = w.len();
    for t in n..n + horizon {
        let mut v = c;
        for (i, &a) in phi.iter().enumerate() {
            v += a * w[t - 1 - i];
        }
        for (j, &b) in theta.iter().enumerate() {
            v += b * e[t - 1 - j];
        }
        w.push(v);
        e.push(0.0);
    }
    let mut out = w[n..].to_vec();
    if model.order.d == 1 {
        let mut level = *y.last().expect("non-empty history");
        for v in &mut out {
            level += *v;
            *v = level;
        }
    }
    RegularSeries::new(
        history.timestamp(history.len() - 1) + history.step(),
        history.step(),
        out.into_iter().map(T::lit).collect(),
        history.unit(),
    )
}

/// Repeats the last `period` values of `history` over the horizon.
pub fn seasonal_naive<T: Scalar>(
    history: &RegularSeries<T>,
    period: usize,
    horizon: usize,
) -> Result<RegularSeries<T>> {
    let n = history.len();
    if period == 0 || n < period {
        return Err(Error::SeriesTooShort {
            needed: period.max(1),
            got: n,
        });
    }
    let v = history.values();
    let out = (0..horizon).map(|k| v[n - period + k % period]).collect();
    RegularSeries::new(
        history.timestamp(n - 1) + history.step(),
        history.step(),
        out,
        history.unit(),
    )
}
