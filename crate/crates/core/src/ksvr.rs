//! ε-insensitive support vector regression with an RBF kernel.
//!
//! The dual is solved in the single-coefficient form `β_i = α_i − α_i*`:
//!
//! ```text
//! maximise  W(β) = Σ y_i β_i − ε Σ |β_i| − ½ Σ_ij β_i β_j K(x_i, x_j)
//! s.t.      Σ β_i = 0,  −C ≤ β_i ≤ C
//! ```
//!
//! by sequential minimal optimisation: each step picks the maximal violating
//! pair and maximises `W` exactly along the feasible direction
//! `(β_i + δ, β_j − δ)`, which is a concave piecewise quadratic in `δ` with
//! kinks where either coefficient changes sign.
//!
//! Predictions are `f(x) = Σ β_i K(x_i, x) + b`. Features and target are
//! z-scored with [`Scalers`] fitted on the training split; a model carries its
//! scalers and works in raw units from the outside.

use serde::{Deserialize, Serialize};

use crate::{Error, Result, Scalar};

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams<T> {
    /// Box constraint.
    pub c: T,
    /// RBF width.
    pub gamma: T,
    /// Tube half-width.
    pub epsilon: T,
}

impl<T: Scalar> Hyperparams<T> {
    pub fn new(c: T, gamma: T, epsilon: T) -> Result<Self> {
        let h = Self { c, gamma, epsilon };
        h.validate()?;
        Ok(h)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c > T::zero() && self.c.is_finite()) {
            return Err(Error::InvalidHyperparams(format!("C must be > 0, got {}", self.c)));
        }
        if !(self.gamma > T::zero() && self.gamma.is_finite()) {
            return Err(Error::InvalidHyperparams(format!(
                "gamma must be > 0, got {}",
                self.gamma
            )));
        }
        if !(self.epsilon >= T::zero() && self.epsilon.is_finite()) {
            return Err(Error::InvalidHyperparams(format!(
                "epsilon must be >= 0, got {}",
                self.epsilon
            )));
        }
        Ok(())
    }
}

/// Lag-1 features and the accumulated consumption to predict.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureRow<T> {
    /// Accumulated consumption at `t − 1`.
    pub h_lag1: T,
    /// Feel-like temperature at `t − 1`.
    pub theta_lag1: T,
    /// Accumulated consumption at `t`.
    pub target: T,
}

impl<T: Scalar> FeatureRow<T> {
    pub fn new(h_lag1: T, theta_lag1: T, target: T) -> Self {
        Self {
            h_lag1,
            theta_lag1,
            target,
        }
    }

    pub fn features(&self) -> [T; 2] {
        [self.h_lag1, self.theta_lag1]
    }

    fn is_finite(&self) -> bool {
        self.h_lag1.is_finite() && self.theta_lag1.is_finite() && self.target.is_finite()
    }
}

/// z-score transform `(x − mean) / std`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scaler<T> {
    pub mean: T,
    pub std: T,
}

impl<T: Scalar> Scaler<T> {
    pub fn identity() -> Self {
        Self {
            mean: T::zero(),
            std: T::one(),
        }
    }

    /// Population statistics; a zero spread falls back to `std = 1`.
    pub fn fit(values: impl Iterator<Item = T> + Clone) -> Self {
        let n = T::from_usize_lossy(values.clone().count());
        let mean = values.clone().sum::<T>() / n;
        let var = values.map(|v| (v - mean) * (v - mean)).sum::<T>() / n;
        let std = var.sqrt();
        Self {
            mean,
            std: if std > T::zero() { std } else { T::one() },
        }
    }

    #[inline]
    pub fn transform(&self, x: T) -> T {
        (x - self.mean) / self.std
    }

    #[inline]
    pub fn inverse(&self, z: T) -> T {
        z * self.std + self.mean
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scalers<T> {
    pub features: [Scaler<T>; 2],
    pub target: Scaler<T>,
}

impl<T: Scalar> Scalers<T> {
    pub fn identity() -> Self {
        Self {
            features: [Scaler::identity(); 2],
            target: Scaler::identity(),
        }
    }

    pub fn fit(rows: &[FeatureRow<T>]) -> Self {
        Self {
            features: [
                Scaler::fit(rows.iter().map(|r| r.h_lag1)),
                Scaler::fit(rows.iter().map(|r| r.theta_lag1)),
            ],
            target: Scaler::fit(rows.iter().map(|r| r.target)),
        }
    }

    pub fn transform_features(&self, x: [T; 2]) -> [T; 2] {
        [
            self.features[0].transform(x[0]),
            self.features[1].transform(x[1]),
        ]
    }

    pub fn transform_row(&self, r: &FeatureRow<T>) -> FeatureRow<T> {
        let [h, th] = self.transform_features(r.features());
        FeatureRow::new(h, th, self.target.transform(r.target))
    }

    pub fn transform_rows(&self, rows: &[FeatureRow<T>]) -> Vec<FeatureRow<T>> {
        rows.iter().map(|r| self.transform_row(r)).collect()
    }
}

/// `exp(−γ ‖x − y‖²)`.
#[inline]
pub fn rbf_kernel<T: Scalar>(x: &[T; 2], y: &[T; 2], gamma: T) -> T {
    let d0 = x[0] - y[0];
    let d1 = x[1] - y[1];
    (-gamma * (d0 * d0 + d1 * d1)).exp()
}

/// Trained regressor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvrModel<T> {
    /// Support vectors in standardized feature space.
    pub support_vectors: Vec<[T; 2]>,
    /// `β_i = α_i − α_i*`, one per support vector.
    pub dual_coefs: Vec<T>,
    pub bias: T,
    pub hyper: Hyperparams<T>,
    pub feature_scaler: [Scaler<T>; 2],
    pub target_scaler: Scaler<T>,
    /// Whether the KKT tolerance was met before the update budget ran out.
    pub converged: bool,
    pub iterations: usize,
    pub max_violation: T,
}

#[derive(Serialize)]
struct ModelDocRef<'a, T> {
    format_version: u32,
    #[serde(flatten)]
    model: &'a SvrModel<T>,
}

#[derive(Deserialize)]
struct ModelDoc<T> {
    format_version: u32,
    #[serde(flatten)]
    model: SvrModel<T>,
}

impl<T: Scalar> SvrModel<T> {
    /// Model without support vectors that always predicts `value`.
    pub fn constant(value: T) -> Self {
        Self {
            support_vectors: Vec::new(),
            dual_coefs: Vec::new(),
            bias: value,
            hyper: Hyperparams {
                c: T::one(),
                gamma: T::one(),
                epsilon: T::lit(0.1),
            },
            feature_scaler: [Scaler::identity(); 2],
            target_scaler: Scaler::identity(),
            converged: true,
            iterations: 0,
            max_violation: T::zero(),
        }
    }

    pub fn with_scalers(mut self, scalers: Scalers<T>) -> Self {
        self.feature_scaler = scalers.features;
        self.target_scaler = scalers.target;
        self
    }

    pub fn scalers(&self) -> Scalers<T> {
        Scalers {
            features: self.feature_scaler,
            target: self.target_scaler,
        }
    }

    /// Regression function in standardized units.
    pub fn decision(&self, z: &[T; 2]) -> T {
        self.support_vectors
            .iter()
            .zip(&self.dual_coefs)
            .map(|(sv, &b)| b * rbf_kernel(sv, z, self.hyper.gamma))
            .sum::<T>()
            + self.bias
    }

    /// Prediction for raw features `(h^{t−1}, θ^{t−1})`, in raw target units.
    pub fn predict(&self, x: [T; 2]) -> T {
        let z = self.scalers().transform_features(x);
        self.target_scaler.inverse(self.decision(&z))
    }

    pub fn predict_rows(&self, rows: &[FeatureRow<T>]) -> Vec<T> {
        rows.iter().map(|r| self.predict(r.features())).collect()
    }

    /// `(ζ_i, ζ_i*)`: how far each row's target lies above/below the ε-tube,
    /// in standardized units.
    pub fn slacks(&self, rows: &[FeatureRow<T>]) -> Vec<(T, T)> {
        let sc = self.scalers();
        rows.iter()
            .map(|r| {
                let z = sc.transform_row(r);
                let res = z.target - self.decision(&[z.h_lag1, z.theta_lag1]);
                (
                    (res - self.hyper.epsilon).max(T::zero()),
                    (-res - self.hyper.epsilon).max(T::zero()),
                )
            })
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&ModelDocRef {
            format_version: MODEL_FORMAT_VERSION,
            model: self,
        })?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let doc: ModelDoc<T> = serde_json::from_str(s)?;
        if doc.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::UnsupportedVersion(doc.format_version));
        }
        doc.model.hyper.validate()?;
        if doc.model.support_vectors.len() != doc.model.dual_coefs.len() {
            return Err(Error::LengthMismatch {
                left: doc.model.support_vectors.len(),
                right: doc.model.dual_coefs.len(),
            });
        }
        Ok(doc.model)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Step {
    /// A pair was updated.
    Updated { i: usize, j: usize },
    /// Maximum KKT violation is within tolerance.
    Converged,
}

/// SMO state for one training problem. Exposed so callers can step the
/// solver and inspect the dual objective between updates.
#[derive(Debug, Clone)]
pub struct SmoSolver<T> {
    x: Vec<[T; 2]>,
    y: Vec<T>,
    gram: Vec<T>,
    hyper: Hyperparams<T>,
    beta: Vec<T>,
    /// `g_i = y_i − Σ_k β_k K_ik`.
    grad: Vec<T>,
    iterations: usize,
    /// `g_i + up_off[i]` is the up rate; `−∞` when `β_i = C`.
    up_off: Vec<T>,
    /// `g_j + down_off[j]` is the down level; `+∞` when `β_j = −C`.
    down_off: Vec<T>,
    /// Working pair picked during the last gradient sweep.
    next: Option<Option<(usize, usize, T)>>,
}

/// Running arg-max of the up rates and arg-min of the down levels.
#[derive(Clone, Copy)]
struct Pick<T> {
    up: T,
    i: usize,
    down: T,
    j: usize,
}

impl<T: Scalar> Pick<T> {
    fn new() -> Self {
        Self {
            up: T::neg_infinity(),
            i: usize::MAX,
            down: T::infinity(),
            j: usize::MAX,
        }
    }

    #[inline(always)]
    fn visit(&mut self, k: usize, u: T, d: T) {
        if u > self.up {
            self.up = u;
            self.i = k;
        }
        if d < self.down {
            self.down = d;
            self.j = k;
        }
    }

    /// Combines two partial picks; ties keep the lower index.
    fn merge(self, o: Self) -> Self {
        let (up, i) = if o.up > self.up || (o.up == self.up && o.i < self.i) {
            (o.up, o.i)
        } else {
            (self.up, self.i)
        };
        let (down, j) = if o.down < self.down || (o.down == self.down && o.j < self.j) {
            (o.down, o.j)
        } else {
            (self.down, self.j)
        };
        Self { up, i, down, j }
    }

    fn finish(self) -> Option<(usize, usize, T)> {
        (self.i != usize::MAX && self.j != usize::MAX).then(|| (self.i, self.j, self.up - self.down))
    }
}

fn offsets<T: Scalar>(b: T, c: T, eps: T) -> (T, T) {
    let up = if b >= c {
        T::neg_infinity()
    } else if b >= T::zero() {
        -eps
    } else {
        eps
    };
    let down = if b <= -c {
        T::infinity()
    } else if b <= T::zero() {
        eps
    } else {
        -eps
    };
    (up, down)
}

impl<T: Scalar> SmoSolver<T> {
    pub fn new(rows: &[FeatureRow<T>], hyper: Hyperparams<T>) -> Result<Self> {
        hyper.validate()?;
        if rows.len() < 2 {
            return Err(Error::TooFewPoints {
                needed: 2,
                got: rows.len(),
            });
        }
        if let Some(index) = rows.iter().position(|r| !r.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        let x: Vec<[T; 2]> = rows.iter().map(|r| r.features()).collect();
        let y: Vec<T> = rows.iter().map(|r| r.target).collect();
        let m = x.len();
        let mut gram = vec![T::zero(); m * m];
        for i in 0..m {
            gram[i * m + i] = T::one();
            for j in 0..i {
                let k = rbf_kernel(&x[i], &x[j], hyper.gamma);
                gram[i * m + j] = k;
                gram[j * m + i] = k;
            }
        }
        Ok(Self {
            grad: y.clone(),
            beta: vec![T::zero(); m],
            x,
            y,
            gram,
            up_off: vec![-hyper.epsilon; m],
            down_off: vec![hyper.epsilon; m],
            hyper,
            iterations: 0,
            next: None,
        })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn beta(&self) -> &[T] {
        &self.beta
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn gram(&self) -> &[T] {
        &self.gram
    }

    /// Current value of `W(β)`.
    pub fn dual_objective(&self) -> T {
        let half = T::lit(0.5);
        self.beta
            .iter()
            .zip(&self.y)
            .zip(&self.grad)
            .map(|((&b, &y), &g)| half * b * (y + g) - self.hyper.epsilon * b.abs())
            .sum()
    }

    #[inline]
    fn up_rate(&self, i: usize) -> T {
        if self.beta[i] >= T::zero() {
            self.grad[i] - self.hyper.epsilon
        } else {
            self.grad[i] + self.hyper.epsilon
        }
    }

    #[inline]
    fn down_level(&self, j: usize) -> T {
        if self.beta[j] <= T::zero() {
            self.grad[j] + self.hyper.epsilon
        } else {
            self.grad[j] - self.hyper.epsilon
        }
    }

    /// Maximal violating pair `(i, j, violation)`; ties go to the lowest index.
    fn select(&self) -> Option<(usize, usize, T)> {
        let mut pick = Pick::new();
        for k in 0..self.beta.len() {
            pick.visit(k, self.grad[k] + self.up_off[k], self.grad[k] + self.down_off[k]);
        }
        pick.finish()
    }

    /// Largest KKT violation at the current iterate.
    pub fn max_violation(&self) -> T {
        self.select()
            .map(|(_, _, v)| v.max(T::zero()))
            .unwrap_or(T::zero())
    }

    /// Change of `W` when moving by `δ` along `(e_i − e_j)`.
    fn gain(&self, i: usize, j: usize, eta: T, delta: T) -> T {
        let (bi, bj) = (self.beta[i], self.beta[j]);
        delta * (self.grad[i] - self.grad[j])
            - T::lit(0.5) * eta * delta * delta
            - self.hyper.epsilon * ((bi + delta).abs() - bi.abs() + (bj - delta).abs() - bj.abs())
    }

    /// Exact maximiser of the pair objective over the feasible segment.
    fn best_delta(&self, i: usize, j: usize) -> T {
        let c = self.hyper.c;
        let eps = self.hyper.epsilon;
        let m = self.len();
        let (bi, bj) = (self.beta[i], self.beta[j]);
        let eta = (self.gram[i * m + i] + self.gram[j * m + j] - T::lit(2.0) * self.gram[i * m + j])
            .max(T::zero());
        let lo = (-c - bi).max(bj - c);
        let hi = (c - bi).min(bj + c);

        let mut knots = [lo, hi, lo, lo];
        let mut n = 2;
        for k in [-bi, bj] {
            if k > lo && k < hi {
                knots[n] = k;
                n += 1;
            }
        }
        let knots = &mut knots[..n];
        knots.sort_by(|a, b| a.partial_cmp(b).expect("finite knots"));

        let mut candidates = [T::zero(); 7];
        candidates[..n].copy_from_slice(knots);
        let mut nc = n;
        let slope0 = self.grad[i] - self.grad[j];
        let tiny = T::epsilon();
        if eta > tiny {
            for w in knots.windows(2) {
                let (a, b) = (w[0], w[1]);
                if a == b {
                    continue;
                }
                let mid = (a + b) * T::lit(0.5);
                let si = (bi + mid).signum();
                let sj = (bj - mid).signum();
                let slope = slope0 - eps * (si - sj);
                candidates[nc] = (slope / eta).max(a).min(b);
                nc += 1;
            }
        }
        let candidates = &candidates[..nc];
        let mut best = T::zero();
        let mut best_gain = T::zero();
        for &d in candidates {
            let g = self.gain(i, j, eta, d);
            if g > best_gain {
                best_gain = g;
                best = d;
            }
        }
        best
    }

    /// One SMO update.
    pub fn step(&mut self, tol: T) -> Step {
        let pair = match self.next.take() {
            Some(p) => p,
            None => self.select(),
        };
        let Some((i, j, violation)) = pair else {
            return Step::Converged;
        };
        if violation <= tol || i == j {
            return Step::Converged;
        }
        let delta = self.best_delta(i, j);
        if delta == T::zero() {
            // numerically flat direction; nothing left to gain on this pair
            return Step::Converged;
        }
        let c = self.hyper.c;
        let (old_i, old_j) = (self.beta[i], self.beta[j]);
        // land exactly on kinks and box edges so sign and bound tests stay exact
        let settle = |v: T| {
            let v = v.max(-c).min(c);
            if (c - v.abs()) <= T::epsilon() * c {
                c.copysign(v)
            } else {
                v
            }
        };
        let new_i = if delta == -old_i { T::zero() } else { settle(old_i + delta) };
        let new_j = if delta == old_j { T::zero() } else { settle(old_j - delta) };
        let (di, dj) = (new_i - old_i, new_j - old_j);
        self.beta[i] = new_i;
        self.beta[j] = new_j;
        let m = self.len();
        let (row_i, row_j) = (&self.gram[i * m..(i + 1) * m], &self.gram[j * m..(j + 1) * m]);
        // the next working pair is picked in the same sweep as the gradient update
        for k in [i, j] {
            (self.up_off[k], self.down_off[k]) = offsets(self.beta[k], c, self.hyper.epsilon);
        }
        // four independent lanes break the compare-select dependency chain
        let mut lanes = [Pick::new(); 4];
        let (grad, up_off, down_off) = (&mut self.grad[..m], &self.up_off[..m], &self.down_off[..m]);
        for k in 0..m {
            let g = grad[k] - di * row_i[k] - dj * row_j[k];
            grad[k] = g;
            lanes[k & 3].visit(k, g + up_off[k], g + down_off[k]);
        }
        let pick = lanes[0].merge(lanes[1]).merge(lanes[2].merge(lanes[3]));
        self.next = Some(pick.finish());
        self.iterations += 1;
        Step::Updated { i, j }
    }

    /// Threshold `b`: mean over free coefficients, else the midpoint of the
    /// feasible interval.
    fn bias(&self) -> T {
        let c = self.hyper.c;
        let eps = self.hyper.epsilon;
        let mut sum = T::zero();
        let mut count = 0usize;
        for (k, &b) in self.beta.iter().enumerate() {
            if b != T::zero() && b.abs() < c {
                sum = sum + self.grad[k] - eps * b.signum();
                count += 1;
            }
        }
        if count > 0 {
            return sum / T::from_usize_lossy(count);
        }
        let mut up = T::neg_infinity();
        let mut down = T::infinity();
        for k in 0..self.beta.len() {
            if self.beta[k] < c {
                up = up.max(self.up_rate(k));
            }
            if self.beta[k] > -c {
                down = down.min(self.down_level(k));
            }
        }
        match (up.is_finite(), down.is_finite()) {
            (true, true) => (up + down) * T::lit(0.5),
            (true, false) => up,
            (false, true) => down,
            _ => T::zero(),
        }
    }

    /// Runs to convergence or until `max_passes` updates have been made.
    pub fn solve(mut self, tol: T, max_passes: usize) -> SvrModel<T> {
        let mut converged = false;
        while self.iterations < max_passes {
            if self.step(tol) == Step::Converged {
                converged = true;
                break;
            }
        }
        if !converged {
            converged = self.max_violation() <= tol;
        }
        self.finish(converged)
    }

    pub fn finish(self, converged: bool) -> SvrModel<T> {
        let bias = self.bias();
        let max_violation = self.max_violation();
        let (support_vectors, dual_coefs) = self
            .x
            .iter()
            .zip(&self.beta)
            .filter(|(_, &b)| b != T::zero())
            .map(|(x, &b)| (*x, b))
            .unzip();
        SvrModel {
            support_vectors,
            dual_coefs,
            bias,
            hyper: self.hyper,
            feature_scaler: [Scaler::identity(); 2],
            target_scaler: Scaler::identity(),
            converged,
            iterations: self.iterations,
            max_violation,
        }
    }
}

pub const DEFAULT_TOL: f64 = 1e-3;

/// Default update budget, `10·m²`.
pub fn default_max_passes(m: usize) -> usize {
    10 * m * m
}

/// Trains on rows that are already in the units the model should work in
/// (usually standardized). The returned model carries identity scalers.
pub fn train<T: Scalar>(
    rows: &[FeatureRow<T>],
    hyper: Hyperparams<T>,
    tol: T,
    max_passes: usize,
) -> Result<SvrModel<T>> {
    if !(tol > T::zero()) {
        return Err(Error::InvalidConfig(format!("tol must be > 0, got {tol}")));
    }
    Ok(SmoSolver::new(rows, hyper)?.solve(tol, max_passes))
}

/// Fits scalers on `rows`, trains in standardized space and attaches them.
pub fn train_standardized<T: Scalar>(
    rows: &[FeatureRow<T>],
    hyper: Hyperparams<T>,
    tol: T,
) -> Result<SvrModel<T>> {
    let scalers = Scalers::fit(rows);
    train_with_scalers(rows, scalers, hyper, tol)
}

/// Trains with externally fitted scalers (e.g. from a different split).
pub fn train_with_scalers<T: Scalar>(
    rows: &[FeatureRow<T>],
    scalers: Scalers<T>,
    hyper: Hyperparams<T>,
    tol: T,
) -> Result<SvrModel<T>> {
    let z = scalers.transform_rows(rows);
    Ok(train(&z, hyper, tol, default_max_passes(z.len()))?.with_scalers(scalers))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::XorShift64Star;

    fn hyper(c: f64, gamma: f64, eps: f64) -> Hyperparams<f64> {
        Hyperparams::new(c, gamma, eps).unwrap()
    }

    fn random_rows(m: usize, seed: u64) -> Vec<FeatureRow<f64>> {
        let mut r = XorShift64Star::new(seed);
        (0..m)
            .map(|_| FeatureRow::new(r.normal(), r.normal(), r.normal()))
            .collect()
    }

    #[test]
    fn kernel_examples() {
        assert_eq!(rbf_kernel(&[0.3, -2.0], &[0.3, -2.0], 7.0), 1.0);
        assert!((rbf_kernel::<f64>(&[0.0, 0.0], &[1.0, 0.0], 1.0) - 0.367_879_441_171_442_3).abs() < 1e-15);
        assert!((rbf_kernel(&[1.0, 2.0], &[3.0, 1.0], 0.5) - (-2.5f64).exp()).abs() < 1e-15);
        assert!((rbf_kernel::<f64>(&[1.0, 2.0], &[3.0, 1.0], 0.5) - 0.082_085).abs() < 1e-6);
    }

    #[test]
    fn hyperparams_validation() {
        assert!(Hyperparams::new(0.0, 1.0, 0.1).is_err());
        assert!(Hyperparams::new(1.0, -1.0, 0.1).is_err());
        assert!(Hyperparams::new(1.0, 1.0, -0.1).is_err());
        assert!(Hyperparams::new(1.0, 1.0, 0.0).is_ok());
    }

    #[test]
    fn constant_target_gives_constant_model() {
        for eps in [0.0, 0.1] {
            let rows: Vec<_> = (0..8)
                .map(|i| FeatureRow::new(i as f64, (i * i) as f64, 4.25))
                .collect();
            let m = train(&rows, hyper(10.0, 1.0, eps), 1e-6, 1000).unwrap();
            assert!(m.dual_coefs.is_empty());
            assert_eq!(m.bias, 4.25);
            assert_eq!(m.predict([100.0, -3.0]), 4.25);

            let ms = train_standardized(&rows, hyper(10.0, 1.0, eps), 1e-6).unwrap();
            assert!((ms.predict([-7.0, 2.0]) - 4.25).abs() < 1e-12);
        }
    }

    #[test]
    fn single_support_vector_prediction() {
        let m = SvrModel {
            support_vectors: vec![[0.5, -0.5]],
            dual_coefs: vec![0.75],
            bias: 0.25,
            hyper: hyper(1.0, 2.0, 0.0),
            feature_scaler: [Scaler::identity(); 2],
            target_scaler: Scaler::identity(),
            converged: true,
            iterations: 0,
            max_violation: 0.0,
        };
        assert_eq!(m.predict([0.5, -0.5]), 1.0);
    }

    #[test]
    fn dual_feasibility_and_complementarity() {
        let rows = random_rows(40, 3);
        let h = hyper(5.0, 0.8, 0.2);
        let tol = 1e-6;
        let m = train(&rows, h, tol, 1_000_000).unwrap();
        assert!(m.converged);
        let sum: f64 = m.dual_coefs.iter().sum();
        assert!(sum.abs() <= 1e-6 * h.c * rows.len() as f64);
        assert!(m.dual_coefs.iter().all(|b| b.abs() <= h.c + 1e-9));
        assert!(!m.support_vectors.is_empty());
        // rows strictly inside the tube carry no weight
        let mut solver = SmoSolver::new(&rows, h).unwrap();
        while solver.step(tol) != Step::Converged {}
        let model = solver.clone().finish(true);
        for (k, r) in rows.iter().enumerate() {
            let res = r.target - model.decision(&r.features());
            if res.abs() < h.epsilon - 1e-4 {
                assert!(solver.beta()[k].abs() <= tol * h.c, "row {k} res {res}");
            }
            // bounded rows sit on or outside the tube, free rows on its edge
            let b = solver.beta()[k];
            if b != 0.0 && b.abs() < h.c {
                assert!((res.abs() - h.epsilon).abs() < 1e-4, "free row {k} res {res}");
            }
        }
    }

    #[test]
    fn objective_is_monotone() {
        let rows = random_rows(30, 8);
        let mut s = SmoSolver::new(&rows, hyper(20.0, 2.0, 0.05)).unwrap();
        let mut prev = s.dual_objective();
        assert_eq!(prev, 0.0);
        let mut steps = 0;
        while s.step(1e-9) != Step::Converged && steps < 100_000 {
            let w = s.dual_objective();
            assert!(w >= prev - 1e-12 * prev.abs().max(1.0), "{w} < {prev}");
            prev = w;
            steps += 1;
        }
        assert!(steps > 5);
    }

    #[test]
    fn predictions_near_support_vectors_respect_tube_plus_slack() {
        let rows = random_rows(25, 12);
        let h = hyper(3.0, 1.5, 0.1);
        let m = train(&rows, h, 1e-8, 1_000_000).unwrap();
        for (r, (zeta, zeta_star)) in rows.iter().zip(m.slacks(&rows)) {
            let res = r.target - m.predict(r.features());
            assert!(res <= h.epsilon + zeta + 1e-12);
            assert!(-res <= h.epsilon + zeta_star + 1e-12);
        }
    }

    #[test]
    fn deterministic_training() {
        let rows = random_rows(20, 4);
        let a = train(&rows, hyper(10.0, 1.0, 0.01), 1e-3, 10_000).unwrap();
        let b = train(&rows, hyper(10.0, 1.0, 0.01), 1e-3, 10_000).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn budget_exhaustion_reports_not_converged() {
        let rows = random_rows(30, 5);
        let m = train(&rows, hyper(1e4, 0.01, 0.0), 1e-12, 3).unwrap();
        assert!(!m.converged);
        assert_eq!(m.iterations, 3);
    }

    #[test]
    fn rejects_non_finite_and_tiny_inputs() {
        let mut rows = random_rows(5, 1);
        rows[2].target = f64::NAN;
        assert!(matches!(
            train(&rows, hyper(1.0, 1.0, 0.1), 1e-3, 100),
            Err(Error::NonFinite { index: 2 })
        ));
        assert!(train(&random_rows(1, 1), hyper(1.0, 1.0, 0.1), 1e-3, 100).is_err());
    }

    #[test]
    fn json_round_trip_and_version_check() {
        let rows = random_rows(15, 2);
        let m = train_standardized(&rows, hyper(2.0, 0.5, 0.05), 1e-4).unwrap();
        let s = m.to_json().unwrap();
        assert!(s.contains("\"format_version\": 1"));
        let back = SvrModel::<f64>::from_json(&s).unwrap();
        assert_eq!(back, m);
        let bad = s.replace("\"format_version\": 1", "\"format_version\": 9");
        assert!(matches!(
            SvrModel::<f64>::from_json(&bad),
            Err(Error::UnsupportedVersion(9))
        ));
    }

    #[test]
    fn single_precision_training() {
        let rows: Vec<FeatureRow<f32>> = (0..20)
            .map(|i| {
                let x = i as f32 / 5.0;
                FeatureRow::new(x, 0.0, x.sin())
            })
            .collect();
        let m = train_standardized(&rows, Hyperparams::new(10.0f32, 1.0, 0.01).unwrap(), 1e-3).unwrap();
        for r in &rows {
            assert!((m.predict(r.features()) - r.target).abs() < 0.05);
        }
    }
}
