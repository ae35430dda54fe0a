//! Heat-load forecasting on accumulated smart-meter data.
//!
//! The toolkit turns unevenly sampled meter counters into an hourly
//! accumulated-consumption series, fits an RBF-kernel ε-SVR on lag-1
//! consumption and feel-like temperature features, tunes `(C, γ, ε)` with a
//! particle swarm, and converts the predicted counter back into hourly load.
//! ARIMA and seasonal-naive baselines, a synthetic data generator and the
//! correlation/decomposition analyses used for lag selection are included.
//!
//! The numeric modules are generic over a [`Scalar`] (`f32` or `f64`); the
//! aliases at the crate root fix the scalar to `f64`, which is what the
//! pipeline and the command-line tool use.

pub mod analysis;
pub mod baseline;
pub mod datagen;
mod error;
pub mod ksvr;
pub mod pipeline;
pub mod pso;
pub mod rng;
mod scalar;
pub mod series;

#[cfg(test)]
mod proptests;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Hourly (or otherwise evenly spaced) series in double precision.
pub type Series = series::RegularSeries<f64>;
/// Unevenly spaced meter readings in double precision.
pub type Raw = series::RawSeries<f64>;
/// Trained ε-SVR in double precision.
pub type Model = ksvr::SvrModel<f64>;
/// SVR hyper-parameters in double precision.
pub type Hyper = ksvr::Hyperparams<f64>;
/// Lag-1 feature row in double precision.
pub type Row = ksvr::FeatureRow<f64>;
/// Swarm configuration in double precision.
pub type Swarm = pso::PsoConfig<f64>;
/// Fitted ARIMA model in double precision.
pub type Arima = baseline::ArimaModel<f64>;
/// Correlogram in double precision.
pub type Correlogram = analysis::CorrelogramResult<f64>;

/// Single-precision counterparts, mostly useful for memory-bound batch work.
pub mod f32 {
    pub type Series = crate::series::RegularSeries<f32>;
    pub type Model = crate::ksvr::SvrModel<f32>;
    pub type Hyper = crate::ksvr::Hyperparams<f32>;
    pub type Row = crate::ksvr::FeatureRow<f32>;
    pub type Swarm = crate::pso::PsoConfig<f32>;
}
