//! Randomised invariants across modules.

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

use crate::analysis::{acf, autocovariance, cross_correlation, levinson_durbin};
use crate::ksvr::{rbf_kernel, FeatureRow, Hyperparams, SvrModel};
use crate::pipeline::{forecast_24h, ForecastMode};
use crate::pso::{optimize, PsoConfig};
use crate::series::{accumulate, differentiate_shift, resample, RawSeries, RegularSeries, Unit};

fn hourly(v: Vec<f64>, unit: Unit) -> RegularSeries<f64> {
    RegularSeries::hourly(0, v, unit).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn accumulate_then_differentiate(load in prop::collection::vec(0.0f64..50.0, 2..100)) {
        // the first value has no predecessor and is dropped
        let s = hourly(load.clone(), Unit::KwhPerStep);
        let back = differentiate_shift(&accumulate(&s).unwrap(), 0).unwrap();
        prop_assert_eq!(back.len(), load.len() - 1);
        prop_assert_eq!(back.start(), s.start() + s.step());
        for (a, b) in back.values().iter().zip(&load[1..]) {
            prop_assert!((a - b).abs() <= 1e-9 * b.abs().max(1.0));
        }
    }

    #[test]
    fn resample_is_exact_on_lines(
        slope in 0.0f64..5.0,
        offset in -10.0f64..10.0,
        gaps in prop::collection::vec(1i64..7200, 2..40),
    ) {
        let mut t = 0i64;
        let mut points = vec![(0, offset)];
        for g in gaps {
            t += g;
            points.push((t, offset + slope * t as f64 / 3600.0));
        }
        let raw = RawSeries::new(points, Unit::KwhAccumulated).unwrap();
        let n = (t / 600) as usize + 1;
        let r = resample(&raw, 0, 600, n).unwrap();
        for (i, v) in r.values().iter().enumerate() {
            let want = offset + slope * (i as f64 * 600.0) / 3600.0;
            prop_assert!((v - want).abs() <= 1e-9 * want.abs().max(1.0));
        }
    }

    #[test]
    fn correlograms_are_bounded(x in prop::collection::vec(-5.0f64..5.0, 20..80), y in prop::collection::vec(-5.0f64..5.0, 80)) {
        prop_assume!(x.iter().any(|v| (v - x[0]).abs() > 1e-3));
        let a = acf(&hourly(x.clone(), Unit::Kwh), 10).unwrap();
        prop_assert!((a.coefficients[0] - 1.0).abs() < 1e-12);
        prop_assert!(a.coefficients.iter().all(|c| c.abs() <= 1.0 + 1e-12));
        let y = hourly(y[..x.len()].to_vec(), Unit::DegC);
        prop_assume!(y.values().iter().any(|v| (v - y.values()[0]).abs() > 1e-3));
        let c = cross_correlation(&hourly(x, Unit::Kwh), &y, 10).unwrap();
        prop_assert!(c.coefficients.iter().all(|c| c.abs() <= 1.0 + 1e-12));
    }

    #[test]
    fn rbf_gram_is_psd(
        pts in prop::collection::vec((-3.0f64..3.0, -3.0f64..3.0), 2..25),
        log_gamma in -3.0f64..2.0,
    ) {
        let gamma = 10f64.powf(log_gamma);
        let m = pts.len();
        let k = DMatrix::from_fn(m, m, |i, j| {
            rbf_kernel(&[pts[i].0, pts[i].1], &[pts[j].0, pts[j].1], gamma)
        });
        prop_assert!((&k - k.transpose()).amax() == 0.0);
        let min = k.symmetric_eigenvalues().min();
        prop_assert!(min >= -1e-9, "min eigenvalue {}", min);
    }

    #[test]
    fn levinson_matches_dense_yule_walker(x in prop::collection::vec(-5.0f64..5.0, 60..120), order in 1usize..6) {
        let r = autocovariance(&x, order);
        prop_assume!(r[0] > 1e-3);
        let Ok(ld) = levinson_durbin(&r) else { return Ok(()) };
        let toeplitz = DMatrix::from_fn(order, order, |i, j| r[i.abs_diff(j)]);
        let rhs = DVector::from_iterator(order, r[1..=order].iter().copied());
        let dense = toeplitz.lu().solve(&rhs).unwrap();
        for (a, b) in ld.ar.iter().zip(dense.iter()) {
            prop_assert!((a - b).abs() <= 1e-6 * (1.0 + b.abs()), "{} vs {}", a, b);
        }
        prop_assert!(ld.reflection.iter().all(|k| k.abs() <= 1.0 + 1e-12));
    }

    #[test]
    fn pso_best_stays_in_bounds(seed in 0u64..1000, cx in -2.0f64..4.0) {
        let cfg = PsoConfig::<f64> { n_iterations: 5, rng_seed: seed, ..PsoConfig::default() };
        let r = optimize(|p: &[f64]| (p[0].log10() - cx).powi(2) + p[1] + p[2], &cfg).unwrap();
        for (v, (lo, hi)) in r.best_position.iter().zip(&cfg.bounds) {
            prop_assert!(v >= lo && v <= hi);
        }
        prop_assert_eq!(r.history.len(), 6);
        prop_assert!(r.history.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn forecast_is_monotone_for_any_model(
        coefs in prop::collection::vec(-3.0f64..3.0, 1..6),
        bias in -5.0f64..5.0,
        last in 0.0f64..100.0,
        temps in prop::collection::vec(-10.0f64..20.0, 24),
    ) {
        let rows: Vec<FeatureRow<f64>> = (0..coefs.len())
            .map(|i| FeatureRow::new(i as f64 * 10.0, i as f64 - 2.0, 0.0))
            .collect();
        let model = SvrModel {
            support_vectors: rows.iter().map(|r| r.features()).collect(),
            dual_coefs: coefs,
            bias,
            hyper: Hyperparams::new(1.0, 0.01, 0.1).unwrap(),
            ..SvrModel::constant(0.0)
        };
        let t = hourly(temps, Unit::DegC);
        let f = forecast_24h(&model, last, &t, ForecastMode::Recursive, None).unwrap();
        prop_assert_eq!(f.len(), 24);
        prop_assert!(f.values()[0] >= last);
        prop_assert!(f.values().windows(2).all(|w| w[1] >= w[0]));
        let load = {
            let mut v = vec![last];
            v.extend_from_slice(f.values());
            differentiate_shift(&RegularSeries::hourly(0, v, Unit::KwhAccumulated).unwrap(), 0).unwrap()
        };
        prop_assert!(load.values().iter().all(|&v| v >= 0.0));
    }
}
