//! Global-best particle swarm optimisation over a box of positive reals.
//!
//! The swarm moves in `log10` coordinates. Each iteration, for particle `i`:
//!
//! ```text
//! v ← w·v + c1·r1·(L_i − p) + c2·r2·(G − p)
//! p ← p + v
//! ```
//!
//! with fresh `r1, r2 ~ U(0, 1)` per particle, velocities clamped to half the
//! box width per dimension, and positions clamped to the box (the velocity of
//! a clamped dimension is zeroed). The fitness is evaluated in linear space.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::rng::XorShift64Star;
use crate::{Error, Result, Scalar};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsoConfig<T> {
    pub n_particles: usize,
    pub n_iterations: usize,
    /// Inertia weight `w`.
    pub inertia: T,
    /// Personal learning rate.
    pub c1: T,
    /// Societal learning rate.
    pub c2: T,
    /// Linear-space `(low, high)` per dimension.
    pub bounds: Vec<(T, T)>,
    pub rng_seed: u64,
    /// Evaluate particles on the rayon pool.
    #[serde(default = "default_parallel")]
    pub parallel: bool,
}

fn default_parallel() -> bool {
    true
}

impl<T: Scalar> PsoConfig<T> {
    /// Hyper-parameter box in `(C, γ, ε)` order.
    pub fn svr_bounds() -> Vec<(T, T)> {
        vec![
            (T::lit(1e-3), T::lit(1e5)),
            (T::lit(1e-3), T::lit(1e3)),
            (T::lit(1e-8), T::lit(1e-1)),
        ]
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_particles == 0 || self.n_iterations == 0 {
            return Err(Error::InvalidConfig(
                "n_particles and n_iterations must be >= 1".into(),
            ));
        }
        if self.bounds.is_empty() {
            return Err(Error::InvalidConfig("empty search box".into()));
        }
        for (d, &(lo, hi)) in self.bounds.iter().enumerate() {
            if !(lo > T::zero() && lo < hi && hi.is_finite()) {
                return Err(Error::InvalidConfig(format!(
                    "dimension {d}: need 0 < low < high, got ({lo}, {hi})"
                )));
            }
        }
        for (name, v) in [("inertia", self.inertia), ("c1", self.c1), ("c2", self.c2)] {
            if !v.is_finite() || v < T::zero() {
                return Err(Error::InvalidConfig(format!("{name} must be finite and >= 0")));
            }
        }
        Ok(())
    }

    fn log_bounds(&self) -> Vec<(T, T)> {
        self.bounds
            .iter()
            .map(|&(lo, hi)| (lo.log10(), hi.log10()))
            .collect()
    }
}

impl<T: Scalar> Default for PsoConfig<T> {
    fn default() -> Self {
        Self {
            n_particles: 20,
            n_iterations: 50,
            inertia: T::one(),
            c1: T::lit(2.0),
            c2: T::lit(2.0),
            bounds: Self::svr_bounds(),
            rng_seed: 0,
            parallel: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Particle<T> {
    /// `log10` coordinates.
    pub position: Vec<T>,
    pub velocity: Vec<T>,
    pub best_position: Vec<T>,
    pub best_fitness: T,
}

/// Global best after an iteration, in linear space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry<T> {
    pub iteration: usize,
    pub best_position: Vec<T>,
    pub best_fitness: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsoResult<T> {
    /// Linear-space coordinates of the global best.
    pub best_position: Vec<T>,
    pub best_fitness: T,
    /// Global-best fitness after initialisation (entry 0) and after every
    /// iteration; monotone non-increasing.
    pub history: Vec<T>,
    pub trace: Vec<TraceEntry<T>>,
    pub evaluations: usize,
}

fn to_linear<T: Scalar>(p: &[T]) -> Vec<T> {
    p.iter().map(|&x| T::lit(10.0).powf(x)).collect()
}

fn sanitize<T: Scalar>(f: T) -> T {
    if f.is_nan() || f.is_infinite() {
        T::infinity()
    } else {
        f
    }
}

/// Particle swarm with explicit state, so callers can seed particles.
#[derive(Debug, Clone)]
pub struct Swarm<T> {
    config: PsoConfig<T>,
    particles: Vec<Particle<T>>,
    rng: XorShift64Star,
}

impl<T: Scalar> Swarm<T> {
    /// Positions uniform in the log-space box, velocities zero.
    pub fn new(config: PsoConfig<T>) -> Result<Self> {
        config.validate()?;
        let mut rng = XorShift64Star::new(config.rng_seed);
        let lb = config.log_bounds();
        let particles = (0..config.n_particles)
            .map(|_| {
                let position: Vec<T> = lb
                    .iter()
                    .map(|&(lo, hi)| T::lit(rng.uniform_range(lo.as_f64(), hi.as_f64())))
                    .collect();
                Particle {
                    velocity: vec![T::zero(); position.len()],
                    best_position: position.clone(),
                    best_fitness: T::infinity(),
                    position,
                }
            })
            .collect();
        Ok(Self {
            config,
            particles,
            rng,
        })
    }

    /// Starts from given log-space positions and velocities
    /// (`n_particles` is taken from `start`).
    pub fn with_particles(mut config: PsoConfig<T>, start: Vec<(Vec<T>, Vec<T>)>) -> Result<Self> {
        config.n_particles = start.len();
        config.validate()?;
        let dim = config.bounds.len();
        let lb = config.log_bounds();
        let mut particles = Vec::with_capacity(start.len());
        for (position, velocity) in start {
            if position.len() != dim || velocity.len() != dim {
                return Err(Error::InvalidConfig(format!(
                    "particle dimension must be {dim}"
                )));
            }
            let position: Vec<T> = position
                .iter()
                .zip(&lb)
                .map(|(&p, &(lo, hi))| p.max(lo).min(hi))
                .collect();
            particles.push(Particle {
                best_position: position.clone(),
                best_fitness: T::infinity(),
                position,
                velocity,
            });
        }
        let rng = XorShift64Star::new(config.rng_seed);
        Ok(Self {
            config,
            particles,
            rng,
        })
    }

    pub fn particles(&self) -> &[Particle<T>] {
        &self.particles
    }

    fn evaluate<F>(&self, fitness: &F) -> Vec<T>
    where
        F: Fn(&[T]) -> T + Sync,
    {
        let eval = |p: &Particle<T>| sanitize(fitness(&to_linear(&p.position)));
        if self.config.parallel {
            self.particles.par_iter().map(eval).collect()
        } else {
            self.particles.iter().map(eval).collect()
        }
    }

    /// Lowest fitness, lowest index on ties.
    fn global_best(&self) -> (usize, T) {
        let mut best = (0, self.particles[0].best_fitness);
        for (i, p) in self.particles.iter().enumerate().skip(1) {
            if p.best_fitness < best.1 {
                best = (i, p.best_fitness);
            }
        }
        best
    }

    fn absorb(&mut self, values: &[T]) {
        for (p, &f) in self.particles.iter_mut().zip(values) {
            if f < p.best_fitness {
                p.best_fitness = f;
                p.best_position = p.position.clone();
            }
        }
    }

    fn move_particles(&mut self, g: &[T]) {
        let lb = self.config.log_bounds();
        let (w, c1, c2) = (self.config.inertia, self.config.c1, self.config.c2);
        let half = T::lit(0.5);
        for p in self.particles.iter_mut() {
            let r1 = T::lit(self.rng.uniform_open());
            let r2 = T::lit(self.rng.uniform_open());
            for (d, &(lo, hi)) in lb.iter().enumerate() {
                let vmax = (hi - lo) * half;
                let v = w * p.velocity[d]
                    + c1 * r1 * (p.best_position[d] - p.position[d])
                    + c2 * r2 * (g[d] - p.position[d]);
                let v = v.max(-vmax).min(vmax);
                let x = p.position[d] + v;
                if x < lo {
                    p.position[d] = lo;
                    p.velocity[d] = T::zero();
                } else if x > hi {
                    p.position[d] = hi;
                    p.velocity[d] = T::zero();
                } else {
                    p.position[d] = x;
                    p.velocity[d] = v;
                }
            }
        }
    }

    /// Runs the swarm to the iteration limit.
    pub fn run<F>(mut self, fitness: F) -> PsoResult<T>
    where
        F: Fn(&[T]) -> T + Sync,
    {
        let mut history = Vec::with_capacity(self.config.n_iterations + 1);
        let mut trace = Vec::with_capacity(self.config.n_iterations + 1);
        let values = self.evaluate(&fitness);
        let mut evaluations = values.len();
        for (p, &f) in self.particles.iter_mut().zip(&values) {
            p.best_fitness = f;
            p.best_position = p.position.clone();
        }
        let record = |swarm: &Self, iteration: usize, history: &mut Vec<T>, trace: &mut Vec<TraceEntry<T>>| {
            let (gi, gf) = swarm.global_best();
            history.push(gf);
            trace.push(TraceEntry {
                iteration,
                best_position: to_linear(&swarm.particles[gi].best_position),
                best_fitness: gf,
            });
        };
        record(&self, 0, &mut history, &mut trace);

        for it in 1..=self.config.n_iterations {
            let (gi, _) = self.global_best();
            let g = self.particles[gi].best_position.clone();
            self.move_particles(&g);
            let values = self.evaluate(&fitness);
            evaluations += values.len();
            self.absorb(&values);
            record(&self, it, &mut history, &mut trace);
        }
        let (gi, gf) = self.global_best();
        PsoResult {
            best_position: to_linear(&self.particles[gi].best_position),
            best_fitness: gf,
            history,
            trace,
            evaluations,
        }
    }
}

/// Minimises `fitness` over the configured box.
pub fn optimize<T, F>(fitness: F, config: &PsoConfig<T>) -> Result<PsoResult<T>>
where
    T: Scalar,
    F: Fn(&[T]) -> T + Sync,
{
    Ok(Swarm::new(config.clone())?.run(fitness))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicUsize, Ordering};

    fn sphere(centre: [f64; 3]) -> impl Fn(&[f64]) -> f64 + Sync {
        move |x: &[f64]| {
            x.iter()
                .zip(centre)
                .map(|(&v, c)| (v.log10() - c).powi(2))
                .sum()
        }
    }

    #[test]
    fn evaluation_count_and_monotone_history() {
        let count = AtomicUsize::new(0);
        let cfg = PsoConfig::<f64> {
            n_particles: 7,
            n_iterations: 9,
            rng_seed: 3,
            ..Default::default()
        };
        let res = optimize(
            |x: &[f64]| {
                count.fetch_add(1, Ordering::Relaxed);
                sphere([1.0, 0.0, -4.0])(x)
            },
            &cfg,
        )
        .unwrap();
        assert_eq!(count.load(Ordering::Relaxed), 7 * 9 + 7);
        assert_eq!(res.evaluations, 70);
        assert_eq!(res.history.len(), 10);
        assert!(res.history.windows(2).all(|w| w[1] <= w[0]));
        for (x, (lo, hi)) in res.best_position.iter().zip(PsoConfig::<f64>::svr_bounds()) {
            assert!(*x >= lo * (1.0 - 1e-12) && *x <= hi * (1.0 + 1e-12));
        }
    }

    #[test]
    fn particle_at_optimum_stays_put() {
        let opt = [2.0, -1.0, -5.0];
        let cfg = PsoConfig::<f64> {
            n_iterations: 20,
            ..Default::default()
        };
        let swarm = Swarm::with_particles(cfg, vec![(opt.to_vec(), vec![0.0; 3])]).unwrap();
        let res = swarm.run(sphere(opt));
        assert!(res.history.iter().all(|&h| h == res.history[0]));
        assert!(res.history[0] < 1e-20);
    }

    #[test]
    fn fixed_point_without_inertia_or_memory() {
        let cfg = PsoConfig::<f64> {
            n_iterations: 15,
            inertia: 0.0,
            c1: 0.0,
            c2: 1.5,
            ..Default::default()
        };
        let start = vec![0.5, 0.25, -3.0];
        let swarm = Swarm::with_particles(cfg, vec![(start.clone(), vec![0.0; 3])]).unwrap();
        // any fitness: the lone particle is its own global best
        let res = swarm.run(|x: &[f64]| x.iter().sum());
        let expect: Vec<f64> = start.iter().map(|&p| 10f64.powf(p)).collect();
        assert_eq!(res.best_position, expect);
    }

    #[test]
    fn nan_fitness_is_infinite_not_fatal() {
        let cfg = PsoConfig::<f64> {
            n_particles: 5,
            n_iterations: 5,
            rng_seed: 1,
            ..Default::default()
        };
        let res = optimize(
            |x: &[f64]| if x[0] > 1.0 { f64::NAN } else { x[0] },
            &cfg,
        )
        .unwrap();
        assert!(res.best_fitness.is_finite() || res.best_fitness == f64::INFINITY);
        assert!(res.history.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn deterministic_and_order_independent() {
        let cfg = PsoConfig::<f64> {
            n_particles: 10,
            n_iterations: 10,
            rng_seed: 99,
            ..Default::default()
        };
        let a = optimize(sphere([0.0, 0.0, -3.0]), &cfg).unwrap();
        let b = optimize(sphere([0.0, 0.0, -3.0]), &cfg).unwrap();
        let serial = optimize(
            sphere([0.0, 0.0, -3.0]),
            &PsoConfig {
                parallel: false,
                ..cfg.clone()
            },
        )
        .unwrap();
        assert_eq!(a, b);
        assert_eq!(a, serial);
    }

    #[test]
    fn invalid_configs_rejected() {
        let bad = [
            PsoConfig::<f64> {
                n_particles: 0,
                ..Default::default()
            },
            PsoConfig::<f64> {
                n_iterations: 0,
                ..Default::default()
            },
            PsoConfig::<f64> {
                bounds: vec![(1.0, 1.0)],
                ..Default::default()
            },
            PsoConfig::<f64> {
                bounds: vec![(0.0, 1.0)],
                ..Default::default()
            },
        ];
        for cfg in bad {
            assert!(optimize(|_: &[f64]| 0.0, &cfg).is_err());
        }
    }
}
