//! Path generation for the compound mixed renewal process and step-function
//! evaluators on stored paths.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{CmrpError, Result};
use crate::model::{CmrpModel, Theta};

/// Default cap on stored arrivals per path.
pub const DEFAULT_MAX_JUMPS: usize = 10_000_000;

/// One simulated path, truncated at `horizon`.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    pub theta: Theta,
    /// Arrival times `T_1 < T_2 < ... <= horizon`.
    pub arrivals: Vec<f64>,
    /// Waiting times `W_n`, with `T_n` their running sum.
    pub interarrivals: Vec<f64>,
    pub claims: Vec<f64>,
    pub horizon: f64,
}

impl Path {
    /// Build a path from arrival times; interarrivals are the successive
    /// differences.
    pub fn from_arrivals(
        theta: Theta,
        arrivals: Vec<f64>,
        claims: Vec<f64>,
        horizon: f64,
    ) -> Result<Self> {
        if arrivals.len() != claims.len() {
            return Err(CmrpError::Domain(format!(
                "{} arrivals but {} claims",
                arrivals.len(),
                claims.len()
            )));
        }
        let mut prev = 0.0;
        let mut interarrivals = Vec::with_capacity(arrivals.len());
        for &t in &arrivals {
            if !(t > prev) {
                return Err(CmrpError::Domain(format!(
                    "arrival times must be positive and strictly increasing ({t} after {prev})"
                )));
            }
            interarrivals.push(t - prev);
            prev = t;
        }
        if prev > horizon {
            return Err(CmrpError::Domain(format!(
                "arrival {prev} lies beyond the horizon {horizon}"
            )));
        }
        if let Some(x) = claims.iter().find(|x| !(**x > 0.0)) {
            return Err(CmrpError::Domain(format!(
                "claim sizes must be positive, got {x}"
            )));
        }
        Ok(Path {
            theta,
            arrivals,
            interarrivals,
            claims,
            horizon,
        })
    }

    pub fn n_jumps(&self) -> usize {
        self.arrivals.len()
    }

    fn check_time(&self, t: f64) -> Result<()> {
        if !(t >= 0.0) || t > self.horizon {
            return Err(CmrpError::Domain(format!(
                "time {t} outside [0, {}]",
                self.horizon
            )));
        }
        Ok(())
    }

    /// `N_t = #{n : T_n <= t}`.
    pub fn count_at(&self, t: f64) -> Result<usize> {
        self.check_time(t)?;
        Ok(self.arrivals.partition_point(|&a| a <= t))
    }

    /// `S_t = X_1 + ... + X_{N_t}`.
    pub fn aggregate_at(&self, t: f64) -> Result<f64> {
        let n = self.count_at(t)?;
        Ok(self.claims[..n].iter().sum())
    }

    /// Arrival time of the last claim at or before `t` (0 if none).
    pub fn last_arrival_at(&self, t: f64) -> Result<f64> {
        let n = self.count_at(t)?;
        Ok(if n == 0 { 0.0 } else { self.arrivals[n - 1] })
    }

    /// `u + c(θ) t - S_t`.
    pub fn reserve_at(&self, model: &CmrpModel, u: f64, t: f64) -> Result<f64> {
        let s = self.aggregate_at(t)?;
        Ok(u + model.premium_at(&self.theta)? * t - s)
    }

    /// First arrival at which the reserve drops below zero. Between arrivals
    /// the reserve only grows, so arrivals are the only candidates.
    pub fn ruin_time(&self, model: &CmrpModel, u: f64) -> Result<Option<f64>> {
        let c = model.premium_at(&self.theta)?;
        let mut s = 0.0;
        for (&t, &x) in self.arrivals.iter().zip(&self.claims) {
            s += x;
            if u + c * t - s < 0.0 {
                return Ok(Some(t));
            }
        }
        Ok(None)
    }
}

/// Random stream for path `index` under `seed`: the stream is selected by
/// index so path content does not depend on scheduling.
pub fn path_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn positive_draw<R: Rng + ?Sized>(d: &crate::distributions::DistSpec, rng: &mut R) -> f64 {
    loop {
        let x = d.sample(rng);
        if x > 0.0 {
            return x;
        }
    }
}

/// Draw `θ` from the mixing law, then interarrivals from `K(θ)` and claims,
/// stopping at the first arrival beyond `t_max`.
pub fn sample_path<R: Rng + ?Sized>(
    model: &CmrpModel,
    t_max: f64,
    rng: &mut R,
    max_jumps: usize,
) -> Result<Path> {
    let theta = model.mixing.sample(rng);
    sample_path_given(model, &theta, t_max, rng, max_jumps)
}

/// As [`sample_path`] with the mixing value fixed.
pub fn sample_path_given<R: Rng + ?Sized>(
    model: &CmrpModel,
    theta: &Theta,
    t_max: f64,
    rng: &mut R,
    max_jumps: usize,
) -> Result<Path> {
    if !(t_max >= 0.0 && t_max.is_finite()) {
        return Err(CmrpError::InvalidParameter(format!(
            "horizon must be finite and >= 0, got {t_max}"
        )));
    }
    if max_jumps == 0 {
        return Err(CmrpError::InvalidParameter(
            "max_jumps must be at least 1".into(),
        ));
    }
    let kernel = model.kernel_at(theta)?;
    let mut arrivals = Vec::new();
    let mut interarrivals = Vec::new();
    let mut claims = Vec::new();
    let mut t = 0.0;
    loop {
        let w = positive_draw(&kernel, rng);
        let next = t + w;
        if next > t_max {
            break;
        }
        if arrivals.len() == max_jumps {
            return Err(CmrpError::ExplosionGuard {
                jumps: max_jumps,
                limit: max_jumps,
                time: t,
                theta: theta.as_slice().to_vec(),
            });
        }
        t = next;
        arrivals.push(t);
        interarrivals.push(w);
        claims.push(positive_draw(&model.claims, rng));
    }
    Ok(Path {
        theta: *theta,
        arrivals,
        interarrivals,
        claims,
        horizon: t_max,
    })
}

/// Map `f` over path indices `0..n` in parallel, each with its own stream.
/// Output order follows the index, whatever the worker count.
pub fn par_map_indexed<T, F>(n: usize, seed: u64, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, &mut ChaCha8Rng) -> Result<T> + Sync,
{
    (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = path_rng(seed, i as u64);
            f(i, &mut rng)
        })
        .collect()
}

/// `n` paths of the model under `seed`.
pub fn simulate_paths(model: &CmrpModel, t_max: f64, n: usize, seed: u64) -> Result<Vec<Path>> {
    par_map_indexed(n, seed, |_, rng| {
        sample_path(model, t_max, rng, DEFAULT_MAX_JUMPS)
    })
}

/// Run `f` inside a thread pool of `workers` threads (`None`: rayon default).
pub fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = workers {
        builder = builder.num_threads(w.max(1));
    }
    let pool = builder
        .build()
        .map_err(|e| CmrpError::InvalidParameter(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::DistSpec;
    use crate::expr::Expr;
    use crate::model::{KernelSpec, MixingSpec};

    fn dirac_model(c: f64) -> CmrpModel {
        CmrpModel::new(
            MixingSpec::dirac(1.0),
            KernelSpec::exponential(Expr::theta()),
            DistSpec::exponential(2.0).unwrap(),
            Expr::constant(c),
        )
        .unwrap()
    }

    fn fixed(arrivals: &[f64], claims: &[f64], horizon: f64) -> Path {
        Path::from_arrivals(
            Theta::scalar(1.0),
            arrivals.to_vec(),
            claims.to_vec(),
            horizon,
        )
        .unwrap()
    }

    #[test]
    fn zero_horizon_path_is_empty() {
        let m = dirac_model(1.0);
        let p = sample_path(&m, 0.0, &mut path_rng(3, 0), 10).unwrap();
        assert_eq!(p.n_jumps(), 0);
        assert_eq!(p.count_at(0.0).unwrap(), 0);
        assert_eq!(p.aggregate_at(0.0).unwrap(), 0.0);
    }

    #[test]
    fn counts_and_aggregates() {
        let p = fixed(&[0.5, 1.2], &[3.0, 4.0], 2.0);
        assert_eq!(p.count_at(0.4).unwrap(), 0);
        assert_eq!(p.aggregate_at(0.4).unwrap(), 0.0);
        assert_eq!(p.count_at(1.0).unwrap(), 1);
        assert_eq!(p.aggregate_at(1.0).unwrap(), 3.0);
        assert_eq!(p.count_at(1.2).unwrap(), 2);
        assert!(matches!(p.count_at(2.5), Err(CmrpError::Domain(_))));
        assert!(matches!(p.count_at(-1.0), Err(CmrpError::Domain(_))));
    }

    #[test]
    fn reserve_examples() {
        let m = dirac_model(1.0);
        let p = fixed(&[0.5, 1.2], &[1.0, 2.0], 2.0);
        assert_eq!(p.reserve_at(&m, 10.0, 2.0).unwrap(), 9.0);
        assert_eq!(p.reserve_at(&m, 10.0, 0.0).unwrap(), 10.0);
        let m2 = dirac_model(2.0);
        let empty = fixed(&[], &[], 5.0);
        assert_eq!(empty.reserve_at(&m2, 0.0, 5.0).unwrap(), 10.0);
    }

    #[test]
    fn ruin_examples() {
        let m = dirac_model(1.0);
        assert_eq!(fixed(&[], &[], 5.0).ruin_time(&m, 0.0).unwrap(), None);
        assert_eq!(
            fixed(&[1.0], &[2.0], 5.0).ruin_time(&m, 0.0).unwrap(),
            Some(1.0)
        );
        assert_eq!(fixed(&[1.0], &[2.0], 1e6).ruin_time(&m, 5.0).unwrap(), None);
    }

    #[test]
    fn explosion_guard_fires() {
        let m = dirac_model(1.0);
        let err = sample_path(&m, 1e3, &mut path_rng(1, 0), 5).unwrap_err();
        assert!(matches!(err, CmrpError::ExplosionGuard { limit: 5, .. }));
    }

    #[test]
    fn path_invariants_hold() {
        let m = dirac_model(1.0);
        for i in 0..50 {
            let p = sample_path(&m, 20.0, &mut path_rng(9, i), DEFAULT_MAX_JUMPS).unwrap();
            let mut t = 0.0;
            for (k, &w) in p.interarrivals.iter().enumerate() {
                assert!(w > 0.0 && p.claims[k] > 0.0);
                t += w;
                assert_eq!(t, p.arrivals[k]);
            }
            assert!(t <= 20.0);
        }
    }

    #[test]
    fn mean_count_matches_poisson() {
        let m = dirac_model(1.0);
        let n = 100_000;
        let counts = par_map_indexed(n, 11, |_, rng| {
            Ok(sample_path(&m, 10.0, rng, DEFAULT_MAX_JUMPS)?.count_at(10.0)? as f64)
        })
        .unwrap();
        let mean = counts.iter().sum::<f64>() / n as f64;
        let var = counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let se = (var / n as f64).sqrt();
        assert!((mean - 10.0).abs() <= 3.0 * se, "mean {mean} se {se}");
    }

    #[test]
    fn worker_count_does_not_change_paths() {
        let m = CmrpModel::new(
            MixingSpec::single(DistSpec::gamma(2.0, 3.0).unwrap()).unwrap(),
            KernelSpec::exponential(Expr::theta()),
            DistSpec::exponential(1.0).unwrap(),
            Expr::constant(1.0),
        )
        .unwrap();
        let run = |w| {
            with_workers(Some(w), || simulate_paths(&m, 5.0, 500, 42))
                .unwrap()
                .unwrap()
        };
        let a = run(1);
        assert_eq!(a, run(2));
        assert_eq!(a, run(8));
        assert_eq!(a, simulate_paths(&m, 5.0, 500, 42).unwrap());
    }
}
