//! Monte Carlo and analytic checks of the change-of-measure identities,
//! reported as pass/fail lines.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::change_of_measure::{
    esscher_change, log_density, log_density_conditional, log_density_poissonization,
    log_lundberg_martingale,
};
use crate::distributions::DistSpec;
use crate::error::{CmrpError, Result};
use crate::model::{MixReweight, TargetKernel, Theta};
use crate::numerics::quadrature::QuadConfig;
use crate::numerics::special::ln_gamma;
use crate::scenario::Scenario;
use crate::simulate::{par_map_indexed, sample_path, sample_path_given, DEFAULT_MAX_JUMPS};

/// Result of one check. `passed` holds iff
/// `|estimate - target| <= max(tolerance, 3 * std_error)`.
#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub check_name: String,
    pub estimate: f64,
    pub std_error: f64,
    pub target: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub n_paths: usize,
    pub seed: u64,
}

impl VerifyReport {
    pub fn new(
        check_name: impl Into<String>,
        estimate: f64,
        std_error: f64,
        target: f64,
        tolerance: f64,
        n_paths: usize,
        seed: u64,
    ) -> Self {
        let passed = (estimate - target).abs() <= tolerance.max(3.0 * std_error);
        VerifyReport {
            check_name: check_name.into(),
            estimate,
            std_error,
            target,
            tolerance,
            passed,
            n_paths,
            seed,
        }
    }
}

/// Thresholds shared by the checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyConfig {
    /// KS critical value `c` in the threshold `c / sqrt(n)` for claim laws.
    pub ks_claims: f64,
    /// The same for mixing laws.
    pub ks_mixing: f64,
    /// Absolute tolerance floor for probability estimates.
    pub probability_floor: f64,
}

fn default_ks_claims() -> f64 {
    1.5
}

fn default_ks_mixing() -> f64 {
    1.63
}

fn default_floor() -> f64 {
    1e-3
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            ks_claims: default_ks_claims(),
            ks_mixing: default_ks_mixing(),
            probability_floor: default_floor(),
        }
    }
}

/// Sample mean and its standard error.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Mean and standard error of `exp(l_i)`, computed after shifting by the
/// largest log weight.
pub fn exp_mean_se(logs: &[f64]) -> (f64, f64) {
    let m = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return (
            if m == f64::NEG_INFINITY {
                0.0
            } else {
                f64::NAN
            },
            0.0,
        );
    }
    let scaled: Vec<f64> = logs.iter().map(|l| (l - m).exp()).collect();
    let (mean, se) = mean_se(&scaled);
    let k = m.exp();
    (mean * k, se * k)
}

/// KS distance between the self-normalized weighted empirical CDF of `xs`
/// and `cdf`, plus the effective sample size `(Σw)² / Σw²`.
pub fn weighted_ks<F: Fn(f64) -> f64>(xs: &[f64], log_w: &[f64], cdf: F) -> (f64, f64) {
    let m = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(log_w)
        .map(|(&x, &l)| (x, (l - m).exp()))
        .collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total: f64 = pts.iter().map(|p| p.1).sum();
    let sq: f64 = pts.iter().map(|p| p.1 * p.1).sum();
    let mut acc = 0.0;
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < pts.len() {
        let x = pts[i].0;
        let f = cdf(x);
        let before = acc / total;
        while i < pts.len() && pts[i].0 == x {
            acc += pts[i].1;
            i += 1;
        }
        let after = acc / total;
        d = d.max((before - f).abs()).max((after - f).abs());
    }
    (d, total * total / sq)
}

fn median(xs: &mut [f64]) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

fn fmt_num(x: f64) -> String {
    format!("{x}")
}

/// `E_P[M_t] = 1` at each of `times`, from one set of paths.
pub fn check_normalization(
    s: &Scenario,
    times: &[f64],
    n_paths: usize,
    seed: u64,
) -> Result<Vec<VerifyReport>> {
    let mc = s.change_or_identity();
    let horizon = times.iter().copied().fold(0.0, f64::max);
    let logs = par_map_indexed(n_paths, seed, |_, rng| {
        let p = sample_path(&s.model, horizon, rng, DEFAULT_MAX_JUMPS)?;
        times
            .iter()
            .map(|&t| Ok(log_density(&mc, &s.model, &p, t)?.log_value))
            .collect::<Result<Vec<f64>>>()
    })?;
    Ok(times
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            let col: Vec<f64> = logs.iter().map(|r| r[k]).collect();
            let (m, se) = exp_mean_se(&col);
            VerifyReport::new(
                format!("normalization:{}:t={}", s.name, fmt_num(t)),
                m,
                se,
                1.0,
                0.0,
                n_paths,
                seed,
            )
        })
        .collect())
}

/// An event determined by the history up to `u`.
#[derive(Debug, Clone, PartialEq)]
pub enum Event {
    CountEq(usize),
    CountAtLeast(usize),
    AggregateAtMostMedian,
    AggregateAtMost(f64),
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Event::CountEq(n) => write!(f, "N_u={n}"),
            Event::CountAtLeast(n) => write!(f, "N_u>={n}"),
            Event::AggregateAtMostMedian => write!(f, "S_u<=median"),
            Event::AggregateAtMost(q) => write!(f, "S_u<={q}"),
        }
    }
}

impl FromStr for Event {
    type Err = CmrpError;

    fn from_str(s: &str) -> Result<Event> {
        let bad = || {
            CmrpError::InvalidParameter(format!(
                "event `{s}`: expected N_u=<n>, N_u>=<n>, S_u<=median or S_u<=<q>"
            ))
        };
        let s = s.trim();
        if let Some(rest) = s.strip_prefix("N_u>=") {
            rest.trim()
                .parse()
                .map(Event::CountAtLeast)
                .map_err(|_| bad())
        } else if let Some(rest) = s.strip_prefix("N_u=") {
            rest.trim().parse().map(Event::CountEq).map_err(|_| bad())
        } else if let Some(rest) = s.strip_prefix("S_u<=") {
            match rest.trim() {
                "median" => Ok(Event::AggregateAtMostMedian),
                q => q.parse().map(Event::AggregateAtMost).map_err(|_| bad()),
            }
        } else {
            Err(bad())
        }
    }
}

impl Serialize for Event {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Event {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// `E_P[χ_A M_t] = E_P[χ_A M_u]` for each event `A` in the history up to
/// `u`, estimated as the mean of the paired difference on common paths.
pub fn check_martingale(
    s: &Scenario,
    u: f64,
    t: f64,
    events: &[Event],
    n_paths: usize,
    seed: u64,
) -> Result<Vec<VerifyReport>> {
    if !(u < t) {
        return Err(CmrpError::InvalidParameter(format!(
            "need u < t, got u={u}, t={t}"
        )));
    }
    let mc = s.change_or_identity();
    let rows = par_map_indexed(n_paths, seed, |_, rng| {
        let p = sample_path(&s.model, t, rng, DEFAULT_MAX_JUMPS)?;
        let mu = log_density(&mc, &s.model, &p, u)?.log_value.exp();
        let mt = log_density(&mc, &s.model, &p, t)?.log_value.exp();
        Ok((p.count_at(u)?, p.aggregate_at(u)?, mt - mu))
    })?;
    let mut aggregates: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let med = median(&mut aggregates);
    Ok(events
        .iter()
        .map(|ev| {
            let diffs: Vec<f64> = rows
                .iter()
                .map(|&(n, agg, d)| {
                    let hit = match *ev {
                        Event::CountEq(k) => n == k,
                        Event::CountAtLeast(k) => n >= k,
                        Event::AggregateAtMostMedian => agg <= med,
                        Event::AggregateAtMost(q) => agg <= q,
                    };
                    if hit {
                        d
                    } else {
                        0.0
                    }
                })
                .collect();
            let (m, se) = mean_se(&diffs);
            VerifyReport::new(
                format!(
                    "martingale:{}:{}:u={}:t={}",
                    s.name,
                    ev,
                    fmt_num(u),
                    fmt_num(t)
                ),
                m,
                se,
                0.0,
                0.0,
                n_paths,
                seed,
            )
        })
        .collect())
}

/// KS distance between the tilt-weighted empirical law of claim draws and
/// the claim law under the target measure.
pub fn check_pushforward_claims(
    s: &Scenario,
    n_paths: usize,
    seed: u64,
    cfg: &VerifyConfig,
) -> Result<VerifyReport> {
    let mc = s.change_or_identity();
    let claims = &s.model.claims;
    let xs = par_map_indexed(n_paths, seed, |_, rng| Ok(claims.sample(rng)))?;
    let logs: Vec<f64> = xs.iter().map(|&x| mc.tilt.log_f(x)).collect();
    let target: Option<DistSpec> = match &mc.tilt {
        crate::model::ClaimTilt::Grid { .. } => None,
        t => Some(match t {
            crate::model::ClaimTilt::Esscher { r, .. } => claims.exp_tilt(-r)?,
            _ => claims.clone(),
        }),
    };
    let (d, ess) = match &target {
        Some(law) => weighted_ks(&xs, &logs, |x| law.cdf(x)),
        None => weighted_ks(&xs, &logs, |x| {
            mc.tilt.target_cdf(claims, x).unwrap_or(f64::NAN)
        }),
    };
    Ok(VerifyReport::new(
        format!("pushforward_claims:{}", s.name),
        d,
        0.0,
        0.0,
        cfg.ks_claims / ess.sqrt(),
        n_paths,
        seed,
    ))
}

fn log_poisson_pmf(n: usize, mean: f64) -> f64 {
    if mean == 0.0 {
        return if n == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    n as f64 * mean.ln() - mean - ln_gamma(n as f64 + 1.0)
}

/// `Q(N_t = n)` for a mixed Poisson target: `E_P[ξ(Θ) Poisson(n; ρ(Θ) t)]`
/// by quadrature over the base mixing law.
pub fn count_pmf_oracle(s: &Scenario, t: f64, n: usize) -> Result<f64> {
    let mc = s.change_or_identity();
    let rho = match &mc.target {
        TargetKernel::Poisson { rho } => rho.clone(),
        _ => {
            return Err(CmrpError::InvalidParameter(format!(
                "scenario {} has no mixed Poisson target",
                s.name
            )))
        }
    };
    let mixing = &s.model.mixing;
    let rw = &mc.reweight;
    let r = mixing
        .expect(
            |th: &Theta| {
                let xi = rw.log_xi(mixing, th).unwrap_or(f64::NEG_INFINITY);
                (xi + log_poisson_pmf(n, rho.eval(th.as_slice()) * t)).exp()
            },
            &QuadConfig::with_tol(1e-12),
        )
        .require_converged()?;
    Ok(r.value)
}

/// Weighted estimates of `Q(N_t = n)` against the quadrature oracle.
pub fn check_pushforward_counts(
    s: &Scenario,
    t: f64,
    counts: &[usize],
    n_paths: usize,
    seed: u64,
    cfg: &VerifyConfig,
) -> Result<Vec<VerifyReport>> {
    let mc = s.change_or_identity();
    let rows = par_map_indexed(n_paths, seed, |_, rng| {
        let p = sample_path(&s.model, t, rng, DEFAULT_MAX_JUMPS)?;
        Ok((
            p.count_at(t)?,
            log_density(&mc, &s.model, &p, t)?.log_value.exp(),
        ))
    })?;
    counts
        .iter()
        .map(|&n| {
            let xs: Vec<f64> = rows
                .iter()
                .map(|&(k, w)| if k == n { w } else { 0.0 })
                .collect();
            let (m, se) = mean_se(&xs);
            Ok(VerifyReport::new(
                format!("pushforward_counts:{}:t={}:n={n}", s.name, fmt_num(t)),
                m,
                se,
                count_pmf_oracle(s, t, n)?,
                cfg.probability_floor,
                n_paths,
                seed,
            ))
        })
        .collect()
}

/// ξ-weighted draws of a statistic of `Θ` against its analytic law under the
/// target measure.
pub fn check_pushforward_mixing(
    s: &Scenario,
    n_paths: usize,
    seed: u64,
    cfg: &VerifyConfig,
) -> Result<VerifyReport> {
    let push = s.mixing_pushforward.as_ref().ok_or_else(|| {
        CmrpError::InvalidParameter(format!(
            "scenario {} declares no mixing_pushforward",
            s.name
        ))
    })?;
    let mc = s.change_or_identity();
    let mixing = &s.model.mixing;
    let rows = par_map_indexed(n_paths, seed, |_, rng| {
        let th = mixing.sample(rng);
        Ok((
            push.statistic.eval(th.as_slice()),
            mc.reweight.log_xi(mixing, &th)?,
        ))
    })?;
    let xs: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let logs: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let (d, ess) = weighted_ks(&xs, &logs, |x| push.target.cdf(x));
    Ok(VerifyReport::new(
        format!("pushforward_mixing:{}", s.name),
        d,
        0.0,
        0.0,
        cfg.ks_mixing / ess.sqrt(),
        n_paths,
        seed,
    ))
}

/// Medians of `ln M̃_t` at fixed `θ` across increasing horizons; passes iff
/// they strictly decrease. Estimate: number of strict decreases.
pub fn check_singularity_drift(
    s: &Scenario,
    theta: &Theta,
    horizons: &[f64],
    n_paths: usize,
    seed: u64,
) -> Result<VerifyReport> {
    let mc = s.change_or_identity();
    let name = format!("singularity_drift:{}:theta={}", s.name, theta);
    if mc.tilt.is_unit() && matches!(mc.target, TargetKernel::Identity) {
        return Err(CmrpError::DegenerateCheck(format!(
            "{name}: the conditional change is the identity, log densities are all 0"
        )));
    }
    let model = s.model.with_fixed_theta(theta)?;
    let horizon = horizons.iter().copied().fold(0.0, f64::max);
    let logs = par_map_indexed(n_paths, seed, |_, rng| {
        let p = sample_path_given(&model, theta, horizon, rng, DEFAULT_MAX_JUMPS)?;
        horizons
            .iter()
            .map(|&t| Ok(log_density_conditional(&mc, &model, &p, t)?.log_value))
            .collect::<Result<Vec<f64>>>()
    })?;
    let medians: Vec<f64> = (0..horizons.len())
        .map(|k| median(&mut logs.iter().map(|r| r[k]).collect::<Vec<_>>()))
        .collect();
    if medians.iter().all(|&m| m == 0.0) {
        return Err(CmrpError::DegenerateCheck(format!(
            "{name}: all medians are 0"
        )));
    }
    let decreases = medians.windows(2).filter(|w| w[1] < w[0]).count();
    Ok(VerifyReport::new(
        name,
        decreases as f64,
        0.0,
        (horizons.len() - 1) as f64,
        0.0,
        n_paths,
        seed,
    ))
}

/// Times at which the two Esscher routes are compared.
const PROBE_TIMES: [f64; 5] = [0.0, 1.0, 2.5, 5.0, 10.0];

/// Max over paths and probe times of the gap between the generic
/// conditional density of the Esscher change and the Lundberg martingale
/// written through the reserve.
pub fn check_esscher_routes(
    s: &Scenario,
    r: f64,
    theta: &Theta,
    n_paths: usize,
    seed: u64,
) -> Result<VerifyReport> {
    let model = s.model.with_fixed_theta(theta)?;
    let mc = esscher_change(&model, r, MixReweight::Unit)?;
    let horizon = PROBE_TIMES[PROBE_TIMES.len() - 1];
    let gaps = par_map_indexed(n_paths, seed, |_, rng| {
        let p = sample_path_given(&model, theta, horizon, rng, DEFAULT_MAX_JUMPS)?;
        let mut worst: f64 = 0.0;
        for &t in &PROBE_TIMES {
            let a = log_density_conditional(&mc, &model, &p, t)?.log_value;
            let b = if r == 0.0 {
                0.0
            } else {
                log_lundberg_martingale(&model, &p, r, t)?
            };
            worst = worst.max((a - b).abs());
        }
        Ok(worst)
    })?;
    let worst = gaps.iter().copied().fold(0.0, f64::max);
    Ok(VerifyReport::new(
        format!("esscher_routes:{}:r={}:theta={}", s.name, fmt_num(r), theta),
        worst,
        0.0,
        0.0,
        1e-10,
        n_paths,
        seed,
    ))
}

/// Max gap between the Poissonization density written with the shifted
/// claim exponent and the generic density with an exponential target.
pub fn check_poissonization_identity(
    s: &Scenario,
    times: &[f64],
    n_paths: usize,
    seed: u64,
) -> Result<VerifyReport> {
    let mc = s.change_or_identity();
    let rho = match &mc.target {
        TargetKernel::Poisson { rho } => rho.clone(),
        _ => {
            return Err(CmrpError::InvalidParameter(format!(
                "scenario {} has no mixed Poisson target",
                s.name
            )))
        }
    };
    let horizon = times.iter().copied().fold(0.0, f64::max);
    let gaps = par_map_indexed(n_paths, seed, |_, rng| {
        let p = sample_path(&s.model, horizon, rng, DEFAULT_MAX_JUMPS)?;
        let mut worst: f64 = 0.0;
        for &t in times {
            let a = log_density_poissonization(&s.model, &mc.tilt, &mc.reweight, &rho, &p, t)?
                .log_value;
            let b = log_density(&mc, &s.model, &p, t)?.log_value;
            worst = worst.max((a - b).abs());
        }
        Ok(worst)
    })?;
    let worst = gaps.iter().copied().fold(0.0, f64::max);
    Ok(VerifyReport::new(
        format!("poissonization_identity:{}", s.name),
        worst,
        0.0,
        0.0,
        1e-12,
        n_paths,
        seed,
    ))
}

/// One entry of a verification suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "check", rename_all = "snake_case", deny_unknown_fields)]
pub enum CheckSpec {
    Normalization {
        scenario: String,
        times: Vec<f64>,
        n_paths: usize,
    },
    Martingale {
        scenario: String,
        u: f64,
        t: f64,
        events: Vec<Event>,
        n_paths: usize,
    },
    PushforwardClaims {
        scenario: String,
        n_paths: usize,
    },
    PushforwardCounts {
        scenario: String,
        t: f64,
        counts: Vec<usize>,
        n_paths: usize,
    },
    PushforwardMixing {
        scenario: String,
        n_paths: usize,
    },
    SingularityDrift {
        scenario: String,
        theta: Vec<f64>,
        horizons: Vec<f64>,
        n_paths: usize,
    },
    EsscherRoutes {
        scenario: String,
        r: f64,
        theta: Vec<f64>,
        n_paths: usize,
    },
    PoissonizationIdentity {
        scenario: String,
        times: Vec<f64>,
        n_paths: usize,
    },
}

impl CheckSpec {
    pub fn scenario(&self) -> &str {
        match self {
            CheckSpec::Normalization { scenario, .. }
            | CheckSpec::Martingale { scenario, .. }
            | CheckSpec::PushforwardClaims { scenario, .. }
            | CheckSpec::PushforwardCounts { scenario, .. }
            | CheckSpec::PushforwardMixing { scenario, .. }
            | CheckSpec::SingularityDrift { scenario, .. }
            | CheckSpec::EsscherRoutes { scenario, .. }
            | CheckSpec::PoissonizationIdentity { scenario, .. } => scenario,
        }
    }

    pub fn run(&self, s: &Scenario, seed: u64, cfg: &VerifyConfig) -> Result<Vec<VerifyReport>> {
        match self {
            CheckSpec::Normalization { times, n_paths, .. } => {
                check_normalization(s, times, *n_paths, seed)
            }
            CheckSpec::Martingale {
                u,
                t,
                events,
                n_paths,
                ..
            } => check_martingale(s, *u, *t, events, *n_paths, seed),
            CheckSpec::PushforwardClaims { n_paths, .. } => {
                Ok(vec![check_pushforward_claims(s, *n_paths, seed, cfg)?])
            }
            CheckSpec::PushforwardCounts {
                t, counts, n_paths, ..
            } => check_pushforward_counts(s, *t, counts, *n_paths, seed, cfg),
            CheckSpec::PushforwardMixing { n_paths, .. } => {
                Ok(vec![check_pushforward_mixing(s, *n_paths, seed, cfg)?])
            }
            CheckSpec::SingularityDrift {
                theta,
                horizons,
                n_paths,
                ..
            } => Ok(vec![check_singularity_drift(
                s,
                &Theta::from_slice(theta)?,
                horizons,
                *n_paths,
                seed,
            )?]),
            CheckSpec::EsscherRoutes {
                r, theta, n_paths, ..
            } => Ok(vec![check_esscher_routes(
                s,
                *r,
                &Theta::from_slice(theta)?,
                *n_paths,
                seed,
            )?]),
            CheckSpec::PoissonizationIdentity { times, n_paths, .. } => {
                Ok(vec![check_poissonization_identity(
                    s, times, *n_paths, seed,
                )?])
            }
        }
    }
}

/// A list of checks with shared thresholds, as read from a suite file:
/// `{"ks_claims": 1.5, "ks_mixing": 1.63, "probability_floor": 0.001, "checks": [...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Suite {
    #[serde(default = "default_ks_claims")]
    pub ks_claims: f64,
    #[serde(default = "default_ks_mixing")]
    pub ks_mixing: f64,
    #[serde(default = "default_floor")]
    pub probability_floor: f64,
    pub checks: Vec<CheckSpec>,
}

impl Suite {
    pub fn config(&self) -> VerifyConfig {
        VerifyConfig {
            ks_claims: self.ks_claims,
            ks_mixing: self.ks_mixing,
            probability_floor: self.probability_floor,
        }
    }
}

const SUITE_SCENARIOS: [&str; 5] = [
    "example_ga_iga.json",
    "polya_lundberg.json",
    "poisson_lognormal.json",
    "poisson_beta.json",
    "esscher_r.json",
];

/// The built-in suite over the shipped scenarios.
pub fn default_suite() -> Suite {
    let mut checks = Vec::new();
    let events: Vec<Event> = vec![
        Event::CountEq(0),
        Event::CountAtLeast(2),
        Event::AggregateAtMostMedian,
    ];
    for sc in SUITE_SCENARIOS {
        checks.push(CheckSpec::Normalization {
            scenario: sc.into(),
            times: vec![1.0, 5.0],
            n_paths: 200_000,
        });
        checks.push(CheckSpec::Martingale {
            scenario: sc.into(),
            u: 1.0,
            t: 5.0,
            events: events.clone(),
            n_paths: 100_000,
        });
        if sc != "esscher_r.json" {
            checks.push(CheckSpec::PoissonizationIdentity {
                scenario: sc.into(),
                times: vec![1.0, 5.0],
                n_paths: 1_000,
            });
        }
    }
    checks.push(CheckSpec::PushforwardClaims {
        scenario: "esscher_r.json".into(),
        n_paths: 100_000,
    });
    checks.push(CheckSpec::PushforwardCounts {
        scenario: "polya_lundberg.json".into(),
        t: 1.0,
        counts: vec![0, 1, 2, 5],
        n_paths: 200_000,
    });
    for sc in ["poisson_beta.json", "poisson_lognormal.json"] {
        checks.push(CheckSpec::PushforwardMixing {
            scenario: sc.into(),
            n_paths: 100_000,
        });
    }
    for sc in ["exp_shift.json", "esscher_r.json"] {
        checks.push(CheckSpec::SingularityDrift {
            scenario: sc.into(),
            theta: vec![1.0],
            horizons: vec![5.0, 20.0, 80.0],
            n_paths: 10_000,
        });
    }
    checks.push(CheckSpec::EsscherRoutes {
        scenario: "esscher_r.json".into(),
        r: 1.0,
        theta: vec![1.0],
        n_paths: 1_000,
    });
    checks.push(CheckSpec::EsscherRoutes {
        scenario: "dirac_exp.json".into(),
        r: 0.3,
        theta: vec![1.5],
        n_paths: 1_000,
    });
    Suite {
        ks_claims: default_ks_claims(),
        ks_mixing: default_ks_mixing(),
        probability_floor: default_floor(),
        checks,
    }
}

/// Run every check of `suite`, loading scenarios through `load`. Checks run
/// concurrently; reports come back in suite order.
pub fn run_suite<L>(suite: &Suite, seed: u64, load: L) -> Result<Vec<VerifyReport>>
where
    L: Fn(&str) -> Result<Scenario>,
{
    let mut scenarios: BTreeMap<&str, Scenario> = BTreeMap::new();
    for c in &suite.checks {
        if !scenarios.contains_key(c.scenario()) {
            scenarios.insert(c.scenario(), load(c.scenario())?);
        }
    }
    let cfg = suite.config();
    let per_check: Vec<Result<Vec<VerifyReport>>> = suite
        .checks
        .par_iter()
        .map(|c| c.run(&scenarios[c.scenario()], seed, &cfg))
        .collect();
    let mut out = Vec::new();
    for r in per_check {
        out.extend(r?);
    }
    Ok(out)
}
