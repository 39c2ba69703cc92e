//! Adjustment coefficients and ruin probabilities, per mixing value and
//! mixed over the mixing law.

use std::cell::RefCell;
use std::fmt;

use crate::distributions::{DistSpec, Support};
use crate::error::{CmrpError, Result};
use crate::model::{CmrpModel, Theta};
use crate::numerics::quadrature::{integrate, QuadConfig};
use crate::numerics::root::{brent, RootConfig};
use crate::simulate::{par_map_indexed, sample_path, DEFAULT_MAX_JUMPS};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RuinMethod {
    ClosedForm,
    Quadrature,
    MonteCarlo,
}

impl fmt::Display for RuinMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RuinMethod::ClosedForm => "closed_form",
            RuinMethod::Quadrature => "quadrature",
            RuinMethod::MonteCarlo => "monte_carlo",
        })
    }
}

/// A ruin probability. For Monte Carlo, `error_bound` is the binomial
/// standard error and `psi` a finite-horizon lower bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RuinResult {
    pub u: f64,
    pub psi: f64,
    pub method: RuinMethod,
    pub error_bound: f64,
}

/// `c(θ) E_θ[W] - E[X]`; positive iff the net-profit condition holds.
pub fn net_profit_margin(model: &CmrpModel, theta: &Theta) -> Result<f64> {
    let c = model.premium_at(theta)?;
    Ok(c * model.kernel_at(theta)?.mean()? - model.claims.mean()?)
}

/// Positive root `R(θ)` of `E[e^{rX}] E_θ[e^{-c(θ) r W}] = 1`.
pub fn adjustment_r(model: &CmrpModel, theta: &Theta) -> Result<f64> {
    let margin = net_profit_margin(model, theta)?;
    if !(margin > 0.0) {
        return Err(CmrpError::NoPositiveRoot(format!(
            "net-profit condition fails at theta={theta} (margin {margin})"
        )));
    }
    let c = model.premium_at(theta)?;
    let kernel = model.kernel_at(theta)?;
    if let (DistSpec::Exponential { rate: eta }, DistSpec::Exponential { rate: lambda }) =
        (&model.claims, &kernel)
    {
        return Ok(eta - lambda / c);
    }
    let h = |r: f64| match (model.claims.ln_mgf(r), kernel.ln_mgf(-c * r)) {
        (Ok(a), Ok(b)) => a + b,
        _ => f64::INFINITY,
    };
    let abscissa = model.claims.mgf_abscissa();
    if !(abscissa > 0.0) {
        return Err(CmrpError::NoPositiveRoot(format!(
            "claim MGF {} is infinite for every r > 0",
            model.claims
        )));
    }
    // Upper end: approach the abscissa (or grow) until h turns positive.
    let mut hi = if abscissa.is_finite() {
        0.5 * abscissa
    } else {
        1.0
    };
    let mut h_hi = h(hi);
    let mut step = 0.5 * abscissa;
    for _ in 0..1100 {
        if h_hi > 0.0 && h_hi.is_finite() {
            break;
        }
        if abscissa.is_finite() {
            step *= 0.5;
            let next = abscissa - step;
            if next == hi {
                break;
            }
            hi = next;
        } else {
            hi *= 2.0;
        }
        h_hi = h(hi);
    }
    if !(h_hi > 0.0 && h_hi.is_finite()) {
        return Err(CmrpError::NoPositiveRoot(format!(
            "Lundberg function stays non-positive up to r={hi} at theta={theta}"
        )));
    }
    let mut lo = 0.5 * hi;
    let mut h_lo = h(lo);
    for _ in 0..1100 {
        if h_lo < 0.0 {
            break;
        }
        lo *= 0.5;
        h_lo = h(lo);
    }
    let root = brent(h, lo, hi, &RootConfig::default())?;
    Ok(root)
}

fn exponential_claim_rate(model: &CmrpModel) -> Result<f64> {
    match model.claims {
        DistSpec::Exponential { rate } => Ok(rate),
        ref other => Err(CmrpError::UnsupportedClaimLaw(format!(
            "closed-form ruin needs exponential claims, got {other}; use the Monte Carlo method"
        ))),
    }
}

/// `ψ_θ(u) = (1 - R(θ)/η) e^{-R(θ) u}` for `Exponential(η)` claims; 1 where
/// the net-profit condition fails.
pub fn psi_theta(model: &CmrpModel, theta: &Theta, u: f64) -> Result<f64> {
    let eta = exponential_claim_rate(model)?;
    if !(u >= 0.0) {
        return Err(CmrpError::Domain(format!(
            "initial reserve must be >= 0, got {u}"
        )));
    }
    if !(net_profit_margin(model, theta)? > 0.0) {
        return Ok(1.0);
    }
    let r = adjustment_r(model, theta)?;
    Ok((1.0 - r / eta) * (-r * u).exp())
}

/// Points where the net-profit margin changes sign, found by a scan of the
/// mixing support refined with Brent.
fn net_profit_boundaries(model: &CmrpModel, law: &DistSpec) -> Result<Vec<f64>> {
    let grid: Vec<f64> = match law.support() {
        Support::Positive => (0..=480)
            .map(|i| 10f64.powf(-8.0 + i as f64 / 30.0))
            .collect(),
        Support::Real => {
            let pos: Vec<f64> = (0..=300)
                .map(|i| 10f64.powf(-6.0 + i as f64 / 25.0))
                .collect();
            pos.iter()
                .rev()
                .map(|x| -x)
                .chain(std::iter::once(0.0))
                .chain(pos.iter().copied())
                .collect()
        }
        Support::Unit => (1..1000).map(|i| i as f64 / 1000.0).collect(),
        Support::Point(p) => vec![p],
    };
    let margin = |x: f64| net_profit_margin(model, &Theta::scalar(x));
    let mut out = Vec::new();
    let mut prev = (grid[0], margin(grid[0])?);
    for &x in &grid[1..] {
        let m = margin(x)?;
        if (m > 0.0) != (prev.1 > 0.0) {
            let root = brent(
                |y| margin(y).unwrap_or(f64::NAN),
                prev.0,
                x,
                &RootConfig::default(),
            )?;
            out.push(root);
        }
        prev = (x, m);
    }
    Ok(out)
}

/// `ψ(u) = ∫ ψ_θ(u) P_Θ(dθ)` by adaptive quadrature, split where the
/// net-profit condition changes; regions where it fails contribute their
/// probability mass.
pub fn psi_mixed(model: &CmrpModel, u: f64, quad: &QuadConfig) -> Result<RuinResult> {
    let law = match model.mixing.components() {
        [law] => law,
        _ => {
            return Err(CmrpError::InvalidParameter(
                "mixed ruin probability needs a one-dimensional mixing law".into(),
            ))
        }
    };
    if let DistSpec::Dirac { point } = *law {
        return Ok(RuinResult {
            u,
            psi: psi_theta(model, &Theta::scalar(point), u)?,
            method: RuinMethod::ClosedForm,
            error_bound: 0.0,
        });
    }
    exponential_claim_rate(model)?;
    let (lo, hi) = law.support().bounds();
    let mut cuts = vec![lo];
    cuts.extend(net_profit_boundaries(model, law)?);
    cuts.push(hi);

    let failure = RefCell::new(None);
    let mut psi = 0.0;
    let mut err = 0.0;
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        let probe = match (a.is_finite(), b.is_finite()) {
            (true, true) => 0.5 * (a + b),
            (true, false) => a.abs().max(1.0) * 2.0 + a,
            (false, true) => b - b.abs().max(1.0) * 2.0,
            (false, false) => 0.0,
        };
        if !(net_profit_margin(model, &Theta::scalar(probe))? > 0.0) {
            psi += law.cdf(b) - law.cdf(a);
            continue;
        }
        let r = integrate(
            |th: f64| {
                let w = law.pdf(th);
                if w == 0.0 {
                    return 0.0;
                }
                match psi_theta(model, &Theta::scalar(th), u) {
                    Ok(p) => p * w,
                    Err(e) => {
                        failure.borrow_mut().get_or_insert(e);
                        0.0
                    }
                }
            },
            a,
            b,
            quad,
        )
        .require_converged()?;
        psi += r.value;
        err += r.error;
    }
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    Ok(RuinResult {
        u,
        psi: psi.clamp(0.0, 1.0),
        method: RuinMethod::Quadrature,
        error_bound: err,
    })
}

/// Fraction of simulated paths ruined by `horizon`; a lower bound for the
/// infinite-horizon probability.
pub fn psi_monte_carlo(
    model: &CmrpModel,
    u: f64,
    horizon: f64,
    n_paths: usize,
    seed: u64,
) -> Result<RuinResult> {
    if !(horizon > 0.0) {
        return Err(CmrpError::InvalidParameter(format!(
            "horizon must be positive, got {horizon}"
        )));
    }
    if n_paths == 0 {
        return Err(CmrpError::InvalidParameter("need at least one path".into()));
    }
    let ruined = par_map_indexed(n_paths, seed, |_, rng| {
        let p = sample_path(model, horizon, rng, DEFAULT_MAX_JUMPS)?;
        Ok(p.ruin_time(model, u)?.is_some())
    })?;
    let k = ruined.iter().filter(|&&r| r).count();
    let n = n_paths as f64;
    let psi = k as f64 / n;
    Ok(RuinResult {
        u,
        psi,
        method: RuinMethod::MonteCarlo,
        error_bound: (psi * (1.0 - psi) / n).sqrt(),
    })
}
