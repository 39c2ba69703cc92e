//! Parametric one-dimensional laws with exact densities, distribution
//! functions, samplers, moment generating functions and log density ratios.
//!
//! Parameter conventions: `Gamma { rate, shape }` so that a shape-one gamma is
//! the exponential law with the same rate; `InverseGamma { scale, shape }` is
//! the law of `1/Y` for `Y ~ Gamma { rate: scale, shape }`, with density
//! proportional to `x^{-(shape+1)} e^{-scale/x}`.
//!
//! All density arithmetic happens in log space. `cdf` and `survival` are
//! derived from a single primary value per point, chosen from whichever tail
//! is smaller, so the two always sum to one as computed.

use std::collections::BTreeMap;
use std::fmt;

use rand::Rng;
use rand_distr::Distribution;

use crate::error::{CmrpError, Result};
use crate::numerics::quadrature::{integrate, QuadConfig, QuadResult};
use crate::numerics::special::{beta_reg, ln_gamma, ln_gamma_pq, ln_normal_sf, normal_cdf};

const LN_2PI: f64 = 1.837_877_066_409_345_3;

/// Support of a law, compared structurally for equivalence checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Support {
    /// `(0, ∞)`
    Positive,
    /// `(-∞, ∞)`
    Real,
    /// `(0, 1)`
    Unit,
    Point(f64),
}

impl Support {
    pub fn contains(&self, x: f64) -> bool {
        match *self {
            Support::Positive => x > 0.0 && x < f64::INFINITY,
            Support::Real => x.is_finite(),
            Support::Unit => x > 0.0 && x < 1.0,
            Support::Point(p) => x == p,
        }
    }

    /// Interval endpoints, used as integration limits.
    pub fn bounds(&self) -> (f64, f64) {
        match *self {
            Support::Positive => (0.0, f64::INFINITY),
            Support::Real => (f64::NEG_INFINITY, f64::INFINITY),
            Support::Unit => (0.0, 1.0),
            Support::Point(p) => (p, p),
        }
    }
}

/// A law with density proportional to `base(x) * exp(-s * x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tilted {
    pub base: DistSpec,
    pub s: f64,
    /// `ln E_base[e^{-s X}]`
    pub log_norm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum DistSpec {
    Exponential { rate: f64 },
    Gamma { rate: f64, shape: f64 },
    InverseGamma { scale: f64, shape: f64 },
    LogNormal { mu: f64, sigma2: f64 },
    Normal { mu: f64, sigma2: f64 },
    Beta { a: f64, b: f64 },
    Dirac { point: f64 },
    Tilted(Box<Tilted>),
}

impl fmt::Display for DistSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DistSpec::Exponential { rate } => write!(f, "Exponential(rate={rate})"),
            DistSpec::Gamma { rate, shape } => write!(f, "Gamma(rate={rate}, shape={shape})"),
            DistSpec::InverseGamma { scale, shape } => {
                write!(f, "InverseGamma(scale={scale}, shape={shape})")
            }
            DistSpec::LogNormal { mu, sigma2 } => write!(f, "LogNormal(mu={mu}, sigma2={sigma2})"),
            DistSpec::Normal { mu, sigma2 } => write!(f, "Normal(mu={mu}, sigma2={sigma2})"),
            DistSpec::Beta { a, b } => write!(f, "Beta(a={a}, b={b})"),
            DistSpec::Dirac { point } => write!(f, "Dirac(point={point})"),
            DistSpec::Tilted(t) => write!(f, "Tilted({}, s={})", t.base, t.s),
        }
    }
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(CmrpError::InvalidParameter(format!(
            "{name} must be positive and finite, got {v}"
        )))
    }
}

fn finite(name: &str, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(CmrpError::InvalidParameter(format!(
            "{name} must be finite, got {v}"
        )))
    }
}

fn quad_cfg() -> QuadConfig {
    QuadConfig {
        abs_tol: 1e-13,
        rel_tol: 1e-12,
        max_panels: 8000,
    }
}

impl DistSpec {
    pub fn exponential(rate: f64) -> Result<Self> {
        Ok(DistSpec::Exponential {
            rate: positive("rate", rate)?,
        })
    }

    pub fn gamma(rate: f64, shape: f64) -> Result<Self> {
        Ok(DistSpec::Gamma {
            rate: positive("rate", rate)?,
            shape: positive("shape", shape)?,
        })
    }

    pub fn inverse_gamma(scale: f64, shape: f64) -> Result<Self> {
        Ok(DistSpec::InverseGamma {
            scale: positive("scale", scale)?,
            shape: positive("shape", shape)?,
        })
    }

    pub fn lognormal(mu: f64, sigma2: f64) -> Result<Self> {
        Ok(DistSpec::LogNormal {
            mu: finite("mu", mu)?,
            sigma2: positive("sigma2", sigma2)?,
        })
    }

    pub fn normal(mu: f64, sigma2: f64) -> Result<Self> {
        Ok(DistSpec::Normal {
            mu: finite("mu", mu)?,
            sigma2: positive("sigma2", sigma2)?,
        })
    }

    pub fn beta(a: f64, b: f64) -> Result<Self> {
        Ok(DistSpec::Beta {
            a: positive("a", a)?,
            b: positive("b", b)?,
        })
    }

    pub fn dirac(point: f64) -> Result<Self> {
        Ok(DistSpec::Dirac {
            point: finite("point", point)?,
        })
    }

    /// Re-run the parameter checks of the constructors.
    pub fn validate(&self) -> Result<()> {
        match *self {
            DistSpec::Exponential { rate } => DistSpec::exponential(rate).map(drop),
            DistSpec::Gamma { rate, shape } => DistSpec::gamma(rate, shape).map(drop),
            DistSpec::InverseGamma { scale, shape } => {
                DistSpec::inverse_gamma(scale, shape).map(drop)
            }
            DistSpec::LogNormal { mu, sigma2 } => DistSpec::lognormal(mu, sigma2).map(drop),
            DistSpec::Normal { mu, sigma2 } => DistSpec::normal(mu, sigma2).map(drop),
            DistSpec::Beta { a, b } => DistSpec::beta(a, b).map(drop),
            DistSpec::Dirac { point } => DistSpec::dirac(point).map(drop),
            DistSpec::Tilted(ref t) => {
                t.base.validate()?;
                if t.s.is_finite() && t.log_norm.is_finite() {
                    Ok(())
                } else {
                    Err(CmrpError::InvalidParameter(format!(
                        "tilted law needs finite s and normalizer, got s={} ln_norm={}",
                        t.s, t.log_norm
                    )))
                }
            }
        }
    }

    /// Build from a family name and the documented parameter keys
    /// (`rate`, `shape`, `scale`, `mu`, `sigma2`, `a`, `b`, `point`).
    pub fn from_params(family: &str, params: &BTreeMap<String, f64>) -> Result<Self> {
        let allowed: &[&str] = match family {
            "exponential" => &["rate"],
            "gamma" => &["rate", "shape"],
            "inverse_gamma" => &["scale", "shape"],
            "lognormal" | "normal" => &["mu", "sigma2"],
            "beta" => &["a", "b"],
            "dirac" => &["point"],
            other => {
                return Err(CmrpError::InvalidParameter(format!(
                    "unknown family `{other}` (expected exponential, gamma, inverse_gamma, lognormal, normal, beta, dirac)"
                )))
            }
        };
        if let Some(extra) = params.keys().find(|k| !allowed.contains(&k.as_str())) {
            return Err(CmrpError::InvalidParameter(format!(
                "family `{family}` does not take parameter `{extra}` (expects {allowed:?})"
            )));
        }
        let get = |k: &str| {
            params.get(k).copied().ok_or_else(|| {
                CmrpError::InvalidParameter(format!("family `{family}` requires parameter `{k}`"))
            })
        };
        match family {
            "exponential" => DistSpec::exponential(get("rate")?),
            "gamma" => DistSpec::gamma(get("rate")?, get("shape")?),
            "inverse_gamma" => DistSpec::inverse_gamma(get("scale")?, get("shape")?),
            "lognormal" => DistSpec::lognormal(get("mu")?, get("sigma2")?),
            "normal" => DistSpec::normal(get("mu")?, get("sigma2")?),
            "beta" => DistSpec::beta(get("a")?, get("b")?),
            _ => DistSpec::dirac(get("point")?),
        }
    }

    pub fn family_name(&self) -> &'static str {
        match self {
            DistSpec::Exponential { .. } => "exponential",
            DistSpec::Gamma { .. } => "gamma",
            DistSpec::InverseGamma { .. } => "inverse_gamma",
            DistSpec::LogNormal { .. } => "lognormal",
            DistSpec::Normal { .. } => "normal",
            DistSpec::Beta { .. } => "beta",
            DistSpec::Dirac { .. } => "dirac",
            DistSpec::Tilted(_) => "tilted",
        }
    }

    pub fn support(&self) -> Support {
        match self {
            DistSpec::Exponential { .. }
            | DistSpec::Gamma { .. }
            | DistSpec::InverseGamma { .. }
            | DistSpec::LogNormal { .. } => Support::Positive,
            DistSpec::Normal { .. } => Support::Real,
            DistSpec::Beta { .. } => Support::Unit,
            DistSpec::Dirac { point } => Support::Point(*point),
            DistSpec::Tilted(t) => t.base.support(),
        }
    }

    pub fn is_dirac(&self) -> bool {
        matches!(self, DistSpec::Dirac { .. })
    }

    /// Log density (log mass for `Dirac`); `-∞` outside the support.
    pub fn log_pdf(&self, x: f64) -> f64 {
        if !self.support().contains(x) {
            return f64::NEG_INFINITY;
        }
        match *self {
            DistSpec::Exponential { rate } => rate.ln() - rate * x,
            DistSpec::Gamma { rate, shape } => {
                if shape == 1.0 {
                    rate.ln() - rate * x
                } else {
                    shape * rate.ln() - ln_gamma(shape) + (shape - 1.0) * x.ln() - rate * x
                }
            }
            DistSpec::InverseGamma { scale, shape } => {
                shape * scale.ln() - ln_gamma(shape) - (shape + 1.0) * x.ln() - scale / x
            }
            DistSpec::LogNormal { mu, sigma2 } => {
                let lx = x.ln();
                -0.5 * (LN_2PI + sigma2.ln()) - lx - (lx - mu).powi(2) / (2.0 * sigma2)
            }
            DistSpec::Normal { mu, sigma2 } => {
                -0.5 * (LN_2PI + sigma2.ln()) - (x - mu).powi(2) / (2.0 * sigma2)
            }
            DistSpec::Beta { a, b } => {
                if a == 1.0 && b == 1.0 {
                    return 0.0;
                }
                ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b)
                    + (a - 1.0) * x.ln()
                    + (b - 1.0) * (-x).ln_1p()
            }
            DistSpec::Dirac { .. } => 0.0,
            DistSpec::Tilted(ref t) => t.base.log_pdf(x) - t.s * x - t.log_norm,
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        self.log_pdf(x).exp()
    }

    /// `(cdf(x), survival(x))`, derived from one primary value.
    pub fn cdf_sf(&self, x: f64) -> (f64, f64) {
        let from_cdf = |c: f64| (c, 1.0 - c);
        let from_sf = |s: f64| (1.0 - s, s);
        match *self {
            DistSpec::Exponential { rate } => {
                if x <= 0.0 {
                    return (0.0, 1.0);
                }
                let z = rate * x;
                if z < std::f64::consts::LN_2 {
                    from_cdf(-(-z).exp_m1())
                } else {
                    from_sf((-z).exp())
                }
            }
            DistSpec::Gamma { rate, shape } => {
                if x <= 0.0 {
                    return (0.0, 1.0);
                }
                let (lp, lq) = ln_gamma_pq(shape, rate * x);
                if lp <= -std::f64::consts::LN_2 {
                    from_cdf(lp.exp())
                } else {
                    from_sf(lq.exp())
                }
            }
            DistSpec::InverseGamma { scale, shape } => {
                if x <= 0.0 {
                    return (0.0, 1.0);
                }
                let (lp, lq) = ln_gamma_pq(shape, scale / x);
                // cdf = Q(shape, scale/x), survival = P(shape, scale/x)
                if lq <= -std::f64::consts::LN_2 {
                    from_cdf(lq.exp())
                } else {
                    from_sf(lp.exp())
                }
            }
            DistSpec::LogNormal { mu, sigma2 } => {
                if x <= 0.0 {
                    return (0.0, 1.0);
                }
                let z = (x.ln() - mu) / sigma2.sqrt();
                if z < 0.0 {
                    from_cdf(normal_cdf(z))
                } else {
                    from_sf(normal_cdf(-z))
                }
            }
            DistSpec::Normal { mu, sigma2 } => {
                let z = (x - mu) / sigma2.sqrt();
                if z < 0.0 {
                    from_cdf(normal_cdf(z))
                } else {
                    from_sf(normal_cdf(-z))
                }
            }
            DistSpec::Beta { a, b } => {
                if x <= 0.0 {
                    return (0.0, 1.0);
                }
                if x >= 1.0 {
                    return (1.0, 0.0);
                }
                let c = beta_reg(a, b, x);
                if c <= 0.5 {
                    from_cdf(c)
                } else {
                    from_sf(beta_reg(b, a, 1.0 - x))
                }
            }
            DistSpec::Dirac { point } => {
                if x >= point {
                    (1.0, 0.0)
                } else {
                    (0.0, 1.0)
                }
            }
            DistSpec::Tilted(_) => {
                let (lo, hi) = self.support().bounds();
                if x <= lo {
                    return (0.0, 1.0);
                }
                if x >= hi {
                    return (1.0, 0.0);
                }
                let c = self.integrate_pdf(lo, x).value.clamp(0.0, 1.0);
                if c <= 0.5 {
                    from_cdf(c)
                } else {
                    from_sf(self.integrate_pdf(x, hi).value.clamp(0.0, 1.0))
                }
            }
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        self.cdf_sf(x).0
    }

    pub fn survival(&self, x: f64) -> f64 {
        self.cdf_sf(x).1
    }

    /// `ln survival(x)`, accurate far into the upper tail.
    pub fn log_survival(&self, x: f64) -> f64 {
        match *self {
            DistSpec::Exponential { rate } => {
                if x <= 0.0 {
                    0.0
                } else {
                    -rate * x
                }
            }
            DistSpec::Gamma { rate, shape } => {
                if x <= 0.0 {
                    0.0
                } else if shape == 1.0 {
                    -rate * x
                } else {
                    ln_gamma_pq(shape, rate * x).1
                }
            }
            DistSpec::InverseGamma { scale, shape } => {
                if x <= 0.0 {
                    0.0
                } else {
                    ln_gamma_pq(shape, scale / x).0
                }
            }
            DistSpec::LogNormal { mu, sigma2 } => {
                if x <= 0.0 {
                    0.0
                } else {
                    ln_normal_sf((x.ln() - mu) / sigma2.sqrt())
                }
            }
            DistSpec::Normal { mu, sigma2 } => ln_normal_sf((x - mu) / sigma2.sqrt()),
            DistSpec::Tilted(_) => {
                let (lo, hi) = self.support().bounds();
                if x <= lo {
                    0.0
                } else if x >= hi {
                    f64::NEG_INFINITY
                } else {
                    // ∫_x^∞ pdf, computed relative to the log density at x to
                    // avoid underflow deep in the tail
                    let anchor = self.log_pdf(x);
                    let r = integrate(
                        |y: f64| (self.log_pdf(y) - anchor).exp(),
                        x,
                        hi,
                        &quad_cfg(),
                    );
                    anchor + r.value.ln()
                }
            }
            _ => self.survival(x).ln(),
        }
    }

    fn integrate_pdf(&self, a: f64, b: f64) -> QuadResult {
        integrate(|y: f64| self.pdf(y), a, b, &quad_cfg())
    }

    /// `E[g(X)]` by adaptive quadrature over the support (point evaluation
    /// for `Dirac`).
    pub fn expect<F: Fn(f64) -> f64>(&self, g: F, cfg: &QuadConfig) -> QuadResult {
        if let DistSpec::Dirac { point } = *self {
            return QuadResult {
                value: g(point),
                error: 0.0,
                panels: 0,
                converged: true,
            };
        }
        let (lo, hi) = self.support().bounds();
        integrate(
            |x: f64| {
                let w = self.log_pdf(x).exp();
                if w == 0.0 {
                    0.0
                } else {
                    g(x) * w
                }
            },
            lo,
            hi,
            cfg,
        )
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            DistSpec::Exponential { rate } => rand_distr::Exp::new(rate)
                .expect("validated rate")
                .sample(rng),
            DistSpec::Gamma { rate, shape } => rand_distr::Gamma::new(shape, 1.0 / rate)
                .expect("validated gamma")
                .sample(rng),
            DistSpec::InverseGamma { scale, shape } => {
                1.0 / rand_distr::Gamma::new(shape, 1.0 / scale)
                    .expect("validated gamma")
                    .sample(rng)
            }
            DistSpec::LogNormal { mu, sigma2 } => rand_distr::LogNormal::new(mu, sigma2.sqrt())
                .expect("validated lognormal")
                .sample(rng),
            DistSpec::Normal { mu, sigma2 } => rand_distr::Normal::new(mu, sigma2.sqrt())
                .expect("validated normal")
                .sample(rng),
            DistSpec::Beta { a, b } => rand_distr::Beta::new(a, b)
                .expect("validated beta")
                .sample(rng),
            DistSpec::Dirac { point } => point,
            DistSpec::Tilted(ref t) => {
                // Rejection from the base law; acceptance e^{-s x} <= 1 needs
                // s >= 0 on a positive support, which `exp_tilt` enforces.
                loop {
                    let x = t.base.sample(rng);
                    let u: f64 = rng.random();
                    if u < (-t.s * x).exp() {
                        return x;
                    }
                }
            }
        }
    }

    /// Upper abscissa of convergence of the MGF (`+∞` when finite everywhere).
    pub fn mgf_abscissa(&self) -> f64 {
        match *self {
            DistSpec::Exponential { rate } => rate,
            DistSpec::Gamma { rate, .. } => rate,
            DistSpec::InverseGamma { .. } | DistSpec::LogNormal { .. } => 0.0,
            DistSpec::Normal { .. } | DistSpec::Beta { .. } | DistSpec::Dirac { .. } => {
                f64::INFINITY
            }
            DistSpec::Tilted(ref t) => t.base.mgf_abscissa() + t.s,
        }
    }

    /// `ln E[e^{sX}]`.
    pub fn ln_mgf(&self, s: f64) -> Result<f64> {
        if s == 0.0 {
            return Ok(0.0);
        }
        let divergent = || CmrpError::DivergentMgf {
            s,
            bound: self.mgf_abscissa(),
        };
        match *self {
            DistSpec::Exponential { rate } => {
                if s < rate {
                    Ok(rate.ln() - (rate - s).ln())
                } else {
                    Err(divergent())
                }
            }
            DistSpec::Gamma { rate, shape } => {
                if s < rate {
                    Ok(shape * (rate.ln() - (rate - s).ln()))
                } else {
                    Err(divergent())
                }
            }
            DistSpec::InverseGamma { .. } | DistSpec::LogNormal { .. } => {
                if s > 0.0 {
                    return Err(divergent());
                }
                let r = self
                    .expect(|x| (s * x).exp(), &quad_cfg())
                    .require_converged()?;
                Ok(r.value.ln())
            }
            DistSpec::Normal { mu, sigma2 } => Ok(mu * s + 0.5 * sigma2 * s * s),
            DistSpec::Beta { .. } => {
                let r = self
                    .expect(|x| (s * x).exp(), &quad_cfg())
                    .require_converged()?;
                Ok(r.value.ln())
            }
            DistSpec::Dirac { point } => Ok(s * point),
            DistSpec::Tilted(ref t) => {
                if s >= self.mgf_abscissa() && self.mgf_abscissa().is_finite() {
                    return Err(divergent());
                }
                Ok(t.base.ln_mgf(s - t.s)? - t.log_norm)
            }
        }
    }

    /// `E[e^{sX}]`; `DivergentMgf` at or beyond the abscissa of convergence.
    pub fn mgf(&self, s: f64) -> Result<f64> {
        let v = self.ln_mgf(s)?.exp();
        if v.is_finite() {
            Ok(v)
        } else {
            Err(CmrpError::DivergentMgf {
                s,
                bound: self.mgf_abscissa(),
            })
        }
    }

    pub fn mean(&self) -> Result<f64> {
        match *self {
            DistSpec::Exponential { rate } => Ok(1.0 / rate),
            DistSpec::Gamma { rate, shape } => Ok(shape / rate),
            DistSpec::InverseGamma { scale, shape } => {
                if shape > 1.0 {
                    Ok(scale / (shape - 1.0))
                } else {
                    Err(CmrpError::Model(format!(
                        "inverse gamma with shape {shape} <= 1 has no finite mean"
                    )))
                }
            }
            DistSpec::LogNormal { mu, sigma2 } => Ok((mu + 0.5 * sigma2).exp()),
            DistSpec::Normal { mu, .. } => Ok(mu),
            DistSpec::Beta { a, b } => Ok(a / (a + b)),
            DistSpec::Dirac { point } => Ok(point),
            DistSpec::Tilted(_) => Ok(self.expect(|x| x, &quad_cfg()).require_converged()?.value),
        }
    }

    /// The law with density proportional to `pdf(x) * exp(-s x)`.
    ///
    /// Exponential and gamma laws stay in closed form; other positive laws
    /// become a numerically normalized `Tilted` law, which requires `s >= 0`.
    pub fn exp_tilt(&self, s: f64) -> Result<DistSpec> {
        if s == 0.0 {
            return Ok(self.clone());
        }
        match *self {
            DistSpec::Exponential { rate } => DistSpec::exponential(rate + s),
            DistSpec::Gamma { rate, shape } => DistSpec::gamma(rate + s, shape),
            DistSpec::Tilted(ref t) => {
                let total = t.s + s;
                if total == 0.0 {
                    return Ok(t.base.clone());
                }
                t.base.exp_tilt(total)
            }
            _ => {
                if self.support() != Support::Positive {
                    return Err(CmrpError::Domain(format!(
                        "exponential tilt of {self} needs a positive support"
                    )));
                }
                if s < 0.0 {
                    return Err(CmrpError::Domain(format!(
                        "numeric exponential tilt of {self} needs s >= 0, got {s}"
                    )));
                }
                let log_norm = self.ln_mgf(-s)?;
                Ok(DistSpec::Tilted(Box::new(Tilted {
                    base: self.clone(),
                    s,
                    log_norm,
                })))
            }
        }
    }

    /// `ln (d self / d den)(x)`; see [`rn_log_ratio`].
    pub fn log_ratio_to(&self, den: &DistSpec, x: f64) -> Result<f64> {
        rn_log_ratio(self, den, x)
    }
}

/// Log Radon–Nikodym derivative `ln (dNum/dDen)(x)` as a difference of log
/// densities. Supports must match structurally.
pub fn rn_log_ratio(num: &DistSpec, den: &DistSpec, x: f64) -> Result<f64> {
    let support = num.support();
    if support != den.support() {
        return Err(CmrpError::NonEquivalentSupports {
            num: num.to_string(),
            den: den.to_string(),
        });
    }
    if !support.contains(x) {
        return Err(CmrpError::Domain(format!(
            "x={x} lies outside the common support {support:?}"
        )));
    }
    Ok(num.log_pdf(x) - den.log_pdf(x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    fn presets() -> Vec<DistSpec> {
        vec![
            DistSpec::exponential(2.0).unwrap(),
            DistSpec::gamma(2.0, 1.0).unwrap(),
            DistSpec::gamma(3.0, 2.0).unwrap(),
            DistSpec::gamma(1.0, 0.5).unwrap(),
            DistSpec::gamma(20.0, 20.0).unwrap(),
            DistSpec::inverse_gamma(19.0, 20.0).unwrap(),
            DistSpec::inverse_gamma(1.0, 3.0).unwrap(),
            DistSpec::lognormal(0.0, 0.25).unwrap(),
            DistSpec::normal(0.1, 0.25).unwrap(),
            DistSpec::beta(1.0, 1.0).unwrap(),
            DistSpec::beta(2.0, 3.0).unwrap(),
            DistSpec::lognormal(0.0, 0.25)
                .unwrap()
                .exp_tilt(0.7)
                .unwrap(),
        ]
    }

    #[test]
    fn pdf_examples() {
        let e = DistSpec::exponential(2.0).unwrap();
        assert!(close(e.pdf(1.0), 2.0 * (-2f64).exp(), 1e-15));
        let g = DistSpec::gamma(2.0, 1.0).unwrap();
        assert!(close(g.pdf(0.5), 2.0 * (-1f64).exp(), 1e-15));
        assert_eq!(DistSpec::beta(1.0, 1.0).unwrap().pdf(0.3), 1.0);
        assert!(close(e.pdf(1.0), 0.270671, 1e-6));
    }

    #[test]
    fn outside_support_is_neg_infinity() {
        let e = DistSpec::exponential(2.0).unwrap();
        assert_eq!(e.log_pdf(-1.0), f64::NEG_INFINITY);
        assert_eq!(e.pdf(-1.0), 0.0);
        assert_eq!(
            DistSpec::beta(2.0, 2.0).unwrap().log_pdf(1.5),
            f64::NEG_INFINITY
        );
    }

    #[test]
    fn cdf_examples() {
        let e = DistSpec::exponential(2.0).unwrap();
        assert!(close(e.survival(1.0), (-2f64).exp(), 1e-16));
        for d in presets()
            .into_iter()
            .filter(|d| d.support() != Support::Real)
        {
            assert_eq!(d.cdf(-1.0), 0.0, "{d}");
        }
        assert_eq!(DistSpec::dirac(1.5).unwrap().cdf(1.5), 1.0);
        assert_eq!(DistSpec::dirac(1.5).unwrap().cdf(1.4), 0.0);
    }

    #[test]
    fn densities_integrate_to_one() {
        for d in presets() {
            let r = d.expect(|_| 1.0, &QuadConfig::with_tol(1e-11));
            assert!(r.converged, "{d}: {r:?}");
            assert!(close(r.value, 1.0, 1e-8), "{d}: {}", r.value);
        }
    }

    #[test]
    fn cdf_matches_integrated_density() {
        for d in presets() {
            for &x in &[0.05, 0.3, 0.9, 1.7, 4.0] {
                let (lo, _) = d.support().bounds();
                if !d.support().contains(x) {
                    continue;
                }
                let r = integrate(|y: f64| d.pdf(y), lo, x, &QuadConfig::with_tol(1e-12));
                assert!(
                    close(d.cdf(x), r.value, 1e-9),
                    "{d} x={x} {} vs {}",
                    d.cdf(x),
                    r.value
                );
                assert!(
                    close(d.log_survival(x), d.survival(x).ln(), 1e-9),
                    "{d} x={x}"
                );
            }
        }
    }

    #[test]
    fn gamma_shape_one_is_exponential() {
        let g = DistSpec::gamma(2.0, 1.0).unwrap();
        let e = DistSpec::exponential(2.0).unwrap();
        for &x in &[0.01, 0.7, 3.0, 40.0] {
            assert_eq!(g.log_pdf(x), e.log_pdf(x));
            assert!(close(g.cdf(x), e.cdf(x), 1e-15));
            assert_eq!(rn_log_ratio(&g, &e, x).unwrap(), 0.0);
        }
    }

    #[test]
    fn inverse_gamma_is_reciprocal_gamma() {
        let ig = DistSpec::inverse_gamma(2.0, 3.0).unwrap();
        let g = DistSpec::gamma(2.0, 3.0).unwrap();
        for &x in &[0.2, 0.6, 1.0, 2.5] {
            assert!(close(ig.cdf(x), g.survival(1.0 / x), 1e-14));
            // change of variables: f_IG(x) = f_G(1/x) / x^2
            assert!(close(
                ig.log_pdf(x),
                g.log_pdf(1.0 / x) - 2.0 * x.ln(),
                1e-13
            ));
        }
        assert!(close(ig.mean().unwrap(), 1.0, 1e-15));
    }

    #[test]
    fn mgf_examples() {
        let e = DistSpec::exponential(2.0).unwrap();
        assert!(close(e.mgf(1.0).unwrap(), 2.0, 1e-15));
        let g = DistSpec::gamma(3.0, 2.0).unwrap();
        assert!(close(g.mgf(1.0).unwrap(), 2.25, 1e-14));
        for d in presets() {
            assert_eq!(d.mgf(0.0).unwrap(), 1.0);
        }
        match e.mgf(2.0) {
            Err(CmrpError::DivergentMgf { bound, .. }) => assert_eq!(bound, 2.0),
            other => panic!("expected DivergentMgf, got {other:?}"),
        }
        assert!(matches!(
            DistSpec::lognormal(0.0, 1.0).unwrap().mgf(0.1),
            Err(CmrpError::DivergentMgf { .. })
        ));
    }

    #[test]
    fn mgf_derivative_is_mean() {
        let h = 1e-4;
        for d in presets() {
            // Central difference needs both sides of zero inside the region.
            let (lo, hi) = (-h, h);
            let (mp, mm) = match (d.mgf(hi), d.mgf(lo)) {
                (Ok(a), Ok(b)) => (a, b),
                _ => {
                    // One-sided laws (abscissa 0): backward difference on the
                    // finite side of the MGF.
                    let m1 = d.mgf(-h).unwrap();
                    let m2 = d.mgf(-2.0 * h).unwrap();
                    let slope = (3.0 - 4.0 * m1 + m2) / (2.0 * h);
                    assert!(close(slope, d.mean().unwrap(), 1e-6), "{d}");
                    continue;
                }
            };
            let slope = (mp - mm) / (2.0 * h);
            assert!(close(slope, d.mean().unwrap(), 1e-6), "{d}: {slope}");
        }
    }

    #[test]
    fn log_ratio_examples() {
        let num = DistSpec::exponential(3.0).unwrap();
        let den = DistSpec::exponential(2.0).unwrap();
        assert!(close(
            rn_log_ratio(&num, &den, 1.0).unwrap(),
            1.5f64.ln() - 1.0,
            1e-15
        ));
        assert!(close(
            rn_log_ratio(&num, &den, 1.0).unwrap(),
            -0.594535,
            1e-6
        ));
        assert_eq!(rn_log_ratio(&num, &num, 0.4).unwrap(), 0.0);
        let n = DistSpec::normal(0.0, 1.0).unwrap();
        assert!(matches!(
            rn_log_ratio(&n, &den, 1.0),
            Err(CmrpError::NonEquivalentSupports { .. })
        ));
        assert!(matches!(
            rn_log_ratio(&num, &den, -1.0),
            Err(CmrpError::Domain(_))
        ));
    }

    #[test]
    fn samplers_match_means() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 100_000;
        assert_eq!(DistSpec::dirac(3.5).unwrap().sample(&mut rng), 3.5);
        let e = DistSpec::exponential(2.0).unwrap();
        let m: f64 = (0..n).map(|_| e.sample(&mut rng)).sum::<f64>() / n as f64;
        assert!(close(m, 0.5, 3.0 * 0.5 / (n as f64).sqrt()), "{m}");
        let b = DistSpec::beta(2.0, 2.0).unwrap();
        let xs: Vec<f64> = (0..n).map(|_| b.sample(&mut rng)).collect();
        let m = xs.iter().sum::<f64>() / n as f64;
        let sd = (0.25f64 / 5.0).sqrt();
        assert!(close(m, 0.5, 3.0 * sd / (n as f64).sqrt()), "{m}");
    }

    fn ks(d: &DistSpec, xs: &mut [f64]) -> f64 {
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n = xs.len() as f64;
        xs.iter()
            .enumerate()
            .map(|(i, &x)| {
                let f = d.cdf(x);
                (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn samplers_pass_ks() {
        let n = 100_000;
        for (i, d) in presets().iter().enumerate() {
            let mut rng = ChaCha8Rng::seed_from_u64(100 + i as u64);
            let mut xs: Vec<f64> = (0..n).map(|_| d.sample(&mut rng)).collect();
            let stat = ks(d, &mut xs);
            assert!(stat < 1.63 / (n as f64).sqrt(), "{d}: KS {stat}");
        }
    }

    #[test]
    fn ratio_has_unit_mean_under_denominator() {
        let pairs = [
            (
                DistSpec::exponential(3.0).unwrap(),
                DistSpec::exponential(2.0).unwrap(),
            ),
            (
                DistSpec::exponential(1.0).unwrap(),
                DistSpec::gamma(0.9, 0.9).unwrap(),
            ),
            (
                DistSpec::gamma(1.0, 2.0).unwrap(),
                DistSpec::gamma(0.75, 2.0).unwrap(),
            ),
            (
                DistSpec::normal(0.1, 0.25).unwrap(),
                DistSpec::normal(0.0, 0.3).unwrap(),
            ),
        ];
        let n = 100_000;
        for (k, (num, den)) in pairs.iter().enumerate() {
            let mut rng = ChaCha8Rng::seed_from_u64(900 + k as u64);
            let ws: Vec<f64> = (0..n)
                .map(|_| rn_log_ratio(num, den, den.sample(&mut rng)).unwrap().exp())
                .collect();
            let m = ws.iter().sum::<f64>() / n as f64;
            let var = ws.iter().map(|w| (w - m).powi(2)).sum::<f64>() / (n as f64 - 1.0);
            let se = (var / n as f64).sqrt();
            assert!((m - 1.0).abs() <= 3.0 * se, "{num}/{den}: {m} ± {se}");
        }
    }

    #[test]
    fn exponential_tilt_closed_forms() {
        let e = DistSpec::exponential(1.0).unwrap();
        assert_eq!(
            e.exp_tilt(0.5).unwrap(),
            DistSpec::exponential(1.5).unwrap()
        );
        let g = DistSpec::gamma(2.0, 2.0).unwrap();
        assert_eq!(g.exp_tilt(1.0).unwrap(), DistSpec::gamma(3.0, 2.0).unwrap());
        // Numeric tilt of a gamma law agrees with the closed form.
        let numeric = DistSpec::Tilted(Box::new(Tilted {
            base: g.clone(),
            s: 1.0,
            log_norm: g.ln_mgf(-1.0).unwrap(),
        }));
        let closed = DistSpec::gamma(3.0, 2.0).unwrap();
        for &x in &[0.1, 0.5, 2.0] {
            assert!(close(numeric.log_pdf(x), closed.log_pdf(x), 1e-13));
            assert!(close(numeric.cdf(x), closed.cdf(x), 1e-10));
            assert!(close(numeric.log_survival(x), closed.log_survival(x), 1e-9));
        }
        assert!(close(numeric.mean().unwrap(), 2.0 / 3.0, 1e-10));
        assert!(close(
            numeric.ln_mgf(0.5).unwrap(),
            closed.ln_mgf(0.5).unwrap(),
            1e-12
        ));
    }

    #[test]
    fn from_params_checks_keys() {
        let mut p = BTreeMap::new();
        p.insert("rate".to_string(), 2.0);
        assert_eq!(
            DistSpec::from_params("exponential", &p).unwrap(),
            DistSpec::exponential(2.0).unwrap()
        );
        assert!(DistSpec::from_params("gamma", &p).is_err());
        p.insert("mu".to_string(), 1.0);
        assert!(DistSpec::from_params("exponential", &p).is_err());
        assert!(DistSpec::from_params("weibull", &BTreeMap::new()).is_err());
        assert!(DistSpec::exponential(-1.0).is_err());
    }
}
