//! Model declarations: the compound mixed renewal process under the base
//! measure, and the ingredients of a progressively equivalent target
//! measure (claim tilt, mixing reweight, target interarrival kernel).

use std::collections::BTreeMap;
use std::fmt;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::change_of_measure::kappa_solve;
use crate::distributions::{DistSpec, Support};
use crate::error::{CmrpError, Result};
use crate::expr::Expr;
use crate::numerics::quadrature::{integrate, QuadConfig, QuadResult};

/// A point of the mixing domain (dimension 1 or 2).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Theta {
    coords: [f64; 2],
    dim: usize,
}

impl Theta {
    pub fn scalar(v: f64) -> Self {
        Theta {
            coords: [v, 0.0],
            dim: 1,
        }
    }

    pub fn pair(a: f64, b: f64) -> Self {
        Theta {
            coords: [a, b],
            dim: 2,
        }
    }

    pub fn from_slice(v: &[f64]) -> Result<Self> {
        match v {
            [a] => Ok(Theta::scalar(*a)),
            [a, b] => Ok(Theta::pair(*a, *b)),
            _ => Err(CmrpError::Domain(format!(
                "theta must have 1 or 2 coordinates, got {}",
                v.len()
            ))),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.coords[..self.dim]
    }

    /// First coordinate.
    pub fn first(&self) -> f64 {
        self.coords[0]
    }

    pub fn norm(&self) -> f64 {
        self.as_slice().iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

impl fmt::Display for Theta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.dim {
            1 => write!(f, "{}", self.coords[0]),
            _ => write!(f, "({}, {})", self.coords[0], self.coords[1]),
        }
    }
}

/// Mixing law `P_Θ`: a product of one or two independent one-dimensional laws.
#[derive(Debug, Clone, PartialEq)]
pub struct MixingSpec {
    components: Vec<DistSpec>,
}

impl MixingSpec {
    pub fn new(components: Vec<DistSpec>) -> Result<Self> {
        if components.is_empty() || components.len() > 2 {
            return Err(CmrpError::Model(format!(
                "mixing dimension must be 1 or 2, got {}",
                components.len()
            )));
        }
        for c in &components {
            c.validate()?;
            if matches!(c, DistSpec::Tilted(_)) {
                return Err(CmrpError::Model(
                    "mixing components must be named families".into(),
                ));
            }
        }
        Ok(MixingSpec { components })
    }

    pub fn single(d: DistSpec) -> Result<Self> {
        MixingSpec::new(vec![d])
    }

    pub fn dirac(point: f64) -> Self {
        MixingSpec {
            components: vec![DistSpec::Dirac { point }],
        }
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[DistSpec] {
        &self.components
    }

    pub fn is_dirac(&self) -> bool {
        self.components.iter().all(DistSpec::is_dirac)
    }

    pub fn supports(&self) -> Vec<Support> {
        self.components.iter().map(DistSpec::support).collect()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Theta {
        match self.components.as_slice() {
            [a] => Theta::scalar(a.sample(rng)),
            [a, b] => {
                let x = a.sample(rng);
                Theta::pair(x, b.sample(rng))
            }
            _ => unreachable!("validated dimension"),
        }
    }

    pub fn log_pdf(&self, theta: &Theta) -> f64 {
        if theta.dim() != self.dim() {
            return f64::NEG_INFINITY;
        }
        self.components
            .iter()
            .zip(theta.as_slice())
            .map(|(c, &x)| c.log_pdf(x))
            .sum()
    }

    /// `E[g(Θ)]` by (iterated) adaptive quadrature.
    pub fn expect<F: Fn(&Theta) -> f64>(&self, g: F, cfg: &QuadConfig) -> QuadResult {
        match self.components.as_slice() {
            [a] => a.expect(|x| g(&Theta::scalar(x)), cfg),
            [a, b] => {
                let inner_cfg = QuadConfig {
                    abs_tol: cfg.abs_tol * 0.1,
                    rel_tol: cfg.rel_tol * 0.1,
                    ..*cfg
                };
                let converged = std::cell::Cell::new(true);
                let mut r = a.expect(
                    |x| {
                        let inner = b.expect(|y| g(&Theta::pair(x, y)), &inner_cfg);
                        if !inner.converged {
                            converged.set(false);
                        }
                        inner.value
                    },
                    cfg,
                );
                r.converged &= converged.get();
                r
            }
            _ => unreachable!("validated dimension"),
        }
    }
}

/// An interarrival kernel `θ ↦ K(θ)`: a family whose parameters are
/// expressions in theta.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelSpec {
    family: String,
    params: BTreeMap<String, Expr>,
}

impl KernelSpec {
    pub fn new<I, S>(family: &str, params: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, Expr)>,
        S: Into<String>,
    {
        if !matches!(
            family,
            "exponential" | "gamma" | "inverse_gamma" | "lognormal"
        ) {
            return Err(CmrpError::Model(format!(
                "kernel family `{family}` does not live on (0, inf)"
            )));
        }
        let params: BTreeMap<String, Expr> =
            params.into_iter().map(|(k, v)| (k.into(), v)).collect();
        // Key names are checked against the family with placeholder values.
        let probe: BTreeMap<String, f64> = params.keys().map(|k| (k.clone(), 1.0)).collect();
        DistSpec::from_params(family, &probe)?;
        Ok(KernelSpec {
            family: family.to_string(),
            params,
        })
    }

    /// `Exponential(rate = expr)`.
    pub fn exponential(rate: Expr) -> Self {
        KernelSpec {
            family: "exponential".into(),
            params: BTreeMap::from([("rate".to_string(), rate)]),
        }
    }

    pub fn family(&self) -> &str {
        &self.family
    }

    pub fn params(&self) -> &BTreeMap<String, Expr> {
        &self.params
    }

    pub fn arity(&self) -> usize {
        self.params.values().map(Expr::arity).max().unwrap_or(0)
    }

    pub fn at(&self, theta: &Theta) -> Result<DistSpec> {
        let vals: BTreeMap<String, f64> = self
            .params
            .iter()
            .map(|(k, e)| (k.clone(), e.eval(theta.as_slice())))
            .collect();
        DistSpec::from_params(&self.family, &vals)
            .map_err(|e| CmrpError::Model(format!("kernel {} at theta={theta}: {e}", self.family)))
    }
}

impl fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .params
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect();
        write!(f, "{}({})", self.family, parts.join(", "))
    }
}

/// Base model: mixing law, interarrival kernel, claim law and premium rate.
#[derive(Debug, Clone, PartialEq)]
pub struct CmrpModel {
    pub mixing: MixingSpec,
    pub interarrival: KernelSpec,
    pub claims: DistSpec,
    pub premium: Expr,
}

impl CmrpModel {
    pub fn new(
        mixing: MixingSpec,
        interarrival: KernelSpec,
        claims: DistSpec,
        premium: Expr,
    ) -> Result<Self> {
        claims.validate()?;
        if claims.support() != Support::Positive {
            return Err(CmrpError::Model(format!(
                "claim law {claims} must live on (0, inf)"
            )));
        }
        let dim = mixing.dim();
        if interarrival.arity() > dim || premium.arity() > dim {
            return Err(CmrpError::Model(format!(
                "kernel or premium refers to theta coordinates beyond the mixing dimension {dim}"
            )));
        }
        let model = CmrpModel {
            mixing,
            interarrival,
            claims,
            premium,
        };
        // Spot-check kernel and premium on draws from the mixing law.
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..64 {
            let th = model.mixing.sample(&mut rng);
            model.kernel_at(&th)?;
            model.premium_at(&th)?;
        }
        Ok(model)
    }

    pub fn kernel_at(&self, theta: &Theta) -> Result<DistSpec> {
        self.interarrival.at(theta)
    }

    pub fn premium_at(&self, theta: &Theta) -> Result<f64> {
        let c = self.premium.eval(theta.as_slice());
        if c > 0.0 && c.is_finite() {
            Ok(c)
        } else {
            Err(CmrpError::Model(format!(
                "premium rate must be positive, got {c} at theta={theta}"
            )))
        }
    }

    /// The same model with the mixing law replaced by a point mass at `theta`.
    pub fn with_fixed_theta(&self, theta: &Theta) -> Result<CmrpModel> {
        if theta.dim() != self.mixing.dim() {
            return Err(CmrpError::Domain(format!(
                "theta has dimension {}, model expects {}",
                theta.dim(),
                self.mixing.dim()
            )));
        }
        let comps = theta
            .as_slice()
            .iter()
            .map(|&p| DistSpec::dirac(p))
            .collect::<Result<Vec<_>>>()?;
        CmrpModel::new(
            MixingSpec::new(comps)?,
            self.interarrival.clone(),
            self.claims.clone(),
            self.premium.clone(),
        )
    }
}

/// Piecewise-linear interpolation of `ln f` between knots, constant beyond.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    knots: Vec<f64>,
    log_values: Vec<f64>,
}

impl GridFunction {
    pub fn new(knots: Vec<f64>, values: Vec<f64>) -> std::result::Result<Self, String> {
        if knots.is_empty() || knots.len() != values.len() {
            return Err(format!(
                "grid needs matching non-empty knots and values ({} vs {})",
                knots.len(),
                values.len()
            ));
        }
        if knots.windows(2).any(|w| !(w[1] > w[0])) || knots.iter().any(|k| !k.is_finite()) {
            return Err("grid knots must be finite and strictly increasing".into());
        }
        if let Some(v) = values.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
            return Err(format!("grid values must be positive and finite, got {v}"));
        }
        Ok(GridFunction {
            knots,
            log_values: values.iter().map(|v| v.ln()).collect(),
        })
    }

    pub fn log_eval(&self, x: f64) -> f64 {
        let k = &self.knots;
        let v = &self.log_values;
        if x <= k[0] {
            return v[0];
        }
        if x >= k[k.len() - 1] {
            return v[v.len() - 1];
        }
        let i = k.partition_point(|&kn| kn <= x) - 1;
        let w = (x - k[i]) / (k[i + 1] - k[i]);
        v[i] + w * (v[i + 1] - v[i])
    }

    fn shifted(&self, delta: f64) -> Self {
        GridFunction {
            knots: self.knots.clone(),
            log_values: self.log_values.iter().map(|v| v + delta).collect(),
        }
    }
}

/// Claim tilt `f = h⁻¹∘γ` with `h = ln`, stored through `ln f`.
#[derive(Debug, Clone, PartialEq)]
pub enum ClaimTilt {
    /// `f ≡ 1`
    Unit,
    /// `f(x) = e^{r x} / E[e^{r X}]`
    Esscher { r: f64, ln_mgf: f64 },
    /// Grid function; `norm` is the constant the raw grid was divided by.
    Grid { grid: GridFunction, norm: f64 },
}

impl ClaimTilt {
    /// Raw grid tilt, not renormalized.
    pub fn grid(knots: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let grid = GridFunction::new(knots, values).map_err(CmrpError::InvalidTilt)?;
        Ok(ClaimTilt::Grid { grid, norm: 1.0 })
    }

    /// Grid tilt divided by `E_P[f(X₁)]` so that it has unit mean under the
    /// claim law.
    pub fn grid_normalized(knots: Vec<f64>, values: Vec<f64>, claims: &DistSpec) -> Result<Self> {
        let grid = GridFunction::new(knots, values).map_err(CmrpError::InvalidTilt)?;
        let mean = claims
            .expect(|x| grid.log_eval(x).exp(), &QuadConfig::with_tol(1e-13))
            .require_converged()?
            .value;
        Ok(ClaimTilt::Grid {
            grid: grid.shifted(-mean.ln()),
            norm: mean,
        })
    }

    pub fn log_f(&self, x: f64) -> f64 {
        match self {
            ClaimTilt::Unit => 0.0,
            ClaimTilt::Esscher { r, ln_mgf } => r * x - ln_mgf,
            ClaimTilt::Grid { grid, .. } => grid.log_eval(x),
        }
    }

    pub fn f(&self, x: f64) -> f64 {
        self.log_f(x).exp()
    }

    pub fn is_unit(&self) -> bool {
        matches!(self, ClaimTilt::Unit)
    }

    /// Renormalization constant of a grid tilt (1 otherwise).
    pub fn normalization(&self) -> f64 {
        match self {
            ClaimTilt::Grid { norm, .. } => *norm,
            _ => 1.0,
        }
    }

    /// CDF of the claim law under the target measure, `E_P[f(X); X ≤ x]`.
    pub fn target_cdf(&self, claims: &DistSpec, x: f64) -> Result<f64> {
        match self {
            ClaimTilt::Unit => Ok(claims.cdf(x)),
            ClaimTilt::Esscher { r, .. } => Ok(claims.exp_tilt(-r)?.cdf(x)),
            ClaimTilt::Grid { .. } => {
                if x <= 0.0 {
                    return Ok(0.0);
                }
                let r = integrate(
                    |y: f64| (self.log_f(y) + claims.log_pdf(y)).exp(),
                    0.0,
                    x,
                    &QuadConfig::with_tol(1e-12),
                );
                Ok(r.value.clamp(0.0, 1.0))
            }
        }
    }
}

/// Mixing reweight `ξ`, the density `dQ_Θ/dP_Θ`.
#[derive(Debug, Clone, PartialEq)]
pub enum MixReweight {
    /// `ξ ≡ 1`
    Unit,
    /// `ξ = q / g` for a target mixing law `q` and the base mixing density `g`.
    DensityRatio { target: MixingSpec },
    /// One-dimensional grid in log space.
    Grid(GridFunction),
    /// `ξ` written as an expression in theta.
    Expression(Expr),
}

impl MixReweight {
    pub fn grid(knots: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        Ok(MixReweight::Grid(
            GridFunction::new(knots, values).map_err(CmrpError::InvalidReweight)?,
        ))
    }

    pub fn is_unit(&self) -> bool {
        matches!(self, MixReweight::Unit)
    }

    /// `ln ξ(θ)` relative to the base mixing law.
    pub fn log_xi(&self, base: &MixingSpec, theta: &Theta) -> Result<f64> {
        let v = match self {
            MixReweight::Unit => 0.0,
            MixReweight::DensityRatio { target } => {
                if target.dim() != base.dim() {
                    return Err(CmrpError::InvalidReweight(format!(
                        "target mixing has dimension {}, base has {}",
                        target.dim(),
                        base.dim()
                    )));
                }
                let num = target.log_pdf(theta);
                let den = base.log_pdf(theta);
                if den == f64::NEG_INFINITY {
                    return Err(CmrpError::InvalidReweight(format!(
                        "theta={theta} lies outside the base mixing support"
                    )));
                }
                num - den
            }
            MixReweight::Grid(g) => {
                if theta.dim() != 1 {
                    return Err(CmrpError::InvalidReweight(
                        "grid reweights are one-dimensional".into(),
                    ));
                }
                g.log_eval(theta.first())
            }
            MixReweight::Expression(e) => {
                let x = e.eval(theta.as_slice());
                if !(x > 0.0) {
                    return Err(CmrpError::InvalidReweight(format!(
                        "xi({theta}) = {x} is not positive"
                    )));
                }
                x.ln()
            }
        };
        if v.is_nan() || v == f64::NEG_INFINITY {
            return Err(CmrpError::InvalidReweight(format!(
                "xi({theta}) is not positive (ln xi = {v})"
            )));
        }
        Ok(v)
    }
}

/// Target interarrival kernel `θ ↦ Λ(ρ(θ))`.
#[derive(Debug, Clone, PartialEq)]
pub enum TargetKernel {
    /// `Λ(ρ(θ)) = K(θ)`
    Identity,
    /// `Exponential(ρ(θ))`: the target is a compound mixed Poisson process.
    Poisson { rho: Expr },
    /// Arbitrary parametrized family.
    Kernel(KernelSpec),
    /// Interarrival law tilted by `e^{-(κ_θ(r) + c(θ) r) w}`.
    Esscher { r: f64 },
}

/// A change of measure `(f, ξ, Λ(ρ(·)))`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasureChange {
    pub tilt: ClaimTilt,
    pub reweight: MixReweight,
    pub target: TargetKernel,
}

impl MeasureChange {
    pub fn identity() -> Self {
        MeasureChange {
            tilt: ClaimTilt::Unit,
            reweight: MixReweight::Unit,
            target: TargetKernel::Identity,
        }
    }

    pub fn poissonization(tilt: ClaimTilt, reweight: MixReweight, rho: Expr) -> Self {
        MeasureChange {
            tilt,
            reweight,
            target: TargetKernel::Poisson { rho },
        }
    }

    pub fn is_identity(&self) -> bool {
        self.tilt.is_unit()
            && self.reweight.is_unit()
            && matches!(self.target, TargetKernel::Identity)
    }

    /// `ρ` when the target is a mixed Poisson process.
    pub fn rho(&self) -> Option<&Expr> {
        match &self.target {
            TargetKernel::Poisson { rho } => Some(rho),
            _ => None,
        }
    }

    /// `Λ(ρ(θ))` evaluated at `theta`.
    pub fn target_at(&self, model: &CmrpModel, theta: &Theta) -> Result<DistSpec> {
        match &self.target {
            TargetKernel::Identity => model.kernel_at(theta),
            TargetKernel::Poisson { rho } => {
                let r = rho.eval(theta.as_slice());
                DistSpec::exponential(r).map_err(|_| {
                    CmrpError::Model(format!("rho({theta}) = {r} is not a positive rate"))
                })
            }
            TargetKernel::Kernel(k) => k.at(theta),
            TargetKernel::Esscher { r } => {
                let sol = kappa_solve(model, theta, *r)?;
                let s = sol.kappa + model.premium_at(theta)? * r;
                model.kernel_at(theta)?.exp_tilt(s)
            }
        }
    }

    /// Structural checks against `model`: target and base kernels share a
    /// support at spot-checked mixing points, and `ρ` is positive there.
    pub fn validate_against(&self, model: &CmrpModel) -> Result<()> {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..32 {
            let th = model.mixing.sample(&mut rng);
            let base = model.kernel_at(&th)?;
            let target = self.target_at(model, &th)?;
            if base.support() != target.support() {
                return Err(CmrpError::NonEquivalentSupports {
                    num: target.to_string(),
                    den: base.to_string(),
                });
            }
            self.reweight.log_xi(&model.mixing, &th)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValidationMethod {
    Exact,
    Quadrature,
    MonteCarlo,
}

/// Outcome of an `E_P[·] = 1` admissibility check.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub estimate: f64,
    pub error_bound: f64,
    pub method: ValidationMethod,
    pub tol: f64,
    pub passed: bool,
}

impl ValidationReport {
    fn new(estimate: f64, error_bound: f64, method: ValidationMethod, tol: f64) -> Self {
        ValidationReport {
            estimate,
            error_bound,
            method,
            tol,
            passed: (estimate - 1.0).abs() <= tol,
        }
    }
}

fn mc_mean<F: Fn(&mut ChaCha8Rng) -> f64>(n: usize, draw: F) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(0x7a11);
    let xs: Vec<f64> = (0..n).map(|_| draw(&mut rng)).collect();
    let m = xs.iter().sum::<f64>() / n as f64;
    let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n as f64 - 1.0);
    (m, 3.0 * (var / n as f64).sqrt())
}

/// Check `E_P[f(X₁)] = 1`; quadrature first, Monte Carlo (`n_mc` draws) when
/// quadrature does not converge.
pub fn validate_tilt(
    model: &CmrpModel,
    tilt: &ClaimTilt,
    n_mc: usize,
    tol: f64,
) -> Result<ValidationReport> {
    if n_mc < 10_000 {
        return Err(CmrpError::InvalidParameter(format!(
            "validation needs at least 10^4 Monte Carlo draws, got {n_mc}"
        )));
    }
    if tilt.is_unit() {
        return Ok(ValidationReport::new(
            1.0,
            0.0,
            ValidationMethod::Exact,
            tol,
        ));
    }
    let claims = &model.claims;
    let q = claims.expect(|x| tilt.f(x), &QuadConfig::with_tol(1e-12));
    if q.converged {
        return Ok(ValidationReport::new(
            q.value,
            q.error,
            ValidationMethod::Quadrature,
            tol,
        ));
    }
    let (m, bound) = mc_mean(n_mc, |rng| tilt.f(claims.sample(rng)));
    Ok(ValidationReport::new(
        m,
        bound,
        ValidationMethod::MonteCarlo,
        tol,
    ))
}

/// Check `E_P[ξ(Θ)] = 1` and positivity of `ξ` on the quadrature nodes.
pub fn validate_reweight(
    model: &CmrpModel,
    rw: &MixReweight,
    tol: f64,
) -> Result<ValidationReport> {
    if rw.is_unit() {
        return Ok(ValidationReport::new(
            1.0,
            0.0,
            ValidationMethod::Exact,
            tol,
        ));
    }
    let mixing = &model.mixing;
    let failure = std::cell::RefCell::new(None);
    let xi = |th: &Theta| match rw.log_xi(mixing, th) {
        Ok(v) => v.exp(),
        Err(e) => {
            failure.borrow_mut().get_or_insert(e);
            0.0
        }
    };
    let q = match (rw, mixing.components()) {
        // Product targets factor into one-dimensional integrals.
        (MixReweight::DensityRatio { target }, [a, b]) if target.dim() == 2 => {
            let t = target.components();
            let qa = a.expect(
                |x| (t[0].log_pdf(x) - a.log_pdf(x)).exp(),
                &QuadConfig::with_tol(1e-12),
            );
            let qb = b.expect(
                |y| (t[1].log_pdf(y) - b.log_pdf(y)).exp(),
                &QuadConfig::with_tol(1e-12),
            );
            QuadResult {
                value: qa.value * qb.value,
                error: qa.error * qb.value.abs() + qb.error * qa.value.abs(),
                panels: qa.panels + qb.panels,
                converged: qa.converged && qb.converged,
            }
        }
        _ => mixing.expect(xi, &QuadConfig::with_tol(1e-10)),
    };
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    if q.converged {
        return Ok(ValidationReport::new(
            q.value,
            q.error,
            ValidationMethod::Quadrature,
            tol,
        ));
    }
    let (m, bound) = mc_mean(100_000, |rng| {
        let th = mixing.sample(rng);
        rw.log_xi(mixing, &th).map(f64::exp).unwrap_or(0.0)
    });
    Ok(ValidationReport::new(
        m,
        bound,
        ValidationMethod::MonteCarlo,
        tol,
    ))
}

/// Esscher claim tilt `f(x) = e^{rx} / E_P[e^{rX₁}]`.
pub fn esscher_tilt(model: &CmrpModel, r: f64) -> Result<ClaimTilt> {
    if r == 0.0 {
        return Ok(ClaimTilt::Unit);
    }
    let ln_mgf = model.claims.ln_mgf(r)?;
    Ok(ClaimTilt::Esscher { r, ln_mgf })
}

/// `α(θ) = ln ρ(θ) + ln E_{P_θ}[W₁]`, the mixing-dependent shift that turns a
/// claim tilt into the Poissonizing `β = γ + α`.
#[derive(Debug, Clone)]
pub struct PoissonizationAlpha<'a> {
    model: &'a CmrpModel,
    rho: &'a Expr,
}

pub fn poissonization_alpha<'a>(model: &'a CmrpModel, rho: &'a Expr) -> PoissonizationAlpha<'a> {
    PoissonizationAlpha { model, rho }
}

impl PoissonizationAlpha<'_> {
    fn mean_interarrival(&self, theta: &Theta) -> Result<f64> {
        let m = self.model.kernel_at(theta)?.mean()?;
        if m > 0.0 && m.is_finite() {
            Ok(m)
        } else {
            Err(CmrpError::Model(format!(
                "interarrival mean {m} at theta={theta} is not finite and positive"
            )))
        }
    }

    pub fn at(&self, theta: &Theta) -> Result<f64> {
        let rho = self.rho.eval(theta.as_slice());
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(CmrpError::Model(format!(
                "rho({theta}) = {rho} is not a positive rate"
            )));
        }
        Ok(rho.ln() + self.mean_interarrival(theta)?.ln())
    }

    /// Recover `ρ(θ) = e^{α(θ)} / E_{P_θ}[W₁]` from an `α` value.
    pub fn rho_from_alpha(&self, theta: &Theta, alpha: f64) -> Result<f64> {
        Ok(alpha.exp() / self.mean_interarrival(theta)?)
    }
}
