//! Martingale densities of a change of measure, evaluated along paths, and
//! the Lundberg exponent that drives the Esscher family.

use crate::distributions::{rn_log_ratio, DistSpec};
use crate::error::{CmrpError, Result};
use crate::expr::Expr;
use crate::model::{
    esscher_tilt, poissonization_alpha, ClaimTilt, CmrpModel, MeasureChange, MixReweight,
    TargetKernel, Theta,
};
use crate::numerics::quadrature::{integrate, QuadConfig};
use crate::numerics::root::{brent, RootConfig};
use crate::numerics::special::ln_gamma_pq;
use crate::simulate::Path;

/// Per-jump contributions to a log density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpFactor {
    pub claim: f64,
    pub interarrival: f64,
}

/// A log density with its decomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityEval {
    pub log_value: f64,
    pub jump_log_factors: Vec<JumpFactor>,
    pub tail_log_factor: f64,
    pub xi_log_factor: f64,
}

impl DensityEval {
    fn assemble(jumps: Vec<JumpFactor>, tail: f64, xi: f64) -> Self {
        let mut log_value = 0.0;
        for j in &jumps {
            log_value += j.claim + j.interarrival;
        }
        log_value += tail + xi;
        DensityEval {
            log_value,
            jump_log_factors: jumps,
            tail_log_factor: tail,
            xi_log_factor: xi,
        }
    }

    pub fn log_conditional(&self) -> f64 {
        self.log_value - self.xi_log_factor
    }
}

/// Root of the Lundberg equation at one mixing value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LundbergSolution {
    pub r: f64,
    pub kappa: f64,
    pub theta: Theta,
    /// `M_X(r) M_W(-κ - c r) - 1`
    pub residual: f64,
}

/// Interarrival laws under both measures at a fixed mixing value.
struct KernelPair {
    base: DistSpec,
    target: DistSpec,
}

impl KernelPair {
    fn at(mc: &MeasureChange, model: &CmrpModel, theta: &Theta) -> Result<Self> {
        let base = model.kernel_at(theta)?;
        let target = mc.target_at(model, theta)?;
        if base.support() != target.support() {
            return Err(CmrpError::NonEquivalentSupports {
                num: target.to_string(),
                den: base.to_string(),
            });
        }
        Ok(KernelPair { base, target })
    }

    fn log_jump(&self, w: f64) -> Result<f64> {
        rn_log_ratio(&self.target, &self.base, w)
    }

    fn log_tail(&self, elapsed: f64) -> f64 {
        self.target.log_survival(elapsed) - self.base.log_survival(elapsed)
    }
}

fn elapsed_since(total: f64, t: f64) -> Result<f64> {
    if total > t {
        return Err(CmrpError::Domain(format!(
            "interarrivals sum to {total}, beyond t={t}"
        )));
    }
    Ok(t - total)
}

/// `ln g_n(w, t, θ)`: likelihood ratio of `n` waiting times `w` followed by
/// a survival period up to `t`.
pub fn log_g_n(
    mc: &MeasureChange,
    model: &CmrpModel,
    theta: &Theta,
    w: &[f64],
    t: f64,
) -> Result<f64> {
    let kp = KernelPair::at(mc, model, theta)?;
    let mut acc = 0.0;
    let mut total = 0.0;
    for &wj in w {
        acc += kp.log_jump(wj)?;
        total += wj;
    }
    Ok(acc + kp.log_tail(elapsed_since(total, t)?))
}

fn log_tilt(tilt: &ClaimTilt, x: f64) -> Result<f64> {
    let v = tilt.log_f(x);
    if v.is_nan() || v == f64::NEG_INFINITY {
        return Err(CmrpError::InvalidTilt(format!("f({x}) is not positive")));
    }
    Ok(v)
}

/// Conditional density of the target measure given `Θ = p.theta`, on the
/// history up to `t`.
pub fn log_density_conditional(
    mc: &MeasureChange,
    model: &CmrpModel,
    p: &Path,
    t: f64,
) -> Result<DensityEval> {
    let n = p.count_at(t)?;
    let kp = KernelPair::at(mc, model, &p.theta)?;
    let mut jumps = Vec::with_capacity(n);
    for j in 0..n {
        jumps.push(JumpFactor {
            claim: log_tilt(&mc.tilt, p.claims[j])?,
            interarrival: kp.log_jump(p.interarrivals[j])?,
        });
    }
    let last = if n == 0 { 0.0 } else { p.arrivals[n - 1] };
    let tail = kp.log_tail(elapsed_since(last, t)?);
    Ok(DensityEval::assemble(jumps, tail, 0.0))
}

/// Unconditional density: the conditional one times `ξ(θ)`.
pub fn log_density(mc: &MeasureChange, model: &CmrpModel, p: &Path, t: f64) -> Result<DensityEval> {
    let mut d = log_density_conditional(mc, model, p, t)?;
    let xi = mc.reweight.log_xi(&model.mixing, &p.theta)?;
    d.xi_log_factor = xi;
    d.log_value += xi;
    Ok(d)
}

/// Density of the change that makes interarrivals `Exponential(ρ(θ))`,
/// written through the shifted claim exponent `β = ln f + α`.
pub fn log_density_poissonization(
    model: &CmrpModel,
    tilt: &ClaimTilt,
    rw: &MixReweight,
    rho: &Expr,
    p: &Path,
    t: f64,
) -> Result<DensityEval> {
    let theta = &p.theta;
    let alpha = poissonization_alpha(model, rho).at(theta)?;
    let rate = rho.eval(theta.as_slice());
    let base = model.kernel_at(theta)?;
    let target = DistSpec::exponential(rate)?;
    let ln_rate_mean = rate.ln() + base.mean()?.ln();
    let n = p.count_at(t)?;
    let mut jumps = Vec::with_capacity(n);
    for j in 0..n {
        jumps.push(JumpFactor {
            claim: log_tilt(tilt, p.claims[j])? + alpha,
            interarrival: rn_log_ratio(&target, &base, p.interarrivals[j])? - ln_rate_mean,
        });
    }
    let last = if n == 0 { 0.0 } else { p.arrivals[n - 1] };
    let elapsed = elapsed_since(last, t)?;
    let tail = -rate * elapsed - base.log_survival(elapsed);
    let xi = rw.log_xi(&model.mixing, theta)?;
    Ok(DensityEval::assemble(jumps, tail, xi))
}

/// Solve `M_X(r) M_W(-κ - c(θ) r) = 1` for `κ`.
///
/// The left side is decreasing in `κ`; the bracket `[-c r - κ₀, κ₀]` is
/// widened by doubling, and pulled back inside the interarrival MGF domain
/// when the lower end falls outside it.
pub fn kappa_solve(model: &CmrpModel, theta: &Theta, r: f64) -> Result<LundbergSolution> {
    if r == 0.0 {
        return Ok(LundbergSolution {
            r,
            kappa: 0.0,
            theta: *theta,
            residual: 0.0,
        });
    }
    let ln_mx = model.claims.ln_mgf(r)?;
    let c = model.premium_at(theta)?;
    let kernel = model.kernel_at(theta)?;
    let g = |kappa: f64| -> f64 {
        match kernel.ln_mgf(-kappa - c * r) {
            Ok(v) => ln_mx + v,
            Err(_) => f64::INFINITY,
        }
    };
    // κ must exceed this for M_W(-κ - c r) to be finite.
    let kappa_min = -c * r - kernel.mgf_abscissa();
    let k0 = (theta.norm() * model.claims.mgf(r)?).max(1.0);

    let mut hi = k0;
    let mut g_hi = g(hi);
    for _ in 0..200 {
        if g_hi < 0.0 {
            break;
        }
        hi *= 2.0;
        g_hi = g(hi);
    }
    let mut width = k0;
    let mut lo = -c * r;
    let mut g_lo = f64::NAN;
    for _ in 0..200 {
        let next = -c * r - width;
        if next <= kappa_min {
            break;
        }
        lo = next;
        g_lo = g(lo);
        if g_lo > 0.0 {
            break;
        }
        width *= 2.0;
    }
    if !(g_lo > 0.0) && kappa_min.is_finite() {
        // Approach the edge of the interarrival MGF domain geometrically.
        let mut gap = if lo > kappa_min {
            lo - kappa_min
        } else {
            2.0 * k0
        };
        for _ in 0..1100 {
            gap *= 0.5;
            let next = kappa_min + gap;
            if next == kappa_min {
                break;
            }
            lo = next;
            g_lo = g(lo);
            if g_lo > 0.0 {
                break;
            }
        }
    }
    if !(g_lo > 0.0 && g_hi < 0.0) {
        return Err(CmrpError::NoRoot {
            lo,
            hi,
            f_lo: g_lo,
            f_hi: g_hi,
        });
    }
    let g_finite = |k: f64| {
        let v = g(k);
        if v.is_finite() {
            v
        } else {
            f64::MAX
        }
    };
    let kappa = brent(g_finite, lo, hi, &RootConfig::default())?;
    let residual = g(kappa).exp_m1();
    // When g is steep (tiny interarrival abscissa) one ulp of κ can move the
    // residual past 1e-12; accept anything within a few float steps then.
    let ulp_spread = (g(kappa.next_down()) - g(kappa.next_up())).abs();
    if residual.abs() > 1e-12_f64.max(4.0 * ulp_spread) {
        return Err(CmrpError::NoRoot {
            lo,
            hi,
            f_lo: g_lo,
            f_hi: g_hi,
        });
    }
    Ok(LundbergSolution {
        r,
        kappa,
        theta: *theta,
        residual,
    })
}

/// Esscher change with parameter `r`: claims tilted by `e^{rx}/M_X(r)` and
/// interarrivals by `e^{-(κ_θ(r) + c(θ) r) w}`; `ξ` is supplied by the caller.
pub fn esscher_change(model: &CmrpModel, r: f64, reweight: MixReweight) -> Result<MeasureChange> {
    let tilt = esscher_tilt(model, r)?;
    let target = if r == 0.0 {
        TargetKernel::Identity
    } else {
        TargetKernel::Esscher { r }
    };
    Ok(MeasureChange {
        tilt,
        reweight,
        target,
    })
}

/// `ln ∫_x^∞ e^{-s w} K(dw)`.
fn ln_tilted_tail(kernel: &DistSpec, s: f64, x: f64) -> Result<f64> {
    match *kernel {
        DistSpec::Exponential { rate } => Ok(rate.ln() - (rate + s).ln() - (rate + s) * x),
        DistSpec::Gamma { rate, shape } => {
            let q = if x <= 0.0 {
                0.0
            } else {
                ln_gamma_pq(shape, (rate + s) * x).1
            };
            Ok(shape * (rate.ln() - (rate + s).ln()) + q)
        }
        _ => {
            let anchor = kernel.log_pdf(x.max(f64::MIN_POSITIVE)) - s * x;
            let r = integrate(
                |w: f64| (kernel.log_pdf(w) - s * w - anchor).exp(),
                x,
                f64::INFINITY,
                &QuadConfig::with_tol(1e-13),
            )
            .require_converged()?;
            Ok(anchor + r.value.ln())
        }
    }
}

/// The Lundberg exponential martingale at `t`, written in terms of the
/// reserve:
/// `exp(-r(R_t - u) + (κ + c r)(t - T_N) - κ t + ln M_X(r))
///   · ∫_{t-T_N}^∞ e^{-(κ+cr)w} K(dw) / (1 - K(t - T_N))`.
pub fn log_lundberg_martingale(model: &CmrpModel, p: &Path, r: f64, t: f64) -> Result<f64> {
    let sol = kappa_solve(model, &p.theta, r)?;
    let c = model.premium_at(&p.theta)?;
    let kernel = model.kernel_at(&p.theta)?;
    let s = sol.kappa + c * r;
    let gain = p.reserve_at(model, 0.0, t)?;
    let elapsed = t - p.last_arrival_at(t)?;
    let ln_mx = model.claims.ln_mgf(r)?;
    Ok(
        -r * gain + s * elapsed - sol.kappa * t + ln_mx + ln_tilted_tail(&kernel, s, elapsed)?
            - kernel.log_survival(elapsed),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{KernelSpec, MixingSpec};
    use crate::simulate::{path_rng, sample_path, DEFAULT_MAX_JUMPS};

    fn exp_model(theta: f64, eta: f64, c: f64) -> CmrpModel {
        CmrpModel::new(
            MixingSpec::dirac(theta),
            KernelSpec::exponential(Expr::theta()),
            DistSpec::exponential(eta).unwrap(),
            Expr::constant(c),
        )
        .unwrap()
    }

    fn exp2_to_exp3() -> (CmrpModel, MeasureChange) {
        let m = CmrpModel::new(
            MixingSpec::dirac(1.0),
            KernelSpec::exponential(Expr::parse("2*theta").unwrap()),
            DistSpec::exponential(1.0).unwrap(),
            Expr::constant(1.0),
        )
        .unwrap();
        let mc = MeasureChange::poissonization(
            ClaimTilt::Unit,
            MixReweight::Unit,
            Expr::parse("3*theta").unwrap(),
        );
        (m, mc)
    }

    #[test]
    fn log_g_n_examples() {
        let th = Theta::scalar(1.0);
        let m = exp_model(1.0, 2.0, 1.0);
        let id = MeasureChange::identity();
        assert_eq!(log_g_n(&id, &m, &th, &[0.2, 0.3], 1.0).unwrap(), 0.0);

        let (m, mc) = exp2_to_exp3();
        assert!((log_g_n(&mc, &m, &th, &[], 1.0).unwrap() + 1.0).abs() < 1e-15);
        let v = log_g_n(&mc, &m, &th, &[0.5], 1.0).unwrap();
        assert!((v - (1.5f64.ln() - 1.0)).abs() < 1e-15);
        assert!((v + 0.594535).abs() < 1e-6);
        assert!(matches!(
            log_g_n(&mc, &m, &th, &[0.7, 0.6], 1.0),
            Err(CmrpError::Domain(_))
        ));
    }

    #[test]
    fn conditional_density_examples() {
        let (m, mc) = exp2_to_exp3();
        let th = Theta::scalar(1.0);
        let empty = Path::from_arrivals(th, vec![], vec![], 2.0).unwrap();
        let d = log_density_conditional(&mc, &m, &empty, 1.0).unwrap();
        assert!((d.log_value.exp() - (-1f64).exp()).abs() < 1e-15);
        assert!((d.log_value.exp() - 0.367879).abs() < 1e-6);

        let one = Path::from_arrivals(th, vec![0.5], vec![1.0], 2.0).unwrap();
        let d = log_density_conditional(&mc, &m, &one, 1.0).unwrap();
        assert!((d.log_value.exp() - 1.5 * (-1f64).exp()).abs() < 1e-15);
        assert!((d.log_value.exp() - 0.551819).abs() < 1e-6);
        assert_eq!(d.xi_log_factor, 0.0);
        let sum: f64 = d
            .jump_log_factors
            .iter()
            .map(|j| j.claim + j.interarrival)
            .sum::<f64>()
            + d.tail_log_factor;
        assert_eq!(sum, d.log_value);

        // Claim exactly at the evaluation time: both survivals are 1.
        let d = log_density_conditional(&mc, &m, &one, 0.5).unwrap();
        assert_eq!(d.tail_log_factor, 0.0);
        assert!((d.log_value - (1.5f64.ln() - 0.5)).abs() < 1e-15);
    }

    #[test]
    fn identity_density_is_zero() {
        let m = CmrpModel::new(
            MixingSpec::single(DistSpec::gamma(2.0, 3.0).unwrap()).unwrap(),
            KernelSpec::new(
                "gamma",
                [("rate", Expr::theta()), ("shape", Expr::constant(1.7))],
            )
            .unwrap(),
            DistSpec::lognormal(0.0, 0.5).unwrap(),
            Expr::constant(1.0),
        )
        .unwrap();
        let id = MeasureChange::identity();
        for i in 0..50 {
            let p = sample_path(&m, 5.0, &mut path_rng(1, i), DEFAULT_MAX_JUMPS).unwrap();
            for &t in &[0.0, 1.0, 5.0] {
                assert_eq!(log_density(&id, &m, &p, t).unwrap().log_value, 0.0);
            }
        }
    }

    #[test]
    fn identity_poissonization_is_zero() {
        let m = CmrpModel::new(
            MixingSpec::single(DistSpec::gamma(2.0, 3.0).unwrap()).unwrap(),
            KernelSpec::exponential(Expr::theta()),
            DistSpec::exponential(1.0).unwrap(),
            Expr::constant(1.0),
        )
        .unwrap();
        for i in 0..50 {
            let p = sample_path(&m, 5.0, &mut path_rng(2, i), DEFAULT_MAX_JUMPS).unwrap();
            let d = log_density_poissonization(
                &m,
                &ClaimTilt::Unit,
                &MixReweight::Unit,
                &Expr::theta(),
                &p,
                3.0,
            )
            .unwrap();
            assert!(d.log_value.abs() < 1e-12, "{}", d.log_value);
        }
    }

    #[test]
    fn kappa_examples() {
        let m = exp_model(1.0, 2.0, 2.0);
        let th = Theta::scalar(1.0);
        assert_eq!(kappa_solve(&m, &th, 0.0).unwrap().kappa, 0.0);
        let sol = kappa_solve(&m, &th, 1.0).unwrap();
        assert!((sol.kappa + 1.0).abs() < 1e-12, "{sol:?}");
        assert!(sol.residual.abs() <= 1e-12);
        // negative r
        let sol = kappa_solve(&m, &th, -0.7).unwrap();
        let closed = 2.0 / 2.7 - 1.0 + 1.4;
        assert!((sol.kappa - closed).abs() < 1e-12);
    }

    #[test]
    fn kappa_tiny_rate_is_float_exact() {
        // Exp(θ) arrivals, Exp(2) claims, c = 2, r = 0.5: κ = θ/3 - 1.
        let m = exp_model(1.0, 2.0, 2.0);
        for theta in [7.8e-5, 1e-7, 1e-10] {
            let sol = kappa_solve(&m, &Theta::scalar(theta), 0.5).unwrap();
            assert!(
                (sol.kappa - (theta / 3.0 - 1.0)).abs() < 1e-14,
                "{theta}: {sol:?}"
            );
        }
    }

    #[test]
    fn kappa_gamma_kernel() {
        let m = CmrpModel::new(
            MixingSpec::dirac(2.0),
            KernelSpec::new(
                "gamma",
                [("rate", Expr::theta()), ("shape", Expr::constant(2.0))],
            )
            .unwrap(),
            DistSpec::exponential(2.0).unwrap(),
            Expr::constant(1.0),
        )
        .unwrap();
        let sol = kappa_solve(&m, &Theta::scalar(2.0), 0.5).unwrap();
        // M_X(0.5) = 4/3, M_W(-s) = (2/(2+s))^2 => s = 2(sqrt(4/3) - 1)
        let s = 2.0 * ((4.0f64 / 3.0).sqrt() - 1.0);
        assert!((sol.kappa + 0.5 - s).abs() < 1e-12);
    }

    #[test]
    fn kappa_lognormal_kernel_numeric() {
        let m = CmrpModel::new(
            MixingSpec::dirac(0.0),
            KernelSpec::new(
                "lognormal",
                [("mu", Expr::theta()), ("sigma2", Expr::constant(0.3))],
            )
            .unwrap(),
            DistSpec::exponential(2.0).unwrap(),
            Expr::constant(1.5),
        )
        .unwrap();
        let sol = kappa_solve(&m, &Theta::scalar(0.0), 0.4).unwrap();
        assert!(sol.residual.abs() <= 1e-12);
        assert!(sol.kappa + 1.5 * 0.4 > 0.0);
    }

    #[test]
    fn esscher_change_examples() {
        let m = exp_model(1.0, 2.0, 2.0);
        let id = esscher_change(&m, 0.0, MixReweight::Unit).unwrap();
        assert!(id.is_identity());
        let mc = esscher_change(&m, 1.0, MixReweight::Unit).unwrap();
        let target = mc.target_at(&m, &Theta::scalar(1.0)).unwrap();
        match target {
            DistSpec::Exponential { rate } => assert!((rate - 2.0).abs() < 1e-12),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn lundberg_route_matches_generic() {
        for &(theta, eta, c, r) in &[(1.0, 2.0, 2.0, 1.0), (1.5, 2.0, 1.0, 0.3)] {
            let m = exp_model(theta, eta, c);
            let mc = esscher_change(&m, r, MixReweight::Unit).unwrap();
            for i in 0..200 {
                let p = sample_path(&m, 10.0, &mut path_rng(5, i), DEFAULT_MAX_JUMPS).unwrap();
                for &t in &[0.0, 1.0, 3.7, 10.0] {
                    let a = log_density_conditional(&mc, &m, &p, t).unwrap().log_value;
                    let b = log_lundberg_martingale(&m, &p, r, t).unwrap();
                    assert!((a - b).abs() <= 1e-10, "{a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn lundberg_route_gamma_kernel() {
        let m = CmrpModel::new(
            MixingSpec::dirac(2.0),
            KernelSpec::new(
                "gamma",
                [("rate", Expr::theta()), ("shape", Expr::constant(2.0))],
            )
            .unwrap(),
            DistSpec::gamma(3.0, 2.0).unwrap(),
            Expr::constant(1.0),
        )
        .unwrap();
        let mc = esscher_change(&m, 0.5, MixReweight::Unit).unwrap();
        for i in 0..100 {
            let p = sample_path(&m, 8.0, &mut path_rng(6, i), DEFAULT_MAX_JUMPS).unwrap();
            let a = log_density_conditional(&mc, &m, &p, 8.0).unwrap().log_value;
            let b = log_lundberg_martingale(&m, &p, 0.5, 8.0).unwrap();
            assert!((a - b).abs() <= 1e-10, "{a} vs {b}");
        }
    }
}
