//! Globally adaptive Gauss–Legendre quadrature.
//!
//! Each panel is integrated with a 20-point Gauss–Legendre rule on the whole
//! panel and on its two halves; the difference is the panel's error estimate
//! and the two-half value is kept. The panel with the largest error is split
//! until the summed estimate meets the tolerance. Infinite endpoints are
//! handled by rational maps onto a finite interval, so the rule never
//! evaluates the integrand at an endpoint.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::sync::OnceLock;

use crate::error::{CmrpError, Result};

const ORDER: usize = 20;

fn nodes() -> &'static [(f64, f64)] {
    static NODES: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    NODES.get_or_init(|| legendre_nodes(ORDER))
}

/// Gauss–Legendre nodes and weights on [-1, 1] by Newton iteration on P_n.
pub fn legendre_nodes(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

#[derive(Debug, Clone, Copy)]
pub struct QuadConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_panels: usize,
}

impl Default for QuadConfig {
    fn default() -> Self {
        QuadConfig {
            abs_tol: 1e-10,
            rel_tol: 1e-10,
            max_panels: 4000,
        }
    }
}

impl QuadConfig {
    pub fn with_tol(tol: f64) -> Self {
        QuadConfig {
            abs_tol: tol,
            rel_tol: tol,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub panels: usize,
    pub converged: bool,
}

impl QuadResult {
    pub fn require_converged(self) -> Result<Self> {
        if self.converged {
            Ok(self)
        } else {
            Err(CmrpError::Quadrature(format!(
                "no convergence after {} panels (value {}, error estimate {})",
                self.panels, self.value, self.error
            )))
        }
    }
}

#[derive(Debug)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .partial_cmp(&other.error)
            .unwrap_or(Ordering::Equal)
            .then_with(|| other.a.partial_cmp(&self.a).unwrap_or(Ordering::Equal))
    }
}

fn gauss<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    nodes()
        .iter()
        .map(|&(x, w)| w * f(mid + half * x))
        .sum::<f64>()
        * half
}

fn panel<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Panel {
    let m = 0.5 * (a + b);
    let whole = gauss(f, a, b);
    let split = gauss(f, a, m) + gauss(f, m, b);
    let error = if whole.is_finite() && split.is_finite() {
        (whole - split).abs()
    } else {
        f64::INFINITY
    };
    Panel {
        a,
        b,
        value: split,
        error,
    }
}

fn adapt<F: Fn(f64) -> f64>(f: &F, breaks: &[f64], cfg: &QuadConfig) -> QuadResult {
    let mut heap: BinaryHeap<Panel> = breaks.windows(2).map(|w| panel(f, w[0], w[1])).collect();
    loop {
        let total: f64 = heap.iter().map(|p| p.value).sum();
        let err: f64 = heap.iter().map(|p| p.error).sum();
        let target = cfg.abs_tol.max(cfg.rel_tol * total.abs());
        let converged = err <= target && total.is_finite();
        if converged || heap.len() >= cfg.max_panels {
            let mut panels: Vec<Panel> = heap.into_vec();
            panels.sort_by(|x, y| x.a.partial_cmp(&y.a).unwrap_or(Ordering::Equal));
            return QuadResult {
                value: panels.iter().map(|p| p.value).sum(),
                error: err,
                panels: panels.len(),
                converged,
            };
        }
        let worst = heap.pop().expect("non-empty panel set");
        let m = 0.5 * (worst.a + worst.b);
        if !(m > worst.a && m < worst.b) {
            // Panel cannot be split further in floating point.
            heap.push(Panel {
                error: 0.0,
                ..worst
            });
            continue;
        }
        heap.push(panel(f, worst.a, m));
        heap.push(panel(f, m, worst.b));
    }
}

/// Integrate `f` over `[a, b]`; either endpoint may be infinite.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, cfg: &QuadConfig) -> QuadResult {
    if a == b {
        return QuadResult {
            value: 0.0,
            error: 0.0,
            panels: 0,
            converged: true,
        };
    }
    if a > b {
        let r = integrate(f, b, a, cfg);
        return QuadResult {
            value: -r.value,
            ..r
        };
    }
    let init: Vec<f64> = (0..=8).map(|i| i as f64 / 8.0).collect();
    match (a.is_finite(), b.is_finite()) {
        (true, true) => {
            let breaks: Vec<f64> = init.iter().map(|t| a + (b - a) * t).collect();
            adapt(&f, &breaks, cfg)
        }
        (true, false) => {
            // x = a + t / (1 - t)
            let g = |t: f64| {
                let s = 1.0 - t;
                let v = f(a + t / s);
                if v == 0.0 {
                    0.0
                } else {
                    v / (s * s)
                }
            };
            adapt(&g, &init, cfg)
        }
        (false, true) => {
            // x = b - (1 - t) / t
            let g = |t: f64| {
                let v = f(b - (1.0 - t) / t);
                if v == 0.0 {
                    0.0
                } else {
                    v / (t * t)
                }
            };
            adapt(&g, &init, cfg)
        }
        (false, false) => {
            // x = t / (1 - t^2) on (-1, 1)
            let g = |t: f64| {
                let s = 1.0 - t * t;
                let v = f(t / s);
                if v == 0.0 {
                    0.0
                } else {
                    v * (1.0 + t * t) / (s * s)
                }
            };
            let breaks: Vec<f64> = init.iter().map(|t| 2.0 * t - 1.0).collect();
            adapt(&g, &breaks, cfg)
        }
    }
}

/// Integrate over `[a, b]` split at the given interior points.
pub fn integrate_with_breaks<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    interior: &[f64],
    cfg: &QuadConfig,
) -> QuadResult {
    let mut pts = vec![a];
    pts.extend(interior.iter().copied().filter(|&x| x > a && x < b));
    pts.push(b);
    let mut out = QuadResult {
        value: 0.0,
        error: 0.0,
        panels: 0,
        converged: true,
    };
    for w in pts.windows(2) {
        let r = integrate(&f, w[0], w[1], cfg);
        out.value += r.value;
        out.error += r.error;
        out.panels += r.panels;
        out.converged &= r.converged;
    }
    out
}
