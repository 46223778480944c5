//! The spectral rate functional
//!
//! ```text
//! phi[f] = (1/4π) ∫_0^{2π} log2(1 + f(ω)) dω
//! ```
//!
//! evaluated either by the composite trapezoid rule (spectrally accurate for
//! smooth periodic integrands) or by adaptive Gauss–Kronrod subdivision, which
//! copes better with densities whose poles sit close to the unit circle.
//!
//! [`FixedRule`] is the sampled form used by the rate formulas: all densities
//! there have real filter coefficients, hence are symmetric about `ω = π`, and
//! the rule only visits `[0, π]`.

use std::cell::Cell;
use std::f64::consts::{LN_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QuadratureMethod {
    FixedTrapezoid,
    Adaptive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    pub method: QuadratureMethod,
    /// Node count of the fixed rule.
    pub points: usize,
    /// Absolute tolerance on `phi` for the adaptive rule.
    pub tol: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig { method: QuadratureMethod::FixedTrapezoid, points: 4096, tol: 1e-10 }
    }
}

impl QuadratureConfig {
    pub fn fixed(points: usize) -> Self {
        QuadratureConfig { method: QuadratureMethod::FixedTrapezoid, points, ..Default::default() }
    }

    pub fn adaptive(tol: f64) -> Self {
        QuadratureConfig { method: QuadratureMethod::Adaptive, tol, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.points < 16 {
            return Err(Error::InvalidArgument(format!("quadrature needs >= 16 points, got {}", self.points)));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidArgument(format!("quadrature tolerance must be > 0, got {}", self.tol)));
        }
        Ok(())
    }
}

/// Integrand samples below this are rejected; samples in `[-1e-12, 0)` are
/// treated as zero.
const NEGATIVE_SLACK: f64 = 1e-12;

fn check_sample(omega: f64, v: f64) -> Result<f64> {
    if !v.is_finite() {
        return Err(Error::NonFiniteIntegrand(omega));
    }
    if v < -NEGATIVE_SLACK {
        return Err(Error::NegativeIntegrand { omega, value: v });
    }
    Ok(v.max(0.0))
}

/// `phi[f]` for an arbitrary non-negative integrand on `[0, 2π)`.
pub fn phi(f: impl Fn(f64) -> f64, cfg: &QuadratureConfig) -> Result<f64> {
    cfg.validate()?;
    match cfg.method {
        QuadratureMethod::FixedTrapezoid => {
            let n = cfg.points;
            let mut acc = 0.0;
            for m in 0..n {
                let omega = 2.0 * PI * m as f64 / n as f64;
                acc += check_sample(omega, f(omega))?.ln_1p();
            }
            Ok(0.5 * acc / (n as f64 * LN_2))
        }
        QuadratureMethod::Adaptive => {
            let failure: Cell<Option<Error>> = Cell::new(None);
            let g = |omega: f64| match check_sample(omega, f(omega)) {
                Ok(v) => v.ln_1p(),
                Err(e) => {
                    let prev = failure.take();
                    failure.set(prev.or(Some(e)));
                    0.0
                }
            };
            // absolute tolerance on phi = integral / (4π ln 2)
            let acfg = AdaptiveConfig { tol: cfg.tol * 4.0 * PI * LN_2, ..Default::default() };
            let integral = integrate_adaptive(g, 0.0, 2.0 * PI, acfg);
            if let Some(e) = failure.take() {
                return Err(e);
            }
            Ok((integral / (4.0 * PI * LN_2)).max(0.0))
        }
    }
}

/// Closed form of `phi` for the AR(1) density with coefficient `rho` and
/// per-symbol power `power`.
///
/// With `χ = 1 + ρ² + (1 − ρ²)P`, the numerator of `1 + f` factors as
/// `K|1 − ζe^{jω}|²` with `Kζ = ρ` and `|ζ| < 1`, so `phi = ½ log2 K`. `K` is
/// computed as `(χ + √(χ² − 4ρ²)) / 2`, which is the same root without the
/// cancellation at small `ρ`; at `ρ = 0` it reduces to `eta(P)`.
pub fn closed_form_ar(rho: f64, power: f64) -> Result<f64> {
    if !rho.is_finite() || rho.abs() >= 1.0 {
        return Err(Error::UnstableFilter);
    }
    if !power.is_finite() || power < 0.0 {
        return Err(Error::InvalidArgument(format!("power must be finite and >= 0, got {power}")));
    }
    let chi = 1.0 + rho * rho + (1.0 - rho * rho) * power;
    let k = 0.5 * (chi + (chi * chi - 4.0 * rho * rho).sqrt());
    Ok(0.5 * k.log2())
}

/// Symmetric trapezoid rule on `N` uniform nodes, folded onto `[0, π]`.
#[derive(Debug, Clone)]
pub struct FixedRule {
    points: usize,
    nodes: Vec<f64>,
    cosines: Vec<f64>,
    weights: Vec<f64>,
}

impl FixedRule {
    /// `points` is the full-circle node count; it is rounded up to even.
    pub fn new(points: usize) -> Result<Self> {
        QuadratureConfig::fixed(points).validate()?;
        let n = points + points % 2;
        let half = n / 2;
        let nodes: Vec<f64> = (0..=half).map(|m| 2.0 * PI * m as f64 / n as f64).collect();
        let weights: Vec<f64> =
            (0..=half).map(|m| if m == 0 || m == half { 1.0 / n as f64 } else { 2.0 / n as f64 }).collect();
        let cosines = nodes.iter().map(|w| w.cos()).collect();
        Ok(FixedRule { points: n, nodes, cosines, weights })
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `cos ω` at every node.
    pub fn cosines(&self) -> &[f64] {
        &self.cosines
    }

    /// `phi` of a symmetric density given by its samples on [`Self::nodes`].
    pub fn phi_samples(&self, f: &[f64]) -> f64 {
        debug_assert_eq!(f.len(), self.nodes.len());
        let acc: f64 = f.iter().zip(&self.weights).map(|(v, w)| w * v.max(0.0).ln_1p()).sum();
        0.5 * acc / LN_2
    }

    /// `phi[S / (1 + I)]` where `S = Σ c_i s_i` and `I = Σ d_j t_j` are
    /// non-negative combinations of sampled densities. Terms with a zero
    /// scale are skipped; an empty signal gives zero.
    pub fn phi_sinr(&self, signal: &[(f64, &[f64])], interference: &[(f64, &[f64])]) -> f64 {
        let signal: Vec<_> = signal.iter().filter(|(c, _)| *c > 0.0).collect();
        if signal.is_empty() {
            return 0.0;
        }
        let interference: Vec<_> = interference.iter().filter(|(c, _)| *c > 0.0).collect();
        let mut acc = 0.0;
        for (m, w) in self.weights.iter().enumerate() {
            let s: f64 = signal.iter().map(|(c, v)| c * v[m]).sum();
            let i: f64 = interference.iter().map(|(c, v)| c * v[m]).sum();
            acc += w * (s.max(0.0) / (1.0 + i.max(0.0))).ln_1p();
        }
        0.5 * acc / LN_2
    }
}

#[derive(Debug, Clone, Copy)]
pub struct AdaptiveConfig {
    /// Absolute tolerance on the integral.
    pub tol: f64,
    /// Upper bound on the number of subintervals.
    pub max_intervals: usize,
}

impl Default for AdaptiveConfig {
    fn default() -> Self {
        AdaptiveConfig { tol: 1e-10, max_intervals: 20_000 }
    }
}

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
// Gauss weights for XGK[1], XGK[3], XGK[5], XGK[7]
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        kronrod += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

/// Globally adaptive G7–K15 integration: the interval with the largest error
/// estimate is bisected until the summed estimate drops below `tol`.
pub fn integrate_adaptive(f: impl Fn(f64) -> f64, a: f64, b: f64, cfg: AdaptiveConfig) -> f64 {
    let (v, e) = gk15(&f, a, b);
    let mut intervals = vec![(a, b, v, e)];
    let mut total_err = e;
    while total_err > cfg.tol && intervals.len() < cfg.max_intervals {
        let (worst, _) =
            intervals
                .iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |best, (i, iv)| if iv.3 > best.1 { (i, iv.3) } else { best });
        let (lo, hi, val, err) = intervals.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            // cannot split further in floating point
            intervals.push((lo, hi, val, 0.0));
            total_err -= err;
            continue;
        }
        let (v1, e1) = gk15(&f, lo, mid);
        let (v2, e2) = gk15(&f, mid, hi);
        intervals.push((lo, mid, v1, e1));
        intervals.push((mid, hi, v2, e2));
        total_err += e1 + e2 - err;
    }
    // sum in a fixed order so the result does not depend on the split history
    intervals.sort_by(|x, y| x.0.total_cmp(&y.0));
    intervals.iter().map(|iv| iv.2).sum()
}
