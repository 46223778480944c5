//! Rate formulas of the coding schemes.
//!
//! Every scheme is a two-mode time-sharing construction: during a fraction
//! `λ` of the block the first mode runs (receiver 1 cancels user 2's
//! codeword, or its common part), during `λ̄ = 1 − λ` the roles swap. A scheme
//! parameter point maps to one or more rate-pair vertices whose down-closure
//! is achievable.
//!
//! Besides the typed entry points ([`sason_rates`], [`theorem3_rates`], ...)
//! each scheme has a flat parameter encoding ([`param_specs`],
//! [`SchemeParams::from_flat`]) used by the optimizer, by provenance records
//! and by the CLI.

mod arma;
mod baseline;
mod hk;
mod sason;

use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frontier::down_set_vertices;
use crate::model::{ChannelParams, Provenance, RatePair, SchemeId};
use crate::quadrature::FixedRule;
use crate::spectra::ArmaSpectrum;

pub use arma::{slot_powers, theorem2_rates, theorem2_rates_checked, theorem3_rates, ArmaFilter, ArmaSchemeParams};
pub use baseline::{gaussian_mi, hk_baseline_region, GaussianVector, HkBaselineParams, HkBounds, HkGaussianModel};
pub use hk::{corollary_region_points, theorem4_rates, theorem5_rates, HkSchemeParams, Pentagon};
pub use sason::{sason_rates, SasonParams};

/// Per-symbol variances of one user in the two segments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentPowers {
    /// `frac·P/λ`, zero when the first segment vanishes.
    pub first: f64,
    /// `(1 − frac)·P/λ̄`, zero when the second segment vanishes.
    pub second: f64,
}

/// Splits a user's power between the two segments so that the block-average
/// power is exactly `total`.
pub fn segment_powers(total: f64, frac: f64, lambda: f64) -> SegmentPowers {
    let first = if lambda > 0.0 { frac * total / lambda } else { 0.0 };
    let second = if lambda < 1.0 { (1.0 - frac) * total / (1.0 - lambda) } else { 0.0 };
    let s = SegmentPowers { first, second };
    debug_assert!(
        energy_identity_error(total, frac, lambda) <= 8.0 * f64::EPSILON * total.max(1.0),
        "power accounting broken for P = {total}, frac = {frac}, λ = {lambda}"
    );
    s
}

/// `|λ·(frac·P/λ) + λ̄·((1 − frac)·P/λ̄) − P|`, with a vanished segment
/// contributing its energy `frac·P` (resp. `(1 − frac)·P`) in the limit.
pub fn energy_identity_error(total: f64, frac: f64, lambda: f64) -> f64 {
    let e1 = if lambda > 0.0 { lambda * (frac * total / lambda) } else { frac * total };
    let e2 = if lambda < 1.0 { (1.0 - lambda) * ((1.0 - frac) * total / (1.0 - lambda)) } else { (1.0 - frac) * total };
    (e1 + e2 - total).abs()
}

/// How the Theorem-5-style simultaneous-decoding bound weights user 2's
/// first-mode term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeWeighting {
    /// First-mode terms weighted by `λ`, second-mode terms by `λ̄`.
    #[default]
    Derivation,
    /// `λ̄` on both terms of user 2's bound, as typeset in the source formula.
    AsPrinted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ParamSupport {
    /// Closed interval `[0, 1]`.
    Unit,
    /// Open interval `(−1, 1)`.
    Open,
}

impl ParamSupport {
    pub fn contains(&self, v: f64) -> bool {
        match self {
            ParamSupport::Unit => (0.0..=1.0).contains(&v),
            ParamSupport::Open => v > -1.0 && v < 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamSpec {
    pub name: String,
    pub support: ParamSupport,
}

fn specs(names: &[&str], support: ParamSupport) -> Vec<ParamSpec> {
    names.iter().map(|n| ParamSpec { name: n.to_string(), support }).collect()
}

const BASE: [&str; 3] = ["alpha", "beta", "lambda"];
const ARMA_TIED: [&str; 4] = ["rho_x1", "rho_x2", "kappa1", "kappa2"];
const ARMA_SPLIT: [&str; 8] =
    ["rho_x1_s1", "kappa1_s1", "rho_x2_s1", "kappa2_s1", "rho_x1_s2", "kappa1_s2", "rho_x2_s2", "kappa2_s2"];
const HK_UNIT: [&str; 5] = ["alpha", "beta", "lambda", "xi1", "xi2"];
const HK_OPEN: [&str; 6] = ["rho_x1", "rho_x2", "rho_u1", "rho_v1", "rho_u2", "rho_v2"];
/// Cosine-series slots in flat order: user1/seg1, user2/seg1, user1/seg2, user2/seg2.
const COS_SLOTS: [&str; 4] = ["r11", "r21", "r12", "r22"];

/// Parameter names and supports of a scheme, in flat order. `cos_order` is
/// the truncation length of the cosine-series scheme and is ignored by the
/// others.
pub fn param_specs(scheme: SchemeId, cos_order: usize) -> Vec<ParamSpec> {
    let mut out = match scheme {
        SchemeId::HkSc | SchemeId::HkSim | SchemeId::HkCorollary => specs(&HK_UNIT, ParamSupport::Unit),
        SchemeId::HkBaseline => specs(&["xi1", "xi2"], ParamSupport::Unit),
        _ => specs(&BASE, ParamSupport::Unit),
    };
    match scheme {
        SchemeId::Arma => out.extend(specs(&ARMA_TIED, ParamSupport::Open)),
        SchemeId::ArmaSplit => out.extend(specs(&ARMA_SPLIT, ParamSupport::Open)),
        SchemeId::HkSc | SchemeId::HkSim | SchemeId::HkCorollary => out.extend(specs(&HK_OPEN, ParamSupport::Open)),
        SchemeId::Theorem2 => {
            for slot in COS_SLOTS {
                for k in 1..=cos_order {
                    out.push(ParamSpec { name: format!("{slot}_{k}"), support: ParamSupport::Open });
                }
            }
        }
        SchemeId::Sason | SchemeId::HkBaseline => {}
    }
    out
}

pub fn param_names(scheme: SchemeId, cos_order: usize) -> Vec<String> {
    param_specs(scheme, cos_order).into_iter().map(|s| s.name).collect()
}

/// A typed parameter point of any scheme.
#[derive(Debug, Clone, PartialEq)]
pub enum SchemeParams {
    Sason(SasonParams),
    Theorem2 { base: SasonParams, coeffs: [Vec<f64>; 4] },
    Arma(ArmaSchemeParams),
    Hk(HkSchemeParams),
    Baseline(HkBaselineParams),
}

impl SchemeParams {
    pub fn from_flat(scheme: SchemeId, values: &[f64]) -> Result<Self> {
        let need = |n: usize| -> Result<()> {
            if values.len() != n {
                return Err(Error::DimensionMismatch(format!(
                    "scheme {scheme} takes {n} parameters, got {}",
                    values.len()
                )));
            }
            Ok(())
        };
        Ok(match scheme {
            SchemeId::Sason => {
                need(3)?;
                SchemeParams::Sason(SasonParams::new(values[0], values[1], values[2])?)
            }
            SchemeId::Theorem2 => {
                if values.len() < 3 || (values.len() - 3) % 4 != 0 {
                    return Err(Error::DimensionMismatch(format!(
                        "theorem2 takes 3 + 4m parameters, got {}",
                        values.len()
                    )));
                }
                let base = SasonParams::new(values[0], values[1], values[2])?;
                let m = (values.len() - 3) / 4;
                let slot = |i: usize| values[3 + i * m..3 + (i + 1) * m].to_vec();
                SchemeParams::Theorem2 { base, coeffs: [slot(0), slot(1), slot(2), slot(3)] }
            }
            SchemeId::Arma => {
                need(7)?;
                let base = SasonParams::new(values[0], values[1], values[2])?;
                let f1 = ArmaFilter::first_order(values[3], values[5]);
                let f2 = ArmaFilter::first_order(values[4], values[6]);
                SchemeParams::Arma(ArmaSchemeParams::tied(base, f1, f2)?)
            }
            SchemeId::ArmaSplit => {
                need(11)?;
                let base = SasonParams::new(values[0], values[1], values[2])?;
                let f = |i: usize| ArmaFilter::first_order(values[3 + 2 * i], values[4 + 2 * i]);
                SchemeParams::Arma(ArmaSchemeParams::split(base, [f(0), f(1), f(2), f(3)])?)
            }
            SchemeId::HkSc | SchemeId::HkSim | SchemeId::HkCorollary => {
                need(11)?;
                SchemeParams::Hk(HkSchemeParams::from_slice(values)?)
            }
            SchemeId::HkBaseline => {
                need(2)?;
                SchemeParams::Baseline(HkBaselineParams::new(values[0], values[1])?)
            }
        })
    }
}

/// Caches unit-power density samples by filter coefficients.
#[derive(Debug, Default)]
struct ShapeCache {
    map: HashMap<Vec<u64>, Arc<Vec<f64>>>,
}

const SHAPE_CACHE_LIMIT: usize = 4096;

impl ShapeCache {
    fn get(&mut self, ar: &[f64], ma: &[f64], rule: &FixedRule) -> Result<Arc<Vec<f64>>> {
        let mut key: Vec<u64> = Vec::with_capacity(ar.len() + ma.len() + 1);
        key.extend(ar.iter().map(|v| v.to_bits()));
        key.push(u64::MAX);
        key.extend(ma.iter().map(|v| v.to_bits()));
        if let Some(s) = self.map.get(&key) {
            return Ok(s.clone());
        }
        let shape = Arc::new(unit_shape(ar, ma, rule)?);
        if self.map.len() >= SHAPE_CACHE_LIMIT {
            self.map.clear();
        }
        self.map.insert(key, shape.clone());
        Ok(shape)
    }
}

/// Unit-power ARMA density sampled on the rule's nodes.
pub(crate) fn unit_shape(ar: &[f64], ma: &[f64], rule: &FixedRule) -> Result<Vec<f64>> {
    let spec = ArmaSpectrum::new(ar, ma, 1.0)?;
    Ok(match (ar, ma) {
        ([r], []) => {
            let num = 1.0 - r * r;
            rule.cosines().iter().map(|c| num / (1.0 - 2.0 * r * c + r * r)).collect()
        }
        ([r], [k]) => {
            let g = spec.gain();
            rule.cosines().iter().map(|c| g * (1.0 - 2.0 * k * c + k * k) / (1.0 - 2.0 * r * c + r * r)).collect()
        }
        _ => rule.nodes().iter().map(|&w| spec.density(w)).collect(),
    })
}

/// Evaluates flat parameter points of one scheme on one channel.
///
/// Holds a shape cache, so it is cheap to evaluate many points that share
/// filters. Not `Sync`; give each worker its own clone.
#[derive(Debug)]
pub struct Evaluator {
    ch: ChannelParams,
    scheme: SchemeId,
    rule: Arc<FixedRule>,
    weighting: ModeWeighting,
    cache: RefCell<ShapeCache>,
}

impl Clone for Evaluator {
    fn clone(&self) -> Self {
        Evaluator {
            ch: self.ch,
            scheme: self.scheme,
            rule: self.rule.clone(),
            weighting: self.weighting,
            cache: RefCell::new(ShapeCache::default()),
        }
    }
}

impl Evaluator {
    pub fn new(ch: ChannelParams, scheme: SchemeId, rule: Arc<FixedRule>) -> Self {
        Evaluator { ch, scheme, rule, weighting: ModeWeighting::default(), cache: RefCell::new(ShapeCache::default()) }
    }

    pub fn with_weighting(mut self, weighting: ModeWeighting) -> Self {
        self.weighting = weighting;
        self
    }

    pub fn channel(&self) -> &ChannelParams {
        &self.ch
    }

    pub fn scheme(&self) -> SchemeId {
        self.scheme
    }

    pub fn rule(&self) -> &FixedRule {
        &self.rule
    }

    fn shape(&self, ar: &[f64], ma: &[f64]) -> Result<Arc<Vec<f64>>> {
        self.cache.borrow_mut().get(ar, ma, &self.rule)
    }

    /// All rate-pair vertices contributed by one parameter point, tagged with
    /// provenance (sequence number 0; callers renumber).
    pub fn evaluate(&self, values: &[f64]) -> Result<Vec<RatePair>> {
        let params = SchemeParams::from_flat(self.scheme, values)?;
        let prov = |vertex: u8| Provenance { scheme: self.scheme, params: values.to_vec(), vertex, seq: 0 };
        let ch = &self.ch;
        let rule = &*self.rule;
        let pairs: Vec<(f64, f64)> = match (&params, self.scheme) {
            (SchemeParams::Sason(p), _) => {
                let rp = sason_rates(ch, p);
                vec![(rp.r1, rp.r2)]
            }
            (SchemeParams::Theorem2 { base, coeffs }, _) => {
                let mut shapes = Vec::with_capacity(4);
                for c in coeffs {
                    let spec = crate::spectra::CosineSeriesSpectrum::new(c, 1.0)?;
                    shapes.push(rule.nodes().iter().map(|&w| spec.density(w)).collect::<Vec<f64>>());
                }
                let (r1, r2) = arma::two_mode_rates(ch, base, [&shapes[0], &shapes[1], &shapes[2], &shapes[3]], rule);
                vec![(r1, r2)]
            }
            (SchemeParams::Arma(p), _) => {
                let s: Vec<Arc<Vec<f64>>> =
                    p.filters().iter().map(|f| self.shape(&f.ar, &f.ma)).collect::<Result<_>>()?;
                let (r1, r2) = arma::two_mode_rates(ch, p.base(), [&s[0], &s[1], &s[2], &s[3]], rule);
                vec![(r1, r2)]
            }
            (SchemeParams::Hk(p), scheme) => {
                let terms = hk::HkTerms::compute(ch, p, rule, |r| self.shape(&[r], &[]))?;
                let rect = terms.successive();
                let pent = terms.simultaneous(self.weighting);
                match scheme {
                    SchemeId::HkSc => vec![rect],
                    SchemeId::HkSim => pent.corners().to_vec(),
                    _ => {
                        let [a, b] = pent.corners();
                        vec![rect, a, b]
                    }
                }
            }
            (SchemeParams::Baseline(p), _) => {
                let bounds = hk_baseline_region(ch, p)?;
                down_set_vertices(&bounds.constraints())
            }
        };
        Ok(pairs.into_iter().enumerate().map(|(i, (r1, r2))| RatePair::clamped(r1, r2, prov(i as u8))).collect())
    }

    /// Re-evaluates a provenance record and returns the vertex it names.
    pub fn replay(&self, prov: &Provenance) -> Result<RatePair> {
        if prov.scheme != self.scheme {
            return Err(Error::InvalidArgument(format!(
                "provenance is for {} but the evaluator runs {}",
                prov.scheme, self.scheme
            )));
        }
        self.evaluate(&prov.params)?
            .into_iter()
            .nth(prov.vertex as usize)
            .ok_or_else(|| Error::InvalidArgument(format!("vertex {} does not exist", prov.vertex)))
    }
}
