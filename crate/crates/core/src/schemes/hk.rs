use std::sync::Arc;

use crate::error::{Error, Result};
use crate::frontier::Frontier;
use crate::model::{ChannelParams, Provenance, RatePair, SchemeId};
use crate::quadrature::FixedRule;

use super::{segment_powers, unit_shape, ModeWeighting};

/// Parameter point of the rate-splitting schemes: time sharing, private
/// power fractions and one AR(1) coefficient per codebook component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HkSchemeParams {
    pub alpha: f64,
    pub beta: f64,
    pub lambda: f64,
    pub xi1: f64,
    pub xi2: f64,
    pub rho_x1: f64,
    pub rho_x2: f64,
    pub rho_u1: f64,
    pub rho_v1: f64,
    pub rho_u2: f64,
    pub rho_v2: f64,
}

impl HkSchemeParams {
    /// Flat order: alpha, beta, lambda, xi1, xi2, rho_x1, rho_x2, rho_u1,
    /// rho_v1, rho_u2, rho_v2.
    pub fn from_slice(v: &[f64]) -> Result<Self> {
        if v.len() != 11 {
            return Err(Error::DimensionMismatch(format!("expected 11 parameters, got {}", v.len())));
        }
        for (i, &x) in v.iter().enumerate() {
            let ok = if i < 5 { (0.0..=1.0).contains(&x) } else { x > -1.0 && x < 1.0 };
            if !ok {
                return Err(Error::InvalidArgument(format!("parameter {i} out of range: {x}")));
            }
        }
        Ok(HkSchemeParams {
            alpha: v[0],
            beta: v[1],
            lambda: v[2],
            xi1: v[3],
            xi2: v[4],
            rho_x1: v[5],
            rho_x2: v[6],
            rho_u1: v[7],
            rho_v1: v[8],
            rho_u2: v[9],
            rho_v2: v[10],
        })
    }

    /// White codebooks everywhere.
    pub fn white(alpha: f64, beta: f64, lambda: f64, xi1: f64, xi2: f64) -> Result<Self> {
        Self::from_slice(&[alpha, beta, lambda, xi1, xi2, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0])
    }

    pub fn flat(&self) -> Vec<f64> {
        vec![
            self.alpha,
            self.beta,
            self.lambda,
            self.xi1,
            self.xi2,
            self.rho_x1,
            self.rho_x2,
            self.rho_u1,
            self.rho_v1,
            self.rho_u2,
            self.rho_v2,
        ]
    }
}

/// Upper bounds on `R1`, `R2` and `R1 + R2` for one parameter point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pentagon {
    pub r1_max: f64,
    pub r2_max: f64,
    pub r_sum: f64,
}

impl Pentagon {
    /// The two dominant vertices, clipped to the nonnegative quadrant. They
    /// coincide when the sum bound is inactive.
    pub fn corners(&self) -> [(f64, f64); 2] {
        let (a, b, s) = (self.r1_max.max(0.0), self.r2_max.max(0.0), self.r_sum.max(0.0));
        let a1 = a.min(s);
        let b2 = b.min(s);
        [(a1, b.min(s - a1).max(0.0)), (a.min(s - b2).max(0.0), b2)]
    }

    pub fn contains(&self, r1: f64, r2: f64, tol: f64) -> bool {
        r1 >= -tol && r2 >= -tol && r1 <= self.r1_max + tol && r2 <= self.r2_max + tol && r1 + r2 <= self.r_sum + tol
    }
}

/// Every `phi` term the two decoders need, per mode. Mode 1 runs for a
/// fraction `λ` (user 2 split), mode 2 for `λ̄` (user 1 split). A vanished
/// mode has all terms zero.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub(crate) struct ModeTerms {
    /// Unsplit user decoded with the other user's private part as noise.
    own: f64,
    /// Split user, private plus common, other user's full signal as noise.
    joint: f64,
    common: f64,
    private: f64,
    /// Common part decoded first at the unsplit user's receiver.
    cross_successive: f64,
    /// Same, but jointly with the unsplit user's own codeword.
    cross_simultaneous: f64,
    /// Unsplit user and the common part jointly at the unsplit user's receiver.
    sum: f64,
}

impl ModeTerms {
    fn successive_split(&self) -> f64 {
        self.joint.min(self.common + self.private).min(self.cross_successive + self.private)
    }

    fn simultaneous_split(&self) -> f64 {
        self.joint.min(self.common + self.private).min(self.cross_simultaneous + self.private)
    }
}

pub(crate) struct HkTerms {
    lambda: f64,
    mode1: ModeTerms,
    mode2: ModeTerms,
}

struct Component {
    scale: f64,
    shape: Arc<Vec<f64>>,
}

impl Component {
    fn s(&self, gain: f64) -> (f64, &[f64]) {
        (gain * self.scale, &self.shape)
    }
}

/// Terms of one mode. `x` is the unsplit user, `(u, v)` the split one; `g_xv`
/// is the gain from the split user into the unsplit user's receiver and
/// `g_vx` the reverse.
fn mode_terms(x: &Component, u: &Component, v: &Component, g_xv: f64, g_vx: f64, rule: &FixedRule) -> ModeTerms {
    let phi = |sig: &[(f64, &[f64])], noise: &[(f64, &[f64])]| rule.phi_sinr(sig, noise);
    ModeTerms {
        own: phi(&[x.s(1.0)], &[u.s(g_xv)]),
        joint: phi(&[u.s(1.0), v.s(1.0)], &[x.s(g_vx)]),
        common: phi(&[v.s(1.0)], &[x.s(g_vx)]),
        private: phi(&[u.s(1.0)], &[x.s(g_vx)]),
        cross_successive: phi(&[v.s(g_xv)], &[x.s(1.0), u.s(g_xv)]),
        cross_simultaneous: phi(&[v.s(g_xv)], &[u.s(g_xv)]),
        sum: phi(&[x.s(1.0), v.s(g_xv)], &[u.s(g_xv)]),
    }
}

impl HkTerms {
    pub(crate) fn compute(
        ch: &ChannelParams,
        p: &HkSchemeParams,
        rule: &FixedRule,
        mut shape: impl FnMut(f64) -> Result<Arc<Vec<f64>>>,
    ) -> Result<HkTerms> {
        let x1 = segment_powers(ch.p1, p.alpha, p.lambda);
        let x2 = segment_powers(ch.p2, p.beta, p.lambda);
        let mut comp = |scale: f64, rho: f64| -> Result<Component> { Ok(Component { scale, shape: shape(rho)? }) };
        let mode1 = if p.lambda > 0.0 {
            let x = comp(x1.first, p.rho_x1)?;
            let u = comp(p.xi2 * x2.first, p.rho_u2)?;
            let v = comp((1.0 - p.xi2) * x2.first, p.rho_v2)?;
            mode_terms(&x, &u, &v, ch.a12, ch.a21, rule)
        } else {
            ModeTerms::default()
        };
        let mode2 = if p.lambda < 1.0 {
            let x = comp(x2.second, p.rho_x2)?;
            let u = comp(p.xi1 * x1.second, p.rho_u1)?;
            let v = comp((1.0 - p.xi1) * x1.second, p.rho_v1)?;
            mode_terms(&x, &u, &v, ch.a21, ch.a12, rule)
        } else {
            ModeTerms::default()
        };
        Ok(HkTerms { lambda: p.lambda, mode1, mode2 })
    }

    /// Corner of the successive-cancellation rectangle.
    pub(crate) fn successive(&self) -> (f64, f64) {
        let (l, lb) = (self.lambda, 1.0 - self.lambda);
        let r1 = l * self.mode1.own + lb * self.mode2.successive_split();
        let r2 = lb * self.mode2.own + l * self.mode1.successive_split();
        (r1, r2)
    }

    /// Simultaneous-decoding pentagon.
    pub(crate) fn simultaneous(&self, weighting: ModeWeighting) -> Pentagon {
        let (l, lb) = (self.lambda, 1.0 - self.lambda);
        let w2 = match weighting {
            ModeWeighting::Derivation => l,
            ModeWeighting::AsPrinted => lb,
        };
        Pentagon {
            r1_max: l * self.mode1.own + lb * self.mode2.simultaneous_split(),
            r2_max: lb * self.mode2.own + w2 * self.mode1.simultaneous_split(),
            r_sum: l * (self.mode1.sum + self.mode1.private) + lb * (self.mode2.sum + self.mode2.private),
        }
    }
}

fn terms(ch: &ChannelParams, p: &HkSchemeParams, rule: &FixedRule) -> Result<HkTerms> {
    HkTerms::compute(ch, p, rule, |r| Ok(Arc::new(unit_shape(&[r], &[], rule)?)))
}

/// Successive-cancellation decoding: the achievable rectangle's corner.
pub fn theorem4_rates(ch: &ChannelParams, p: &HkSchemeParams, rule: &FixedRule) -> Result<RatePair> {
    let (r1, r2) = terms(ch, p, rule)?.successive();
    Ok(RatePair::clamped(r1, r2, Provenance::new(SchemeId::HkSc, p.flat())))
}

/// Simultaneous decoding: bounds on `R1`, `R2` and `R1 + R2`.
pub fn theorem5_rates(
    ch: &ChannelParams,
    p: &HkSchemeParams,
    rule: &FixedRule,
    weighting: ModeWeighting,
) -> Result<Pentagon> {
    Ok(terms(ch, p, rule)?.simultaneous(weighting))
}

/// Convex hull of the union of both decoders' regions over the given
/// parameter points.
pub fn corollary_region_points(
    ch: &ChannelParams,
    points: &[HkSchemeParams],
    rule: &FixedRule,
    weighting: ModeWeighting,
) -> Result<Frontier> {
    if points.is_empty() {
        return Err(Error::Empty("parameter list"));
    }
    let mut out = Vec::with_capacity(3 * points.len());
    for (i, p) in points.iter().enumerate() {
        let t = terms(ch, p, rule)?;
        let (r1, r2) = t.successive();
        let [a, b] = t.simultaneous(weighting).corners();
        for (vertex, (r1, r2)) in [(r1, r2), a, b].into_iter().enumerate() {
            let prov =
                Provenance { scheme: SchemeId::HkCorollary, params: p.flat(), vertex: vertex as u8, seq: i as u64 };
            out.push(RatePair::clamped(r1, r2, prov));
        }
    }
    Frontier::from_points(out).convex_hull()
}
