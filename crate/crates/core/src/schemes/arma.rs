use crate::error::{Error, Result};
use crate::model::{ChannelParams, Provenance, RatePair, SchemeId};
use crate::quadrature::FixedRule;
use crate::spectra::{ar_is_stable, Spectrum};

use super::{segment_powers, unit_shape, SasonParams};

/// AR and MA coefficients of one codebook filter, `1 − Σκ z^l` over
/// `1 − Σρ z^l`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ArmaFilter {
    pub ar: Vec<f64>,
    pub ma: Vec<f64>,
}

impl ArmaFilter {
    pub fn new(ar: Vec<f64>, ma: Vec<f64>) -> Self {
        ArmaFilter { ar, ma }
    }

    pub fn first_order(rho: f64, kappa: f64) -> Self {
        ArmaFilter { ar: vec![rho], ma: vec![kappa] }
    }

    pub fn white() -> Self {
        ArmaFilter::default()
    }

    fn validate(&self) -> Result<()> {
        if self.ar.iter().chain(&self.ma).any(|c| !c.is_finite()) {
            return Err(Error::InvalidArgument("filter coefficients must be finite".into()));
        }
        if !ar_is_stable(&self.ar) {
            return Err(Error::UnstableFilter);
        }
        Ok(())
    }
}

/// Time-sharing parameters plus one filter per (user, segment) slot, in the
/// order user1/seg1, user2/seg1, user1/seg2, user2/seg2.
#[derive(Debug, Clone, PartialEq)]
pub struct ArmaSchemeParams {
    base: SasonParams,
    filters: [ArmaFilter; 4],
    split: bool,
}

impl ArmaSchemeParams {
    /// Each user keeps one filter across both segments.
    pub fn tied(base: SasonParams, user1: ArmaFilter, user2: ArmaFilter) -> Result<Self> {
        user1.validate()?;
        user2.validate()?;
        Ok(ArmaSchemeParams { base, filters: [user1.clone(), user2.clone(), user1, user2], split: false })
    }

    /// Independent filters per segment.
    pub fn split(base: SasonParams, filters: [ArmaFilter; 4]) -> Result<Self> {
        for f in &filters {
            f.validate()?;
        }
        Ok(ArmaSchemeParams { base, filters, split: true })
    }

    pub fn base(&self) -> &SasonParams {
        &self.base
    }

    pub fn filters(&self) -> &[ArmaFilter; 4] {
        &self.filters
    }

    pub fn is_split(&self) -> bool {
        self.split
    }

    /// Flat encoding; only meaningful for first-order filters.
    fn flat(&self) -> Vec<f64> {
        let c = |v: &[f64]| v.first().copied().unwrap_or(0.0);
        let mut out = self.base.flat();
        if self.split {
            for f in &self.filters {
                out.push(c(&f.ar));
                out.push(c(&f.ma));
            }
        } else {
            out.extend([
                c(&self.filters[0].ar),
                c(&self.filters[1].ar),
                c(&self.filters[0].ma),
                c(&self.filters[1].ma),
            ]);
        }
        out
    }

    /// Parameters of the user-swapped channel that produce the swapped rates.
    pub fn swapped(&self) -> Self {
        let f = &self.filters;
        ArmaSchemeParams {
            base: self.base.swapped(),
            filters: [f[3].clone(), f[2].clone(), f[1].clone(), f[0].clone()],
            split: self.split,
        }
    }
}

/// Per-symbol variances of the four slots: `αP1/λ`, `βP2/λ`, `ᾱP1/λ̄`,
/// `β̄P2/λ̄`.
pub fn slot_powers(ch: &ChannelParams, p: &SasonParams) -> [f64; 4] {
    let x1 = segment_powers(ch.p1, p.alpha, p.lambda);
    let x2 = segment_powers(ch.p2, p.beta, p.lambda);
    [x1.first, x2.first, x1.second, x2.second]
}

/// Core of the memory-bearing two-mode region. `shapes` are unit-power
/// densities sampled on the rule, in slot order.
pub(crate) fn two_mode_rates(ch: &ChannelParams, p: &SasonParams, shapes: [&[f64]; 4], rule: &FixedRule) -> (f64, f64) {
    let [c11, c21, c12, c22] = slot_powers(ch, p);
    let [s11, s21, s12, s22] = shapes;
    let (lambda, lbar) = (p.lambda, 1.0 - p.lambda);
    let mut r1 = 0.0;
    let mut r2 = 0.0;
    if lambda > 0.0 {
        // receiver 1 decodes user 2 first, then its own codeword
        r1 += lambda * rule.phi_sinr(&[(c11, s11)], &[]);
        let at_rx1 = rule.phi_sinr(&[(ch.a12 * c21, s21)], &[(c11, s11)]);
        let at_rx2 = rule.phi_sinr(&[(c21, s21)], &[(ch.a21 * c11, s11)]);
        r2 += lambda * at_rx1.min(at_rx2);
    }
    if lbar > 0.0 {
        r2 += lbar * rule.phi_sinr(&[(c22, s22)], &[]);
        let at_rx1 = rule.phi_sinr(&[(c12, s12)], &[(ch.a12 * c22, s22)]);
        let at_rx2 = rule.phi_sinr(&[(ch.a21 * c12, s12)], &[(c22, s22)]);
        r1 += lbar * at_rx1.min(at_rx2);
    }
    (r1, r2)
}

/// General-spectra region for caller-supplied spectral shapes. The shapes'
/// own powers are ignored; each slot is rescaled to the power the time-sharing
/// parameters assign to it.
pub fn theorem2_rates(
    ch: &ChannelParams,
    p: &SasonParams,
    shapes: &[Spectrum; 4],
    rule: &FixedRule,
) -> Result<RatePair> {
    let sampled: Vec<Vec<f64>> =
        shapes.iter().map(|s| Ok(s.with_power(1.0)?.sample(rule.nodes()))).collect::<Result<_>>()?;
    let (r1, r2) = two_mode_rates(ch, p, [&sampled[0], &sampled[1], &sampled[2], &sampled[3]], rule);
    let mut flat = p.flat();
    for s in shapes {
        if let Spectrum::Cosine(c) = s {
            flat.extend_from_slice(c.coeffs());
        }
    }
    Ok(RatePair::clamped(r1, r2, Provenance::new(SchemeId::Theorem2, flat)))
}

/// As [`theorem2_rates`], but the slots must already carry the powers the
/// parameters assign to them.
pub fn theorem2_rates_checked(
    ch: &ChannelParams,
    p: &SasonParams,
    spectra: &[Spectrum; 4],
    rule: &FixedRule,
) -> Result<RatePair> {
    let expected = slot_powers(ch, p);
    for (slot, (s, &want)) in spectra.iter().zip(&expected).enumerate() {
        if (s.power() - want).abs() > 1e-12 * want.max(1.0) {
            return Err(Error::PowerMismatch { slot, expected: want, got: s.power() });
        }
    }
    theorem2_rates(ch, p, spectra, rule)
}

/// ARMA-codebook region: every slot's density is its filter's rational
/// spectrum scaled to the slot power. Filters of any order are accepted.
pub fn theorem3_rates(ch: &ChannelParams, p: &ArmaSchemeParams, rule: &FixedRule) -> Result<RatePair> {
    let shapes: Vec<Vec<f64>> = p.filters.iter().map(|f| unit_shape(&f.ar, &f.ma, rule)).collect::<Result<_>>()?;
    let (r1, r2) = two_mode_rates(ch, &p.base, [&shapes[0], &shapes[1], &shapes[2], &shapes[3]], rule);
    let scheme = if p.split { SchemeId::ArmaSplit } else { SchemeId::Arma };
    Ok(RatePair::clamped(r1, r2, Provenance::new(scheme, p.flat())))
}
