use crate::error::{Error, Result};
use crate::model::{eta_unchecked, ChannelParams, Provenance, RatePair, SchemeId};

use super::segment_powers;

/// Power fractions `α`, `β` spent in the first segment and the first
/// segment's time share `λ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SasonParams {
    pub alpha: f64,
    pub beta: f64,
    pub lambda: f64,
}

impl SasonParams {
    pub fn new(alpha: f64, beta: f64, lambda: f64) -> Result<Self> {
        for (name, v) in [("alpha", alpha), ("beta", beta), ("lambda", lambda)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidArgument(format!("{name} must lie in [0, 1], got {v}")));
            }
        }
        Ok(SasonParams { alpha, beta, lambda })
    }

    pub fn flat(&self) -> Vec<f64> {
        vec![self.alpha, self.beta, self.lambda]
    }

    /// Parameters of the user-swapped channel that produce the swapped rates.
    pub fn swapped(&self) -> Self {
        SasonParams { alpha: 1.0 - self.beta, beta: 1.0 - self.alpha, lambda: 1.0 - self.lambda }
    }
}

/// i.i.d. Gaussian codebooks, two-mode time sharing.
///
/// ```text
/// R1 = λ·η(αP1/λ) + λ̄·min{η(ᾱP1/(λ̄ + a12β̄P2)), η(a21ᾱP1/(λ̄ + β̄P2))}
/// R2 = λ̄·η(β̄P2/λ̄) + λ·min{η(βP2/(λ + a21αP1)), η(a12βP2/(λ + αP1))}
/// ```
///
/// Written here with per-segment variances, which is the same thing after
/// dividing numerator and denominator by the segment length. A vanished
/// segment contributes nothing.
pub fn sason_rates(ch: &ChannelParams, p: &SasonParams) -> RatePair {
    let (lambda, lbar) = (p.lambda, 1.0 - p.lambda);
    let x1 = segment_powers(ch.p1, p.alpha, lambda);
    let x2 = segment_powers(ch.p2, p.beta, lambda);

    let mut r1 = 0.0;
    let mut r2 = 0.0;
    if lambda > 0.0 {
        r1 += lambda * eta_unchecked(x1.first);
        r2 += lambda
            * eta_unchecked(x2.first / (1.0 + ch.a21 * x1.first))
                .min(eta_unchecked(ch.a12 * x2.first / (1.0 + x1.first)));
    }
    if lbar > 0.0 {
        r2 += lbar * eta_unchecked(x2.second);
        r1 += lbar
            * eta_unchecked(x1.second / (1.0 + ch.a12 * x2.second))
                .min(eta_unchecked(ch.a21 * x1.second / (1.0 + x2.second)));
    }
    RatePair::clamped(r1, r2, Provenance::new(SchemeId::Sason, p.flat()))
}
