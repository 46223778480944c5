//! Power-normalized spectral densities on `[0, 2π)`.
//!
//! Every spectrum owns its per-symbol power `P`, i.e. `(1/2π)∫S(ω)dω = P`.
//! Schemes apply their segment scalings (for instance `αP1/λ`) by asking for a
//! copy of a shape at a given power, see [`Spectrum::with_power`].

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Grid size of the non-negativity check for cosine-series spectra.
pub const COSINE_CHECK_POINTS: usize = 4096;
/// Rejection threshold of the non-negativity check.
pub const COSINE_CHECK_MARGIN: f64 = 1e-12;

/// Rational density `gain · |1 − Σκ_l e^{jlω}|² / |1 − Σρ_l e^{jlω}|²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmaSpectrum {
    ar: Vec<f64>,
    ma: Vec<f64>,
    power: f64,
    /// Variance of the unit-gain filter output, `(1/2π)∫|B|²/|A|²`.
    unit_variance: f64,
    gain: f64,
}

impl ArmaSpectrum {
    pub fn new(ar: &[f64], ma: &[f64], power: f64) -> Result<Self> {
        if !power.is_finite() || power < 0.0 {
            return Err(Error::InvalidArgument(format!("power must be finite and >= 0, got {power}")));
        }
        if ar.iter().chain(ma).any(|c| !c.is_finite()) {
            return Err(Error::InvalidArgument("filter coefficients must be finite".into()));
        }
        if !ar_is_stable(ar) {
            return Err(Error::UnstableFilter);
        }
        let unit_variance = unit_filter_variance(ar, ma);
        Ok(ArmaSpectrum { ar: ar.to_vec(), ma: ma.to_vec(), power, unit_variance, gain: power / unit_variance })
    }

    pub fn white(power: f64) -> Result<Self> {
        Self::new(&[], &[], power)
    }

    pub fn ar(&self) -> &[f64] {
        &self.ar
    }

    pub fn ma(&self) -> &[f64] {
        &self.ma
    }

    pub fn power(&self) -> f64 {
        self.power
    }

    /// The normalization `σ²·P` multiplying the rational part.
    pub fn gain(&self) -> f64 {
        self.gain
    }

    /// Innovation scale `σ²` that makes the process variance one.
    pub fn sigma2(&self) -> f64 {
        1.0 / self.unit_variance
    }

    pub fn with_power(&self, power: f64) -> Result<Self> {
        if !power.is_finite() || power < 0.0 {
            return Err(Error::InvalidArgument(format!("power must be finite and >= 0, got {power}")));
        }
        Ok(ArmaSpectrum { power, gain: power / self.unit_variance, ..self.clone() })
    }

    pub fn is_white(&self) -> bool {
        self.ar.iter().chain(&self.ma).all(|&c| c == 0.0)
    }

    pub fn density(&self, omega: f64) -> f64 {
        self.gain * rational_part(&self.ar, &self.ma, omega)
    }

    /// `|1 − Σκ_l e^{−jlω}| / |1 − Σρ_l e^{−jlω}|`, the unnormalized filter
    /// modulus.
    pub fn frequency_response_modulus(&self, omega: f64) -> f64 {
        rational_part(&self.ar, &self.ma, -omega).sqrt()
    }

    /// Largest modulus among AR and MA coefficients; a rough indicator of how
    /// peaked the density is.
    pub fn max_coefficient(&self) -> f64 {
        self.ar.iter().chain(&self.ma).fold(0.0f64, |m, c| m.max(c.abs()))
    }
}

/// `|1 − Σκ e^{jlω}|² / |1 − Σρ e^{jlω}|²`.
fn rational_part(ar: &[f64], ma: &[f64], omega: f64) -> f64 {
    poly_mod2(ma, omega) / poly_mod2(ar, omega)
}

/// `|1 − Σ c_l e^{jlω}|²`.
#[inline]
fn poly_mod2(coeffs: &[f64], omega: f64) -> f64 {
    match coeffs {
        [] => 1.0,
        [c] => 1.0 - 2.0 * c * omega.cos() + c * c,
        _ => {
            let (mut re, mut im) = (1.0, 0.0);
            for (l, c) in coeffs.iter().enumerate() {
                let (s, co) = ((l + 1) as f64 * omega).sin_cos();
                re -= c * co;
                im -= c * s;
            }
            re * re + im * im
        }
    }
}

/// Schur–Cohn step-down test: all roots of `1 − Σρ_l z^l` strictly outside
/// the unit circle.
pub fn ar_is_stable(ar: &[f64]) -> bool {
    // a(z) = 1 + a_1 z + ... + a_p z^p with a_l = -ρ_l
    let mut a: Vec<f64> = ar.iter().map(|r| -r).collect();
    while let Some(&k) = a.last() {
        if !(k.abs() < 1.0) {
            return false;
        }
        let p = a.len();
        let denom = 1.0 - k * k;
        let next: Vec<f64> = (0..p - 1).map(|i| (a[i] - k * a[p - 2 - i]) / denom).collect();
        a = next;
    }
    true
}

/// `(1/2π)∫|B|²/|A|² dω`. Closed form up to order (1,1), otherwise a
/// trapezoid rule doubled until it stops changing (the integrand is periodic
/// and analytic, so the rule converges geometrically).
fn unit_filter_variance(ar: &[f64], ma: &[f64]) -> f64 {
    match (ar, ma) {
        ([], []) => 1.0,
        ([], _) => 1.0 + ma.iter().map(|c| c * c).sum::<f64>(),
        ([r], []) => 1.0 / (1.0 - r * r),
        ([r], [k]) => (1.0 + k * k - 2.0 * k * r) / (1.0 - r * r),
        _ => periodic_mean(|w| rational_part(ar, ma, w), 1e-15),
    }
}

/// Mean of a smooth 2π-periodic function by trapezoid doubling.
pub(crate) fn periodic_mean(f: impl Fn(f64) -> f64, rel_tol: f64) -> f64 {
    let mut n = 64usize;
    let mut sum: f64 = (0..n).map(|m| f(2.0 * PI * m as f64 / n as f64)).sum();
    let mut mean = sum / n as f64;
    while n < (1 << 24) {
        // the new nodes sit halfway between the old ones
        let extra: f64 = (0..n).map(|m| f(2.0 * PI * (m as f64 + 0.5) / n as f64)).sum();
        sum += extra;
        n *= 2;
        let next = sum / n as f64;
        let done = (next - mean).abs() <= rel_tol * next.abs();
        mean = next;
        if done && n >= 256 {
            break;
        }
    }
    mean
}

/// Density `P · (1 + 2 Σ_k r_k cos(kω))`, with `r_0 = 1` implicit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CosineSeriesSpectrum {
    coeffs: Vec<f64>,
    power: f64,
}

impl CosineSeriesSpectrum {
    pub fn new(coeffs: &[f64], power: f64) -> Result<Self> {
        if !power.is_finite() || power < 0.0 {
            return Err(Error::InvalidArgument(format!("power must be finite and >= 0, got {power}")));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidArgument("cosine coefficients must be finite".into()));
        }
        for m in 0..=COSINE_CHECK_POINTS {
            let omega = 2.0 * PI * m as f64 / COSINE_CHECK_POINTS as f64;
            let v = cosine_shape(coeffs, omega);
            if v < -COSINE_CHECK_MARGIN {
                return Err(Error::NegativeDensity { omega, min: v });
            }
        }
        Ok(CosineSeriesSpectrum { coeffs: coeffs.to_vec(), power })
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn power(&self) -> f64 {
        self.power
    }

    pub fn with_power(&self, power: f64) -> Result<Self> {
        if !power.is_finite() || power < 0.0 {
            return Err(Error::InvalidArgument(format!("power must be finite and >= 0, got {power}")));
        }
        Ok(CosineSeriesSpectrum { coeffs: self.coeffs.clone(), power })
    }

    pub fn density(&self, omega: f64) -> f64 {
        // round-off can push the boundary-valid shapes a hair below zero
        (self.power * cosine_shape(&self.coeffs, omega)).max(0.0)
    }
}

fn cosine_shape(coeffs: &[f64], omega: f64) -> f64 {
    1.0 + 2.0 * coeffs.iter().enumerate().map(|(k, r)| r * ((k + 1) as f64 * omega).cos()).sum::<f64>()
}

/// Either parameterization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Spectrum {
    Arma(ArmaSpectrum),
    Cosine(CosineSeriesSpectrum),
}

impl Spectrum {
    pub fn density(&self, omega: f64) -> f64 {
        match self {
            Spectrum::Arma(s) => s.density(omega),
            Spectrum::Cosine(s) => s.density(omega),
        }
    }

    pub fn power(&self) -> f64 {
        match self {
            Spectrum::Arma(s) => s.power(),
            Spectrum::Cosine(s) => s.power(),
        }
    }

    pub fn with_power(&self, power: f64) -> Result<Self> {
        Ok(match self {
            Spectrum::Arma(s) => Spectrum::Arma(s.with_power(power)?),
            Spectrum::Cosine(s) => Spectrum::Cosine(s.with_power(power)?),
        })
    }

    pub fn frequency_response_modulus(&self, omega: f64) -> Result<f64> {
        match self {
            Spectrum::Arma(s) => Ok(s.frequency_response_modulus(omega)),
            Spectrum::Cosine(_) => Err(Error::NotArma),
        }
    }

    /// Density values at the given nodes.
    pub fn sample(&self, nodes: &[f64]) -> Vec<f64> {
        nodes.iter().map(|&w| self.density(w)).collect()
    }
}

impl From<ArmaSpectrum> for Spectrum {
    fn from(s: ArmaSpectrum) -> Self {
        Spectrum::Arma(s)
    }
}

impl From<CosineSeriesSpectrum> for Spectrum {
    fn from(s: CosineSeriesSpectrum) -> Self {
        Spectrum::Cosine(s)
    }
}

/// `make_arma` under its operational name.
pub fn make_arma(ar: &[f64], ma: &[f64], power: f64) -> Result<ArmaSpectrum> {
    ArmaSpectrum::new(ar, ma, power)
}

/// `make_cosine_series` under its operational name.
pub fn make_cosine_series(coeffs: &[f64], power: f64) -> Result<CosineSeriesSpectrum> {
    CosineSeriesSpectrum::new(coeffs, power)
}

/// `(ω, |H(ω)|)` on `points` uniformly spaced frequencies in `[0, 2π)`.
pub fn frequency_response_table(spectrum: &ArmaSpectrum, points: usize) -> Vec<(f64, f64)> {
    (0..points)
        .map(|m| {
            let omega = 2.0 * PI * m as f64 / points as f64;
            (omega, spectrum.frequency_response_modulus(omega))
        })
        .collect()
}
