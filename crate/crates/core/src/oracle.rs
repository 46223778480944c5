//! Finite-blocklength cross-check of the spectral rate formulas.
//!
//! For `n` consecutive samples of stationary Gaussian inputs the normalized
//! mutual informations are log-determinants of Toeplitz matrices, e.g.
//! `I(X1;Y1|X2)/n = log2 det(I + R1) / 2n`. As `n` grows these converge to
//! the `phi` integrals the schemes use. This module computes both sides.

use std::f64::consts::{LN_2, PI};
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::ChannelParams;
use crate::quadrature::{phi, QuadratureConfig};
use crate::spectra::ArmaSpectrum;

/// Frequency grid of the numerical inverse transform.
pub const AUTOCOV_GRID: usize = 1 << 16;
/// Largest blocklength the oracle accepts.
pub const MAX_BLOCKLENGTH: usize = AUTOCOV_GRID / 2;
/// Errors below this never count as a failure to converge.
pub const CONVERGENCE_FLOOR: f64 = 1e-12;

/// Which mutual information to check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Term {
    /// `I(X1; Y1 | X2)`, limit `phi(S1)`.
    Cond,
    /// `I(X2; Y1)`, limit `phi(a12·S2 / (1 + S1))`.
    Interference,
    /// `I(X2; Y2)`, limit `phi(S2 / (1 + a21·S1))`.
    Direct,
}

impl Term {
    pub const ALL: [Term; 3] = [Term::Cond, Term::Interference, Term::Direct];

    pub fn as_str(&self) -> &'static str {
        match self {
            Term::Cond => "cond",
            Term::Interference => "interference",
            Term::Direct => "direct",
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Term {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Term::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| Error::Parse(format!("unknown term '{s}' (expected cond, interference or direct)")))
    }
}

/// Autocovariance `r[0..lags]` of the process with this spectrum, by
/// inverse FFT of the density on [`AUTOCOV_GRID`] points.
pub fn autocovariance(spec: &ArmaSpectrum, lags: usize) -> Result<Vec<f64>> {
    if lags > MAX_BLOCKLENGTH {
        return Err(Error::DimensionMismatch(format!("at most {MAX_BLOCKLENGTH} lags, got {lags}")));
    }
    if spec.is_white() {
        let mut r = vec![0.0; lags];
        if let Some(r0) = r.first_mut() {
            *r0 = spec.power();
        }
        return Ok(r);
    }
    let n = AUTOCOV_GRID;
    let mut buf: Vec<Complex<f64>> =
        (0..n).map(|m| Complex::new(spec.density(2.0 * PI * m as f64 / n as f64), 0.0)).collect();
    FftPlanner::new().plan_fft_inverse(n).process(&mut buf);
    Ok(buf[..lags].iter().map(|c| c.re / n as f64).collect())
}

/// Covariance matrix of `n` consecutive samples of the stationary process.
pub fn arma_covariance(spec: &ArmaSpectrum, n: usize) -> Result<DMatrix<f64>> {
    if n == 0 {
        return Err(Error::InvalidArgument("blocklength must be positive".into()));
    }
    let r = autocovariance(spec, n)?;
    Ok(toeplitz(&r))
}

pub fn toeplitz(r: &[f64]) -> DMatrix<f64> {
    let n = r.len();
    DMatrix::from_fn(n, n, |i, j| r[i.abs_diff(j)])
}

/// `gain · A⁻¹BBᵀA⁻ᵀ` for the first-order recursion
/// `x_i − ρx_{i−1} = w_i − κw_{i−1}` started from rest. Rows far from the
/// start approach the stationary covariance.
pub fn recursion_covariance(rho: f64, kappa: f64, gain: f64, n: usize) -> Result<DMatrix<f64>> {
    if n == 0 {
        return Err(Error::InvalidArgument("blocklength must be positive".into()));
    }
    if rho.abs() >= 1.0 {
        return Err(Error::UnstableFilter);
    }
    let a = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            1.0
        } else if i == j + 1 {
            -rho
        } else {
            0.0
        }
    });
    let b = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            1.0
        } else if i == j + 1 {
            -kappa
        } else {
            0.0
        }
    });
    let m = a.solve_lower_triangular(&b).ok_or_else(|| Error::InvalidArgument("singular recursion".into()))?;
    Ok(&m * m.transpose() * gain)
}

/// Natural log-determinant of the symmetric positive definite Toeplitz
/// matrix with first column `r`, by Levinson–Durbin recursion.
pub fn toeplitz_logdet(r: &[f64]) -> Result<f64> {
    let n = r.len();
    if n == 0 {
        return Ok(0.0);
    }
    let mut err = r[0];
    if err <= 0.0 {
        return Err(Error::NotPsd(err));
    }
    let mut logdet = err.ln();
    let mut a: Vec<f64> = Vec::with_capacity(n);
    let mut prev: Vec<f64> = Vec::with_capacity(n);
    for k in 1..n {
        let acc: f64 = r[k] - a.iter().enumerate().map(|(i, ai)| ai * r[k - 1 - i]).sum::<f64>();
        let refl = acc / err;
        prev.clear();
        prev.extend_from_slice(&a);
        for i in 0..a.len() {
            a[i] -= refl * prev[a.len() - 1 - i];
        }
        a.push(refl);
        err *= 1.0 - refl * refl;
        if err <= 0.0 {
            return Err(Error::NotPsd(err));
        }
        logdet += err.ln();
    }
    Ok(logdet)
}

/// One log-determinant piece of a term: `log2 det(T_n)/2n` against its limit
/// `(1/4π)∫log2(symbol)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TermPiece {
    pub label: String,
    pub finite: f64,
    pub limit: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleReport {
    pub term: Term,
    pub n: usize,
    pub finite_rate: f64,
    pub limit_rate: f64,
    pub abs_error: f64,
    pub breakdown: Vec<TermPiece>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub reports: Vec<OracleReport>,
    /// False when the error at the largest `n` exceeds the error at the
    /// smallest one (and is above [`CONVERGENCE_FLOOR`]).
    pub converged: bool,
}

/// Both inputs' autocovariances and spectra, plus the channel gains. The
/// spectra carry their own powers; the channel's powers are not used.
#[derive(Debug, Clone)]
pub struct ToeplitzOracle {
    a12: f64,
    a21: f64,
    s1: ArmaSpectrum,
    s2: ArmaSpectrum,
    r1: Vec<f64>,
    r2: Vec<f64>,
    quad: QuadratureConfig,
}

/// Which Toeplitz symbol `1 + c1·S1 + c2·S2` a log-determinant uses.
#[derive(Debug, Clone, Copy)]
struct Symbol {
    c1: f64,
    c2: f64,
    label: &'static str,
}

impl ToeplitzOracle {
    pub fn new(ch: &ChannelParams, s1: ArmaSpectrum, s2: ArmaSpectrum) -> Result<Self> {
        let r1 = autocovariance(&s1, MAX_BLOCKLENGTH)?;
        let r2 = autocovariance(&s2, MAX_BLOCKLENGTH)?;
        Ok(ToeplitzOracle { a12: ch.a12, a21: ch.a21, s1, s2, r1, r2, quad: QuadratureConfig::adaptive(1e-13) })
    }

    fn pieces(&self, term: Term) -> (Symbol, Symbol) {
        let one = Symbol { c1: 0.0, c2: 0.0, label: "1" };
        match term {
            Term::Cond => (Symbol { c1: 1.0, c2: 0.0, label: "I+R1" }, one),
            Term::Interference => {
                (Symbol { c1: 1.0, c2: self.a12, label: "I+R1+a12*R2" }, Symbol { c1: 1.0, c2: 0.0, label: "I+R1" })
            }
            Term::Direct => (
                Symbol { c1: self.a21, c2: 1.0, label: "I+R2+a21*R1" },
                Symbol { c1: self.a21, c2: 0.0, label: "I+a21*R1" },
            ),
        }
    }

    fn finite_piece(&self, s: Symbol, n: usize) -> Result<f64> {
        if s.c1 == 0.0 && s.c2 == 0.0 {
            return Ok(0.0);
        }
        let col: Vec<f64> =
            (0..n).map(|k| if k == 0 { 1.0 } else { 0.0 } + s.c1 * self.r1[k] + s.c2 * self.r2[k]).collect();
        Ok(0.5 * toeplitz_logdet(&col)? / (n as f64 * LN_2))
    }

    fn limit_piece(&self, s: Symbol) -> Result<f64> {
        if s.c1 == 0.0 && s.c2 == 0.0 {
            return Ok(0.0);
        }
        phi(|w| s.c1 * self.s1.density(w) + s.c2 * self.s2.density(w), &self.quad)
    }

    /// Normalized mutual information at blocklength `n`, bits per use.
    pub fn finite_n_rate(&self, term: Term, n: usize) -> Result<f64> {
        check_n(n)?;
        let (a, b) = self.pieces(term);
        Ok(self.finite_piece(a, n)? - self.finite_piece(b, n)?)
    }

    /// The `n → ∞` limit as a `phi` integral.
    pub fn limit_rate(&self, term: Term) -> Result<f64> {
        let (a, b) = self.pieces(term);
        Ok(self.limit_piece(a)? - self.limit_piece(b)?)
    }

    pub fn report(&self, term: Term, n: usize) -> Result<OracleReport> {
        check_n(n)?;
        let (a, b) = self.pieces(term);
        let mut breakdown = Vec::new();
        for s in [a, b] {
            if s.c1 != 0.0 || s.c2 != 0.0 {
                breakdown.push(TermPiece {
                    label: s.label.to_string(),
                    finite: self.finite_piece(s, n)?,
                    limit: self.limit_piece(s)?,
                });
            }
        }
        let finite_rate = self.finite_n_rate(term, n)?;
        let limit_rate = self.limit_rate(term)?;
        Ok(OracleReport { term, n, finite_rate, limit_rate, abs_error: (finite_rate - limit_rate).abs(), breakdown })
    }

    pub fn convergence_report(&self, term: Term, n_list: &[usize]) -> Result<ConvergenceReport> {
        if n_list.is_empty() {
            return Err(Error::Empty("blocklength list"));
        }
        if n_list.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument("blocklengths must be strictly ascending".into()));
        }
        let reports: Vec<OracleReport> = n_list.iter().map(|&n| self.report(term, n)).collect::<Result<_>>()?;
        let first = reports.first().map_or(0.0, |r| r.abs_error);
        let last = reports.last().map_or(0.0, |r| r.abs_error);
        let converged = !(last > first && last > CONVERGENCE_FLOOR);
        Ok(ConvergenceReport { reports, converged })
    }

    pub fn spectra(&self) -> (&ArmaSpectrum, &ArmaSpectrum) {
        (&self.s1, &self.s2)
    }
}

fn check_n(n: usize) -> Result<()> {
    if n == 0 || n > MAX_BLOCKLENGTH {
        return Err(Error::DimensionMismatch(format!("blocklength must lie in 1..={MAX_BLOCKLENGTH}, got {n}")));
    }
    Ok(())
}

/// One-shot form of [`ToeplitzOracle::finite_n_rate`].
pub fn finite_n_rate(term: Term, ch: &ChannelParams, s1: &ArmaSpectrum, s2: &ArmaSpectrum, n: usize) -> Result<f64> {
    ToeplitzOracle::new(ch, s1.clone(), s2.clone())?.finite_n_rate(term, n)
}

/// One-shot form of [`ToeplitzOracle::convergence_report`].
pub fn convergence_report(
    ch: &ChannelParams,
    s1: &ArmaSpectrum,
    s2: &ArmaSpectrum,
    term: Term,
    n_list: &[usize],
) -> Result<ConvergenceReport> {
    ToeplitzOracle::new(ch, s1.clone(), s2.clone())?.convergence_report(term, n_list)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::eta;
    use crate::quadrature::closed_form_ar;
    use crate::spectra::make_arma;

    fn ch() -> ChannelParams {
        ChannelParams::new(6.0, 1.0, 2.0, 0.5).unwrap()
    }

    /// Stationary ARMA(1,1) autocovariance for innovation variance `g`.
    fn arma11_autocov(rho: f64, kappa: f64, g: f64, k: usize) -> f64 {
        let d = 1.0 - rho * rho;
        if k == 0 {
            g * (1.0 + kappa * kappa - 2.0 * rho * kappa) / d
        } else {
            g * (1.0 - rho * kappa) * (rho - kappa) / d * rho.powi(k as i32 - 1)
        }
    }

    #[test]
    fn white_covariance_is_scaled_identity() {
        let c = arma_covariance(&make_arma(&[], &[], 2.5).unwrap(), 3).unwrap();
        assert_eq!(c, DMatrix::identity(3, 3) * 2.5);
        assert!(arma_covariance(&make_arma(&[], &[], 1.0).unwrap(), 0).is_err());
    }

    #[test]
    fn ar_lag_one() {
        let c = arma_covariance(&make_arma(&[0.6], &[], 2.0).unwrap(), 2).unwrap();
        assert!((c[(0, 0)] - 2.0).abs() < 1e-9);
        assert!((c[(0, 1)] - 1.2).abs() < 1e-9);
    }

    #[test]
    fn arma_autocovariance_matches_closed_form() {
        let s = make_arma(&[0.7], &[0.3], 1.7).unwrap();
        let r = autocovariance(&s, 64).unwrap();
        for (k, v) in r.iter().enumerate() {
            assert!((v - arma11_autocov(0.7, 0.3, s.gain(), k)).abs() < 1e-8, "lag {k}");
        }
        assert!((r[0] - 1.7).abs() < 1e-9);
    }

    #[test]
    fn covariance_is_psd() {
        for (ar, ma) in [(vec![0.95], vec![-0.9]), (vec![0.5, -0.3], vec![0.2]), (vec![-0.8], vec![0.99])] {
            let c = arma_covariance(&make_arma(&ar, &ma, 3.0).unwrap(), 64).unwrap();
            let min = c.symmetric_eigenvalues().min();
            assert!(min >= -1e-10, "{min}");
        }
    }

    #[test]
    fn recursion_agrees_in_the_interior() {
        let (rho, kappa) = (0.7, 0.3);
        let s = make_arma(&[rho], &[kappa], 1.0).unwrap();
        let n = 160;
        let rec = recursion_covariance(rho, kappa, s.gain(), n).unwrap();
        let stat = arma_covariance(&s, n).unwrap();
        for i in 100..n {
            for j in 100..n {
                assert!((rec[(i, j)] - stat[(i, j)]).abs() < 1e-12);
            }
        }
        // the first sample has not reached the stationary variance
        assert!((rec[(0, 0)] - stat[(0, 0)]).abs() > 1e-3);
    }

    #[test]
    fn levinson_matches_cholesky() {
        for (ar, ma, p) in [(vec![0.9], vec![], 6.0), (vec![0.5, -0.3], vec![0.2, 0.1], 2.0), (vec![], vec![0.8], 1.0)]
        {
            let s = make_arma(&ar, &ma, p).unwrap();
            let mut r = autocovariance(&s, 48).unwrap();
            r[0] += 1.0;
            let chol = toeplitz(&r).cholesky().unwrap();
            let want: f64 = 2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>();
            assert!((toeplitz_logdet(&r).unwrap() - want).abs() < 1e-10);
        }
        assert!(toeplitz_logdet(&[1.0, 2.0]).is_err());
    }

    #[test]
    fn white_inputs_are_exact() {
        let o =
            ToeplitzOracle::new(&ch(), make_arma(&[], &[], 6.0).unwrap(), make_arma(&[], &[], 1.0).unwrap()).unwrap();
        for n in [1, 2, 7, 64, 513] {
            assert!((o.finite_n_rate(Term::Cond, n).unwrap() - eta(6.0).unwrap()).abs() < 1e-13);
            assert!((o.finite_n_rate(Term::Interference, n).unwrap() - eta(2.0 / 7.0).unwrap()).abs() < 1e-13);
            assert!((o.finite_n_rate(Term::Direct, n).unwrap() - eta(1.0 / 4.0).unwrap()).abs() < 1e-13);
        }
        let rep = o.convergence_report(Term::Interference, &[8, 64, 512]).unwrap();
        assert!(rep.converged && rep.reports.iter().all(|r| r.abs_error < 1e-12));
    }

    #[test]
    fn single_sample_has_no_memory() {
        let o = ToeplitzOracle::new(&ch(), make_arma(&[0.9], &[], 6.0).unwrap(), make_arma(&[], &[], 1.0).unwrap())
            .unwrap();
        assert!((o.finite_n_rate(Term::Cond, 1).unwrap() - eta(6.0).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn ar_converges_to_closed_form() {
        let s1 = make_arma(&[0.9], &[], 6.0).unwrap();
        let o = ToeplitzOracle::new(&ch(), s1, make_arma(&[], &[], 1.0).unwrap()).unwrap();
        let lim = closed_form_ar(0.9, 6.0).unwrap();
        assert!((o.limit_rate(Term::Cond).unwrap() - lim).abs() < 1e-10);
        assert!((o.finite_n_rate(Term::Cond, 1024).unwrap() - lim).abs() < 2e-2);
        let rep = o.convergence_report(Term::Cond, &[128, 512, 2048]).unwrap();
        assert!(rep.converged);
        assert!(rep.reports.windows(2).all(|w| w[1].abs_error < w[0].abs_error));
    }

    #[test]
    fn interference_term() {
        let o = ToeplitzOracle::new(&ch(), make_arma(&[0.5], &[], 6.0).unwrap(), make_arma(&[-0.5], &[], 1.0).unwrap())
            .unwrap();
        let rep = o.report(Term::Interference, 1024).unwrap();
        assert!(rep.abs_error <= 2e-2);
        assert_eq!(rep.breakdown.len(), 2);
        let direct = rep.breakdown[0].limit - rep.breakdown[1].limit;
        assert!((direct - rep.limit_rate).abs() < 1e-15);
    }

    #[test]
    fn argument_errors() {
        let o = ToeplitzOracle::new(&ch(), make_arma(&[0.5], &[], 1.0).unwrap(), make_arma(&[], &[], 1.0).unwrap())
            .unwrap();
        assert!(o.finite_n_rate(Term::Cond, 0).is_err());
        assert!(o.finite_n_rate(Term::Cond, MAX_BLOCKLENGTH + 1).is_err());
        assert!(o.convergence_report(Term::Cond, &[]).is_err());
        assert!(o.convergence_report(Term::Cond, &[64, 32]).is_err());
        assert_eq!("direct".parse::<Term>().unwrap(), Term::Direct);
        assert!("other".parse::<Term>().is_err());
    }
}
