use std::f64::consts::LN_2;

use crate::error::{Error, Result};
use crate::model::ChannelParams;

/// Covariance matrix of a finite collection of jointly Gaussian scalars.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianVector {
    n: usize,
    cov: Vec<f64>,
}

const SYMMETRY_TOL: f64 = 1e-12;
const PIVOT_TOL: f64 = 1e-12;

impl GaussianVector {
    /// Row-major `n × n` covariance. Must be symmetric; positive
    /// semidefiniteness is checked lazily when conditioning.
    pub fn new(n: usize, cov: Vec<f64>) -> Result<Self> {
        if cov.len() != n * n {
            return Err(Error::DimensionMismatch(format!("covariance needs {} entries, got {}", n * n, cov.len())));
        }
        if cov.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("covariance entries must be finite".into()));
        }
        let scale = (0..n).map(|i| cov[i * n + i].abs()).fold(1.0, f64::max);
        for i in 0..n {
            for j in 0..i {
                if (cov[i * n + j] - cov[j * n + i]).abs() > SYMMETRY_TOL * scale {
                    return Err(Error::InvalidArgument(format!("covariance not symmetric at ({i}, {j})")));
                }
            }
        }
        Ok(GaussianVector { n, cov })
    }

    /// Variables `y_i = Σ_s mix[i][s]·w_s` of independent zero-mean sources
    /// with variances `var`.
    pub fn from_sources(mix: &[Vec<f64>], var: &[f64]) -> Result<Self> {
        if var.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidArgument("source variances must be finite and nonnegative".into()));
        }
        if let Some(row) = mix.iter().find(|r| r.len() != var.len()) {
            return Err(Error::DimensionMismatch(format!(
                "mixing row has {} entries, expected {}",
                row.len(),
                var.len()
            )));
        }
        let n = mix.len();
        let mut cov = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                cov[i * n + j] = (0..var.len()).map(|s| mix[i][s] * mix[j][s] * var[s]).sum();
            }
        }
        GaussianVector::new(n, cov)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn cov(&self, i: usize, j: usize) -> f64 {
        self.cov[i * self.n + j]
    }

    /// Natural-log determinant of the covariance of `output` given
    /// `condition`. Deterministic conditioning variables are skipped.
    fn conditional_logdet(&self, output: &[usize], condition: &[usize]) -> Result<f64> {
        let idx: Vec<usize> = condition.iter().chain(output).copied().collect();
        let m = idx.len();
        let mut a: Vec<f64> = Vec::with_capacity(m * m);
        for &i in &idx {
            for &j in &idx {
                a.push(self.cov(i, j));
            }
        }
        let scale = (0..m).map(|k| a[k * m + k].abs()).fold(1.0, f64::max);
        let tol = PIVOT_TOL * scale;
        let mut logdet = 0.0;
        for k in 0..m {
            let d = a[k * m + k];
            if d < -tol {
                return Err(Error::NotPsd(d));
            }
            let in_output = k >= condition.len();
            if d <= tol {
                if in_output {
                    return Err(Error::InvalidArgument("output covariance is singular".into()));
                }
                continue;
            }
            if in_output {
                logdet += d.ln();
            }
            for i in k + 1..m {
                let f = a[i * m + k] / d;
                if f == 0.0 {
                    continue;
                }
                for j in k + 1..m {
                    a[i * m + j] -= f * a[k * m + j];
                }
            }
        }
        Ok(logdet)
    }
}

/// `I(target; output | condition)` in bits for jointly Gaussian variables,
/// `½·log2(det Σ_{output|condition} / det Σ_{output|target,condition})`.
pub fn gaussian_mi(target: &[usize], output: &[usize], condition: &[usize], g: &GaussianVector) -> Result<f64> {
    if target.iter().chain(output).chain(condition).any(|&i| i >= g.dim()) {
        return Err(Error::DimensionMismatch(format!("variable index out of range for dimension {}", g.dim())));
    }
    if output.is_empty() {
        return Ok(0.0);
    }
    let outer = g.conditional_logdet(output, condition)?;
    let both: Vec<usize> = condition.iter().chain(target).copied().collect();
    let inner = g.conditional_logdet(output, &both)?;
    Ok((0.5 * (outer - inner) / LN_2).max(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HkBaselineParams {
    /// Private power fractions.
    pub xi1: f64,
    pub xi2: f64,
}

impl HkBaselineParams {
    pub fn new(xi1: f64, xi2: f64) -> Result<Self> {
        for (name, v) in [("xi1", xi1), ("xi2", xi2)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidArgument(format!("{name} must lie in [0, 1], got {v}")));
            }
        }
        Ok(HkBaselineParams { xi1, xi2 })
    }
}

/// Joint law of the private parts `U1, U2`, common parts `V1, V2` and
/// channel outputs `Y1, Y2`.
#[derive(Debug, Clone)]
pub struct HkGaussianModel {
    joint: GaussianVector,
}

impl HkGaussianModel {
    pub const U1: usize = 0;
    pub const V1: usize = 1;
    pub const U2: usize = 2;
    pub const V2: usize = 3;
    pub const Y1: usize = 4;
    pub const Y2: usize = 5;

    pub fn new(ch: &ChannelParams, p: &HkBaselineParams) -> Result<Self> {
        let (g12, g21) = (ch.a12.sqrt(), ch.a21.sqrt());
        // sources: U1, V1, U2, V2, Z1, Z2
        let var = [p.xi1 * ch.p1, (1.0 - p.xi1) * ch.p1, p.xi2 * ch.p2, (1.0 - p.xi2) * ch.p2, 1.0, 1.0];
        let mix = vec![
            vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0, 0.0, 0.0, 0.0],
            vec![0.0, 0.0, 1.0, 0.0, 0.0, 0.0],
            vec![0.0, 0.0, 0.0, 1.0, 0.0, 0.0],
            vec![1.0, 1.0, g12, g12, 1.0, 0.0],
            vec![g21, g21, 1.0, 1.0, 0.0, 1.0],
        ];
        Ok(HkGaussianModel { joint: GaussianVector::from_sources(&mix, &var)? })
    }

    pub fn joint(&self) -> &GaussianVector {
        &self.joint
    }

    /// `I(target; y | condition)`.
    pub fn mi(&self, y: usize, target: &[usize], condition: &[usize]) -> Result<f64> {
        gaussian_mi(target, &[y], condition, &self.joint)
    }
}

/// The five linear bounds of the Han–Kobayashi region for one Gaussian split.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HkBounds {
    pub rho1: f64,
    pub rho2: f64,
    pub rho12: f64,
    pub rho10: f64,
    pub rho20: f64,
}

impl HkBounds {
    /// `(a, b, c)` triples meaning `a·R1 + b·R2 ≤ c`.
    pub fn constraints(&self) -> Vec<(f64, f64, f64)> {
        vec![
            (1.0, 0.0, self.rho1),
            (0.0, 1.0, self.rho2),
            (1.0, 1.0, self.rho12),
            (2.0, 1.0, self.rho10),
            (1.0, 2.0, self.rho20),
        ]
    }

    pub fn contains(&self, r1: f64, r2: f64, tol: f64) -> bool {
        r1 >= -tol && r2 >= -tol && self.constraints().iter().all(|&(a, b, c)| a * r1 + b * r2 <= c + tol)
    }
}

fn pos(x: f64) -> f64 {
    x.max(0.0)
}

/// Region bounds for the Gaussian private/common split with a constant
/// time-sharing variable.
pub fn hk_baseline_region(ch: &ChannelParams, p: &HkBaselineParams) -> Result<HkBounds> {
    use HkGaussianModel as M;
    let m = HkGaussianModel::new(ch, p)?;
    let i = |y: usize, t: &[usize], c: &[usize]| m.mi(y, t, c);

    let u1 = i(M::Y1, &[M::U1], &[M::V1, M::V2])?;
    let u2 = i(M::Y2, &[M::U2], &[M::V1, M::V2])?;

    let y1_v1_g_v2 = i(M::Y1, &[M::V1], &[M::V2])?;
    let y1_v2_g_v1 = i(M::Y1, &[M::V2], &[M::V1])?;
    let y2_v1_g_v2 = i(M::Y2, &[M::V1], &[M::V2])?;
    let y2_v2_g_v1 = i(M::Y2, &[M::V2], &[M::V1])?;
    let y1_v1 = i(M::Y1, &[M::V1], &[])?;
    let y2_v2 = i(M::Y2, &[M::V2], &[])?;
    let y1_v12 = i(M::Y1, &[M::V1, M::V2], &[])?;
    let y2_v12 = i(M::Y2, &[M::V1, M::V2], &[])?;

    let s1 = y1_v1_g_v2.min(i(M::Y2, &[M::V1], &[M::U2, M::V2])?);
    let s2 = y2_v2_g_v1.min(i(M::Y1, &[M::V2], &[M::U1, M::V1])?);
    let s12 = y1_v12.min(y2_v12).min(y1_v1_g_v2 + y2_v2_g_v1).min(y2_v1_g_v2 + y1_v2_g_v1);

    let rho10 = 2.0 * s1 + 2.0 * u1 + u2 - pos(s1 - y2_v1_g_v2)
        + y2_v2_g_v1.min(y2_v2 + pos(y2_v1_g_v2 - s1)).min(y1_v2_g_v1).min(y1_v12 - s1);
    let rho20 = 2.0 * s2 + u1 + 2.0 * u2 - pos(s2 - y1_v2_g_v1)
        + y1_v1_g_v2.min(y1_v1 + pos(y1_v2_g_v1 - s2)).min(y2_v1_g_v2).min(y2_v12 - s2);

    Ok(HkBounds { rho1: s1 + u1, rho2: s2 + u2, rho12: s12 + u1 + u2, rho10, rho20 })
}
