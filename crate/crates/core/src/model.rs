//! Channel and rate types shared by every other module.
//!
//! The channel is held in standard form: unit-variance noise at both
//! receivers, linear transmit powers `p1`, `p2` and linear cross gains
//! `a12` (user 2 into receiver 1) and `a21` (user 1 into receiver 2).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Standard-form two-user Gaussian interference channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    pub p1: f64,
    pub p2: f64,
    pub a12: f64,
    pub a21: f64,
}

impl ChannelParams {
    /// Validates and builds a channel. Powers must be positive, gains
    /// non-negative, everything finite.
    pub fn new(p1: f64, p2: f64, a12: f64, a21: f64) -> Result<Self> {
        for (name, v) in [("p1", p1), ("p2", p2), ("a12", a12), ("a21", a21)] {
            if !v.is_finite() {
                return Err(Error::InvalidChannel(format!("{name} is not finite")));
            }
        }
        if p1 <= 0.0 || p2 <= 0.0 {
            return Err(Error::InvalidChannel(format!("powers must be positive (p1 = {p1}, p2 = {p2})")));
        }
        if a12 < 0.0 || a21 < 0.0 {
            return Err(Error::InvalidChannel(format!("cross gains must be non-negative (a12 = {a12}, a21 = {a21})")));
        }
        Ok(ChannelParams { p1, p2, a12, a21 })
    }

    /// The same channel with the roles of the two users exchanged.
    pub fn swapped(&self) -> Self {
        ChannelParams { p1: self.p2, p2: self.p1, a12: self.a21, a21: self.a12 }
    }
}

/// `validate_channel` under its operational name.
pub fn validate_channel(p1: f64, p2: f64, a12: f64, a21: f64) -> Result<ChannelParams> {
    ChannelParams::new(p1, p2, a12, a21)
}

/// `0.5 * log2(1 + x)`, the rate of a scalar Gaussian channel at SNR `x`.
pub fn eta(x: f64) -> Result<f64> {
    if !x.is_finite() || x < 0.0 {
        return Err(Error::InvalidArgument(format!("eta requires a finite x >= 0, got {x}")));
    }
    Ok(eta_unchecked(x))
}

#[inline]
pub(crate) fn eta_unchecked(x: f64) -> f64 {
    0.5 * x.ln_1p() / std::f64::consts::LN_2
}

/// Identifies the coding scheme a rate pair came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeId {
    /// i.i.d. Gaussian codebooks with two-mode time sharing.
    Sason,
    /// General stationary spectra, truncated cosine-series parameterization.
    Theorem2,
    /// First-order ARMA codebooks, one filter per user.
    Arma,
    /// First-order ARMA codebooks, one filter per user and per segment.
    ArmaSplit,
    /// Rate splitting with successive cancellation decoding.
    HkSc,
    /// Rate splitting with simultaneous decoding.
    HkSim,
    /// Convex hull of the two rate-splitting regions.
    HkCorollary,
    /// Han–Kobayashi region with the common Gaussian U/V split.
    HkBaseline,
}

impl SchemeId {
    pub const ALL: [SchemeId; 8] = [
        SchemeId::Sason,
        SchemeId::Theorem2,
        SchemeId::Arma,
        SchemeId::ArmaSplit,
        SchemeId::HkSc,
        SchemeId::HkSim,
        SchemeId::HkCorollary,
        SchemeId::HkBaseline,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            SchemeId::Sason => "sason",
            SchemeId::Theorem2 => "theorem2",
            SchemeId::Arma => "arma",
            SchemeId::ArmaSplit => "arma-split",
            SchemeId::HkSc => "hk-sc",
            SchemeId::HkSim => "hk-sim",
            SchemeId::HkCorollary => "hk-corollary",
            SchemeId::HkBaseline => "hk-baseline",
        }
    }
}

impl fmt::Display for SchemeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SchemeId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SchemeId::ALL
            .iter()
            .copied()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| Error::Parse(format!("unknown scheme '{s}'")))
    }
}

/// Where a rate pair came from: the scheme, its flat parameter vector (in the
/// order of [`crate::schemes::param_names`]), which vertex of the per-point
/// region it is, and the evaluation sequence number used for tie-breaking.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub scheme: SchemeId,
    pub params: Vec<f64>,
    pub vertex: u8,
    pub seq: u64,
}

impl Provenance {
    pub fn new(scheme: SchemeId, params: Vec<f64>) -> Self {
        Provenance { scheme, params, vertex: 0, seq: 0 }
    }
}

/// An achievable rate pair in bits per channel use.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatePair {
    pub r1: f64,
    pub r2: f64,
    pub provenance: Provenance,
}

impl RatePair {
    pub fn new(r1: f64, r2: f64, provenance: Provenance) -> Result<Self> {
        if !(r1.is_finite() && r2.is_finite()) || r1 < 0.0 || r2 < 0.0 {
            return Err(Error::InvalidArgument(format!("rates must be finite and non-negative, got ({r1}, {r2})")));
        }
        Ok(RatePair { r1, r2, provenance })
    }

    /// Builds a pair from rates that are non-negative up to round-off.
    pub(crate) fn clamped(r1: f64, r2: f64, provenance: Provenance) -> Self {
        debug_assert!(r1.is_finite() && r2.is_finite(), "non-finite rate ({r1}, {r2})");
        RatePair { r1: r1.max(0.0), r2: r2.max(0.0), provenance }
    }

    /// A pair with an empty provenance; handy for tests and CSV input.
    pub fn bare(r1: f64, r2: f64) -> Self {
        RatePair { r1, r2, provenance: Provenance::new(SchemeId::Sason, Vec::new()) }
    }
}
