//! The four recoverability features of a precision-register distribution.
//!
//! Two describe the histogram itself (residual comb structure, flatness) and
//! two describe the decoder's verified candidates (dominance, margin). None
//! of them uses the true order.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::decoder::{decode, DecodeResult};
use crate::error::{Error, Result};
use crate::numtheory::Instance;
use crate::spectrum::Spectrum;

/// `A(0)` below this is treated as a uniform input.
pub const FLAT_AUTOCORR_TOL: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub a_peak: f64,
    pub h_norm: f64,
    pub m1_frac: f64,
    pub margin_frac: f64,
}

impl FeatureVector {
    /// Canonical order: `A_peak`, `H_norm`, `M1_frac`, `margin_frac`.
    pub fn to_array(&self) -> [f64; 4] {
        [self.a_peak, self.h_norm, self.m1_frac, self.margin_frac]
    }

    pub fn get(&self, f: Feature) -> f64 {
        self.to_array()[f.index()]
    }
}

/// Feature identifiers in canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Feature {
    APeak,
    HNorm,
    M1Frac,
    MarginFrac,
}

impl Feature {
    pub const ALL: [Feature; 4] = [
        Feature::APeak,
        Feature::HNorm,
        Feature::M1Frac,
        Feature::MarginFrac,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Feature> {
        Feature::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Feature::APeak => "a_peak",
            Feature::HNorm => "h_norm",
            Feature::M1Frac => "m1_frac",
            Feature::MarginFrac => "margin_frac",
        }
    }

    /// True when larger raw values indicate lower recoverability.
    pub fn is_reversed(self) -> bool {
        matches!(self, Feature::HNorm)
    }
}

impl fmt::Display for Feature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Feature {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Feature::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::domain(format!("unknown feature {s:?}")))
    }
}

/// Autocorrelation lag sums `A(l) = sum_y q(y) q(y + l mod Q)` of the residual
/// `q = p - 1/Q`, for `l` in `0..=Q/2` (the rest follow by `A(l) = A(Q - l)`).
fn residual_autocorrelation(spec: &Spectrum) -> Vec<f64> {
    let q = spec.probs().len();
    let u = 1.0 / q as f64;
    let r: Vec<f64> = spec.probs().iter().map(|p| p - u).collect();
    (0..=q / 2)
        .map(|lag| {
            let (head, tail) = r.split_at(lag);
            let straight: f64 = r.iter().zip(tail).map(|(a, b)| a * b).sum();
            let wrapped: f64 = r[q - lag..].iter().zip(head).map(|(a, b)| a * b).sum();
            straight + wrapped
        })
        .collect()
}

/// Strongest normalized residual autocorrelation over nonzero cyclic lags.
/// Returns 0 for a flat spectrum.
pub fn autocorr_peak(spec: &Spectrum) -> f64 {
    let a = residual_autocorrelation(spec);
    let a0 = a[0];
    if a0 < FLAT_AUTOCORR_TOL {
        return 0.0;
    }
    let peak = a[1..].iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v));
    // Cauchy-Schwarz bounds the ratio by 1; clamp rounding overshoot.
    (peak / a0).min(1.0)
}

/// Shannon entropy divided by `log Q`, with `0 log 0 = 0`.
pub fn normalized_entropy(spec: &Spectrum) -> f64 {
    let h: f64 = spec
        .probs()
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.ln())
        .sum();
    (h / (spec.q() as f64).ln()).clamp(0.0, 1.0)
}

/// `(M1 / M_ver, (M1 - M2) / M_ver)`, or `(0, 0)` without verified mass.
pub fn verified_fractions(result: &DecodeResult) -> (f64, f64) {
    if result.m_ver <= 0.0 {
        return (0.0, 0.0);
    }
    (
        (result.m1 / result.m_ver).min(1.0),
        ((result.m1 - result.m2) / result.m_ver).clamp(0.0, 1.0),
    )
}

/// All four features given an already-decoded spectrum.
pub fn features_from_decode(spec: &Spectrum, decoded: &DecodeResult) -> FeatureVector {
    let (m1_frac, margin_frac) = verified_fractions(decoded);
    FeatureVector {
        a_peak: autocorr_peak(spec),
        h_norm: normalized_entropy(spec),
        m1_frac,
        margin_frac,
    }
}

pub fn feature_vector(spec: &Spectrum, instance: &Instance) -> Result<FeatureVector> {
    let decoded = decode(spec, instance)?;
    Ok(features_from_decode(spec, &decoded))
}
