//! Continued-fraction decoding with modular verification.
//!
//! Each outcome `y` is mapped to one candidate denominator `r0(y)`; outcomes
//! whose candidate satisfies `a^r0 = 1 (mod N)` contribute their probability
//! to `m(r0)`. The decoded order is the candidate with the largest verified
//! mass.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numtheory::{denominator_candidate, smallest_verified_denominator, Instance};
use crate::spectrum::Spectrum;

/// Masses closer than this are treated as tied.
pub const TIE_TOL: f64 = 1e-12;

/// How an outcome is mapped to its candidate denominator.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CandidateRule {
    /// Denominator of the last convergent with denominator `<= N`,
    /// then verified.
    #[default]
    HighestBounded,
    /// Smallest verified denominator among all convergents `<= N`.
    SmallestVerified,
}

impl CandidateRule {
    /// Verified candidate for outcome `y`, or `None` if it fails verification.
    pub fn verified_candidate(self, y: u64, instance: &Instance) -> Option<u64> {
        match self {
            CandidateRule::HighestBounded => {
                let r0 = denominator_candidate(y, instance.q(), instance.modulus());
                instance.verifies(r0).then_some(r0)
            }
            CandidateRule::SmallestVerified => smallest_verified_denominator(y, instance),
        }
    }
}

/// Verified candidate denominators and their aggregated probability.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MassMap {
    entries: BTreeMap<u64, f64>,
    total_verified: f64,
}

impl MassMap {
    pub fn entries(&self) -> &BTreeMap<u64, f64> {
        &self.entries
    }

    pub fn get(&self, r0: u64) -> f64 {
        self.entries.get(&r0).copied().unwrap_or(0.0)
    }

    /// `M_ver`, the total verified mass.
    pub fn total(&self) -> f64 {
        self.total_verified
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Builds a map from `(r0, mass)` pairs; `M_ver` is summed in key order.
    pub fn from_entries(entries: impl IntoIterator<Item = (u64, f64)>) -> Self {
        let mut map = BTreeMap::new();
        for (k, m) in entries {
            *map.entry(k).or_insert(0.0) += m;
        }
        let total_verified = map.values().sum();
        MassMap {
            entries: map,
            total_verified,
        }
    }
}

/// `m(r0)` over all outcomes with positive probability, in ascending `y`.
pub fn verified_masses(spec: &Spectrum, instance: &Instance) -> Result<MassMap> {
    verified_masses_with(spec, instance, CandidateRule::default())
}

pub fn verified_masses_with(
    spec: &Spectrum,
    instance: &Instance,
    rule: CandidateRule,
) -> Result<MassMap> {
    if spec.q() != instance.q() {
        return Err(Error::domain(format!(
            "spectrum has Q={}, instance expects Q={}",
            spec.q(),
            instance.q()
        )));
    }
    let mut entries = BTreeMap::new();
    for (y, &p) in spec.probs().iter().enumerate() {
        if p <= 0.0 {
            continue;
        }
        if let Some(r0) = rule.verified_candidate(y as u64, instance) {
            *entries.entry(r0).or_insert(0.0) += p;
        }
    }
    let total_verified = entries.values().sum();
    Ok(MassMap {
        entries,
        total_verified,
    })
}

/// Outcome of decoding one spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodeResult {
    pub r_calc: Option<u64>,
    pub m_ver: f64,
    pub m1: f64,
    pub m2: f64,
    pub mass_map: MassMap,
}

/// Argmax of the mass map; candidates within [`TIE_TOL`] of the maximum
/// tie, and the smallest denominator among them wins.
pub fn select_candidate(map: &MassMap) -> Option<u64> {
    let max = map.entries().values().copied().reduce(f64::max)?;
    map.entries()
        .iter()
        .find(|&(_, &m)| m >= max - TIE_TOL)
        .map(|(&r0, _)| r0)
}

/// Decision from a mass map: `r_calc`, `M_ver`, `M1`, `M2`.
pub fn decide(mass_map: MassMap) -> DecodeResult {
    let r_calc = select_candidate(&mass_map);
    let mut masses: Vec<f64> = mass_map.entries().values().copied().collect();
    masses.sort_by(|a, b| b.total_cmp(a));
    let m1 = masses.first().copied().unwrap_or(0.0);
    let m2 = masses.get(1).copied().unwrap_or(0.0);
    DecodeResult {
        r_calc,
        m_ver: mass_map.total(),
        m1,
        m2,
        mass_map,
    }
}

pub fn decode(spec: &Spectrum, instance: &Instance) -> Result<DecodeResult> {
    Ok(decide(verified_masses(spec, instance)?))
}

pub fn decode_with(
    spec: &Spectrum,
    instance: &Instance,
    rule: CandidateRule,
) -> Result<DecodeResult> {
    Ok(decide(verified_masses_with(spec, instance, rule)?))
}

/// Recoverable iff a candidate was selected and it is the true order.
pub fn is_recoverable(result: &DecodeResult, r_true: u64) -> bool {
    result.r_calc == Some(r_true)
}

#[derive(Serialize, Deserialize)]
struct DecodeWire {
    r_calc: Option<u64>,
    #[serde(rename = "M_ver")]
    m_ver: f64,
    #[serde(rename = "M1")]
    m1: f64,
    #[serde(rename = "M2")]
    m2: f64,
    masses: BTreeMap<String, f64>,
}

impl Serialize for DecodeResult {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        DecodeWire {
            r_calc: self.r_calc,
            m_ver: self.m_ver,
            m1: self.m1,
            m2: self.m2,
            masses: self
                .mass_map
                .entries()
                .iter()
                .map(|(k, v)| (k.to_string(), *v))
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for DecodeResult {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let w = DecodeWire::deserialize(d)?;
        let mut entries = BTreeMap::new();
        for (k, v) in w.masses {
            let r0: u64 = k
                .parse()
                .map_err(|_| D::Error::custom(format!("bad denominator key {k:?}")))?;
            entries.insert(r0, v);
        }
        Ok(DecodeResult {
            r_calc: w.r_calc,
            m_ver: w.m_ver,
            m1: w.m1,
            m2: w.m2,
            mass_map: MassMap {
                entries,
                total_verified: w.m_ver,
            },
        })
    }
}
