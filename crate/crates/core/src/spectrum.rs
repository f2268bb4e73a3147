//! Precision-register output distributions: the ideal order-finding comb,
//! cyclic broadening kernels, the sector noise mixture and finite-shot
//! sampling.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numtheory::{mod_pow, Instance, MAX_PRECISION};
use crate::rng;

/// Tolerance on `sum(p) = 1`.
pub const NORMALIZATION_TOL: f64 = 1e-9;

/// A probability distribution over outcomes `y in 0..2^t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ProbsWire")]
pub struct Spectrum {
    t: u32,
    probs: Vec<f64>,
}

#[derive(Deserialize)]
struct ProbsWire {
    t: u32,
    probs: Vec<f64>,
}

impl TryFrom<ProbsWire> for Spectrum {
    type Error = Error;

    fn try_from(w: ProbsWire) -> Result<Self> {
        Spectrum::new(w.t, w.probs)
    }
}

fn check_precision(t: u32) -> Result<()> {
    if t == 0 || t > MAX_PRECISION {
        return Err(Error::domain(format!(
            "t must be in 1..={MAX_PRECISION}, got {t}"
        )));
    }
    Ok(())
}

impl Spectrum {
    pub fn new(t: u32, probs: Vec<f64>) -> Result<Self> {
        check_precision(t)?;
        let q = 1usize << t;
        if probs.len() != q {
            return Err(Error::domain(format!(
                "spectrum has {} entries, expected Q=2^{t}={q}",
                probs.len()
            )));
        }
        if let Some((y, p)) = probs
            .iter()
            .enumerate()
            .find(|(_, p)| !p.is_finite() || **p < 0.0)
        {
            return Err(Error::domain(format!(
                "probability at y={y} is {p}, must be finite and >= 0"
            )));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::domain(format!(
                "probabilities sum to {total}, expected 1"
            )));
        }
        Ok(Spectrum { t, probs })
    }

    /// Rescales non-negative weights to a distribution.
    pub fn from_weights(t: u32, weights: Vec<f64>) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !total.is_finite() || total <= 0.0 {
            return Err(Error::domain("weights must have a positive finite total"));
        }
        Spectrum::new(t, weights.into_iter().map(|w| w / total).collect())
    }

    pub fn uniform(t: u32) -> Result<Self> {
        check_precision(t)?;
        let q = 1usize << t;
        Ok(Spectrum {
            t,
            probs: vec![1.0 / q as f64; q],
        })
    }

    pub fn point_mass(t: u32, y: u64) -> Result<Self> {
        check_precision(t)?;
        let q = 1u64 << t;
        if y >= q {
            return Err(Error::domain(format!("outcome {y} >= Q={q}")));
        }
        let mut probs = vec![0.0; q as usize];
        probs[y as usize] = 1.0;
        Ok(Spectrum { t, probs })
    }

    pub fn precision(&self) -> u32 {
        self.t
    }

    pub fn q(&self) -> u64 {
        1u64 << self.t
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Cyclic shift: `out[y] = p[y - c mod Q]`.
    pub fn rotated(&self, c: u64) -> Spectrum {
        let q = self.probs.len();
        let c = (c % q as u64) as usize;
        let mut probs = vec![0.0; q];
        for (y, &p) in self.probs.iter().enumerate() {
            probs[(y + c) % q] = p;
        }
        Spectrum { t: self.t, probs }
    }

    /// Number of outcomes with positive probability.
    pub fn support_size(&self) -> usize {
        self.probs.iter().filter(|&&p| p > 0.0).count()
    }
}

/// Finite-shot histogram over `0..2^t`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "CountsWire")]
pub struct Counts {
    t: u32,
    shots: u64,
    counts: Vec<u64>,
}

#[derive(Deserialize)]
struct CountsWire {
    t: u32,
    shots: u64,
    counts: Vec<u64>,
}

impl TryFrom<CountsWire> for Counts {
    type Error = Error;

    fn try_from(w: CountsWire) -> Result<Self> {
        let c = Counts::new(w.t, w.counts)?;
        if c.shots != w.shots {
            return Err(Error::domain(format!(
                "shots={} does not match the counts total {}",
                w.shots, c.shots
            )));
        }
        Ok(c)
    }
}

impl Counts {
    pub fn new(t: u32, counts: Vec<u64>) -> Result<Self> {
        check_precision(t)?;
        let q = 1usize << t;
        if counts.len() != q {
            return Err(Error::domain(format!(
                "histogram has {} bins, expected Q={q}",
                counts.len()
            )));
        }
        let shots: u64 = counts.iter().sum();
        if shots == 0 {
            return Err(Error::domain("histogram has zero total counts"));
        }
        Ok(Counts { t, shots, counts })
    }

    pub fn precision(&self) -> u32 {
        self.t
    }

    pub fn shots(&self) -> u64 {
        self.shots
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// Empirical distribution `counts / shots`.
    pub fn to_spectrum(&self) -> Spectrum {
        let n = self.shots as f64;
        Spectrum {
            t: self.t,
            probs: self.counts.iter().map(|&c| c as f64 / n).collect(),
        }
    }
}

/// Either on-disk spectrum form. Consumers accept both.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SpectrumData {
    Counts(Counts),
    Probs(Spectrum),
}

impl SpectrumData {
    pub fn to_spectrum(&self) -> Spectrum {
        match self {
            SpectrumData::Counts(c) => c.to_spectrum(),
            SpectrumData::Probs(s) => s.clone(),
        }
    }

    pub fn precision(&self) -> u32 {
        match self {
            SpectrumData::Counts(c) => c.precision(),
            SpectrumData::Probs(s) => s.precision(),
        }
    }
}

/// Closed-form ideal phase-estimation output for `instance`:
/// an equal mixture over `s in 0..r` of Fejer kernels centred at `Q s / r`.
pub fn ideal_spectrum(instance: &Instance) -> Spectrum {
    let q = instance.q();
    let r = instance.order();
    let qf = q as f64;
    let rf = r as f64;
    let mut probs = vec![0.0; q as usize];
    for (y, slot) in probs.iter_mut().enumerate() {
        let mut acc = 0.0;
        for s in 0..r {
            // Q * (s/r - y/Q) = k / r with k exact.
            let k = (s as i128) * (q as i128) - (y as i128) * (r as i128);
            if k == 0 {
                acc += 1.0;
            } else if k % r as i128 == 0 {
                // Zero of the Fejer kernel.
            } else {
                let phase = (k.rem_euclid(2 * r as i128)) as f64 / rf;
                let num = (PI * phase).sin();
                let den = (PI * k as f64 / (rf * qf)).sin();
                acc += (num * num) / (qf * qf * den * den);
            }
        }
        *slot = acc / rf;
    }
    Spectrum {
        t: instance.precision(),
        probs,
    }
}

/// Comb family of the competing sector `h`: the ideal output for base
/// `2^h mod N`.
pub fn sector_spectrum(n: u64, h: u32, t: u32) -> Result<Spectrum> {
    let base = mod_pow(2, h as u64, n)?;
    let inst = Instance::new(n, base, t)?;
    Ok(ideal_spectrum(&inst))
}

/// Normalized cyclic kernel over `0..Q`; index 0 is the centre.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    weights: Vec<f64>,
}

impl Kernel {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() || weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::domain("kernel weights must be finite and >= 0"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::domain(format!("kernel sums to {total}, expected 1")));
        }
        Ok(Kernel { weights })
    }

    pub fn delta(q: usize) -> Self {
        let mut weights = vec![0.0; q];
        weights[0] = 1.0;
        Kernel { weights }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Wrapped discrete Gaussian `w(l) ~ sum_{|m|<=3} exp(-(l + mQ)^2 / 2 sigma^2)`.
/// `sigma = 0` gives the delta kernel.
pub fn gaussian_kernel(q: usize, sigma: f64) -> Result<Kernel> {
    if !sigma.is_finite() || sigma < 0.0 || q == 0 {
        return Err(Error::domain(format!(
            "sigma must be finite and >= 0, got {sigma}"
        )));
    }
    if sigma == 0.0 {
        return Ok(Kernel::delta(q));
    }
    let qi = q as i64;
    let two_var = 2.0 * sigma * sigma;
    let g = |x: i64| (-((x * x) as f64) / two_var).exp();
    let mut weights: Vec<f64> = (0..qi)
        .map(|l| {
            let centred = if l <= qi / 2 { l } else { l - qi };
            // Paired terms keep w(l) == w(-l) bit-for-bit.
            (1..=3).fold(g(centred), |acc, m| {
                acc + (g(centred + m * qi) + g(centred - m * qi))
            })
        })
        .collect();
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    Ok(Kernel { weights })
}

/// Box kernel, flat over `|l| <= round(width)` (cyclically), uniform once the
/// window covers the register.
pub fn box_kernel(q: usize, width: f64) -> Result<Kernel> {
    if !width.is_finite() || width < 0.0 || q == 0 {
        return Err(Error::domain(format!(
            "width must be finite and >= 0, got {width}"
        )));
    }
    let half = width.round() as usize;
    if 2 * half + 1 >= q {
        return Ok(Kernel {
            weights: vec![1.0 / q as f64; q],
        });
    }
    let w = 1.0 / (2 * half + 1) as f64;
    let mut weights = vec![0.0; q];
    for l in 0..=half {
        weights[l] = w;
        weights[(q - l) % q] = w;
    }
    Ok(Kernel { weights })
}

/// Broadening kernel family.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelFamily {
    #[default]
    Gaussian,
    Box,
}

impl KernelFamily {
    pub fn kernel(self, q: usize, sigma: f64) -> Result<Kernel> {
        match self {
            KernelFamily::Gaussian => gaussian_kernel(q, sigma),
            KernelFamily::Box => box_kernel(q, sigma),
        }
    }
}

fn convolve(probs: &[f64], kernel: &[f64]) -> Vec<f64> {
    let q = probs.len();
    let taps: Vec<(usize, f64)> = kernel
        .iter()
        .copied()
        .enumerate()
        .filter(|(_, w)| *w > 0.0)
        .collect();
    let mut out = vec![0.0; q];
    for (i, &p) in probs.iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        for &(l, w) in &taps {
            let y = i + l;
            out[if y >= q { y - q } else { y }] += p * w;
        }
    }
    out
}

/// Circular convolution `(p * K)(y) = sum_l p(y - l mod Q) K(l)`.
pub fn broaden(spec: &Spectrum, kernel: &Kernel) -> Result<Spectrum> {
    if spec.probs.len() != kernel.len() {
        return Err(Error::domain(format!(
            "kernel length {} does not match Q={}",
            kernel.len(),
            spec.probs.len()
        )));
    }
    Ok(Spectrum {
        t: spec.t,
        probs: convolve(&spec.probs, &kernel.weights),
    })
}

/// One competing comb family in the noise mixture.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sector {
    /// Shift index; the family is the ideal comb of base `2^h mod N`.
    pub h: u32,
    /// Share of the leaked weight.
    pub nu: f64,
    /// Broadening width of this family.
    pub sigma: f64,
}

/// Parameters of the two-stage noise model plus finite-shot sampling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseConfig {
    /// Weight leaked out of the intended comb family.
    pub epsilon: f64,
    #[serde(default)]
    pub sectors: Vec<Sector>,
    /// Broadening width of the intended family.
    pub sigma0: f64,
    /// Uniform admixture, applied after the sector mixture.
    #[serde(rename = "lambda", default)]
    pub lambda_uniform: f64,
    #[serde(default)]
    pub kernel: KernelFamily,
    /// `None` means infinitely many shots (exact distribution).
    #[serde(default)]
    pub shots: Option<u64>,
    #[serde(default)]
    pub seed: u64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        NoiseConfig {
            epsilon: 0.0,
            sectors: Vec::new(),
            sigma0: 0.0,
            lambda_uniform: 0.0,
            kernel: KernelFamily::Gaussian,
            shots: None,
            seed: 0,
        }
    }
}

fn check_unit(name: &str, v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::domain(format!("{name} must be in [0, 1], got {v}")));
    }
    Ok(())
}

fn check_width(name: &str, v: f64) -> Result<()> {
    if !v.is_finite() || v < 0.0 {
        return Err(Error::domain(format!(
            "{name} must be finite and >= 0, got {v}"
        )));
    }
    Ok(())
}

impl NoiseConfig {
    pub fn validate(&self) -> Result<()> {
        check_unit("epsilon", self.epsilon)?;
        check_unit("lambda", self.lambda_uniform)?;
        check_width("sigma0", self.sigma0)?;
        for s in &self.sectors {
            check_width(&format!("sigma of sector {}", s.h), s.sigma)?;
            if !s.nu.is_finite() || s.nu < 0.0 {
                return Err(Error::domain(format!(
                    "nu of sector {} must be finite and >= 0, got {}",
                    s.h, s.nu
                )));
            }
        }
        let nu_total: f64 = self.sectors.iter().map(|s| s.nu).sum();
        let need_sectors = self.epsilon > 0.0 || !self.sectors.is_empty();
        if need_sectors && (nu_total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::domain(format!(
                "sector weights nu must sum to 1, got {nu_total}"
            )));
        }
        if self.shots == Some(0) {
            return Err(Error::domain("shots must be positive"));
        }
        Ok(())
    }
}

/// Default competing sectors: every shift `h in 0..ord_N(2)` whose base
/// `2^h mod N` differs from the instance base, with equal weights and a
/// shared width. For `N = 2^n - 1` this is `{0..n-1} \ {s}`.
pub fn default_sectors(instance: &Instance, sigma: f64) -> Result<Vec<Sector>> {
    let n = instance.modulus();
    if n.is_multiple_of(2) {
        return Err(Error::domain(format!("shift sectors need odd N, got {n}")));
    }
    let period = crate::numtheory::multiplicative_order(2, n)?;
    let hs: Vec<u32> = (0..period as u32)
        .filter(|&h| mod_pow(2, h as u64, n).is_ok_and(|b| b != instance.base()))
        .collect();
    let nu = 1.0 / hs.len().max(1) as f64;
    Ok(hs.into_iter().map(|h| Sector { h, nu, sigma }).collect())
}

/// Broadened intended family and the nu-weighted sum of broadened competing
/// families, ready to be mixed for any `(epsilon, lambda)`.
#[derive(Debug, Clone)]
pub struct MixtureComponents {
    t: u32,
    intended: Vec<f64>,
    leaked: Option<Vec<f64>>,
}

impl MixtureComponents {
    pub fn new(
        instance: &Instance,
        sigma0: f64,
        sectors: &[Sector],
        family: KernelFamily,
    ) -> Result<Self> {
        check_width("sigma0", sigma0)?;
        let q = instance.q() as usize;
        let ideal = ideal_spectrum(instance);
        let intended = convolve(&ideal.probs, family.kernel(q, sigma0)?.weights());
        let leaked = if sectors.is_empty() {
            None
        } else {
            let mut acc = vec![0.0; q];
            for s in sectors {
                check_width("sector sigma", s.sigma)?;
                let base = mod_pow(2, s.h as u64, instance.modulus())?;
                if base == instance.base() {
                    return Err(Error::domain(format!(
                        "sector h={} coincides with the intended family (2^{} = a mod {})",
                        s.h,
                        s.h,
                        instance.modulus()
                    )));
                }
                let comb = sector_spectrum(instance.modulus(), s.h, instance.precision())?;
                let broadened = convolve(&comb.probs, family.kernel(q, s.sigma)?.weights());
                acc.iter_mut()
                    .zip(&broadened)
                    .for_each(|(a, b)| *a += s.nu * b);
            }
            Some(acc)
        };
        Ok(MixtureComponents {
            t: instance.precision(),
            intended,
            leaked,
        })
    }

    /// `(1 - lambda) [(1 - eps) I + eps L] + lambda u`.
    pub fn mix(&self, epsilon: f64, lambda: f64) -> Result<Spectrum> {
        check_unit("epsilon", epsilon)?;
        check_unit("lambda", lambda)?;
        let q = self.intended.len();
        let uniform = lambda / q as f64;
        let probs = match &self.leaked {
            Some(leaked) => self
                .intended
                .iter()
                .zip(leaked)
                .map(|(i, l)| (1.0 - lambda) * ((1.0 - epsilon) * i + epsilon * l) + uniform)
                .collect(),
            None if epsilon > 0.0 => {
                return Err(Error::domain("epsilon > 0 requires at least one sector"))
            }
            None => self
                .intended
                .iter()
                .map(|i| (1.0 - lambda) * i + uniform)
                .collect(),
        };
        Spectrum::new(self.t, probs)
    }
}

/// Noise-distorted distribution (before sampling).
pub fn noisy_mixture(instance: &Instance, cfg: &NoiseConfig) -> Result<Spectrum> {
    cfg.validate()?;
    MixtureComponents::new(instance, cfg.sigma0, &cfg.sectors, cfg.kernel)?
        .mix(cfg.epsilon, cfg.lambda_uniform)
}

/// Multinomial histogram of `shots` draws from `spec`.
///
/// Generator: `ChaCha8Rng::seed_from_u64(seed)`; each shot takes one uniform
/// `f64` in `[0, 1)` and inverts the cumulative distribution. Outcomes with
/// zero probability are never drawn.
pub fn sample_counts(spec: &Spectrum, shots: u64, seed: u64) -> Result<Counts> {
    if shots == 0 {
        return Err(Error::domain("shots must be positive"));
    }
    let mut cdf = Vec::with_capacity(spec.probs.len());
    let mut acc = 0.0;
    for &p in &spec.probs {
        acc += p;
        cdf.push(acc);
    }
    let last_positive = spec
        .probs
        .iter()
        .rposition(|&p| p > 0.0)
        .ok_or_else(|| Error::domain("spectrum has no support"))?;
    let mut rng = rng::seeded(seed);
    let mut counts = vec![0u64; spec.probs.len()];
    for _ in 0..shots {
        let u: f64 = rng.random();
        let y = cdf.partition_point(|&c| c <= u).min(last_positive);
        counts[y] += 1;
    }
    Counts::new(spec.t, counts)
}

/// Empirical distribution of `shots` draws from `spec`.
pub fn sample_shots(spec: &Spectrum, shots: u64, seed: u64) -> Result<Spectrum> {
    Ok(sample_counts(spec, shots, seed)?.to_spectrum())
}
