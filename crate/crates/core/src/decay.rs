//! Finite-scale diagnostics for the order-of-growth of the generating
//! product and the superexponential decay of its coefficients.
//!
//! Both results are asymptotic; at desk scale the profiles can only show
//! consistency, so every threshold here is loose and configurable. The
//! growth side samples log P(x) = sum_p log(1 + R(p) x) against
//! x^(1/kappa)/log x; the decay side computes mu_m = m log m / log(1/e_m)
//! from a high-precision coefficient run, which should drift toward 1/k.

use crate::error::{Error, Result};
use crate::hp::{densities_hp, HpSeries};
use crate::primes::PrimeTable;
use crate::sum::parallel_kahan_sum;
use crate::weights::MultiplicityWeights;

/// Default acceptance band for growth ratios. Deliberately wide: the
/// implied constants in log P(x) = Theta(x^(1/kappa)/log x) are far from 1
/// at reachable x, and the band exists to catch wrong exponents, not to
/// estimate constants.
pub const DEFAULT_RATIO_WINDOW: (f64, f64) = (0.3, 30.0);

/// Factor families with known growth exponents.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GrowthFamily {
    OmegaK(u32),
    S,
    E,
    O,
}

impl GrowthFamily {
    pub fn kappa(&self) -> f64 {
        match self {
            GrowthFamily::OmegaK(k) => *k as f64,
            GrowthFamily::S | GrowthFamily::E => 2.0,
            GrowthFamily::O => 3.0,
        }
    }

    /// R(p): the linear coefficient of the factor 1 + R(p) x.
    fn r_at(&self, p: f64) -> f64 {
        match self {
            GrowthFamily::OmegaK(k) => (p - 1.0) / p.powi(*k as i32 + 1),
            GrowthFamily::S => 1.0 / (p * p),
            GrowthFamily::E => 1.0 / (p * (p + 1.0)),
            GrowthFamily::O => 1.0 / (p * p * (p + 1.0)),
        }
    }
}

impl std::fmt::Display for GrowthFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            GrowthFamily::OmegaK(k) => write!(f, "omega_k:{k}"),
            GrowthFamily::S => write!(f, "S"),
            GrowthFamily::E => write!(f, "E"),
            GrowthFamily::O => write!(f, "O"),
        }
    }
}

/// One growth sample: log P(x), the comparison scale x^(1/kappa)/log x,
/// and their ratio (0 at x = 1 where log P and log x both collapse).
#[derive(Clone, Copy, Debug)]
pub struct GrowthSample {
    pub x: f64,
    pub log_p: f64,
    pub scale: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug)]
pub struct GrowthProfile {
    family: GrowthFamily,
    prime_limit: u64,
    samples: Vec<GrowthSample>,
    truncation_dominated: bool,
}

impl GrowthProfile {
    pub fn family(&self) -> GrowthFamily {
        self.family
    }

    pub fn kappa(&self) -> f64 {
        self.family.kappa()
    }

    pub fn prime_limit(&self) -> u64 {
        self.prime_limit
    }

    pub fn samples(&self) -> &[GrowthSample] {
        &self.samples
    }

    /// True when some sample has x^(1/kappa) beyond the prime table, where
    /// the truncated product visibly under-represents the true growth.
    pub fn truncation_dominated(&self) -> bool {
        self.truncation_dominated
    }

    /// True iff every ratio at x > 1 lies inside the window.
    pub fn ratios_within(&self, window: (f64, f64)) -> bool {
        self.samples
            .iter()
            .filter(|s| s.x > 1.0)
            .all(|s| s.ratio >= window.0 && s.ratio <= window.1)
    }
}

/// Samples log P(x) over the given points (each x >= 1).
pub fn growth_profile(
    family: GrowthFamily,
    x_samples: &[f64],
    primes: &PrimeTable,
) -> Result<GrowthProfile> {
    if x_samples.is_empty() {
        return Err(Error::InvalidArgument("need at least one sample point".into()));
    }
    if let GrowthFamily::OmegaK(k) = family {
        if !(2..=crate::weights::MAX_OMEGA_K).contains(&k) {
            return Err(Error::InvalidArgument(format!(
                "k must be in [2, {}], got {k}",
                crate::weights::MAX_OMEGA_K
            )));
        }
    }
    if let Some(&bad) = x_samples.iter().find(|&&x| !(x.is_finite() && x >= 1.0)) {
        return Err(Error::InvalidArgument(format!(
            "sample points must be finite and >= 1, got {bad}"
        )));
    }
    let kappa = family.kappa();
    let ps = primes.primes();
    let mut samples = Vec::with_capacity(x_samples.len());
    let mut truncation_dominated = false;
    for &x in x_samples {
        let log_p = parallel_kahan_sum(ps.len(), |i| {
            let p = ps[i] as f64;
            (family.r_at(p) * x).ln_1p()
        });
        let root = x.powf(1.0 / kappa);
        let scale = root / x.ln();
        let ratio = if x > 1.0 { log_p / scale } else { 0.0 };
        if root > primes.limit() as f64 {
            truncation_dominated = true;
        }
        samples.push(GrowthSample { x, log_p, scale, ratio });
    }
    Ok(GrowthProfile {
        family,
        prime_limit: primes.limit(),
        samples,
        truncation_dominated,
    })
}

/// One decay entry. log10_e stays meaningful when e_m underflows binary64.
#[derive(Clone, Copy, Debug)]
pub struct DecayEntry {
    pub m: usize,
    pub log10_e: f64,
    pub mu: f64,
}

#[derive(Clone, Debug)]
pub struct DecayProfile {
    weights: MultiplicityWeights,
    m_from: usize,
    m_to: usize,
    precision_digits: u32,
    prime_limit: u64,
    entries: Vec<DecayEntry>,
    skipped: Vec<usize>,
}

impl DecayProfile {
    pub fn weights(&self) -> &MultiplicityWeights {
        &self.weights
    }

    pub fn m_from(&self) -> usize {
        self.m_from
    }

    pub fn m_to(&self) -> usize {
        self.m_to
    }

    pub fn precision_digits(&self) -> u32 {
        self.precision_digits
    }

    pub fn prime_limit(&self) -> u64 {
        self.prime_limit
    }

    pub fn entries(&self) -> &[DecayEntry] {
        &self.entries
    }

    /// Targets in range whose coefficient is exactly zero; the limsup in
    /// the decay law runs over nonzero coefficients only.
    pub fn skipped(&self) -> &[usize] {
        &self.skipped
    }

    pub fn max_mu(&self) -> Option<f64> {
        self.entries.iter().map(|e| e.mu).fold(None, |acc, mu| {
            Some(acc.map_or(mu, |a: f64| a.max(mu)))
        })
    }
}

/// Largest target the profile will compute.
pub const MAX_DECAY_M: usize = 200;

/// Deep coefficients need headroom; shallow runs may stay at low digits.
pub const MIN_DIGITS_FOR_DEEP: u32 = 30;
const DEEP_M_THRESHOLD: usize = 8;

/// mu_m = m log m / log(1/e_m) over m in [m_from, m_to], from a run at
/// `digits` decimal digits.
pub fn decay_profile(
    weights: &MultiplicityWeights,
    m_from: usize,
    m_to: usize,
    digits: u32,
    primes: &PrimeTable,
) -> Result<DecayProfile> {
    if m_from < 2 || m_from > m_to {
        return Err(Error::InvalidArgument(format!(
            "need 2 <= m_from <= m_to, got [{m_from}, {m_to}]"
        )));
    }
    if m_to > MAX_DECAY_M {
        return Err(Error::InvalidArgument(format!(
            "m_to is capped at {MAX_DECAY_M}, got {m_to}"
        )));
    }
    if m_to > DEEP_M_THRESHOLD && digits < MIN_DIGITS_FOR_DEEP {
        return Err(Error::InvalidArgument(format!(
            "m_to = {m_to} needs at least {MIN_DIGITS_FOR_DEEP} digits of \
             precision, got {digits}"
        )));
    }
    let series: HpSeries = densities_hp(weights, m_to, digits, primes)?;
    let mut entries = Vec::new();
    let mut skipped = Vec::new();
    for m in m_from..=m_to {
        let log10_e = series.log10_values()[m];
        if log10_e == f64::NEG_INFINITY {
            skipped.push(m);
            continue;
        }
        let m_f = m as f64;
        let mu = m_f * m_f.ln() / (-log10_e * std::f64::consts::LN_10);
        entries.push(DecayEntry { m, log10_e, mu });
    }
    Ok(DecayProfile {
        weights: weights.clone(),
        m_from,
        m_to,
        precision_digits: digits,
        prime_limit: primes.limit(),
        entries,
        skipped,
    })
}
