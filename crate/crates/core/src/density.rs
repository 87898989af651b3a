//! Density coefficients from Euler-product generating functions.
//!
//! The engine computes e[0] as a truncated Euler product, the prime sums
//! S~(n) that drive the log-derivative recursion, and then
//!
//! ```text
//! e[m] = (1/m) * sum_{j=0}^{m-1} e[j] * S~(m - j)
//! ```
//!
//! Two routes exist: a closed form per prime for the single-multiplicity
//! weights omega_k, and a generic route for any nonnegative integer weight
//! sequence that builds each factor's power series and takes its formal
//! logarithm. The two must agree termwise; tests and the acceptance suite
//! hold them to 1e-12.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::primes::PrimeTable;
use crate::sum::{parallel_kahan_sum, KahanSum};
use crate::weights::{MultiplicityWeights, MAX_OMEGA_K};

/// Default prime truncation for every density computation.
pub const DEFAULT_PRIME_LIMIT: u64 = 10_000_000;

/// Default multiplicity cutoff for the generic route: contributions beyond
/// j = 60 are below 2^-61 even at p = 2, under double-precision relevance.
pub const DEFAULT_J_CUTOFF: u32 = 60;

/// Working precision of the double-precision engine, in decimal digits.
pub const F64_DIGITS: u32 = 15;

/// Per-multiplicity terms (p-1)/p^(j+1) below this floor are dropped where
/// the accompanying weight factor has modulus at most a few hundred. The
/// terms decrease strictly in j, so the break is valid, and the dropped
/// mass summed over any supported prime table stays under 1e-25.
const TERM_FLOOR: f64 = 1e-34;

/// Stop threshold for the real-point factor sums in the mass bound: the
/// loop ends once the rest of the j-sum is provably below this, which
/// perturbs each log factor by less than 2e-20.
const MASS_TAIL_FLOOR: f64 = 1e-20;

/// Trial radii for the coefficient-mass bound beyond m_max. The bound for
/// nonnegative coefficients is P(r) / r^(m_max+1) for any r > 1 where the
/// truncated product is finite; the budget takes the best grid point.
const MASS_BOUND_RADII: [f64; 11] =
    [1.001, 1.01, 1.05, 1.1, 1.25, 1.5, 2.0, 4.0, 8.0, 16.0, 32.0];

/// Negative values no larger than this in magnitude are rounding artifacts
/// and are clamped to zero; anything more negative is a genuine failure.
const NEGATIVE_CLAMP: f64 = 1e-12;

/// Structurally unreachable targets whose coefficient lands below this are
/// reported as exact zeros.
const STRUCTURAL_ZERO: f64 = 1e-15;

/// Per-coefficient annotation on a computed series.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CoeffFlag {
    Normal,
    /// Rounding produced a tiny negative; reported as 0.
    ClampedNegative,
    /// The weight image cannot produce this target; reported as 0.
    StructuralZero,
}

/// A computed run of density coefficients with its truncation accounting.
#[derive(Clone, Debug)]
pub struct DensitySeries {
    weights: MultiplicityWeights,
    values: Vec<f64>,
    flags: Vec<CoeffFlag>,
    prime_limit: u64,
    series_degree: Option<u32>,
    tail_estimate: f64,
    mass_beyond_m_max: f64,
    precision_digits: u32,
}

impl DensitySeries {
    pub fn weights(&self) -> &MultiplicityWeights {
        &self.weights
    }

    /// e[0..=m_max].
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn flags(&self) -> &[CoeffFlag] {
        &self.flags
    }

    pub fn m_max(&self) -> usize {
        self.values.len() - 1
    }

    pub fn prime_limit(&self) -> u64 {
        self.prime_limit
    }

    /// Multiplicity cutoff used by the generic route; None when the series
    /// came from a closed form with no such truncation.
    pub fn series_degree(&self) -> Option<u32> {
        self.series_degree
    }

    /// Budget for the discarded primes > prime_limit.
    pub fn tail_estimate(&self) -> f64 {
        self.tail_estimate
    }

    /// Budget for the coefficient mass at targets beyond m_max.
    pub fn mass_beyond_m_max(&self) -> f64 {
        self.mass_beyond_m_max
    }

    pub fn precision_digits(&self) -> u32 {
        self.precision_digits
    }

    pub fn sum(&self) -> f64 {
        let mut acc = KahanSum::new();
        for &v in &self.values {
            acc.add(v);
        }
        acc.value()
    }

    pub(crate) fn from_parts(
        weights: MultiplicityWeights,
        values: Vec<f64>,
        flags: Vec<CoeffFlag>,
        prime_limit: u64,
        series_degree: Option<u32>,
        tail_estimate: f64,
        mass_beyond_m_max: f64,
        precision_digits: u32,
    ) -> Self {
        Self {
            weights,
            values,
            flags,
            prime_limit,
            series_degree,
            tail_estimate,
            mass_beyond_m_max,
            precision_digits,
        }
    }
}

/// Prime sums S~(n) for 1 <= n <= m_max, cached for the recursion.
#[derive(Clone, Debug)]
pub struct PrimeSumCache {
    stilde: Vec<f64>,
    prime_limit: u64,
}

impl PrimeSumCache {
    /// S~(n); n must satisfy 1 <= n <= m_max.
    pub fn stilde(&self, n: usize) -> f64 {
        self.stilde[n - 1]
    }

    pub fn prime_limit(&self) -> u64 {
        self.prime_limit
    }

    /// Closed-form cache for omega_k.
    pub fn for_omega_k(k: u32, m_max: usize, primes: &PrimeTable) -> Result<Self> {
        let stilde = (1..=m_max)
            .map(|n| tilde_s_k(k, n as u32, primes))
            .collect::<Result<Vec<f64>>>()?;
        Ok(Self { stilde, prime_limit: primes.limit() })
    }

    /// Generic cache from per-prime log-series: S~(n) = n * l_n where
    /// L(z) = sum_p log G_p(z) = sum_n l_n z^n.
    pub fn for_weights(
        weights: &MultiplicityWeights,
        m_max: usize,
        primes: &PrimeTable,
        j_cutoff: u32,
    ) -> Result<Self> {
        let ell = sum_log_factor_series(weights, m_max, primes, j_cutoff)?;
        let stilde = (1..=m_max).map(|n| n as f64 * ell[n]).collect();
        Ok(Self { stilde, prime_limit: primes.limit() })
    }
}

fn check_k(k: u32) -> Result<()> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!(
            "k must be >= 2, got {k} (multiplicity 1 has no limiting \
             distribution without normalization)"
        )));
    }
    if k > MAX_OMEGA_K {
        return Err(Error::InvalidArgument(format!(
            "k must be <= {MAX_OMEGA_K}, got {k}"
        )));
    }
    Ok(())
}

/// The summand base for omega_k: p^(k+1)/(p-1) - 1. Beyond the exactly
/// representable integer range this continues in floating point, where the
/// k <= 60 cap keeps the loss irrelevant (terms are far below resolution).
#[inline]
fn omega_k_base(p: u64, k: u32) -> f64 {
    let p = p as f64;
    p.powi(k as i32 + 1) / (p - 1.0) - 1.0
}

/// S~_k(n) = (-1)^(n-1) * sum_{p <= P} (p^(k+1)/(p-1) - 1)^(-n), summed in
/// ascending prime order with compensation.
pub fn tilde_s_k(k: u32, n: u32, primes: &PrimeTable) -> Result<f64> {
    check_k(k)?;
    if n < 1 {
        return Err(Error::InvalidArgument("n must be >= 1".into()));
    }
    let ps = primes.primes();
    let sum = parallel_kahan_sum(ps.len(), |i| omega_k_base(ps[i], k).powi(-(n as i32)));
    let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
    Ok(sign * sum)
}

/// e_{k,0} = prod_{p <= P} (1 - (p-1)/p^(k+1)), evaluated in log space.
pub fn e_k0(k: u32, primes: &PrimeTable) -> Result<f64> {
    check_k(k)?;
    let ps = primes.primes();
    let log_sum = parallel_kahan_sum(ps.len(), |i| {
        let p = ps[i] as f64;
        (-(p - 1.0) / p.powi(k as i32 + 1)).ln_1p()
    });
    Ok(log_sum.exp())
}

/// Prime-truncation budget: integral bound P^(1-k) / ((k-1) ln P) with k
/// the smallest multiplicity carrying a nonzero weight.
pub fn prime_tail_estimate(k_eff: u64, prime_limit: u64) -> f64 {
    if prime_limit < 3 {
        return 1.0;
    }
    let p = prime_limit as f64;
    let k = k_eff as f64;
    p.powf(1.0 - k) / ((k - 1.0) * p.ln())
}

/// The shared coefficient recursion with noise accounting.
///
/// `digits` is the working precision; a nonzero coefficient that lands
/// below max-term * 10^-(digits-1) is indistinguishable from the rounding
/// noise of the largest term that produced it, and is an error unless the
/// target is structurally unreachable (then it is a flagged zero). An exact
/// 0.0 is kept as a plain zero; it carries no rounding-noise indication.
fn run_recursion(
    e0: f64,
    cache: &PrimeSumCache,
    m_max: usize,
    digits: u32,
    reachable: &[bool],
) -> Result<(Vec<f64>, Vec<CoeffFlag>)> {
    let noise_scale = 10f64.powi(-(digits as i32 - 1));
    let mut values = Vec::with_capacity(m_max + 1);
    let mut flags = Vec::with_capacity(m_max + 1);
    values.push(e0);
    flags.push(CoeffFlag::Normal);
    for m in 1..=m_max {
        let mut acc = KahanSum::new();
        let mut max_term = 0.0f64;
        for j in 0..m {
            let term = values[j] * cache.stilde(m - j);
            acc.add(term);
            max_term = max_term.max(term.abs());
        }
        let v = acc.value() / m as f64;
        let floor = max_term * noise_scale;
        if !reachable[m] && v.abs() < STRUCTURAL_ZERO {
            values.push(0.0);
            flags.push(CoeffFlag::StructuralZero);
            continue;
        }
        if v == 0.0 {
            values.push(0.0);
            flags.push(CoeffFlag::Normal);
            continue;
        }
        if v.abs() < floor {
            return Err(Error::PrecisionExhausted(format!(
                "e[{m}] = {v:.3e} is below the rounding noise of its largest \
                 term ({max_term:.3e} at {digits} digits); increase precision"
            )));
        }
        if v < -NEGATIVE_CLAMP {
            return Err(Error::PrecisionExhausted(format!(
                "e[{m}] = {v:.3e} is negative beyond rounding tolerance"
            )));
        }
        if v < 0.0 {
            values.push(0.0);
            flags.push(CoeffFlag::ClampedNegative);
        } else {
            values.push(v);
            flags.push(CoeffFlag::Normal);
        }
    }
    Ok((values, flags))
}

/// Densities of omega_k = m for m <= m_max via the closed-form route.
pub fn densities_omega_k(k: u32, m_max: usize, primes: &PrimeTable) -> Result<DensitySeries> {
    check_k(k)?;
    let weights = MultiplicityWeights::omega_k(k)?;
    let cache = PrimeSumCache::for_omega_k(k, m_max, primes)?;
    let e0 = e_k0(k, primes)?;
    let reachable = weights.reachable_targets_within(m_max, primes.primes().len())?;
    let (values, flags) = run_recursion(e0, &cache, m_max, F64_DIGITS, &reachable)?;
    let mass = mass_beyond_budget(&weights, m_max, primes, DEFAULT_J_CUTOFF, &values);
    Ok(DensitySeries::from_parts(
        weights,
        values,
        flags,
        primes.limit(),
        None,
        prime_tail_estimate(k as u64, primes.limit()),
        mass,
        F64_DIGITS,
    ))
}

/// Maclaurin coefficients l_0 ..= l_M of log G_p(z) for one prime, where
///
/// ```text
/// G_p(z) = 1 - p^-2 + sum_{j=2}^{j_cutoff} z^(a_j) (p^-j - p^-(j+1))
/// ```
///
/// Terms with a_j > M cannot touch degrees <= M and are skipped.
pub fn log_factor_series(
    p: u64,
    weights: &MultiplicityWeights,
    degree: usize,
    j_cutoff: u32,
) -> Result<Vec<f64>> {
    if !weights.nonneg() {
        return Err(Error::UnsupportedWeights(
            "the generating-function route needs nonnegative weights; use the \
             powerful-number sum for signed sequences"
                .into(),
        ));
    }
    let g = factor_poly(p, weights, degree, j_cutoff);
    Ok(series_log(&g))
}

/// G_p(z) mod z^(degree+1) as plain coefficients.
fn factor_poly(p: u64, weights: &MultiplicityWeights, degree: usize, j_cutoff: u32) -> Vec<f64> {
    let pf = p as f64;
    let mut g = vec![0.0f64; degree + 1];
    g[0] = 1.0 - 1.0 / (pf * pf);
    for j in 2..=j_cutoff {
        let term = (pf - 1.0) / pf.powi(j as i32 + 1);
        if term < TERM_FLOOR {
            break;
        }
        let a = weights.weight_of_multiplicity(j as u64);
        debug_assert!(a >= 0);
        if (a as usize) <= degree {
            g[a as usize] += term;
        }
    }
    g
}

/// Formal power-series logarithm: l_0 = ln g_0 and
/// l_n = (n g_n - sum_{t=1}^{n-1} t l_t g_{n-t}) / (n g_0).
fn series_log(g: &[f64]) -> Vec<f64> {
    let m = g.len() - 1;
    let mut ell = vec![0.0f64; m + 1];
    ell[0] = g[0].ln();
    for n in 1..=m {
        let mut acc = n as f64 * g[n];
        for t in 1..n {
            acc -= t as f64 * ell[t] * g[n - t];
        }
        ell[n] = acc / (n as f64 * g[0]);
    }
    ell
}

/// Sums per-prime log-series over the table with the deterministic
/// reduction, one compensated accumulator per coefficient.
fn sum_log_factor_series(
    weights: &MultiplicityWeights,
    degree: usize,
    primes: &PrimeTable,
    j_cutoff: u32,
) -> Result<Vec<f64>> {
    if !weights.nonneg() {
        return Err(Error::UnsupportedWeights(
            "the generating-function route needs nonnegative weights; use the \
             powerful-number sum for signed sequences"
                .into(),
        ));
    }
    let ps = primes.primes();
    let mut out = Vec::with_capacity(degree + 1);
    let series: Vec<Vec<f64>> = {
        use rayon::prelude::*;
        let n_chunks = ps.len().div_ceil(crate::sum::CHUNK);
        let partials: Vec<Vec<f64>> = (0..n_chunks)
            .into_par_iter()
            .map(|c| {
                let lo = c * crate::sum::CHUNK;
                let hi = ((c + 1) * crate::sum::CHUNK).min(ps.len());
                let mut acc: Vec<KahanSum> = vec![KahanSum::new(); degree + 1];
                for &p in &ps[lo..hi] {
                    let ell = series_log(&factor_poly(p, weights, degree, j_cutoff));
                    for (a, l) in acc.iter_mut().zip(ell) {
                        a.add(l);
                    }
                }
                acc.into_iter().map(|a| a.value()).collect()
            })
            .collect();
        partials
    };
    for d in 0..=degree {
        let mut acc = KahanSum::new();
        for chunk in &series {
            acc.add(chunk[d]);
        }
        out.push(acc.value());
    }
    Ok(out)
}

/// Densities of omega_A = m for any nonnegative integer weight sequence,
/// via per-prime factor logarithms and the same recursion.
pub fn densities_omega_a(
    weights: &MultiplicityWeights,
    m_max: usize,
    primes: &PrimeTable,
    j_cutoff: u32,
) -> Result<DensitySeries> {
    let ell = sum_log_factor_series(weights, m_max, primes, j_cutoff)?;
    let e0 = ell[0].exp();
    let stilde: Vec<f64> = (1..=m_max).map(|n| n as f64 * ell[n]).collect();
    let cache = PrimeSumCache { stilde, prime_limit: primes.limit() };
    let reachable = weights.reachable_targets_within(m_max, primes.primes().len())?;
    let (values, flags) = run_recursion(e0, &cache, m_max, F64_DIGITS, &reachable)?;
    let mass = mass_beyond_budget(weights, m_max, primes, j_cutoff, &values);
    let k_eff = weights.min_nonzero_j();
    let tail = k_eff.map_or(0.0, |k| prime_tail_estimate(k, primes.limit()));
    Ok(DensitySeries::from_parts(
        weights.clone(),
        values,
        flags,
        primes.limit(),
        Some(j_cutoff),
        tail,
        mass,
        F64_DIGITS,
    ))
}

/// log of the truncated product at a real point r > 0, or None when a
/// factor is nonpositive or not finite there. The generic accumulation
/// uses the same j_cutoff as the coefficient machinery, so bounds derived
/// from this value are valid for the computed coefficient sequence.
fn log_genfun_real(
    weights: &MultiplicityWeights,
    r: f64,
    primes: &PrimeTable,
    j_cutoff: u32,
) -> Option<f64> {
    let ps = primes.primes();
    let closed_k = weights.as_single_omega_k();
    // The tail of a factor sum past j is at most p^-(j+1) times r to the
    // largest weight still ahead, so a suffix maximum of the weights turns
    // the stop threshold into a per-step check.
    let r_pow_from = {
        let mut max_from = vec![0i64; j_cutoff as usize + 2];
        for j in (2..=j_cutoff as usize).rev() {
            max_from[j] = max_from[j + 1].max(weights.weight_of_multiplicity(j as u64));
        }
        max_from.iter().map(|&a| r.powi(a as i32)).collect::<Vec<f64>>()
    };
    let sum = parallel_kahan_sum(ps.len(), |i| {
        let p = ps[i] as f64;
        let factor = match closed_k {
            Some(k) => 1.0 + (p - 1.0) * (r - 1.0) / p.powi(k as i32 + 1),
            None => {
                let mut f = 1.0 - 1.0 / (p * p);
                for j in 2..=j_cutoff {
                    let term = (p - 1.0) / p.powi(j as i32 + 1);
                    let a = weights.weight_of_multiplicity(j as u64);
                    f += r.powi(a as i32) * term;
                    if term / (p - 1.0) * r_pow_from[j as usize + 1] < MASS_TAIL_FLOOR {
                        break;
                    }
                }
                f
            }
        };
        if factor <= 0.0 || !factor.is_finite() {
            f64::NAN
        } else {
            factor.ln()
        }
    });
    sum.is_finite().then_some(sum)
}

/// Bound on the coefficient mass at targets beyond m_max: the best
/// P(r) / r^(m_max+1) over the radius grid, falling back to the raw
/// normalization gap when no radius is usable.
pub fn mass_beyond_budget(
    weights: &MultiplicityWeights,
    m_max: usize,
    primes: &PrimeTable,
    j_cutoff: u32,
    values: &[f64],
) -> f64 {
    let mut best = f64::INFINITY;
    for r in MASS_BOUND_RADII {
        if let Some(log_p) = log_genfun_real(weights, r, primes, j_cutoff) {
            let bound = (log_p - (m_max as f64 + 1.0) * r.ln()).exp();
            best = best.min(bound);
        }
    }
    if best.is_finite() {
        best
    } else {
        let mut acc = KahanSum::new();
        for &v in values {
            acc.add(v);
        }
        (1.0 - acc.value()).max(0.0)
    }
}

/// One Euler factor at a complex point, via the same truncated
/// accumulation the coefficient machinery uses. Single-multiplicity
/// weights take the exact closed form 1 + (p-1)(z-1)/p^(k+1).
pub fn factor_value(
    p: u64,
    weights: &MultiplicityWeights,
    z: Complex64,
    j_cutoff: u32,
) -> Result<Complex64> {
    if !weights.nonneg() {
        return Err(Error::UnsupportedWeights(
            "generating-function evaluation needs nonnegative weights".into(),
        ));
    }
    let pf = p as f64;
    Ok(match weights.as_single_omega_k() {
        Some(k) => Complex64::new(1.0, 0.0) + (z - 1.0) * ((pf - 1.0) / pf.powi(k as i32 + 1)),
        None => {
            let floor = if z.norm() <= 1.0 { TERM_FLOOR } else { 0.0 };
            let mut f = Complex64::new(1.0 - 1.0 / (pf * pf), 0.0);
            for j in 2..=j_cutoff {
                let term = (pf - 1.0) / pf.powi(j as i32 + 1);
                if term <= floor {
                    break;
                }
                let a = weights.weight_of_multiplicity(j as u64);
                f += z.powi(a as i32) * term;
            }
            f
        }
    })
}

/// The truncated generating function at a complex point. Admissible points
/// are |z| <= 1 plus the whole real axis, where the product still converges
/// and real z > 1 feeds the growth diagnostics; a real z far enough left to
/// kill a factor is rejected as singular. At z = 1 every full factor is 1
/// by normalization, so the product is returned as exactly 1.
pub fn evaluate_genfun(
    weights: &MultiplicityWeights,
    z: Complex64,
    primes: &PrimeTable,
    j_cutoff: u32,
) -> Result<Complex64> {
    if !weights.nonneg() {
        return Err(Error::UnsupportedWeights(
            "generating-function evaluation needs nonnegative weights".into(),
        ));
    }
    if z.norm() > 1.0 + 1e-12 && z.im != 0.0 {
        return Err(Error::InvalidArgument(format!(
            "evaluation point must have |z| <= 1 or be real, got {z}"
        )));
    }
    if z == Complex64::new(1.0, 0.0) {
        return Ok(Complex64::new(1.0, 0.0));
    }
    let mut product = Complex64::new(1.0, 0.0);
    for &p in primes.primes() {
        let factor = factor_value(p, weights, z, j_cutoff)?;
        if factor.norm() == 0.0 {
            return Err(Error::SingularEvaluation(format!(
                "factor at p = {p} vanishes at z = {z}"
            )));
        }
        product *= factor;
    }
    Ok(product)
}

/// Expectation and variance of the limiting distribution of omega_k:
/// E = sum_p (p-1)/p^(k+1) and V = sum_p E_p (1 - E_p).
pub fn expectation_variance_omega_k(k: u32, primes: &PrimeTable) -> Result<(f64, f64)> {
    check_k(k)?;
    let ps = primes.primes();
    let e = parallel_kahan_sum(ps.len(), |i| {
        let p = ps[i] as f64;
        (p - 1.0) / p.powi(k as i32 + 1)
    });
    let v = parallel_kahan_sum(ps.len(), |i| {
        let p = ps[i] as f64;
        let ep = (p - 1.0) / p.powi(k as i32 + 1);
        ep * (1.0 - ep)
    });
    Ok((e, v))
}

/// Expectation of omega_A: sum_p sum_{j=2}^{j_cutoff} a_j (p^-j - p^-(j+1)).
/// Every representable tail rule converges, so no divergence flag is needed.
pub fn expectation_omega_a(
    weights: &MultiplicityWeights,
    primes: &PrimeTable,
    j_cutoff: u32,
) -> Result<f64> {
    if !weights.nonneg() {
        return Err(Error::UnsupportedWeights(
            "expectation via the series route needs nonnegative weights".into(),
        ));
    }
    let ps = primes.primes();
    Ok(parallel_kahan_sum(ps.len(), |i| {
        let p = ps[i] as f64;
        let mut acc = 0.0;
        for j in 2..=j_cutoff {
            let term = (p - 1.0) / p.powi(j as i32 + 1);
            if term < TERM_FLOOR {
                break;
            }
            acc += weights.weight_of_multiplicity(j as u64) as f64 * term;
        }
        acc
    }))
}

/// Expectation and variance of omega_A. Per prime, the multiplicity of p
/// lands on j with probability (p-1)/p^(j+1), contributing a_j; the primes
/// are independent in the limiting model, so variances add.
pub fn expectation_variance_omega_a(
    weights: &MultiplicityWeights,
    primes: &PrimeTable,
    j_cutoff: u32,
) -> Result<(f64, f64)> {
    if !weights.nonneg() {
        return Err(Error::UnsupportedWeights(
            "moments via the series route need nonnegative weights".into(),
        ));
    }
    let ps = primes.primes();
    let e = expectation_omega_a(weights, primes, j_cutoff)?;
    let v = parallel_kahan_sum(ps.len(), |i| {
        let p = ps[i] as f64;
        let mut first = 0.0;
        let mut second = 0.0;
        for j in 2..=j_cutoff {
            let term = (p - 1.0) / p.powi(j as i32 + 1);
            if term < TERM_FLOOR {
                break;
            }
            let a = weights.weight_of_multiplicity(j as u64) as f64;
            first += a * term;
            second += a * a * term;
        }
        second - first * first
    });
    Ok((e, v))
}
