//! Software floating point backend for deep coefficients.
//!
//! Binary64 resolves e[m] reliably only to m around 12 for k = 2; beyond
//! that the recursion's largest term buries the answer in rounding noise.
//! This module reruns the same pipeline with `astro_float` significands
//! wide enough for the requested decimal digits, using per-family closed
//! forms for the prime sums so no transcendental kernels are needed.

use astro_float::{BigFloat, RoundingMode, Sign};

use crate::density::{CoeffFlag, DensitySeries};
use crate::error::{Error, Result};
use crate::primes::PrimeTable;
use crate::sum::KahanSum;
use crate::weights::{MultiplicityWeights, Tail};

/// Hard cap on requested decimal digits; beyond this the significand
/// allocation stops being a sensible diagnostic tool.
pub const MAX_DIGITS: u32 = 1000;

const MIN_DIGITS: u32 = 10;

struct HpCtx {
    bits: usize,
    rm: RoundingMode,
    digits: u32,
}

impl HpCtx {
    fn new(digits: u32) -> Result<Self> {
        if !(MIN_DIGITS..=MAX_DIGITS).contains(&digits) {
            return Err(Error::InvalidArgument(format!(
                "precision must be between {MIN_DIGITS} and {MAX_DIGITS} \
                 decimal digits, got {digits}"
            )));
        }
        let bits = (digits as f64 * std::f64::consts::LOG2_10).ceil() as usize + 64;
        Ok(Self { bits, rm: RoundingMode::ToEven, digits })
    }

    fn uint(&self, v: u64) -> BigFloat {
        BigFloat::from_u64(v, self.bits)
    }

    fn zero(&self) -> BigFloat {
        BigFloat::from_u64(0, self.bits)
    }

    fn one(&self) -> BigFloat {
        BigFloat::from_u64(1, self.bits)
    }

    fn add(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.add(b, self.bits, self.rm)
    }

    fn sub(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.sub(b, self.bits, self.rm)
    }

    fn mul(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.mul(b, self.bits, self.rm)
    }

    fn div(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.div(b, self.bits, self.rm)
    }

    fn neg(&self, a: &BigFloat) -> BigFloat {
        self.zero().sub(a, self.bits, self.rm)
    }

    fn powi(&self, a: &BigFloat, n: usize) -> BigFloat {
        a.powi(n, self.bits, self.rm)
    }
}

fn exp_of(x: &BigFloat) -> Option<i32> {
    if x.is_zero() {
        return None;
    }
    x.as_raw_parts().map(|(_, _, _, e, _)| e)
}

fn is_neg(x: &BigFloat) -> bool {
    !x.is_zero() && matches!(x.as_raw_parts(), Some((_, _, Sign::Neg, _, _)))
}

/// Round-to-nearest conversion through the top two significand words.
pub(crate) fn to_f64(x: &BigFloat) -> f64 {
    if x.is_zero() {
        return 0.0;
    }
    let Some((words, _, sign, e, _)) = x.as_raw_parts() else {
        return f64::NAN;
    };
    let hi = *words.last().unwrap();
    let lo = if words.len() >= 2 { words[words.len() - 2] } else { 0 };
    let frac = (hi as f64) * 2f64.powi(-64) + (lo as f64) * 2f64.powi(-128);
    let v = frac * 2f64.powi(e);
    if sign == Sign::Neg {
        -v
    } else {
        v
    }
}

/// log10 |x| without leaving the exponent range of f64; usable far below
/// the binary64 underflow threshold.
pub(crate) fn log10_abs(x: &BigFloat) -> f64 {
    if x.is_zero() {
        return f64::NEG_INFINITY;
    }
    let Some((words, _, _, e, _)) = x.as_raw_parts() else {
        return f64::NAN;
    };
    let hi = *words.last().unwrap();
    let lo = if words.len() >= 2 { words[words.len() - 2] } else { 0 };
    let frac = (hi as f64) * 2f64.powi(-64) + (lo as f64) * 2f64.powi(-128);
    (frac.ln() + e as f64 * std::f64::consts::LN_2) / std::f64::consts::LN_10
}

/// A density series carried at extended precision. `values` are the
/// nearest binary64 renderings; `log10_values` stay meaningful when the
/// coefficients drop below the binary64 underflow threshold.
#[derive(Clone, Debug)]
pub struct HpSeries {
    weights: MultiplicityWeights,
    values: Vec<f64>,
    log10_values: Vec<f64>,
    flags: Vec<CoeffFlag>,
    precision_digits: u32,
    prime_limit: u64,
    series_degree: Option<u32>,
}

impl HpSeries {
    pub fn weights(&self) -> &MultiplicityWeights {
        &self.weights
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// log10 e[m]; NEG_INFINITY at exact zeros.
    pub fn log10_values(&self) -> &[f64] {
        &self.log10_values
    }

    pub fn flags(&self) -> &[CoeffFlag] {
        &self.flags
    }

    pub fn m_max(&self) -> usize {
        self.values.len() - 1
    }

    pub fn precision_digits(&self) -> u32 {
        self.precision_digits
    }

    pub fn prime_limit(&self) -> u64 {
        self.prime_limit
    }

    /// Repackages as a DensitySeries with freshly computed budgets so the
    /// CLI renders one shape regardless of backend.
    pub fn to_density_series(&self, primes: &PrimeTable) -> DensitySeries {
        let m_max = self.m_max();
        let mass = crate::density::mass_beyond_budget(
            &self.weights,
            m_max,
            primes,
            crate::density::DEFAULT_J_CUTOFF,
            &self.values,
        );
        let tail = self
            .weights
            .min_nonzero_j()
            .map_or(0.0, |k| crate::density::prime_tail_estimate(k, primes.limit()));
        DensitySeries::from_parts(
            self.weights.clone(),
            self.values.clone(),
            self.flags.clone(),
            self.prime_limit,
            self.series_degree,
            tail,
            mass,
            self.precision_digits,
        )
    }
}

/// Which closed form carries the per-prime work.
enum HpKind {
    OmegaK(u32),
    Renyi,
    ZeroOne(OnesPattern),
    Generic,
}

/// Multiplicities carrying weight 1 for a {0,1}-valued sequence.
struct OnesPattern {
    explicit: Vec<u32>,
    tail: TailOnes,
}

enum TailOnes {
    None,
    AllFrom(u32),
    Residues { j0: u32, period: u32, ones: Vec<u32> },
}

fn classify(w: &MultiplicityWeights) -> HpKind {
    if let Some(k) = w.as_single_omega_k() {
        return HpKind::OmegaK(k);
    }
    if is_renyi_shape(w) {
        return HpKind::Renyi;
    }
    if let Some(pattern) = zero_one_pattern(w) {
        return HpKind::ZeroOne(pattern);
    }
    HpKind::Generic
}

fn is_renyi_shape(w: &MultiplicityWeights) -> bool {
    if *w.tail() != (Tail::Affine { alpha: 1, beta: -1 }) {
        return false;
    }
    w.explicit().iter().enumerate().all(|(i, &a)| a == i as i64 + 1)
}

fn zero_one_pattern(w: &MultiplicityWeights) -> Option<OnesPattern> {
    if w.explicit().iter().any(|&a| a != 0 && a != 1) {
        return None;
    }
    let explicit: Vec<u32> = w
        .explicit()
        .iter()
        .enumerate()
        .filter(|(_, &a)| a == 1)
        .map(|(i, _)| i as u32 + 2)
        .collect();
    let j0 = w.explicit_end() as u32 + 1;
    let tail = match w.tail() {
        Tail::Zero | Tail::Const(0) => TailOnes::None,
        Tail::Const(1) => TailOnes::AllFrom(j0),
        Tail::Const(_) => return None,
        Tail::Periodic(values) => {
            if values.iter().any(|&c| c != 0 && c != 1) {
                return None;
            }
            let ones: Vec<u32> = values
                .iter()
                .enumerate()
                .filter(|(_, &c)| c == 1)
                .map(|(i, _)| i as u32)
                .collect();
            if ones.is_empty() {
                TailOnes::None
            } else {
                TailOnes::Residues { j0, period: values.len() as u32, ones }
            }
        }
        Tail::Affine { alpha: 0, beta: 0 } => TailOnes::None,
        Tail::Affine { alpha: 0, beta: 1 } => TailOnes::AllFrom(j0),
        Tail::Affine { .. } => return None,
    };
    Some(OnesPattern { explicit, tail })
}

/// e[0] and S~(1..=m_max) at extended precision.
fn prime_sums(
    ctx: &HpCtx,
    weights: &MultiplicityWeights,
    m_max: usize,
    primes: &PrimeTable,
) -> Result<(BigFloat, Vec<BigFloat>, Option<u32>)> {
    match classify(weights) {
        HpKind::OmegaK(k) => {
            let (e0, st) = sums_via_ratio(ctx, m_max, primes, |p| {
                let p_bf = ctx.uint(p);
                let pm1 = ctx.uint(p - 1);
                let mut pk1 = p_bf.clone();
                for _ in 0..k {
                    pk1 = ctx.mul(&pk1, &p_bf);
                }
                let base = ctx.sub(&ctx.div(&pk1, &pm1), &ctx.one());
                ctx.div(&ctx.one(), &base)
            });
            Ok((e0, st, None))
        }
        HpKind::ZeroOne(pattern) => {
            let (e0, st) = sums_via_ratio(ctx, m_max, primes, |p| {
                let c = zero_one_c(ctx, p, &pattern);
                let denom = ctx.sub(&ctx.one(), &c);
                ctx.div(&c, &denom)
            });
            Ok((e0, st, None))
        }
        HpKind::Renyi => Ok(sums_renyi(ctx, m_max, primes)),
        HpKind::Generic => sums_generic(ctx, weights, m_max, primes),
    }
}

/// Shared accumulation for factor shapes (1 - c) + c z, which have
/// G_p = (1 - c)(1 + q z) with q = c/(1-c), so S~(n) = (-1)^(n-1) sum q^n
/// and the constant term contributes 1/(1 + q) = 1 - c to e[0].
fn sums_via_ratio(
    ctx: &HpCtx,
    m_max: usize,
    primes: &PrimeTable,
    ratio: impl Fn(u64) -> BigFloat,
) -> (BigFloat, Vec<BigFloat>) {
    let guard_bits = ((ctx.digits + 8) as f64 * std::f64::consts::LOG2_10).ceil() as i64;
    let mut e0 = ctx.one();
    let mut acc: Vec<BigFloat> = vec![ctx.zero(); m_max];
    let mut scale_per_n: i64 = 0;
    for (idx, &p) in primes.primes().iter().enumerate() {
        let q = ratio(p);
        let factor = ctx.sub(&ctx.one(), &ctx.div(&q, &ctx.add(&ctx.one(), &q)));
        e0 = ctx.mul(&e0, &factor);
        if q.is_zero() {
            continue;
        }
        if idx == 0 {
            scale_per_n = exp_of(&q).unwrap() as i64;
        }
        let mut pow = q.clone();
        if m_max >= 1 {
            acc[0] = ctx.add(&acc[0], &pow);
        }
        for n in 2..=m_max {
            pow = ctx.mul(&pow, &q);
            let cutoff = scale_per_n * n as i64 - guard_bits;
            match exp_of(&pow) {
                Some(e) if (e as i64) >= cutoff => acc[n - 1] = ctx.add(&acc[n - 1], &pow),
                _ => break,
            }
        }
    }
    let stilde = acc
        .into_iter()
        .enumerate()
        .map(|(i, s)| if i % 2 == 1 { ctx.neg(&s) } else { s })
        .collect();
    (e0, stilde)
}

/// c_p = sum over weight-1 multiplicities j of (p-1)/p^(j+1), with the
/// tail families summed in closed form (all exact geometric series).
fn zero_one_c(ctx: &HpCtx, p: u64, pattern: &OnesPattern) -> BigFloat {
    let p_bf = ctx.uint(p);
    let pm1 = ctx.uint(p - 1);
    let mut c = ctx.zero();
    for &j in &pattern.explicit {
        let denom = ctx.powi(&p_bf, j as usize + 1);
        c = ctx.add(&c, &ctx.div(&pm1, &denom));
    }
    match &pattern.tail {
        TailOnes::None => {}
        TailOnes::AllFrom(j0) => {
            let term = ctx.div(&ctx.one(), &ctx.powi(&p_bf, *j0 as usize));
            c = ctx.add(&c, &term);
        }
        TailOnes::Residues { j0, period, ones } => {
            let pr = ctx.powi(&p_bf, *period as usize);
            let geo = ctx.div(&pr, &ctx.sub(&pr, &ctx.one()));
            for &i in ones {
                let denom = ctx.powi(&p_bf, (*j0 + i) as usize + 1);
                let term = ctx.mul(&ctx.div(&pm1, &denom), &geo);
                c = ctx.add(&c, &term);
            }
        }
    }
    c
}

/// G_p = (1 - 1/p)(1 + 1/(p - z)) gives l_n = (p^-n - (p+1)^-n)/n, so
/// S~(n) = p^-n - (p+1)^-n summed over primes, and the factor at zero is
/// 1 - p^-2.
fn sums_renyi(ctx: &HpCtx, m_max: usize, primes: &PrimeTable) -> (BigFloat, Vec<BigFloat>, Option<u32>) {
    let guard_bits = ((ctx.digits + 8) as f64 * std::f64::consts::LOG2_10).ceil() as i64;
    let mut e0 = ctx.one();
    let mut acc: Vec<BigFloat> = vec![ctx.zero(); m_max];
    for &p in primes.primes() {
        let p2 = ctx.uint(p * p);
        let factor = ctx.div(&ctx.sub(&p2, &ctx.one()), &p2);
        e0 = ctx.mul(&e0, &factor);
        let u = ctx.div(&ctx.one(), &ctx.uint(p));
        let v = ctx.div(&ctx.one(), &ctx.uint(p + 1));
        let mut pu = u.clone();
        let mut pv = v.clone();
        if m_max >= 1 {
            acc[0] = ctx.add(&acc[0], &ctx.sub(&pu, &pv));
        }
        for n in 2..=m_max {
            pu = ctx.mul(&pu, &u);
            pv = ctx.mul(&pv, &v);
            let cutoff = -(n as i64) - guard_bits;
            match exp_of(&pu) {
                Some(e) if (e as i64) >= cutoff => {
                    acc[n - 1] = ctx.add(&acc[n - 1], &ctx.sub(&pu, &pv));
                }
                _ => break,
            }
        }
    }
    (e0, acc, None)
}

/// Generic nonnegative weights: per-prime factor polynomial and formal
/// series logarithm, all at working precision. The multiplicity cutoff
/// scales with the digit request. Slower than the closed forms; meant for
/// custom weight shapes at moderate prime limits.
fn sums_generic(
    ctx: &HpCtx,
    weights: &MultiplicityWeights,
    m_max: usize,
    primes: &PrimeTable,
) -> Result<(BigFloat, Vec<BigFloat>, Option<u32>)> {
    let j_cutoff = (ctx.digits as f64 * std::f64::consts::LOG2_10).ceil() as u32 + 20;
    let underflow = -((ctx.bits + 64) as i64);
    let mut e0 = ctx.one();
    let mut acc_ell: Vec<BigFloat> = vec![ctx.zero(); m_max];
    for &p in primes.primes() {
        let p_bf = ctx.uint(p);
        let inv_p = ctx.div(&ctx.one(), &p_bf);
        let one_minus_inv_p = ctx.sub(&ctx.one(), &inv_p);
        let p2 = ctx.uint(p * p);
        let mut g: Vec<BigFloat> = vec![ctx.zero(); m_max + 1];
        g[0] = ctx.div(&ctx.sub(&p2, &ctx.one()), &p2);
        let mut pj = ctx.div(&ctx.one(), &p2);
        for j in 2..=j_cutoff {
            let term = ctx.mul(&pj, &one_minus_inv_p);
            let a = weights.weight_of_multiplicity(j as u64);
            debug_assert!(a >= 0);
            if (a as usize) <= m_max {
                g[a as usize] = ctx.add(&g[a as usize], &term);
            }
            pj = ctx.mul(&pj, &inv_p);
            match exp_of(&pj) {
                Some(e) if (e as i64) >= underflow => {}
                _ => break,
            }
        }
        e0 = ctx.mul(&e0, &g[0]);
        let mut ell: Vec<BigFloat> = vec![ctx.zero(); m_max + 1];
        for n in 1..=m_max {
            let mut num = ctx.mul(&ctx.uint(n as u64), &g[n]);
            for t in 1..n {
                let prod = ctx.mul(&ctx.mul(&ctx.uint(t as u64), &ell[t]), &g[n - t]);
                num = ctx.sub(&num, &prod);
            }
            ell[n] = ctx.div(&num, &ctx.mul(&ctx.uint(n as u64), &g[0]));
            acc_ell[n - 1] = ctx.add(&acc_ell[n - 1], &ell[n]);
        }
    }
    let stilde = acc_ell
        .iter()
        .enumerate()
        .map(|(i, l)| ctx.mul(&ctx.uint(i as u64 + 1), l))
        .collect();
    Ok((e0, stilde, Some(j_cutoff)))
}

/// The coefficient recursion at extended precision, with the same noise
/// floor rule as the binary64 engine: a coefficient below
/// max-term * 10^-(digits-1) is unresolved.
fn hp_recursion(
    ctx: &HpCtx,
    e0: BigFloat,
    stilde: &[BigFloat],
    m_max: usize,
    reachable: &[bool],
) -> Result<(Vec<BigFloat>, Vec<CoeffFlag>)> {
    let floor_shift = ((ctx.digits - 1) as f64 * std::f64::consts::LOG2_10).ceil() as i64;
    let mut values: Vec<BigFloat> = Vec::with_capacity(m_max + 1);
    let mut flags = Vec::with_capacity(m_max + 1);
    values.push(e0);
    flags.push(CoeffFlag::Normal);
    for m in 1..=m_max {
        let mut acc = ctx.zero();
        let mut max_exp: Option<i64> = None;
        for j in 0..m {
            let t = ctx.mul(&values[j], &stilde[m - 1 - j]);
            if let Some(e) = exp_of(&t) {
                let e = e as i64;
                max_exp = Some(max_exp.map_or(e, |cur| cur.max(e)));
            }
            acc = ctx.add(&acc, &t);
        }
        let v = ctx.div(&acc, &ctx.uint(m as u64));
        if v.is_zero() {
            values.push(ctx.zero());
            flags.push(if reachable[m] {
                CoeffFlag::Normal
            } else {
                CoeffFlag::StructuralZero
            });
            continue;
        }
        let v_exp = exp_of(&v).unwrap() as i64;
        if let Some(me) = max_exp {
            if v_exp < me - floor_shift {
                if !reachable[m] {
                    values.push(ctx.zero());
                    flags.push(CoeffFlag::StructuralZero);
                    continue;
                }
                return Err(Error::PrecisionExhausted(format!(
                    "e[{m}] is below the rounding noise of the recursion at \
                     {} digits; increase precision",
                    ctx.digits
                )));
            }
        }
        if is_neg(&v) {
            return Err(Error::PrecisionExhausted(format!(
                "e[{m}] came out negative beyond the noise floor at {} digits",
                ctx.digits
            )));
        }
        values.push(v);
        flags.push(CoeffFlag::Normal);
    }
    Ok((values, flags))
}

/// Density run at `digits` decimal digits of working precision.
pub fn densities_hp(
    weights: &MultiplicityWeights,
    m_max: usize,
    digits: u32,
    primes: &PrimeTable,
) -> Result<HpSeries> {
    if !weights.nonneg() {
        return Err(Error::UnsupportedWeights(
            "the generating-function route needs nonnegative weights; use the \
             powerful-number sum for signed sequences"
                .into(),
        ));
    }
    let ctx = HpCtx::new(digits)?;
    let (e0, stilde, series_degree) = prime_sums(&ctx, weights, m_max, primes)?;
    let reachable = weights.reachable_targets_within(m_max, primes.primes().len())?;
    let (values_bf, flags) = hp_recursion(&ctx, e0, &stilde, m_max, &reachable)?;
    let values: Vec<f64> = values_bf.iter().map(to_f64).collect();
    let log10_values: Vec<f64> = values_bf.iter().map(log10_abs).collect();
    Ok(HpSeries {
        weights: weights.clone(),
        values,
        log10_values,
        flags,
        precision_digits: digits,
        prime_limit: primes.limit(),
        series_degree,
    })
}

/// Sum of the rendered values, for normalization checks.
pub fn hp_series_sum(series: &HpSeries) -> f64 {
    let mut acc = KahanSum::new();
    for &v in series.values() {
        acc.add(v);
    }
    acc.value()
}
