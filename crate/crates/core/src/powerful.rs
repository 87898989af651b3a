//! Powerful numbers and the closed-form density sums over them.
//!
//! Every powerful number is a^2 * b^3 with b squarefree, and that
//! representation is unique; enumeration walks (a, b) pairs and composes
//! factorizations from the parts, so no integer is ever factored from
//! scratch. A hash set guards against duplicates all the same, keeping the
//! no-duplicates invariant independent of the uniqueness argument.

use std::collections::{BTreeMap, HashSet};

use crate::arith::{omega_a, Factorization};
use crate::error::{Error, Result};
use crate::sum::parallel_kahan_sum;
use crate::weights::MultiplicityWeights;

/// 6 / pi^2, the density of squarefree numbers and the outer constant of
/// every powerful-number density sum.
pub const SIX_OVER_PI_SQUARED: f64 = 6.0 / (std::f64::consts::PI * std::f64::consts::PI);

/// zeta(3/2) / zeta(3): the constant in Golomb's count of powerful numbers
/// up to y, ~ c * sqrt(y). Digits frozen from an independent
/// high-precision evaluation.
pub const GOLOMB_C: f64 = 2.1732543125195541;

/// All powerful numbers up to a bound, with factorizations, increasing.
#[derive(Clone, Debug)]
pub struct PowerfulStream {
    x_bound: u64,
    items: Vec<(u64, Factorization)>,
}

impl PowerfulStream {
    pub fn x_bound(&self) -> u64 {
        self.x_bound
    }

    pub fn items(&self) -> &[(u64, Factorization)] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }
}

/// One powerful-number density sum: the partial sum over f <= X with
/// omega_A(f) = m, plus a rigorous bound on the discarded f > X mass.
#[derive(Clone, Copy, Debug)]
pub struct PowerfulSumResult {
    pub m: i64,
    pub x_bound: u64,
    /// (6/pi^2) * sum over matching f <= X of (1/f) * prod_{p|f} (1+1/p)^-1.
    pub partial_sum: f64,
    /// Upper bound on the total f > X contribution (all targets combined),
    /// so partial_sum <= true density <= partial_sum + tail_bound.
    pub tail_bound: f64,
    pub matched_count: u64,
}

/// Enumerates the powerful numbers f <= x, each with its factorization.
pub fn powerful_up_to(x: u64) -> Result<PowerfulStream> {
    if x == 0 {
        return Err(Error::InvalidArgument("powerful bound must be >= 1".into()));
    }
    let mut seen: HashSet<u64> = HashSet::new();
    let mut items: Vec<(u64, Factorization)> = Vec::new();
    let mut b = 1u64;
    while (b as u128).pow(3) <= x as u128 {
        if let Some(b_factors) = factor_if_squarefree(b) {
            let b3 = b * b * b;
            let mut a = 1u64;
            while (a as u128).pow(2) <= (x / b3) as u128 {
                let f = a * a * b3;
                if seen.insert(f) {
                    let factors = compose(a, &b_factors);
                    items.push((f, Factorization::from_parts(f, factors)));
                }
                a += 1;
            }
        }
        b += 1;
    }
    items.sort_unstable_by_key(|&(f, _)| f);
    Ok(PowerfulStream { x_bound: x, items })
}

/// Trial-divides b; returns its factorization only when b is squarefree.
fn factor_if_squarefree(mut b: u64) -> Option<Vec<(u64, u32)>> {
    let mut factors = Vec::new();
    let mut d = 2u64;
    while d * d <= b {
        if b % d == 0 {
            b /= d;
            if b % d == 0 {
                return None;
            }
            factors.push((d, 1));
        }
        d += 1;
    }
    if b > 1 {
        factors.push((b, 1));
    }
    Some(factors)
}

/// Merges the exponents of a^2 and b^3 into one factor list:
/// multiplicity = 2 * mult_in_a + 3 * mult_in_b.
fn compose(a: u64, b_factors: &[(u64, u32)]) -> Vec<(u64, u32)> {
    let mut merged: BTreeMap<u64, u32> = b_factors.iter().map(|&(p, _)| (p, 3)).collect();
    let mut rest = a;
    let mut d = 2u64;
    while d * d <= rest {
        while rest % d == 0 {
            rest /= d;
            *merged.entry(d).or_insert(0) += 2;
        }
        d += 1;
    }
    if rest > 1 {
        *merged.entry(rest).or_insert(0) += 2;
    }
    merged.into_iter().collect()
}

/// The summand (1/f) * prod_{p|f} (1 + 1/p)^-1 for one powerful number.
#[inline]
fn summand(f: u64, factorization: &Factorization) -> f64 {
    let mut w = 1.0 / f as f64;
    for &(p, _) in factorization.factors() {
        w *= p as f64 / (p as f64 + 1.0);
    }
    w
}

/// Conservative bound on (6/pi^2) * sum_{f > X powerful} 1/f: the count of
/// powerful numbers up to y is ~ GOLOMB_C * sqrt(y), and partial summation
/// gives sum_{f > X} 1/f <= 2 * GOLOMB_C / sqrt(X); the per-term weight
/// prod (1+1/p)^-1 <= 1 is dropped.
pub fn powerful_tail_bound(x: u64) -> f64 {
    SIX_OVER_PI_SQUARED * 2.0 * GOLOMB_C / (x as f64).sqrt()
}

/// The closed-form density sum for target m, truncated at f <= X.
/// Signed weights are fully supported; an unrealizable m yields a zero
/// partial sum with matched_count = 0.
pub fn density_via_powerful(
    weights: &MultiplicityWeights,
    m: i64,
    x: u64,
) -> Result<PowerfulSumResult> {
    let stream = powerful_up_to(x)?;
    Ok(density_from_stream(&stream, weights, m))
}

/// Same as [`density_via_powerful`] but reusing an enumerated stream.
pub fn density_from_stream(
    stream: &PowerfulStream,
    weights: &MultiplicityWeights,
    m: i64,
) -> PowerfulSumResult {
    let matching: Vec<f64> = stream
        .items()
        .iter()
        .filter(|(_, fac)| omega_a(fac, weights) == m)
        .map(|&(f, ref fac)| summand(f, fac))
        .collect();
    let sum = parallel_kahan_sum(matching.len(), |i| matching[i]);
    PowerfulSumResult {
        m,
        x_bound: stream.x_bound(),
        partial_sum: SIX_OVER_PI_SQUARED * sum,
        tail_bound: powerful_tail_bound(stream.x_bound()),
        matched_count: matching.len() as u64,
    }
}

/// Partial sums for every target realized by some f <= X, keyed by m.
pub fn powerful_histogram(
    weights: &MultiplicityWeights,
    x: u64,
) -> Result<BTreeMap<i64, PowerfulSumResult>> {
    let stream = powerful_up_to(x)?;
    let mut by_m: BTreeMap<i64, Vec<f64>> = BTreeMap::new();
    for (f, fac) in stream.items() {
        by_m.entry(omega_a(fac, weights))
            .or_default()
            .push(summand(*f, fac));
    }
    Ok(by_m
        .into_iter()
        .map(|(m, terms)| {
            let sum = parallel_kahan_sum(terms.len(), |i| terms[i]);
            (
                m,
                PowerfulSumResult {
                    m,
                    x_bound: x,
                    partial_sum: SIX_OVER_PI_SQUARED * sum,
                    tail_bound: powerful_tail_bound(x),
                    matched_count: terms.len() as u64,
                },
            )
        })
        .collect())
}
