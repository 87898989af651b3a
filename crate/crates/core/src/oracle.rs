//! Ground truth by brute force: exact histograms of omega_A over n <= x,
//! exact summatory sums, and exact rational expansion of finite Euler
//! products for validating the coefficient recursion.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::primes::{primes_up_to, PrimeTable, SpfTable};
use crate::sum::CHUNK;
use crate::weights::{MultiplicityWeights, Tail};

/// Guard against exponential coefficient blow-up in the exact expansion.
pub const MAX_EXACT_PRIMES: usize = 25;

/// Exact histogram of omega_A(n) for n <= x.
#[derive(Clone, Debug)]
pub struct CountReport {
    x: u64,
    weights: MultiplicityWeights,
    histogram: BTreeMap<i64, u64>,
}

/// One m-row of a comparison between exact counts and reference densities.
#[derive(Clone, Copy, Debug)]
pub struct Deviation {
    pub m: i64,
    pub count: u64,
    pub empirical: f64,
    pub reference: f64,
    pub abs_dev: f64,
    /// |count - e_m x| / (sqrt(x) log x); no sharp constant for this
    /// deviation is known, so c_hat is reported, never asserted internally.
    pub c_hat: f64,
}

impl CountReport {
    pub fn x(&self) -> u64 {
        self.x
    }

    pub fn weights(&self) -> &MultiplicityWeights {
        &self.weights
    }

    pub fn histogram(&self) -> &BTreeMap<i64, u64> {
        &self.histogram
    }

    pub fn count(&self, m: i64) -> u64 {
        self.histogram.get(&m).copied().unwrap_or(0)
    }

    pub fn density_estimate(&self, m: i64) -> f64 {
        self.count(m) as f64 / self.x as f64
    }

    pub fn deviation_for(&self, m: i64, reference: f64) -> Deviation {
        let count = self.count(m);
        let xf = self.x as f64;
        let abs_err = (count as f64 - reference * xf).abs();
        Deviation {
            m,
            count,
            empirical: count as f64 / xf,
            reference,
            abs_dev: (count as f64 / xf - reference).abs(),
            c_hat: abs_err / (xf.sqrt() * xf.ln()),
        }
    }

    /// Rows for m = 0..reference.len()-1 against a density slice.
    pub fn deviations(&self, reference: &[f64]) -> Vec<Deviation> {
        reference
            .iter()
            .enumerate()
            .map(|(m, &e)| self.deviation_for(m as i64, e))
            .collect()
    }
}

/// Weight lookup dense in the multiplicity; multiplicities of n <= 2^63
/// never exceed 62.
fn weight_lut(weights: &MultiplicityWeights) -> [i64; 64] {
    let mut lut = [0i64; 64];
    for (j, slot) in lut.iter_mut().enumerate().skip(2) {
        *slot = weights.weight_of_multiplicity(j as u64);
    }
    lut
}

#[inline]
fn omega_a_via_spf(n: u64, spf: &SpfTable, lut: &[i64; 64]) -> i64 {
    let mut rest = n;
    let mut total = 0i64;
    while rest > 1 {
        let p = spf.spf(rest);
        let mut mult = 0usize;
        while rest % p == 0 {
            rest /= p;
            mult += 1;
        }
        total += lut[mult];
    }
    total
}

/// Exact histogram of omega_A(n) over 1 <= n <= x via streamed
/// factorization against the smallest-prime-factor table. Segments are
/// counted in parallel and merged by integer addition.
pub fn count_distribution(
    x: u64,
    weights: &MultiplicityWeights,
    spf: &SpfTable,
) -> Result<CountReport> {
    if x < 1 {
        return Err(Error::InvalidArgument("x must be >= 1".into()));
    }
    if x > spf.limit() {
        return Err(Error::OutOfRange(format!(
            "x = {x} exceeds the factor table limit {}",
            spf.limit()
        )));
    }
    let lut = weight_lut(weights);
    let n_chunks = (x as usize).div_ceil(CHUNK);
    let partials: Vec<BTreeMap<i64, u64>> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let lo = (c * CHUNK + 1) as u64;
            let hi = (((c + 1) * CHUNK) as u64).min(x);
            let mut h = BTreeMap::new();
            for n in lo..=hi {
                *h.entry(omega_a_via_spf(n, spf, &lut)).or_insert(0u64) += 1;
            }
            h
        })
        .collect();
    let mut histogram = BTreeMap::new();
    for part in partials {
        for (m, c) in part {
            *histogram.entry(m).or_insert(0) += c;
        }
    }
    Ok(CountReport { x, weights: weights.clone(), histogram })
}

/// Exact sum of omega_k(n) over n <= x by exhaustive factorization.
pub fn summatory_omega_k_exhaustive(x: u64, k: u32, spf: &SpfTable) -> Result<u64> {
    if k < 2 {
        return Err(Error::InvalidArgument("k must be >= 2".into()));
    }
    if x > spf.limit() {
        return Err(Error::OutOfRange(format!(
            "x = {x} exceeds the factor table limit {}",
            spf.limit()
        )));
    }
    let n_chunks = (x as usize).div_ceil(CHUNK);
    let total = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let lo = (c * CHUNK + 1) as u64;
            let hi = (((c + 1) * CHUNK) as u64).min(x);
            let mut acc = 0u64;
            for n in lo..=hi {
                let mut rest = n;
                while rest > 1 {
                    let p = spf.spf(rest);
                    let mut mult = 0u32;
                    while rest % p == 0 {
                        rest /= p;
                        mult += 1;
                    }
                    if mult == k {
                        acc += 1;
                    }
                }
            }
            acc
        })
        .sum();
    Ok(total)
}

/// The same sum by the direct formula sum_p (floor(x/p^k) - floor(x/p^(k+1))),
/// which counts multiples of p^k not divisible by p^(k+1).
pub fn summatory_omega_k_formula(x: u64, k: u32) -> Result<u64> {
    if k < 2 {
        return Err(Error::InvalidArgument("k must be >= 2".into()));
    }
    if x == 0 {
        return Ok(0);
    }
    let root = integer_kth_root(x, k);
    let primes = primes_up_to(root.max(2))?;
    let mut total = 0u64;
    for &p in primes.primes() {
        let pk = (p as u128).pow(k);
        if pk > x as u128 {
            break;
        }
        let pk1 = pk * p as u128;
        let hi = x as u128 / pk;
        let lo = x as u128 / pk1;
        total += (hi - lo) as u64;
    }
    Ok(total)
}

/// Largest r with r^k <= x.
fn integer_kth_root(x: u64, k: u32) -> u64 {
    let mut r = (x as f64).powf(1.0 / k as f64).round() as u64 + 1;
    while r > 1 && (r as u128).pow(k) > x as u128 {
        r -= 1;
    }
    r
}

/// One Euler factor as exact rational coefficients up to degree m_max.
/// Each tail family closes its infinite multiplicity range in exact form:
/// the zero tail telescopes into the constant term, constant tails land on
/// one coefficient, periodic tails are geometric series per residue, and
/// affine tails touch only finitely many degrees <= m_max.
fn exact_factor_poly(
    p: u64,
    weights: &MultiplicityWeights,
    m_max: usize,
) -> Vec<BigRational> {
    let big_p = BigInt::from(p);
    let p_neg = |e: u32| BigRational::new(BigInt::one(), big_p.pow(e));
    let term = |j: u32| p_neg(j) - p_neg(j + 1);
    let mut g = vec![BigRational::zero(); m_max + 1];
    g[0] = BigRational::one() - p_neg(2);
    for (i, &a) in weights.explicit().iter().enumerate() {
        let j = i as u32 + 2;
        if (0..=m_max as i64).contains(&a) {
            g[a as usize] += term(j);
        }
    }
    let j0 = weights.explicit_end() as u32 + 1;
    match weights.tail() {
        Tail::Zero => g[0] += p_neg(j0),
        Tail::Const(c) => {
            if (0..=m_max as i64).contains(c) {
                g[*c as usize] += p_neg(j0);
            }
        }
        Tail::Periodic(values) => {
            let r = values.len() as u32;
            let pr = big_p.pow(r);
            let geo = BigRational::new(pr.clone(), pr - BigInt::one());
            for (i, &a) in values.iter().enumerate() {
                if (0..=m_max as i64).contains(&a) {
                    g[a as usize] += term(j0 + i as u32) * &geo;
                }
            }
        }
        Tail::Affine { alpha, beta } => {
            if *alpha == 0 {
                if (0..=m_max as i64).contains(beta) {
                    g[*beta as usize] += p_neg(j0);
                }
            } else {
                let mut j = j0 as i64;
                loop {
                    let value = alpha * j + beta;
                    if value > m_max as i64 {
                        break;
                    }
                    if value >= 0 {
                        g[value as usize] += term(j as u32);
                    }
                    j += 1;
                }
            }
        }
    }
    g
}

/// Exact Maclaurin coefficients of prod_{p in set} G_p(z) up to degree
/// m_max, in exact rational arithmetic. This is the recursion's oracle.
pub fn expand_product_exact(
    prime_set: &[u64],
    weights: &MultiplicityWeights,
    m_max: usize,
) -> Result<Vec<BigRational>> {
    if prime_set.len() > MAX_EXACT_PRIMES {
        return Err(Error::ResourceLimit(format!(
            "exact expansion is limited to {MAX_EXACT_PRIMES} primes, got {}",
            prime_set.len()
        )));
    }
    if !weights.nonneg() {
        return Err(Error::UnsupportedWeights(
            "exact expansion needs nonnegative weights".into(),
        ));
    }
    let table = PrimeTable::from_primes(prime_set)?;
    let mut acc = vec![BigRational::zero(); m_max + 1];
    acc[0] = BigRational::one();
    for &p in table.primes() {
        let factor = exact_factor_poly(p, weights, m_max);
        let mut next = vec![BigRational::zero(); m_max + 1];
        for (i, a) in acc.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, f) in factor.iter().enumerate() {
                if i + j > m_max {
                    break;
                }
                next[i + j] += a * f;
            }
        }
        acc = next;
    }
    Ok(acc)
}

/// Nearest-f64 views of exact coefficients.
pub fn rationals_to_f64(values: &[BigRational]) -> Vec<f64> {
    values.iter().map(|v| v.to_f64().unwrap_or(f64::NAN)).collect()
}

/// One row of a convergence study at a fixed m.
#[derive(Clone, Copy, Debug)]
pub struct StudyRow {
    pub x: u64,
    pub count: u64,
    pub empirical: f64,
    pub deviation: f64,
    pub c_hat: f64,
}

/// Exact counts against one reference density across an x ladder.
pub fn convergence_study(
    weights: &MultiplicityWeights,
    m: i64,
    xs: &[u64],
    reference: f64,
    spf: &SpfTable,
) -> Result<Vec<StudyRow>> {
    let mut rows = Vec::with_capacity(xs.len());
    for &x in xs {
        let report = count_distribution(x, weights, spf)?;
        let d = report.deviation_for(m, reference);
        rows.push(StudyRow {
            x,
            count: d.count,
            empirical: d.empirical,
            deviation: d.abs_dev,
            c_hat: d.c_hat,
        });
    }
    Ok(rows)
}

/// True iff every |float - exact| is within tol, with equal lengths.
pub fn matches_exact(floats: &[f64], exact: &[BigRational], tol: f64) -> bool {
    floats.len() == exact.len()
        && floats
            .iter()
            .zip(exact)
            .all(|(&f, e)| (f - e.to_f64().unwrap_or(f64::NAN)).abs() <= tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::primes::spf_up_to;

    #[test]
    fn tiny_histogram_omega_2() {
        let spf = spf_up_to(100).unwrap();
        let w = MultiplicityWeights::omega_k(2).unwrap();
        let report = count_distribution(10, &w, &spf).unwrap();
        let mut expected = BTreeMap::new();
        expected.insert(0i64, 8u64);
        expected.insert(1i64, 2u64);
        assert_eq!(report.histogram(), &expected);
    }

    #[test]
    fn tiny_histogram_renyi_squarefree() {
        let spf = spf_up_to(100).unwrap();
        let report = count_distribution(10, &MultiplicityWeights::renyi(), &spf).unwrap();
        assert_eq!(report.count(0), 7);
        assert_eq!(report.count(1), 2);
        assert_eq!(report.count(2), 1);
    }

    #[test]
    fn histogram_at_one() {
        let spf = spf_up_to(10).unwrap();
        let w = MultiplicityWeights::omega_k(2).unwrap();
        let report = count_distribution(1, &w, &spf).unwrap();
        assert_eq!(report.count(0), 1);
        assert_eq!(report.histogram().len(), 1);
    }

    #[test]
    fn histogram_totals_match_x() {
        let spf = spf_up_to(20_000).unwrap();
        for w in [
            MultiplicityWeights::omega_k(2).unwrap(),
            MultiplicityWeights::s(),
            MultiplicityWeights::renyi(),
            MultiplicityWeights::new(vec![1, -1], Tail::Zero).unwrap(),
        ] {
            for x in [1u64, 2, 100, 12_345, 20_000] {
                let report = count_distribution(x, &w, &spf).unwrap();
                let total: u64 = report.histogram().values().sum();
                assert_eq!(total, x, "weights {w} x={x}");
            }
        }
    }

    #[test]
    fn out_of_range_x_rejected() {
        let spf = spf_up_to(100).unwrap();
        let w = MultiplicityWeights::omega_k(2).unwrap();
        assert!(matches!(
            count_distribution(101, &w, &spf),
            Err(Error::OutOfRange(_))
        ));
        assert!(count_distribution(0, &w, &spf).is_err());
    }

    #[test]
    fn summatory_small_cases() {
        let spf = spf_up_to(1000).unwrap();
        assert_eq!(summatory_omega_k_exhaustive(10, 2, &spf).unwrap(), 2);
        assert_eq!(summatory_omega_k_formula(10, 2).unwrap(), 2);
        assert_eq!(summatory_omega_k_formula(100, 2).unwrap(), 27);
        assert_eq!(summatory_omega_k_exhaustive(100, 2, &spf).unwrap(), 27);
    }

    #[test]
    fn summatory_routes_agree() {
        let spf = spf_up_to(10_000).unwrap();
        for k in [2u32, 3, 4] {
            for x in [10u64, 99, 1000, 4096, 10_000] {
                let a = summatory_omega_k_exhaustive(x, k, &spf).unwrap();
                let b = summatory_omega_k_formula(x, k).unwrap();
                assert_eq!(a, b, "k={k} x={x}");
            }
        }
        assert_eq!(summatory_omega_k_exhaustive(10_000, 2, &spf).unwrap(), 2749);
        assert_eq!(summatory_omega_k_exhaustive(10_000, 3, &spf).unwrap(), 975);
    }

    #[test]
    fn exact_expansion_single_prime() {
        let w = MultiplicityWeights::omega_k(2).unwrap();
        let coeffs = expand_product_exact(&[2], &w, 1).unwrap();
        assert_eq!(coeffs[0], BigRational::new(7.into(), 8.into()));
        assert_eq!(coeffs[1], BigRational::new(1.into(), 8.into()));
    }

    #[test]
    fn exact_expansion_two_primes() {
        let w = MultiplicityWeights::omega_k(2).unwrap();
        let coeffs = expand_product_exact(&[2, 3], &w, 2).unwrap();
        assert_eq!(coeffs[0], BigRational::new(175.into(), 216.into()));
        assert_eq!(coeffs[1], BigRational::new(13.into(), 72.into()));
        assert_eq!(coeffs[2], BigRational::new(1.into(), 108.into()));
    }

    #[test]
    fn exact_expansion_normalizes() {
        for w in [
            MultiplicityWeights::omega_k(3).unwrap(),
            MultiplicityWeights::s(),
            MultiplicityWeights::e(),
            MultiplicityWeights::o(),
            MultiplicityWeights::renyi(),
        ] {
            let m_max = 40;
            let coeffs = expand_product_exact(&[2, 3, 5], &w, m_max).unwrap();
            let sum: BigRational = coeffs.iter().cloned().sum();
            let gap = BigRational::one() - sum;
            assert!(gap >= BigRational::zero(), "weights {w}");
            assert!(
                gap < BigRational::new(1.into(), 1_000_000.into()),
                "weights {w}: high-degree mass should be tiny at degree {m_max}"
            );
        }
    }

    #[test]
    fn exact_expansion_matches_recursion() {
        let primes = PrimeTable::from_primes(&[2, 3, 5]).unwrap();
        let w = MultiplicityWeights::renyi();
        let exact = expand_product_exact(&[2, 3, 5], &w, 3).unwrap();
        let series = crate::density::densities_omega_a(&w, 3, &primes, 60).unwrap();
        for m in 0..=3 {
            let e = exact[m].to_f64().unwrap();
            assert!(
                (series.values()[m] - e).abs() < 1e-12,
                "m={m}: {} vs {e}",
                series.values()[m]
            );
        }
    }

    #[test]
    fn exact_expansion_guards() {
        let w = MultiplicityWeights::omega_k(2).unwrap();
        let too_many: Vec<u64> = primes_up_to(120).unwrap().primes().to_vec();
        assert!(too_many.len() > MAX_EXACT_PRIMES);
        assert!(matches!(
            expand_product_exact(&too_many, &w, 3),
            Err(Error::ResourceLimit(_))
        ));
        let signed = MultiplicityWeights::new(vec![1, -1], Tail::Zero).unwrap();
        assert!(matches!(
            expand_product_exact(&[2, 3], &signed, 3),
            Err(Error::UnsupportedWeights(_))
        ));
        assert!(expand_product_exact(&[4], &w, 3).is_err());
    }

    #[test]
    fn convergence_rows_report_c_hat() {
        let spf = spf_up_to(100_000).unwrap();
        let w = MultiplicityWeights::omega_k(2).unwrap();
        let rows = convergence_study(&w, 0, &[1000, 10_000, 100_000], 0.748535264, &spf)
            .unwrap();
        assert_eq!(rows.len(), 3);
        for row in &rows {
            assert!(row.c_hat.is_finite());
            assert!(row.c_hat < 10.0, "x={}: c_hat {}", row.x, row.c_hat);
        }
        assert!(rows[2].deviation < rows[0].deviation);
    }

    #[test]
    fn signed_weights_count_and_match_powerful_scale() {
        let spf = spf_up_to(10_000).unwrap();
        let w = MultiplicityWeights::new(vec![1, -1], Tail::Zero).unwrap();
        let report = count_distribution(10_000, &w, &spf).unwrap();
        let d0 = report.density_estimate(0);
        assert!((d0 - 0.6839).abs() < 0.01, "{d0}");
        assert!(report.histogram().keys().any(|&m| m < 0));
    }
}
