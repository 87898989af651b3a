//! Factorizations and the additive functions built on them.

use crate::error::{Error, Result};
use crate::primes::SpfTable;
use crate::weights::MultiplicityWeights;

/// A positive integer as (prime, multiplicity) pairs with strictly
/// increasing primes; n = 1 has an empty factor list.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Factorization {
    n: u64,
    factors: Vec<(u64, u32)>,
}

impl Factorization {
    /// Assembles a factorization from parts the caller guarantees valid:
    /// increasing distinct primes, multiplicities >= 1, product equal to n.
    /// Used by the powerful-number enumerator, which composes
    /// factorizations rather than re-deriving them.
    pub(crate) fn from_parts(n: u64, factors: Vec<(u64, u32)>) -> Self {
        debug_assert!(factors.windows(2).all(|w| w[0].0 < w[1].0));
        debug_assert_eq!(
            factors
                .iter()
                .fold(1u64, |acc, &(p, j)| acc * p.pow(j)),
            n
        );
        Self { n, factors }
    }

    pub fn one() -> Self {
        Self { n: 1, factors: Vec::new() }
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    /// The (prime, multiplicity) pairs, primes strictly increasing.
    pub fn factors(&self) -> &[(u64, u32)] {
        &self.factors
    }
}

/// Factors n by repeated smallest-prime-factor lookups.
pub fn factorize(n: u64, spf: &SpfTable) -> Result<Factorization> {
    if n == 0 {
        return Err(Error::InvalidArgument("cannot factor 0".into()));
    }
    if n > spf.limit() {
        return Err(Error::OutOfRange(format!(
            "{n} exceeds the spf table limit {}",
            spf.limit()
        )));
    }
    let mut factors = Vec::new();
    let mut rest = n;
    while rest > 1 {
        let p = spf.spf(rest);
        let mut j = 0u32;
        while rest % p == 0 {
            rest /= p;
            j += 1;
        }
        factors.push((p, j));
    }
    Ok(Factorization { n, factors })
}

/// Number of primes dividing n with multiplicity exactly k.
pub fn omega_k(f: &Factorization, k: u32) -> u32 {
    debug_assert!(k >= 1);
    f.factors().iter().filter(|&&(_, j)| j == k).count() as u32
}

/// Number of distinct prime factors.
pub fn omega(f: &Factorization) -> u32 {
    f.factors().len() as u32
}

/// Number of prime factors counted with multiplicity.
pub fn big_omega(f: &Factorization) -> u32 {
    f.factors().iter().map(|&(_, j)| j).sum()
}

/// The weighted additive function omega_A = sum over prime powers p^j || n
/// of a_j. Signed weights are fully supported here.
pub fn omega_a(f: &Factorization, weights: &MultiplicityWeights) -> i64 {
    f.factors()
        .iter()
        .map(|&(_, j)| weights.weight_of_multiplicity(j as u64))
        .sum()
}
