//! Prime generation and smallest-prime-factor tables.
//!
//! Everything downstream (series truncations, powerful-number weights, the
//! counting oracle) consumes these tables, so construction is deterministic:
//! the same limit yields byte-identical tables regardless of segment size.

use crate::error::{Error, Result};

/// Default segment width for the segmented sieve, in entries.
pub const DEFAULT_SEGMENT: usize = 1 << 20;

/// Hard cap on SPF table size: 2^31 entries.
pub const SPF_MAX_ENTRIES: u64 = 1 << 31;

/// All primes up to an inclusive limit, strictly increasing.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PrimeTable {
    limit: u64,
    primes: Vec<u64>,
}

impl PrimeTable {
    pub fn limit(&self) -> u64 {
        self.limit
    }

    pub fn primes(&self) -> &[u64] {
        &self.primes
    }

    pub fn len(&self) -> usize {
        self.primes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.primes.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, u64> {
        self.primes.iter()
    }

    /// Rebuilds a table from parts that are already known to be valid
    /// (used by the cache loader after format validation).
    pub(crate) fn from_validated_parts(limit: u64, primes: Vec<u64>) -> Self {
        Self { limit, primes }
    }

    /// Builds a table from an explicit prime set, for small-set diagnostics
    /// where the series should run over chosen primes rather than all
    /// primes up to a bound. The list must be strictly increasing and every
    /// element must be prime; the empty set is allowed (empty Euler product).
    pub fn from_primes(primes: &[u64]) -> Result<Self> {
        for pair in primes.windows(2) {
            if pair[0] >= pair[1] {
                return Err(Error::InvalidArgument(format!(
                    "prime list must be strictly increasing, got {} then {}",
                    pair[0], pair[1]
                )));
            }
        }
        for &p in primes {
            if !is_prime_u64(p) {
                return Err(Error::InvalidArgument(format!("{p} is not prime")));
            }
        }
        let limit = primes.last().copied().unwrap_or(1);
        Ok(Self { limit, primes: primes.to_vec() })
    }
}

/// Deterministic primality by trial division; only used for validating
/// small explicit prime sets, never on the sieve path.
fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n % 2 == 0 {
        return n == 2;
    }
    let mut d = 3u64;
    while d.saturating_mul(d) <= n {
        if n % d == 0 {
            return false;
        }
        d += 2;
    }
    true
}

/// All primes `<= limit` via a segmented sieve with the default segment width.
pub fn primes_up_to(limit: u64) -> Result<PrimeTable> {
    primes_up_to_with_segment(limit, DEFAULT_SEGMENT)
}

/// All primes `<= limit`, sieving `segment` entries at a time.
///
/// Memory is O(sqrt(limit) + segment); output is independent of `segment`.
pub fn primes_up_to_with_segment(limit: u64, segment: usize) -> Result<PrimeTable> {
    if limit < 2 {
        return Err(Error::InvalidArgument(format!(
            "prime table limit must be >= 2, got {limit}"
        )));
    }
    if segment == 0 {
        return Err(Error::InvalidArgument("segment size must be positive".into()));
    }

    let root = limit.isqrt();
    let base = simple_sieve(root.max(2));

    let approx = if limit >= 17 {
        (limit as f64 / (limit as f64).ln() * 1.15) as usize
    } else {
        8
    };
    let mut primes: Vec<u64> = Vec::with_capacity(approx);
    for &p in &base {
        if p <= limit {
            primes.push(p);
        }
    }

    let mut composite = vec![false; segment];
    let mut lo = root.max(2) + 1;
    while lo <= limit {
        let hi = lo.saturating_add(segment as u64 - 1).min(limit);
        let width = (hi - lo + 1) as usize;
        composite[..width].fill(false);
        for &p in &base {
            if p * p > hi {
                break;
            }
            let mut start = lo.div_ceil(p) * p;
            if start < p * p {
                start = p * p;
            }
            let mut i = (start - lo) as usize;
            while i < width {
                composite[i] = true;
                i += p as usize;
            }
        }
        for (i, &c) in composite[..width].iter().enumerate() {
            if !c {
                primes.push(lo + i as u64);
            }
        }
        lo = hi + 1;
    }

    Ok(PrimeTable { limit, primes })
}

/// Plain sieve of Eratosthenes used for the base primes up to sqrt(limit).
fn simple_sieve(limit: u64) -> Vec<u64> {
    let n = limit as usize;
    let mut composite = vec![false; n + 1];
    let mut primes = Vec::new();
    for i in 2..=n {
        if !composite[i] {
            primes.push(i as u64);
            let mut j = i * i;
            while j <= n {
                composite[j] = true;
                j += i;
            }
        }
    }
    primes
}

/// Smallest-prime-factor table for 2..=limit.
#[derive(Clone, Debug)]
pub struct SpfTable {
    limit: u64,
    spf: Vec<u32>,
}

impl SpfTable {
    pub fn limit(&self) -> u64 {
        self.limit
    }

    /// Smallest prime factor of `n`; `n` must satisfy `2 <= n <= limit`.
    #[inline]
    pub fn spf(&self, n: u64) -> u64 {
        debug_assert!((2..=self.limit).contains(&n));
        self.spf[n as usize] as u64
    }
}

/// Builds the smallest-prime-factor table with a linear sieve.
///
/// The table stores one u32 per integer and is capped at 2^31 entries;
/// larger requests are rejected rather than silently degraded.
pub fn spf_up_to(limit: u64) -> Result<SpfTable> {
    if limit < 2 {
        return Err(Error::InvalidArgument(format!(
            "spf table limit must be >= 2, got {limit}"
        )));
    }
    if limit + 1 > SPF_MAX_ENTRIES {
        return Err(Error::OutOfRange(format!(
            "spf table would need {} entries, cap is {SPF_MAX_ENTRIES}",
            limit + 1
        )));
    }
    let n = limit as usize;
    let mut spf = vec![0u32; n + 1];
    let mut primes: Vec<u32> = Vec::new();
    for i in 2..=n {
        if spf[i] == 0 {
            spf[i] = i as u32;
            primes.push(i as u32);
        }
        for &p in &primes {
            let p = p as usize;
            if p > spf[i] as usize || i * p > n {
                break;
            }
            spf[i * p] = p as u32;
        }
    }
    Ok(SpfTable { limit, spf })
}
