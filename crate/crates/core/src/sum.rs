//! Compensated summation with a deterministic parallel reduction.
//!
//! Every floating-point sum in this crate that runs over primes or powerful
//! numbers goes through these helpers, so results are bit-identical across
//! runs and across worker counts.

use rayon::prelude::*;

/// Kahan–Neumaier compensated accumulator.
#[derive(Clone, Copy, Debug, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self { sum: 0.0, comp: 0.0 }
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Sums `f(i)` for `i` in `0..n` in ascending order with compensation.
pub fn kahan_sum_fn(n: usize, f: impl Fn(usize) -> f64) -> f64 {
    let mut acc = KahanSum::new();
    for i in 0..n {
        acc.add(f(i));
    }
    acc.value()
}

/// Fixed chunk width for the parallel reduction. Chunk boundaries are a
/// function of the index only, never of the worker count, so the final
/// left-to-right combine always sees the same partials in the same order.
pub const CHUNK: usize = 1 << 16;

/// Deterministic parallel compensated sum of `f(i)` for `i` in `0..n`.
///
/// Each fixed-width chunk is summed sequentially with compensation (possibly
/// on different workers), then the per-chunk results are combined in chunk
/// order by a single compensated pass. The result is bit-identical for any
/// number of rayon workers, including one.
pub fn parallel_kahan_sum(n: usize, f: impl Fn(usize) -> f64 + Sync) -> f64 {
    if n <= CHUNK {
        return kahan_sum_fn(n, f);
    }
    let n_chunks = n.div_ceil(CHUNK);
    let partials: Vec<f64> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let lo = c * CHUNK;
            let hi = ((c + 1) * CHUNK).min(n);
            let mut acc = KahanSum::new();
            for i in lo..hi {
                acc.add(f(i));
            }
            acc.value()
        })
        .collect();
    let mut acc = KahanSum::new();
    for p in partials {
        acc.add(p);
    }
    acc.value()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kahan_recovers_cancellation() {
        let mut acc = KahanSum::new();
        acc.add(1.0);
        acc.add(1e100);
        acc.add(1.0);
        acc.add(-1e100);
        assert_eq!(acc.value(), 2.0);
    }

    #[test]
    fn kahan_harmonic_is_accurate() {
        let n = 10_000_000usize;
        let kahan = kahan_sum_fn(n, |i| 1.0 / (i + 1) as f64);
        let exact = 16.695311365859852f64;
        assert!((kahan - exact).abs() < 1e-13, "{kahan}");
    }

    #[test]
    fn parallel_matches_sequential_bitwise() {
        let n = 1_000_000usize;
        let f = |i: usize| ((i as f64) * 0.7324).sin() / ((i + 1) as f64);
        let seq = {
            let n_chunks = n.div_ceil(CHUNK);
            let mut outer = KahanSum::new();
            for c in 0..n_chunks {
                let mut inner = KahanSum::new();
                for i in c * CHUNK..((c + 1) * CHUNK).min(n) {
                    inner.add(f(i));
                }
                outer.add(inner.value());
            }
            outer.value()
        };
        let par = parallel_kahan_sum(n, f);
        assert_eq!(seq.to_bits(), par.to_bits());
    }

    #[test]
    fn parallel_deterministic_across_pool_sizes() {
        let n = 300_000usize;
        let f = |i: usize| 1.0 / ((i + 1) as f64).powi(2);
        let reference = parallel_kahan_sum(n, f);
        for workers in [1usize, 2, 3, 7] {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(workers)
                .build()
                .unwrap();
            let got = pool.install(|| parallel_kahan_sum(n, f));
            assert_eq!(reference.to_bits(), got.to_bits(), "workers={workers}");
        }
    }
}
