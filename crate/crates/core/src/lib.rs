//! Asymptotic densities for prime-multiplicity counting functions.
//!
//! For a nonnegative integer weight sequence A = (a_1, a_2, ...) with
//! a_1 = 0, the additive function omega_A(n) = sum_j a_j omega_j(n) counts
//! prime divisors of n through their multiplicities (omega_j(n) is the
//! number of primes dividing n exactly j times). Each value m has a natural
//! density e_m, and the e_m are the Taylor coefficients at z = 0 of an
//! Euler product over primes.
//!
//! The crate computes these densities by three independent routes that
//! check one another:
//!
//! - a coefficient recursion on the logarithm of the Euler product, in
//!   binary64 ([`densities_omega_k`], [`densities_omega_a`]) and in
//!   arbitrary precision ([`densities_hp`]);
//! - a closed-form sum over powerful numbers ([`density_via_powerful`]),
//!   exact up to an explicitly bounded tail;
//! - direct counting over an initial segment of the integers
//!   ([`count_distribution`]), plus exact rational expansion of finite
//!   sub-products ([`expand_product_exact`]).
//!
//! Supporting modules cover moments of the distribution, evaluation of the
//! generating function on the closed unit disk, growth and decay
//! diagnostics, a sieve cache, and parsing of weight specifications.

pub mod arith;
pub mod cache;
pub mod decay;
pub mod density;
pub mod error;
pub mod hp;
pub mod oracle;
pub mod powerful;
pub mod primes;
pub mod sum;
pub mod weights;

pub use arith::{big_omega, factorize, omega, omega_a, omega_k, Factorization};
pub use cache::{cache_load, cache_path, cache_store, load_or_build, CacheOutcome};
pub use decay::{
    decay_profile, growth_profile, DecayEntry, DecayProfile, GrowthFamily, GrowthProfile,
    GrowthSample, DEFAULT_RATIO_WINDOW, MAX_DECAY_M, MIN_DIGITS_FOR_DEEP,
};
pub use density::{
    densities_omega_a, densities_omega_k, e_k0, evaluate_genfun, expectation_omega_a,
    expectation_variance_omega_a, expectation_variance_omega_k, factor_value,
    log_factor_series, mass_beyond_budget, prime_tail_estimate, tilde_s_k, CoeffFlag,
    DensitySeries, PrimeSumCache, DEFAULT_J_CUTOFF, DEFAULT_PRIME_LIMIT, F64_DIGITS,
};
pub use error::{Error, Result};
pub use hp::{densities_hp, hp_series_sum, HpSeries, MAX_DIGITS};
pub use oracle::{
    convergence_study, count_distribution, expand_product_exact, matches_exact,
    rationals_to_f64, summatory_omega_k_exhaustive, summatory_omega_k_formula, CountReport,
    Deviation, StudyRow, MAX_EXACT_PRIMES,
};
pub use powerful::{
    density_from_stream, density_via_powerful, powerful_histogram, powerful_tail_bound,
    powerful_up_to, PowerfulStream, PowerfulSumResult, GOLOMB_C, SIX_OVER_PI_SQUARED,
};
pub use primes::{
    primes_up_to, primes_up_to_with_segment, spf_up_to, PrimeTable, SpfTable,
    DEFAULT_SEGMENT, SPF_MAX_ENTRIES,
};
pub use sum::{kahan_sum_fn, parallel_kahan_sum, KahanSum, CHUNK};
pub use weights::{MultiplicityWeights, Tail, MAX_OMEGA_K};
