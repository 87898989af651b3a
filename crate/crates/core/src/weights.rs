//! Weight sequences A = (0, a_2, a_3, ...) over prime multiplicities.
//!
//! A sequence is stored as an explicit prefix (a_2 ..= a_J) plus a tail rule
//! for every j > J. The first weight a_1 is structurally zero: indexing
//! starts at multiplicity 2, so the "small additive function" restriction
//! cannot be violated by construction.
//!
//! Spec-string grammar (strict, positions reported in errors):
//!
//! ```text
//! "omega_k:K" | "S" | "E" | "O" | "renyi" |
//! "custom:a2,a3,...,aJ[;tail=zero|const:c|periodic:c1,...,cr|affine:alpha,beta]"
//! ```
//!
//! A `custom:` spec without a tail clause defaults to the zero tail.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Largest multiplicity index K accepted for the `omega_k:K` family.
/// Beyond this, p^(K+1) leaves the exactly-representable integer range
/// and every density is indistinguishable from the k -> infinity limit.
pub const MAX_OMEGA_K: u32 = 60;

/// Rule for weights beyond the explicit prefix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tail {
    /// a_j = 0 for all j > J.
    Zero,
    /// a_j = c for all j > J.
    Const(i64),
    /// a_j cycles through (c_1, ..., c_r): a_j = c[(j - J - 1) mod r + 1].
    Periodic(Vec<i64>),
    /// a_j = alpha * j + beta for j > J; alpha must be >= 0.
    Affine { alpha: i64, beta: i64 },
}

/// A finite description of a weight sequence, plus the cached sign summary.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MultiplicityWeights {
    explicit: Vec<i64>,
    tail: Tail,
    nonneg: bool,
}

impl MultiplicityWeights {
    /// Builds a sequence from an explicit prefix (a_2 ..= a_J) and a tail rule.
    /// Explicit zeros directly in front of a zero tail are redundant and are
    /// dropped, so equal sequences compare equal.
    pub fn new(mut explicit: Vec<i64>, tail: Tail) -> Result<Self> {
        if tail == Tail::Zero {
            while explicit.last() == Some(&0) {
                explicit.pop();
            }
        }
        match &tail {
            Tail::Periodic(cycle) if cycle.is_empty() => {
                return Err(Error::InvalidArgument(
                    "periodic tail needs at least one value".into(),
                ));
            }
            Tail::Affine { alpha, .. } if *alpha < 0 => {
                return Err(Error::InvalidArgument(format!(
                    "affine tail slope must be >= 0, got {alpha} (weights would \
                     eventually go negative)"
                )));
            }
            _ => {}
        }
        let j_last = explicit.len() as i64 + 1;
        let tail_nonneg = match &tail {
            Tail::Zero => true,
            Tail::Const(c) => *c >= 0,
            Tail::Periodic(cycle) => cycle.iter().all(|&c| c >= 0),
            Tail::Affine { alpha, beta } => alpha * (j_last + 1) + beta >= 0,
        };
        let nonneg = explicit.iter().all(|&a| a >= 0) && tail_nonneg;
        Ok(Self { explicit, tail, nonneg })
    }

    /// The indicator weight for multiplicity exactly `k`: a_k = 1, else 0.
    pub fn omega_k(k: u32) -> Result<Self> {
        if !(2..=MAX_OMEGA_K).contains(&k) {
            return Err(Error::InvalidArgument(format!(
                "omega_k needs 2 <= k <= {MAX_OMEGA_K}, got {k} (k = 1 has no \
                 limiting distribution without normalization)"
            )));
        }
        let mut explicit = vec![0i64; (k - 1) as usize];
        *explicit.last_mut().unwrap() = 1;
        Self::new(explicit, Tail::Zero)
    }

    /// S = (0, 1, 1, 1, ...): counts primes of multiplicity >= 2.
    pub fn s() -> Self {
        Self::new(Vec::new(), Tail::Const(1)).unwrap()
    }

    /// E = (0, 1, 0, 1, ...): counts primes of even multiplicity.
    pub fn e() -> Self {
        Self::new(Vec::new(), Tail::Periodic(vec![1, 0])).unwrap()
    }

    /// O = (0, 0, 1, 0, 1, ...): counts primes of odd multiplicity >= 3.
    pub fn o() -> Self {
        Self::new(Vec::new(), Tail::Periodic(vec![0, 1])).unwrap()
    }

    /// a_j = j - 1, so that omega_A = Omega - omega.
    pub fn renyi() -> Self {
        Self::new(Vec::new(), Tail::Affine { alpha: 1, beta: -1 }).unwrap()
    }

    /// Largest explicitly stored index J (a_2 ..= a_J); J = 1 when the
    /// prefix is empty and the tail starts at j = 2.
    pub fn explicit_end(&self) -> u64 {
        self.explicit.len() as u64 + 1
    }

    pub fn explicit(&self) -> &[i64] {
        &self.explicit
    }

    pub fn tail(&self) -> &Tail {
        &self.tail
    }

    /// True iff every weight, including the whole tail, is >= 0.
    pub fn nonneg(&self) -> bool {
        self.nonneg
    }

    /// The weight a_j for j >= 2; j < 2 is an error by contract.
    pub fn weight_at(&self, j: u64) -> Result<i64> {
        if j < 2 {
            return Err(Error::InvalidArgument(format!(
                "weight index must be >= 2, got {j} (a_1 is structurally zero)"
            )));
        }
        Ok(self.weight_of_multiplicity(j))
    }

    /// Total weight contributed by a prime of multiplicity `j`, defined for
    /// every j >= 0 (a_0 and a_1 are zero). This is the hot-path lookup used
    /// when evaluating omega_A over factorizations.
    #[inline]
    pub fn weight_of_multiplicity(&self, j: u64) -> i64 {
        if j < 2 {
            return 0;
        }
        let idx = (j - 2) as usize;
        if idx < self.explicit.len() {
            return self.explicit[idx];
        }
        let j0 = self.explicit_end() + 1;
        match &self.tail {
            Tail::Zero => 0,
            Tail::Const(c) => *c,
            Tail::Periodic(cycle) => {
                let r = cycle.len() as u64;
                cycle[((j - j0) % r) as usize]
            }
            Tail::Affine { alpha, beta } => alpha * j as i64 + beta,
        }
    }

    /// Smallest j >= 2 with a_j != 0, or None for the identically-zero
    /// sequence. This plays the role of k in the prime-tail budget.
    pub fn min_nonzero_j(&self) -> Option<u64> {
        for (i, &a) in self.explicit.iter().enumerate() {
            if a != 0 {
                return Some(i as u64 + 2);
            }
        }
        let j0 = self.explicit_end() + 1;
        match &self.tail {
            Tail::Zero => None,
            Tail::Const(c) => (*c != 0).then_some(j0),
            Tail::Periodic(cycle) => cycle
                .iter()
                .position(|&c| c != 0)
                .map(|i| j0 + i as u64),
            Tail::Affine { alpha, beta } => {
                if *alpha == 0 {
                    return (*beta != 0).then_some(j0);
                }
                let mut j = j0;
                while *alpha * j as i64 + *beta == 0 {
                    j += 1;
                }
                Some(j)
            }
        }
    }

    /// Detects the pure omega_k structure (a_K = 1, all other weights zero),
    /// which unlocks closed-form per-prime series.
    pub fn as_single_omega_k(&self) -> Option<u32> {
        if self.tail != Tail::Zero {
            return None;
        }
        let mut k = None;
        for (i, &a) in self.explicit.iter().enumerate() {
            match a {
                0 => {}
                1 if k.is_none() => k = Some(i as u32 + 2),
                _ => return None,
            }
        }
        k
    }

    /// All distinct positive weight values v <= cap that some multiplicity
    /// attains, in increasing order. Together with 0 these generate the set
    /// of reachable targets m.
    pub fn positive_values_up_to(&self, cap: i64) -> Vec<i64> {
        let mut vals = std::collections::BTreeSet::new();
        let mut push = |v: i64| {
            if v > 0 && v <= cap {
                vals.insert(v);
            }
        };
        for &a in &self.explicit {
            push(a);
        }
        let j0 = self.explicit_end() + 1;
        match &self.tail {
            Tail::Zero => {}
            Tail::Const(c) => push(*c),
            Tail::Periodic(cycle) => cycle.iter().copied().for_each(&mut push),
            Tail::Affine { alpha, beta } => {
                if *alpha == 0 {
                    push(*beta);
                } else {
                    let mut j = j0 as i64;
                    while alpha * j + beta <= cap {
                        push(alpha * j + beta);
                        j += 1;
                    }
                }
            }
        }
        vals.into_iter().collect()
    }

    /// For nonnegative weights: `reachable[m]` is true iff some powerful
    /// number attains omega_A = m, i.e. m lies in the additive closure of
    /// the attainable weight values. Distinguishes structural zeros of the
    /// density series from precision loss.
    pub fn reachable_targets(&self, m_max: usize) -> Result<Vec<bool>> {
        self.reachable_targets_within(m_max, m_max)
    }

    /// Like [`reachable_targets`](Self::reachable_targets), but with at most
    /// `max_terms` contributing primes. Each prime contributes one attained
    /// weight value, so over a finite prime set of size r only targets that
    /// are sums of at most r values occur; the rest are structural zeros of
    /// the finite product even when the weights alone could reach them.
    /// Since every contributing value is >= 1, `max_terms >= m_max` imposes
    /// no restriction.
    pub fn reachable_targets_within(&self, m_max: usize, max_terms: usize) -> Result<Vec<bool>> {
        if !self.nonneg {
            return Err(Error::UnsupportedWeights(
                "reachability analysis is defined for nonnegative weights".into(),
            ));
        }
        let values = self.positive_values_up_to(m_max as i64);
        let mut need = vec![u32::MAX; m_max + 1];
        need[0] = 0;
        for m in 1..=m_max {
            for &v in &values {
                let v = v as usize;
                if v > m {
                    break;
                }
                if need[m - v] != u32::MAX {
                    need[m] = need[m].min(need[m - v] + 1);
                }
            }
        }
        Ok(need
            .into_iter()
            .map(|c| c != u32::MAX && c as usize <= max_terms)
            .collect())
    }
}

impl fmt::Display for MultiplicityWeights {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(k) = self.as_single_omega_k().filter(|&k| k <= MAX_OMEGA_K) {
            return write!(f, "omega_k:{k}");
        }
        if self.explicit.is_empty() {
            match &self.tail {
                Tail::Const(1) => return write!(f, "S"),
                Tail::Periodic(cycle) if cycle == &[1, 0] => return write!(f, "E"),
                Tail::Periodic(cycle) if cycle == &[0, 1] => return write!(f, "O"),
                Tail::Affine { alpha: 1, beta: -1 } => return write!(f, "renyi"),
                _ => {}
            }
        }
        write!(f, "custom:")?;
        for (i, a) in self.explicit.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{a}")?;
        }
        match &self.tail {
            Tail::Zero => write!(f, ";tail=zero"),
            Tail::Const(c) => write!(f, ";tail=const:{c}"),
            Tail::Periodic(cycle) => {
                write!(f, ";tail=periodic:")?;
                for (i, c) in cycle.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{c}")?;
                }
                Ok(())
            }
            Tail::Affine { alpha, beta } => write!(f, ";tail=affine:{alpha},{beta}"),
        }
    }
}

impl FromStr for MultiplicityWeights {
    type Err = Error;

    fn from_str(spec: &str) -> Result<Self> {
        match spec {
            "S" => return Ok(Self::s()),
            "E" => return Ok(Self::e()),
            "O" => return Ok(Self::o()),
            "renyi" => return Ok(Self::renyi()),
            _ => {}
        }
        if let Some(rest) = spec.strip_prefix("omega_k:") {
            let k = parse_int::<u32>(rest, "omega_k:".len(), "multiplicity K")?;
            return Self::omega_k(k);
        }
        if let Some(rest) = spec.strip_prefix("custom:") {
            return parse_custom(rest, "custom:".len());
        }
        Err(Error::WeightSpecParse {
            position: 0,
            message: format!(
                "unknown weight spec {spec:?}; expected omega_k:K, S, E, O, \
                 renyi, or custom:..."
            ),
        })
    }
}

fn parse_custom(rest: &str, base: usize) -> Result<MultiplicityWeights> {
    let (list_part, tail_part) = match rest.find(';') {
        Some(i) => (&rest[..i], Some((&rest[i + 1..], base + i + 1))),
        None => (rest, None),
    };

    let explicit = if list_part.is_empty() {
        if tail_part.is_none() {
            return Err(Error::WeightSpecParse {
                position: base,
                message: "custom spec needs weight values or a tail clause".into(),
            });
        }
        Vec::new()
    } else {
        parse_int_list(list_part, base, "weight a_j")?
    };

    let tail = match tail_part {
        None => Tail::Zero,
        Some((clause, clause_pos)) => parse_tail(clause, clause_pos)?,
    };

    MultiplicityWeights::new(explicit, tail).map_err(|e| match e {
        Error::InvalidArgument(message) => Error::WeightSpecParse {
            position: base,
            message,
        },
        other => other,
    })
}

fn parse_tail(clause: &str, pos: usize) -> Result<Tail> {
    let body = clause.strip_prefix("tail=").ok_or_else(|| Error::WeightSpecParse {
        position: pos,
        message: format!("expected tail=..., got {clause:?}"),
    })?;
    let body_pos = pos + "tail=".len();
    if body == "zero" {
        return Ok(Tail::Zero);
    }
    if let Some(rest) = body.strip_prefix("const:") {
        let c = parse_int::<i64>(rest, body_pos + "const:".len(), "tail constant")?;
        return Ok(Tail::Const(c));
    }
    if let Some(rest) = body.strip_prefix("periodic:") {
        let cycle = parse_int_list(rest, body_pos + "periodic:".len(), "cycle value")?;
        return Ok(Tail::Periodic(cycle));
    }
    if let Some(rest) = body.strip_prefix("affine:") {
        let vals = parse_int_list(rest, body_pos + "affine:".len(), "affine parameter")?;
        if vals.len() != 2 {
            return Err(Error::WeightSpecParse {
                position: body_pos + "affine:".len(),
                message: format!("affine tail takes exactly alpha,beta; got {} values", vals.len()),
            });
        }
        return Ok(Tail::Affine { alpha: vals[0], beta: vals[1] });
    }
    Err(Error::WeightSpecParse {
        position: body_pos,
        message: format!(
            "unknown tail rule {body:?}; expected zero, const:c, \
             periodic:c1,...,cr, or affine:alpha,beta"
        ),
    })
}

fn parse_int_list(s: &str, base: usize, what: &str) -> Result<Vec<i64>> {
    let mut out = Vec::new();
    let mut offset = 0usize;
    for item in s.split(',') {
        out.push(parse_int::<i64>(item, base + offset, what)?);
        offset += item.len() + 1;
    }
    Ok(out)
}

fn parse_int<T: FromStr>(s: &str, pos: usize, what: &str) -> Result<T> {
    s.parse::<T>().map_err(|_| Error::WeightSpecParse {
        position: pos,
        message: format!("expected integer {what}, got {s:?}"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_weight_values() {
        let e = MultiplicityWeights::e();
        assert_eq!(e.weight_at(4).unwrap(), 1);
        assert_eq!(e.weight_at(5).unwrap(), 0);
        assert_eq!(e.weight_at(2).unwrap(), 1);
        let o = MultiplicityWeights::o();
        assert_eq!(o.weight_at(3).unwrap(), 1);
        assert_eq!(o.weight_at(2).unwrap(), 0);
        let r = MultiplicityWeights::renyi();
        assert_eq!(r.weight_at(7).unwrap(), 6);
        assert_eq!(r.weight_at(2).unwrap(), 1);
        let s = MultiplicityWeights::s();
        for j in 2..40 {
            assert_eq!(s.weight_at(j).unwrap(), 1);
        }
    }

    #[test]
    fn weight_index_contract() {
        let s = MultiplicityWeights::s();
        assert!(matches!(s.weight_at(1), Err(Error::InvalidArgument(_))));
        assert!(matches!(s.weight_at(0), Err(Error::InvalidArgument(_))));
        assert_eq!(s.weight_of_multiplicity(1), 0);
    }

    #[test]
    fn omega_k_structure() {
        let w = MultiplicityWeights::omega_k(5).unwrap();
        assert_eq!(w.explicit(), &[0, 0, 0, 1]);
        assert_eq!(w.weight_at(5).unwrap(), 1);
        assert_eq!(w.weight_at(4).unwrap(), 0);
        assert_eq!(w.weight_at(6).unwrap(), 0);
        assert_eq!(w.as_single_omega_k(), Some(5));
        assert!(MultiplicityWeights::omega_k(1).is_err());
        assert!(MultiplicityWeights::omega_k(61).is_err());
        assert_eq!(MultiplicityWeights::s().as_single_omega_k(), None);
    }

    #[test]
    fn affine_negative_slope_rejected() {
        let err = MultiplicityWeights::new(vec![1], Tail::Affine { alpha: -1, beta: 10 });
        assert!(err.is_err());
    }

    #[test]
    fn nonneg_flag_matches_contents() {
        assert!(MultiplicityWeights::s().nonneg());
        assert!(MultiplicityWeights::renyi().nonneg());
        let signed = MultiplicityWeights::new(vec![1, -1], Tail::Zero).unwrap();
        assert!(!signed.nonneg());
        let neg_tail = MultiplicityWeights::new(vec![1], Tail::Const(-2)).unwrap();
        assert!(!neg_tail.nonneg());
        let pos_affine =
            MultiplicityWeights::new(vec![0], Tail::Affine { alpha: 1, beta: -3 }).unwrap();
        assert!(pos_affine.nonneg(), "a_j = j - 3 is >= 0 from its start j = 3");
        let dip_affine =
            MultiplicityWeights::new(vec![0], Tail::Affine { alpha: 1, beta: -4 }).unwrap();
        assert!(!dip_affine.nonneg(), "a_3 = -1 dips below zero");
    }

    #[test]
    fn parses_named_specs() {
        for (spec, expect) in [
            ("S", MultiplicityWeights::s()),
            ("E", MultiplicityWeights::e()),
            ("O", MultiplicityWeights::o()),
            ("renyi", MultiplicityWeights::renyi()),
            ("omega_k:2", MultiplicityWeights::omega_k(2).unwrap()),
            ("omega_k:17", MultiplicityWeights::omega_k(17).unwrap()),
        ] {
            assert_eq!(spec.parse::<MultiplicityWeights>().unwrap(), expect, "{spec}");
        }
    }

    #[test]
    fn parses_custom_specs() {
        let w: MultiplicityWeights = "custom:1,-1".parse().unwrap();
        assert_eq!(w.explicit(), &[1, -1]);
        assert_eq!(*w.tail(), Tail::Zero);
        assert!(!w.nonneg());

        let w: MultiplicityWeights = "custom:2,0;tail=const:3".parse().unwrap();
        assert_eq!(w.weight_of_multiplicity(9), 3);

        let w: MultiplicityWeights = "custom:;tail=periodic:1,0".parse().unwrap();
        assert_eq!(w, MultiplicityWeights::e());

        let w: MultiplicityWeights = "custom:5;tail=affine:2,1".parse().unwrap();
        assert_eq!(w.weight_of_multiplicity(4), 9);
    }

    #[test]
    fn parse_errors_carry_positions() {
        match "custom:1,x,3".parse::<MultiplicityWeights>() {
            Err(Error::WeightSpecParse { position, .. }) => assert_eq!(position, 9),
            other => panic!("expected parse error, got {other:?}"),
        }
        match "omega_k:two".parse::<MultiplicityWeights>() {
            Err(Error::WeightSpecParse { position, .. }) => assert_eq!(position, 8),
            other => panic!("expected parse error, got {other:?}"),
        }
        match "custom:1;tail=affine:1".parse::<MultiplicityWeights>() {
            Err(Error::WeightSpecParse { position, .. }) => assert_eq!(position, 21),
            other => panic!("expected parse error, got {other:?}"),
        }
        assert!("custom:".parse::<MultiplicityWeights>().is_err());
        assert!("custom:1;tail=cycle:1".parse::<MultiplicityWeights>().is_err());
        assert!("frobnicate".parse::<MultiplicityWeights>().is_err());
    }

    #[test]
    fn display_round_trips() {
        for w in [
            MultiplicityWeights::s(),
            MultiplicityWeights::e(),
            MultiplicityWeights::o(),
            MultiplicityWeights::renyi(),
            MultiplicityWeights::omega_k(2).unwrap(),
            MultiplicityWeights::new(vec![3, 0, -2], Tail::Periodic(vec![1, 2, 3])).unwrap(),
        ] {
            let round: MultiplicityWeights = w.to_string().parse().unwrap();
            assert_eq!(round, w, "spec {}", w);
        }
    }

    #[test]
    fn min_nonzero_j_by_tail_kind() {
        assert_eq!(MultiplicityWeights::omega_k(4).unwrap().min_nonzero_j(), Some(4));
        assert_eq!(MultiplicityWeights::s().min_nonzero_j(), Some(2));
        assert_eq!(MultiplicityWeights::e().min_nonzero_j(), Some(2));
        assert_eq!(MultiplicityWeights::o().min_nonzero_j(), Some(3));
        assert_eq!(MultiplicityWeights::renyi().min_nonzero_j(), Some(2));
        let zero = MultiplicityWeights::new(vec![0, 0], Tail::Zero).unwrap();
        assert_eq!(zero.min_nonzero_j(), None);
        let late = MultiplicityWeights::new(vec![0], Tail::Affine { alpha: 1, beta: -3 }).unwrap();
        assert_eq!(late.min_nonzero_j(), Some(4), "a_3 = 0, a_4 = 1");
    }

    #[test]
    fn reachability_respects_weight_image() {
        let w2 = MultiplicityWeights::omega_k(2).unwrap();
        let r = w2.reachable_targets(5).unwrap();
        assert_eq!(r, vec![true; 6]);

        let even = MultiplicityWeights::new(vec![2], Tail::Zero).unwrap();
        let r = even.reachable_targets(6).unwrap();
        assert_eq!(r, vec![true, false, true, false, true, false, true]);

        let signed = MultiplicityWeights::new(vec![1, -1], Tail::Zero).unwrap();
        assert!(signed.reachable_targets(3).is_err());
    }

    #[test]
    fn reachability_respects_prime_budget() {
        let w2 = MultiplicityWeights::omega_k(2).unwrap();
        let r = w2.reachable_targets_within(5, 2).unwrap();
        assert_eq!(r, vec![true, true, true, false, false, false]);
        assert_eq!(w2.reachable_targets_within(5, 0).unwrap()[1..], [false; 5]);

        let renyi = MultiplicityWeights::renyi();
        let r = renyi.reachable_targets_within(5, 1).unwrap();
        assert_eq!(r, vec![true; 6], "one prime of multiplicity m+1 attains m");

        let even = MultiplicityWeights::new(vec![2], Tail::Zero).unwrap();
        let r = even.reachable_targets_within(6, 2).unwrap();
        assert_eq!(r, vec![true, false, true, false, true, false, false]);
    }
}
