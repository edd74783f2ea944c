use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use crate::classify::{PairResult, PairTag};
use crate::error::{Error, Result};
use crate::lang::LanguageCode;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BinomialTestResult {
    pub k: u64,
    pub n: u64,
    /// P[X >= k] for X ~ Binomial(n, 1/2).
    pub p_value: f64,
    /// False when n = 0.
    pub applicable: bool,
    pub significant: bool,
}

/// `num / 2^shift` as f64, keeping 64 significant bits of `num`.
fn ratio_pow2(num: &BigUint, shift: u64) -> f64 {
    let bits = num.bits();
    let (mantissa, exponent) = if bits > 64 {
        ((num >> (bits - 64)).to_u64().unwrap_or(u64::MAX), bits as i64 - 64 - shift as i64)
    } else {
        (num.to_u64().unwrap_or(0), -(shift as i64))
    };
    // Two steps so that large exponents do not overflow the intermediate.
    let half = exponent / 2;
    mantissa as f64 * 2f64.powi(half as i32) * 2f64.powi((exponent - half) as i32)
}

/// Exact one-sided test of `k` successes in `n` fair trials. `significant`
/// is left false; see [`bonferroni_flag`].
pub fn exact_binomial_test(k: u64, n: u64) -> Result<BinomialTestResult> {
    if k > n {
        return Err(Error::Argument(format!("binomial test needs k <= n, got k={k}, n={n}")));
    }
    if n == 0 {
        return Ok(BinomialTestResult {
            k,
            n,
            p_value: 1.0,
            applicable: false,
            significant: false,
        });
    }
    // Sum C(n, i) for i = k..=n, walking down from C(n, n) = 1.
    let mut term = BigUint::one();
    let mut tail = BigUint::zero();
    let mut i = n;
    loop {
        tail += &term;
        if i == k {
            break;
        }
        term = term * BigUint::from(i) / BigUint::from(n - i + 1);
        i -= 1;
    }
    Ok(BinomialTestResult {
        k,
        n,
        p_value: ratio_pow2(&tail, n).min(1.0),
        applicable: true,
        significant: false,
    })
}

pub fn bonferroni_flag(p_value: f64, family_size: usize, alpha: f64) -> bool {
    p_value < alpha / family_size.max(1) as f64
}

/// Directed language-win counts of one backend at one size.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct WinCounts {
    pub languages: Vec<LanguageCode>,
    /// (winner, loser) -> count.
    pub wins: BTreeMap<(LanguageCode, LanguageCode), u64>,
}

impl WinCounts {
    pub fn get(&self, winner: &LanguageCode, loser: &LanguageCode) -> u64 {
        self.wins
            .get(&(winner.clone(), loser.clone()))
            .copied()
            .unwrap_or(0)
    }
}

/// Win counts summed over prompt languages, keyed by (backend, size).
/// `languages` lists every language seen in any pair, sorted.
pub fn win_counts(pairs: &[PairResult]) -> BTreeMap<(String, usize), WinCounts> {
    let languages: Vec<LanguageCode> = pairs
        .iter()
        .flat_map(|p| [p.l1.clone(), p.l2.clone()])
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let mut out: BTreeMap<(String, usize), WinCounts> = BTreeMap::new();
    for pair in pairs {
        let counts = out
            .entry((pair.backend_id.clone(), pair.size))
            .or_insert_with(|| WinCounts {
                languages: languages.clone(),
                wins: BTreeMap::new(),
            });
        let directed = match pair.tag {
            PairTag::L1Win => (pair.l1.clone(), pair.l2.clone()),
            PairTag::L2Win => (pair.l2.clone(), pair.l1.clone()),
            PairTag::SameSurname | PairTag::Discard => continue,
        };
        *counts.wins.entry(directed).or_insert(0) += 1;
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DirectedTest {
    pub backend_id: String,
    pub size: usize,
    pub winner: LanguageCode,
    pub loser: LanguageCode,
    pub test: BinomialTestResult,
}

/// One test per ordered language pair of every (backend, size) table.
pub fn pairwise_tests(
    counts: &BTreeMap<(String, usize), WinCounts>,
    family_size: usize,
    alpha: f64,
) -> Vec<DirectedTest> {
    let mut out = Vec::new();
    for ((backend_id, size), table) in counts {
        for winner in &table.languages {
            for loser in &table.languages {
                if winner == loser {
                    continue;
                }
                let k = table.get(winner, loser);
                let n = k + table.get(loser, winner);
                let mut test = exact_binomial_test(k, n).expect("k <= n by construction");
                test.significant = test.applicable && bonferroni_flag(test.p_value, family_size, alpha);
                out.push(DirectedTest {
                    backend_id: backend_id.clone(),
                    size: *size,
                    winner: winner.clone(),
                    loser: loser.clone(),
                    test,
                });
            }
        }
    }
    out
}
