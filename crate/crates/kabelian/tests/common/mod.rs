//! Brute-force oracles, independent of the library internals: everything
//! here works on letter slices with maps and loops, so a disagreement
//! points at the engine.

#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap};

use kabelian::Word;

pub fn w(s: &str) -> Word {
    Word::from_digits(s).unwrap()
}

pub fn wa(s: &str, alphabet: usize) -> Word {
    Word::from_digits_with_alphabet(s, alphabet).unwrap()
}

/// Occurrence counts of every factor of length exactly n.
pub fn counts(x: &[u8], n: usize) -> HashMap<&[u8], i64> {
    let mut m = HashMap::new();
    if n >= 1 && n <= x.len() {
        for i in 0..=x.len() - n {
            *m.entry(&x[i..i + n]).or_insert(0) += 1;
        }
    }
    m
}

/// Equality of counts of every factor of length at most k.
pub fn oracle_k_abelian_eq(u: &[u8], v: &[u8], k: usize) -> bool {
    if u.len() != v.len() {
        return false;
    }
    (1..=k).all(|n| counts(u, n) == counts(v, n))
}

/// Quadratic scan for `power` consecutive pairwise k-abelian-equivalent
/// blocks of period at least `min_period`.
pub fn oracle_find_power(
    x: &[u8],
    power: usize,
    k: usize,
    min_period: usize,
) -> Option<(usize, usize)> {
    let mut hits = Vec::new();
    for period in min_period..=x.len() / power {
        for start in 0..=x.len() - power * period {
            let first = &x[start..start + period];
            if (1..power)
                .all(|i| oracle_k_abelian_eq(first, &x[start + i * period..start + (i + 1) * period], k))
            {
                hits.push((start + power * period, period, start));
            }
        }
    }
    hits.into_iter()
        .min_by_key(|&(end, period, _)| (end, period))
        .map(|(_, period, start)| (start, period))
}

pub fn oracle_is_free(x: &[u8], power: usize, k: usize, min_period: usize) -> bool {
    oracle_find_power(x, power, k, min_period).is_none()
}

/// Distinct k-abelian square factors, as digit strings.
pub fn oracle_distinct_squares(x: &[u8], k: usize) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    for period in 1..=x.len() / 2 {
        for start in 0..=x.len() - 2 * period {
            if oracle_k_abelian_eq(&x[start..start + period], &x[start + period..start + 2 * period], k)
            {
                out.insert(digits(&x[start..start + 2 * period]));
            }
        }
    }
    out
}

pub fn digits(x: &[u8]) -> String {
    x.iter().map(|&c| char::from(b'0' + c)).collect()
}

/// Strictly smallest among its proper rotations.
pub fn oracle_is_lyndon(x: &[u8]) -> bool {
    if x.is_empty() {
        return false;
    }
    (1..x.len()).all(|i| {
        let rot: Vec<u8> = x[i..].iter().chain(&x[..i]).copied().collect();
        x < rot.as_slice()
    })
}

/// Prefix of some power of a Lyndon word no longer than itself.
pub fn oracle_is_pre_lyndon(x: &[u8]) -> bool {
    if x.is_empty() {
        return true;
    }
    for n in 1..=x.len() {
        let root = &x[..n];
        if oracle_is_lyndon(root) && x.iter().enumerate().all(|(i, &c)| c == root[i % n]) {
            return true;
        }
    }
    false
}

/// Greedy longest-Lyndon-prefix factorization.
pub fn oracle_lyndon_factorize(x: &[u8]) -> Vec<Vec<u8>> {
    let mut out = Vec::new();
    let mut rest = x;
    while !rest.is_empty() {
        let n = (1..=rest.len())
            .rev()
            .find(|&n| oracle_is_lyndon(&rest[..n]))
            .expect("single letters are Lyndon");
        out.push(rest[..n].to_vec());
        rest = &rest[n..];
    }
    out
}

/// Every free word over the alphabet up to max_len, by breadth-first
/// regeneration; prelyndon additionally filters on the skeleton property.
pub fn oracle_tree(
    alphabet: usize,
    power: usize,
    k: usize,
    min_period: usize,
    prelyndon: bool,
    max_len: usize,
) -> BTreeSet<String> {
    let mut level: Vec<Vec<u8>> = vec![Vec::new()];
    let mut out = BTreeSet::new();
    for _ in 0..max_len {
        let mut next = Vec::new();
        for word in &level {
            for c in 0..alphabet as u8 {
                let mut cand = word.clone();
                cand.push(c);
                if prelyndon && !oracle_is_pre_lyndon(&cand) {
                    continue;
                }
                if oracle_is_free(&cand, power, k, min_period) {
                    out.insert(digits(&cand));
                    next.push(cand);
                }
            }
        }
        if next.is_empty() {
            break;
        }
        level = next;
    }
    out
}

/// Sorted deduplicated factor list of length n ordered by descending
/// occurrence count, lexicographic on ties, truncated to top_m.
pub fn oracle_top_factors(x: &[u8], n: usize, top_m: usize) -> Vec<String> {
    let mut tally: Vec<(String, i64)> = counts(x, n)
        .into_iter()
        .map(|(f, c)| (digits(f), c))
        .collect();
    tally.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    tally.truncate(top_m);
    tally.into_iter().map(|(f, _)| f).collect()
}
