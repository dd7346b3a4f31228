//! Detection of k-abelian n-powers and bookkeeping of square factors.
//!
//! A word `u1 u2 ... un` is a k-abelian n-power when consecutive blocks are
//! k-abelian equivalent; its period is the common block length.  The
//! detectors here run incrementally: a growing word keeps per-position
//! window counts so that testing whether a violation ends at the last
//! letter costs one pass over the candidate periods.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use crate::words::{Word, MAX_DENSE_FACTORS};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PredicateError {
    BadPower(usize),
    BadOrder(usize),
    BadPeriod(usize),
}

impl fmt::Display for PredicateError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PredicateError::BadPower(n) => write!(f, "power {} must be at least 2", n),
            PredicateError::BadOrder(k) => write!(f, "order {} must be at least 1", k),
            PredicateError::BadPeriod(p) => write!(f, "minimum period {} must be at least 1", p),
        }
    }
}

impl std::error::Error for PredicateError {}

/// What a word must avoid to count as free.
///
/// Without a budget: no k-abelian n-power of period at least `min_period`.
/// With a budget (squares only): at most `budget` distinct square factors,
/// and additionally no square of period at least `min_period` when
/// `min_period > 1`.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct AvoidancePredicate {
    power: usize,
    order: usize,
    min_period: usize,
    budget: Option<usize>,
}

impl AvoidancePredicate {
    pub fn new(power: usize, order: usize, min_period: usize) -> Result<Self, PredicateError> {
        if power < 2 {
            return Err(PredicateError::BadPower(power));
        }
        if order < 1 {
            return Err(PredicateError::BadOrder(order));
        }
        if min_period < 1 {
            return Err(PredicateError::BadPeriod(min_period));
        }
        Ok(AvoidancePredicate { power, order, min_period, budget: None })
    }

    /// Square predicate that tolerates up to `budget` distinct square
    /// factors.
    pub fn with_budget(order: usize, min_period: usize, budget: usize) -> Result<Self, PredicateError> {
        let mut p = AvoidancePredicate::new(2, order, min_period)?;
        p.budget = Some(budget);
        Ok(p)
    }

    pub fn power(&self) -> usize {
        self.power
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn min_period(&self) -> usize {
        self.min_period
    }

    pub fn budget(&self) -> Option<usize> {
        self.budget
    }
}

/// A located k-abelian n-power occurrence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct Occurrence {
    pub start: usize,
    pub period: usize,
    pub power: usize,
}

impl Occurrence {
    pub fn end(&self) -> usize {
        self.start + self.period * self.power
    }
}

/// The distinct square factor words of a word.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct SquareInventory {
    members: BTreeSet<Word>,
}

impl SquareInventory {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, w: &Word) -> bool {
        self.members.contains(w)
    }

    pub fn members(&self) -> impl Iterator<Item = &Word> {
        self.members.iter()
    }
}

impl FromIterator<Word> for SquareInventory {
    fn from_iter<I: IntoIterator<Item = Word>>(iter: I) -> Self {
        SquareInventory { members: iter.into_iter().collect() }
    }
}

/// Rolling window counts over a growing letter buffer.
///
/// Column `j` holds, per length-`order` key, how many windows start before
/// position `j`; blocks are compared through column differences plus a
/// shared-prefix check, which together realize k-abelian equivalence of
/// standalone blocks.
pub(crate) struct FactorTable {
    alphabet: usize,
    order: usize,
    keyspace: usize,
    buf: Vec<u8>,
    cum: Vec<i32>,
}

impl FactorTable {
    pub(crate) fn new(alphabet: usize, order: usize) -> FactorTable {
        assert!(alphabet >= 1 && order >= 1);
        let keyspace = alphabet
            .checked_pow(order as u32)
            .filter(|&s| s <= MAX_DENSE_FACTORS)
            .unwrap_or_else(|| panic!("order {} too large for dense counting over {} letters", order, alphabet));
        FactorTable { alphabet, order, keyspace, buf: Vec::new(), cum: vec![0; keyspace] }
    }

    pub(crate) fn len(&self) -> usize {
        self.buf.len()
    }

    pub(crate) fn word(&self) -> &[u8] {
        &self.buf
    }

    pub(crate) fn push(&mut self, c: u8) {
        debug_assert!((c as usize) < self.alphabet);
        self.buf.push(c);
        if self.buf.len() >= self.order {
            let mut key = 0usize;
            for &d in &self.buf[self.buf.len() - self.order..] {
                key = key * self.alphabet + d as usize;
            }
            let last = self.cum.len() - self.keyspace;
            self.cum.extend_from_within(last..);
            let cell = self.cum.len() - self.keyspace + key;
            self.cum[cell] += 1;
        }
    }

    pub(crate) fn pop(&mut self) {
        if self.buf.len() >= self.order {
            self.cum.truncate(self.cum.len() - self.keyspace);
        }
        self.buf.pop();
    }

    /// k-abelian equivalence of the blocks of length `p` starting at `a`
    /// and `b`.
    pub(crate) fn block_equiv(&self, a: usize, b: usize, p: usize) -> bool {
        let k = self.order;
        if p + 1 < k {
            return self.buf[a..a + p] == self.buf[b..b + p];
        }
        if self.buf[a..a + k - 1] != self.buf[b..b + k - 1] {
            return false;
        }
        if p >= k {
            // Window starts a..=a+p-k lie inside the block; key totals match
            // by equal block length, so key 0 is implied by the rest.
            let ca = a * self.keyspace;
            let cb = b * self.keyspace;
            let da = (a + p - k + 1) * self.keyspace;
            let db = (b + p - k + 1) * self.keyspace;
            for key in 1..self.keyspace {
                if self.cum[da + key] - self.cum[ca + key] != self.cum[db + key] - self.cum[cb + key] {
                    return false;
                }
            }
        }
        true
    }

    /// Smallest period `>= min_period` of an n-power ending at the current
    /// last letter.
    pub(crate) fn power_ending(&self, power: usize, min_period: usize) -> Option<usize> {
        let len = self.buf.len();
        for p in min_period..=len / power {
            let start = len - power * p;
            if (0..power - 1).all(|i| self.block_equiv(start + i * p, start + (i + 1) * p, p)) {
                return Some(p);
            }
        }
        None
    }
}

fn clamped_order(pred_order: usize, len: usize, power: usize) -> usize {
    // A block under comparison has length at most len/power; equivalence of
    // longer-order windows degenerates to plain equality, which the table
    // handles without its counting columns.
    pred_order.min(len / power.max(1) + 1).max(1)
}

/// Earliest k-abelian n-power occurrence in `w` under `pred`, ties broken
/// by smaller period.  A square budget plays no role here; only the
/// power/order/period pattern is located.
pub fn find_power(w: &Word, pred: &AvoidancePredicate) -> Option<Occurrence> {
    let mut table = FactorTable::new(w.alphabet(), clamped_order(pred.order, w.len(), pred.power));
    for &c in w.letters() {
        table.push(c);
        if let Some(period) = table.power_ending(pred.power, pred.min_period) {
            return Some(Occurrence {
                start: table.len() - pred.power * period,
                period,
                power: pred.power,
            });
        }
    }
    None
}

/// Whether `w` satisfies the avoidance predicate.
pub fn is_free(w: &Word, pred: &AvoidancePredicate) -> bool {
    match pred.budget {
        None => find_power(w, pred).is_none(),
        Some(m) => {
            let mut table = FactorTable::new(w.alphabet(), clamped_order(pred.order, w.len(), 2));
            let mut seen: BTreeSet<&[u8]> = BTreeSet::new();
            let letters = w.letters();
            for (i, &c) in letters.iter().enumerate() {
                table.push(c);
                let len = i + 1;
                if pred.min_period > 1 && table.power_ending(2, pred.min_period).is_some() {
                    return false;
                }
                for q in 1..=len / 2 {
                    if table.block_equiv(len - 2 * q, len - q, q) {
                        seen.insert(&letters[len - 2 * q..len]);
                        if seen.len() > m {
                            return false;
                        }
                    }
                }
            }
            true
        }
    }
}

/// Whether appending `c` keeps a free word free; equivalent to
/// `is_free` of the extended word whenever `w` itself is free.
pub fn extension_is_free(w: &Word, c: u8, pred: &AvoidancePredicate) -> bool {
    let mut ext = Extender::new(w.alphabet(), pred);
    for &d in w.letters() {
        ext.push_unchecked(d);
    }
    if ext.try_push(c) {
        ext.pop();
        true
    } else {
        false
    }
}

/// All distinct k-abelian square factor words of `w`.
pub fn distinct_squares(w: &Word, order: usize) -> SquareInventory {
    assert!(order >= 1, "order must be positive");
    let mut table = FactorTable::new(w.alphabet(), clamped_order(order, w.len(), 2));
    let mut members = BTreeSet::new();
    for (i, &c) in w.letters().iter().enumerate() {
        table.push(c);
        let len = i + 1;
        for q in 1..=len / 2 {
            if table.block_equiv(len - 2 * q, len - q, q) {
                members.insert(w.factor(len - 2 * q..len));
            }
        }
    }
    SquareInventory { members }
}

/// Packs a short binary square factor into an integer key.
fn pack_key(slice: &[u8]) -> u128 {
    assert!(slice.len() <= 120, "square too long for packed budget tracking");
    let mut key = 1u128;
    for &c in slice {
        key = (key << 1) | c as u128;
    }
    key
}

/// Backtracking-friendly wrapper: letters are pushed only while the word
/// stays free, and every push can be undone.
pub(crate) struct Extender {
    table: FactorTable,
    power: usize,
    min_period: usize,
    budget: Option<usize>,
    counts: HashMap<u128, u32>,
    distinct: usize,
    undo: Vec<Vec<u128>>,
}

impl Extender {
    pub(crate) fn new(alphabet: usize, pred: &AvoidancePredicate) -> Extender {
        if pred.budget.is_some() {
            assert!(alphabet == 2, "square budgets are tracked for binary words only");
        }
        Extender {
            table: FactorTable::new(alphabet, pred.order),
            power: pred.power,
            min_period: pred.min_period,
            budget: pred.budget,
            counts: HashMap::new(),
            distinct: 0,
            undo: Vec::new(),
        }
    }

    pub(crate) fn len(&self) -> usize {
        self.table.len()
    }

    pub(crate) fn word(&self) -> &[u8] {
        self.table.word()
    }

    #[cfg(test)]
    pub(crate) fn distinct_squares(&self) -> usize {
        self.distinct
    }

    /// Appends without any checking; used to replay a word known to be free.
    pub(crate) fn push_unchecked(&mut self, c: u8) {
        self.table.push(c);
        if self.budget.is_some() {
            self.record_squares();
        }
    }

    fn record_squares(&mut self) -> usize {
        let len = self.table.len();
        let mut added = Vec::new();
        let mut new_distinct = 0;
        for q in 1..=len / 2 {
            if self.table.block_equiv(len - 2 * q, len - q, q) {
                let key = pack_key(&self.table.word()[len - 2 * q..len]);
                let slot = self.counts.entry(key).or_insert(0);
                *slot += 1;
                if *slot == 1 {
                    self.distinct += 1;
                    new_distinct += 1;
                }
                added.push(key);
            }
        }
        self.undo.push(added);
        new_distinct
    }

    fn unrecord_squares(&mut self) {
        for key in self.undo.pop().expect("push/pop imbalance") {
            let slot = self.counts.get_mut(&key).expect("recorded key");
            *slot -= 1;
            if *slot == 0 {
                self.counts.remove(&key);
                self.distinct -= 1;
            }
        }
    }

    /// Appends `c` if the extension stays free; reports whether it did.
    pub(crate) fn try_push(&mut self, c: u8) -> bool {
        self.table.push(c);
        match self.budget {
            None => {
                if self.table.power_ending(self.power, self.min_period).is_some() {
                    self.table.pop();
                    return false;
                }
            }
            Some(m) => {
                if self.min_period > 1 && self.table.power_ending(2, self.min_period).is_some() {
                    self.table.pop();
                    return false;
                }
                self.record_squares();
                if self.distinct > m {
                    self.unrecord_squares();
                    self.table.pop();
                    return false;
                }
            }
        }
        true
    }

    pub(crate) fn pop(&mut self) {
        if self.budget.is_some() {
            self.unrecord_squares();
        }
        self.table.pop();
    }
}
