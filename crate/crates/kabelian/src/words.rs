//! Word primitives over small dense alphabets.
//!
//! Letters are the integers `0..sigma-1` with `sigma <= 10`, so a word reads
//! and prints as a string of decimal digits.  Everything downstream (power
//! detection, searches, morphism certification) is built on the counting and
//! equivalence operations defined here.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Index, Range};
use std::str::FromStr;

/// Largest supported alphabet size, matching the digit syntax.
pub const MAX_ALPHABET: usize = 10;

/// Cap on dense factor-vector length (`sigma^k`).
pub const MAX_DENSE_FACTORS: usize = 4096;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum WordError {
    BadAlphabet(usize),
    LetterOutOfRange { letter: u8, alphabet: usize },
    BadCharacter(char),
    EmptyFactor,
    EmptyWord,
    EmptyFactorSet,
    MixedFactorLengths,
    DuplicateFactor(String),
    FactorSetTooLarge { alphabet: usize, width: usize },
    SplitIndexOutOfRange { index: usize, order: usize },
    SplitTooShort { have: usize, need: usize, side: &'static str },
}

impl fmt::Display for WordError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WordError::BadAlphabet(a) => {
                write!(f, "alphabet size {} not in 1..={}", a, MAX_ALPHABET)
            }
            WordError::LetterOutOfRange { letter, alphabet } => {
                write!(f, "letter {} out of range for alphabet {}", letter, alphabet)
            }
            WordError::BadCharacter(c) => write!(f, "invalid character {:?} in word", c),
            WordError::EmptyFactor => write!(f, "factor must be nonempty"),
            WordError::EmptyWord => write!(f, "word must be nonempty"),
            WordError::EmptyFactorSet => write!(f, "factor set must be nonempty"),
            WordError::MixedFactorLengths => write!(f, "factor set members must share one length"),
            WordError::DuplicateFactor(w) => write!(f, "duplicate factor {} in set", w),
            WordError::FactorSetTooLarge { alphabet, width } => write!(
                f,
                "full factor set {}^{} exceeds the dense cap of {}",
                alphabet, width, MAX_DENSE_FACTORS
            ),
            WordError::SplitIndexOutOfRange { index, order } => {
                write!(f, "split index {} not below order {}", index, order)
            }
            WordError::SplitTooShort { have, need, side } => {
                write!(f, "{} word has length {}, split needs at least {}", side, have, need)
            }
        }
    }
}

impl std::error::Error for WordError {}

/// A finite word over the alphabet `0..alphabet`.
///
/// Ordering is lexicographic on the letters, with a proper prefix smaller
/// than its extensions.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Word {
    alphabet: u8,
    data: Vec<u8>,
}

impl Word {
    pub fn new(alphabet: usize, letters: Vec<u8>) -> Result<Word, WordError> {
        check_alphabet(alphabet)?;
        for &c in &letters {
            if c as usize >= alphabet {
                return Err(WordError::LetterOutOfRange { letter: c, alphabet });
            }
        }
        Ok(Word { alphabet: alphabet as u8, data: letters })
    }

    pub fn empty(alphabet: usize) -> Result<Word, WordError> {
        Word::new(alphabet, Vec::new())
    }

    /// Parses a digit string; the alphabet is the largest digit plus one
    /// (1 for the empty string).
    pub fn from_digits(s: &str) -> Result<Word, WordError> {
        let data = digits(s)?;
        let alphabet = data.iter().map(|&c| c as usize + 1).max().unwrap_or(1);
        Ok(Word { alphabet: alphabet as u8, data })
    }

    pub fn from_digits_with_alphabet(s: &str, alphabet: usize) -> Result<Word, WordError> {
        Word::new(alphabet, digits(s)?)
    }

    pub(crate) fn from_raw(alphabet: usize, data: Vec<u8>) -> Word {
        debug_assert!(Word::new(alphabet, data.clone()).is_ok());
        Word { alphabet: alphabet as u8, data }
    }

    pub fn alphabet(&self) -> usize {
        self.alphabet as usize
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn letters(&self) -> &[u8] {
        &self.data
    }

    /// First `n` letters, or the whole word if it is shorter.
    pub fn prefix(&self, n: usize) -> Word {
        let n = n.min(self.len());
        Word { alphabet: self.alphabet, data: self.data[..n].to_vec() }
    }

    /// Last `n` letters, or the whole word if it is shorter.
    pub fn suffix(&self, n: usize) -> Word {
        let n = n.min(self.len());
        Word { alphabet: self.alphabet, data: self.data[self.len() - n..].to_vec() }
    }

    pub fn factor(&self, range: Range<usize>) -> Word {
        Word { alphabet: self.alphabet, data: self.data[range].to_vec() }
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        Word { alphabet: self.alphabet.max(other.alphabet), data }
    }

    pub fn repeat(&self, times: usize) -> Word {
        Word { alphabet: self.alphabet, data: self.data.repeat(times) }
    }

    /// Letter counts, indexed by letter.
    pub fn parikh(&self) -> ParikhVector {
        let mut counts = vec![0i64; self.alphabet()];
        for &c in &self.data {
            counts[c as usize] += 1;
        }
        ParikhVector { counts }
    }

    /// Number of (possibly overlapping) occurrences of `f`.
    pub fn count_occurrences(&self, f: &Word) -> Result<usize, WordError> {
        if f.is_empty() {
            return Err(WordError::EmptyFactor);
        }
        if f.len() > self.len() {
            return Ok(0);
        }
        Ok(self.data.windows(f.len()).filter(|w| *w == &f.data[..]).count())
    }

    /// Occurrence counts of every member of `set`, in member order.
    pub fn factor_vector(&self, set: &FactorSet) -> FactorVector {
        let mut counts = vec![0i64; set.len()];
        if self.len() >= set.width() {
            for w in self.data.windows(set.width()) {
                if let Some(i) = set.index_of(w) {
                    counts[i] += 1;
                }
            }
        }
        FactorVector { set: set.clone(), counts }
    }

    /// Occurrence counts of all `alphabet^k` factors of length `k`, in
    /// lexicographic order.
    pub fn factor_vector_full(&self, k: usize) -> Result<FactorVector, WordError> {
        let set = FactorSet::full(self.alphabet(), k)?;
        Ok(self.factor_vector(&set))
    }
}

fn check_alphabet(alphabet: usize) -> Result<(), WordError> {
    if alphabet == 0 || alphabet > MAX_ALPHABET {
        return Err(WordError::BadAlphabet(alphabet));
    }
    Ok(())
}

fn digits(s: &str) -> Result<Vec<u8>, WordError> {
    s.chars()
        .map(|c| match c {
            '0'..='9' => Ok(c as u8 - b'0'),
            _ => Err(WordError::BadCharacter(c)),
        })
        .collect()
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &c in &self.data {
            write!(f, "{}", c)?;
        }
        Ok(())
    }
}

impl fmt::Debug for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "\"{}\"/{}", self, self.alphabet)
    }
}

impl FromStr for Word {
    type Err = WordError;

    fn from_str(s: &str) -> Result<Word, WordError> {
        Word::from_digits(s)
    }
}

impl Ord for Word {
    fn cmp(&self, other: &Word) -> Ordering {
        self.data.cmp(&other.data).then(self.alphabet.cmp(&other.alphabet))
    }
}

impl PartialOrd for Word {
    fn partial_cmp(&self, other: &Word) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Index<usize> for Word {
    type Output = u8;

    fn index(&self, i: usize) -> &u8 {
        &self.data[i]
    }
}

impl serde::Serialize for Word {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        ser.collect_str(self)
    }
}

impl<'de> serde::Deserialize<'de> for Word {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> Result<Word, D::Error> {
        let s = String::deserialize(de)?;
        Word::from_digits(&s).map_err(serde::de::Error::custom)
    }
}

/// Letter counts of a word.
#[derive(Debug, Clone, PartialEq, Eq, Hash, serde::Serialize)]
pub struct ParikhVector {
    counts: Vec<i64>,
}

impl ParikhVector {
    pub fn counts(&self) -> &[i64] {
        &self.counts
    }

    pub fn alphabet(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> i64 {
        self.counts.iter().sum()
    }
}

impl Index<usize> for ParikhVector {
    type Output = i64;

    fn index(&self, i: usize) -> &i64 {
        &self.counts[i]
    }
}

/// An ordered set of equal-length factors used to index factor vectors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FactorSet {
    alphabet: u8,
    width: usize,
    members: Vec<Word>,
    full: bool,
}

impl FactorSet {
    /// All `alphabet^width` words of length `width` in lexicographic order.
    pub fn full(alphabet: usize, width: usize) -> Result<FactorSet, WordError> {
        check_alphabet(alphabet)?;
        if width == 0 {
            return Err(WordError::EmptyFactor);
        }
        let size = match (alphabet as u64).checked_pow(width as u32) {
            Some(s) if s <= MAX_DENSE_FACTORS as u64 => s as usize,
            _ => return Err(WordError::FactorSetTooLarge { alphabet, width }),
        };
        let mut members = Vec::with_capacity(size);
        let mut data = vec![0u8; width];
        loop {
            members.push(Word { alphabet: alphabet as u8, data: data.clone() });
            let mut i = width;
            loop {
                if i == 0 {
                    return Ok(FactorSet { alphabet: alphabet as u8, width, members, full: true });
                }
                i -= 1;
                data[i] += 1;
                if (data[i] as usize) < alphabet {
                    break;
                }
                data[i] = 0;
            }
        }
    }

    /// A hand-picked set; member order is preserved.
    pub fn from_words(members: Vec<Word>) -> Result<FactorSet, WordError> {
        if members.is_empty() {
            return Err(WordError::EmptyFactorSet);
        }
        let width = members[0].len();
        if width == 0 {
            return Err(WordError::EmptyFactor);
        }
        let mut alphabet = 1u8;
        for w in &members {
            if w.len() != width {
                return Err(WordError::MixedFactorLengths);
            }
            alphabet = alphabet.max(w.alphabet);
        }
        let mut seen = BTreeMap::new();
        for (i, w) in members.iter().enumerate() {
            if seen.insert(w.data.clone(), i).is_some() {
                return Err(WordError::DuplicateFactor(w.to_string()));
            }
        }
        let sigma = alphabet as usize;
        let full = sigma
            .checked_pow(width as u32)
            .map(|total| total == members.len() && members.windows(2).all(|p| p[0].data < p[1].data))
            .unwrap_or(false);
        let members = members
            .into_iter()
            .map(|w| Word { alphabet, data: w.data })
            .collect();
        Ok(FactorSet { alphabet, width, members, full })
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn alphabet(&self) -> usize {
        self.alphabet as usize
    }

    pub fn members(&self) -> &[Word] {
        &self.members
    }

    pub fn index_of(&self, letters: &[u8]) -> Option<usize> {
        if letters.len() != self.width {
            return None;
        }
        if self.full {
            let mut key = 0usize;
            for &c in letters {
                if c >= self.alphabet {
                    return None;
                }
                key = key * self.alphabet as usize + c as usize;
            }
            Some(key)
        } else {
            self.members.iter().position(|m| m.data == letters)
        }
    }
}

impl serde::Serialize for FactorSet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(self.members.iter())
    }
}

/// Occurrence counts of the members of a [`FactorSet`] in one word.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FactorVector {
    set: FactorSet,
    counts: Vec<i64>,
}

impl FactorVector {
    pub fn counts(&self) -> &[i64] {
        &self.counts
    }

    pub fn set(&self) -> &FactorSet {
        &self.set
    }

    pub fn get(&self, factor: &Word) -> Option<i64> {
        self.set.index_of(factor.letters()).map(|i| self.counts[i])
    }

    pub fn total(&self) -> i64 {
        self.counts.iter().sum()
    }
}

/// Occurrence counts of all length-`k` factors as a sparse map; works for
/// any `alphabet^k`.
pub fn factor_counts(w: &Word, k: usize) -> BTreeMap<Word, usize> {
    assert!(k >= 1, "factor length must be positive");
    let mut map = BTreeMap::new();
    if w.len() >= k {
        for win in w.letters().windows(k) {
            *map.entry(Word { alphabet: w.alphabet, data: win.to_vec() }).or_insert(0) += 1;
        }
    }
    map
}

/// Which characterization of k-abelian equivalence to evaluate.
///
/// All three agree on every pair of words; the prefix and suffix forms fall
/// back to plain equality below length `k-1`, where the shared-affix
/// characterization does not apply.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum EquivalenceMode {
    /// Equal counts of every factor of each length `1..=k`.
    FactorOnly,
    /// Equal counts of length-`k` factors plus equal `(k-1)`-prefixes.
    PrefixForm,
    /// Equal counts of length-`k` factors plus equal `(k-1)`-suffixes.
    SuffixForm,
}

/// Tests whether `u` and `v` contain every factor of length at most `k`
/// equally often.
pub fn k_abelian_eq(u: &Word, v: &Word, k: usize, mode: EquivalenceMode) -> bool {
    assert!(k >= 1, "order k must be positive");
    match mode {
        EquivalenceMode::FactorOnly => (1..=k).all(|j| factor_counts(u, j) == factor_counts(v, j)),
        EquivalenceMode::PrefixForm => {
            if u.len() < k - 1 || v.len() < k - 1 {
                u.letters() == v.letters()
            } else {
                u.prefix(k - 1).letters() == v.prefix(k - 1).letters()
                    && factor_counts(u, k) == factor_counts(v, k)
            }
        }
        EquivalenceMode::SuffixForm => {
            if u.len() < k - 1 || v.len() < k - 1 {
                u.letters() == v.letters()
            } else {
                u.suffix(k - 1).letters() == v.suffix(k - 1).letters()
                    && factor_counts(u, k) == factor_counts(v, k)
            }
        }
    }
}

/// Checks the window-count splitting identity for the concatenation `uv`:
/// counting length-`k` windows of `uv` splits into the windows of
/// `u . pref_i(v)` and those of `suf_{k-1-i}(u) . v`.
pub fn splitting_identity_check(u: &Word, v: &Word, k: usize, i: usize) -> Result<bool, WordError> {
    assert!(k >= 1, "order k must be positive");
    if i >= k {
        return Err(WordError::SplitIndexOutOfRange { index: i, order: k });
    }
    if u.len() < k - 1 - i {
        return Err(WordError::SplitTooShort { have: u.len(), need: k - 1 - i, side: "left" });
    }
    if v.len() < i {
        return Err(WordError::SplitTooShort { have: v.len(), need: i, side: "right" });
    }
    let whole = factor_counts(&u.concat(v), k);
    let left = factor_counts(&u.concat(&v.prefix(i)), k);
    let right = factor_counts(&u.suffix(k - 1 - i).concat(v), k);
    let mut sum = left;
    for (w, n) in right {
        *sum.entry(w).or_insert(0) += n;
    }
    Ok(whole == sum)
}

/// A word is Lyndon when it is strictly smaller than all of its proper
/// rotations.
pub fn is_lyndon(w: &Word) -> Result<bool, WordError> {
    if w.is_empty() {
        return Err(WordError::EmptyWord);
    }
    let rotated = |cut: usize| {
        let mut data = w.data[cut..].to_vec();
        data.extend_from_slice(&w.data[..cut]);
        data
    };
    Ok((1..w.len()).all(|cut| w.data < rotated(cut)))
}

/// Unique factorization of `w` into a lexicographically non-increasing
/// sequence of Lyndon words (Duval's algorithm).
pub fn lyndon_factorize(w: &Word) -> Result<Vec<Word>, WordError> {
    if w.is_empty() {
        return Err(WordError::EmptyWord);
    }
    let s = &w.data;
    let n = s.len();
    let mut out = Vec::new();
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        let mut k = i;
        while j < n && s[k] <= s[j] {
            if s[k] < s[j] {
                k = i;
            } else {
                k += 1;
            }
            j += 1;
        }
        let period = j - k;
        while i <= k {
            out.push(w.factor(i..i + period));
            i += period;
        }
    }
    Ok(out)
}

/// Incremental state for recognizing prefixes of powers of Lyndon words:
/// the current length and the length of the Lyndon root being repeated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PreLyndonState {
    len: usize,
    period: usize,
}

impl PreLyndonState {
    /// State of the empty word.
    pub fn initial() -> PreLyndonState {
        PreLyndonState { len: 0, period: 1 }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    /// Length of the repeated Lyndon root; meaningful once `len > 0`.
    pub fn period(&self) -> usize {
        self.period
    }
}

/// Extends a word known to be a prefix of a Lyndon-word power by one letter.
///
/// `state` must describe `w` itself.  Returns the updated state, or `None`
/// when `w` extended by `c` is a prefix of no Lyndon-word power: the letter
/// is compared against the one `period` positions back; a match keeps the
/// root, a larger letter restarts with the whole extension as root, and a
/// smaller letter is a dead end.
pub fn pre_lyndon_extend(state: PreLyndonState, w: &Word, c: u8) -> Option<PreLyndonState> {
    debug_assert_eq!(state.len, w.len(), "state does not describe this word");
    debug_assert!((c as usize) < w.alphabet() || w.is_empty());
    let period = pre_lyndon_step(&w.data, state.period, c)?;
    Some(PreLyndonState { len: state.len + 1, period })
}

pub(crate) fn pre_lyndon_step(data: &[u8], period: usize, c: u8) -> Option<usize> {
    if data.is_empty() {
        return Some(1);
    }
    let mirror = data[data.len() - period];
    match c.cmp(&mirror) {
        Ordering::Equal => Some(period),
        Ordering::Greater => Some(data.len() + 1),
        Ordering::Less => None,
    }
}

/// Whether `w` is a prefix of some power of a Lyndon word.
pub fn is_pre_lyndon(w: &Word) -> bool {
    let mut state = PreLyndonState::initial();
    let mut seen = Word::empty(w.alphabet()).expect("valid alphabet");
    for &c in w.letters() {
        match pre_lyndon_extend(state, &seen, c) {
            Some(next) => state = next,
            None => return false,
        }
        seen.data.push(c);
    }
    true
}
