//! Candidate morphism discovery.  A long random free word suggests
//! frequent factors; each factor's halves become mandatory affixes for a
//! family of free words; members that stay free when interleaved both
//! ways are linked in a graph; and every 4-clique yields a candidate
//! image set handed to the verifier.

use std::error::Error;
use std::fmt;

use crate::morphism::{Morphism, MorphismError};
use crate::repetition::{is_free, AvoidancePredicate, Extender, PredicateError};
use crate::search::{random_long_word, RandomSearchConfig};
use crate::verify::{verify_with, VerificationReport, VerifyError, VerifyOptions};
use crate::words::{Word, WordError, MAX_ALPHABET};

#[derive(Debug)]
pub enum DiscoverError {
    Syntax { line: usize, reason: String },
    MissingKey(&'static str),
    Invalid(String),
    MemberNotFree(String),
    SeedWordFailed,
    Predicate(PredicateError),
    Word(WordError),
    Morphism(MorphismError),
    Verify(VerifyError),
}

impl fmt::Display for DiscoverError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DiscoverError::Syntax { line, reason } => write!(f, "line {line}: {reason}"),
            DiscoverError::MissingKey(key) => write!(f, "missing key {key}"),
            DiscoverError::Invalid(reason) => write!(f, "{reason}"),
            DiscoverError::MemberNotFree(w) => {
                write!(f, "family member {w} violates the target predicate")
            }
            DiscoverError::SeedWordFailed => {
                write!(f, "random seeding gave up before reaching the requested length")
            }
            DiscoverError::Predicate(e) => write!(f, "{e}"),
            DiscoverError::Word(e) => write!(f, "{e}"),
            DiscoverError::Morphism(e) => write!(f, "{e}"),
            DiscoverError::Verify(e) => write!(f, "{e}"),
        }
    }
}

impl Error for DiscoverError {}

impl From<PredicateError> for DiscoverError {
    fn from(e: PredicateError) -> DiscoverError {
        DiscoverError::Predicate(e)
    }
}

impl From<WordError> for DiscoverError {
    fn from(e: WordError) -> DiscoverError {
        DiscoverError::Word(e)
    }
}

impl From<MorphismError> for DiscoverError {
    fn from(e: MorphismError) -> DiscoverError {
        DiscoverError::Morphism(e)
    }
}

impl From<VerifyError> for DiscoverError {
    fn from(e: VerifyError) -> DiscoverError {
        DiscoverError::Verify(e)
    }
}

/// Everything a pipeline run depends on, so a config file plus its seed
/// replays bit for bit.
#[derive(Debug, Clone)]
pub struct DiscoveryConfig {
    /// Property the image words (and their interleavings) must satisfy.
    pub target: AvoidancePredicate,
    pub target_alphabet: usize,
    /// Property of the words the candidate morphisms will be applied to.
    /// Only abelian squares over four letters are certified.
    pub base: AvoidancePredicate,
    pub base_alphabet: usize,
    pub seed_word_length: usize,
    pub factor_length: usize,
    pub top_m: usize,
    pub family_max_length: usize,
    pub clique_size: usize,
    pub verify_order: usize,
    pub verify_min_period: usize,
    pub seed: u64,
    /// Extension nodes visited per family before giving up.
    pub family_node_limit: Option<u64>,
    /// Cliques run through the verifier before the run stops.
    pub max_candidates: Option<u64>,
    /// Hand-made family; when nonempty the seeding stages are skipped.
    pub members: Vec<Word>,
}

const SEED_MEAN_BACKOFF: usize = 8;

impl DiscoveryConfig {
    /// Reads the flat `key = value` format; `#` starts a comment.  The
    /// seeding keys (`seed`, `seed_word_length`, `factor_length`, `top_m`,
    /// `family_max_length`) may be left out when `member` lines supply the
    /// family directly.
    pub fn parse(text: &str) -> Result<DiscoveryConfig, DiscoverError> {
        let mut seen: Vec<(&str, usize, String)> = Vec::new();
        let mut member_lines: Vec<(usize, String)> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let Some((key, value)) = body.split_once('=') else {
                return Err(DiscoverError::Syntax {
                    line,
                    reason: "expected key = value".to_string(),
                });
            };
            let key = key.trim();
            let value = value.trim().to_string();
            if value.is_empty() {
                return Err(DiscoverError::Syntax { line, reason: format!("{key} has no value") });
            }
            if key == "member" {
                member_lines.push((line, value));
                continue;
            }
            const KEYS: [&str; 18] = [
                "target_alphabet",
                "target_power",
                "target_order",
                "target_min_period",
                "base_alphabet",
                "base_power",
                "base_order",
                "base_min_period",
                "seed",
                "seed_word_length",
                "factor_length",
                "top_m",
                "family_max_length",
                "clique_size",
                "verify_order",
                "verify_min_period",
                "family_node_limit",
                "max_candidates",
            ];
            let Some(&key) = KEYS.iter().find(|&&k| k == key) else {
                return Err(DiscoverError::Syntax { line, reason: format!("unknown key {key}") });
            };
            if seen.iter().any(|(k, _, _)| *k == key) {
                return Err(DiscoverError::Syntax { line, reason: format!("{key} given twice") });
            }
            seen.push((key, line, value));
        }
        let lookup = |key: &str| seen.iter().find(|(k, _, _)| *k == key);
        let number = |key: &'static str| -> Result<Option<u64>, DiscoverError> {
            match lookup(key) {
                None => Ok(None),
                Some((_, line, value)) => match value.parse::<u64>() {
                    Ok(v) => Ok(Some(v)),
                    Err(e) => Err(DiscoverError::Syntax {
                        line: *line,
                        reason: format!("bad value for {key}: {e}"),
                    }),
                },
            }
        };
        let required = |key: &'static str| -> Result<u64, DiscoverError> {
            number(key)?.ok_or(DiscoverError::MissingKey(key))
        };
        let explicit = !member_lines.is_empty();
        let seeding = |key: &'static str, fallback: u64| -> Result<u64, DiscoverError> {
            if explicit { Ok(number(key)?.unwrap_or(fallback)) } else { required(key) }
        };

        let target_alphabet = required("target_alphabet")? as usize;
        let target = AvoidancePredicate::new(
            number("target_power")?.unwrap_or(2) as usize,
            required("target_order")? as usize,
            number("target_min_period")?.unwrap_or(1) as usize,
        )?;
        let base_alphabet = number("base_alphabet")?.unwrap_or(4) as usize;
        let base = AvoidancePredicate::new(
            number("base_power")?.unwrap_or(2) as usize,
            number("base_order")?.unwrap_or(1) as usize,
            number("base_min_period")?.unwrap_or(1) as usize,
        )?;
        let mut cfg = DiscoveryConfig {
            target,
            target_alphabet,
            base,
            base_alphabet,
            seed_word_length: seeding("seed_word_length", 0)? as usize,
            factor_length: seeding("factor_length", 2)? as usize,
            top_m: seeding("top_m", 0)? as usize,
            family_max_length: seeding("family_max_length", 2)? as usize,
            clique_size: number("clique_size")?.unwrap_or(4) as usize,
            verify_order: required("verify_order")? as usize,
            verify_min_period: required("verify_min_period")? as usize,
            seed: seeding("seed", 0)?,
            family_node_limit: number("family_node_limit")?,
            max_candidates: number("max_candidates")?,
            members: Vec::new(),
        };
        for (line, value) in member_lines {
            let word = Word::from_digits_with_alphabet(&value, cfg.target_alphabet).map_err(
                |e| DiscoverError::Syntax { line, reason: format!("bad member: {e}") },
            )?;
            if word.is_empty() {
                return Err(DiscoverError::Syntax {
                    line,
                    reason: "member is empty".to_string(),
                });
            }
            cfg.members.push(word);
        }
        cfg.members.sort();
        cfg.members.dedup();
        cfg.check()?;
        Ok(cfg)
    }

    fn check(&self) -> Result<(), DiscoverError> {
        let reject = |reason: String| Err(DiscoverError::Invalid(reason));
        if self.target_alphabet == 0 || self.target_alphabet > MAX_ALPHABET {
            return reject(format!("target_alphabet must be between 1 and {MAX_ALPHABET}"));
        }
        if self.factor_length == 0 || self.factor_length % 2 != 0 {
            return reject("factor_length must be even and positive".to_string());
        }
        if self.family_max_length < self.factor_length {
            return reject("family_max_length must be at least factor_length".to_string());
        }
        if self.members.is_empty() && self.seed_word_length < self.factor_length {
            return reject("seed_word_length must be at least factor_length".to_string());
        }
        if self.clique_size != 4 {
            return reject("clique_size is fixed at 4".to_string());
        }
        if self.base_alphabet != 4 || self.base != AvoidancePredicate::new(2, 1, 1).unwrap() {
            return reject(
                "only abelian squares over a four-letter base alphabet are certified".to_string(),
            );
        }
        Ok(())
    }
}

/// Free words wearing a seeding factor's halves: every member starts with
/// `shared_prefix` and ends with `shared_suffix`, so any two members meet
/// on `shared_suffix · shared_prefix`, the factor itself.
#[derive(Debug, Clone)]
pub struct CandidateFamily {
    pub shared_prefix: Word,
    pub shared_suffix: Word,
    /// Lexicographic order.
    pub members: Vec<Word>,
    /// A node limit cut the enumeration short.
    pub truncated: bool,
}

/// Exhaustive backtracking over free extensions of `prefix`, collecting
/// the words that end with `suffix`, never growing past `max_len`.  A
/// prefix that is not itself free yields the empty family (nothing free
/// extends it).
pub fn build_family(
    pred: &AvoidancePredicate,
    prefix: &Word,
    suffix: &Word,
    max_len: usize,
    node_limit: Option<u64>,
) -> CandidateFamily {
    let mut family = CandidateFamily {
        shared_prefix: prefix.clone(),
        shared_suffix: suffix.clone(),
        members: Vec::new(),
        truncated: false,
    };
    let alphabet = prefix.alphabet().max(suffix.alphabet());
    if prefix.len() > max_len {
        return family;
    }
    let mut ext = Extender::new(alphabet, pred);
    for &c in prefix.letters() {
        if !ext.try_push(c) {
            return family;
        }
    }
    let mut nodes = 0u64;
    let mut stack = vec![0u8];
    let collect = |ext: &Extender, family: &mut CandidateFamily| {
        if ext.word().ends_with(suffix.letters()) {
            family.members.push(Word::from_raw(alphabet, ext.word().to_vec()));
        }
    };
    collect(&ext, &mut family);
    // Depth-first in increasing letter order; each frame holds the next
    // letter to try at its depth.
    while let Some(next) = stack.last_mut() {
        if *next as usize >= alphabet || ext.len() >= max_len {
            stack.pop();
            if stack.last().is_some() {
                ext.pop();
            }
            continue;
        }
        let c = *next;
        *next += 1;
        if node_limit == Some(nodes) {
            family.truncated = true;
            break;
        }
        if ext.try_push(c) {
            nodes += 1;
            collect(&ext, &mut family);
            stack.push(0);
        }
    }
    family
}

#[derive(Debug, Clone)]
pub struct CompatibilityGraph {
    /// Sorted neighbor lists, one per family member.
    adjacency: Vec<Vec<u32>>,
    edge_count: u64,
}

impl CompatibilityGraph {
    pub fn vertex_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edge_count(&self) -> u64 {
        self.edge_count
    }

    pub fn neighbors(&self, v: usize) -> &[u32] {
        &self.adjacency[v]
    }

    pub fn has_edge(&self, x: usize, y: usize) -> bool {
        x != y && self.adjacency[x].binary_search(&(y as u32)).is_ok()
    }
}

/// Links members x and y when both interleavings xyx and yxy are free.
pub fn build_graph(family: &CandidateFamily, pred: &AvoidancePredicate) -> CompatibilityGraph {
    let n = family.members.len();
    let mut graph = CompatibilityGraph { adjacency: vec![Vec::new(); n], edge_count: 0 };
    for x in 0..n {
        for y in x + 1..n {
            let (a, b) = (&family.members[x], &family.members[y]);
            let xyx = a.concat(b).concat(a);
            if !is_free(&xyx, pred) {
                continue;
            }
            let yxy = b.concat(a).concat(b);
            if !is_free(&yxy, pred) {
                continue;
            }
            graph.adjacency[x].push(y as u32);
            graph.adjacency[y].push(x as u32);
            graph.edge_count += 1;
        }
    }
    graph
}

/// Streams every clique of the requested size, vertices ascending, in
/// lexicographic order.
pub fn enumerate_cliques(graph: &CompatibilityGraph, size: usize) -> CliqueIter<'_> {
    assert!(size >= 1, "cliques are nonempty");
    let all: Vec<u32> = (0..graph.vertex_count() as u32).collect();
    CliqueIter { graph, size, chosen: Vec::new(), stack: vec![(all, 0)] }
}

pub struct CliqueIter<'g> {
    graph: &'g CompatibilityGraph,
    size: usize,
    chosen: Vec<u32>,
    /// Each frame: vertices adjacent to everything chosen so far and
    /// greater than the last choice, plus the next index to try.
    stack: Vec<(Vec<u32>, usize)>,
}

impl Iterator for CliqueIter<'_> {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        while let Some((candidates, idx)) = self.stack.last_mut() {
            // A branch dies as soon as the pool thins below what the
            // clique still needs.
            if candidates.len() - *idx < self.size - self.chosen.len() {
                self.stack.pop();
                self.chosen.pop();
                continue;
            }
            let v = candidates[*idx];
            *idx += 1;
            self.chosen.push(v);
            if self.chosen.len() == self.size {
                let clique = self.chosen.iter().map(|&v| v as usize).collect();
                self.chosen.pop();
                return Some(clique);
            }
            let candidates = &self.stack.last().unwrap().0;
            let neighbors = self.graph.neighbors(v as usize);
            let narrowed: Vec<u32> = candidates
                .iter()
                .filter(|&&u| u > v && neighbors.binary_search(&u).is_ok())
                .copied()
                .collect();
            self.stack.push((narrowed, 0));
        }
        None
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, serde::Serialize)]
pub struct PipelineStats {
    pub seed_word_length: usize,
    pub harvested_factors: usize,
    pub families: usize,
    pub family_members: u64,
    pub truncated_families: usize,
    pub edges: u64,
    pub cliques_checked: u64,
    pub candidate_limit_hit: bool,
    pub accepted: usize,
}

pub struct PipelineRun {
    pub accepted: Vec<(Morphism, VerificationReport)>,
    pub stats: PipelineStats,
}

#[derive(Default)]
pub struct PipelineOptions {
    /// Verifier threads per candidate; 0 or 1 runs single-threaded.
    pub threads: usize,
}

/// The `top_m` most frequent length-`factor_length` factors, occurrences
/// counted with overlaps, ties broken lexicographically.
pub fn harvest_factors(w: &Word, factor_length: usize, top_m: usize) -> Vec<Word> {
    assert!(
        factor_length >= 1 && factor_length <= w.len(),
        "factor length must fit inside the word"
    );
    let data = w.letters();
    let window = |s: usize| &data[s..s + factor_length];
    let mut starts: Vec<usize> = (0..=data.len() - factor_length).collect();
    starts.sort_unstable_by(|&a, &b| window(a).cmp(window(b)));
    // Sorted runs are occurrence groups; a stable sort on the counts then
    // keeps equal counts in lexicographic order.
    let mut ranked: Vec<(usize, usize)> = Vec::new();
    let mut i = 0;
    while i < starts.len() {
        let mut j = i + 1;
        while j < starts.len() && window(starts[i]) == window(starts[j]) {
            j += 1;
        }
        ranked.push((j - i, starts[i]));
        i = j;
    }
    ranked.sort_by(|a, b| b.0.cmp(&a.0));
    ranked.truncate(top_m);
    ranked.into_iter().map(|(_, s)| Word::from_raw(w.alphabet(), window(s).to_vec())).collect()
}

fn seed_word(cfg: &DiscoveryConfig) -> Result<Word, DiscoverError> {
    let rng_cfg = RandomSearchConfig {
        seed: cfg.seed,
        target_length: cfg.seed_word_length,
        max_restarts: 100_000u64.max(cfg.seed_word_length as u64 * 64),
        mean_backoff: SEED_MEAN_BACKOFF,
    };
    random_long_word(cfg.target_alphabet, &cfg.target, &rng_cfg)
        .ok_or(DiscoverError::SeedWordFailed)
}

fn explicit_family(cfg: &DiscoveryConfig) -> Result<CandidateFamily, DiscoverError> {
    let mut members = cfg.members.clone();
    members.sort();
    for m in &members {
        if !is_free(m, &cfg.target) {
            return Err(DiscoverError::MemberNotFree(m.to_string()));
        }
    }
    let first = &members[0];
    let mut pre = first.len();
    let mut suf = first.len();
    for m in &members[1..] {
        let common = |it: bool| {
            let a = first.letters().iter();
            let b = m.letters().iter();
            if it {
                a.zip(b).take_while(|(x, y)| x == y).count()
            } else {
                a.rev().zip(b.rev()).take_while(|(x, y)| x == y).count()
            }
        };
        pre = pre.min(common(true));
        suf = suf.min(common(false));
    }
    Ok(CandidateFamily {
        shared_prefix: first.prefix(pre),
        shared_suffix: first.suffix(suf),
        members,
        truncated: false,
    })
}

/// Runs the stages end to end: seed word, frequent factors, one family
/// and graph per factor, and a verifier pass over every 4-clique, image
/// words assigned to letters in lexicographic order.  Everything is
/// deterministic in the config.
pub fn run_pipeline(cfg: &DiscoveryConfig) -> Result<PipelineRun, DiscoverError> {
    run_pipeline_with(cfg, &PipelineOptions::default())
}

pub fn run_pipeline_with(
    cfg: &DiscoveryConfig,
    opts: &PipelineOptions,
) -> Result<PipelineRun, DiscoverError> {
    cfg.check()?;
    let mut run = PipelineRun { accepted: Vec::new(), stats: PipelineStats::default() };
    let families: Vec<CandidateFamily> = if cfg.members.is_empty() {
        let word = seed_word(cfg)?;
        run.stats.seed_word_length = word.len();
        let factors = harvest_factors(&word, cfg.factor_length, cfg.top_m);
        run.stats.harvested_factors = factors.len();
        factors
            .iter()
            .map(|f| {
                let half = f.len() / 2;
                build_family(
                    &cfg.target,
                    &f.suffix(half),
                    &f.prefix(half),
                    cfg.family_max_length,
                    cfg.family_node_limit,
                )
            })
            .collect()
    } else {
        vec![explicit_family(cfg)?]
    };
    run.stats.families = families.len();

    'families: for family in &families {
        run.stats.family_members += family.members.len() as u64;
        run.stats.truncated_families += family.truncated as usize;
        let graph = build_graph(family, &cfg.target);
        run.stats.edges += graph.edge_count();
        let mut cliques = enumerate_cliques(&graph, cfg.clique_size);
        loop {
            let room = match cfg.max_candidates {
                Some(cap) => {
                    let left = cap - run.stats.cliques_checked;
                    if left == 0 {
                        run.stats.candidate_limit_hit = true;
                        break 'families;
                    }
                    left.min(opts.threads.max(1) as u64) as usize
                }
                None => opts.threads.max(1),
            };
            let batch: Vec<Morphism> = cliques
                .by_ref()
                .take(room)
                .map(|clique| {
                    let images = clique.iter().map(|&v| family.members[v].clone()).collect();
                    Morphism::from_images(images)
                })
                .collect::<Result<_, _>>()?;
            if batch.is_empty() {
                break;
            }
            run.stats.cliques_checked += batch.len() as u64;
            for (m, report) in verify_batch(batch, cfg, opts.threads)? {
                if report.verdict.is_accepted() {
                    run.stats.accepted += 1;
                    run.accepted.push((m, report));
                }
            }
        }
    }
    Ok(run)
}

/// Verifies a batch of candidates, one worker each when the batch is
/// large and all workers on the candidate when it is alone.
fn verify_batch(
    batch: Vec<Morphism>,
    cfg: &DiscoveryConfig,
    threads: usize,
) -> Result<Vec<(Morphism, VerificationReport)>, VerifyError> {
    let options = |threads| VerifyOptions { threads, ..VerifyOptions::default() };
    let (k, p) = (cfg.verify_order, cfg.verify_min_period);
    if batch.len() == 1 || threads <= 1 {
        let opts = options(threads);
        return batch
            .into_iter()
            .map(|m| verify_with(&m, k, p, &opts).map(|r| (m, r)))
            .collect();
    }
    let opts = options(1);
    let reports: Vec<Result<VerificationReport, VerifyError>> = std::thread::scope(|scope| {
        let handles: Vec<_> =
            batch.iter().map(|m| scope.spawn(|| verify_with(m, k, p, &opts))).collect();
        handles.into_iter().map(|h| h.join().expect("verifier worker panicked")).collect()
    });
    batch.into_iter().zip(reports).map(|(m, r)| r.map(|r| (m, r))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::morphism::fixtures;
    use crate::search::{enumerate_free_words, SearchMode};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn w(s: &str) -> Word {
        Word::from_digits(s).unwrap()
    }

    fn squares(order: usize, min_period: usize) -> AvoidancePredicate {
        AvoidancePredicate::new(2, order, min_period).unwrap()
    }

    const TOY: &str = "\
        target_alphabet = 3\n\
        target_order = 2\n\
        target_min_period = 2\n\
        verify_order = 2\n\
        verify_min_period = 2\n\
        seed = 11\n\
        seed_word_length = 400\n\
        factor_length = 2\n\
        top_m = 4\n\
        family_max_length = 5\n";

    #[test]
    fn config_parses_with_defaults() {
        let cfg = DiscoveryConfig::parse(TOY).unwrap();
        assert_eq!(cfg.target, squares(2, 2));
        assert_eq!(cfg.target_alphabet, 3);
        assert_eq!(cfg.base, squares(1, 1));
        assert_eq!(cfg.base_alphabet, 4);
        assert_eq!(cfg.clique_size, 4);
        assert_eq!(cfg.seed, 11);
        assert!(cfg.members.is_empty());
        assert!(cfg.family_node_limit.is_none());
    }

    #[test]
    fn config_rejections() {
        let expect = |text: &str, fragment: &str| {
            let err = DiscoveryConfig::parse(text).unwrap_err().to_string();
            assert!(err.contains(fragment), "{err:?} missing {fragment:?}");
        };
        expect("nonsense\n", "expected key = value");
        expect("frobnicate = 1\n", "unknown key");
        expect("target_alphabet = 3\ntarget_alphabet = 2\n", "given twice");
        expect("target_alphabet = x\n", "bad value");
        expect("target_alphabet = 2\n", "missing key target_order");
        expect(&TOY.replace("factor_length = 2", "factor_length = 3"), "even");
        expect(&TOY.replace("family_max_length = 5", "family_max_length = 1"), "at least");
        expect(&format!("{TOY}clique_size = 5\n"), "fixed at 4");
        expect(&format!("{TOY}base_alphabet = 3\n"), "four-letter base");
        expect(&format!("{TOY}member = 3\n"), "bad member");
        expect(&format!("{TOY}member =   \n"), "no value");
    }

    #[test]
    fn explicit_members_relax_seeding_keys() {
        let text = "\
            target_alphabet = 2\n\
            target_order = 3\n\
            target_min_period = 3\n\
            verify_order = 3\n\
            verify_min_period = 3\n\
            member = 0011\n\
            member = 0101\n\
            member = 0011\n";
        let cfg = DiscoveryConfig::parse(text).unwrap();
        assert_eq!(cfg.members, vec![w("0011"), w("0101")]);
        assert_eq!(cfg.seed, 0);
    }

    #[test]
    fn frequent_factors_rank_by_count_then_lexicographically() {
        let texts = |word: &str, len: usize, m: usize| -> Vec<String> {
            harvest_factors(&w(word), len, m).iter().map(Word::to_string).collect()
        };
        assert_eq!(texts("010101010", 2, 2), ["01", "10"]);
        assert_eq!(texts("0010010", 7, 1), ["0010010"]);
        // All three length-2 windows tie at two occurrences.
        assert_eq!(texts("0010010", 2, 8), ["00", "01", "10"]);
        assert_eq!(texts("2111", 2, 2), ["11", "21"]);
    }

    fn wt(s: &str) -> Word {
        Word::from_digits_with_alphabet(s, 3).unwrap()
    }

    #[test]
    fn family_matches_brute_force() {
        let pred = squares(1, 1);
        let family = build_family(&pred, &wt("01"), &wt("01"), 4, None);
        assert_eq!(family.members, vec![wt("01")]);
        assert!(!family.truncated);

        let oracle: Vec<Word> = enumerate_free_words(3, &pred, SearchMode::Full, 6)
            .into_iter()
            .filter(|u| u.letters().starts_with(&[0, 1]) && u.letters().ends_with(&[2, 0]))
            .collect();
        let family = build_family(&pred, &wt("01"), &wt("20"), 6, None);
        assert_eq!(family.members, oracle);
        assert!(!family.members.is_empty());
    }

    #[test]
    fn hopeless_affixes_give_empty_families() {
        let pred = squares(1, 1);
        assert!(build_family(&pred, &w("00"), &w("01"), 6, None).members.is_empty());
        assert!(build_family(&pred, &w("01"), &w("00"), 6, None).members.is_empty());
        // Room below the prefix length.
        assert!(build_family(&pred, &w("012"), &w("2"), 2, None).members.is_empty());
    }

    #[test]
    fn family_node_limit_truncates() {
        let pred = squares(1, 1);
        let zero = Word::from_digits_with_alphabet("0", 3).unwrap();
        let full = build_family(&pred, &zero, &zero, 7, None);
        assert!(!full.truncated);
        let cut = build_family(&pred, &zero, &zero, 7, Some(5));
        assert!(cut.truncated);
        assert!(cut.members.len() < full.members.len());
        assert_eq!(cut.members, full.members[..cut.members.len()]);
    }

    #[test]
    fn edges_require_both_interleavings() {
        let pred = squares(1, 1);
        let family = |words: &[&str]| CandidateFamily {
            shared_prefix: w("0"),
            shared_suffix: w("1"),
            members: words.iter().map(|s| w(s)).collect(),
            truncated: false,
        };
        let g = build_graph(&family(&["01", "02"]), &pred);
        assert_eq!(g.edge_count(), 1);
        assert!(g.has_edge(0, 1) && g.has_edge(1, 0));
        assert!(!g.has_edge(0, 0));
        // 011001 squares on its middle, whichever side starts.
        let g = build_graph(&family(&["01", "10"]), &pred);
        assert_eq!(g.edge_count(), 0);
        assert_eq!(build_graph(&family(&["01"]), &pred).edge_count(), 0);
    }

    fn complete_graph(n: usize) -> CompatibilityGraph {
        let mut graph = CompatibilityGraph {
            adjacency: vec![(0..n as u32).collect(); n],
            edge_count: (n * (n - 1) / 2) as u64,
        };
        for (v, row) in graph.adjacency.iter_mut().enumerate() {
            row.remove(v);
        }
        graph
    }

    #[test]
    fn clique_streams_on_small_graphs() {
        let k4: Vec<_> = enumerate_cliques(&complete_graph(4), 4).collect();
        assert_eq!(k4, vec![vec![0, 1, 2, 3]]);
        assert_eq!(enumerate_cliques(&complete_graph(5), 4).count(), 5);
        // A path has no triangles, let alone larger cliques.
        let mut path = complete_graph(6);
        for v in 0..6usize {
            path.adjacency[v].retain(|&u| (u as i64 - v as i64).abs() == 1);
        }
        path.edge_count = 5;
        assert_eq!(enumerate_cliques(&path, 4).count(), 0);
        assert_eq!(enumerate_cliques(&path, 2).count(), 5);
    }

    #[test]
    fn clique_stream_matches_subset_filter() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..24 {
            let n = rng.gen_range(4..=30);
            let mut graph = CompatibilityGraph { adjacency: vec![Vec::new(); n], edge_count: 0 };
            for x in 0..n {
                for y in x + 1..n {
                    if rng.gen_bool(0.5) {
                        graph.adjacency[x].push(y as u32);
                        graph.adjacency[y].push(x as u32);
                        graph.edge_count += 1;
                    }
                }
            }
            let streamed: Vec<_> = enumerate_cliques(&graph, 4).collect();
            let mut brute = Vec::new();
            for a in 0..n {
                for b in a + 1..n {
                    for c in b + 1..n {
                        for d in c + 1..n {
                            let all = [(a, b), (a, c), (a, d), (b, c), (b, d), (c, d)]
                                .iter()
                                .all(|&(x, y)| graph.has_edge(x, y));
                            if all {
                                brute.push(vec![a, b, c, d]);
                            }
                        }
                    }
                }
            }
            assert_eq!(streamed, brute);
        }
    }

    #[test]
    fn hand_fed_family_recovers_the_uniform_morphism() {
        let h = fixtures::uniform11();
        let mut text = String::from(
            "target_alphabet = 2\ntarget_order = 3\ntarget_min_period = 3\n\
             verify_order = 3\nverify_min_period = 3\n",
        );
        for image in h.images() {
            text.push_str(&format!("member = {image}\n"));
        }
        let cfg = DiscoveryConfig::parse(&text).unwrap();
        let run = run_pipeline(&cfg).unwrap();
        assert_eq!(run.stats.cliques_checked, 1);
        assert_eq!(run.accepted.len(), 1);
        let (found, report) = &run.accepted[0];
        assert_eq!(found.to_text(), h.to_text());
        assert!(report.verdict.is_accepted());
    }

    #[test]
    fn unfree_member_is_refused() {
        let text = "\
            target_alphabet = 2\n\
            target_order = 3\n\
            target_min_period = 3\n\
            verify_order = 3\n\
            verify_min_period = 3\n\
            member = 000000\n";
        let cfg = DiscoveryConfig::parse(text).unwrap();
        match run_pipeline(&cfg) {
            Err(DiscoverError::MemberNotFree(m)) => assert_eq!(m, "000000"),
            other => panic!("expected a member rejection, got {:?}", other.map(|r| r.stats)),
        }
    }

    #[test]
    fn toy_pipeline_is_deterministic() {
        let cfg = DiscoveryConfig::parse(TOY).unwrap();
        let first = run_pipeline(&cfg).unwrap();
        let again = run_pipeline_with(&cfg, &PipelineOptions { threads: 3 }).unwrap();
        assert_eq!(first.stats, again.stats);
        assert_eq!(first.stats.seed_word_length, 400);
        assert_eq!(first.stats.harvested_factors, 4);
        assert_eq!(first.stats.families, 4);
        let texts = |run: &PipelineRun| -> Vec<String> {
            run.accepted.iter().map(|(m, _)| m.to_text()).collect()
        };
        assert_eq!(texts(&first), texts(&again));
        for (m, report) in &first.accepted {
            assert!(report.verdict.is_accepted());
            // Junction claim: affixes splice back into a harvested factor.
            assert!(m.suffix().concat(m.prefix()).len() >= cfg.factor_length);
        }
    }

    #[test]
    fn candidate_cap_stops_early() {
        let mut cfg = DiscoveryConfig::parse(TOY).unwrap();
        let full = run_pipeline(&cfg).unwrap();
        assert!(!full.stats.candidate_limit_hit);
        assert!(full.stats.cliques_checked > 1, "{:?}", full.stats);
        cfg.max_candidates = Some(1);
        let capped = run_pipeline(&cfg).unwrap();
        assert!(capped.stats.candidate_limit_hit);
        assert_eq!(capped.stats.cliques_checked, 1);
    }
}
