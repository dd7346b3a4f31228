//! Exhaustive, budgeted and randomized searches over the tree of free words.
//!
//! The tree has the empty word at its root (never counted) and the free
//! one-letter extensions of a node as its children, visited in increasing
//! letter order.  Pre-Lyndon mode restricts nodes to prefixes of powers of
//! Lyndon words; exhausting that restricted tree, together with a bound on
//! how often short roots can repeat, certifies that the full language is
//! finite.

use std::sync::atomic::{AtomicBool, AtomicU64, AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::repetition::{is_free, AvoidancePredicate, Extender};
use crate::words::{pre_lyndon_step, Word};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum SearchMode {
    Full,
    PreLyndon,
}

/// Optional stopping rules; a search that hits any of them reports
/// `exhausted = false`.
#[derive(Debug, Clone, Default)]
pub struct SearchLimits {
    pub max_length: Option<usize>,
    pub max_nodes: Option<u64>,
    pub wall_time: Option<Duration>,
}

/// Tuning that does not affect the outcome of exhausted runs.
#[derive(Default)]
pub struct SearchOptions<'a> {
    /// Worker threads; 0 or 1 runs single-threaded.
    pub threads: usize,
    /// Depth at which the tree is split into independent subtree tasks;
    /// 0 picks a default.  Only relevant with more than one thread.
    pub split_depth: usize,
    /// Called with (nodes, deepest length) every `PROGRESS_INTERVAL` nodes.
    pub progress: Option<&'a (dyn Fn(u64, usize) + Sync)>,
}

pub const PROGRESS_INTERVAL: u64 = 100_000_000;
const DEFAULT_SPLIT_DEPTH: usize = 12;
const BUDGET_CHUNK: u64 = 4096;
const POLL_MASK: u64 = 1023;
const FLUSH_MASK: u64 = 65535;

/// Outcome of a tree search.
#[derive(Debug, Clone, serde::Serialize)]
pub struct SearchReport {
    pub mode: SearchMode,
    /// True when the whole tree was enumerated without hitting a limit.
    pub exhausted: bool,
    /// Number of nonempty free words visited.
    pub node_count: u64,
    pub max_depth: usize,
    /// Lexicographically least visited word of maximal length.
    pub witness: Word,
    /// Entry `i` counts visited words of length `i + 1`.
    pub per_depth_counts: Vec<u64>,
    #[serde(rename = "elapsed_ms", serialize_with = "ser_millis")]
    pub elapsed: Duration,
}

fn ser_millis<S: serde::Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_u64(d.as_millis() as u64)
}

struct Shared<'a> {
    alphabet: usize,
    mode: SearchMode,
    max_length: Option<usize>,
    deadline: Option<Instant>,
    node_budget: Option<AtomicU64>,
    stop: AtomicBool,
    progress: Option<&'a (dyn Fn(u64, usize) + Sync)>,
    global_nodes: AtomicU64,
    next_emit: AtomicU64,
    depth_seen: AtomicUsize,
}

impl<'a> Shared<'a> {
    fn new(
        alphabet: usize,
        mode: SearchMode,
        limits: &SearchLimits,
        start: Instant,
        progress: Option<&'a (dyn Fn(u64, usize) + Sync)>,
    ) -> Shared<'a> {
        Shared {
            alphabet,
            mode,
            max_length: limits.max_length,
            deadline: limits.wall_time.map(|d| start + d),
            node_budget: limits.max_nodes.map(AtomicU64::new),
            stop: AtomicBool::new(false),
            progress,
            global_nodes: AtomicU64::new(0),
            next_emit: AtomicU64::new(PROGRESS_INTERVAL),
            depth_seen: AtomicUsize::new(0),
        }
    }
}

#[derive(Default)]
struct LocalStats {
    nodes: u64,
    per_depth: Vec<u64>,
    best: Option<Vec<u8>>,
    /// Some part of the tree was skipped; clears `exhausted`.
    truncated: bool,
    /// Unwind without visiting anything else (budget gone, stop, deadline).
    /// Length caps set only `truncated`: siblings still get explored.
    aborted: bool,
    budget_chunk: u64,
    unflushed: u64,
    polls: u64,
}

impl LocalStats {
    /// Reserves the right to count one more node; false means the global
    /// node budget ran out.
    fn acquire(&mut self, sh: &Shared) -> bool {
        let Some(budget) = &sh.node_budget else { return true };
        if self.budget_chunk == 0 {
            let mut current = budget.load(Ordering::Relaxed);
            loop {
                let take = current.min(BUDGET_CHUNK);
                if take == 0 {
                    sh.stop.store(true, Ordering::Relaxed);
                    return false;
                }
                match budget.compare_exchange_weak(
                    current,
                    current - take,
                    Ordering::Relaxed,
                    Ordering::Relaxed,
                ) {
                    Ok(_) => {
                        self.budget_chunk = take;
                        break;
                    }
                    Err(seen) => current = seen,
                }
            }
        }
        self.budget_chunk -= 1;
        true
    }

    fn record(&mut self, depth: usize, word: &[u8], sh: &Shared) {
        self.nodes += 1;
        if self.per_depth.len() < depth {
            self.per_depth.resize(depth, 0);
        }
        self.per_depth[depth - 1] += 1;
        let deeper = self.best.as_ref().map_or(true, |b| depth > b.len());
        if deeper {
            self.best = Some(word.to_vec());
            sh.depth_seen.fetch_max(depth, Ordering::Relaxed);
        }
        if sh.progress.is_some() {
            self.unflushed += 1;
            if self.unflushed & FLUSH_MASK == 0 {
                self.flush_progress(sh);
            }
        }
    }

    fn flush_progress(&mut self, sh: &Shared) {
        if self.unflushed == 0 {
            return;
        }
        let total = sh.global_nodes.fetch_add(self.unflushed, Ordering::Relaxed) + self.unflushed;
        self.unflushed = 0;
        let Some(progress) = sh.progress else { return };
        let mut next = sh.next_emit.load(Ordering::Relaxed);
        while total >= next {
            match sh.next_emit.compare_exchange(
                next,
                next + PROGRESS_INTERVAL,
                Ordering::Relaxed,
                Ordering::Relaxed,
            ) {
                Ok(_) => {
                    progress(total, sh.depth_seen.load(Ordering::Relaxed));
                    next += PROGRESS_INTERVAL;
                }
                Err(seen) => next = seen,
            }
        }
    }

    /// Cheap periodic check for stop requests and the wall clock.
    fn interrupted(&mut self, sh: &Shared) -> bool {
        self.polls += 1;
        if self.polls & POLL_MASK != 0 {
            return false;
        }
        if sh.stop.load(Ordering::Relaxed) {
            return true;
        }
        if let Some(deadline) = sh.deadline {
            if Instant::now() >= deadline {
                sh.stop.store(true, Ordering::Relaxed);
                return true;
            }
        }
        false
    }

    fn merge(mut self, other: LocalStats) -> LocalStats {
        self.nodes += other.nodes;
        if self.per_depth.len() < other.per_depth.len() {
            self.per_depth.resize(other.per_depth.len(), 0);
        }
        for (i, n) in other.per_depth.iter().enumerate() {
            self.per_depth[i] += n;
        }
        self.best = match (self.best.take(), other.best) {
            (None, b) => b,
            (a, None) => a,
            (Some(a), Some(b)) => {
                if b.len() > a.len() || (b.len() == a.len() && b < a) {
                    Some(b)
                } else {
                    Some(a)
                }
            }
        };
        self.truncated |= other.truncated;
        self
    }
}

/// Walks the subtree below the extender's current word.  When `frontier`
/// matches a depth, nodes there are handed to `tasks` instead of being
/// expanded.
fn dfs(
    ext: &mut Extender,
    period: usize,
    sh: &Shared,
    st: &mut LocalStats,
    frontier: Option<usize>,
    tasks: &mut Vec<(Vec<u8>, usize)>,
) {
    for c in 0..sh.alphabet as u8 {
        if st.aborted || st.interrupted(sh) {
            st.aborted = true;
            st.truncated = true;
            return;
        }
        let next_period = match sh.mode {
            SearchMode::Full => 0,
            SearchMode::PreLyndon => match pre_lyndon_step(ext.word(), period, c) {
                Some(p) => p,
                None => continue,
            },
        };
        if !ext.try_push(c) {
            continue;
        }
        if !st.acquire(sh) {
            ext.pop();
            st.aborted = true;
            st.truncated = true;
            return;
        }
        let depth = ext.len();
        st.record(depth, ext.word(), sh);
        if frontier == Some(depth) {
            tasks.push((ext.word().to_vec(), next_period));
        } else if sh.max_length == Some(depth) {
            st.truncated = true;
        } else {
            dfs(ext, next_period, sh, st, frontier, tasks);
        }
        ext.pop();
    }
}

fn run_search(
    alphabet: usize,
    pred: &AvoidancePredicate,
    mode: SearchMode,
    limits: &SearchLimits,
    opts: &SearchOptions,
) -> SearchReport {
    assert!((1..=10).contains(&alphabet), "alphabet size out of range");
    let start = Instant::now();
    let threads = opts.threads.max(1);
    let sh = Shared::new(alphabet, mode, limits, start, opts.progress);
    let split = if opts.split_depth > 0 { opts.split_depth } else { DEFAULT_SPLIT_DEPTH };
    let frontier = match (threads, limits.max_length) {
        (1, _) => None,
        (_, Some(ml)) if ml <= split => None,
        _ => Some(split),
    };

    let mut tasks = Vec::new();
    let mut root = LocalStats::default();
    let mut ext = Extender::new(alphabet, pred);
    dfs(&mut ext, 1, &sh, &mut root, frontier, &mut tasks);
    root.flush_progress(&sh);

    let mut parts = vec![root];
    if !tasks.is_empty() {
        let next_task = AtomicUsize::new(0);
        let done = Mutex::new(Vec::new());
        thread::scope(|scope| {
            for _ in 0..threads {
                scope.spawn(|| {
                    let mut local = LocalStats::default();
                    let mut sink = Vec::new();
                    loop {
                        let i = next_task.fetch_add(1, Ordering::Relaxed);
                        if i >= tasks.len() {
                            break;
                        }
                        if sh.stop.load(Ordering::Relaxed) {
                            local.truncated = true;
                            break;
                        }
                        let (word, period) = &tasks[i];
                        let mut ext = Extender::new(alphabet, pred);
                        for &c in word {
                            ext.push_unchecked(c);
                        }
                        dfs(&mut ext, *period, &sh, &mut local, None, &mut sink);
                    }
                    local.flush_progress(&sh);
                    done.lock().unwrap().push(local);
                });
            }
        });
        parts.extend(done.into_inner().unwrap());
    }

    let merged = parts.into_iter().reduce(LocalStats::merge).unwrap();
    let exhausted = !merged.truncated && !sh.stop.load(Ordering::Relaxed);
    let best = merged.best.unwrap_or_default();
    SearchReport {
        mode,
        exhausted,
        node_count: merged.nodes,
        max_depth: best.len(),
        witness: Word::from_raw(alphabet, best),
        per_depth_counts: merged.per_depth,
        elapsed: start.elapsed(),
    }
}

/// Enumerates the tree of free words single-threaded.
pub fn exhaustive_search(
    alphabet: usize,
    pred: &AvoidancePredicate,
    mode: SearchMode,
    limits: &SearchLimits,
) -> SearchReport {
    exhaustive_search_with(alphabet, pred, mode, limits, &SearchOptions::default())
}

pub fn exhaustive_search_with(
    alphabet: usize,
    pred: &AvoidancePredicate,
    mode: SearchMode,
    limits: &SearchLimits,
    opts: &SearchOptions,
) -> SearchReport {
    let report = run_search(alphabet, pred, mode, limits, opts);
    debug_assert!(
        report.witness.is_empty() || is_free(&report.witness, pred),
        "witness must be free"
    );
    report
}

/// Longest binary words containing at most `budget` distinct square
/// factors under k-abelian equivalence of the given order.
pub fn budget_search(order: usize, budget: usize, limits: &SearchLimits) -> SearchReport {
    budget_search_with(order, budget, limits, &SearchOptions::default())
}

pub fn budget_search_with(
    order: usize,
    budget: usize,
    limits: &SearchLimits,
    opts: &SearchOptions,
) -> SearchReport {
    let pred = AvoidancePredicate::with_budget(order, 1, budget).expect("valid budget predicate");
    // Packed square keys hold binary factors up to 120 letters.
    let mut capped = limits.clone();
    capped.max_length = Some(capped.max_length.unwrap_or(120).min(120));
    exhaustive_search_with(2, &pred, SearchMode::Full, &capped, opts)
}

/// Every visited word of the (possibly limited) tree in depth-first order.
pub fn enumerate_free_words(
    alphabet: usize,
    pred: &AvoidancePredicate,
    mode: SearchMode,
    max_length: usize,
) -> Vec<Word> {
    fn walk(
        ext: &mut Extender,
        period: usize,
        alphabet: usize,
        mode: SearchMode,
        max_length: usize,
        out: &mut Vec<Word>,
    ) {
        for c in 0..alphabet as u8 {
            let next_period = match mode {
                SearchMode::Full => 0,
                SearchMode::PreLyndon => match pre_lyndon_step(ext.word(), period, c) {
                    Some(p) => p,
                    None => continue,
                },
            };
            if !ext.try_push(c) {
                continue;
            }
            out.push(Word::from_raw(alphabet, ext.word().to_vec()));
            if ext.len() < max_length {
                walk(ext, next_period, alphabet, mode, max_length, out);
            }
            ext.pop();
        }
    }
    let mut out = Vec::new();
    let mut ext = Extender::new(alphabet, pred);
    walk(&mut ext, 1, alphabet, mode, max_length, &mut out);
    out
}

/// Outcome of a finiteness proof attempt.
#[derive(Debug, Clone, serde::Serialize)]
pub enum FiniteVerdict {
    /// The restricted tree was exhausted: only finitely many words are
    /// free, and none is longer than the report's `max_depth`.
    Finite(SearchReport),
    /// A limit stopped the search first.
    Unknown(SearchReport),
}

impl FiniteVerdict {
    pub fn report(&self) -> &SearchReport {
        match self {
            FiniteVerdict::Finite(r) | FiniteVerdict::Unknown(r) => r,
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, FiniteVerdict::Finite(_))
    }
}

/// Certification is refused when some short root can repeat without ever
/// violating the predicate, which happens for square-budget predicates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FinitudeError {
    pub root: Word,
    pub exponent_bound: usize,
}

impl std::fmt::Display for FinitudeError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "cannot certify finiteness: powers of {} stay free up to exponent {}",
            self.root, self.exponent_bound
        )
    }
}

impl std::error::Error for FinitudeError {}

/// Tries to certify that only finitely many words over the alphabet are
/// free.
///
/// Two facts are established: every root of length up to the predicate's
/// minimum period becomes non-free when repeated at most `2 * power *
/// min_period` times, and the pre-Lyndon tree is finite.  Together they
/// bound the length of every free word by the deepest pre-Lyndon node.
pub fn prove_finite(
    alphabet: usize,
    pred: &AvoidancePredicate,
    limits: &SearchLimits,
) -> Result<FiniteVerdict, FinitudeError> {
    prove_finite_with(alphabet, pred, limits, &SearchOptions::default())
}

pub fn prove_finite_with(
    alphabet: usize,
    pred: &AvoidancePredicate,
    limits: &SearchLimits,
    opts: &SearchOptions,
) -> Result<FiniteVerdict, FinitudeError> {
    let bound = 2 * pred.power() * pred.min_period();
    for len in 1..=pred.min_period() {
        let mut data = vec![0u8; len];
        'roots: loop {
            let root = Word::new(alphabet, data.clone()).expect("valid root");
            if (1..=bound).all(|t| is_free(&root.repeat(t), pred)) {
                return Err(FinitudeError { root, exponent_bound: bound });
            }
            let mut i = len;
            loop {
                if i == 0 {
                    break 'roots;
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
    let report = exhaustive_search_with(alphabet, pred, SearchMode::PreLyndon, limits, opts);
    if report.exhausted {
        Ok(FiniteVerdict::Finite(report))
    } else {
        Ok(FiniteVerdict::Unknown(report))
    }
}

/// Randomized depth-first extension with geometric backoff.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct RandomSearchConfig {
    pub seed: u64,
    pub target_length: usize,
    /// How many dead ends may be hit before giving up.
    pub max_restarts: u64,
    /// Mean number of letters removed per dead end (at least 1).  At 1 the
    /// walk is a complete depth-first search in random child order; larger
    /// values jump back further and abandon the skipped branches for good,
    /// which moves faster through thickets but can write off the whole
    /// tree early on unforgiving languages.
    pub mean_backoff: usize,
}

/// Grows a free word of the target length by randomized extension,
/// removing a geometrically distributed number of letters at dead ends.
/// The result, if any, is re-verified before being returned.
pub fn random_long_word(
    alphabet: usize,
    pred: &AvoidancePredicate,
    cfg: &RandomSearchConfig,
) -> Option<Word> {
    assert!((1..=10).contains(&alphabet), "alphabet size out of range");
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mean = cfg.mean_backoff.max(1);
    let mut ext = Extender::new(alphabet, pred);
    let mut restarts = 0u64;
    // Letters already tried at each depth, so a descent never re-tests a
    // branch it has given up on. With mean_backoff = 1 this is a complete
    // depth-first search in random child order; larger means abandon whole
    // sibling groups on each dead end, trading completeness for mobility.
    let mut tried: Vec<u16> = vec![0];
    while ext.len() < cfg.target_length {
        let depth = ext.len();
        let mask = tried[depth];
        let left = alphabet as u32 - mask.count_ones();
        if left > 0 {
            let mut pick = rng.gen_range(0..left);
            let mut c = 0u8;
            loop {
                if mask & (1 << c) == 0 {
                    if pick == 0 {
                        break;
                    }
                    pick -= 1;
                }
                c += 1;
            }
            tried[depth] |= 1 << c;
            if ext.try_push(c) {
                tried.push(0);
            }
            continue;
        }
        if depth == 0 {
            // Every branch under the root has been tried and abandoned.
            return None;
        }
        restarts += 1;
        if restarts > cfg.max_restarts {
            return None;
        }
        let mut drop = 1usize;
        while mean > 1 && rng.gen_range(0..mean as u32) != 0 {
            drop += 1;
        }
        for _ in 0..drop.min(ext.len()) {
            ext.pop();
        }
        tried.truncate(ext.len() + 1);
    }
    let word = Word::from_raw(alphabet, ext.word().to_vec());
    assert!(is_free(&word, pred), "randomized witness failed re-verification");
    Some(word)
}
