//! Command line front end.  Every run prints a human summary or, with
//! `--json`, a certificate embedding the full parameter record, so any
//! outcome can be re-derived later with `replay`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use kabelian::search::{
    budget_search_with, exhaustive_search_with, prove_finite_with, SearchLimits, SearchOptions,
};
use kabelian::{
    find_power, random_long_word, run_pipeline_with, surviving_squares, verify_with,
    AvoidancePredicate, DiscoveryConfig, FactorSet, FiniteVerdict, Morphism, PipelineOptions,
    RandomSearchConfig, SearchMode, SearchReport, Verdict, VerifyOptions, Word,
};

/// Unbounded searches stop here unless `--allow-long` lifts the cap.
const QUICK_NODE_BUDGET: u64 = 2_000_000;
/// Verification refuses above this many raw cut triples without
/// `--allow-long`.
const QUICK_TRIPLE_BUDGET: u64 = 200_000_000;

const EXIT_VIOLATED: u8 = 1;
const EXIT_USAGE: u8 = 2;

#[derive(Parser)]
#[command(name = "kabelian", version, about = "k-abelian repetition workbench")]
struct Cli {
    /// Print the run certificate as JSON instead of a summary.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Test one word for k-abelian powers.
    Check(CheckArgs),
    /// Enumerate the tree of free words over an alphabet.
    Search(SearchArgs),
    /// Longest binary words with a bounded number of distinct square
    /// factors.
    BudgetSearch(BudgetSearchArgs),
    /// Grow a long free word by seeded randomized backtracking.
    Random(RandomArgs),
    /// Certify that only finitely many words are free.
    ProveFinite(ProveFiniteArgs),
    /// Check a morphism file against the square-freeness conditions.
    Verify(VerifyArgs),
    /// Run the morphism discovery pipeline from a config file.
    Discover(DiscoverArgs),
    /// Re-run a saved certificate and compare outcomes.
    Replay(ReplayArgs),
}

#[derive(Args)]
struct PredicateArgs {
    /// Number of equivalent blocks (2 squares, 3 cubes).
    #[arg(long)]
    power: usize,
    /// Equivalence order k.
    #[arg(long, default_value_t = 1)]
    k: usize,
    /// Ignore repetitions of any smaller period.
    #[arg(long, default_value_t = 1)]
    min_period: usize,
}

#[derive(Args)]
struct CheckArgs {
    /// The word, written as digits.
    word: String,
    #[command(flatten)]
    pred: PredicateArgs,
}

#[derive(Clone, Copy, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Mode {
    Full,
    Prelyndon,
}

impl From<Mode> for SearchMode {
    fn from(mode: Mode) -> SearchMode {
        match mode {
            Mode::Full => SearchMode::Full,
            Mode::Prelyndon => SearchMode::PreLyndon,
        }
    }
}

#[derive(Args)]
struct SearchArgs {
    #[arg(long)]
    alphabet: usize,
    #[command(flatten)]
    pred: PredicateArgs,
    #[arg(long, value_enum, default_value_t = Mode::Full)]
    mode: Mode,
    #[arg(long)]
    max_length: Option<usize>,
    #[arg(long)]
    max_nodes: Option<u64>,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Run without the quick node budget.
    #[arg(long)]
    allow_long: bool,
}

#[derive(Args)]
struct BudgetSearchArgs {
    /// Equivalence order k.
    #[arg(long)]
    k: usize,
    /// Distinct square factors tolerated.
    #[arg(long)]
    budget: usize,
    #[arg(long)]
    max_length: Option<usize>,
    #[arg(long)]
    max_nodes: Option<u64>,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    #[arg(long)]
    allow_long: bool,
}

#[derive(Args)]
struct RandomArgs {
    #[arg(long)]
    alphabet: usize,
    #[command(flatten)]
    pred: PredicateArgs,
    /// Length to grow to.
    #[arg(long)]
    target: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 1_000_000)]
    max_restarts: u64,
    /// Mean letters dropped per dead end; 1 is a complete depth-first
    /// search, larger values abandon branches for mobility.
    #[arg(long, default_value_t = 1)]
    mean_backoff: usize,
}

#[derive(Args)]
struct ProveFiniteArgs {
    #[arg(long)]
    alphabet: usize,
    #[command(flatten)]
    pred: PredicateArgs,
    #[arg(long)]
    max_nodes: Option<u64>,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    #[arg(long)]
    allow_long: bool,
}

#[derive(Args)]
struct VerifyArgs {
    /// Morphism file.
    file: PathBuf,
    /// Equivalence order k.
    #[arg(long)]
    k: usize,
    /// Certified squares have period at least p.
    #[arg(long)]
    p: usize,
    /// Comma-separated factors to try as the invertible row set.
    #[arg(long)]
    rows: Option<String>,
    /// Image length up to which products are scanned directly.
    #[arg(long)]
    span: Option<usize>,
    /// Also list the periods below p that do occur.
    #[arg(long)]
    squares: bool,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    #[arg(long)]
    allow_long: bool,
}

#[derive(Args)]
struct DiscoverArgs {
    /// Discovery config file.
    file: PathBuf,
    /// Directory for accepted morphisms and their reports.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    threads: usize,
}

#[derive(Args)]
struct ReplayArgs {
    /// Certificate file saved from a --json run.
    file: PathBuf,
}

#[derive(Serialize)]
struct Certificate<'a> {
    command: &'a str,
    params: Value,
    outcome: Value,
    version: &'a str,
    elapsed_ms: u64,
    seed: Option<u64>,
}

/// What a command computed: the JSON payload, the human rendering of it,
/// and the exit status.
struct CmdResult {
    outcome: Value,
    human: String,
    code: u8,
    seed: Option<u64>,
}

impl CmdResult {
    fn new(outcome: Value, human: String, code: u8) -> CmdResult {
        CmdResult { outcome, human, code, seed: None }
    }
}

fn fail(message: String) -> Result<CmdResult, String> {
    Err(message)
}

#[derive(Serialize, Deserialize)]
struct CheckParams {
    word: String,
    power: usize,
    k: usize,
    min_period: usize,
}

fn run_check(p: &CheckParams) -> Result<CmdResult, String> {
    let word = Word::from_digits(&p.word).map_err(|e| e.to_string())?;
    let pred =
        AvoidancePredicate::new(p.power, p.k, p.min_period).map_err(|e| e.to_string())?;
    Ok(match find_power(&word, &pred) {
        None => CmdResult::new(
            json!({ "free": true, "occurrence": null }),
            format!("free: no {}-abelian {}-power of period at least {}", p.k, p.power, p.min_period),
            0,
        ),
        Some(occ) => CmdResult::new(
            json!({ "free": false, "occurrence": occ }),
            format!(
                "{}-abelian {}-power at positions {}..{}, period {}: {}",
                p.k,
                p.power,
                occ.start,
                occ.end(),
                occ.period,
                word.factor(occ.start..occ.end()),
            ),
            EXIT_VIOLATED,
        ),
    })
}

#[derive(Serialize, Deserialize)]
struct SearchParams {
    alphabet: usize,
    power: usize,
    k: usize,
    min_period: usize,
    mode: Mode,
    max_length: Option<usize>,
    max_nodes: Option<u64>,
    threads: usize,
    allow_long: bool,
}

/// The quick budget steps in when nothing else bounds the run.
fn capped_limits(
    max_length: Option<usize>,
    max_nodes: Option<u64>,
    allow_long: bool,
) -> (SearchLimits, bool) {
    let unbounded = max_length.is_none() && max_nodes.is_none() && !allow_long;
    let limits = SearchLimits {
        max_length,
        max_nodes: if unbounded { Some(QUICK_NODE_BUDGET) } else { max_nodes },
        wall_time: None,
    };
    (limits, unbounded)
}

fn quick_budget_refusal(name: &str) -> String {
    format!(
        "{name} exceeded the quick budget of {QUICK_NODE_BUDGET} nodes; \
         pass --allow-long or set --max-nodes/--max-length"
    )
}

fn render_search_report(r: &SearchReport) -> String {
    let mut s = String::new();
    let status = if r.exhausted { "exhausted" } else { "stopped at a limit" };
    let _ = writeln!(s, "{status}: {} nodes, longest word {}", r.node_count, r.max_depth);
    let _ = writeln!(s, "witness: {}", r.witness);
    let _ = write!(s, "per length: {:?}", r.per_depth_counts);
    s
}

fn run_search(p: &SearchParams) -> Result<CmdResult, String> {
    let pred =
        AvoidancePredicate::new(p.power, p.k, p.min_period).map_err(|e| e.to_string())?;
    let (limits, quick) = capped_limits(p.max_length, p.max_nodes, p.allow_long);
    let opts = SearchOptions { threads: p.threads, ..SearchOptions::default() };
    let report = exhaustive_search_with(p.alphabet, &pred, p.mode.into(), &limits, &opts);
    if quick && !report.exhausted {
        return fail(quick_budget_refusal("search"));
    }
    let human = render_search_report(&report);
    let code = if report.exhausted { 0 } else { EXIT_VIOLATED };
    Ok(CmdResult::new(serde_json::to_value(&report).unwrap(), human, code))
}

#[derive(Serialize, Deserialize)]
struct BudgetSearchParams {
    k: usize,
    budget: usize,
    max_length: Option<usize>,
    max_nodes: Option<u64>,
    threads: usize,
    allow_long: bool,
}

fn run_budget_search(p: &BudgetSearchParams) -> Result<CmdResult, String> {
    let (limits, quick) = capped_limits(p.max_length, p.max_nodes, p.allow_long);
    let opts = SearchOptions { threads: p.threads, ..SearchOptions::default() };
    let report = budget_search_with(p.k, p.budget, &limits, &opts);
    if quick && !report.exhausted {
        return fail(quick_budget_refusal("budget-search"));
    }
    let human = render_search_report(&report);
    let code = if report.exhausted { 0 } else { EXIT_VIOLATED };
    Ok(CmdResult::new(serde_json::to_value(&report).unwrap(), human, code))
}

#[derive(Serialize, Deserialize)]
struct RandomParams {
    alphabet: usize,
    power: usize,
    k: usize,
    min_period: usize,
    target: usize,
    seed: u64,
    max_restarts: u64,
    mean_backoff: usize,
}

fn run_random(p: &RandomParams) -> Result<CmdResult, String> {
    let pred =
        AvoidancePredicate::new(p.power, p.k, p.min_period).map_err(|e| e.to_string())?;
    let cfg = RandomSearchConfig {
        seed: p.seed,
        target_length: p.target,
        max_restarts: p.max_restarts,
        mean_backoff: p.mean_backoff,
    };
    let mut result = match random_long_word(p.alphabet, &pred, &cfg) {
        Some(word) => CmdResult::new(
            json!({ "witness": word.to_string(), "length": word.len() }),
            format!("{word}"),
            0,
        ),
        None => CmdResult::new(
            json!({ "witness": null, "length": 0 }),
            format!("no word of length {} found within {} restarts", p.target, p.max_restarts),
            EXIT_VIOLATED,
        ),
    };
    result.seed = Some(p.seed);
    Ok(result)
}

#[derive(Serialize, Deserialize)]
struct ProveFiniteParams {
    alphabet: usize,
    power: usize,
    k: usize,
    min_period: usize,
    max_nodes: Option<u64>,
    threads: usize,
    allow_long: bool,
}

fn run_prove_finite(p: &ProveFiniteParams) -> Result<CmdResult, String> {
    let pred =
        AvoidancePredicate::new(p.power, p.k, p.min_period).map_err(|e| e.to_string())?;
    let (limits, quick) = capped_limits(None, p.max_nodes, p.allow_long);
    let opts = SearchOptions { threads: p.threads, ..SearchOptions::default() };
    Ok(match prove_finite_with(p.alphabet, &pred, &limits, &opts) {
        Err(e) => CmdResult::new(
            json!({
                "verdict": "unprovable",
                "report": null,
                "root": e.root,
                "exponent_bound": e.exponent_bound,
            }),
            e.to_string(),
            EXIT_VIOLATED,
        ),
        Ok(FiniteVerdict::Finite(report)) => CmdResult::new(
            json!({ "verdict": "finite", "report": report }),
            format!(
                "finite: free words end by length {} ({} nodes)\n{}",
                report.max_depth,
                report.node_count,
                render_search_report(&report),
            ),
            0,
        ),
        Ok(FiniteVerdict::Unknown(report)) => {
            if quick {
                return fail(quick_budget_refusal("prove-finite"));
            }
            CmdResult::new(
                json!({ "verdict": "unknown", "report": report }),
                format!("not settled within the limits\n{}", render_search_report(&report)),
                EXIT_VIOLATED,
            )
        }
    })
}

#[derive(Serialize, Deserialize)]
struct VerifyParams {
    morphism: String,
    k: usize,
    p: usize,
    rows: Option<String>,
    span: Option<usize>,
    squares: bool,
    threads: usize,
    allow_long: bool,
}

fn run_verify(p: &VerifyParams) -> Result<CmdResult, String> {
    let morphism = Morphism::parse(&p.morphism).map_err(|e| e.to_string())?;
    let preferred_rows = match &p.rows {
        None => None,
        Some(list) => {
            let words = list
                .split(',')
                .map(|s| Word::from_digits_with_alphabet(s.trim(), morphism.alphabet()))
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| format!("bad --rows: {e}"))?;
            Some(FactorSet::from_words(words).map_err(|e| format!("bad --rows: {e}"))?)
        }
    };
    let image_letters: u64 = morphism.images().iter().map(|w| w.len() as u64).sum();
    let raw_triples = image_letters.pow(3);
    if raw_triples > QUICK_TRIPLE_BUDGET && !p.allow_long {
        return fail(format!(
            "verification would enumerate {raw_triples} raw cut triples; pass --allow-long"
        ));
    }
    let opts = VerifyOptions {
        preferred_rows,
        span: p.span,
        threads: p.threads,
        congruence_filter: false,
    };
    let report = verify_with(&morphism, p.k, p.p, &opts).map_err(|e| e.to_string())?;
    let squares = p
        .squares
        .then(|| surviving_squares(&morphism, p.k, p.p, Some(report.span)))
        .transpose()
        .map_err(|e| e.to_string())?;
    let mut human = match &report.verdict {
        Verdict::Accepted => format!(
            "accepted: images of abelian-square-free words avoid \
             {}-abelian squares of period at least {}",
            p.k, p.p
        ),
        Verdict::Rejected(cex) => format!("rejected: {cex:?}"),
        Verdict::PreconditionFailed { reason } => format!("preconditions not met: {reason}"),
    };
    let _ = write!(
        human,
        "\ntriples: {} raw, {} affix survivors, {} lattice survivors, {} claim checks",
        report.stats.raw_triples,
        report.stats.affix_survivors,
        report.stats.lattice_survivors,
        report.stats.claim_checks,
    );
    if let Some(rows) = &report.rows {
        let names: Vec<String> = rows.members().iter().map(Word::to_string).collect();
        let _ = write!(human, "\nrows: {}", names.join(" "));
    }
    if let Some(inv) = &squares {
        let names: Vec<String> = inv.members().map(Word::to_string).collect();
        let _ = write!(human, "\nsquares below the period bound: {}", names.join(" "));
    }
    let code = match &report.verdict {
        Verdict::Accepted => 0,
        Verdict::Rejected(_) => EXIT_VIOLATED,
        Verdict::PreconditionFailed { .. } => EXIT_USAGE,
    };
    Ok(CmdResult::new(json!({ "report": report, "squares": squares }), human, code))
}

#[derive(Serialize, Deserialize)]
struct DiscoverParams {
    config: String,
    out: Option<PathBuf>,
    threads: usize,
}

fn run_discover(p: &DiscoverParams) -> Result<CmdResult, String> {
    let cfg = DiscoveryConfig::parse(&p.config).map_err(|e| e.to_string())?;
    let opts = PipelineOptions { threads: p.threads };
    let run = run_pipeline_with(&cfg, &opts).map_err(|e| e.to_string())?;
    let accepted: Vec<Value> = run
        .accepted
        .iter()
        .map(|(m, report)| json!({ "morphism": m.to_text(), "report": report }))
        .collect();
    let mut human = format!(
        "seed word {}, {} factors, {} families ({} members, {} edges), \
         {} cliques checked, {} accepted",
        run.stats.seed_word_length,
        run.stats.harvested_factors,
        run.stats.families,
        run.stats.family_members,
        run.stats.edges,
        run.stats.cliques_checked,
        run.stats.accepted,
    );
    if run.stats.truncated_families > 0 {
        let _ = write!(human, "\n{} families hit the node limit", run.stats.truncated_families);
    }
    if run.stats.candidate_limit_hit {
        let _ = write!(human, "\nstopped at the candidate cap");
    }
    if let Some(dir) = &p.out {
        fs::create_dir_all(dir).map_err(|e| format!("cannot create {}: {e}", dir.display()))?;
        for (i, (m, report)) in run.accepted.iter().enumerate() {
            let stem = dir.join(format!("morphism-{:03}", i + 1));
            let report_json = serde_json::to_string_pretty(report).unwrap();
            fs::write(stem.with_extension("txt"), m.to_text())
                .and_then(|()| fs::write(stem.with_extension("json"), report_json))
                .map_err(|e| format!("cannot write {}: {e}", stem.display()))?;
            let _ = write!(human, "\nwrote {}.txt", stem.display());
        }
    }
    let mut result = CmdResult::new(
        json!({ "stats": run.stats, "accepted": accepted }),
        human,
        0,
    );
    result.seed = Some(cfg.seed);
    Ok(result)
}

/// Drops every `elapsed_ms` nested anywhere in the payload, so replays
/// compare outcomes and not timings.
fn strip_elapsed(value: &mut Value) {
    match value {
        Value::Object(map) => {
            map.remove("elapsed_ms");
            for v in map.values_mut() {
                strip_elapsed(v);
            }
        }
        Value::Array(items) => items.iter_mut().for_each(strip_elapsed),
        _ => {}
    }
}

fn dispatch(command: &str, params: Value) -> Result<CmdResult, String> {
    fn go<P: for<'d> Deserialize<'d>>(
        params: Value,
        run: impl Fn(&P) -> Result<CmdResult, String>,
    ) -> Result<CmdResult, String> {
        let p: P = serde_json::from_value(params).map_err(|e| format!("bad params: {e}"))?;
        run(&p)
    }
    match command {
        "check" => go(params, run_check),
        "search" => go(params, run_search),
        "budget-search" => go(params, run_budget_search),
        "random" => go(params, run_random),
        "prove-finite" => go(params, run_prove_finite),
        "verify" => go(params, run_verify),
        "discover" => go(params, |p: &DiscoverParams| {
            // A replay only compares payloads; never rewrite the files.
            let quiet =
                DiscoverParams { config: p.config.clone(), out: None, threads: p.threads };
            run_discover(&quiet)
        }),
        other => Err(format!("certificate names unknown command {other}")),
    }
}

fn run_replay(path: &Path) -> Result<CmdResult, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let cert: Value = serde_json::from_str(&text).map_err(|e| format!("bad certificate: {e}"))?;
    let command = cert
        .get("command")
        .and_then(Value::as_str)
        .ok_or("certificate has no command field")?
        .to_string();
    let params = cert.get("params").cloned().ok_or("certificate has no params field")?;
    let mut recorded = cert.get("outcome").cloned().ok_or("certificate has no outcome field")?;
    let rerun = dispatch(&command, params)?;
    let mut fresh = rerun.outcome.clone();
    strip_elapsed(&mut recorded);
    strip_elapsed(&mut fresh);
    Ok(if recorded == fresh {
        CmdResult::new(
            json!({ "command": command, "matches": true }),
            format!("replay of {command} matches the recorded outcome"),
            0,
        )
    } else {
        CmdResult::new(
            json!({ "command": command, "matches": false, "recorded": recorded, "fresh": fresh }),
            format!("replay of {command} DIFFERS from the recorded outcome"),
            EXIT_VIOLATED,
        )
    })
}

fn read(path: &Path) -> Result<String, String> {
    fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let started = Instant::now();
    let (name, params, result) = match &cli.command {
        Command::Check(a) => {
            let p = CheckParams {
                word: a.word.clone(),
                power: a.pred.power,
                k: a.pred.k,
                min_period: a.pred.min_period,
            };
            ("check", serde_json::to_value(&p).unwrap(), run_check(&p))
        }
        Command::Search(a) => {
            let p = SearchParams {
                alphabet: a.alphabet,
                power: a.pred.power,
                k: a.pred.k,
                min_period: a.pred.min_period,
                mode: a.mode,
                max_length: a.max_length,
                max_nodes: a.max_nodes,
                threads: a.threads,
                allow_long: a.allow_long,
            };
            ("search", serde_json::to_value(&p).unwrap(), run_search(&p))
        }
        Command::BudgetSearch(a) => {
            let p = BudgetSearchParams {
                k: a.k,
                budget: a.budget,
                max_length: a.max_length,
                max_nodes: a.max_nodes,
                threads: a.threads,
                allow_long: a.allow_long,
            };
            ("budget-search", serde_json::to_value(&p).unwrap(), run_budget_search(&p))
        }
        Command::Random(a) => {
            let p = RandomParams {
                alphabet: a.alphabet,
                power: a.pred.power,
                k: a.pred.k,
                min_period: a.pred.min_period,
                target: a.target,
                seed: a.seed,
                max_restarts: a.max_restarts,
                mean_backoff: a.mean_backoff,
            };
            ("random", serde_json::to_value(&p).unwrap(), run_random(&p))
        }
        Command::ProveFinite(a) => {
            let p = ProveFiniteParams {
                alphabet: a.alphabet,
                power: a.pred.power,
                k: a.pred.k,
                min_period: a.pred.min_period,
                max_nodes: a.max_nodes,
                threads: a.threads,
                allow_long: a.allow_long,
            };
            ("prove-finite", serde_json::to_value(&p).unwrap(), run_prove_finite(&p))
        }
        Command::Verify(a) => match read(&a.file) {
            Err(e) => ("verify", Value::Null, Err(e)),
            Ok(text) => {
                let p = VerifyParams {
                    morphism: text,
                    k: a.k,
                    p: a.p,
                    rows: a.rows.clone(),
                    span: a.span,
                    squares: a.squares,
                    threads: a.threads,
                    allow_long: a.allow_long,
                };
                ("verify", serde_json::to_value(&p).unwrap(), run_verify(&p))
            }
        },
        Command::Discover(a) => match read(&a.file) {
            Err(e) => ("discover", Value::Null, Err(e)),
            Ok(text) => {
                let p = DiscoverParams {
                    config: text,
                    out: a.out.clone(),
                    threads: a.threads,
                };
                ("discover", serde_json::to_value(&p).unwrap(), run_discover(&p))
            }
        },
        Command::Replay(a) => {
            ("replay", json!({ "file": a.file.clone() }), run_replay(&a.file))
        }
    };
    match result {
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(EXIT_USAGE)
        }
        Ok(res) => {
            if cli.json {
                let cert = Certificate {
                    command: name,
                    params,
                    outcome: res.outcome,
                    version: env!("CARGO_PKG_VERSION"),
                    elapsed_ms: started.elapsed().as_millis() as u64,
                    seed: res.seed,
                };
                println!("{}", serde_json::to_string_pretty(&cert).unwrap());
            } else {
                println!("{}", res.human);
            }
            ExitCode::from(res.code)
        }
    }
}
