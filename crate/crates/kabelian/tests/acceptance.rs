//! Acceptance gate: every published number the workbench must reproduce,
//! one test per claim, each printing a pass line.  The long runs are
//! ignored by default; run them with `cargo test --test acceptance --
//! --ignored --nocapture`.

mod common;

use std::collections::BTreeSet;

use kabelian::morphism::fixtures;
use kabelian::words::{factor_counts, is_pre_lyndon, splitting_identity_check};
use kabelian::{
    budget_search, build_count_matrix, distinct_squares, exhaustive_search, find_power, is_free,
    k_abelian_eq, lyndon_factorize, prove_finite, random_long_word, select_rows,
    surviving_squares, verify, verify_with, AvoidancePredicate, EquivalenceMode, FactorSet,
    Morphism, RandomSearchConfig, SearchLimits, SearchMode, VerifyError, VerifyOptions, Word,
};
use kabelian::search::enumerate_free_words;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{digits, oracle_tree, w, wa};

fn pass(name: &str) {
    println!("acceptance: {name} ... pass");
}

fn engine_tree(alphabet: usize, pred: &AvoidancePredicate, mode: SearchMode) -> BTreeSet<String> {
    enumerate_free_words(alphabet, pred, mode, 256)
        .iter()
        .map(|w| w.to_string())
        .collect()
}

fn inventory(h: &Morphism, k: usize, p: usize, span: usize) -> BTreeSet<String> {
    surviving_squares(h, k, p, Some(span))
        .unwrap()
        .members()
        .map(|w| w.to_string())
        .collect()
}

fn string_set(items: &[&str]) -> BTreeSet<String> {
    items.iter().map(|s| s.to_string()).collect()
}

#[test]
fn figure_trees_full_and_prelyndon() {
    let pred = AvoidancePredicate::new(2, 1, 2).unwrap();

    let full = exhaustive_search(2, &pred, SearchMode::Full, &SearchLimits::default());
    assert!(full.exhausted);
    assert_eq!(full.node_count, 68);
    assert_eq!(full.max_depth, 10);
    assert_eq!(full.per_depth_counts, vec![2, 4, 8, 10, 12, 10, 8, 6, 6, 2]);
    let engine_full = engine_tree(2, &pred, SearchMode::Full);
    assert_eq!(engine_full, oracle_tree(2, 2, 1, 2, false, 256));
    assert_eq!(engine_full.len(), 68);

    let skel = exhaustive_search(2, &pred, SearchMode::PreLyndon, &SearchLimits::default());
    assert!(skel.exhausted);
    assert_eq!(skel.node_count, 27);
    assert_eq!(skel.max_depth, 9);
    assert_eq!(skel.per_depth_counts, vec![2, 3, 5, 4, 5, 3, 3, 1, 1]);
    assert_eq!(skel.witness.to_string(), "000111000");
    let engine_skel = engine_tree(2, &pred, SearchMode::PreLyndon);
    assert_eq!(engine_skel, oracle_tree(2, 2, 1, 2, true, 256));
    assert_eq!(engine_skel.len(), 27);

    pass("abelian-square tree, full and restricted, matches the recomputed node sets");
}

#[test]
fn cube_tree_exhausts_at_nine() {
    let pred = AvoidancePredicate::new(3, 1, 1).unwrap();
    let report = exhaustive_search(2, &pred, SearchMode::Full, &SearchLimits::default());
    assert!(report.exhausted);
    assert_eq!(report.max_depth, 9);
    let engine = engine_tree(2, &pred, SearchMode::Full);
    let oracle = oracle_tree(2, 3, 1, 1, false, 256);
    assert_eq!(engine, oracle);
    assert_eq!(report.node_count, oracle.len() as u64);
    pass("binary abelian-cube tree exhausts at length 9");
}

#[test]
fn uniform_morphism_certificate() {
    let h = fixtures::uniform11();
    let report = verify(&h, 3, 3).unwrap();
    assert!(report.verdict.is_accepted(), "verdict: {:?}", report.verdict);
    assert_eq!(report.stats.raw_triples, 85_184);

    // Occurrence counts per image, one row per letter, factor columns in
    // lexicographic order.
    const COUNTS: [[i64; 8]; 4] = [
        [3, 1, 2, 1, 1, 2, 1, 0],
        [2, 1, 1, 1, 1, 1, 1, 3],
        [1, 2, 1, 2, 2, 1, 2, 0],
        [1, 2, 2, 1, 2, 1, 1, 1],
    ];
    let n = build_count_matrix(&h, 3).unwrap();
    assert_eq!(n.rows().len(), 8);
    for x in 0..4 {
        for f in 0..8 {
            assert_eq!(n.entry(f, x), COUNTS[x][f], "entry ({f}, {x})");
        }
    }

    let sel = select_rows(&n, None).unwrap();
    let picked: Vec<String> = sel.factor_set().members().iter().map(|w| w.to_string()).collect();
    assert_eq!(picked, ["000", "001", "010", "011"]);
    let m: Vec<Vec<i64>> = vec![
        vec![3, 2, 1, 1],
        vec![1, 1, 2, 2],
        vec![2, 1, 1, 2],
        vec![1, 1, 2, 1],
    ];
    assert_eq!(sel.matrix(), m.as_slice());
    assert_eq!(sel.det(), -2);

    let rows = report.rows.expect("accepted report carries the row set");
    let names: Vec<String> = rows.members().iter().map(|w| w.to_string()).collect();
    assert_eq!(names, ["000", "001", "010", "011"]);
    pass("11-uniform morphism accepted; count matrix, row choice and determinant check out");
}

#[test]
fn ternary_morphism_certificate() {
    let h = fixtures::ternary();
    let set = FactorSet::from_words(vec![wa("00", 3), wa("01", 3), wa("02", 3), wa("11", 3)])
        .unwrap();
    let opts = VerifyOptions { preferred_rows: Some(set), ..VerifyOptions::default() };
    let report = verify_with(&h, 2, 2, &opts).unwrap();
    assert!(report.verdict.is_accepted(), "verdict: {:?}", report.verdict);
    let names: Vec<String> =
        report.rows.unwrap().members().iter().map(|w| w.to_string()).collect();
    assert_eq!(names, ["00", "01", "02", "11"]);
    pass("ternary morphism accepted with the row set 00 01 02 11");
}

#[test]
fn four_squares_inventory() {
    let h = fixtures::four_squares();
    let report = verify(&h, 3, 3).unwrap();
    assert!(report.verdict.is_accepted(), "verdict: {:?}", report.verdict);
    assert_eq!(
        inventory(&h, 3, 3, report.span),
        string_set(&["00", "11", "0101", "1010"])
    );
    pass("four-square morphism accepted; exactly 00 11 0101 1010 survive");
}

#[test]
#[ignore = "runs for minutes; the order-3 period-5 reading is contradicted by the images themselves, see the panic message"]
fn ternary_scale_morphism_certificate() {
    let h = fixtures::three_squares();

    // The reading under which the images certify: order 5, period bound 3.
    let swapped = verify(&h, 5, 3).unwrap();
    assert!(swapped.verdict.is_accepted(), "verdict: {:?}", swapped.verdict);
    assert_eq!(swapped.stats.raw_triples, 21_438_614_952);
    assert_eq!(inventory(&h, 5, 3, swapped.span), string_set(&["00", "11", "0101"]));
    println!("order 5, period 3: accepted, stats {:?}", swapped.stats);

    // The reading the published claim states: order 3, period 5.  The
    // common image prefix contains a genuine 3-abelian square of period
    // 14 at offset 10, so acceptance is impossible; this assertion fails
    // and documents the discrepancy.
    let claimed = verify(&h, 3, 5).unwrap();
    assert_eq!(inventory(&h, 3, 5, claimed.span), string_set(&["00", "11", "0101"]));
    assert!(
        claimed.verdict.is_accepted(),
        "order-3 squares of period at least 5 inside the images: {:?}",
        claimed.verdict
    );
    pass("long-prefix binary morphism certificate");
}

#[test]
#[ignore = "exhausts 2.9e9 nodes, about half an hour single-threaded in release"]
fn cube_finiteness_full_count() {
    let pred = AvoidancePredicate::new(3, 1, 2).unwrap();
    let verdict = prove_finite(2, &pred, &SearchLimits::default()).unwrap();
    assert!(verdict.is_finite());
    let report = verdict.report();

    // Confirmed by a shared-nothing reimplementation (incremental
    // prenecklace automaton plus one-letter prefix sums) that reproduces
    // the identical per-depth profile across all 289 lengths.
    assert_eq!(report.node_count, 2_863_553_428);
    assert_eq!(report.max_depth, 289);

    // The published figures, 2,732,711,352 words with the longest at 290,
    // survive no counting convention: with the root it is +1, leaves are
    // 720,101,016, non-leaves 2,143,452,412, and dropping the four words
    // 11..11111 that prefix no Lyndon word removes only 4.  No subset of
    // this factorial language can reach length 290 when two independent
    // exhaustions stop at 289.  Finiteness itself is confirmed.
    let slack = (report.node_count as i64 - 2_732_711_352i64).abs();
    assert!(
        report.max_depth == 290 && slack <= 1,
        "published tally not reproduced: engine and independent recount agree on \
         2,863,553,428 words with the longest at 289"
    );
    pass("abelian cubes of period at least 2: finite, longest 290, node count matches");
}

#[test]
fn distinct_square_budget_bounds() {
    let three = budget_search(4, 3, &SearchLimits::default());
    assert!(three.exhausted);
    assert_eq!(three.max_depth, 87);
    assert_eq!(three.node_count, 98_812);

    let four = budget_search(2, 4, &SearchLimits::default());
    assert!(four.exhausted);
    assert_eq!(four.max_depth, 92);
    assert_eq!(four.node_count, 6_972_580);
    pass("budget searches stop at 87 (order 4, three squares) and 92 (order 2, four)");
}

#[test]
fn stochastic_witnesses() {
    let cubes = AvoidancePredicate::new(3, 1, 3).unwrap();
    let cfg = RandomSearchConfig {
        seed: 7,
        target_length: 500,
        max_restarts: 5_000_000,
        mean_backoff: 1,
    };
    let long = random_long_word(2, &cubes, &cfg).expect("cube witness");
    assert!(long.len() >= 500);
    assert!(is_free(&long, &cubes));
    assert!(common::oracle_is_free(long.letters(), 3, 1, 3));

    let squares = AvoidancePredicate::new(2, 2, 3).unwrap();
    let cfg = RandomSearchConfig {
        seed: 7,
        target_length: 1000,
        max_restarts: 5_000_000,
        mean_backoff: 1,
    };
    let longer = random_long_word(2, &squares, &cfg).expect("square witness");
    assert!(longer.len() >= 1000);
    assert!(is_free(&longer, &squares));
    assert!(common::oracle_is_free(longer.letters(), 2, 2, 3));
    pass("seeded witnesses of lengths 500 and 1000 verified against the oracle");
}

#[test]
fn image_freeness_end_to_end() {
    let absq = AvoidancePredicate::new(2, 1, 1).unwrap();
    let cfg = RandomSearchConfig {
        seed: 23,
        target_length: 210,
        max_restarts: 2_000_000,
        mean_backoff: 1,
    };
    let base = random_long_word(4, &absq, &cfg).expect("abelian-square-free base word");
    assert!(base.len() >= 200);
    assert!(common::oracle_is_free(base.letters(), 2, 1, 1));

    let image = fixtures::uniform11().apply(&base).unwrap();
    assert!(find_power(&image, &AvoidancePredicate::new(2, 3, 3).unwrap()).is_none());

    let ternary_image = fixtures::ternary().apply(&base).unwrap();
    assert!(find_power(&ternary_image, &AvoidancePredicate::new(2, 2, 2).unwrap()).is_none());
    pass("images of a fresh 200-letter abelian-square-free word scan clean");
}

#[test]
fn binary_rank_obstruction() {
    let n = build_count_matrix(&fixtures::uniform11(), 2).unwrap();
    // Rows 01 and 10 coincide for every binary-image morphism, so four
    // independent rows cannot exist.
    let rows = n.rows();
    let i01 = rows.index_of(&[0, 1]).unwrap();
    let i10 = rows.index_of(&[1, 0]).unwrap();
    assert_eq!(n.row(i01), n.row(i10));
    match select_rows(&n, None) {
        Err(VerifyError::RankDeficient { rank }) => assert!(rank <= 3, "rank {rank}"),
        other => panic!("expected a rank diagnostic, got {other:?}"),
    }
    match verify(&fixtures::uniform11(), 2, 2).unwrap().verdict {
        kabelian::Verdict::PreconditionFailed { reason } => {
            assert!(reason.contains("rank"), "reason: {reason}")
        }
        other => panic!("expected a precondition failure, got {other:?}"),
    }

    let mut rng = ChaCha8Rng::seed_from_u64(41);
    for _ in 0..25 {
        let images: Vec<Word> = (0..4)
            .map(|_| {
                let len = rng.gen_range(2..=12);
                let mut letters = vec![0u8];
                letters.extend((1..len).map(|_| rng.gen_range(0..2) as u8));
                Word::new(2, letters).unwrap()
            })
            .collect();
        let h = Morphism::from_images(images).unwrap();
        let n = build_count_matrix(&h, 2).unwrap();
        match select_rows(&n, None) {
            Err(VerifyError::RankDeficient { rank }) => assert!(rank <= 3),
            other => panic!("expected a rank diagnostic, got {other:?}"),
        }
    }
    pass("order-2 count matrices over binary images never reach full rank");
}

fn random_word(rng: &mut ChaCha8Rng, alphabet: usize, max_len: usize) -> Word {
    let len = rng.gen_range(0..=max_len);
    let letters = (0..len).map(|_| rng.gen_range(0..alphabet) as u8).collect();
    Word::new(alphabet, letters).unwrap()
}

#[test]
fn equivalence_definitions_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let modes =
        [EquivalenceMode::FactorOnly, EquivalenceMode::PrefixForm, EquivalenceMode::SuffixForm];
    let mut equivalent_pairs = 0usize;
    for round in 0..10_000 {
        let alphabet = rng.gen_range(2..=3);
        let k = rng.gen_range(1..=5);
        let u = random_word(&mut rng, alphabet, 24);
        let v = match round % 4 {
            // unrelated word
            0 => random_word(&mut rng, alphabet, 24),
            // letter permutation of u
            1 => {
                let mut letters = u.letters().to_vec();
                for i in (1..letters.len()).rev() {
                    let j = rng.gen_range(0..=i);
                    letters.swap(i, j);
                }
                Word::new(alphabet, letters).unwrap()
            }
            // swap two adjacent blocks, preserving short context
            2 => {
                let mut letters = u.letters().to_vec();
                if letters.len() >= 2 {
                    let cut = rng.gen_range(1..letters.len());
                    letters.rotate_left(cut);
                }
                Word::new(alphabet, letters).unwrap()
            }
            _ => u.clone(),
        };
        let answers: Vec<bool> = modes.iter().map(|&m| k_abelian_eq(&u, &v, k, m)).collect();
        assert!(
            answers.iter().all(|&a| a == answers[0]),
            "modes disagree on {u} vs {v} at order {k}: {answers:?}"
        );
        assert_eq!(
            answers[0],
            common::oracle_k_abelian_eq(u.letters(), v.letters(), k),
            "oracle disagrees on {u} vs {v} at order {k}"
        );
        if answers[0] && u.len() > k {
            equivalent_pairs += 1;
        }
    }
    assert!(equivalent_pairs > 100, "only {equivalent_pairs} nontrivial equivalent pairs seen");
    pass("the three equivalence characterizations agree on ten thousand pairs");
}

#[test]
fn splitting_identity_fuzz() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut checked = 0usize;
    while checked < 4_000 {
        let alphabet = rng.gen_range(2..=4);
        let k = rng.gen_range(1..=5);
        let i = rng.gen_range(0..k);
        let u = random_word(&mut rng, alphabet, 16);
        let v = random_word(&mut rng, alphabet, 16);
        if u.len() < k - 1 - i || v.len() < i {
            continue;
        }
        assert_eq!(splitting_identity_check(&u, &v, k, i), Ok(true), "{u} | {v}, k {k}, i {i}");
        checked += 1;
    }
    pass("window-count splitting identity holds on four thousand random splits");
}

fn all_words(alphabet: usize, len: usize) -> Vec<Vec<u8>> {
    let mut out = vec![Vec::new()];
    for _ in 0..len {
        out = out
            .into_iter()
            .flat_map(|w| {
                (0..alphabet as u8).map(move |c| {
                    let mut next = w.clone();
                    next.push(c);
                    next
                })
            })
            .collect();
    }
    out
}

#[test]
fn lyndon_factorization_matches_brute_force() {
    for (alphabet, max_len) in [(2usize, 12usize), (3, 8)] {
        for len in 1..=max_len {
            for letters in all_words(alphabet, len) {
                let word = Word::new(alphabet, letters.clone()).unwrap();
                let engine: Vec<String> =
                    lyndon_factorize(&word).unwrap().iter().map(|f| f.to_string()).collect();
                let oracle: Vec<String> =
                    common::oracle_lyndon_factorize(&letters).iter().map(|f| digits(f)).collect();
                assert_eq!(engine, oracle, "word {word}");
                assert!(engine.windows(2).all(|p| p[0] >= p[1]), "not non-increasing: {word}");
            }
        }
    }
    pass("Lyndon factorization matches brute force through length 12");
}

#[test]
fn prelyndon_matches_brute_force() {
    for (alphabet, max_len) in [(2usize, 12usize), (3, 8)] {
        for len in 0..=max_len {
            for letters in all_words(alphabet, len) {
                let word = Word::new(alphabet, letters.clone()).unwrap();
                assert_eq!(
                    is_pre_lyndon(&word),
                    common::oracle_is_pre_lyndon(&letters),
                    "word {word}"
                );
            }
        }
    }
    pass("power-prefix test matches brute force through length 12");
}

#[test]
fn detector_matches_quadratic_oracle() {
    let cases = [(2usize, 1usize, 2usize), (2, 2, 1), (3, 1, 1), (2, 3, 2)];
    for len in 0..=14 {
        for letters in all_words(2, len) {
            let word = Word::new(2, letters.clone()).unwrap();
            for &(power, k, min_period) in &cases {
                let pred = AvoidancePredicate::new(power, k, min_period).unwrap();
                let engine = find_power(&word, &pred).map(|o| (o.start, o.period));
                let oracle = common::oracle_find_power(&letters, power, k, min_period);
                assert_eq!(
                    engine, oracle,
                    "word {word}, power {power}, order {k}, period {min_period}"
                );
            }
        }
    }
    pass("repetition detector matches the quadratic oracle on all binary words through 14");
}

#[test]
fn distinct_square_inventory_matches_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..400 {
        let word = random_word(&mut rng, 2, 40);
        for k in 1..=3 {
            let engine: BTreeSet<String> =
                distinct_squares(&word, k).members().map(|s| s.to_string()).collect();
            assert_eq!(engine, common::oracle_distinct_squares(word.letters(), k), "{word} k {k}");
        }
    }
    pass("distinct-square inventories match the oracle on random binary words");
}

#[test]
fn count_matrix_tracks_factor_counts() {
    // The defining identity: window counts of h(w) extended by the short
    // prefix equal the matrix applied to the letter counts of w.
    let h = fixtures::uniform11();
    let k = 3;
    let n = build_count_matrix(&h, k).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..200 {
        let len = rng.gen_range(1..=12);
        let wbase =
            Word::new(4, (0..len).map(|_| rng.gen_range(0..4) as u8).collect()).unwrap();
        let image = h.apply(&wbase).unwrap().concat(&h.prefix().prefix(k - 1));
        let got = factor_counts(&image, k);
        for (i, f) in n.rows().members().iter().enumerate() {
            let predicted: i64 =
                (0..4).map(|x| n.entry(i, x) * wbase.parikh().counts()[x]).sum();
            assert_eq!(got.get(f).copied().unwrap_or(0) as i64, predicted, "factor {f}");
        }
    }
    pass("count matrix reproduces window counts of whole images");
}

#[test]
fn factor_count_examples() {
    let host = w("0000110101000");
    assert_eq!(host.count_occurrences(&w("000")).unwrap(), 3);
    assert_eq!(w("0101").count_occurrences(&wa("11", 2)).unwrap(), 0);
    let vector = host.factor_vector_full(3).unwrap();
    assert_eq!(vector.counts().to_vec(), vec![3, 1, 2, 1, 1, 2, 1, 0]);
    pass("factor counting pins the worked examples");
}
