//! Decide, search and certify avoidability of k-abelian repetitions.
//!
//! Two words are k-abelian equivalent when they contain every factor of
//! length at most k equally often.  The crate provides the word primitives
//! (factor counting, equivalence tests, Lyndon machinery), detectors for
//! k-abelian n-powers, exhaustive and randomized avoidance searches over
//! small alphabets, a certifier that checks whether a morphism maps every
//! abelian-square-free word to a word free of k-abelian squares of large
//! period, and a pipeline that hunts for new morphisms of that kind.

pub mod discover;
pub mod morphism;
pub mod repetition;
pub mod search;
pub mod verify;
pub mod words;

pub use discover::{
    build_family, build_graph, enumerate_cliques, harvest_factors, run_pipeline,
    run_pipeline_with, CandidateFamily, CompatibilityGraph, DiscoverError, DiscoveryConfig,
    PipelineOptions, PipelineRun, PipelineStats,
};
pub use morphism::{Morphism, MorphismError};
pub use repetition::{
    distinct_squares, find_power, is_free, AvoidancePredicate, Occurrence, PredicateError,
    SquareInventory,
};
pub use verify::{
    build_count_matrix, claim_check, select_rows, surviving_squares, verify, verify_with,
    AlphaAssignment, BoundaryVector, CountMatrix, Counterexample, CutTriple, RowSelection,
    Verdict, VerificationReport, VerifyError, VerifyOptions, VerifyStats,
};
pub use search::{
    budget_search, exhaustive_search, prove_finite, random_long_word, FiniteVerdict,
    RandomSearchConfig, SearchLimits, SearchMode, SearchReport,
};
pub use words::{
    k_abelian_eq, lyndon_factorize, EquivalenceMode, FactorSet, FactorVector, ParikhVector,
    Word, WordError,
};
