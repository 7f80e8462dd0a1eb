//! Alignment inference: the segment-level dynamic program, its exhaustive
//! oracle, and the HMM initializer.

pub mod hmm;
pub mod scorer;
pub mod viterbi;

pub use hmm::{
    action_symbol, boundaries_for_symbols, demo_symbols, hmm_em, hmm_em_restarts, init_boundaries,
    EmFit, HmmConfig, HmmError, HmmModel, SYMBOLS,
};
pub use scorer::SegmentScorer;
pub use viterbi::{
    alignment_log_prob, brute_force_segment, score_matrix, scores_tie, segment_viterbi,
    segment_with_scorer, ScoreMatrix, SegmentError, BRUTE_FORCE_LIMIT,
};
