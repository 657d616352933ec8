//! Multireference WER scoring over tagged transcript FSTs.
//!
//! Two stylistically divergent human reference transcripts (a verbatim V and
//! a nonverbatim NV) are word-aligned and compiled into an acyclic tagged
//! FST whose paths are admissible readings of the audio. An ASR hypothesis
//! is then aligned against the whole FST at once with an exact dynamic
//! program, yielding the multireference WER (the minimum over all paths),
//! per-style-tag error breakdowns, and the GOLD WER restricted to spans
//! where both references agree.
//!
//! The crate also ships the rule-based normalization ladder those references
//! are usually compared against (filler words, English normalization,
//! stutters/repetitions, filler phrases) and a brute-force oracle that
//! audits the scorer by exhaustive path enumeration.
//!
//! ```
//! use multiref::{align, build_fst, score_fst, tokenize, UnionMode};
//!
//! let v = tokenize("the big cat");
//! let nv = tokenize("the cat");
//! let fst = build_fst(&align::align(&v, &nv), UnionMode::SpanLevel).unwrap();
//! let report = score_fst(&fst, &tokenize("the cat")).unwrap();
//! assert_eq!(report.mwer, Some(0.0));
//! ```

pub mod align;
pub mod fst;
pub mod norm;
pub mod oracle;
pub mod report;
pub mod score;

pub use align::{align as align_tokens, Alignment, EditOp, ErrorCounts};
pub use fst::{build_fst, group_spans, MultiRefFst, SpanTag, UnionMode};
pub use norm::{apply_pipeline, tokenize, NormConfig, NormStep, NormTables, Token};
pub use oracle::{naive_edit_distance, oracle_mwer, OracleResult, DEFAULT_PATH_LIMIT};
pub use score::{
    aggregate_tags, gold_wer, score_batch, score_batch_seq, score_fst, score_single, ScoreReport,
    TaggedCounts,
};
