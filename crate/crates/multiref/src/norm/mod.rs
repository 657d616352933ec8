//! Tokenization and the cumulative rule-based transcript cleaning ladder.
//!
//! The ladder has four steps, applied to already-tokenized text in a
//! caller-chosen order: filler-word removal, English normalization
//! (contractions, digit strings, British spellings), stutter/repetition
//! removal, and filler-phrase removal. Every step is a pure function from a
//! token sequence to a token sequence; rule tables ship as editable data
//! files (see [`NormTables`]).

mod tables;

pub use tables::{NormTables, TableError};

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// A single transcript word: non-empty, lowercase, no internal whitespace.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Token(String);

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TokenError {
    #[error("token text is empty")]
    Empty,
    #[error("token text contains whitespace: {0:?}")]
    Whitespace(String),
}

impl Token {
    /// Builds a token, case-folding the input. Rejects empty text and text
    /// containing whitespace.
    pub fn new(text: &str) -> Result<Self, TokenError> {
        if text.is_empty() {
            return Err(TokenError::Empty);
        }
        if text.chars().any(char::is_whitespace) {
            return Err(TokenError::Whitespace(text.to_owned()));
        }
        Ok(Token(text.to_lowercase()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Token text with a single trailing stutter hyphen removed, if any.
    fn hyphen_stripped(&self) -> &str {
        self.0.strip_suffix('-').unwrap_or(&self.0)
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl AsRef<str> for Token {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

impl PartialEq<&str> for Token {
    fn eq(&self, other: &&str) -> bool {
        self.0 == *other
    }
}

/// One step of the cleaning ladder.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NormStep {
    FillerWords,
    EnglishNormalize,
    StuttersRepetitions,
    FillerPhrases,
}

impl NormStep {
    pub const ALL: [NormStep; 4] = [
        NormStep::FillerWords,
        NormStep::EnglishNormalize,
        NormStep::StuttersRepetitions,
        NormStep::FillerPhrases,
    ];

    pub fn name(self) -> &'static str {
        match self {
            NormStep::FillerWords => "filler-words",
            NormStep::EnglishNormalize => "english-normalize",
            NormStep::StuttersRepetitions => "stutters-repetitions",
            NormStep::FillerPhrases => "filler-phrases",
        }
    }
}

impl fmt::Display for NormStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for NormStep {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, ConfigError> {
        match s {
            "filler-words" => Ok(NormStep::FillerWords),
            "english-normalize" => Ok(NormStep::EnglishNormalize),
            "stutters-repetitions" => Ok(NormStep::StuttersRepetitions),
            "filler-phrases" => Ok(NormStep::FillerPhrases),
            other => Err(ConfigError::UnknownStep(other.to_owned())),
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ConfigError {
    #[error("unknown normalization step {0:?} (expected one of: filler-words, english-normalize, stutters-repetitions, filler-phrases)")]
    UnknownStep(String),
    #[error("duplicate normalization step {0}")]
    DuplicateStep(NormStep),
}

/// An ordered, duplicate-free list of cleaning steps. The empty config is the
/// raw condition: tokenization only.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NormConfig {
    steps: Vec<NormStep>,
}

impl NormConfig {
    pub fn new(steps: Vec<NormStep>) -> Result<Self, ConfigError> {
        for (i, s) in steps.iter().enumerate() {
            if steps[..i].contains(s) {
                return Err(ConfigError::DuplicateStep(*s));
            }
        }
        Ok(NormConfig { steps })
    }

    /// Parses a comma-separated step list; empty input yields the raw config.
    pub fn parse(spec: &str) -> Result<Self, ConfigError> {
        let steps = spec
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(NormStep::from_str)
            .collect::<Result<Vec<_>, _>>()?;
        NormConfig::new(steps)
    }

    pub fn steps(&self) -> &[NormStep] {
        &self.steps
    }
}

/// Punctuation stripped from token edges. Internal apostrophes and hyphens
/// are preserved, as is a trailing stutter hyphen ("w-").
const EDGE_PUNCT: &[char] = &['.', ',', '?', '!', ';', ':', '"', '(', ')'];

/// Splits raw text on whitespace, case-folds, and strips edge punctuation.
/// Tokens that become empty are dropped; empty input yields an empty
/// sequence.
pub fn tokenize(raw: &str) -> Vec<Token> {
    raw.split_whitespace()
        .filter_map(|word| {
            let trimmed = word.trim_matches(|c| EDGE_PUNCT.contains(&c));
            if trimmed.is_empty() {
                None
            } else {
                Some(Token(trimmed.to_lowercase()))
            }
        })
        .collect()
}

/// Window within which a stutter fragment ("w-") must find a continuation.
const STUTTER_LOOKAHEAD: usize = 3;

/// Removes stutter fragments, then collapses adjacent repeated tokens, then
/// collapses adjacent repeated bigrams. One left-to-right pass each.
///
/// A token ending in "-" is a stutter fragment when its hyphen-stripped text
/// is a prefix of the hyphen-stripped text of some token within the next
/// three positions of the input.
pub fn remove_stutters_repetitions(tokens: &[Token]) -> Vec<Token> {
    let kept: Vec<Token> = tokens
        .iter()
        .enumerate()
        .filter(|(i, tok)| !is_stutter(tokens, *i, tok))
        .map(|(_, tok)| tok.clone())
        .collect();
    let kept = collapse_runs(&kept, 1);
    collapse_runs(&kept, 2)
}

fn is_stutter(tokens: &[Token], i: usize, tok: &Token) -> bool {
    if !tok.as_str().ends_with('-') {
        return false;
    }
    let stem = tok.hyphen_stripped();
    if stem.is_empty() {
        // A bare "-" is punctuation residue, not a stutter.
        return false;
    }
    tokens[i + 1..]
        .iter()
        .take(STUTTER_LOOKAHEAD)
        .any(|next| next.hyphen_stripped().starts_with(stem))
}

/// Collapses maximal runs of an identical adjacent block of `width` tokens to
/// a single occurrence.
fn collapse_runs(tokens: &[Token], width: usize) -> Vec<Token> {
    let mut out: Vec<Token> = Vec::with_capacity(tokens.len());
    let mut i = 0;
    while i < tokens.len() {
        if out.len() >= width
            && i + width <= tokens.len()
            && out[out.len() - width..] == tokens[i..i + width]
        {
            i += width;
        } else {
            out.push(tokens[i].clone());
            i += 1;
        }
    }
    out
}

/// Tokenizes raw text and applies each configured step in order.
pub fn apply_pipeline(tables: &NormTables, config: &NormConfig, raw: &str) -> Vec<Token> {
    let mut tokens = tokenize(raw);
    for step in config.steps() {
        tokens = apply_step(tables, *step, &tokens);
    }
    tokens
}

/// Applies one ladder step to an already-tokenized sequence.
pub fn apply_step(tables: &NormTables, step: NormStep, tokens: &[Token]) -> Vec<Token> {
    match step {
        NormStep::FillerWords => tables.remove_filler_words(tokens),
        NormStep::EnglishNormalize => tables.normalize_english(tokens),
        NormStep::StuttersRepetitions => remove_stutters_repetitions(tokens),
        NormStep::FillerPhrases => tables.remove_filler_phrases(tokens),
    }
}
