//! Rule tables behind the cleaning steps.
//!
//! All tables are plain UTF-8 data files: one rule per line, `#` comments and
//! blank lines ignored. Mapping files are tab-separated `from<TAB>to`; the
//! `to` side may contain several space-separated words. The built-in tables
//! are compiled into the library; [`NormTables::from_dir`] loads replacements
//! from a directory with the same file names, for auditing or extension.

use std::collections::{HashMap, HashSet};
use std::path::Path;
use std::sync::OnceLock;

use thiserror::Error;

use super::Token;

const FILLER_WORDS: &str = include_str!("../../data/filler_words.txt");
const CONTRACTIONS: &str = include_str!("../../data/contractions.tsv");
const NUMBERS: &str = include_str!("../../data/numbers.tsv");
const BRITISH_AMERICAN: &str = include_str!("../../data/british_american.tsv");
const FILLER_PHRASES: &str = include_str!("../../data/filler_phrases.txt");

pub const FILLER_WORDS_FILE: &str = "filler_words.txt";
pub const CONTRACTIONS_FILE: &str = "contractions.tsv";
pub const NUMBERS_FILE: &str = "numbers.tsv";
pub const BRITISH_AMERICAN_FILE: &str = "british_american.tsv";
pub const FILLER_PHRASES_FILE: &str = "filler_phrases.txt";

#[derive(Debug, Error)]
pub enum TableError {
    #[error("cannot read table file {file}: {source}")]
    Io {
        file: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{file}:{line}: {reason}")]
    BadRule {
        file: String,
        line: usize,
        reason: String,
    },
}

/// A filler phrase; `initial_only` restricts the match to the start of the
/// surviving token sequence.
#[derive(Debug, Clone)]
struct FillerPhrase {
    words: Vec<Token>,
    initial_only: bool,
}

/// The loaded rule tables for the table-driven cleaning steps.
#[derive(Debug, Clone)]
pub struct NormTables {
    filler_words: HashSet<Token>,
    contractions: HashMap<Token, Vec<Token>>,
    numbers: HashMap<Token, Vec<Token>>,
    spellings: HashMap<Token, Token>,
    filler_phrases: Vec<FillerPhrase>,
}

impl NormTables {
    /// The tables compiled into the library.
    pub fn builtin() -> &'static NormTables {
        static BUILTIN: OnceLock<NormTables> = OnceLock::new();
        BUILTIN.get_or_init(|| {
            NormTables::from_sources(
                FILLER_WORDS,
                CONTRACTIONS,
                NUMBERS,
                BRITISH_AMERICAN,
                FILLER_PHRASES,
            )
            .expect("built-in tables are well-formed")
        })
    }

    /// Loads all five table files from `dir`.
    pub fn from_dir(dir: &Path) -> Result<NormTables, TableError> {
        let read = |name: &str| -> Result<String, TableError> {
            std::fs::read_to_string(dir.join(name)).map_err(|source| TableError::Io {
                file: dir.join(name).display().to_string(),
                source,
            })
        };
        NormTables::from_sources(
            &read(FILLER_WORDS_FILE)?,
            &read(CONTRACTIONS_FILE)?,
            &read(NUMBERS_FILE)?,
            &read(BRITISH_AMERICAN_FILE)?,
            &read(FILLER_PHRASES_FILE)?,
        )
    }

    fn from_sources(
        filler_words: &str,
        contractions: &str,
        numbers: &str,
        spellings: &str,
        filler_phrases: &str,
    ) -> Result<NormTables, TableError> {
        Ok(NormTables {
            filler_words: parse_word_list(FILLER_WORDS_FILE, filler_words)?,
            contractions: parse_mapping(CONTRACTIONS_FILE, contractions)?,
            numbers: parse_mapping(NUMBERS_FILE, numbers)?,
            spellings: parse_single_mapping(BRITISH_AMERICAN_FILE, spellings)?,
            filler_phrases: parse_phrases(FILLER_PHRASES_FILE, filler_phrases)?,
        })
    }

    /// Removes tokens present in the filler-word lexicon. Whole-token matches
    /// only; order otherwise preserved.
    pub fn remove_filler_words(&self, tokens: &[Token]) -> Vec<Token> {
        tokens
            .iter()
            .filter(|t| !self.filler_words.contains(*t))
            .cloned()
            .collect()
    }

    /// Applies, in order: contraction expansion, digit-string
    /// canonicalization, British-to-American respelling.
    pub fn normalize_english(&self, tokens: &[Token]) -> Vec<Token> {
        let expanded = expand(tokens, &self.contractions);
        let numbered = expand(&expanded, &self.numbers);
        numbered
            .into_iter()
            .map(|t| self.spellings.get(&t).cloned().unwrap_or(t))
            .collect()
    }

    /// Removes filler phrases in a single greedy left-to-right pass. At each
    /// position, longer phrases are tried first; `^`-marked phrases match
    /// only when nothing has been emitted yet.
    pub fn remove_filler_phrases(&self, tokens: &[Token]) -> Vec<Token> {
        let mut by_len: Vec<&FillerPhrase> = self.filler_phrases.iter().collect();
        by_len.sort_by_key(|p| std::cmp::Reverse(p.words.len()));
        let mut out: Vec<Token> = Vec::with_capacity(tokens.len());
        let mut i = 0;
        while i < tokens.len() {
            let matched = by_len.iter().find(|p| {
                (!p.initial_only || out.is_empty())
                    && tokens[i..].starts_with(&p.words)
            });
            match matched {
                Some(p) => i += p.words.len(),
                None => {
                    out.push(tokens[i].clone());
                    i += 1;
                }
            }
        }
        out
    }

    /// Contraction table contents, for auditing and fixed-point checks.
    pub fn contraction_entries(&self) -> impl Iterator<Item = (&Token, &Vec<Token>)> {
        self.contractions.iter()
    }
}

fn expand(tokens: &[Token], table: &HashMap<Token, Vec<Token>>) -> Vec<Token> {
    let mut out = Vec::with_capacity(tokens.len());
    for t in tokens {
        match table.get(t) {
            Some(expansion) => out.extend(expansion.iter().cloned()),
            None => out.push(t.clone()),
        }
    }
    out
}

fn rule_lines(source: &str) -> impl Iterator<Item = (usize, &str)> {
    source
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn bad(file: &str, line: usize, reason: impl Into<String>) -> TableError {
    TableError::BadRule {
        file: file.to_owned(),
        line,
        reason: reason.into(),
    }
}

fn parse_token(file: &str, line: usize, text: &str) -> Result<Token, TableError> {
    Token::new(text).map_err(|e| bad(file, line, e.to_string()))
}

fn parse_word_list(file: &str, source: &str) -> Result<HashSet<Token>, TableError> {
    let mut set = HashSet::new();
    for (line, text) in rule_lines(source) {
        let token = parse_token(file, line, text)?;
        if !set.insert(token) {
            return Err(bad(file, line, format!("duplicate entry {text:?}")));
        }
    }
    Ok(set)
}

fn split_mapping<'a>(
    file: &str,
    line: usize,
    text: &'a str,
) -> Result<(&'a str, &'a str), TableError> {
    text.split_once('\t')
        .map(|(f, t)| (f.trim(), t.trim()))
        .ok_or_else(|| bad(file, line, "expected from<TAB>to"))
}

fn parse_mapping(file: &str, source: &str) -> Result<HashMap<Token, Vec<Token>>, TableError> {
    let mut map = HashMap::new();
    for (line, text) in rule_lines(source) {
        let (from, to) = split_mapping(file, line, text)?;
        let key = parse_token(file, line, from)?;
        let values = to
            .split_whitespace()
            .map(|w| parse_token(file, line, w))
            .collect::<Result<Vec<_>, _>>()?;
        if values.is_empty() {
            return Err(bad(file, line, "empty replacement"));
        }
        if map.insert(key, values).is_some() {
            return Err(bad(file, line, format!("duplicate entry {from:?}")));
        }
    }
    Ok(map)
}

fn parse_single_mapping(file: &str, source: &str) -> Result<HashMap<Token, Token>, TableError> {
    let mut map = HashMap::new();
    for (line, text) in rule_lines(source) {
        let (from, to) = split_mapping(file, line, text)?;
        let key = parse_token(file, line, from)?;
        let value = parse_token(file, line, to)?;
        if map.insert(key, value).is_some() {
            return Err(bad(file, line, format!("duplicate entry {from:?}")));
        }
    }
    Ok(map)
}

fn parse_phrases(file: &str, source: &str) -> Result<Vec<FillerPhrase>, TableError> {
    let mut phrases = Vec::new();
    for (line, text) in rule_lines(source) {
        let (initial_only, body) = match text.strip_prefix('^') {
            Some(rest) => (true, rest.trim()),
            None => (false, text),
        };
        let words = body
            .split_whitespace()
            .map(|w| parse_token(file, line, w))
            .collect::<Result<Vec<_>, _>>()?;
        if words.is_empty() {
            return Err(bad(file, line, "empty phrase"));
        }
        phrases.push(FillerPhrase {
            words,
            initial_only,
        });
    }
    Ok(phrases)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_tables_load() {
        let t = NormTables::builtin();
        assert!(t.filler_words.len() >= 13);
        assert!(t.contractions.len() >= 60);
        assert_eq!(t.numbers.len(), 101);
        assert!(t.spellings.len() >= 80);
        assert_eq!(t.filler_phrases.len(), 3);
    }

    #[test]
    fn from_dir_roundtrips_builtin() {
        let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
        let t = NormTables::from_dir(&dir).unwrap();
        assert_eq!(t.filler_words, NormTables::builtin().filler_words);
        assert_eq!(t.numbers, NormTables::builtin().numbers);
    }

    #[test]
    fn from_dir_missing_file_is_io_error() {
        let err = NormTables::from_dir(Path::new("/nonexistent-table-dir")).unwrap_err();
        assert!(matches!(err, TableError::Io { .. }));
    }

    #[test]
    fn malformed_rule_is_rejected_with_location() {
        let err = parse_mapping("contractions.tsv", "a b\n").unwrap_err();
        match err {
            TableError::BadRule { line, .. } => assert_eq!(line, 1),
            other => panic!("unexpected error: {other:?}"),
        }
    }
}
