//! Minimum-edit-distance word alignment between two token sequences.
//!
//! This is the primitive behind reference-reference alignment (which feeds
//! FST construction) and single-reference WER. Unit costs, full dynamic
//! program, deterministic backtrace.

use std::fmt;

use crate::norm::Token;

/// One pairwise edit operation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EditOp {
    /// Reference and hypothesis carry the same token.
    Match { token: Token },
    Substitute {
        reference: Token,
        hypothesis: Token,
    },
    /// Reference token with no hypothesis counterpart.
    Delete { reference: Token },
    /// Hypothesis token with no reference counterpart.
    Insert { hypothesis: Token },
}

impl EditOp {
    pub fn reference(&self) -> Option<&Token> {
        match self {
            EditOp::Match { token } => Some(token),
            EditOp::Substitute { reference, .. } | EditOp::Delete { reference } => Some(reference),
            EditOp::Insert { .. } => None,
        }
    }

    pub fn hypothesis(&self) -> Option<&Token> {
        match self {
            EditOp::Match { token } => Some(token),
            EditOp::Substitute { hypothesis, .. } | EditOp::Insert { hypothesis } => {
                Some(hypothesis)
            }
            EditOp::Delete { .. } => None,
        }
    }

    pub fn is_error(&self) -> bool {
        !matches!(self, EditOp::Match { .. })
    }

    pub fn name(&self) -> &'static str {
        match self {
            EditOp::Match { .. } => "match",
            EditOp::Substitute { .. } => "substitute",
            EditOp::Delete { .. } => "delete",
            EditOp::Insert { .. } => "insert",
        }
    }
}

impl fmt::Display for EditOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EditOp::Match { token } => write!(f, "match {token}"),
            EditOp::Substitute {
                reference,
                hypothesis,
            } => write!(f, "substitute {reference} -> {hypothesis}"),
            EditOp::Delete { reference } => write!(f, "delete {reference}"),
            EditOp::Insert { hypothesis } => write!(f, "insert {hypothesis}"),
        }
    }
}

/// A complete alignment: the op sequence reconstructs the reference on one
/// side and the hypothesis on the other.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Alignment {
    ops: Vec<EditOp>,
    ref_len: usize,
    hyp_len: usize,
}

impl Alignment {
    /// Assembles an alignment from parts without checking minimality.
    /// Downstream consumers re-verify reconstruction.
    pub fn from_ops(ops: Vec<EditOp>, ref_len: usize, hyp_len: usize) -> Alignment {
        Alignment {
            ops,
            ref_len,
            hyp_len,
        }
    }

    pub fn ops(&self) -> &[EditOp] {
        &self.ops
    }

    pub fn ref_len(&self) -> usize {
        self.ref_len
    }

    pub fn hyp_len(&self) -> usize {
        self.hyp_len
    }

    /// Total edit cost: substitutions + insertions + deletions.
    pub fn cost(&self) -> usize {
        self.ops.iter().filter(|op| op.is_error()).count()
    }

    pub fn counts(&self) -> ErrorCounts {
        wer_from_alignment(self)
    }
}

/// Error tallies against a reference of `reference_words` tokens.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ErrorCounts {
    pub substitutions: usize,
    pub insertions: usize,
    pub deletions: usize,
    pub reference_words: usize,
}

impl ErrorCounts {
    pub fn errors(&self) -> usize {
        self.substitutions + self.insertions + self.deletions
    }

    /// WER as a ratio; `None` when the reference is empty (division by zero).
    pub fn wer(&self) -> Option<f64> {
        if self.reference_words == 0 {
            None
        } else {
            Some(self.errors() as f64 / self.reference_words as f64)
        }
    }

    pub fn add(&mut self, other: &ErrorCounts) {
        self.substitutions += other.substitutions;
        self.insertions += other.insertions;
        self.deletions += other.deletions;
        self.reference_words += other.reference_words;
    }
}

/// Counts ops by kind. `reference_words` is matches + substitutions +
/// deletions; callers must handle the zero-denominator case via
/// [`ErrorCounts::wer`].
pub fn wer_from_alignment(a: &Alignment) -> ErrorCounts {
    let mut c = ErrorCounts::default();
    for op in &a.ops {
        match op {
            EditOp::Match { .. } => c.reference_words += 1,
            EditOp::Substitute { .. } => {
                c.substitutions += 1;
                c.reference_words += 1;
            }
            EditOp::Delete { .. } => {
                c.deletions += 1;
                c.reference_words += 1;
            }
            EditOp::Insert { .. } => c.insertions += 1,
        }
    }
    c
}

// Backtrace moves, stored per DP cell.
const MV_MATCH: u8 = 0;
const MV_SUB: u8 = 1;
const MV_DEL: u8 = 2;
const MV_INS: u8 = 3;

/// Returns a minimum-cost alignment under unit costs. Ties are resolved
/// deterministically during the backtrace from the end of both sequences,
/// preferring Match > Substitute > Delete > Insert at each cell.
pub fn align(reference: &[Token], hypothesis: &[Token]) -> Alignment {
    let m = reference.len();
    let n = hypothesis.len();

    // Costs kept in two rolling rows; moves kept densely for the backtrace.
    let mut moves = vec![0u8; (m + 1) * (n + 1)];
    let mut prev: Vec<u32> = (0..=n as u32).collect();
    let mut curr = vec![0u32; n + 1];

    moves[1..=n].fill(MV_INS);
    for i in 1..=m {
        curr[0] = i as u32;
        moves[i * (n + 1)] = MV_DEL;
        for j in 1..=n {
            let eq = reference[i - 1] == hypothesis[j - 1];
            let diag = prev[j - 1] + if eq { 0 } else { 1 };
            let del = prev[j] + 1;
            let ins = curr[j - 1] + 1;
            let best = diag.min(del).min(ins);
            // Preference order Match > Sub > Del > Ins.
            let mv = if best == diag {
                if eq {
                    MV_MATCH
                } else {
                    MV_SUB
                }
            } else if best == del {
                MV_DEL
            } else {
                MV_INS
            };
            curr[j] = best;
            moves[i * (n + 1) + j] = mv;
        }
        std::mem::swap(&mut prev, &mut curr);
    }

    let mut ops = Vec::with_capacity(m.max(n));
    let (mut i, mut j) = (m, n);
    while i > 0 || j > 0 {
        match moves[i * (n + 1) + j] {
            MV_MATCH => {
                i -= 1;
                j -= 1;
                ops.push(EditOp::Match {
                    token: reference[i].clone(),
                });
            }
            MV_SUB => {
                i -= 1;
                j -= 1;
                ops.push(EditOp::Substitute {
                    reference: reference[i].clone(),
                    hypothesis: hypothesis[j].clone(),
                });
            }
            MV_DEL => {
                i -= 1;
                ops.push(EditOp::Delete {
                    reference: reference[i].clone(),
                });
            }
            _ => {
                j -= 1;
                ops.push(EditOp::Insert {
                    hypothesis: hypothesis[j].clone(),
                });
            }
        }
    }
    ops.reverse();

    Alignment {
        ops,
        ref_len: m,
        hyp_len: n,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::norm::Token;

    fn toks(words: &[&str]) -> Vec<Token> {
        words.iter().map(|w| Token::new(w).unwrap()).collect()
    }

    fn tok(w: &str) -> Token {
        Token::new(w).unwrap()
    }

    #[test]
    fn single_substitution() {
        let a = align(&toks(&["a", "b", "c"]), &toks(&["a", "x", "c"]));
        assert_eq!(a.cost(), 1);
        assert_eq!(
            a.ops(),
            &[
                EditOp::Match { token: tok("a") },
                EditOp::Substitute {
                    reference: tok("b"),
                    hypothesis: tok("x")
                },
                EditOp::Match { token: tok("c") },
            ]
        );
    }

    #[test]
    fn empty_reference_is_all_insertions() {
        let a = align(&[], &toks(&["a"]));
        assert_eq!(a.cost(), 1);
        assert_eq!(a.ops(), &[EditOp::Insert { hypothesis: tok("a") }]);
    }

    #[test]
    fn deletion_in_the_middle() {
        let a = align(&toks(&["the", "big", "cat"]), &toks(&["the", "cat"]));
        assert_eq!(a.cost(), 1);
        assert_eq!(
            a.ops(),
            &[
                EditOp::Match { token: tok("the") },
                EditOp::Delete {
                    reference: tok("big")
                },
                EditOp::Match { token: tok("cat") },
            ]
        );
    }

    #[test]
    fn identity_alignment_is_all_match() {
        let r = toks(&["a", "b", "c", "d", "e"]);
        let a = align(&r, &r);
        assert_eq!(a.cost(), 0);
        assert!(a.ops().iter().all(|op| !op.is_error()));
        let c = a.counts();
        assert_eq!(
            c,
            ErrorCounts {
                substitutions: 0,
                insertions: 0,
                deletions: 0,
                reference_words: 5
            }
        );
        assert_eq!(c.wer(), Some(0.0));
    }

    #[test]
    fn counts_from_mixed_ops() {
        let a = align(&toks(&["a", "b", "c"]), &toks(&["a", "x", "c"]));
        let c = a.counts();
        assert_eq!(c.substitutions, 1);
        assert_eq!(c.reference_words, 3);
        assert_eq!(c.wer(), Some(1.0 / 3.0));
    }

    #[test]
    fn zero_denominator_is_signaled() {
        let a = align(&[], &toks(&["a", "b"]));
        let c = a.counts();
        assert_eq!(c.insertions, 2);
        assert_eq!(c.reference_words, 0);
        assert_eq!(c.wer(), None);
    }

    #[test]
    fn reconstruction_invariant() {
        let r = toks(&["x", "y", "z", "w"]);
        let h = toks(&["y", "q", "w", "v"]);
        let a = align(&r, &h);
        let rebuilt_ref: Vec<Token> =
            a.ops().iter().filter_map(|op| op.reference().cloned()).collect();
        let rebuilt_hyp: Vec<Token> =
            a.ops().iter().filter_map(|op| op.hypothesis().cloned()).collect();
        assert_eq!(rebuilt_ref, r);
        assert_eq!(rebuilt_hyp, h);
    }

    #[test]
    fn backtrace_prefers_substitutions_late() {
        // Ties between sub and del placements resolve with deletions first
        // and substitutions at the end of the disagreement, because the
        // backtrace runs from the end preferring Match > Sub > Del > Ins.
        let a = align(&toks(&["a", "b", "c"]), &toks(&["x"]));
        assert_eq!(
            a.ops(),
            &[
                EditOp::Delete { reference: tok("a") },
                EditOp::Delete { reference: tok("b") },
                EditOp::Substitute {
                    reference: tok("c"),
                    hypothesis: tok("x")
                },
            ]
        );
    }
}
