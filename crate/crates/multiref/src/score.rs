//! Exact minimum-WER alignment of a hypothesis against a multireference
//! FST, with per-tag aggregation and GOLD WER.
//!
//! The scorer minimizes, over all start-to-final paths and all alignments of
//! the hypothesis to each path's label sequence, the per-path WER ratio
//! (errors over that path's reference-word count). Ratio minimization is
//! what makes the word-level / span-level / single-reference bound chain
//! hold unconditionally: the minimum over a superset of paths can only be
//! lower or equal. It is computed exactly by a parametric search: each
//! candidate ratio N/D turns the objective into the additive cost
//! errors*D - words*N, which a dense dynamic program over (topologically
//! ordered FST states x hypothesis positions) minimizes globally; the ratio
//! strictly decreases each round and the search stops when no path beats it.
//!
//! Ties are broken by fewer errors, then fewer insertions+deletions, then
//! fewer insertions, then more GOLD-tagged reference words, then earliest
//! arc order during the backtrace, so reports are reproducible across runs
//! and platforms.

use std::cmp::Ordering;

use thiserror::Error;

use crate::align::ErrorCounts;
use crate::fst::{Arc, MultiRefFst, SpanTag, UnionMode, ValidationReport};
use crate::norm::Token;

#[derive(Debug, Error)]
pub enum ScoreError {
    #[error("invalid FST: {0}")]
    InvalidFst(ValidationReport),
}

/// Error counts split by span tag. The per-tag counts sum exactly to the
/// overall counts, for both errors and reference words.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TaggedCounts {
    per_tag: [ErrorCounts; 3],
    pub overall: ErrorCounts,
}

impl TaggedCounts {
    pub fn tag(&self, tag: SpanTag) -> &ErrorCounts {
        &self.per_tag[tag_index(tag)]
    }

    fn tag_mut(&mut self, tag: SpanTag) -> &mut ErrorCounts {
        &mut self.per_tag[tag_index(tag)]
    }
}

fn tag_index(tag: SpanTag) -> usize {
    match tag {
        SpanTag::V => 0,
        SpanTag::Nv => 1,
        SpanTag::Gold => 2,
    }
}

/// One step of the best path through the FST.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PathStep {
    /// Arc traversal. On a labeled arc, `hypothesis: Some` is a match or
    /// substitution and `None` is a deletion; an epsilon arc always carries
    /// `None` and costs nothing.
    Arc {
        arc: Arc,
        hypothesis: Option<Token>,
    },
    /// Hypothesis token consumed at a state without traversing an arc.
    Insert { hypothesis: Token },
}

impl PathStep {
    pub fn op_name(&self) -> &'static str {
        match self {
            PathStep::Arc { arc, hypothesis } => match (&arc.label, hypothesis) {
                (None, _) => "epsilon",
                (Some(l), Some(h)) if l == h => "match",
                (Some(_), Some(_)) => "substitute",
                (Some(_), None) => "delete",
            },
            PathStep::Insert { .. } => "insert",
        }
    }

    pub fn arc(&self) -> Option<&Arc> {
        match self {
            PathStep::Arc { arc, .. } => Some(arc),
            PathStep::Insert { .. } => None,
        }
    }
}

/// Scoring outcome: tagged counts, ratios, and the chosen path.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreReport {
    pub counts: TaggedCounts,
    /// Overall errors / denominator; `None` when the denominator is zero.
    pub mwer: Option<f64>,
    /// GOLD-attributed errors / GOLD reference words; `None` when the best
    /// path carries no GOLD reference words (references fully disagree).
    pub gold_wer: Option<f64>,
    pub best_path: Vec<PathStep>,
    /// Count of non-epsilon reference arcs on the best path.
    pub denominator: usize,
}

/// GOLD WER from tagged counts; `None` when there are no GOLD reference
/// words to score against.
pub fn gold_wer(counts: &TaggedCounts) -> Option<f64> {
    counts.tag(SpanTag::Gold).wer()
}

/// Attributed tag per path step. Arc steps take their arc's tag. An
/// insertion takes the tag of the nearest following arc on the path (an
/// epsilon arc anchors its branch's tag), falling back to the nearest
/// preceding arc for path-final insertions.
pub fn attributed_tags(best_path: &[PathStep]) -> Vec<SpanTag> {
    let n = best_path.len();
    let mut next_arc_tag: Vec<Option<SpanTag>> = vec![None; n];
    let mut carry = None;
    for i in (0..n).rev() {
        if let Some(arc) = best_path[i].arc() {
            carry = Some(arc.tag);
        }
        next_arc_tag[i] = carry;
    }
    let mut tags = Vec::with_capacity(n);
    let mut prev = None;
    for (i, step) in best_path.iter().enumerate() {
        let tag = match step {
            PathStep::Arc { arc, .. } => arc.tag,
            PathStep::Insert { .. } => next_arc_tag[i]
                .or(prev)
                // A path with no arcs at all: attribute to GOLD.
                .unwrap_or(SpanTag::Gold),
        };
        if step.arc().is_some() {
            prev = Some(tag);
        }
        tags.push(tag);
    }
    tags
}

/// Tallies each path step under its attributed tag. Epsilon traversals
/// contribute no reference words and no errors.
pub fn aggregate_tags(best_path: &[PathStep]) -> TaggedCounts {
    let tags = attributed_tags(best_path);
    let mut counts = TaggedCounts::default();
    for (step, tag) in best_path.iter().zip(tags) {
        let c = counts.tag_mut(tag);
        match step {
            PathStep::Arc { arc, hypothesis } => match (&arc.label, hypothesis) {
                (None, _) => {}
                (Some(l), Some(h)) => {
                    c.reference_words += 1;
                    if l != h {
                        c.substitutions += 1;
                    }
                }
                (Some(_), None) => {
                    c.reference_words += 1;
                    c.deletions += 1;
                }
            },
            PathStep::Insert { .. } => c.insertions += 1,
        }
    }
    for tag in SpanTag::ALL {
        let per = *counts.tag(tag);
        counts.overall.add(&per);
    }
    counts
}

// DP value for one parametric round with candidate ratio num/den:
// lexicographic (errors*den - words*num, errors, insertions+deletions,
// insertions, -gold reference words). Componentwise addition preserves the
// ordering, so min-plus relaxation stays optimal for the whole tuple.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct DpCost {
    penalty: i64,
    errors: u32,
    insdel: u32,
    ins: u32,
    gold: u32,
}

impl DpCost {
    const ZERO: DpCost = DpCost {
        penalty: 0,
        errors: 0,
        insdel: 0,
        ins: 0,
        gold: 0,
    };
    const INF: DpCost = DpCost {
        penalty: i64::MAX,
        errors: u32::MAX,
        insdel: 0,
        ins: 0,
        gold: 0,
    };

    fn is_finite(self) -> bool {
        self.penalty != i64::MAX
    }

    fn add(self, d: DpCost) -> DpCost {
        DpCost {
            penalty: self.penalty + d.penalty,
            errors: self.errors + d.errors,
            insdel: self.insdel + d.insdel,
            ins: self.ins + d.ins,
            gold: self.gold + d.gold,
        }
    }
}

impl PartialOrd for DpCost {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for DpCost {
    fn cmp(&self, other: &Self) -> Ordering {
        self.penalty
            .cmp(&other.penalty)
            .then(self.errors.cmp(&other.errors))
            .then(self.insdel.cmp(&other.insdel))
            .then(self.ins.cmp(&other.ins))
            .then(other.gold.cmp(&self.gold))
    }
}

/// Per-step deltas under candidate ratio `num/den`: an error costs `den`
/// penalty, a consumed reference word refunds `num`.
#[derive(Debug, Clone, Copy)]
struct Deltas {
    num: i64,
    den: i64,
}

impl Deltas {
    fn consume(self, error: bool, gold: bool) -> DpCost {
        DpCost {
            penalty: if error { self.den } else { 0 } - self.num,
            errors: error as u32,
            insdel: 0,
            ins: 0,
            gold: gold as u32,
        }
    }

    fn delete(self, gold: bool) -> DpCost {
        DpCost {
            penalty: self.den - self.num,
            errors: 1,
            insdel: 1,
            ins: 0,
            gold: gold as u32,
        }
    }

    fn insert(self) -> DpCost {
        DpCost {
            penalty: self.den,
            errors: 1,
            insdel: 1,
            ins: 1,
            gold: 0,
        }
    }

    fn epsilon(self) -> DpCost {
        DpCost::ZERO
    }
}

/// Reference words on a full path, recovered from the alignment identities:
/// words = |hyp| + deletions - insertions.
fn path_words(hyp_len: usize, cost: DpCost) -> usize {
    hyp_len + cost.insdel as usize - 2 * cost.ins as usize
}

/// Scores a hypothesis against a validated multireference FST; rejects an
/// FST that fails validation. The empty hypothesis is allowed and aligns as
/// deletions along the cheapest path.
pub fn score_fst(fst: &MultiRefFst, hypothesis: &[Token]) -> Result<ScoreReport, ScoreError> {
    let report = fst.validate();
    if !report.is_valid() {
        return Err(ScoreError::InvalidFst(report));
    }
    Ok(score_validated(fst, hypothesis))
}

/// Single-reference convenience: equivalent to scoring the linear all-GOLD
/// FST of the reference. An empty reference with a nonempty hypothesis yields
/// `mwer: None`.
pub fn score_single(reference: &[Token], hypothesis: &[Token]) -> ScoreReport {
    let fst = MultiRefFst::linear(reference, SpanTag::Gold, UnionMode::SpanLevel);
    score_validated(&fst, hypothesis)
}

/// Scores many hypotheses against one immutable FST, in parallel when the
/// `parallel` feature is enabled.
pub fn score_batch(
    fst: &MultiRefFst,
    hypotheses: &[Vec<Token>],
) -> Result<Vec<ScoreReport>, ScoreError> {
    let report = fst.validate();
    if !report.is_valid() {
        return Err(ScoreError::InvalidFst(report));
    }
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        Ok(hypotheses
            .par_iter()
            .map(|h| score_validated(fst, h))
            .collect())
    }
    #[cfg(not(feature = "parallel"))]
    {
        Ok(hypotheses.iter().map(|h| score_validated(fst, h)).collect())
    }
}

/// Sequential batch scoring, available regardless of the `parallel` feature;
/// results are identical to [`score_batch`].
pub fn score_batch_seq(
    fst: &MultiRefFst,
    hypotheses: &[Vec<Token>],
) -> Result<Vec<ScoreReport>, ScoreError> {
    let report = fst.validate();
    if !report.is_valid() {
        return Err(ScoreError::InvalidFst(report));
    }
    Ok(hypotheses.iter().map(|h| score_validated(fst, h)).collect())
}

pub(crate) fn score_validated(fst: &MultiRefFst, hyp: &[Token]) -> ScoreReport {
    // Round 1 doubles as the minimum-error probe: with ratio 0/1 the penalty
    // is simply the error count.
    let d0 = Deltas { num: 0, den: 1 };
    let (dist0, best0) = run_dp(fst, hyp, d0);
    if best0.errors == 0 {
        // A zero-error path is ratio-optimal outright.
        let steps = backtrace(fst, hyp, &dist0, d0);
        return assemble(hyp, steps);
    }

    let words0 = path_words(hyp.len(), best0);
    let (mut num, mut den) = if words0 > 0 {
        (best0.errors as i64, words0 as i64)
    } else {
        // The minimum-error path consumes no reference words. Probe for the
        // longest path; if none has any words the FST is degenerate (built
        // from an empty reference) and WER is undefined.
        let big = Deltas {
            num: (hyp.len() + fst.arcs().len() + 2) as i64,
            den: 1,
        };
        let (_, longest) = run_dp(fst, hyp, big);
        let max_words = path_words(hyp.len(), longest);
        if max_words == 0 {
            let steps = backtrace(fst, hyp, &dist0, d0);
            return assemble(hyp, steps);
        }
        (longest.errors as i64, max_words as i64)
    };

    // Parametric search: the candidate ratio strictly decreases and the
    // attainable ratios are a finite set, so this terminates; the bound is
    // generous.
    for _ in 0..96 {
        let deltas = Deltas { num, den };
        let (dist, best) = run_dp(fst, hyp, deltas);
        debug_assert!(best.penalty <= 0, "candidate ratio must be attainable");
        if best.penalty == 0 {
            let steps = backtrace(fst, hyp, &dist, deltas);
            return assemble(hyp, steps);
        }
        num = best.errors as i64;
        den = path_words(hyp.len(), best) as i64;
        debug_assert!(den > 0, "negative penalty requires consumed words");
    }
    unreachable!("ratio search did not converge");
}

fn run_dp(fst: &MultiRefFst, hyp: &[Token], deltas: Deltas) -> (Vec<DpCost>, DpCost) {
    let ns = fst.num_states();
    let n = hyp.len();
    let width = n + 1;
    let arcs = fst.arcs();
    let adj = fst.adjacency();

    let mut dist = vec![DpCost::INF; ns * width];
    dist[fst.start() * width] = DpCost::ZERO;

    for s in 0..ns {
        for j in 0..=n {
            if j > 0 && dist[s * width + j - 1].is_finite() {
                let cand = dist[s * width + j - 1].add(deltas.insert());
                if cand < dist[s * width + j] {
                    dist[s * width + j] = cand;
                }
            }
            let cur = dist[s * width + j];
            if !cur.is_finite() {
                continue;
            }
            for &ai in &adj[s] {
                let arc = &arcs[ai];
                match &arc.label {
                    None => {
                        let cand = cur.add(deltas.epsilon());
                        let cell = &mut dist[arc.to * width + j];
                        if cand < *cell {
                            *cell = cand;
                        }
                    }
                    Some(label) => {
                        let gold = arc.tag == SpanTag::Gold;
                        let cand = cur.add(deltas.delete(gold));
                        let cell = &mut dist[arc.to * width + j];
                        if cand < *cell {
                            *cell = cand;
                        }
                        if j < n {
                            let cand = cur.add(deltas.consume(label != &hyp[j], gold));
                            let cell = &mut dist[arc.to * width + j + 1];
                            if cand < *cell {
                                *cell = cand;
                            }
                        }
                    }
                }
            }
        }
    }

    let best = dist[fst.final_state() * width + n];
    (dist, best)
}

fn backtrace(fst: &MultiRefFst, hyp: &[Token], dist: &[DpCost], deltas: Deltas) -> Vec<PathStep> {
    let width = hyp.len() + 1;
    let arcs = fst.arcs();
    let mut radj = vec![Vec::new(); fst.num_states()];
    for (i, arc) in arcs.iter().enumerate() {
        radj[arc.to].push(i);
    }

    let mut steps: Vec<PathStep> = Vec::new();
    let mut s = fst.final_state();
    let mut j = hyp.len();
    while (s, j) != (fst.start(), 0) {
        let cur = dist[s * width + j];
        let reaches = |cell: DpCost, delta: DpCost| cell.is_finite() && cell.add(delta) == cur;

        // Preference order: match, substitute, delete, epsilon, insert;
        // earliest arc first within each class.
        let mut found = false;
        if j > 0 {
            for error in [false, true] {
                for &ai in &radj[s] {
                    let arc = &arcs[ai];
                    let Some(label) = &arc.label else { continue };
                    if (label != &hyp[j - 1]) != error {
                        continue;
                    }
                    let delta = deltas.consume(error, arc.tag == SpanTag::Gold);
                    if reaches(dist[arc.from * width + j - 1], delta) {
                        steps.push(PathStep::Arc {
                            arc: arc.clone(),
                            hypothesis: Some(hyp[j - 1].clone()),
                        });
                        s = arc.from;
                        j -= 1;
                        found = true;
                        break;
                    }
                }
                if found {
                    break;
                }
            }
        }
        if !found {
            for labeled in [true, false] {
                for &ai in &radj[s] {
                    let arc = &arcs[ai];
                    if arc.label.is_some() != labeled {
                        continue;
                    }
                    let delta = if labeled {
                        deltas.delete(arc.tag == SpanTag::Gold)
                    } else {
                        deltas.epsilon()
                    };
                    if reaches(dist[arc.from * width + j], delta) {
                        steps.push(PathStep::Arc {
                            arc: arc.clone(),
                            hypothesis: None,
                        });
                        s = arc.from;
                        found = true;
                        break;
                    }
                }
                if found {
                    break;
                }
            }
        }
        if !found && j > 0 && reaches(dist[s * width + j - 1], deltas.insert()) {
            steps.push(PathStep::Insert {
                hypothesis: hyp[j - 1].clone(),
            });
            j -= 1;
            found = true;
        }
        assert!(found, "backtrace stuck at state {s}, position {j}");
    }
    steps.reverse();
    steps
}

fn assemble(hyp: &[Token], best_path: Vec<PathStep>) -> ScoreReport {
    let counts = aggregate_tags(&best_path);
    debug_assert_eq!(
        counts.overall.insertions + counts.overall.reference_words
            - counts.overall.deletions,
        hyp.len(),
        "path step counts must reconstruct the hypothesis length"
    );
    let denominator = counts.overall.reference_words;
    ScoreReport {
        mwer: counts.overall.wer(),
        gold_wer: gold_wer(&counts),
        denominator,
        counts,
        best_path,
    }
}
