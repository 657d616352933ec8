//! Tagged acyclic multireference FSTs.
//!
//! An alignment between a verbatim (V) and nonverbatim (NV) reference is
//! compiled into a word FST whose paths are admissible readings: shared
//! segments become GOLD-tagged chains, disagreements become two-branch forks.
//! Span-level union forks once per maximal disagreement run; word-level union
//! forks at every disagreeing pair and therefore admits more paths.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::align::{Alignment, EditOp};
use crate::norm::Token;

pub type StateId = usize;

/// Source attribution for an arc's span.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SpanTag {
    /// Only in the verbatim reference.
    V,
    /// Only in the nonverbatim reference.
    Nv,
    /// In both references.
    Gold,
}

impl SpanTag {
    pub const ALL: [SpanTag; 3] = [SpanTag::V, SpanTag::Nv, SpanTag::Gold];

    pub fn name(self) -> &'static str {
        match self {
            SpanTag::V => "V",
            SpanTag::Nv => "NV",
            SpanTag::Gold => "GOLD",
        }
    }

    pub fn parse(s: &str) -> Option<SpanTag> {
        match s {
            "V" => Some(SpanTag::V),
            "NV" => Some(SpanTag::Nv),
            "GOLD" => Some(SpanTag::Gold),
            _ => None,
        }
    }
}

impl fmt::Display for SpanTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Label written for epsilon arcs in the text format.
pub const EPSILON_LABEL: &str = "<eps>";

/// One transition. `label: None` is an epsilon arc: it consumes no hypothesis
/// token and arises only as the empty side of a disagreement branch.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Arc {
    pub from: StateId,
    pub to: StateId,
    pub label: Option<Token>,
    pub tag: SpanTag,
}

impl Arc {
    pub fn label_str(&self) -> &str {
        self.label.as_ref().map_or(EPSILON_LABEL, Token::as_str)
    }
}

/// FST union construction mode.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum UnionMode {
    #[default]
    SpanLevel,
    WordLevel,
}

impl UnionMode {
    pub fn name(self) -> &'static str {
        match self {
            UnionMode::SpanLevel => "span-level",
            UnionMode::WordLevel => "word-level",
        }
    }

    pub fn parse(s: &str) -> Option<UnionMode> {
        match s {
            "span-level" => Some(UnionMode::SpanLevel),
            "word-level" => Some(UnionMode::WordLevel),
            _ => None,
        }
    }
}

impl fmt::Display for UnionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A tagged acyclic multireference FST. States are numbered in construction
/// order, which is a topological order; serialization relies on this.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultiRefFst {
    num_states: usize,
    start: StateId,
    final_state: StateId,
    arcs: Vec<Arc>,
    mode: UnionMode,
}

/// Maximal run of agreeing or disagreeing alignment ops.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Segment {
    /// Consecutive Match ops.
    Shared(Vec<EditOp>),
    /// Consecutive Substitute/Insert/Delete ops.
    Disagreement(Vec<EditOp>),
}

impl Segment {
    pub fn len(&self) -> usize {
        self.ops().len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops().is_empty()
    }

    pub fn ops(&self) -> &[EditOp] {
        match self {
            Segment::Shared(ops) | Segment::Disagreement(ops) => ops,
        }
    }

    /// Reference-side (V) tokens of this segment, in order.
    pub fn verbatim_tokens(&self) -> Vec<Token> {
        self.ops().iter().filter_map(|op| op.reference().cloned()).collect()
    }

    /// Hypothesis-side (NV) tokens of this segment, in order.
    pub fn nonverbatim_tokens(&self) -> Vec<Token> {
        self.ops().iter().filter_map(|op| op.hypothesis().cloned()).collect()
    }
}

/// Partitions alignment ops into maximal Shared and Disagreement runs,
/// preserving order. Every op lands in exactly one segment.
pub fn group_spans(a: &Alignment) -> Vec<Segment> {
    let mut segments = Vec::new();
    let mut run: Vec<EditOp> = Vec::new();
    let mut run_is_shared = true;
    for op in a.ops() {
        let shared = !op.is_error();
        if run.is_empty() || shared == run_is_shared {
            run_is_shared = shared;
            run.push(op.clone());
        } else {
            segments.push(seal(run, run_is_shared));
            run = vec![op.clone()];
            run_is_shared = shared;
        }
    }
    if !run.is_empty() {
        segments.push(seal(run, run_is_shared));
    }
    segments
}

fn seal(ops: Vec<EditOp>, shared: bool) -> Segment {
    if shared {
        Segment::Shared(ops)
    } else {
        Segment::Disagreement(ops)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BuildError {
    #[error("alignment does not reconstruct its sources: {0}")]
    Inconsistent(String),
}

struct Builder {
    num_states: usize,
    arcs: Vec<Arc>,
}

impl Builder {
    fn new() -> Builder {
        Builder {
            num_states: 1,
            arcs: Vec::new(),
        }
    }

    fn new_state(&mut self) -> StateId {
        let id = self.num_states;
        self.num_states += 1;
        id
    }

    fn arc(&mut self, from: StateId, to: StateId, label: Option<Token>, tag: SpanTag) {
        self.arcs.push(Arc {
            from,
            to,
            label,
            tag,
        });
    }

    /// Linear chain of tagged arcs from `cur`; returns the end state.
    fn chain(&mut self, mut cur: StateId, tokens: &[Token], tag: SpanTag) -> StateId {
        for t in tokens {
            let next = self.new_state();
            self.arc(cur, next, Some(t.clone()), tag);
            cur = next;
        }
        cur
    }

    /// Two-branch fork between `cur` and a fresh join state: the V side then
    /// the NV side, an empty side becoming a single epsilon arc carrying the
    /// tag of the side it represents.
    fn fork(&mut self, cur: StateId, v_side: &[Token], nv_side: &[Token]) -> StateId {
        let v_interior: Vec<StateId> =
            (1..v_side.len()).map(|_| self.new_state()).collect();
        let nv_interior: Vec<StateId> =
            (1..nv_side.len()).map(|_| self.new_state()).collect();
        let join = self.new_state();
        self.branch(cur, join, &v_interior, v_side, SpanTag::V);
        self.branch(cur, join, &nv_interior, nv_side, SpanTag::Nv);
        join
    }

    fn branch(
        &mut self,
        from: StateId,
        join: StateId,
        interior: &[StateId],
        tokens: &[Token],
        tag: SpanTag,
    ) {
        if tokens.is_empty() {
            self.arc(from, join, None, tag);
            return;
        }
        let mut cur = from;
        for (i, t) in tokens.iter().enumerate() {
            let next = if i + 1 == tokens.len() { join } else { interior[i] };
            self.arc(cur, next, Some(t.clone()), tag);
            cur = next;
        }
    }

    fn finish(self, final_state: StateId, mode: UnionMode) -> MultiRefFst {
        MultiRefFst {
            num_states: self.num_states,
            start: 0,
            final_state,
            arcs: self.arcs,
            mode,
        }
    }
}

/// Compiles a V-against-NV alignment into a multireference FST.
///
/// Span-level: each shared run becomes a chain of GOLD arcs and each
/// disagreement span becomes one two-branch fork. Word-level: every
/// disagreeing op forks on its own.
pub fn build_fst(a: &Alignment, mode: UnionMode) -> Result<MultiRefFst, BuildError> {
    check_alignment(a)?;
    let mut b = Builder::new();
    let mut cur = 0;
    match mode {
        UnionMode::SpanLevel => {
            for seg in group_spans(a) {
                cur = match &seg {
                    Segment::Shared(_) => b.chain(cur, &seg.verbatim_tokens(), SpanTag::Gold),
                    Segment::Disagreement(_) => {
                        b.fork(cur, &seg.verbatim_tokens(), &seg.nonverbatim_tokens())
                    }
                };
            }
        }
        UnionMode::WordLevel => {
            for op in a.ops() {
                cur = match op {
                    EditOp::Match { token } => {
                        b.chain(cur, std::slice::from_ref(token), SpanTag::Gold)
                    }
                    EditOp::Substitute {
                        reference,
                        hypothesis,
                    } => b.fork(
                        cur,
                        std::slice::from_ref(reference),
                        std::slice::from_ref(hypothesis),
                    ),
                    EditOp::Delete { reference } => {
                        b.fork(cur, std::slice::from_ref(reference), &[])
                    }
                    EditOp::Insert { hypothesis } => {
                        b.fork(cur, &[], std::slice::from_ref(hypothesis))
                    }
                };
            }
        }
    }
    Ok(b.finish(cur, mode))
}

fn check_alignment(a: &Alignment) -> Result<(), BuildError> {
    let ref_count = a.ops().iter().filter(|op| op.reference().is_some()).count();
    let hyp_count = a.ops().iter().filter(|op| op.hypothesis().is_some()).count();
    if ref_count != a.ref_len() || hyp_count != a.hyp_len() {
        return Err(BuildError::Inconsistent(format!(
            "ops cover {ref_count}/{} reference and {hyp_count}/{} hypothesis tokens",
            a.ref_len(),
            a.hyp_len()
        )));
    }
    for op in a.ops() {
        if let EditOp::Substitute {
            reference,
            hypothesis,
        } = op
        {
            if reference == hypothesis {
                return Err(BuildError::Inconsistent(format!(
                    "substitution of equal tokens {reference:?}"
                )));
            }
        }
    }
    Ok(())
}

/// All distinct start-to-final label sequences of an FST.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathSet {
    paths: BTreeSet<Vec<Token>>,
}

impl PathSet {
    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    pub fn contains(&self, path: &[Token]) -> bool {
        self.paths.contains(path)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Vec<Token>> {
        self.paths.iter()
    }

    pub fn is_superset(&self, other: &PathSet) -> bool {
        self.paths.is_superset(&other.paths)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EnumerateError {
    #[error("path count {count} exceeds enumeration limit {limit}")]
    LimitExceeded { count: u128, limit: usize },
}

/// A structural defect found by [`MultiRefFst::validate`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ValidationIssue {
    /// `start` or `final` or an arc endpoint is out of range.
    BadStateRef { detail: String },
    /// Arc does not respect the topological state numbering (from < to);
    /// covers self-loops and back arcs.
    NotTopological { arc_index: usize, arc: String },
    /// State is not reachable from the start state.
    Unreachable { state: StateId },
    /// State cannot reach the final state.
    CannotReachFinal { state: StateId },
    /// Epsilon arcs must carry a branch tag, never GOLD.
    EpsilonGold { arc_index: usize },
}

impl fmt::Display for ValidationIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ValidationIssue::BadStateRef { detail } => write!(f, "bad state reference: {detail}"),
            ValidationIssue::NotTopological { arc_index, arc } => {
                write!(f, "acyclicity: arc #{arc_index} ({arc}) violates topological order")
            }
            ValidationIssue::Unreachable { state } => {
                write!(f, "connectivity: state {state} unreachable from start")
            }
            ValidationIssue::CannotReachFinal { state } => {
                write!(f, "connectivity: state {state} cannot reach final")
            }
            ValidationIssue::EpsilonGold { arc_index } => {
                write!(f, "tags: epsilon arc #{arc_index} carries GOLD")
            }
        }
    }
}

/// Structured pass/fail outcome of FST validation.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub issues: Vec<ValidationIssue>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.issues.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_valid() {
            return f.write_str("valid");
        }
        for (i, issue) in self.issues.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{issue}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("line {line}: {reason}")]
    BadLine { line: usize, reason: String },
    #[error("missing start line")]
    MissingStart,
    #[error("missing final line")]
    MissingFinal,
}

impl MultiRefFst {
    /// Assembles an FST from raw parts without validation; use
    /// [`MultiRefFst::validate`] to check the result.
    pub fn from_parts(
        num_states: usize,
        start: StateId,
        final_state: StateId,
        arcs: Vec<Arc>,
        mode: UnionMode,
    ) -> MultiRefFst {
        MultiRefFst {
            num_states,
            start,
            final_state,
            arcs,
            mode,
        }
    }

    /// Linear single-reference FST: one chain of arcs with the given tag.
    pub fn linear(tokens: &[Token], tag: SpanTag, mode: UnionMode) -> MultiRefFst {
        let mut b = Builder::new();
        let end = b.chain(0, tokens, tag);
        let mut fst = b.finish(end, mode);
        fst.mode = mode;
        fst
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn start(&self) -> StateId {
        self.start
    }

    pub fn final_state(&self) -> StateId {
        self.final_state
    }

    pub fn arcs(&self) -> &[Arc] {
        &self.arcs
    }

    pub fn mode(&self) -> UnionMode {
        self.mode
    }

    /// Arc indexes grouped by source state.
    pub(crate) fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.num_states];
        for (i, arc) in self.arcs.iter().enumerate() {
            if arc.from < self.num_states {
                adj[arc.from].push(i);
            }
        }
        adj
    }

    /// Number of fork points (states with more than one outgoing arc).
    pub fn fork_count(&self) -> usize {
        self.adjacency().iter().filter(|out| out.len() > 1).count()
    }

    /// Number of distinct start-to-final traversals before label
    /// deduplication, saturating at `u128::MAX`. Requires a valid FST.
    pub fn path_count(&self) -> u128 {
        if self.num_states == 0 || self.start >= self.num_states {
            return 0;
        }
        let adj = self.adjacency();
        let mut count = vec![0u128; self.num_states];
        if self.final_state < self.num_states {
            count[self.final_state] = 1;
        }
        // Arcs respect the topological numbering, so a reverse sweep sees
        // every target before its source.
        for s in (0..self.num_states).rev() {
            for &i in &adj[s] {
                let to = self.arcs[i].to;
                if to < self.num_states && to > s {
                    count[s] = count[s].saturating_add(count[to]);
                }
            }
        }
        count[self.start]
    }

    /// Exhaustively enumerates all distinct label sequences from start to
    /// final. Fails without partial results when the traversal count exceeds
    /// `limit`.
    pub fn enumerate_paths(&self, limit: usize) -> Result<PathSet, EnumerateError> {
        let count = self.path_count();
        if count > limit as u128 {
            return Err(EnumerateError::LimitExceeded { count, limit });
        }
        let adj = self.adjacency();
        let mut paths = BTreeSet::new();
        // Iterative DFS; the stack holds (state, next arc choice index).
        let mut stack: Vec<(StateId, usize)> = vec![(self.start, 0)];
        let mut labels: Vec<Token> = Vec::new();
        let mut label_depth: Vec<usize> = vec![0];
        while let Some((state, choice)) = stack.pop() {
            labels.truncate(*label_depth.last().unwrap_or(&0));
            label_depth.pop();
            if choice == 0 && state == self.final_state {
                paths.insert(labels.clone());
            }
            if let Some(&arc_idx) = adj[state].get(choice) {
                // Re-push this state for its next choice, then descend.
                label_depth.push(labels.len());
                stack.push((state, choice + 1));
                if let Some(t) = &self.arcs[arc_idx].label {
                    labels.push(t.clone());
                }
                label_depth.push(labels.len());
                stack.push((self.arcs[arc_idx].to, 0));
            }
        }
        Ok(PathSet { paths })
    }

    /// Checks acyclicity (topological arc order), connectivity, state
    /// references, and tag well-formedness. Failures are report entries, not
    /// errors.
    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::default();
        let ns = self.num_states;
        if self.start >= ns {
            report.issues.push(ValidationIssue::BadStateRef {
                detail: format!("start state {} out of range ({ns} states)", self.start),
            });
        }
        if self.final_state >= ns {
            report.issues.push(ValidationIssue::BadStateRef {
                detail: format!("final state {} out of range ({ns} states)", self.final_state),
            });
        }
        for (i, arc) in self.arcs.iter().enumerate() {
            if arc.from >= ns || arc.to >= ns {
                report.issues.push(ValidationIssue::BadStateRef {
                    detail: format!("arc #{i} references state out of range"),
                });
                continue;
            }
            if arc.from >= arc.to {
                report.issues.push(ValidationIssue::NotTopological {
                    arc_index: i,
                    arc: format!("{} -> {} [{}]", arc.from, arc.to, arc.label_str()),
                });
            }
            if arc.label.is_none() && arc.tag == SpanTag::Gold {
                report.issues.push(ValidationIssue::EpsilonGold { arc_index: i });
            }
        }
        if !report.is_valid() {
            return report;
        }

        let adj = self.adjacency();
        let mut reach = vec![false; ns];
        let mut stack = vec![self.start];
        reach[self.start] = true;
        while let Some(s) = stack.pop() {
            for &i in &adj[s] {
                let to = self.arcs[i].to;
                if !reach[to] {
                    reach[to] = true;
                    stack.push(to);
                }
            }
        }
        let mut coreach = vec![false; ns];
        coreach[self.final_state] = true;
        for s in (0..ns).rev() {
            for &i in &adj[s] {
                if coreach[self.arcs[i].to] {
                    coreach[s] = true;
                }
            }
        }
        for s in 0..ns {
            if !reach[s] {
                report.issues.push(ValidationIssue::Unreachable { state: s });
            } else if !coreach[s] {
                report.issues.push(ValidationIssue::CannotReachFinal { state: s });
            }
        }
        report
    }

    /// Canonical form: states renumbered by BFS from start, arcs sorted by
    /// (source, label, tag, target) with epsilon ordered first. Two FSTs are
    /// isomorphic iff their canonical forms are identical.
    pub fn canonicalize(&self) -> MultiRefFst {
        let adj = self.adjacency();
        let mut renumber: Vec<Option<StateId>> = vec![None; self.num_states];
        let mut order: Vec<StateId> = Vec::with_capacity(self.num_states);
        let mut queue = std::collections::VecDeque::new();
        if self.start < self.num_states {
            renumber[self.start] = Some(0);
            order.push(self.start);
            queue.push_back(self.start);
        }
        while let Some(s) = queue.pop_front() {
            let mut out: Vec<&Arc> = adj[s].iter().map(|&i| &self.arcs[i]).collect();
            out.sort_by(|a, b| {
                (&a.label, a.tag, a.to).cmp(&(&b.label, b.tag, b.to))
            });
            for arc in out {
                if renumber[arc.to].is_none() {
                    renumber[arc.to] = Some(order.len());
                    order.push(arc.to);
                    queue.push_back(arc.to);
                }
            }
        }
        let map = |s: StateId| renumber[s].expect("state reachable");
        let mut arcs: Vec<Arc> = self
            .arcs
            .iter()
            .filter(|a| renumber[a.from].is_some() && renumber[a.to].is_some())
            .map(|a| Arc {
                from: map(a.from),
                to: map(a.to),
                label: a.label.clone(),
                tag: a.tag,
            })
            .collect();
        arcs.sort_by(|a, b| {
            (a.from, &a.label, a.tag, a.to).cmp(&(b.from, &b.label, b.tag, b.to))
        });
        MultiRefFst {
            num_states: order.len(),
            start: 0,
            final_state: map(self.final_state),
            arcs,
            mode: self.mode,
        }
    }

    /// Serializes to the line-oriented text format: a mode comment, one
    /// `start` header line, arc lines `src<TAB>dst<TAB>label<TAB>tag` sorted
    /// by source state (stable in construction order), and one `final` line.
    pub fn to_text(&self) -> String {
        let mut arc_order: Vec<usize> = (0..self.arcs.len()).collect();
        arc_order.sort_by_key(|&i| self.arcs[i].from);
        let mut out = String::new();
        out.push_str(&format!("# mode\t{}\n", self.mode));
        out.push_str(&format!("start\t{}\n", self.start));
        for i in arc_order {
            let a = &self.arcs[i];
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\n",
                a.from,
                a.to,
                a.label_str(),
                a.tag
            ));
        }
        out.push_str(&format!("final\t{}\n", self.final_state));
        out
    }

    /// Parses the text format produced by [`MultiRefFst::to_text`]. Comment
    /// lines start with `#`; a `# mode` comment restores the union mode
    /// (span-level when absent). The result is not validated.
    pub fn from_text(text: &str) -> Result<MultiRefFst, ParseError> {
        let mut start: Option<StateId> = None;
        let mut final_state: Option<StateId> = None;
        let mut arcs: Vec<Arc> = Vec::new();
        let mut mode = UnionMode::SpanLevel;

        let bad = |line: usize, reason: &str| ParseError::BadLine {
            line,
            reason: reason.to_owned(),
        };

        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim_end_matches('\r');
            if line.trim().is_empty() {
                continue;
            }
            if let Some(comment) = line.strip_prefix('#') {
                if let Some(rest) = comment.trim().strip_prefix("mode") {
                    if let Some(m) = UnionMode::parse(rest.trim()) {
                        mode = m;
                    }
                }
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            match fields.as_slice() {
                ["start", id] => {
                    if start.is_some() {
                        return Err(bad(line_no, "duplicate start line"));
                    }
                    start = Some(parse_id(line_no, id)?);
                }
                ["final", id] => {
                    if final_state.is_some() {
                        return Err(bad(line_no, "duplicate final line"));
                    }
                    final_state = Some(parse_id(line_no, id)?);
                }
                [src, dst, label, tag] => {
                    let from = parse_id(line_no, src)?;
                    let to = parse_id(line_no, dst)?;
                    let tag = SpanTag::parse(tag)
                        .ok_or_else(|| bad(line_no, &format!("unknown tag {tag:?}")))?;
                    let label = if *label == EPSILON_LABEL {
                        None
                    } else {
                        Some(Token::new(label).map_err(|e| bad(line_no, &e.to_string()))?)
                    };
                    arcs.push(Arc {
                        from,
                        to,
                        label,
                        tag,
                    });
                }
                _ => return Err(bad(line_no, "expected start/final/arc line")),
            }
        }

        let start = start.ok_or(ParseError::MissingStart)?;
        let final_state = final_state.ok_or(ParseError::MissingFinal)?;
        let num_states = arcs
            .iter()
            .flat_map(|a| [a.from, a.to])
            .chain([start, final_state])
            .max()
            .unwrap_or(0)
            + 1;
        Ok(MultiRefFst {
            num_states,
            start,
            final_state,
            arcs,
            mode,
        })
    }
}

fn parse_id(line: usize, text: &str) -> Result<StateId, ParseError> {
    text.parse().map_err(|_| ParseError::BadLine {
        line,
        reason: format!("bad state id {text:?}"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::align::align;
    use crate::norm::Token;

    fn toks(words: &[&str]) -> Vec<Token> {
        words.iter().map(|w| Token::new(w).unwrap()).collect()
    }

    fn three_word_fst(mode: UnionMode) -> MultiRefFst {
        let v = toks(&["the", "big", "cat"]);
        let nv = toks(&["the", "cat"]);
        build_fst(&align(&v, &nv), mode).unwrap()
    }

    #[test]
    fn identical_references_group_to_one_shared_segment() {
        let r = toks(&["a", "b", "c"]);
        let segs = group_spans(&align(&r, &r));
        assert_eq!(segs.len(), 1);
        assert!(matches!(&segs[0], Segment::Shared(ops) if ops.len() == 3));
    }

    #[test]
    fn maximal_runs_partition_ops() {
        // [Match, Sub, Del, Match] -> Shared(1), Disagreement(2), Shared(1)
        let v = toks(&["a", "b", "c", "d"]);
        let nv = toks(&["a", "x", "d"]);
        let a = align(&v, &nv);
        let segs = group_spans(&a);
        let shape: Vec<(bool, usize)> = segs
            .iter()
            .map(|s| (matches!(s, Segment::Shared(_)), s.len()))
            .collect();
        assert_eq!(shape, vec![(true, 1), (false, 2), (true, 1)]);
    }

    #[test]
    fn disagreement_runs_at_both_ends() {
        let v = toks(&["p", "a", "q"]);
        let nv = toks(&["x", "a", "y"]);
        let segs = group_spans(&align(&v, &nv));
        let shape: Vec<(bool, usize)> = segs
            .iter()
            .map(|s| (matches!(s, Segment::Shared(_)), s.len()))
            .collect();
        assert_eq!(shape, vec![(false, 1), (true, 1), (false, 1)]);
    }

    #[test]
    fn identical_references_build_linear_gold_fst() {
        let r = toks(&["a", "b", "c"]);
        let fst = build_fst(&align(&r, &r), UnionMode::SpanLevel).unwrap();
        assert_eq!(fst.arcs().len(), 3);
        assert!(fst.arcs().iter().all(|a| a.tag == SpanTag::Gold && a.label.is_some()));
        assert_eq!(fst.fork_count(), 0);
        assert_eq!(fst.path_count(), 1);
    }

    #[test]
    fn span_level_three_word_structure() {
        let fst = three_word_fst(UnionMode::SpanLevel);
        // GOLD(the) . fork{V: big | NV: eps} . GOLD(cat)
        assert_eq!(fst.fork_count(), 1);
        let golds: Vec<&str> = fst
            .arcs()
            .iter()
            .filter(|a| a.tag == SpanTag::Gold)
            .map(|a| a.label_str())
            .collect();
        assert_eq!(golds, vec!["the", "cat"]);
        let v_arcs: Vec<&Arc> = fst.arcs().iter().filter(|a| a.tag == SpanTag::V).collect();
        let nv_arcs: Vec<&Arc> = fst.arcs().iter().filter(|a| a.tag == SpanTag::Nv).collect();
        assert_eq!(v_arcs.len(), 1);
        assert_eq!(v_arcs[0].label_str(), "big");
        assert_eq!(nv_arcs.len(), 1);
        assert!(nv_arcs[0].label.is_none());
        assert_eq!((v_arcs[0].from, v_arcs[0].to), (nv_arcs[0].from, nv_arcs[0].to));
    }

    #[test]
    fn both_sources_are_paths_in_both_modes() {
        let v = toks(&["a", "x", "b", "c"]);
        let nv = toks(&["a", "y", "z", "c"]);
        let a = align(&v, &nv);
        for mode in [UnionMode::SpanLevel, UnionMode::WordLevel] {
            let fst = build_fst(&a, mode).unwrap();
            let paths = fst.enumerate_paths(1 << 20).unwrap();
            assert!(paths.contains(&v), "V missing under {mode}");
            assert!(paths.contains(&nv), "NV missing under {mode}");
        }
    }

    #[test]
    fn gold_arc_count_equals_match_count() {
        let v = toks(&["a", "b", "c", "d", "e"]);
        let nv = toks(&["a", "c", "x", "e"]);
        let a = align(&v, &nv);
        let matches = a.ops().iter().filter(|op| !op.is_error()).count();
        for mode in [UnionMode::SpanLevel, UnionMode::WordLevel] {
            let fst = build_fst(&a, mode).unwrap();
            let golds = fst.arcs().iter().filter(|arc| arc.tag == SpanTag::Gold).count();
            assert_eq!(golds, matches);
        }
    }

    #[test]
    fn span_paths_subset_of_word_paths() {
        let v = toks(&["a", "b", "c", "d"]);
        let nv = toks(&["a", "x", "d", "e"]);
        let a = align(&v, &nv);
        let span = build_fst(&a, UnionMode::SpanLevel).unwrap();
        let word = build_fst(&a, UnionMode::WordLevel).unwrap();
        let span_paths = span.enumerate_paths(1 << 20).unwrap();
        let word_paths = word.enumerate_paths(1 << 20).unwrap();
        assert!(word_paths.is_superset(&span_paths));
    }

    #[test]
    fn linear_fst_has_one_path() {
        let fst = MultiRefFst::linear(&toks(&["a", "b"]), SpanTag::Gold, UnionMode::SpanLevel);
        let paths = fst.enumerate_paths(16).unwrap();
        assert_eq!(paths.len(), 1);
        assert!(paths.contains(&toks(&["a", "b"])));
    }

    #[test]
    fn two_fork_fst_has_at_most_four_paths() {
        let v = toks(&["a", "m", "b", "n", "c"]);
        let nv = toks(&["a", "x", "b", "y", "c"]);
        let fst = build_fst(&align(&v, &nv), UnionMode::SpanLevel).unwrap();
        assert_eq!(fst.fork_count(), 2);
        assert_eq!(fst.path_count(), 4);
        let paths = fst.enumerate_paths(16).unwrap();
        assert!(paths.len() <= 4);
        assert!(paths.contains(&v));
        assert!(paths.contains(&nv));
    }

    #[test]
    fn enumeration_limit_is_signaled() {
        let v = toks(&["a", "m", "b", "n", "c"]);
        let nv = toks(&["a", "x", "b", "y", "c"]);
        let fst = build_fst(&align(&v, &nv), UnionMode::SpanLevel).unwrap();
        assert_eq!(
            fst.enumerate_paths(3),
            Err(EnumerateError::LimitExceeded { count: 4, limit: 3 })
        );
    }

    #[test]
    fn built_fsts_validate() {
        for mode in [UnionMode::SpanLevel, UnionMode::WordLevel] {
            let fst = three_word_fst(mode);
            assert!(fst.validate().is_valid(), "{}", fst.validate());
        }
    }

    #[test]
    fn back_arc_fails_acyclicity_naming_the_arc() {
        let mut fst = three_word_fst(UnionMode::SpanLevel);
        let back = Arc {
            from: 3,
            to: 1,
            label: Some(Token::new("loop").unwrap()),
            tag: SpanTag::V,
        };
        let idx = fst.arcs.len();
        fst.arcs.push(back);
        let report = fst.validate();
        assert!(report
            .issues
            .iter()
            .any(|i| matches!(i, ValidationIssue::NotTopological { arc_index, .. } if *arc_index == idx)));
    }

    #[test]
    fn unreachable_state_fails_connectivity() {
        let fst = MultiRefFst::from_parts(
            3,
            0,
            1,
            vec![Arc {
                from: 0,
                to: 1,
                label: Some(Token::new("a").unwrap()),
                tag: SpanTag::Gold,
            }],
            UnionMode::SpanLevel,
        );
        let report = fst.validate();
        assert_eq!(report.issues, vec![ValidationIssue::Unreachable { state: 2 }]);
    }

    #[test]
    fn epsilon_gold_is_flagged() {
        let fst = MultiRefFst::from_parts(
            2,
            0,
            1,
            vec![Arc {
                from: 0,
                to: 1,
                label: None,
                tag: SpanTag::Gold,
            }],
            UnionMode::SpanLevel,
        );
        assert!(!fst.validate().is_valid());
    }

    #[test]
    fn inconsistent_alignment_is_rejected() {
        let ops = vec![EditOp::Match {
            token: Token::new("a").unwrap(),
        }];
        let a = Alignment::from_ops(ops, 2, 1);
        assert!(matches!(
            build_fst(&a, UnionMode::SpanLevel),
            Err(BuildError::Inconsistent(_))
        ));
    }

    #[test]
    fn text_roundtrip_preserves_canonical_form() {
        for mode in [UnionMode::SpanLevel, UnionMode::WordLevel] {
            let fst = three_word_fst(mode);
            let parsed = MultiRefFst::from_text(&fst.to_text()).unwrap();
            assert_eq!(parsed.mode(), mode);
            assert_eq!(parsed.canonicalize(), fst.canonicalize());
        }
    }

    #[test]
    fn text_format_shape() {
        let fst = three_word_fst(UnionMode::SpanLevel);
        let text = fst.to_text();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# mode\tspan-level");
        assert_eq!(lines[1], "start\t0");
        assert_eq!(lines.last().unwrap(), &format!("final\t{}", fst.final_state()));
        assert!(lines.contains(&"1\t2\t<eps>\tNV"));
    }

    #[test]
    fn parse_rejects_malformed_lines() {
        assert!(matches!(
            MultiRefFst::from_text("start\t0\nbogus line\nfinal\t1\n"),
            Err(ParseError::BadLine { line: 2, .. })
        ));
        assert_eq!(MultiRefFst::from_text("final\t0\n"), Err(ParseError::MissingStart));
        assert_eq!(MultiRefFst::from_text("start\t0\n"), Err(ParseError::MissingFinal));
        assert!(matches!(
            MultiRefFst::from_text("start\t0\n0\t1\ta\tBAD\nfinal\t1\n"),
            Err(ParseError::BadLine { line: 2, .. })
        ));
    }

    #[test]
    fn canonicalize_is_stable_under_state_relabeling() {
        let fst = three_word_fst(UnionMode::SpanLevel);
        // Relabel states by an order-reversing permutation of interior ids.
        let ns = fst.num_states();
        let perm: Vec<StateId> = (0..ns).rev().collect();
        let relabeled = MultiRefFst::from_parts(
            ns,
            perm[fst.start()],
            perm[fst.final_state()],
            fst.arcs()
                .iter()
                .map(|a| Arc {
                    from: perm[a.from],
                    to: perm[a.to],
                    label: a.label.clone(),
                    tag: a.tag,
                })
                .collect(),
            fst.mode(),
        );
        assert_eq!(relabeled.canonicalize(), fst.canonicalize());
    }
}
