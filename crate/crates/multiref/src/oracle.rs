//! Brute-force reference computations: exhaustive path enumeration plus
//! per-path edit distance, and a naive quadratic edit-distance checker.
//!
//! The oracle picks the same winner as the scorer: the path whose per-path
//! WER ratio is smallest (compared exactly as fractions), ties broken toward
//! fewer errors. These are deliberately naive and independent of the
//! optimized scorer so they can audit it; they ship in the library (behind
//! the CLI `--oracle` flag) rather than living only in tests, so anomalies
//! can be investigated on real data.

use crate::fst::{EnumerateError, MultiRefFst};
use crate::norm::Token;

/// Default enumeration bound: 2^20 paths, i.e. 20 forks. Larger FSTs require
/// an explicit override.
pub const DEFAULT_PATH_LIMIT: usize = 1 << 20;

/// The path with the fewest raw edit errors, surfaced when minimizing the
/// error count instead of the WER ratio would have chosen differently.
#[derive(Debug, Clone, PartialEq)]
pub struct MinErrorPath {
    pub errors: usize,
    /// `errors` over this path's length; `None` for an empty path.
    pub wer: Option<f64>,
    pub path_tokens: Vec<Token>,
}

/// Exhaustive minimum-WER selection over all FST paths.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    /// Edit errors on the minimum-WER path.
    pub best_errors: usize,
    /// The minimum WER ratio itself; `None` only for a degenerate FST whose
    /// paths carry no reference words.
    pub best_wer: Option<f64>,
    pub best_path_tokens: Vec<Token>,
    pub candidates_examined: usize,
    /// Present only when the minimum-error path has strictly fewer errors
    /// than the minimum-WER path; diagnoses the divergence between the two
    /// objectives.
    pub min_error_path: Option<MinErrorPath>,
}

/// Textbook edit-distance recurrence over a full matrix. No backtrace, no
/// optimization; this is the test oracle for the alignment module.
pub fn naive_edit_distance(a: &[Token], b: &[Token]) -> usize {
    let m = a.len();
    let n = b.len();
    let mut d = vec![vec![0usize; n + 1]; m + 1];
    for (i, row) in d.iter_mut().enumerate() {
        row[0] = i;
    }
    for (j, cell) in d[0].iter_mut().enumerate() {
        *cell = j;
    }
    for i in 1..=m {
        for j in 1..=n {
            let sub = d[i - 1][j - 1] + usize::from(a[i - 1] != b[j - 1]);
            let del = d[i - 1][j] + 1;
            let ins = d[i][j - 1] + 1;
            d[i][j] = sub.min(del).min(ins);
        }
    }
    d[m][n]
}

// Ranking key mirroring the scorer: zero-error paths first, then paths with
// a defined ratio ordered by that ratio then error count, then empty paths.
fn better(e1: usize, l1: usize, e2: usize, l2: usize) -> bool {
    if (e1 == 0) != (e2 == 0) {
        return e1 == 0;
    }
    match (l1 == 0, l2 == 0) {
        (true, true) => e1 < e2,
        (true, false) => false,
        (false, true) => true,
        (false, false) => {
            // e1/l1 < e2/l2, exactly.
            let lhs = (e1 as u128) * (l2 as u128);
            let rhs = (e2 as u128) * (l1 as u128);
            lhs < rhs || (lhs == rhs && e1 < e2)
        }
    }
}

/// Enumerates every path of `fst` (up to `limit`) and selects the
/// minimum-WER path against the hypothesis. Fails without a partial answer
/// when enumeration would exceed the limit. Per-path distances run in
/// parallel when the `parallel` feature is enabled; the result is identical
/// either way.
pub fn oracle_mwer(
    fst: &MultiRefFst,
    hypothesis: &[Token],
    limit: usize,
) -> Result<OracleResult, EnumerateError> {
    let set = fst.enumerate_paths(limit)?;
    let paths: Vec<&Vec<Token>> = set.iter().collect();

    let distances: Vec<usize> = {
        #[cfg(feature = "parallel")]
        {
            use rayon::prelude::*;
            paths
                .par_iter()
                .map(|p| naive_edit_distance(p, hypothesis))
                .collect()
        }
        #[cfg(not(feature = "parallel"))]
        {
            paths
                .iter()
                .map(|p| naive_edit_distance(p, hypothesis))
                .collect()
        }
    };

    let mut best = 0usize;
    let mut min_err = 0usize;
    for i in 1..paths.len() {
        if better(distances[i], paths[i].len(), distances[best], paths[best].len()) {
            best = i;
        }
        if distances[i] < distances[min_err] {
            min_err = i;
        }
    }

    let best_errors = distances.get(best).copied().unwrap_or(0);
    let best_len = paths.get(best).map_or(0, |p| p.len());
    let min_error_path = if distances.get(min_err).copied().unwrap_or(0) < best_errors {
        Some(MinErrorPath {
            errors: distances[min_err],
            wer: ratio(distances[min_err], paths[min_err].len()),
            path_tokens: paths[min_err].clone(),
        })
    } else {
        None
    };

    Ok(OracleResult {
        best_errors,
        best_wer: ratio(best_errors, best_len),
        best_path_tokens: paths.get(best).map(|p| (*p).clone()).unwrap_or_default(),
        candidates_examined: paths.len(),
        min_error_path,
    })
}

fn ratio(errors: usize, len: usize) -> Option<f64> {
    if len == 0 {
        if errors == 0 {
            Some(0.0)
        } else {
            None
        }
    } else {
        Some(errors as f64 / len as f64)
    }
}
