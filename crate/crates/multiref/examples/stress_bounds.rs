//! Randomized stress for the WER bound chain and oracle equivalence.
//!
//! Usage: cargo run --release -p multiref --example stress_bounds [trials] [seed]
//!
//! Sweeps small vocabularies and short lengths, which is where tie-breaking
//! pathologies would surface, and reports the first violations found.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use multiref::align::align;
use multiref::fst::{build_fst, UnionMode};
use multiref::norm::Token;
use multiref::oracle::oracle_mwer;
use multiref::score::{score_fst, score_single};

fn random_tokens(rng: &mut StdRng, max_len: usize, min_len: usize, vocab: usize) -> Vec<Token> {
    let len = rng.random_range(min_len..=max_len);
    (0..len)
        .map(|_| Token::new(&format!("w{}", rng.random_range(0..vocab))).unwrap())
        .collect()
}

// a/b <= c/d with b, d > 0, exact.
fn ratio_le(a: usize, b: usize, c: usize, d: usize) -> bool {
    (a as u128) * (d as u128) <= (c as u128) * (b as u128)
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let trials: usize = args.get(1).map_or(200_000, |s| s.parse().unwrap());
    let seed: u64 = args.get(2).map_or(42, |s| s.parse().unwrap());
    let mut rng = StdRng::seed_from_u64(seed);

    let mut violations = 0usize;
    let mut oracle_mismatches = 0usize;
    for trial in 0..trials {
        let vocab = [1, 2, 3, 4, 8][rng.random_range(0..5)];
        let max_len = [4, 8, 15][rng.random_range(0..3)];
        let v = random_tokens(&mut rng, max_len, 1, vocab);
        let nv = random_tokens(&mut rng, max_len, 1, vocab);
        let hyp = random_tokens(&mut rng, max_len, 0, vocab);

        let alignment = align(&v, &nv);
        let span = build_fst(&alignment, UnionMode::SpanLevel).unwrap();
        let word = build_fst(&alignment, UnionMode::WordLevel).unwrap();

        let span_report = score_fst(&span, &hyp).unwrap();
        let word_report = score_fst(&word, &hyp).unwrap();
        let v_report = score_single(&v, &hyp);
        let nv_report = score_single(&nv, &hyp);

        let se = span_report.counts.overall.errors();
        let sd = span_report.denominator;
        let we = word_report.counts.overall.errors();
        let wd = word_report.denominator;
        let ve = v_report.counts.overall.errors();
        let ne = nv_report.counts.overall.errors();

        let mut bad = Vec::new();
        if sd == 0 || wd == 0 {
            // Possible only when a path of the FST is empty, which needs an
            // empty reference; we generate min_len 1, so flag it.
            bad.push("zero denominator".to_owned());
        } else {
            if !ratio_le(we, wd, se, sd) {
                bad.push(format!("word {we}/{wd} > span {se}/{sd}"));
            }
            if !ratio_le(se, sd, ve, v.len()) {
                bad.push(format!("span {se}/{sd} > V {ve}/{}", v.len()));
            }
            if !ratio_le(se, sd, ne, nv.len()) {
                bad.push(format!("span {se}/{sd} > NV {ne}/{}", nv.len()));
            }
        }

        // Oracle equivalence on errors, both modes.
        for (fst, report, name) in [(&span, &span_report, "span"), (&word, &word_report, "word")] {
            let oracle = oracle_mwer(fst, &hyp, 1 << 22).unwrap();
            if oracle.best_errors != report.counts.overall.errors() {
                oracle_mismatches += 1;
                bad.push(format!(
                    "{name} oracle {} != scorer {}",
                    oracle.best_errors,
                    report.counts.overall.errors()
                ));
            }
        }

        if !bad.is_empty() {
            violations += 1;
            eprintln!("trial {trial}: {}", bad.join("; "));
            eprintln!("  V   = {v:?}");
            eprintln!("  NV  = {nv:?}");
            eprintln!("  hyp = {hyp:?}");
            if violations > 5 {
                std::process::exit(1);
            }
        }
    }
    println!(
        "{trials} trials: {violations} violations, {oracle_mismatches} oracle mismatches"
    );
    std::process::exit(if violations == 0 { 0 } else { 1 });
}
