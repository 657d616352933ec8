//! Multireference WER command line.
//!
//! Subcommands: `normalize` (cleaning ladder), `align` (word alignment),
//! `build-fst` (compile V and NV references into a tagged FST), `score`
//! (hypotheses against an FST), `ablate` (cumulative normalization ladder
//! against a single reference).
//!
//! Transcripts are UTF-8 plain text; a file is one transcript with lines
//! joined in order, except where `--per-line` applies. Rule tables can be
//! overridden by pointing `MRWER_DATA_DIR` at a directory of data files.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use multiref::align::{align, ErrorCounts};
use multiref::fst::{build_fst, MultiRefFst, UnionMode};
use multiref::norm::{apply_pipeline, apply_step, NormConfig, NormTables, Token};
use multiref::oracle::{oracle_mwer, OracleResult, DEFAULT_PATH_LIMIT};
use multiref::report::{alignment_json, alignment_lines_json, fmt_ratio, score_report_json};
use multiref::score::{score_batch, score_single, ScoreReport};
use multiref::NormStep;

/// Environment variable naming a directory of rule-table data files.
const DATA_DIR_ENV: &str = "MRWER_DATA_DIR";

#[derive(Parser)]
#[command(
    name = "mrwer",
    version,
    about = "Multireference WER: tagged transcript FSTs and style-aware scoring"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct StepsArg {
    /// Normalization steps, comma-separated and applied in flag order:
    /// filler-words, english-normalize, stutters-repetitions, filler-phrases.
    /// Default: none (raw tokenization).
    #[arg(long, value_name = "STEPS", allow_hyphen_values = true)]
    steps: Vec<String>,
}

impl StepsArg {
    fn config(&self) -> Result<NormConfig> {
        NormConfig::parse(&self.steps.join(",")).map_err(|e| anyhow!(e))
    }
}

#[derive(Args)]
struct OutputArg {
    /// Output file; stdout when omitted. Partially written files are removed
    /// on failure.
    #[arg(short, long, value_name = "PATH")]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Tokenize a transcript and apply cleaning steps, one line per input line.
    Normalize {
        /// Input transcript.
        input: PathBuf,
        #[command(flatten)]
        steps: StepsArg,
        #[command(flatten)]
        output: OutputArg,
    },
    /// Word-align a hypothesis against a single reference.
    Align {
        /// Reference transcript.
        reference: PathBuf,
        /// Hypothesis transcript.
        hypothesis: PathBuf,
        #[command(flatten)]
        steps: StepsArg,
        /// Align line by line (files must have equal line counts) and report
        /// summed counts instead of a whole-file alignment.
        #[arg(long)]
        per_line: bool,
        #[command(flatten)]
        output: OutputArg,
    },
    /// Compile verbatim and nonverbatim references into a tagged FST.
    #[command(name = "build-fst")]
    BuildFst {
        /// Verbatim (V) reference transcript.
        verbatim: PathBuf,
        /// Nonverbatim (NV) reference transcript.
        nonverbatim: PathBuf,
        /// Union construction: span-level or word-level.
        #[arg(long, default_value = "span-level", value_parser = parse_mode)]
        mode: UnionMode,
        #[command(flatten)]
        steps: StepsArg,
        #[command(flatten)]
        output: OutputArg,
    },
    /// Score hypothesis transcripts against a multireference FST file.
    Score {
        /// FST file produced by build-fst.
        fst: PathBuf,
        /// One or more hypothesis transcripts.
        #[arg(required = true)]
        hypotheses: Vec<PathBuf>,
        #[command(flatten)]
        steps: StepsArg,
        /// Also run the exhaustive path-enumeration oracle and embed its
        /// result in the report.
        #[arg(long)]
        oracle: bool,
        /// Path bound for the oracle enumeration.
        #[arg(long, default_value_t = DEFAULT_PATH_LIMIT)]
        path_limit: usize,
        /// Directory for per-hypothesis reports (<stem>.json); required when
        /// scoring more than one hypothesis.
        #[arg(long, value_name = "DIR", conflicts_with = "output")]
        output_dir: Option<PathBuf>,
        #[command(flatten)]
        output: OutputArg,
    },
    /// Run the cumulative cleaning ladder against one reference and report
    /// WER/INS/DEL per condition.
    Ablate {
        /// Reference transcript.
        reference: PathBuf,
        /// Hypothesis transcript.
        hypothesis: PathBuf,
        /// Score line by line (files must have equal line counts) and sum
        /// counts per condition.
        #[arg(long)]
        per_line: bool,
        #[command(flatten)]
        output: OutputArg,
    },
}

fn parse_mode(s: &str) -> Result<UnionMode, String> {
    UnionMode::parse(s).ok_or_else(|| format!("expected span-level or word-level, got {s:?}"))
}

fn main() {
    if let Err(err) = run(Cli::parse()) {
        eprintln!("mrwer: {err:#}");
        std::process::exit(1);
    }
}

fn run(cli: Cli) -> Result<()> {
    let tables = load_tables()?;
    match cli.command {
        Command::Normalize {
            input,
            steps,
            output,
        } => cmd_normalize(&tables, &input, &steps.config()?, output.output.as_deref()),
        Command::Align {
            reference,
            hypothesis,
            steps,
            per_line,
            output,
        } => cmd_align(
            &tables,
            &reference,
            &hypothesis,
            &steps.config()?,
            per_line,
            output.output.as_deref(),
        ),
        Command::BuildFst {
            verbatim,
            nonverbatim,
            mode,
            steps,
            output,
        } => cmd_build_fst(
            &tables,
            &verbatim,
            &nonverbatim,
            mode,
            &steps.config()?,
            output.output.as_deref(),
        ),
        Command::Score {
            fst,
            hypotheses,
            steps,
            oracle,
            path_limit,
            output_dir,
            output,
        } => cmd_score(
            &tables,
            &fst,
            &hypotheses,
            &steps.config()?,
            oracle,
            path_limit,
            output_dir.as_deref(),
            output.output.as_deref(),
        ),
        Command::Ablate {
            reference,
            hypothesis,
            per_line,
            output,
        } => cmd_ablate(
            &tables,
            &reference,
            &hypothesis,
            per_line,
            output.output.as_deref(),
        ),
    }
}

fn load_tables() -> Result<NormTables> {
    match std::env::var_os(DATA_DIR_ENV) {
        Some(dir) => NormTables::from_dir(Path::new(&dir))
            .with_context(|| format!("loading rule tables from {DATA_DIR_ENV}")),
        None => Ok(NormTables::builtin().clone()),
    }
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

/// Whole-file token sequence: lines joined in order, then the pipeline.
fn read_tokens(tables: &NormTables, config: &NormConfig, path: &Path) -> Result<Vec<Token>> {
    Ok(apply_pipeline(tables, config, &read_text(path)?))
}

/// Writes output atomically: a temporary file in the destination directory
/// is persisted on success, so a failed run leaves nothing partial behind.
fn write_output(path: Option<&Path>, content: &str) -> Result<()> {
    match path {
        None => {
            print!("{content}");
            Ok(())
        }
        Some(path) => {
            let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
            let mut tmp = tempfile::NamedTempFile::new_in(dir.unwrap_or(Path::new(".")))
                .context("cannot create temporary output file")?;
            tmp.write_all(content.as_bytes())
                .context("cannot write output")?;
            tmp.persist(path)
                .with_context(|| format!("cannot write {}", path.display()))?;
            Ok(())
        }
    }
}

fn cmd_normalize(
    tables: &NormTables,
    input: &Path,
    config: &NormConfig,
    output: Option<&Path>,
) -> Result<()> {
    let text = read_text(input)?;
    let mut out = String::new();
    for line in text.lines() {
        let tokens = apply_pipeline(tables, config, line);
        let words: Vec<&str> = tokens.iter().map(Token::as_str).collect();
        out.push_str(&words.join(" "));
        out.push('\n');
    }
    write_output(output, &out)
}

fn paired_lines(
    tables: &NormTables,
    config: &NormConfig,
    reference: &Path,
    hypothesis: &Path,
) -> Result<Vec<(Vec<Token>, Vec<Token>)>> {
    let ref_text = read_text(reference)?;
    let hyp_text = read_text(hypothesis)?;
    let ref_lines: Vec<&str> = ref_text.lines().collect();
    let hyp_lines: Vec<&str> = hyp_text.lines().collect();
    if ref_lines.len() != hyp_lines.len() {
        bail!(
            "per-line mode requires equal line counts: {} has {}, {} has {}",
            reference.display(),
            ref_lines.len(),
            hypothesis.display(),
            hyp_lines.len()
        );
    }
    Ok(ref_lines
        .iter()
        .zip(hyp_lines)
        .map(|(r, h)| {
            (
                apply_pipeline(tables, config, r),
                apply_pipeline(tables, config, h),
            )
        })
        .collect())
}

fn cmd_align(
    tables: &NormTables,
    reference: &Path,
    hypothesis: &Path,
    config: &NormConfig,
    per_line: bool,
    output: Option<&Path>,
) -> Result<()> {
    let json = if per_line {
        let pairs = paired_lines(tables, config, reference, hypothesis)?;
        let per_line_counts: Vec<ErrorCounts> = pairs
            .iter()
            .map(|(r, h)| align(r, h).counts())
            .collect();
        let mut aggregate = ErrorCounts::default();
        for c in &per_line_counts {
            aggregate.add(c);
        }
        alignment_lines_json(&aggregate, &per_line_counts)
    } else {
        let r = read_tokens(tables, config, reference)?;
        let h = read_tokens(tables, config, hypothesis)?;
        alignment_json(&align(&r, &h))
    };
    write_output(output, &json)
}

fn cmd_build_fst(
    tables: &NormTables,
    verbatim: &Path,
    nonverbatim: &Path,
    mode: UnionMode,
    config: &NormConfig,
    output: Option<&Path>,
) -> Result<()> {
    let v = read_tokens(tables, config, verbatim)?;
    let nv = read_tokens(tables, config, nonverbatim)?;
    if v.is_empty() {
        bail!("empty reference: {}", verbatim.display());
    }
    if nv.is_empty() {
        bail!("empty reference: {}", nonverbatim.display());
    }
    let alignment = align(&v, &nv);
    let fst = build_fst(&alignment, mode).map_err(|e| anyhow!(e))?;
    eprintln!("forks: {}", fst.fork_count());
    eprintln!("paths: {}", fst.path_count());
    write_output(output, &fst.to_text())
}

fn load_fst(path: &Path) -> Result<MultiRefFst> {
    let fst = MultiRefFst::from_text(&read_text(path)?)
        .with_context(|| format!("cannot parse FST {}", path.display()))?;
    let report = fst.validate();
    if !report.is_valid() {
        bail!("invalid FST {}: {report}", path.display());
    }
    Ok(fst)
}

#[allow(clippy::too_many_arguments)]
fn cmd_score(
    tables: &NormTables,
    fst_path: &Path,
    hypotheses: &[PathBuf],
    config: &NormConfig,
    oracle: bool,
    path_limit: usize,
    output_dir: Option<&Path>,
    output: Option<&Path>,
) -> Result<()> {
    let fst = load_fst(fst_path)?;
    let hyp_tokens: Vec<Vec<Token>> = hypotheses
        .iter()
        .map(|p| read_tokens(tables, config, p))
        .collect::<Result<_>>()?;

    // All hypotheses are scored against the one immutable FST, concurrently
    // when the parallel feature is on; report writing stays serialized.
    let reports: Vec<ScoreReport> = score_batch(&fst, &hyp_tokens).map_err(|e| anyhow!(e))?;
    let oracles: Vec<Option<OracleResult>> = if oracle {
        hyp_tokens
            .iter()
            .map(|h| oracle_mwer(&fst, h, path_limit).map(Some).map_err(|e| anyhow!(e)))
            .collect::<Result<_>>()?
    } else {
        vec![None; reports.len()]
    };

    if hypotheses.len() == 1 {
        let json = score_report_json(&reports[0], oracles[0].as_ref());
        return write_output(output, &json);
    }

    let dir = output_dir
        .ok_or_else(|| anyhow!("--output-dir is required when scoring multiple hypotheses"))?;
    fs::create_dir_all(dir)
        .with_context(|| format!("cannot create output directory {}", dir.display()))?;
    for ((path, report), oracle_result) in hypotheses.iter().zip(&reports).zip(&oracles) {
        let stem = path
            .file_stem()
            .ok_or_else(|| anyhow!("hypothesis path has no file name: {}", path.display()))?;
        let mut target = dir.join(stem);
        target.set_extension("json");
        write_output(
            Some(&target),
            &score_report_json(report, oracle_result.as_ref()),
        )?;
    }
    Ok(())
}

/// The fixed cumulative ladder: raw, then each cleaning step added in the
/// documented order, applied to reference and hypothesis alike.
const LADDER: [(&str, &[NormStep]); 5] = [
    ("raw", &[]),
    ("+filler-words", &[NormStep::FillerWords]),
    (
        "+english-normalize",
        &[NormStep::FillerWords, NormStep::EnglishNormalize],
    ),
    (
        "+stutters-repetitions",
        &[
            NormStep::FillerWords,
            NormStep::EnglishNormalize,
            NormStep::StuttersRepetitions,
        ],
    ),
    (
        "+filler-phrases",
        &[
            NormStep::FillerWords,
            NormStep::EnglishNormalize,
            NormStep::StuttersRepetitions,
            NormStep::FillerPhrases,
        ],
    ),
];

fn cmd_ablate(
    tables: &NormTables,
    reference: &Path,
    hypothesis: &Path,
    per_line: bool,
    output: Option<&Path>,
) -> Result<()> {
    let raw = NormConfig::default();
    let line_pairs: Vec<(Vec<Token>, Vec<Token>)> = if per_line {
        paired_lines(tables, &raw, reference, hypothesis)?
    } else {
        vec![(
            read_tokens(tables, &raw, reference)?,
            read_tokens(tables, &raw, hypothesis)?,
        )]
    };

    let mut out = String::from("condition\twer\tins\tdel\n");
    for (name, steps) in LADDER {
        let mut counts = ErrorCounts::default();
        for (r, h) in &line_pairs {
            let mut r = r.clone();
            let mut h = h.clone();
            for step in steps {
                r = apply_step(tables, *step, &r);
                h = apply_step(tables, *step, &h);
            }
            counts.add(&score_single(&r, &h).counts.overall);
        }
        let n = counts.reference_words;
        let rate = |e: usize| {
            if n == 0 {
                None
            } else {
                Some(e as f64 / n as f64)
            }
        };
        out.push_str(&format!(
            "{name}\t{}\t{}\t{}\n",
            fmt_ratio(counts.wer()),
            fmt_ratio(rate(counts.insertions)),
            fmt_ratio(rate(counts.deletions))
        ));
    }
    write_output(output, &out)
}
