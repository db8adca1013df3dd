//! `learncorp`: validate, index, query, generate exercises, count errors,
//! and run the HTTP service.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{anyhow, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use learncorp_core::concordance::{render_text_table, ConcordanceLine};
use learncorp_core::corpus::{parse_corpus, parse_corpus_unchecked, validate_corpus, Severity};
use learncorp_core::exercise::{AnswerMode, DistractorPolicy};
use learncorp_core::index::{build_index, CorpusIndex};
use learncorp_core::stats::build_profile;
use learncorp_service::api::{
    run_exercise_request, run_query_request, run_stats_request, ExerciseRequest, QueryRequest, QuerySpec,
    StatsParams, DEFAULT_LIMIT,
};
use learncorp_service::{load_index, ServiceConfig, DEFAULT_MAX_UPLOAD};

const EXIT_INVALID: u8 = 1;
const EXIT_RUNTIME: u8 = 3;

#[derive(Parser)]
#[command(name = "learncorp", version, about = "Search and drill an error-annotated learner corpus")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum StatsFormat {
    Text,
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum AnswerArg {
    AsWritten,
    Corrected,
}

#[derive(Clone, Copy, ValueEnum)]
enum DistractorArg {
    None,
    SameLemma,
    AttestedErrors,
}

#[derive(Subcommand)]
enum Command {
    /// Check a corpus file; exits 1 when any error is found.
    Validate { corpus: PathBuf },
    /// Build the index and write it as a snapshot.
    Index {
        corpus: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Print the concordance for a query.
    Query {
        /// Corpus XML or index snapshot.
        corpus: PathBuf,
        #[arg(short, long)]
        query: String,
        #[arg(long, default_value_t = 0)]
        offset: usize,
        #[arg(long, default_value_t = DEFAULT_LIMIT)]
        limit: usize,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Generate a gap-fill exercise set as JSON.
    Gen {
        corpus: PathBuf,
        #[arg(short, long)]
        query: String,
        #[arg(long, default_value_t = 10)]
        count: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long, value_enum, default_value = "as-written")]
        answer_mode: AnswerArg,
        #[arg(long, value_enum, default_value = "none")]
        distractors: DistractorArg,
        /// Distractors per item.
        #[arg(long, default_value_t = 3)]
        k: usize,
    },
    /// Rank error categories by frequency.
    Stats {
        corpus: PathBuf,
        #[arg(long, default_value_t = 1)]
        depth: usize,
        #[arg(long)]
        l1: Option<String>,
        #[arg(long)]
        level: Option<String>,
        #[arg(long, default_value_t = 1)]
        min: u64,
        /// `csv` prints the full category by l1 by level profile.
        #[arg(long, value_enum, default_value = "text")]
        format: StatsFormat,
    },
    /// Run the HTTP service until interrupted.
    Serve {
        #[arg(long, env = "LEARNCORP_LISTEN", default_value = "127.0.0.1:8080")]
        listen: SocketAddr,
        /// Directory of `*.xml` corpora and `*.lxix` snapshots to load.
        #[arg(long, env = "LEARNCORP_DATA")]
        data: Option<PathBuf>,
        /// File that keeps sessions across restarts.
        #[arg(long, env = "LEARNCORP_SESSIONS")]
        sessions: Option<PathBuf>,
        #[arg(long, env = "LEARNCORP_MAX_UPLOAD", default_value_t = DEFAULT_MAX_UPLOAD)]
        max_upload: usize,
    },
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_writer(std::io::stderr)
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()),
        )
        .init();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}

fn open(path: &Path) -> Result<CorpusIndex> {
    load_index(path).with_context(|| format!("cannot load {}", path.display()))
}

fn print_json<T: serde::Serialize + ?Sized>(value: &T) -> Result<()> {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn run(command: Command) -> Result<ExitCode> {
    match command {
        Command::Validate { corpus } => {
            let bytes = std::fs::read(&corpus).with_context(|| format!("cannot read {}", corpus.display()))?;
            let parsed = match parse_corpus_unchecked(&bytes) {
                Ok(c) => c,
                Err(e) => {
                    println!("error: {e}");
                    return Ok(ExitCode::from(EXIT_INVALID));
                }
            };
            let findings = validate_corpus(&parsed);
            for f in &findings {
                println!("{f}");
            }
            if findings.iter().any(|f| f.severity == Severity::Error) {
                return Ok(ExitCode::from(EXIT_INVALID));
            }
            eprintln!(
                "{}: {} texts, {} tokens, {} error spans",
                corpus.display(),
                parsed.texts.len(),
                parsed.token_count(),
                parsed.span_count()
            );
        }
        Command::Index { corpus, output } => {
            let bytes = std::fs::read(&corpus).with_context(|| format!("cannot read {}", corpus.display()))?;
            let index = build_index(Arc::new(parse_corpus(&bytes)?));
            let file = File::create(&output).with_context(|| format!("cannot create {}", output.display()))?;
            let mut out = BufWriter::new(file);
            index.write_snapshot(&mut out)?;
            out.flush()?;
        }
        Command::Query {
            corpus,
            query,
            offset,
            limit,
            format,
        } => {
            let index = open(&corpus)?;
            let request = QueryRequest {
                query: QuerySpec::from_dsl(query),
                offset: Some(offset),
                limit: Some(limit),
            };
            let response = run_query_request(&index, &request).map_err(|e| anyhow!("{e}"))?;
            match format {
                Format::Json => print_json(&response)?,
                Format::Text => {
                    let lines: Vec<ConcordanceLine> = response
                        .lines
                        .iter()
                        .map(|l| ConcordanceLine {
                            row_number: l.no,
                            text_id: l.text_id.clone(),
                            text_ordinal: 0,
                            left_context: l.left.clone(),
                            keyword: l.keyword.clone(),
                            right_context: l.right.clone(),
                            sentence_index: l.sentence_index,
                            token_index: l.token_index,
                            match_start: 0,
                            match_end: 0,
                        })
                        .collect();
                    print!("{}", render_text_table(&lines));
                    eprintln!("{} of {} matches shown", lines.len(), response.total);
                }
            }
        }
        Command::Gen {
            corpus,
            query,
            count,
            seed,
            answer_mode,
            distractors,
            k,
        } => {
            let index = open(&corpus)?;
            let request = ExerciseRequest {
                query: QuerySpec::from_dsl(query),
                count,
                seed,
                answer_mode: match answer_mode {
                    AnswerArg::AsWritten => AnswerMode::AsWritten,
                    AnswerArg::Corrected => AnswerMode::Corrected,
                },
                distractor_policy: match distractors {
                    DistractorArg::None => DistractorPolicy::None,
                    DistractorArg::SameLemma => DistractorPolicy::SameLemma,
                    DistractorArg::AttestedErrors => DistractorPolicy::AttestedErrors,
                },
                k,
            };
            let set = run_exercise_request(&index, &request).map_err(|e| anyhow!("{e}"))?;
            print_json(&set)?;
        }
        Command::Stats {
            corpus,
            depth,
            l1,
            level,
            min,
            format,
        } => {
            let index = open(&corpus)?;
            match format {
                StatsFormat::Csv => {
                    let profile = build_profile(index.corpus(), depth)?;
                    profile.write_csv(std::io::stdout().lock())?;
                }
                StatsFormat::Json | StatsFormat::Text => {
                    let params = StatsParams {
                        depth: Some(depth),
                        l1,
                        level,
                        min: Some(min),
                    };
                    let stats = run_stats_request(&index, &params).map_err(|e| anyhow!("{e}"))?;
                    if let StatsFormat::Json = format {
                        print_json(&stats)?;
                    } else {
                        let width = stats.rows.iter().map(|r| r.category.chars().count()).max().unwrap_or(0).max(8);
                        println!("{:<width$}  {:>7}  {:>8}", "category", "count", "share");
                        for r in &stats.rows {
                            println!(
                                "{:<width$}  {:>7}  {:>7.2}%",
                                r.category,
                                r.count,
                                r.relative_frequency * 100.0
                            );
                        }
                    }
                }
            }
        }
        Command::Serve {
            listen,
            data,
            sessions,
            max_upload,
        } => {
            let config = ServiceConfig {
                listen,
                data_dir: data,
                session_store: sessions,
                max_upload_bytes: max_upload,
            };
            tokio::runtime::Runtime::new()?.block_on(learncorp_service::serve(config))?;
        }
    }
    Ok(ExitCode::SUCCESS)
}
