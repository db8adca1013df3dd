//! Acceptance gate. Prints one `[PASS]`/`[FAIL]` line per criterion and
//! fails if any criterion fails. Run with `--nocapture` to see the report.

mod common;

use std::collections::BTreeSet;
use std::io::Write;
use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use common::{fixture, oracle_occurrences, random_corpus, random_corpus_with, random_query, CorpusShape, FIGURE_QUERY};
use learncorp_core::concordance::{find_occurrences, run_query, run_query_with, EvalMode, QueryOptions};
use learncorp_core::corpus::Corpus;
use learncorp_core::exercise::{generate_items, AnswerMode, DistractorPolicy, ExerciseParams, GapFillItem, ItemSource};
use learncorp_core::index::build_index;
use learncorp_core::pattern::parse_query;
use learncorp_core::session::{start_session, Presented, SessionConfig};
use learncorp_core::stats::{build_profile, frequent_errors};
use rand::rngs::StdRng;
use rand::SeedableRng;

const DETERMINISM_ENV: &str = "LEARNCORP_ACCEPTANCE_EXERCISE_DUMP";

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn within(elapsed: Duration, limit: Duration, what: &str) -> Result<(), String> {
    check(elapsed < limit, format!("{what} took {elapsed:?}, limit {limit:?}"))
}

fn figure_reproduction() -> Outcome {
    let start = Instant::now();
    let index = build_index(Arc::new(fixture()));
    let page = run_query(&index, &parse_query(FIGURE_QUERY).map_err(|e| e.to_string())?, 0, 50).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let keywords: Vec<&str> = page.lines.iter().map(|l| l.keyword.as_str()).collect();
    let ids: Vec<&str> = page.lines.iter().map(|l| l.text_id.as_str()).collect();
    check(
        keywords
            == [
                "connais", "reçu", "traduis", "choisi", "choisi", "reussi", "effectué", "interviewé", "realisé", "redigé",
                "été", "tres",
            ],
        format!("keywords {keywords:?}"),
    )?;
    check(
        ids == ["2180", "2212", "2216", "2229", "2230", "2230", "2234", "2234", "2239", "2245", "2252", "2266"],
        format!("ids {ids:?}"),
    )?;
    let cells = [
        (
            0,
            "Les derniers mois , nous avons",
            "une période très dur ; beaucoup de mes sous-traitants ont fermé leurs portes et même notre firme a connu des problèmes à cause d' une réorganisation .",
        ),
        (1, "L' imprimeur a", "un autre encodage ."),
        (3, "L' enquêteur a", "un échantillon représentative , puis il a établi un questionnaire ."),
    ];
    for (row, left, right) in cells {
        let line = &page.lines[row];
        check(line.left_context == left && line.right_context == right, format!("row {} contexts differ", row + 1))?;
    }
    within(elapsed, Duration::from_secs(1), "fixture query")?;
    Ok(format!("12 rows in order, {elapsed:?}"))
}

fn oracle_equivalence_and_reconstruction() -> (Outcome, Outcome) {
    const TRIALS: u64 = 1000;
    let start = Instant::now();
    let (mut nonempty, mut lines_checked) = (0, 0usize);
    let mut equivalence = Ok(());
    let mut reconstruction = Ok(());
    for trial in 0..TRIALS {
        let index = build_index(Arc::new(random_corpus(trial)));
        let query = random_query(trial.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ 0xA5);
        let indexed = find_occurrences(&index, &query, EvalMode::Indexed);
        let scan = find_occurrences(&index, &query, EvalMode::Scan);
        let got: Vec<_> = indexed.iter().map(|o| (o.text_ordinal, o.sentence_index, o.keyword, o.start, o.end)).collect();
        if indexed != scan || got != oracle_occurrences(index.corpus(), &query) {
            equivalence = Err(format!("trial {trial} disagrees on query {query}"));
            break;
        }
        if !indexed.is_empty() {
            nonempty += 1;
        }
        let page = run_query(&index, &query, 0, usize::MAX).unwrap();
        for line in &page.lines {
            let sentence = &index.corpus().texts[line.text_ordinal as usize].sentences[line.sentence_index as usize];
            if line.rejoined() != sentence.text() {
                reconstruction = Err(format!("trial {trial}, row {} does not rejoin", line.row_number));
            }
            lines_checked += 1;
        }
    }
    let elapsed = start.elapsed();
    let equivalence = equivalence
        .and_then(|_| within(elapsed, Duration::from_secs(60), "randomized trials"))
        .map(|_| format!("{TRIALS} trials, {nonempty} with matches, {elapsed:?}"));
    let reconstruction = reconstruction.map(|_| format!("{lines_checked} lines rejoined"));
    (equivalence, reconstruction)
}

fn exercise_request() -> (Corpus, ExerciseParams) {
    let params = ExerciseParams {
        answer_mode: AnswerMode::Corrected,
        distractor_policy: DistractorPolicy::SameLemma,
        ..ExerciseParams::new(5, 20_240_917)
    };
    (random_corpus(77), params)
}

fn exercise_dump() -> String {
    let (corpus, params) = exercise_request();
    let index = build_index(Arc::new(corpus));
    let set = generate_items(&index, &random_query(5), &params).unwrap();
    serde_json::to_string(&set).unwrap()
}

fn dump_from_child() -> Result<String, String> {
    let exe = std::env::current_exe().map_err(|e| e.to_string())?;
    let out = Command::new(exe)
        .args(["--exact", "exercise_dump_helper", "--ignored", "--nocapture", "--test-threads=1"])
        .env(DETERMINISM_ENV, "1")
        .output()
        .map_err(|e| e.to_string())?;
    let stdout = String::from_utf8_lossy(&out.stdout);
    stdout
        .lines()
        .find_map(|l| l.split_once("EXERCISE-SET ").map(|(_, json)| json))
        .map(str::to_string)
        .ok_or_else(|| format!("child produced no dump: {stdout}"))
}

fn exercise_determinism() -> Outcome {
    let first = dump_from_child()?;
    let second = dump_from_child()?;
    check(first == second, "two processes serialized different sets")?;
    check(first == exercise_dump(), "child and parent serialized different sets")?;

    // Membership over many requests.
    let mut items = 0;
    for trial in 0..200u64 {
        let index = build_index(Arc::new(random_corpus(trial + 5000)));
        let query = random_query(trial);
        let all: BTreeSet<_> = find_occurrences(&index, &query, EvalMode::Scan)
            .into_iter()
            .map(|o| (index.corpus().texts[o.text_ordinal as usize].id.clone(), o.sentence_index, o.keyword))
            .collect();
        let set = generate_items(&index, &query, &ExerciseParams::new(6, trial)).unwrap();
        for item in &set.items {
            let key = (item.source.text_id.clone(), item.source.sentence_index, item.source.token_index);
            check(all.contains(&key), format!("trial {trial}: sampled source outside the match set"))?;
            items += 1;
        }
    }
    Ok(format!("{} bytes identical across processes, {items} sampled sources in their match sets", first.len()))
}

fn item(n: usize) -> GapFillItem {
    GapFillItem {
        stem: "____".into(),
        answer: format!("a{n}"),
        distractors: vec![],
        source: ItemSource {
            text_id: n.to_string(),
            sentence_index: 0,
            token_index: 0,
        },
        answer_mode: AnswerMode::AsWritten,
    }
}

fn session_rules() -> Outcome {
    let config = SessionConfig {
        shortcut_streak: 3,
        skip_count: 1,
        ..SessionConfig::branched()
    };
    let mut s = start_session((1..=10).map(item).collect(), vec![], config.clone()).map_err(|e| e.to_string())?;
    let mut order = Vec::new();
    while let Some(shown) = s.current() {
        if let Presented::Main { index } = shown.presented {
            order.push(index + 1);
        }
        s.submit_answer(&shown.item.answer).map_err(|e| e.to_string())?;
    }
    check(order == [1, 2, 3, 5, 6, 7, 9, 10], format!("order {order:?}"))?;

    let remedials = (1..=3).map(|n| Some(item(100 + n))).collect();
    let mut s = start_session((1..=3).map(item).collect(), remedials, config).map_err(|e| e.to_string())?;
    let fb = s.submit_answer("wrong").map_err(|e| e.to_string())?;
    check(
        fb.next.map(|n| n.presented) == Some(Presented::Remedial { index: 0 }),
        "failure did not lead to the remedial item",
    )?;
    let fb = s.submit_answer("a101").map_err(|e| e.to_string())?;
    check(
        fb.next.map(|n| n.presented) == Some(Presented::Main { index: 0 }),
        "remedial item did not return to the failed item",
    )?;

    let mut s = start_session((1..=18).map(item).collect(), vec![], SessionConfig::default()).map_err(|e| e.to_string())?;
    for _ in 0..2 {
        s.submit_answer("wrong").map_err(|e| e.to_string())?;
    }
    for n in 1..=18 {
        s.submit_answer(&format!("a{n}")).map_err(|e| e.to_string())?;
    }
    let r = s.report();
    check(
        r.total_responses == 20 && r.error_count == 2 && r.error_rate == 0.10 && !r.threshold_exceeded,
        format!("report {r:?}"),
    )?;
    Ok("short-cut order, remedial detour and 2/20 threshold".into())
}

fn stats_conservation() -> Outcome {
    for seed in 0..300u64 {
        let corpus = random_corpus(seed);
        for depth in 1..=4 {
            let profile = build_profile(&corpus, depth).map_err(|e| e.to_string())?;
            let sum: u64 = profile.counts.values().sum();
            check(sum == corpus.span_count() as u64, format!("seed {seed} depth {depth}: {sum} counted"))?;
            let mut recount = std::collections::BTreeMap::<String, u64>::new();
            for span in corpus.texts.iter().flat_map(|t| &t.sentences).flat_map(|s| &s.errors) {
                let cut: Vec<&str> = span.category.split('-').take(depth).collect();
                *recount.entry(cut.join("-")).or_default() += 1;
            }
            let mut expected: Vec<(String, u64)> = recount.into_iter().collect();
            expected.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
            let got: Vec<(String, u64)> = frequent_errors(&profile, None, None, 1)
                .into_iter()
                .map(|r| (r.category, r.count))
                .collect();
            check(got == expected, format!("seed {seed} depth {depth}: ranking differs"))?;
        }
    }
    Ok("300 corpora, depths 1-4".into())
}

fn million_token_corpus() -> Corpus {
    let shape = CorpusShape {
        max_texts: 200,
        max_sentences: 20,
        max_tokens: 40,
    };
    let mut rng = StdRng::seed_from_u64(1_000_000);
    let mut texts = Vec::new();
    let mut tokens = 0;
    while tokens < 1_000_000 {
        for mut text in random_corpus_with(&mut rng, &shape).texts {
            text.id = (texts.len() + 1).to_string();
            tokens += text.token_count();
            texts.push(text);
        }
    }
    Corpus::new("synthetic", texts)
}

fn performance() -> Outcome {
    let corpus = Arc::new(million_token_corpus());
    let tokens = corpus.token_count();
    let start = Instant::now();
    let index = build_index(corpus);
    let build = start.elapsed();
    within(build, Duration::from_secs(30), "indexing")?;

    let query = parse_query(r#"[lemma="avoir"] ![pos="verbe" & error="yes"]"#).map_err(|e| e.to_string())?;
    let start = Instant::now();
    let page = run_query_with(&index, &query, 0, 50, QueryOptions::default()).map_err(|e| e.to_string())?;
    let first_page = start.elapsed();
    check(!page.lines.is_empty(), "the timing query matched nothing")?;
    within(first_page, Duration::from_millis(200), "first page")?;
    Ok(format!(
        "{tokens} tokens indexed in {build:?}; first page of {} matches in {first_page:?}",
        page.total_matches
    ))
}

#[test]
#[ignore = "helper spawned by the acceptance suite"]
fn exercise_dump_helper() {
    if std::env::var_os(DETERMINISM_ENV).is_some() {
        println!("EXERCISE-SET {}", exercise_dump());
    }
}

/// Writes past libtest's output capture so verdicts show even when passing.
fn emit(line: String) {
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{line}");
    let _ = out.flush();
}

#[test]
fn acceptance() {
    let mut failures = 0;
    let mut report = |name: &str, outcome: Outcome| match outcome {
        Ok(detail) => emit(format!("[PASS] {name}: {detail}")),
        Err(why) => {
            failures += 1;
            emit(format!("[FAIL] {name}: {why}"));
        }
    };

    emit(String::new());
    report("figure query reproduction", figure_reproduction());
    let (equivalence, reconstruction) = oracle_equivalence_and_reconstruction();
    report("indexed = scan = brute force", equivalence);
    report("concordance reconstruction", reconstruction);
    report("exercise determinism", exercise_determinism());
    report("session rules", session_rules());
    report("stats conservation", stats_conservation());
    report("desk-scale performance", performance());
    emit("[N/A]  learning outcomes and pedagogical effectiveness: not measurable at desk scale".into());

    assert_eq!(failures, 0, "{failures} acceptance criteria failed");
}
