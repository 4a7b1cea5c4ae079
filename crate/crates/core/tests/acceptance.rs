//! End-to-end acceptance checks. Runs without the libtest harness so that
//! every criterion prints exactly one PASS/FAIL line, in order, even when
//! output capture is on.

use std::collections::BTreeMap;
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use judgeforge::diffeval::{bucket_distribution, bucket_of, bucket_of_fraction, diff_problem, rows_from_csv, Bucket, DiffRow};
use judgeforge::exchange::mock::{MockServer, MockState};
use judgeforge::exchange::{
    export_archive, import_archive, ArchiveFormat, RemoteClient, RemoteEndpoint, RemoteProblem, RemoteSubmission, Secret, SubmissionFilter,
};
use judgeforge::fixtures::{verify, FixtureManifest, MANIFEST_FILE};
use judgeforge::forge::Forge;
use judgeforge::llm::{CostLedger, LlmClient, LlmError, Mode, PriceTable, Reply, TranscriptCache, Transport};
use judgeforge::model::{Limits, SuiteResult, TestCase, TestSuite, Verdict};
use judgeforge::pipeline::{forge_build, forge_prompt};
use judgeforge::prompt::{render_prompt, PromptContext, PromptTemplate, PromptVersion};
use judgeforge::sandbox::{ExecSpec, Sandbox};
use judgeforge::toolchain::ToolchainSpec;
use judgeforge::workspace::Workspace;
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};

type Check = Result<String, String>;

fn crate_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

fn fixtures() -> PathBuf {
    crate_dir().join("fixtures")
}

fn workspace(work: &Path) -> Workspace {
    let mut ws = Workspace::load(&crate_dir().join("../../judgeforge.json")).expect("workspace config");
    ws.config.work_dir = work.to_path_buf();
    ws
}

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn within(start: Instant, budget: Duration) -> Result<(), String> {
    let took = start.elapsed();
    ensure!(took < budget, "took {took:?}, budget {budget:?}");
    Ok(())
}

// ---------------------------------------------------------------------------
// 1. Per-problem table identities

fn table_identities() -> Check {
    let start = Instant::now();
    let text = std::fs::read_to_string(fixtures().join("table1.csv")).map_err(|e| e.to_string())?;

    // Independent reading of the CSV: plain split, no library parser.
    let mut raw: Vec<(String, [u64; 5])> = Vec::new();
    for line in text.lines().skip(1).filter(|l| !l.trim().is_empty()) {
        let f: Vec<&str> = line.split(',').collect();
        ensure!(f.len() == 6, "bad line `{line}`");
        let mut n = [0u64; 5];
        for (slot, s) in n.iter_mut().zip(&f[1..]) {
            *slot = s.trim().parse().map_err(|_| format!("bad number in `{line}`"))?;
        }
        raw.push((f[0].to_string(), n));
    }
    ensure!(raw.len() == 25, "expected 25 rows, found {}", raw.len());
    for (id, [before, after, both, only_o, only_a]) in &raw {
        ensure!(*before == both + only_o, "{id}: before {before} != {both} + {only_o}");
        ensure!(*after == both + only_a, "{id}: after {after} != {both} + {only_a}");
    }

    let rows = rows_from_csv(&text).map_err(|e| e.to_string())?;
    ensure!(rows.len() == raw.len(), "library parsed {} rows", rows.len());
    for (row, (id, n)) in rows.iter().zip(&raw) {
        let got = [row.before, row.after, row.both, row.only_original, row.only_ai];
        ensure!(&row.problem_id == id && &got == n, "library row {row:?} differs from {id} {n:?}");
    }

    // Rows quoted in the published table.
    let expect = |id: &str, n: [u64; 5]| -> Result<(), String> {
        ensure!(raw.iter().any(|(i, r)| i == id && *r == n), "row {id} is not {n:?}");
        Ok(())
    };
    expect("walrus", [114, 113, 109, 5, 4])?;
    expect("sandwich", [44, 27, 19, 25, 8])?;
    expect("homework", [0, 7, 0, 0, 7])?;
    expect("pali2", [51, 3, 3, 48, 0])?;

    // A row breaking the identity is rejected.
    ensure!(DiffRow::new("broken", 10, 10, 5, 4, 5).is_err(), "inconsistent row accepted");
    within(start, Duration::from_secs(1))?;
    Ok(format!("{} rows, both identities hold on every row", raw.len()))
}

// ---------------------------------------------------------------------------
// 2. Bucket distributions

/// Every one of `n` solutions passes the original suite; the first `failing`
/// of them fail the generated one.
fn planted_problem(n: usize, failing: usize) -> (Vec<SuiteResult>, Vec<SuiteResult>) {
    let original = (0..n).map(|i| SuiteResult::from_verdicts(format!("s{i}"), "original", &[Verdict::AC; 3])).collect();
    let ai = (0..n)
        .map(|i| {
            let v = if i < failing { [Verdict::AC, Verdict::WA, Verdict::AC] } else { [Verdict::AC; 3] };
            SuiteResult::from_verdicts(format!("s{i}"), "ai", &v)
        })
        .collect();
    (original, ai)
}

/// Failure counts out of 20 for each bucket, cycled through so that the
/// corpus exercises several fractions per bucket.
const PLANT: [&[usize]; 5] = [&[0], &[1, 2], &[3, 4, 5], &[6, 8, 10], &[11, 15, 20]];

fn corpus_distribution(counts: [u64; 5]) -> Result<[u64; 5], String> {
    let mut rows = Vec::new();
    for (b, &k) in counts.iter().enumerate() {
        for j in 0..k as usize {
            let failing = PLANT[b][j % PLANT[b].len()];
            let id = format!("b{b}-{j}");
            let (o, a) = planted_problem(20, failing);
            let row = diff_problem(&id, &o, &a).map_err(|e| e.to_string())?;
            // Oracle: percentage thresholds on a 1/1000 grid, exact for 20 solutions.
            let permille = 1000 * row.only_original / row.before;
            let want = match permille {
                0 => 0,
                1..=100 => 1,
                101..=250 => 2,
                251..=500 => 3,
                _ => 4,
            };
            ensure!(row.bucket() == Some(Bucket::ALL[want]), "{id}: {row:?} not in bucket {want}");
            rows.push(row);
        }
    }
    Ok(bucket_distribution(&rows).as_array())
}

fn bucket_distributions() -> Check {
    let start = Instant::now();
    let first_set = [15, 14, 11, 4, 2];
    let second_set = [6, 3, 4, 2, 3];
    ensure!(first_set.iter().sum::<u64>() == 46 && second_set.iter().sum::<u64>() == 18, "corpus sizes");
    for (name, want) in [("first contest set", first_set), ("second contest set", second_set)] {
        let got = corpus_distribution(want)?;
        ensure!(got == want, "{name}: got {got:?}, want {want:?}");
    }

    let eps = 1e-9;
    let cases = [
        (0.0, Bucket::B0),
        (0.10, Bucket::B1),
        (0.10 + eps, Bucket::B2),
        (0.25, Bucket::B2),
        (0.25 + eps, Bucket::B3),
        (0.50, Bucket::B3),
        (0.50 + eps, Bucket::B4),
    ];
    for (f, want) in cases {
        ensure!(bucket_of_fraction(f) == want, "f = {f}: got {:?}, want {want:?}", bucket_of_fraction(f));
    }
    let exact =
        [(0, Bucket::B0), (100, Bucket::B1), (101, Bucket::B2), (250, Bucket::B2), (251, Bucket::B3), (500, Bucket::B3), (501, Bucket::B4)];
    for (o, want) in exact {
        ensure!(bucket_of(1000, o) == Some(want), "{o}/1000 mis-bucketed");
    }
    ensure!(bucket_of(0, 0).is_none(), "empty row got a bucket");
    within(start, Duration::from_secs(1))?;
    Ok("46 -> 15/14/11/4/2, 18 -> 6/3/4/2/3, 7 boundaries".into())
}

// ---------------------------------------------------------------------------
// 3. Forge from the recorded transcript

fn forge_from_transcript() -> Check {
    let start = Instant::now();
    let work = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut ws = workspace(work.path());

    // Any LLM traffic would land on this listener.
    let listener = TcpListener::bind("127.0.0.1:0").map_err(|e| e.to_string())?;
    listener.set_nonblocking(true).map_err(|e| e.to_string())?;
    ws.config.llm.base_url = format!("http://{}/v1", listener.local_addr().unwrap());

    let run = forge_prompt(&ws, "aplusb", Mode::Replay).map_err(|e| format!("forge prompt: {e}"))?;
    ensure!(run.bundle.param_rows.len() == 25, "{} param rows", run.bundle.param_rows.len());
    let forge = ws.forge(ws.sandbox().map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    let (report, dir) = forge_build(&ws, &forge, "aplusb").map_err(|e| format!("forge build: {e}"))?;
    let suite = report.suite.as_ref().ok_or("no suite")?;

    let names: Vec<&str> = suite.cases.iter().map(|c| c.input_name.as_str()).collect();
    let want: Vec<String> = (1..=25).map(|i| format!("test{i:02}.in")).collect();
    ensure!(names == want, "case names {names:?}");
    ensure!(report.determinism_checked, "determinism not checked");
    ensure!(report.per_case.iter().all(|c| c.validator_pass), "a case was rejected by the validator");
    ensure!(suite.is_complete(), "missing expected outputs");
    for name in &want {
        ensure!(dir.join(name).is_file(), "{name} not written");
    }
    ensure!(listener.accept().is_err_and(|e| e.kind() == std::io::ErrorKind::WouldBlock), "a network connection was made");
    within(start, Duration::from_secs(120))?;
    Ok(format!("25 validated cases, determinism checked, no connections, {:.1?}", start.elapsed()))
}

// ---------------------------------------------------------------------------
// 4. Planted bugs on the fixture corpus

fn planted_bugs() -> Check {
    let start = Instant::now();
    let work = tempfile::tempdir().map_err(|e| e.to_string())?;
    let ws = workspace(work.path());
    let manifest = FixtureManifest::load(&fixtures().join(MANIFEST_FILE)).map_err(|e| e.to_string())?;
    let report = verify(&ws, &manifest, None).map_err(|e| e.to_string())?;
    ensure!(report.violations.is_empty(), "violations: {:?}", report.violations);

    let first = |problem: &str, label: &str, sub: &str| -> Option<(usize, Verdict)> {
        let p = report.problems.iter().find(|p| p.id == problem)?;
        let results = if label == "ai" { &p.ai } else { &p.original };
        let r = results.iter().find(|r| r.submission_id == sub)?;
        Some(r.first_failure().map_or((0, Verdict::AC), |t| (t.index, t.verdict)))
    };
    let expect = [
        ("aplusb", "correct", Verdict::AC),
        ("aplusb", "off_by_one", Verdict::WA),
        ("aplusb", "over_allocator", Verdict::MLE),
        ("aplusb", "crasher", Verdict::RE),
        ("palindrome", "quadratic", Verdict::TLE),
        ("cartele", "open_interval", Verdict::WA),
    ];
    for (problem, sub, want) in expect {
        let got = first(problem, "ai", sub).ok_or(format!("{problem}/{sub} not judged"))?;
        ensure!(got.1 == want, "{problem}/{sub}: got {:?}, want {want}", got.1);
    }

    // The quadratic solution times out on the maximal all-erased test.
    let pal = report.problems.iter().find(|p| p.id == "palindrome").ok_or("palindrome missing")?;
    let suite = pal.forge.suite.as_ref().ok_or("no palindrome suite")?;
    let max_test = suite
        .cases
        .iter()
        .find(|c| {
            let text = String::from_utf8_lossy(&c.input);
            let mut tokens = text.split_whitespace();
            tokens.next() == Some("200000") && tokens.clone().count() == 200000 && tokens.all(|t| t == "-1")
        })
        .ok_or("no maximal all -1 test in the generated suite")?;
    let quadratic = pal.ai.iter().find(|r| r.submission_id == "quadratic").ok_or("quadratic not judged")?;
    let v = quadratic.per_test.iter().find(|t| t.index == max_test.index).map(|t| t.verdict);
    ensure!(v == Some(Verdict::TLE), "quadratic on {}: {v:?}", max_test.input_name);

    // The published Cartele log, and the solution that mishandles it.
    let cartele = report.problems.iter().find(|p| p.id == "cartele").ok_or("cartele missing")?;
    let suite = cartele.forge.suite.as_ref().ok_or("no cartele suite")?;
    let log = suite.cases.iter().find(|c| c.input.starts_with(b"3 8\nb i 0 10 28\n")).ok_or("published log not generated")?;
    let want = longest_odd_boys(&String::from_utf8_lossy(&log.input)).to_string();
    ensure!(want == "23", "oracle gives {want}");
    let expected = String::from_utf8_lossy(log.expected.as_deref().unwrap_or_default()).trim().to_string();
    ensure!(expected == want, "expected output {expected}, oracle {want}");
    let open = cartele.ai.iter().find(|r| r.submission_id == "open_interval").ok_or("open_interval not judged")?;
    let v = open.per_test.iter().find(|t| t.index == log.index).map(|t| t.verdict);
    ensure!(v == Some(Verdict::WA), "open_interval on {}: {v:?}", log.input_name);

    let h = &report.histogram;
    let counts: Vec<u64> = [Verdict::WA, Verdict::TLE, Verdict::MLE, Verdict::RE].iter().map(|v| h.get(*v)).collect();
    ensure!(counts == [3, 2, 1, 1], "histogram {h:?}");
    ensure!(*h == manifest.expected_histogram, "histogram differs from manifest");
    within(start, Duration::from_secs(180))?;
    Ok(format!("all annotations hold, newly failed WA 3 TLE 2 MLE 1 RE 1, {:.1?}", start.elapsed()))
}

/// Longest stretch with an odd number of boys inside, for a small log with
/// no boys present at the start. Same-second entries apply together.
fn longest_odd_boys(input: &str) -> i64 {
    let mut lines = input.lines();
    lines.next();
    let mut boys = 0i64;
    let (mut best, mut since) = (0, None);
    let mut last = 0;
    let mut entries: Vec<(i64, i64)> = Vec::new();
    for line in lines {
        let f: Vec<&str> = line.split_whitespace().collect();
        let t = f[2].parse::<i64>().unwrap() * 3600 + f[3].parse::<i64>().unwrap() * 60 + f[4].parse::<i64>().unwrap();
        let delta = match (f[0], f[1]) {
            ("b", "i") => 1,
            ("b", "e") => -1,
            _ => 0,
        };
        entries.push((t, delta));
    }
    let mut i = 0;
    while i < entries.len() {
        let t = entries[i].0;
        while i < entries.len() && entries[i].0 == t {
            boys += entries[i].1;
            i += 1;
        }
        last = t;
        match (boys % 2 != 0, since) {
            (true, None) => since = Some(t),
            (false, Some(s)) => {
                best = best.max(t - s);
                since = None;
            }
            _ => {}
        }
    }
    if let Some(s) = since {
        best = best.max(last - s);
    }
    best
}

// ---------------------------------------------------------------------------
// 5. Differential semantics on planted patterns

fn differential_semantics() -> Check {
    let pass = [Verdict::AC; 4];
    let fail = [Verdict::AC, Verdict::AC, Verdict::TLE, Verdict::AC];

    // Nothing passes the original suite; seven pass the generated one.
    let original: Vec<_> = (0..9).map(|i| SuiteResult::from_verdicts(format!("h{i}"), "original", &fail)).collect();
    let ai: Vec<_> = (0..9).map(|i| SuiteResult::from_verdicts(format!("h{i}"), "ai", if i < 7 { &pass } else { &fail })).collect();
    let row = diff_problem("homework", &original, &ai).map_err(|e| e.to_string())?;
    let (before, after, both) = (0, 7, 0);
    ensure!(
        [row.before, row.after, row.both, row.only_original, row.only_ai] == [before, after, both, before - both, after - both],
        "homework-shaped row {row:?}"
    );

    // 51 pass the original suite, only 3 of them the generated one; two
    // more solutions fail both.
    let original: Vec<_> =
        (0..53).map(|i| SuiteResult::from_verdicts(format!("p{i}"), "original", if i < 51 { &pass } else { &fail })).collect();
    let ai: Vec<_> = (0..53).map(|i| SuiteResult::from_verdicts(format!("p{i}"), "ai", if i < 3 { &pass } else { &fail })).collect();
    let row = diff_problem("pali2", &original, &ai).map_err(|e| e.to_string())?;
    ensure!([row.before, row.after, row.both, row.only_original, row.only_ai] == [51, 3, 3, 48, 0], "pali2-shaped row {row:?}");

    // Compile failures count as failing, never as passing.
    let mut original = vec![SuiteResult::from_verdicts("c", "original", &pass)];
    original.push(SuiteResult::compile_failure("d", "original"));
    let ai = vec![SuiteResult::compile_failure("c", "ai"), SuiteResult::compile_failure("d", "ai")];
    let row = diff_problem("cf", &original, &ai).map_err(|e| e.to_string())?;
    ensure!([row.before, row.after, row.only_original] == [1, 0, 1], "compile failures {row:?}");
    Ok("0/7/0/0/7 and 51/3/3/48/0 reproduced".into())
}

// ---------------------------------------------------------------------------
// 6. Sandbox guarantees

fn sandbox_guarantees() -> Check {
    let start = Instant::now();
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let sandbox = Sandbox::new(1).map_err(|e| e.to_string())?;
    let bash = |script: &str, limits: &Limits| ExecSpec::new(["/bin/bash", "-c", script], dir.path(), *limits);

    let limits = Limits::new(400, 64, 4096).unwrap();
    for (what, script) in [("busy loop", "while :; do :; done"), ("sleeper", "sleep 30")] {
        let spec = bash(script, &limits);
        let t = Instant::now();
        let out = sandbox.run(&spec).map_err(|e| e.to_string())?;
        let took = t.elapsed();
        out.cleanup();
        ensure!(out.flags.time_exceeded, "{what} not flagged: {out:?}");
        ensure!(took <= spec.wall_limit() + Duration::from_millis(500), "{what} killed after {took:?}");
    }

    let spec = bash("yes judgeforge", &limits);
    let out = sandbox.run(&spec).map_err(|e| e.to_string())?;
    let stdout = out.read_stdout().map_err(|e| e.to_string())?;
    out.cleanup();
    ensure!(out.flags.output_truncated && stdout.len() == 4096, "truncation: {} bytes, {:?}", stdout.len(), out.flags);
    ensure!(stdout.starts_with(b"judgeforge\njudgeforge\n"), "truncated output is not a prefix");

    let script = "for i in $(seq 1 2000); do echo \"$i $((i * i % 9973))\"; done";
    let mut seen: Vec<Vec<u8>> = Vec::new();
    for _ in 0..5 {
        let out = sandbox.run(&bash(script, &Limits::new(2000, 64, 1 << 20).unwrap())).map_err(|e| e.to_string())?;
        ensure!(out.is_clean(), "deterministic run failed: {out:?}");
        seen.push(out.read_stdout().map_err(|e| e.to_string())?);
        out.cleanup();
    }
    ensure!(seen.windows(2).all(|w| w[0] == w[1]) && !seen[0].is_empty(), "runs differ");
    within(start, Duration::from_secs(30))?;
    Ok(format!("limits enforced, 5 identical runs, {:.1?}", start.elapsed()))
}

// ---------------------------------------------------------------------------
// 7. Round-trip and determinism properties

fn suite_strategy() -> impl Strategy<Value = TestSuite> {
    prop::collection::vec((prop::collection::vec(any::<u8>(), 0..64), prop::collection::vec(any::<u8>(), 0..32)), 1..30).prop_map(|cases| {
        let cases = cases.into_iter().enumerate().map(|(i, (input, out))| TestCase::new(i + 1, input, Some(out))).collect();
        TestSuite::new("ai", cases).expect("valid suite")
    })
}

struct Canned(String);

impl Transport for Canned {
    fn chat(&self, _model_id: &str, _prompt: &str) -> Result<Reply, LlmError> {
        Ok(Reply { text: self.0.clone(), usage: None })
    }
}

fn runner() -> TestRunner {
    TestRunner::new(Config { cases: 100, failure_persistence: None, ..Config::default() })
}

fn properties() -> Check {
    let start = Instant::now();
    let scratch = tempfile::tempdir().map_err(|e| e.to_string())?;

    runner()
        .run(&suite_strategy(), |suite| {
            let dir = tempfile::tempdir().unwrap();
            for (format, dest) in [(ArchiveFormat::FlatZip, dir.path().join("a.zip")), (ArchiveFormat::CmsDir, dir.path().join("cms"))] {
                let first = export_archive(&suite, format, &dest).unwrap();
                let back = import_archive(&dest, Some(format), "ai").unwrap();
                prop_assert_eq!(&back, &suite);
                let again = dir.path().join(format!("again-{format:?}"));
                prop_assert_eq!(export_archive(&back, format, &again).unwrap(), first);
                if format == ArchiveFormat::FlatZip {
                    prop_assert_eq!(std::fs::read(&dest).unwrap(), std::fs::read(&again).unwrap());
                }
            }
            Ok(())
        })
        .map_err(|e| format!("archive round trip: {e}"))?;

    runner()
        .run(&("[ -~\n]{1,400}", 1usize..60), |(statement, count)| {
            let render = |v: PromptVersion| {
                let mut ctx = PromptContext::new(statement.clone()).with_exemplars();
                ctx.requested_case_count = count;
                render_prompt(&PromptTemplate::builtin(v), &ctx)
            };
            for v in [PromptVersion::V1, PromptVersion::V2] {
                let a = render(v).unwrap();
                prop_assert_eq!(&a, &render(v).unwrap());
                prop_assert!(a.contains(statement.trim()));
            }
            Ok(())
        })
        .map_err(|e| format!("prompt determinism: {e}"))?;

    runner()
        .run(&("[a-z]{1,12}", "[ -~\n]{1,300}", "[ -~\n]{0,600}"), |(model, prompt, answer)| {
            let dir = tempfile::tempdir().unwrap();
            let recorder = LlmClient::new(TranscriptCache::new(dir.path()), Some(Box::new(Canned(answer.clone()))));
            let recorded = recorder.complete(&model, &prompt, Mode::Record).unwrap();
            let file = recorder.cache().path_for(&recorded.key());
            let bytes = std::fs::read(&file).unwrap();
            let replayer = LlmClient::offline(TranscriptCache::new(dir.path()));
            for _ in 0..2 {
                let replayed = replayer.complete(&model, &prompt, Mode::Replay).unwrap();
                prop_assert_eq!(replayed.response.as_bytes(), answer.as_bytes());
                prop_assert_eq!(&replayed, &recorded);
            }
            prop_assert_eq!(std::fs::read(&file).unwrap(), bytes);
            Ok(())
        })
        .map_err(|e| format!("replay identity: {e}"))?;

    let sandbox = Arc::new(Sandbox::new(1).map_err(|e| e.to_string())?);
    let forge = Forge::new(sandbox, ToolchainSpec::cpp17(), scratch.path()).map_err(|e| e.to_string())?;
    let gen_src = std::fs::read_to_string(fixtures().join("palindrome/bundle/gen.cpp")).map_err(|e| e.to_string())?;
    let generator = forge.compile(&gen_src).map_err(|e| e.to_string())?;
    let limits = Limits::new(2000, 256, 1 << 24).unwrap();
    runner()
        .run(&prop::collection::vec((1u32..3000, 1u32..1000, 0u32..=100, 1u32..1000), 1..3), |rows| {
            let rows: Vec<String> = rows.iter().map(|(n, m, e, s)| format!("{n} {m} {e} {s}")).collect();
            let a = forge.generate_inputs(&generator, &rows, &limits).unwrap();
            let b = forge.generate_inputs(&generator, &rows, &limits).unwrap();
            for ((x, _), (y, _)) in a.iter().zip(&b) {
                prop_assert_eq!(&x.input, &y.input);
            }
            Ok(())
        })
        .map_err(|e| format!("double generation: {e}"))?;

    within(start, Duration::from_secs(60))?;
    Ok(format!("4 properties x 100 cases, {:.1?}", start.elapsed()))
}

// ---------------------------------------------------------------------------
// 8. Cost ledger arithmetic

/// Parses a non-negative decimal string into integer millionths.
fn micro(s: &str) -> u128 {
    let (int, frac) = s.split_once('.').unwrap_or((s, ""));
    assert!(frac.len() <= 6, "{s} has more than 6 decimals");
    let frac = format!("{frac:0<6}");
    int.parse::<u128>().unwrap() * 1_000_000 + frac.parse::<u128>().unwrap()
}

/// Hand oracle: per-entry cost in micro-dollars, rounded half to even.
fn oracle_total(entries: &[(String, u128, u128)], prices: &BTreeMap<String, (u128, u128)>) -> u128 {
    entries
        .iter()
        .map(|(model, i, o)| {
            let (pi, po) = prices[model];
            // Prices are micro-dollars per million tokens, so this is in 1e-12 dollars.
            let n = i * pi + o * po;
            let (q, r) = (n / 1_000_000, n % 1_000_000);
            if r > 500_000 || (r == 500_000 && q % 2 == 1) {
                q + 1
            } else {
                q
            }
        })
        .sum()
}

fn cost_ledger() -> Check {
    let start = Instant::now();
    let ledger = CostLedger::load(&fixtures().join("ledger.jsonl")).map_err(|e| e.to_string())?;
    let entries: Vec<(String, u128, u128)> = std::fs::read_to_string(fixtures().join("ledger.jsonl"))
        .map_err(|e| e.to_string())?
        .lines()
        .map(|l| {
            let v: serde_json::Value = serde_json::from_str(l).unwrap();
            (
                v["model_id"].as_str().unwrap().to_string(),
                v["input_tokens"].as_u64().unwrap() as u128,
                v["output_tokens"].as_u64().unwrap() as u128,
            )
        })
        .collect();
    ensure!(entries.len() == ledger.entries.len(), "ledger length");

    let mut totals = Vec::new();
    for table in ["flat", "tiered", "odd"] {
        let path = fixtures().join(format!("prices/{table}.json"));
        let raw: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
        let prices: BTreeMap<String, (u128, u128)> = raw["models"]
            .as_object()
            .unwrap()
            .iter()
            .map(|(k, v)| (k.clone(), (micro(v["input"].as_str().unwrap()), micro(v["output"].as_str().unwrap()))))
            .collect();
        let want = oracle_total(&entries, &prices);

        let table_prices = PriceTable::from_file(&path).map_err(|e| e.to_string())?;
        let priced = ledger.repriced(&table_prices).map_err(|e| e.to_string())?;
        let got = micro(&priced.total().to_string());
        ensure!(got == want, "{table}: ledger {} vs oracle {want} micro-dollars", priced.total());

        let mut shuffles = runner();
        shuffles
            .run(&Just(priced.entries.clone()).prop_shuffle(), |shuffled| {
                let l = CostLedger { entries: shuffled };
                prop_assert_eq!(micro(&l.total().to_string()), want);
                Ok(())
            })
            .map_err(|e| format!("{table} shuffle: {e}"))?;
        totals.push(format!("{table} ${}.{:06}", want / 1_000_000, want % 1_000_000));
    }
    within(start, Duration::from_secs(1))?;
    Ok(totals.join(", "))
}

// ---------------------------------------------------------------------------
// 9. Mock remote lifecycle

const TOKEN: &str = "tok-3c1f9a77e2d845b0";

struct Capture(Mutex<Vec<String>>);

impl log::Log for Capture {
    fn enabled(&self, _: &log::Metadata) -> bool {
        true
    }
    fn log(&self, record: &log::Record) {
        self.0.lock().unwrap().push(format!("{} {} {}", record.level(), record.target(), record.args()));
    }
    fn flush(&self) {}
}

fn mock_lifecycle(logs: &'static Capture) -> Check {
    let start = Instant::now();
    let problem = RemoteProblem {
        id: 1,
        slug: "aplusb".into(),
        statement_markdown: std::fs::read_to_string(fixtures().join("aplusb/statement.md")).map_err(|e| e.to_string())?,
        limits: Limits::new(1000, 256, 1 << 20).unwrap(),
    };
    let subs: Vec<RemoteSubmission> = (1..=5)
        .map(|i| RemoteSubmission {
            id: format!("s{i}"),
            source_text: "int main() { return 0; }\n".into(),
            toolchain_id: "cpp17".into(),
            score: if i <= 3 { 100 } else { 40 },
        })
        .collect();
    let mock =
        MockServer::start(MockState::default().with_problem(problem.clone(), subs), Secret::new(TOKEN)).map_err(|e| e.to_string())?;
    let mut transcript = String::new();

    // Library client.
    let endpoint = RemoteEndpoint::new(mock.url()).map_err(|e| e.to_string())?.with_problem("aplusb", 1);
    let client = RemoteClient::new(endpoint, Secret::new(TOKEN)).map_err(|e| e.to_string())?.with_backoff(Duration::from_millis(20));
    let pulled = client.fetch_problem(1).map_err(|e| e.to_string())?;
    ensure!(pulled == problem, "pulled problem differs");
    let accepted = client.fetch_submissions(1, SubmissionFilter::Accepted).map_err(|e| e.to_string())?;
    ensure!(accepted.len() == 3, "{} accepted", accepted.len());

    let suite = import_archive(&fixtures().join("archives/aplusb-ai.zip"), None, "ai").map_err(|e| e.to_string())?;
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let zip = dir.path().join("ai.zip");
    let local = export_archive(&suite, ArchiveFormat::FlatZip, &zip).map_err(|e| e.to_string())?;
    mock.fail_next(1, 503);
    let ack = client.upload_tests(1, &zip).map_err(|e| e.to_string())?;
    ensure!(ack.manifest == local, "uploaded manifest differs");
    ensure!(client.list_tests(1).map_err(|e| e.to_string())?.manifest == local, "listed manifest differs");
    let ids: Vec<String> = accepted.iter().map(|s| s.id.clone()).collect();
    let job = client.request_rejudge(1, &ids).map_err(|e| e.to_string())?;
    ensure!(job.submission_ids == ids, "rejudge covers {:?}", job.submission_ids);
    transcript += &format!("{pulled:?}{accepted:?}{ack:?}{job:?}{client:?}{:?}", client.endpoint());
    transcript += &serde_json::to_string(&(&ack, &job, client.endpoint())).unwrap();

    // The command line, with full logging.
    let work = tempfile::tempdir().map_err(|e| e.to_string())?;
    let config = work.path().join("judgeforge.json");
    let mut cfg: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(crate_dir().join("../../judgeforge.json")).unwrap()).unwrap();
    let root = crate_dir().join("../..").canonicalize().unwrap();
    for pointer in ["/problems_root", "/llm/price_table", "/llm/cache_dir"] {
        let key = cfg.pointer_mut(pointer).unwrap();
        *key = root.join(key.as_str().unwrap()).display().to_string().into();
    }
    cfg["remote"]["base_url"] = mock.url().into();
    std::fs::write(&config, cfg.to_string()).unwrap();
    let cli = |args: &[&str]| -> Result<String, String> {
        let out = Command::new(env!("CARGO_BIN_EXE_judgeforge"))
            .arg("--config")
            .arg(&config)
            .args(args)
            .env("JUDGEFORGE_REMOTE_TOKEN", TOKEN)
            .env("RUST_LOG", "trace")
            .output()
            .map_err(|e| e.to_string())?;
        let text = format!("{}{}", String::from_utf8_lossy(&out.stdout), String::from_utf8_lossy(&out.stderr));
        ensure!(out.status.success(), "{args:?} failed: {text}");
        Ok(text)
    };
    transcript += &cli(&["remote", "pull", "--problem", "aplusb", "--format", "json"])?;
    transcript += &cli(&["remote", "push", "--problem", "aplusb", "--suite", "original"])?;
    transcript += &cli(&["remote", "rejudge", "--problem", "aplusb", "--submission", "s1", "--submission", "s2"])?;

    let mut files = vec![];
    let mut stack = vec![work.path().to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap().flatten() {
            if e.path().is_dir() {
                stack.push(e.path());
            } else {
                files.push(e.path());
            }
        }
    }
    for f in &files {
        if f != &config {
            transcript += &String::from_utf8_lossy(&std::fs::read(f).unwrap());
        }
    }
    transcript += &format!("{:?}", mock.requests());
    transcript += &logs.0.lock().unwrap().join("\n");

    ensure!(!transcript.contains(TOKEN), "the token leaked into a log or report");
    let uploads = mock.requests().iter().filter(|r| r.method == "POST" && r.path.ends_with("/tests")).count();
    ensure!(uploads == 3, "{uploads} upload requests (one retried)");
    drop(mock);
    within(start, Duration::from_secs(10))?;
    Ok(format!("pull, push, rejudge ok; {} bytes of logs and reports free of the token", transcript.len()))
}

// ---------------------------------------------------------------------------

fn main() {
    let logs: &'static Capture = Box::leak(Box::new(Capture(Mutex::new(Vec::new()))));
    log::set_logger(logs).expect("logger");
    log::set_max_level(log::LevelFilter::Trace);

    type Criterion = (&'static str, Box<dyn Fn() -> Check>);
    let criteria: Vec<Criterion> = vec![
        ("table identities", Box::new(table_identities)),
        ("bucket distributions", Box::new(bucket_distributions)),
        ("forge from recorded transcript", Box::new(forge_from_transcript)),
        ("verdicts on planted bugs", Box::new(planted_bugs)),
        ("differential semantics", Box::new(differential_semantics)),
        ("sandbox guarantees", Box::new(sandbox_guarantees)),
        ("round-trip and determinism properties", Box::new(properties)),
        ("cost ledger arithmetic", Box::new(cost_ledger)),
        ("mock remote lifecycle", Box::new(move || mock_lifecycle(logs))),
    ];
    let only: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let n = i + 1;
        if !only.is_empty() && !only.contains(&n) {
            continue;
        }
        match check() {
            Ok(detail) => println!("PASS {n} {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL {n} {name}: {why}");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
