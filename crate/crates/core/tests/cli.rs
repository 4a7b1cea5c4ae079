//! The command line: exit codes, artifacts and idempotency.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

struct Env {
    dir: tempfile::TempDir,
    config: PathBuf,
}

impl Env {
    /// A workspace over the committed fixtures with a private work dir.
    fn new() -> Self {
        Self::with(|_| {})
    }

    fn with(edit: impl FnOnce(&mut Value)) -> Self {
        let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").canonicalize().unwrap();
        let mut cfg: Value = serde_json::from_str(&fs::read_to_string(root.join("judgeforge.json")).unwrap()).unwrap();
        for pointer in ["/problems_root", "/llm/price_table", "/llm/cache_dir"] {
            let v = cfg.pointer_mut(pointer).unwrap();
            *v = root.join(v.as_str().unwrap()).display().to_string().into();
        }
        let dir = tempfile::tempdir().unwrap();
        cfg["work_dir"] = dir.path().join("work").display().to_string().into();
        edit(&mut cfg);
        let config = dir.path().join("judgeforge.json");
        fs::write(&config, cfg.to_string()).unwrap();
        Env { dir, config }
    }

    fn run(&self, args: &[&str]) -> Output {
        Command::new(env!("CARGO_BIN_EXE_judgeforge"))
            .arg("--config")
            .arg(&self.config)
            .args(args)
            .env_remove("JUDGEFORGE_REMOTE_TOKEN")
            .env_remove("JUDGEFORGE_LLM_API_KEY")
            .output()
            .unwrap()
    }

    fn work(&self) -> PathBuf {
        self.dir.path().join("work")
    }
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn tree(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap().flatten() {
            let p = e.path();
            if p.is_dir() {
                stack.push(p);
            } else {
                files.push((p.strip_prefix(dir).unwrap().display().to_string(), fs::read(&p).unwrap()));
            }
        }
    }
    files.sort();
    files
}

#[test]
fn help_lists_exit_codes() {
    let out = Command::new(env!("CARGO_BIN_EXE_judgeforge")).arg("--help").output().unwrap();
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert!(text.contains("Exit codes:") && text.contains("network forbidden"), "{text}");
}

#[test]
fn usage_and_config_errors() {
    let env = Env::new();
    assert_eq!(code(&env.run(&["forge", "frobnicate"])), 2);
    assert_eq!(code(&env.run(&["forge", "build"])), 2);
    assert_eq!(code(&env.run(&["forge", "build", "--problem", "no-such-problem"])), 3);

    let missing =
        Command::new(env!("CARGO_BIN_EXE_judgeforge")).args(["--config", "/nonexistent/judgeforge.json", "cost", "show"]).output().unwrap();
    assert_eq!(code(&missing), 3);
}

#[test]
fn replay_forbids_the_network() {
    let env = Env::new();
    assert_eq!(code(&env.run(&["--replay", "forge", "prompt", "--problem", "aplusb", "--mode", "live"])), 10);
    assert_eq!(code(&env.run(&["--replay", "forge", "prompt", "--problem", "aplusb", "--mode", "record"])), 10);
    assert_eq!(code(&env.run(&["--replay", "remote", "pull", "--problem", "aplusb"])), 10);
    assert_eq!(code(&env.run(&["--replay", "remote", "rejudge", "--problem", "aplusb", "--submission", "x"])), 10);
}

#[test]
fn replay_cache_miss_is_an_llm_error() {
    let empty = tempfile::tempdir().unwrap();
    let env = Env::with(|cfg| cfg["llm"]["cache_dir"] = empty.path().display().to_string().into());
    let out = env.run(&["--replay", "forge", "prompt", "--problem", "aplusb"]);
    assert_eq!(code(&out), 4, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn diff_without_results_is_reported() {
    let env = Env::new();
    assert_eq!(code(&env.run(&["diff", "report", "--problem", "aplusb"])), 8);
}

#[test]
fn remote_without_token_is_an_archive_or_remote_error() {
    let env = Env::new();
    let out = env.run(&["remote", "pull", "--problem", "aplusb"]);
    assert_eq!(code(&out), 9, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn replayed_forge_is_idempotent() {
    let env = Env::new();
    let prompt = env.run(&["--replay", "forge", "prompt", "--problem", "aplusb", "--format", "json"]);
    assert_eq!(code(&prompt), 0, "{}", String::from_utf8_lossy(&prompt.stderr));
    let v: Value = serde_json::from_str(&stdout(&prompt)).unwrap();
    assert_eq!(v["param_rows"], 25);
    assert_eq!(v["cost_usd"], "0.003815");

    let build = env.run(&["--replay", "forge", "build", "--problem", "aplusb"]);
    assert_eq!(code(&build), 0, "{}", String::from_utf8_lossy(&build.stderr));
    let suite = env.work().join("aplusb/suites/ai");
    let inputs: Vec<_> = tree(&suite).into_iter().filter(|(n, _)| n.ends_with(".in")).map(|(n, _)| n).collect();
    assert_eq!(inputs, (1..=25).map(|i| format!("test{i:02}.in")).collect::<Vec<_>>());

    let bundle = tree(&env.work().join("aplusb/bundle"));
    let first = tree(&suite);
    assert_eq!(code(&env.run(&["--replay", "forge", "prompt", "--problem", "aplusb"])), 0);
    assert_eq!(code(&env.run(&["--replay", "forge", "build", "--problem", "aplusb"])), 0);
    assert_eq!(tree(&suite), first);
    assert_eq!(tree(&env.work().join("aplusb/bundle")), bundle);

    // One ledger line per distinct exchange, however often it is replayed.
    let ledger = fs::read_to_string(env.work().join("cost.jsonl")).unwrap();
    assert_eq!(ledger.lines().count(), 1);
    let shown = env.run(&["cost", "show"]);
    assert!(stdout(&shown).contains("total $0.003815"), "{}", stdout(&shown));
}

#[test]
fn committed_archive_imports_and_exports() {
    let env = Env::new();
    let zip = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/archives/aplusb-ai.zip");
    let out =
        env.run(&["suite", "import", "--problem", "aplusb", "--src", zip.to_str().unwrap(), "--label", "imported", "--format", "json"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["cases"], 25);

    let zip_out = env.dir.path().join("again.zip");
    let out = env.run(&["suite", "export", "--problem", "aplusb", "--suite", "imported", "--dest", zip_out.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(fs::read(&zip_out).unwrap(), fs::read(&zip).unwrap());

    let cms = env.dir.path().join("cms");
    let out =
        env.run(&["suite", "export", "--problem", "aplusb", "--suite", "imported", "--layout", "cms_dir", "--dest", cms.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    assert!(cms.join("input/test25.txt").is_file() && cms.join("output/test25.txt").is_file());

    let junk = env.dir.path().join("junk");
    fs::create_dir_all(&junk).unwrap();
    fs::write(junk.join("readme.txt"), "not tests").unwrap();
    let out = env.run(&["suite", "import", "--problem", "aplusb", "--src", junk.to_str().unwrap(), "--label", "junk"]);
    assert_eq!(code(&out), 9);
}

#[test]
fn cost_show_reprices_a_ledger() {
    let env = Env::new();
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let out = env.run(&[
        "cost",
        "show",
        "--ledger",
        fixtures.join("ledger.jsonl").to_str().unwrap(),
        "--prices",
        fixtures.join("prices/tiered.json").to_str().unwrap(),
        "--format",
        "json",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["total_usd"], "15.439932");
    assert_eq!(v["entries"].as_array().unwrap().len(), 7);

    // The default table has no price for two of the ledger's models.
    let out = env.run(&[
        "cost",
        "show",
        "--ledger",
        fixtures.join("ledger.jsonl").to_str().unwrap(),
        "--prices",
        fixtures.join("prices/default.json").to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 4);
}

#[test]
fn table_report_from_csv() {
    let env = Env::new();
    let csv = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/table1.csv");
    let out = env.run(&["diff", "report", "--rows", csv.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert!(text.contains("| walrus | 114 | 113 | 109 | 5 | 4 |"), "{text}");
    let out = env.run(&["diff", "report", "--rows", csv.to_str().unwrap(), "--format", "json"]);
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["rows"].as_array().unwrap().len(), 25);
}
