//! Judges the A+B fixture's planted-bug solutions on the original suite and
//! on the committed archive of the generated suite.
//!
//!     cargo run --release --example judge_solutions

use std::path::Path;

use judgeforge::exchange::import_archive;
use judgeforge::workspace::{Workspace, ORIGINAL_SUITE};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../..");
    let mut ws = Workspace::load(&root.join("judgeforge.json"))?;
    let work = tempfile::tempdir()?;
    ws.config.work_dir = work.path().to_path_buf();

    let problem = ws.load_problem("aplusb")?;
    let original = ws.load_suite("aplusb", ORIGINAL_SUITE)?;
    let generated = import_archive(&ws.config.problems_root.join("archives/aplusb-ai.zip"), None, "ai")?;
    let judge = ws.judge(ws.sandbox()?)?;

    for sub in ws.corpus("aplusb")? {
        for suite in [&original, &generated] {
            let result = judge.judge_submission(&sub, suite, &problem)?;
            let verdicts: String = result.verdicts().iter().map(|v| v.as_str().chars().next().unwrap()).collect();
            let summary = match result.first_failure() {
                None => "passes".to_string(),
                Some(t) => format!("{} on test {}", t.verdict, t.index),
            };
            println!("{:<15} {:<8} {:<26} {summary}", sub.id, suite.label, verdicts);
        }
    }
    Ok(())
}
