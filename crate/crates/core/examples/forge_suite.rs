//! Forges the palindrome fixture's generated suite: compile the bundle,
//! generate and validate 25 inputs, check determinism and produce expected
//! outputs with the reference solution.
//!
//!     cargo run --release --example forge_suite

use std::path::Path;

use judgeforge::forge::write_suite;
use judgeforge::pipeline::forge_build;
use judgeforge::workspace::Workspace;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../..");
    let mut ws = Workspace::load(&root.join("judgeforge.json"))?;
    let work = tempfile::tempdir()?;
    ws.config.work_dir = work.path().to_path_buf();

    let forge = ws.forge(ws.sandbox()?)?;
    let (report, dir) = forge_build(&ws, &forge, "palindrome")?;
    for case in &report.per_case {
        println!("{:<10} gen {:<24} {:>5} ms", case.input_name, case.params, case.generator_cpu_ms);
    }
    println!("determinism checked: {}", report.determinism_checked);

    let suite = report.suite.expect("forged suite");
    let largest = suite.cases.iter().max_by_key(|c| c.input.len()).unwrap();
    println!("{} cases in {}; largest is {} ({} bytes)", suite.len(), dir.display(), largest.input_name, largest.input.len());

    // The same suite can be written anywhere else, e.g. for packaging.
    let copy = write_suite(work.path().join("copy").as_path(), &suite, None)?;
    println!("copied to {}", copy.display());
    Ok(())
}
