//! Re-derives every annotation of the fixture corpus: forges each generated
//! suite, judges all planted bugs and compares rows and verdict histogram
//! with the manifest. Takes about a minute.
//!
//!     cargo run --release --example verify_fixtures

use std::path::Path;

use judgeforge::fixtures::{verify, FixtureManifest, MANIFEST_FILE};
use judgeforge::workspace::Workspace;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../..");
    let mut ws = Workspace::load(&root.join("judgeforge.json"))?;
    let work = tempfile::tempdir()?;
    ws.config.work_dir = work.path().to_path_buf();

    let manifest = FixtureManifest::load(&ws.config.problems_root.join(MANIFEST_FILE))?;
    let report = verify(&ws, &manifest, None)?;
    for p in &report.problems {
        let r = &p.row;
        println!(
            "{:<11} before {:>2} after {:>2} both {:>2} only original {:>2} only ai {:>2}",
            p.id, r.before, r.after, r.both, r.only_original, r.only_ai
        );
    }
    println!("newly failed: {:?}", report.histogram);
    if report.violations.is_empty() {
        println!("all annotations hold");
    }
    for v in &report.violations {
        println!("VIOLATION {v}");
    }
    Ok(())
}
