//! Exports a suite as a flat zip and as a CMS-style directory, imports both
//! back and compares.
//!
//!     cargo run --example archive_roundtrip

use std::path::Path;

use judgeforge::exchange::{export_archive, import_archive, ArchiveFormat};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let fixture = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/archives/aplusb-ai.zip");
    let suite = import_archive(&fixture, None, "ai")?;
    println!("imported {} cases from {}", suite.len(), fixture.display());

    let out = tempfile::tempdir()?;
    let zip = out.path().join("tests.zip");
    let cms = out.path().join("cms");
    let zip_manifest = export_archive(&suite, ArchiveFormat::FlatZip, &zip)?;
    let cms_manifest = export_archive(&suite, ArchiveFormat::CmsDir, &cms)?;
    for (a, b) in zip_manifest.entries.iter().zip(&cms_manifest.entries).take(4) {
        println!("{:<10} {:<20} {:>4} B  {}", a.name, b.name, a.size, &a.sha256[..16]);
    }

    let from_zip = import_archive(&zip, None, "ai")?;
    let from_cms = import_archive(&cms, None, "ai")?;
    println!("zip round trip identical: {}", from_zip == suite);
    println!("cms round trip identical: {}", from_cms == suite);
    println!("committed archive byte-identical to re-export: {}", std::fs::read(&fixture)? == std::fs::read(&zip)?);
    Ok(())
}
