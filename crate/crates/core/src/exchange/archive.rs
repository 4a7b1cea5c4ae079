use std::collections::BTreeMap;
use std::fs;
use std::io::{Read, Seek, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use zip::write::SimpleFileOptions;

use super::ExchangeError;
use crate::model::{normalize_names, parse_case_name, TestCase, TestSuite, EXPECTED_SUFFIX};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArchiveFormat {
    /// `testNN.in` and `testNN.ok` at the root of a zip file.
    FlatZip,
    /// A directory with `input/testNN.txt` and `output/testNN.txt`.
    CmsDir,
}

impl std::str::FromStr for ArchiveFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "flat_zip" | "zip" => Ok(ArchiveFormat::FlatZip),
            "cms_dir" | "cms" => Ok(ArchiveFormat::CmsDir),
            other => Err(format!("unknown archive format `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub name: String,
    pub size: u64,
    pub sha256: String,
}

impl ManifestEntry {
    pub fn of(name: impl Into<String>, bytes: &[u8]) -> Self {
        ManifestEntry { name: name.into(), size: bytes.len() as u64, sha256: sha256_hex(bytes) }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// One entry per file, in archive order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub entries: Vec<ManifestEntry>,
}

impl Manifest {
    /// Same files with the same contents, ignoring order.
    pub fn same_files(&self, other: &Manifest) -> bool {
        let index = |m: &Manifest| m.entries.iter().map(|e| (e.name.clone(), (e.size, e.sha256.clone()))).collect::<BTreeMap<_, _>>();
        index(self) == index(other)
    }
}

/// Writes `suite` to `dest` and returns the manifest of what was written.
pub fn export_archive(suite: &TestSuite, format: ArchiveFormat, dest: &Path) -> Result<Manifest, ExchangeError> {
    let normalized = normalize_names(suite);
    let mut files: Vec<(String, &[u8])> = Vec::with_capacity(normalized.len() * 2);
    for case in &normalized.cases {
        let Some(expected) = case.expected.as_deref() else {
            return Err(ExchangeError::IncompleteSuite(case.input_name.clone()));
        };
        let (input, output) = match format {
            ArchiveFormat::FlatZip => (case.input_name.clone(), case.expected_name()),
            ArchiveFormat::CmsDir => (format!("input/{}.txt", case.stem()), format!("output/{}.txt", case.stem())),
        };
        files.push((input, &case.input));
        files.push((output, expected));
    }
    let manifest = Manifest { entries: files.iter().map(|(n, b)| ManifestEntry::of(n.clone(), b)).collect() };
    let io = |e: std::io::Error| ExchangeError::Io(format!("{}: {e}", dest.display()));
    match format {
        ArchiveFormat::FlatZip => {
            if let Some(parent) = dest.parent().filter(|p| !p.as_os_str().is_empty()) {
                fs::create_dir_all(parent).map_err(io)?;
            }
            let file = fs::File::create(dest).map_err(io)?;
            let mut zip = zip::ZipWriter::new(file);
            // Fixed timestamps keep the archive bytes reproducible.
            let options = SimpleFileOptions::default()
                .compression_method(zip::CompressionMethod::Deflated)
                .last_modified_time(zip::DateTime::default())
                .unix_permissions(0o644);
            for (name, bytes) in &files {
                zip.start_file(name.as_str(), options).map_err(|e| ExchangeError::Io(e.to_string()))?;
                zip.write_all(bytes).map_err(io)?;
            }
            zip.finish().map_err(|e| ExchangeError::Io(e.to_string()))?;
        }
        ArchiveFormat::CmsDir => {
            for sub in ["input", "output"] {
                let d = dest.join(sub);
                if d.exists() {
                    fs::remove_dir_all(&d).map_err(io)?;
                }
                fs::create_dir_all(&d).map_err(io)?;
            }
            for (name, bytes) in &files {
                fs::write(dest.join(name), bytes).map_err(io)?;
            }
        }
    }
    Ok(manifest)
}

/// Reads an archive into a suite labelled `label`. With no format hint the
/// layout is detected: a zip file is tried as `FlatZip`, a directory as
/// `CmsDir`.
pub fn import_archive(src: &Path, hint: Option<ArchiveFormat>, label: &str) -> Result<TestSuite, ExchangeError> {
    let format = match hint {
        Some(f) => f,
        None => detect(src)?,
    };
    let files = match format {
        ArchiveFormat::FlatZip => read_zip(src)?,
        ArchiveFormat::CmsDir => read_cms(src)?,
    };
    pair(files, format, label)
}

fn detect(src: &Path) -> Result<ArchiveFormat, ExchangeError> {
    if src.is_file() {
        let mut magic = [0u8; 4];
        let mut f = fs::File::open(src).map_err(|e| ExchangeError::Io(format!("{}: {e}", src.display())))?;
        if f.read_exact(&mut magic).is_ok() && magic == *b"PK\x03\x04" {
            return Ok(ArchiveFormat::FlatZip);
        }
    } else if src.join("input").is_dir() && src.join("output").is_dir() {
        return Ok(ArchiveFormat::CmsDir);
    }
    Err(ExchangeError::UnrecognizedLayout(src.display().to_string()))
}

fn read_zip(src: &Path) -> Result<Vec<(String, Vec<u8>)>, ExchangeError> {
    let file = fs::File::open(src).map_err(|e| ExchangeError::Io(format!("{}: {e}", src.display())))?;
    zip_entries(file).map_err(|e| match e {
        ExchangeError::UnrecognizedLayout(_) => ExchangeError::UnrecognizedLayout(src.display().to_string()),
        other => other,
    })
}

fn zip_entries<R: Read + Seek>(reader: R) -> Result<Vec<(String, Vec<u8>)>, ExchangeError> {
    let mut zip = zip::ZipArchive::new(reader).map_err(|e| ExchangeError::UnrecognizedLayout(e.to_string()))?;
    let mut files = Vec::with_capacity(zip.len());
    for i in 0..zip.len() {
        let mut entry = zip.by_index(i).map_err(|e| ExchangeError::Io(e.to_string()))?;
        if entry.is_dir() {
            continue;
        }
        let name = entry.name().to_string();
        let mut bytes = Vec::with_capacity(entry.size() as usize);
        entry.read_to_end(&mut bytes).map_err(|e| ExchangeError::Io(format!("{name}: {e}")))?;
        files.push((name, bytes));
    }
    Ok(files)
}

/// Hashes every file inside an in-memory zip, in archive order.
pub fn manifest_of_zip(bytes: &[u8]) -> Result<Manifest, ExchangeError> {
    let files = zip_entries(std::io::Cursor::new(bytes))?;
    Ok(Manifest { entries: files.iter().map(|(n, b)| ManifestEntry::of(n.clone(), b)).collect() })
}

fn read_cms(src: &Path) -> Result<Vec<(String, Vec<u8>)>, ExchangeError> {
    let mut files = Vec::new();
    let io = |p: &Path, e: std::io::Error| ExchangeError::Io(format!("{}: {e}", p.display()));
    for entry in fs::read_dir(src).map_err(|e| io(src, e))? {
        let path = entry.map_err(|e| io(src, e))?.path();
        let name = path.file_name().unwrap().to_string_lossy().into_owned();
        if path.is_dir() && (name == "input" || name == "output") {
            for inner in fs::read_dir(&path).map_err(|e| io(&path, e))? {
                let p = inner.map_err(|e| io(&path, e))?.path();
                let inner_name = p.file_name().unwrap().to_string_lossy().into_owned();
                files.push((format!("{name}/{inner_name}"), fs::read(&p).map_err(|e| io(&p, e))?));
            }
        } else {
            return Err(ExchangeError::UnexpectedFile(name));
        }
    }
    Ok(files)
}

enum Role {
    Input,
    Expected,
}

fn classify(name: &str, format: ArchiveFormat) -> Result<(Role, usize), ExchangeError> {
    let parsed = match format {
        ArchiveFormat::FlatZip => {
            if let Some(index) = parse_case_name(name) {
                Some((Role::Input, index))
            } else {
                name.strip_suffix(&format!(".{EXPECTED_SUFFIX}"))
                    .and_then(|stem| parse_case_name(&format!("{stem}.in")))
                    .map(|i| (Role::Expected, i))
            }
        }
        ArchiveFormat::CmsDir => {
            let (dir, file) = name.split_once('/').unwrap_or(("", name));
            let index = file.strip_suffix(".txt").and_then(|stem| parse_case_name(&format!("{stem}.in")));
            match (dir, index) {
                ("input", Some(i)) => Some((Role::Input, i)),
                ("output", Some(i)) => Some((Role::Expected, i)),
                _ => None,
            }
        }
    };
    parsed.ok_or_else(|| ExchangeError::UnexpectedFile(name.to_string()))
}

fn pair(files: Vec<(String, Vec<u8>)>, format: ArchiveFormat, label: &str) -> Result<TestSuite, ExchangeError> {
    let mut inputs: BTreeMap<usize, (String, Vec<u8>)> = BTreeMap::new();
    let mut expected: BTreeMap<usize, (String, Vec<u8>)> = BTreeMap::new();
    for (name, bytes) in files {
        let (role, index) = classify(&name, format)?;
        let slot = match role {
            Role::Input => &mut inputs,
            Role::Expected => &mut expected,
        };
        if let Some((prev, _)) = slot.insert(index, (name.clone(), bytes)) {
            return Err(ExchangeError::DuplicateCase(format!("{prev} and {name}")));
        }
    }
    if let Some(i) = inputs.keys().find(|i| !expected.contains_key(i)) {
        return Err(ExchangeError::OrphanFile(inputs[i].0.clone()));
    }
    if let Some(i) = expected.keys().find(|i| !inputs.contains_key(i)) {
        return Err(ExchangeError::OrphanFile(expected[i].0.clone()));
    }
    if inputs.is_empty() {
        return Err(ExchangeError::UnrecognizedLayout("archive contains no tests".into()));
    }
    let cases = inputs.into_iter().zip(expected).map(|((i, (_, input)), (_, (_, out)))| TestCase::new(i, input, Some(out))).collect();
    let suite = TestSuite::new(label, cases).map_err(|e| ExchangeError::UnrecognizedLayout(e.to_string()))?;
    Ok(normalize_names(&suite))
}
