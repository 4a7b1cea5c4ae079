use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::GeneratorBundle;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FindingCategory {
    ForbiddenConstruct,
    DuplicateParams,
    ConstraintViolation,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Finding {
    pub category: FindingCategory,
    /// 1-based param row or source line the finding refers to.
    pub line: Option<usize>,
    pub message: String,
}

/// Per-problem numeric bounds for generator arguments.
///
/// `positional` names the argv slots in order; `bounds` maps names to an
/// inclusive `[min, max]`. Named arguments (`-n=5` or `-n 5`) are matched
/// by name directly.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConstraintSidecar {
    #[serde(default)]
    pub positional: Vec<String>,
    pub bounds: BTreeMap<String, [f64; 2]>,
}

impl ConstraintSidecar {
    pub fn from_file(path: &Path) -> std::io::Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))
    }

    fn named_values<'a>(&'a self, row: &'a str) -> Vec<(&'a str, &'a str)> {
        let tokens: Vec<&str> = row.split_whitespace().collect();
        let mut out = Vec::new();
        let mut positional = 0;
        let mut i = 0;
        while i < tokens.len() {
            let t = tokens[i];
            let is_flag = t.len() > 1 && t.starts_with('-') && !t[1..].starts_with(|c: char| c.is_ascii_digit() || c == '.');
            if is_flag {
                let key = t.trim_start_matches('-');
                if let Some((k, v)) = key.split_once('=') {
                    out.push((k, v));
                } else if i + 1 < tokens.len() {
                    out.push((key, tokens[i + 1]));
                    i += 1;
                }
            } else {
                if let Some(name) = self.positional.get(positional) {
                    out.push((name.as_str(), t));
                }
                positional += 1;
            }
            i += 1;
        }
        out
    }
}

fn strip_comments(src: &str) -> String {
    let mut out = String::with_capacity(src.len());
    let bytes = src.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        match (bytes[i], bytes.get(i + 1)) {
            (b'/', Some(b'/')) => {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
            }
            (b'/', Some(b'*')) => {
                i += 2;
                while i < bytes.len() && !(bytes[i] == b'*' && bytes.get(i + 1) == Some(&b'/')) {
                    if bytes[i] == b'\n' {
                        out.push('\n');
                    }
                    i += 1;
                }
                i += 2;
            }
            (b'"', _) => {
                out.push('"');
                i += 1;
                while i < bytes.len() && bytes[i] != b'"' && bytes[i] != b'\n' {
                    if bytes[i] == b'\\' {
                        i += 1;
                    }
                    i += 1;
                }
                out.push('"');
                i += 1;
            }
            (c, _) => {
                out.push(c as char);
                i += 1;
            }
        }
    }
    out
}

/// Checks a bundle for constructs the prompt forbids and for param rows
/// that duplicate each other or leave the sidecar's bounds.
pub fn lint_bundle(bundle: &GeneratorBundle, sidecar: Option<&ConstraintSidecar>) -> Vec<Finding> {
    let mut findings = Vec::new();

    let code = strip_comments(&bundle.generator_source);
    let defines_own_opt = Regex::new(r"\b[A-Za-z_][\w:<>]*\s+opt\s*\([^;{]*\)\s*\{").unwrap().is_match(&code);
    if !defines_own_opt {
        let opt_call = Regex::new(r"(^|[^\w.>:])opt\s*(<[^>;]*>\s*)?\(").unwrap();
        for (n, line) in code.lines().enumerate() {
            if opt_call.is_match(line) {
                findings.push(Finding {
                    category: FindingCategory::ForbiddenConstruct,
                    line: Some(n + 1),
                    message: format!("direct opt call in generator: `{}`", line.trim()),
                });
            }
        }
    }

    let mut first_seen: HashMap<Vec<&str>, usize> = HashMap::new();
    for (i, row) in bundle.param_rows.iter().enumerate() {
        let key: Vec<&str> = row.split_whitespace().collect();
        if let Some(&j) = first_seen.get(&key) {
            findings.push(Finding {
                category: FindingCategory::DuplicateParams,
                line: Some(i + 1),
                message: format!("row {} repeats row {}: `{row}`", i + 1, j + 1),
            });
        } else {
            first_seen.insert(key, i);
        }
    }

    if let Some(sidecar) = sidecar {
        for (i, row) in bundle.param_rows.iter().enumerate() {
            for (name, value) in sidecar.named_values(row) {
                let (Some([lo, hi]), Ok(v)) = (sidecar.bounds.get(name), value.parse::<f64>()) else {
                    continue;
                };
                if v < *lo || v > *hi {
                    findings.push(Finding {
                        category: FindingCategory::ConstraintViolation,
                        line: Some(i + 1),
                        message: format!("row {}: {name}={value} outside [{lo}, {hi}]", i + 1),
                    });
                }
            }
        }
    }
    findings
}

#[cfg(test)]
mod tests {
    use super::*;

    const VAL: &str = "int main() { registerValidation(); }\n";

    fn bundle(gen: &str, rows: &[&str]) -> GeneratorBundle {
        GeneratorBundle::new(gen, VAL, rows.iter().map(|r| r.to_string()).collect(), None).unwrap()
    }

    fn distinct_rows() -> Vec<String> {
        (1..=25).map(|i| format!("{i} {}", i * 7)).collect()
    }

    #[test]
    fn clean_bundle_has_no_findings() {
        let rows = distinct_rows();
        let rows: Vec<&str> = rows.iter().map(String::as_str).collect();
        let gen = "int main(int argc, char* argv[]) {\n    registerGen(argc, argv, 1);\n    int n = atoi(argv[1]);\n}\n";
        assert!(lint_bundle(&bundle(gen, &rows), None).is_empty());
    }

    #[test]
    fn direct_opt_is_forbidden() {
        let gen = "int main(int argc, char* argv[]) {\n    registerGen(argc, argv, 1);\n    int n = opt<int>(1);\n}\n";
        let f = lint_bundle(&bundle(gen, &["1"]), None);
        assert_eq!(f.len(), 1);
        assert_eq!(f[0].category, FindingCategory::ForbiddenConstruct);
        assert_eq!(f[0].line, Some(3));
    }

    #[test]
    fn opt_in_comments_strings_or_members_is_fine() {
        let gen = "// do not use opt<int>(1)\n/* opt(\"n\") */\nint main() {\n    puts(\"opt(1)\");\n    cfg.opt(2);\n    adopt(3);\n}\n";
        assert!(lint_bundle(&bundle(gen, &["1"]), None).is_empty());
    }

    #[test]
    fn user_defined_opt_is_exempt() {
        let gen = "long long opt(int i) { return atoll(g_argv[i]); }\nint main() { long long n = opt(1); }\n";
        assert!(lint_bundle(&bundle(gen, &["1"]), None).is_empty());
    }

    #[test]
    fn duplicate_rows_reported_once_per_repeat() {
        let f = lint_bundle(&bundle("int main(){}\n", &["1 2", "3 4", "1  2", "1 2"]), None);
        let dups: Vec<_> = f.iter().filter(|x| x.category == FindingCategory::DuplicateParams).collect();
        assert_eq!(dups.len(), 2);
        assert_eq!(dups[0].line, Some(3));
        assert_eq!(dups[1].line, Some(4));
    }

    #[test]
    fn sidecar_bounds_checked_for_positional_and_named() {
        let sidecar: ConstraintSidecar =
            serde_json::from_str(r#"{"positional":["n","maxv"],"bounds":{"n":[1,200000],"maxv":[1,1000000000]}}"#).unwrap();
        let b = bundle("int main(){}\n", &["5 10", "300000 10", "5 -maxv=0", "-n 7 -1"]);
        let f = lint_bundle(&b, Some(&sidecar));
        let lines: Vec<_> = f.iter().map(|x| (x.category, x.line)).collect();
        assert_eq!(
            lines,
            [
                (FindingCategory::ConstraintViolation, Some(2)),
                (FindingCategory::ConstraintViolation, Some(3)),
                (FindingCategory::ConstraintViolation, Some(4)),
            ]
        );
    }

    #[test]
    fn lint_leaves_bundle_untouched() {
        let b = bundle("int x = opt<int>(1);\n", &["1", "1"]);
        let before = b.clone();
        let _ = lint_bundle(&b, None);
        assert_eq!(b, before);
    }
}
