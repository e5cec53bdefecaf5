//! Problem and measure files shipped with the binary.

use std::path::{Path, PathBuf};

use varbound::measures::MeasureFile;
use varbound::problem::ProblemFile;
use varbound::{Error, Result};

pub struct Builtin {
    pub name: &'static str,
    pub file: &'static str,
    pub text: &'static str,
}

pub const PROBLEMS: &[Builtin] = &[
    Builtin { name: "poincare", file: "poincare.toml", text: include_str!("../data/poincare.toml") },
    Builtin { name: "double_well", file: "double_well.toml", text: include_str!("../data/double_well.toml") },
    Builtin { name: "convex", file: "convex.toml", text: include_str!("../data/convex.toml") },
    Builtin { name: "well_1d", file: "well_1d.toml", text: include_str!("../data/well_1d.toml") },
];

pub const MEASURES: &[Builtin] = &[
    Builtin { name: "poincare_mu", file: "poincare_mu.measure", text: include_str!("../data/poincare_mu.measure") },
    Builtin { name: "double_well", file: "double_well.measure", text: include_str!("../data/double_well.measure") },
];

/// Where an input came from and its exact text.
#[derive(Clone, Debug)]
pub struct Source {
    pub label: String,
    pub text: String,
    /// Directory for resolving relative references; `None` for built-ins.
    pub dir: Option<PathBuf>,
}

fn lookup(table: &'static [Builtin], arg: &str) -> Option<&'static Builtin> {
    let base = Path::new(arg).file_name().and_then(|f| f.to_str()).unwrap_or(arg);
    table.iter().find(|b| b.name == arg || b.file == arg || b.file == base)
}

/// Reads `arg` from disk, falling back to a built-in of the same name.
fn read(table: &'static [Builtin], arg: &str, kind: &str) -> Result<Source> {
    let path = Path::new(arg);
    if path.is_file() {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io { path: path.display().to_string(), source: e })?;
        let label = path.canonicalize().unwrap_or_else(|_| path.to_path_buf()).display().to_string();
        return Ok(Source { label, text, dir: path.parent().map(Path::to_path_buf) });
    }
    match lookup(table, arg) {
        Some(b) => Ok(Source { label: format!("builtin:{}", b.file), text: b.text.to_string(), dir: None }),
        None => {
            let known: Vec<&str> = table.iter().map(|b| b.name).collect();
            Err(Error::Io {
                path: arg.to_string(),
                source: std::io::Error::new(
                    std::io::ErrorKind::NotFound,
                    format!("no such {kind} file and no built-in named so (built-ins: {})", known.join(", ")),
                ),
            })
        }
    }
}

pub fn problem(arg: &str) -> Result<(ProblemFile, Source)> {
    let src = read(PROBLEMS, arg, "problem")?;
    let file = ProblemFile::parse(&src.text).map_err(|e| Error::Parse(format!("{}: {e}", src.label)))?;
    Ok((file, src))
}

/// A problem referenced from another file: relative to that file if it
/// exists there, otherwise a built-in.
pub fn referenced_problem(reference: &str, from: Option<&Path>) -> Result<(ProblemFile, Source)> {
    if let Some(dir) = from {
        let candidate = dir.join(reference);
        if candidate.is_file() {
            return problem(&candidate.display().to_string());
        }
    }
    problem(reference)
}

pub fn measure(arg: &str) -> Result<(MeasureFile, Source)> {
    let src = read(MEASURES, arg, "measure")?;
    let file = MeasureFile::parse(&src.text).map_err(|e| Error::Parse(format!("{}: {e}", src.label)))?;
    Ok((file, src))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_builtin_parses_and_builds() {
        for b in PROBLEMS {
            let (file, src) = problem(b.name).unwrap();
            assert!(src.label.starts_with("builtin:"));
            file.build::<f64>().unwrap();
        }
        for b in MEASURES {
            let (m, _) = measure(b.file).unwrap();
            referenced_problem(&m.problem, None).unwrap();
        }
    }

    #[test]
    fn unknown_names_are_io_errors() {
        assert!(problem("no_such_problem").unwrap_err().is_input_error());
    }
}
