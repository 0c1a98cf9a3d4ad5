//! Filesystem-level drivers: load MiniLang sources from directories, run the
//! front half of the pipeline, and read/write the JSON artifacts. All JSON
//! output is pretty-printed with stable ordering so identical inputs produce
//! byte-identical files.

use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::frontend::{self, ast::Program, ProgramFacts, Sdg};
use crate::model::{build_class_hierarchy, ClassHierarchy, FrameworkModel, PrimaryApiUsageGraph};
use crate::slicer;

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Parses every `.mini` file under `dir` (sorted by name, not recursive).
pub fn parse_dir(dir: &Path) -> Result<Vec<Program>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| io_err(dir, e))?
        .collect::<std::io::Result<Vec<_>>>()
        .map_err(|e| io_err(dir, e))?
        .into_iter()
        .map(|e| e.path())
        .filter(|p| p.extension().map(|x| x == "mini").unwrap_or(false))
        .collect();
    files.sort();
    let mut out = Vec::new();
    for f in files {
        let src = fs::read_to_string(&f).map_err(|e| io_err(&f, e))?;
        let name = f
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        out.push(frontend::parse(&name, &src)?);
    }
    Ok(out)
}

/// Parses framework sources and builds the framework model.
pub fn load_framework(dir: &Path, name: &str) -> Result<FrameworkModel> {
    let asts = parse_dir(dir)?;
    let fw = frontend::build_framework_model(name, &asts)?;
    fw.validate()?;
    Ok(fw)
}

/// Parses and lowers one program directory. Entrypoints default to the
/// static `main` methods when none are given.
pub fn load_program(
    dir: &Path,
    name: &str,
    framework: &FrameworkModel,
    entrypoints: Option<Vec<String>>,
) -> Result<ProgramFacts> {
    let asts = parse_dir(dir)?;
    let mut facts = frontend::lower(name, &asts, framework)?;
    if let Some(eps) = entrypoints {
        facts.entrypoints = eps;
    }
    Ok(facts)
}

/// Artifacts of the analysis front half for one program.
pub struct FrontHalf {
    pub hierarchy: ClassHierarchy,
    pub sdg: Sdg,
}

/// Builds the class hierarchy, call graph and dependence graph.
pub fn analyze(facts: &ProgramFacts, framework: &FrameworkModel) -> Result<FrontHalf> {
    let hierarchy = build_class_hierarchy(framework, &facts.types)?;
    let cg = frontend::build_call_graph(facts, framework, &hierarchy)?;
    let sdg = frontend::build_sdg(&cg, facts);
    Ok(FrontHalf { hierarchy, sdg })
}

/// Slices the program and emits one primary usage graph per entrypoint.
/// Entrypoints without any framework usage are skipped.
pub fn extract_usages(
    facts: &ProgramFacts,
    framework: &FrameworkModel,
) -> Result<Vec<PrimaryApiUsageGraph>> {
    let front = analyze(facts, framework)?;
    let sliced = slicer::slice(&front.sdg, facts, framework, &front.hierarchy);
    let mut out = Vec::new();
    for entry in &facts.entrypoints {
        match slicer::build_primary_graph(&sliced, facts, entry) {
            Ok(g) => out.push(g),
            Err(crate::error::AnalysisError::EmptyUsage(_)) => continue,
            Err(e) => return Err(e.into()),
        }
    }
    Ok(out)
}

/// Writes a value as pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| io_err(parent, e))?;
    }
    let mut body = serde_json::to_string_pretty(value).map_err(|e| Error::Json {
        path: path.display().to_string(),
        source: e,
    })?;
    body.push('\n');
    fs::write(path, body).map_err(|e| io_err(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let body = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    serde_json::from_str(&body).map_err(|e| Error::Json {
        path: path.display().to_string(),
        source: e,
    })
}
