//! Command-line front end for the specification miner. Subcommands mirror
//! the pipeline phases: parse sources to facts, extract usage graphs, filter
//! out order violations, build usage models, train the specification, then
//! query or evaluate it. `pipeline` runs the first phases end to end from a
//! manifest. Logs go to stderr, data to files or stdout.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use specminer_core::driver;
use specminer_core::error::Error as CoreError;
use specminer_core::eval::{self, Task};
use specminer_core::fspec;
use specminer_core::graam;
use specminer_core::ifd::{self, IfdModel, Violation};
use specminer_core::model::{FSpec, FrameworkModel, Graam, PrimaryApiUsageGraph};
use specminer_core::recommend::{self, Recommendation};

const EXIT_USAGE: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_ANALYSIS: u8 = 3;

#[derive(Parser)]
#[command(
    name = "specminer",
    about = "Learn framework API usage specifications from example programs",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct FrameworkArg {
    /// Framework sources directory or a framework model JSON file.
    #[arg(long = "framework")]
    framework: PathBuf,
    /// Framework name used when loading from sources.
    #[arg(long = "framework-name", default_value = "framework")]
    framework_name: String,
}

impl FrameworkArg {
    fn load(&self) -> Result<FrameworkModel, CoreError> {
        if self.framework.is_dir() {
            driver::load_framework(&self.framework, &self.framework_name)
        } else {
            driver::read_json(&self.framework)
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum Format {
    Json,
    Table,
}

#[derive(Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum TaskArg {
    Next,
    Missed,
    Misuse,
}

impl From<TaskArg> for Task {
    fn from(t: TaskArg) -> Task {
        match t {
            TaskArg::Next => Task::Next,
            TaskArg::Missed => Task::Missed,
            TaskArg::Misuse => Task::Misuse,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Parse a program directory and lower it to facts.
    Parse {
        /// Directory with the program's `.mini` sources.
        dir: PathBuf,
        #[command(flatten)]
        framework: FrameworkArg,
        /// Entrypoints (`Class.method`); defaults to every static `main`.
        #[arg(long = "entrypoint")]
        entrypoints: Vec<String>,
        /// Program name recorded in the facts; defaults to the directory name.
        #[arg(long)]
        name: Option<String>,
        /// Output file for the lowered facts.
        #[arg(short, long)]
        out: PathBuf,
        /// Also write the framework model as JSON.
        #[arg(long = "framework-out")]
        framework_out: Option<PathBuf>,
    },
    /// Slice a program's facts into per-entrypoint usage graphs.
    Extract {
        /// Program facts JSON produced by `parse`.
        facts: PathBuf,
        #[command(flatten)]
        framework: FrameworkArg,
        /// Output directory, one usage-graph JSON per entrypoint.
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Partition usage graphs into sound and violating ones.
    Validate {
        /// Directory of usage-graph JSON files.
        usages: PathBuf,
        #[command(flatten)]
        framework: FrameworkArg,
        /// Output directory for the sound usage graphs.
        #[arg(short, long)]
        out: PathBuf,
        /// Report file for rejected usages and their violations.
        #[arg(long)]
        rejected: PathBuf,
        /// Also write the mined dependency model as JSON.
        #[arg(long = "ifd-out")]
        ifd_out: Option<PathBuf>,
        /// Same-class call hops through which field accesses propagate.
        #[arg(long = "ifd-transitive-depth", default_value_t = 1)]
        ifd_transitive_depth: u32,
    },
    /// Build order-constraint usage models from sound usage graphs.
    Graam {
        /// Directory of sound usage-graph JSON files.
        sound: PathBuf,
        /// Mined dependency model JSON.
        #[arg(long)]
        ifd: PathBuf,
        /// Output directory for usage-model JSON files.
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Merge usage models into the specification model.
    Train {
        /// Directory of usage-model JSON files.
        graams: PathBuf,
        /// Output file for the specification model.
        #[arg(short, long)]
        out: PathBuf,
        /// Learning-curve CSV output.
        #[arg(long)]
        curve: Option<PathBuf>,
        /// Framework name recorded in the model.
        #[arg(long, default_value = "framework")]
        name: String,
    },
    /// Query a trained specification about a partial program.
    Recommend {
        /// Trained specification JSON.
        #[arg(long)]
        fspec: PathBuf,
        /// Partial program: a `.mini` file or a directory of sources.
        #[arg(long)]
        program: PathBuf,
        #[command(flatten)]
        framework: FrameworkArg,
        /// Query kind.
        #[arg(long)]
        task: TaskArg,
        /// Entrypoint; defaults to the single static `main`.
        #[arg(long)]
        entrypoint: Option<String>,
        #[arg(short = 'k', default_value_t = 10)]
        k: usize,
        /// Output format.
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
    /// Split a corpus, train on one side and measure top-k accuracy.
    Eval {
        /// Directory of usage-model JSON files.
        #[arg(long)]
        corpus: PathBuf,
        #[command(flatten)]
        framework: FrameworkArg,
        #[arg(long)]
        task: TaskArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Fraction of programs used for training.
        #[arg(long, default_value_t = 0.8)]
        split: f64,
        #[arg(short = 'k', default_value_t = 10)]
        k: usize,
        /// Report CSV output.
        #[arg(short, long)]
        out: PathBuf,
        /// Framework name recorded in the trained model.
        #[arg(long, default_value = "framework")]
        name: String,
    },
    /// Run parse, extract, validate, graam and train from a manifest.
    Pipeline {
        manifest: PathBuf,
        /// Override the workspace directory from the manifest.
        #[arg(short, long)]
        workspace: Option<PathBuf>,
    },
}

// ---------------------------------------------------------------------------
// Manifest
// ---------------------------------------------------------------------------

#[derive(Debug, Deserialize)]
struct Manifest {
    workspace: String,
    #[serde(default)]
    #[allow(dead_code)]
    seed: Option<u64>,
    framework: ManifestFramework,
    #[serde(rename = "program")]
    programs: Vec<ManifestProgram>,
}

#[derive(Debug, Deserialize)]
struct ManifestFramework {
    name: String,
    dir: String,
}

#[derive(Debug, Deserialize)]
struct ManifestProgram {
    name: String,
    dir: String,
    #[serde(default)]
    entrypoints: Option<Vec<String>>,
}

#[derive(Debug, Serialize)]
struct RejectedUsage {
    program: String,
    entrypoint: String,
    violations: Vec<Violation>,
}

// ---------------------------------------------------------------------------
// Helpers
// ---------------------------------------------------------------------------

fn sanitize(s: &str) -> String {
    s.chars()
        .map(|c| {
            if c.is_alphanumeric() || c == '.' || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

fn usage_file_name(g: &PrimaryApiUsageGraph) -> String {
    format!("{}__{}.json", sanitize(&g.program), sanitize(&g.entrypoint))
}

fn graam_file_name(g: &Graam) -> String {
    format!("{}__{}.json", sanitize(&g.program), sanitize(&g.entrypoint))
}

fn read_json_dir<T: serde::de::DeserializeOwned>(dir: &Path) -> Result<Vec<T>, CoreError> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| CoreError::Io {
            path: dir.display().to_string(),
            source: e,
        })?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.extension().map(|x| x == "json").unwrap_or(false))
        .collect();
    files.sort();
    files.iter().map(|f| driver::read_json(f)).collect()
}

fn write_text(path: &Path, body: &str) -> Result<(), CoreError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| CoreError::Io {
            path: parent.display().to_string(),
            source: e,
        })?;
    }
    std::fs::write(path, body).map_err(|e| CoreError::Io {
        path: path.display().to_string(),
        source: e,
    })
}

fn load_partial_program(
    path: &Path,
    fw: &FrameworkModel,
    entrypoint: Option<String>,
) -> Result<specminer_core::frontend::ProgramFacts, CoreError> {
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "partial".to_string());
    let asts = if path.is_dir() {
        driver::parse_dir(path)?
    } else {
        let src = std::fs::read_to_string(path).map_err(|e| CoreError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        let file = path
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        vec![specminer_core::frontend::parse(&file, &src)?]
    };
    let mut facts = specminer_core::frontend::lower(&name, &asts, fw)?;
    if let Some(e) = entrypoint {
        facts.entrypoints = vec![e];
    }
    Ok(facts)
}

// ---------------------------------------------------------------------------
// Subcommand bodies
// ---------------------------------------------------------------------------

fn run(cli: Cli) -> Result<(), CoreError> {
    match cli.command {
        Command::Parse {
            dir,
            framework,
            entrypoints,
            name,
            out,
            framework_out,
        } => {
            let fw = framework.load()?;
            let program = name.unwrap_or_else(|| {
                dir.file_name()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| "program".to_string())
            });
            let eps = if entrypoints.is_empty() {
                None
            } else {
                Some(entrypoints)
            };
            let facts = driver::load_program(&dir, &program, &fw, eps)?;
            driver::write_json(&out, &facts)?;
            if let Some(fw_out) = framework_out {
                driver::write_json(&fw_out, &fw)?;
            }
            eprintln!(
                "parsed {} ({} types, {} methods)",
                program,
                facts.types.len(),
                facts.methods.len()
            );
            Ok(())
        }
        Command::Extract {
            facts,
            framework,
            out,
        } => {
            let fw = framework.load()?;
            let facts: specminer_core::frontend::ProgramFacts = driver::read_json(&facts)?;
            let usages = driver::extract_usages(&facts, &fw)?;
            for g in &usages {
                driver::write_json(&out.join(usage_file_name(g)), g)?;
            }
            eprintln!("extracted {} usage graph(s)", usages.len());
            Ok(())
        }
        Command::Validate {
            usages,
            framework,
            out,
            rejected,
            ifd_out,
            ifd_transitive_depth,
        } => {
            let fw = framework.load()?;
            let model = ifd::mine_ifd_with_depth(&fw, ifd_transitive_depth);
            let corpus: Vec<PrimaryApiUsageGraph> = read_json_dir(&usages)?;
            let (sound, unsound) = ifd::filter_sound(corpus, &model);
            for g in &sound {
                driver::write_json(&out.join(usage_file_name(g)), g)?;
            }
            let rejects: Vec<RejectedUsage> = unsound
                .into_iter()
                .map(|(g, violations)| RejectedUsage {
                    program: g.program,
                    entrypoint: g.entrypoint,
                    violations,
                })
                .collect();
            driver::write_json(&rejected, &rejects)?;
            if let Some(p) = ifd_out {
                driver::write_json(&p, &model)?;
            }
            eprintln!(
                "validated: {} sound, {} rejected",
                sound.len(),
                rejects.len()
            );
            Ok(())
        }
        Command::Graam { sound, ifd, out } => {
            let model: IfdModel = driver::read_json(&ifd)?;
            let corpus: Vec<PrimaryApiUsageGraph> = read_json_dir(&sound)?;
            for g in &corpus {
                let m = graam::build_graam(g, &model)?;
                driver::write_json(&out.join(graam_file_name(&m)), &m)?;
            }
            eprintln!("built {} usage model(s)", corpus.len());
            Ok(())
        }
        Command::Train {
            graams,
            out,
            curve,
            name,
        } => {
            let corpus: Vec<Graam> = read_json_dir(&graams)?;
            let (fspec, learning) = fspec::train(&name, &corpus);
            driver::write_json(&out, &fspec)?;
            if let Some(curve_path) = curve {
                write_text(&curve_path, &learning.to_csv())?;
            }
            eprintln!(
                "trained on {} usage model(s): {} API nodes, {} edges",
                corpus.len(),
                fspec.api_count(),
                fspec.edges.len()
            );
            Ok(())
        }
        Command::Recommend {
            fspec,
            program,
            framework,
            task,
            entrypoint,
            k,
            format,
        } => {
            let fw = framework.load()?;
            let model: FSpec = driver::read_json(&fspec)?;
            let ifd_model = ifd::mine_ifd(&fw);
            let facts = load_partial_program(&program, &fw, entrypoint)?;
            let usages = driver::extract_usages(&facts, &fw)?;
            let usage = usages.first().ok_or_else(|| {
                CoreError::Analysis(specminer_core::error::AnalysisError::EmptyUsage(
                    facts.program.clone(),
                ))
            })?;
            let g = graam::build_graam(usage, &ifd_model)?;
            let output = match Task::from(task) {
                Task::Next => Output::Recommendations(recommend::next_api(&model, &g, k)?),
                Task::Missed => Output::Recommendations(recommend::detect_missed(&model, &g, k)?),
                Task::Misuse => {
                    let (misuses, fixes) = recommend::detect_misuse(&model, &ifd_model, &g, k);
                    Output::Misuses { misuses, fixes }
                }
            };
            print_output(output, format);
            Ok(())
        }
        Command::Eval {
            corpus,
            framework,
            task,
            seed,
            split,
            k,
            out,
            name,
        } => {
            let fw = framework.load()?;
            let ifd_model = ifd::mine_ifd(&fw);
            let graams: Vec<Graam> = read_json_dir(&corpus)?;
            let report =
                eval::evaluate(&name, &graams, &ifd_model, Task::from(task), split, seed, k)?;
            write_text(&out, &report.to_csv())?;
            eprintln!(
                "evaluated {} case(s); top-1 {:.3}, top-{} {:.3}",
                report.n_cases,
                report.accuracy_at(1),
                k,
                report.accuracy_at(k)
            );
            Ok(())
        }
        Command::Pipeline {
            manifest,
            workspace,
        } => run_pipeline(&manifest, workspace),
    }
}

enum Output {
    Recommendations(Vec<Recommendation>),
    Misuses {
        misuses: Vec<recommend::Misuse>,
        fixes: Vec<Recommendation>,
    },
}

fn print_output(output: Output, format: Format) {
    match (output, format) {
        (Output::Recommendations(recs), Format::Json) => {
            println!("{}", serde_json::to_string_pretty(&recs).unwrap());
        }
        (Output::Recommendations(recs), Format::Table) => {
            print_table(&recs);
        }
        (Output::Misuses { misuses, fixes }, Format::Json) => {
            let v = serde_json::json!({ "misuses": misuses, "fixes": fixes });
            println!("{}", serde_json::to_string_pretty(&v).unwrap());
        }
        (Output::Misuses { misuses, fixes }, Format::Table) => {
            if misuses.is_empty() {
                println!("no misuse detected");
            }
            for m in &misuses {
                match m {
                    recommend::Misuse::OrderViolation { violation } => println!(
                        "misuse: {} called before {} (field {}.{})",
                        violation.reader, violation.writer, violation.field_owner, violation.field
                    ),
                    recommend::Misuse::NotEmbeddable { detail } => {
                        println!("misuse: {detail}");
                    }
                }
            }
            print_table(&fixes);
        }
    }
}

fn print_table(recs: &[Recommendation]) {
    println!("{:<4} {:<8} {:<44} {:<8}", "rank", "action", "api", "score");
    for r in recs {
        let action = format!("{:?}", r.action).to_lowercase();
        let api = match &r.with {
            Some(w) => format!("{} (with {})", r.api.describe(), w.describe()),
            None => r.api.describe(),
        };
        println!("{:<4} {:<8} {:<44} {:<8}", r.rank, action, api, r.score);
    }
}

fn run_pipeline(manifest_path: &Path, workspace: Option<PathBuf>) -> Result<(), CoreError> {
    let body = std::fs::read_to_string(manifest_path).map_err(|e| CoreError::Io {
        path: manifest_path.display().to_string(),
        source: e,
    })?;
    let manifest: Manifest = toml::from_str(&body).map_err(|e| CoreError::Io {
        path: manifest_path.display().to_string(),
        source: std::io::Error::new(std::io::ErrorKind::InvalidData, e.to_string()),
    })?;
    let base = manifest_path.parent().unwrap_or(Path::new("."));
    let ws = workspace.unwrap_or_else(|| base.join(&manifest.workspace));

    let fw_dir = base.join(&manifest.framework.dir);
    if !fw_dir.is_dir() {
        return Err(CoreError::Io {
            path: fw_dir.display().to_string(),
            source: std::io::Error::new(
                std::io::ErrorKind::NotFound,
                "framework directory not found",
            ),
        });
    }
    eprintln!(
        "[1/5] parsing framework and {} program(s)",
        manifest.programs.len()
    );
    let fw = driver::load_framework(&fw_dir, &manifest.framework.name)?;
    driver::write_json(&ws.join("fw.json"), &fw)?;

    let mut usages: Vec<PrimaryApiUsageGraph> = Vec::new();
    for p in &manifest.programs {
        let dir = base.join(&p.dir);
        if !dir.is_dir() {
            return Err(CoreError::Io {
                path: dir.display().to_string(),
                source: std::io::Error::new(
                    std::io::ErrorKind::NotFound,
                    "program directory not found",
                ),
            });
        }
        let facts = driver::load_program(&dir, &p.name, &fw, p.entrypoints.clone())?;
        driver::write_json(
            &ws.join("facts").join(format!("{}.json", sanitize(&p.name))),
            &facts,
        )?;
        let extracted = driver::extract_usages(&facts, &fw)?;
        eprintln!("[2/5] {}: {} usage graph(s)", p.name, extracted.len());
        for g in &extracted {
            driver::write_json(&ws.join("usages").join(usage_file_name(g)), g)?;
        }
        usages.extend(extracted);
    }

    let ifd_model = ifd::mine_ifd(&fw);
    driver::write_json(&ws.join("ifd.json"), &ifd_model)?;
    let (sound, unsound) = ifd::filter_sound(usages, &ifd_model);
    eprintln!(
        "[3/5] validation: {} sound, {} rejected",
        sound.len(),
        unsound.len()
    );
    for g in &sound {
        driver::write_json(&ws.join("sound").join(usage_file_name(g)), g)?;
    }
    let rejects: Vec<RejectedUsage> = unsound
        .into_iter()
        .map(|(g, violations)| RejectedUsage {
            program: g.program,
            entrypoint: g.entrypoint,
            violations,
        })
        .collect();
    driver::write_json(&ws.join("unsound.json"), &rejects)?;

    let mut models = Vec::new();
    for g in &sound {
        let m = graam::build_graam(g, &ifd_model)?;
        driver::write_json(&ws.join("graams").join(graam_file_name(&m)), &m)?;
        models.push(m);
    }
    eprintln!("[4/5] built {} usage model(s)", models.len());

    let (fspec, curve) = fspec::train(&manifest.framework.name, &models);
    driver::write_json(&ws.join("fspec.json"), &fspec)?;
    write_text(&ws.join("curve.csv"), &curve.to_csv())?;
    eprintln!(
        "[5/5] trained specification: {} API nodes, {} edges",
        fspec.api_count(),
        fspec.edges.len()
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help and version requests are not usage errors
            if e.use_stderr() {
                eprintln!("{e}");
                return ExitCode::from(EXIT_USAGE);
            }
            print!("{e}");
            return ExitCode::SUCCESS;
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            if e.is_input_error() {
                ExitCode::from(EXIT_INPUT)
            } else {
                ExitCode::from(EXIT_ANALYSIS)
            }
        }
    }
}
