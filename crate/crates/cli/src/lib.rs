//! Batch driver for the workflow: one subcommand per stage, plus the
//! service launcher. Output is JSON on stdout; diagnostics go to stderr.
//!
//! Exit codes: 0 success (for `verify`, no Errors), 1 `verify` found Errors,
//! 2 usage error or tool failure.

use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Deserialize;
use serde::Serialize;
use workbench_core::store::{load_project, save_project};
use workbench_core::{Direction, DocFormat, EditOp, Project, RefinementEdit, Uid};
use workbench_synth::graph_to_dsm;
use workbench_verify::VerifyPolicy;
use workbench_workflow::{self as wf, AdapterChoice, WorkflowError};

#[derive(Debug, Parser)]
#[command(name = "workbench", version, about = "Requirements-to-architecture digital thread")]
pub struct Cli {
    /// Project file.
    #[arg(
        long,
        global = true,
        env = "WORKBENCH_PROJECT",
        default_value = "project.thread.json"
    )]
    pub project: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Create an empty project file.
    Init {
        /// Overrides --project.
        path: Option<PathBuf>,
        #[arg(long)]
        force: bool,
    },
    /// Add a requirements document.
    Ingest {
        file: PathBuf,
        /// markdown or text; taken from the extension when absent.
        #[arg(long)]
        format: Option<DocFormat>,
    },
    /// Extract requirements from every document.
    Extract {
        #[arg(long, default_value = "baseline")]
        adapter: AdapterChoice,
        /// Replay log to read (replay) or append to (live).
        #[arg(long, env = "WORKBENCH_REPLAY_LOG")]
        replay_log: Option<PathBuf>,
    },
    /// Identify components and interactions from the requirements.
    Synthesize,
    Dsm {
        #[command(subcommand)]
        command: DsmCommand,
    },
    /// Apply refinement edits: an edit object or an array of them, inline or
    /// as a file path.
    Edit {
        #[arg(long)]
        json: String,
    },
    /// Nodes reachable from a uid over trace edges.
    Impact {
        uid: Uid,
        /// Comma-separated trace kinds; all kinds when absent.
        #[arg(long)]
        kinds: Option<String>,
        #[arg(long, default_value = "forward")]
        direction: Direction,
    },
    /// Run every verification phase and print the report.
    Verify {
        /// Extra constraint statements, one per line.
        #[arg(long)]
        constraints: Option<PathBuf>,
        /// Verification policy (JSON).
        #[arg(long)]
        policy: Option<PathBuf>,
        /// Also write the report here.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Attributes, tags, geometry links, constraints and state machines.
    Design {
        #[command(subcommand)]
        command: DesignCommand,
    },
    Geometry {
        #[command(subcommand)]
        command: GeometryCommand,
    },
    /// Serve the HTTP API.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        bind: SocketAddr,
        #[arg(long)]
        cors_origin: Vec<String>,
        #[arg(long)]
        policy: Option<PathBuf>,
        #[arg(long, env = "WORKBENCH_REPLAY_LOG")]
        replay_log: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
pub enum DsmCommand {
    /// Write the DSM as CSV (`-` for stdout).
    Export {
        #[arg(long)]
        csv: PathBuf,
    },
}

#[derive(Debug, Subcommand)]
pub enum DesignCommand {
    Apply { sheet: PathBuf },
}

#[derive(Debug, Subcommand)]
pub enum GeometryCommand {
    /// Register a STEP file.
    Add { file: PathBuf },
}

/// Edit input; author and timestamp may be left out.
#[derive(Deserialize)]
#[serde(untagged)]
enum EditInput {
    Many(Vec<EditItem>),
    One(EditItem),
}

#[derive(Deserialize)]
struct EditItem {
    #[serde(flatten)]
    op: EditOp,
    author: Option<String>,
    timestamp: Option<i64>,
}

/// `SOURCE_DATE_EPOCH` when set, so scripted runs stay reproducible.
fn now() -> i64 {
    if let Some(t) = std::env::var("SOURCE_DATE_EPOCH").ok().and_then(|v| v.parse().ok()) {
        return t;
    }
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map_or(0, |d| d.as_secs() as i64)
}

fn print_json(out: &mut dyn Write, v: &impl Serialize) -> Result<(), WorkflowError> {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    out.write_all(s.as_bytes())
        .map_err(|e| WorkflowError::io("<stdout>", e))
}

fn load(path: &Path) -> Result<Project, WorkflowError> {
    Ok(load_project(path)?)
}

fn save(project: &Project, path: &Path) -> Result<String, WorkflowError> {
    Ok(save_project(project, path, false)?)
}

fn parse_edits(arg: &str) -> Result<Vec<RefinementEdit>, WorkflowError> {
    let trimmed = arg.trim_start();
    let (text, origin) = if trimmed.starts_with('{') || trimmed.starts_with('[') {
        (arg.to_string(), "--json".to_string())
    } else {
        let p = Path::new(arg);
        (
            std::fs::read_to_string(p).map_err(|e| WorkflowError::io(p, e))?,
            arg.to_string(),
        )
    };
    let input: EditInput = wf::parse_json(&text).map_err(|(ptr, message)| WorkflowError::Json {
        path: format!("{origin}{ptr}"),
        message,
    })?;
    let items = match input {
        EditInput::Many(v) => v,
        EditInput::One(e) => vec![e],
    };
    Ok(items
        .into_iter()
        .map(|e| {
            RefinementEdit::new(
                e.op,
                e.author.unwrap_or_else(|| "cli".into()),
                e.timestamp.unwrap_or_else(now),
            )
        })
        .collect())
}

/// Runs one command. Returns the exit code.
pub fn execute(cli: Cli, out: &mut dyn Write) -> Result<i32, WorkflowError> {
    let path = cli.project;
    let dir = wf::project_dir(&path);
    match cli.command {
        Command::Init { path: p, force } => {
            let p = p.unwrap_or(path);
            if p.exists() && !force {
                return Err(WorkflowError::Usage(format!(
                    "{} already exists (use --force to overwrite)",
                    p.display()
                )));
            }
            let digest = save(&Project::new(), &p)?;
            print_json(out, &serde_json::json!({"project": p, "digest": digest}))?;
        }
        Command::Ingest { file, format } => {
            let mut p = load(&path)?;
            let uid = wf::ingest_file(&mut p, &file, format)?;
            save(&p, &path)?;
            print_json(out, &serde_json::json!({"document": uid}))?;
        }
        Command::Extract { adapter, replay_log } => {
            let mut p = load(&path)?;
            let a = wf::make_adapter(adapter, replay_log.as_deref())?;
            let created = wf::extract(&mut p, &a)?;
            save(&p, &path)?;
            print_json(out, &serde_json::json!({"adapter": a.name(), "requirements": created}))?;
        }
        Command::Synthesize => {
            let mut p = load(&path)?;
            let summary = wf::synthesize(&mut p)?;
            save(&p, &path)?;
            print_json(out, &summary)?;
        }
        Command::Dsm {
            command: DsmCommand::Export { csv },
        } => {
            let p = load(&path)?;
            let dsm = graph_to_dsm(&p.model, None)?;
            let names = p
                .model
                .components
                .iter()
                .map(|(u, c)| (u.clone(), c.name.clone()))
                .collect();
            let text = dsm.to_csv(&names)?;
            if csv.as_os_str() == "-" {
                out.write_all(text.as_bytes())
                    .map_err(|e| WorkflowError::io("<stdout>", e))?;
            } else {
                std::fs::write(&csv, text).map_err(|e| WorkflowError::io(&csv, e))?;
            }
        }
        Command::Edit { json } => {
            let mut p = load(&path)?;
            let edits = parse_edits(&json)?;
            let n = edits.len();
            for e in edits {
                wf::edit(&mut p, e)?;
            }
            save(&p, &path)?;
            print_json(out, &serde_json::json!({"applied": n, "journal": p.journal.len()}))?;
        }
        Command::Impact { uid, kinds, direction } => {
            let p = load(&path)?;
            let kinds = workbench_service::parse_kinds(kinds.as_deref()).map_err(WorkflowError::Usage)?;
            let set = p.model.impact_set(&uid, &kinds, direction)?;
            print_json(out, &set)?;
        }
        Command::Verify {
            constraints,
            policy,
            report,
        } => {
            let p = load(&path)?;
            let extra = match &constraints {
                Some(f) => wf::load_constraints(f)?,
                None => Vec::new(),
            };
            let policy = match &policy {
                Some(f) => wf::load_policy(f)?,
                None => VerifyPolicy::default(),
            };
            let r = wf::verify(&p, &dir, &extra, &policy);
            if let Some(f) = &report {
                let mut s = serde_json::to_string_pretty(&r).expect("serializable");
                s.push('\n');
                std::fs::write(f, s).map_err(|e| WorkflowError::io(f, e))?;
            }
            print_json(out, &r)?;
            return Ok(r.exit_code());
        }
        Command::Design {
            command: DesignCommand::Apply { sheet },
        } => {
            let mut p = load(&path)?;
            let s = wf::DesignSheet::load(&sheet)?;
            let summary = wf::apply_design(&mut p, &s, &wf::project_dir(&sheet), &dir)?;
            save(&p, &path)?;
            print_json(out, &summary)?;
        }
        Command::Geometry {
            command: GeometryCommand::Add { file },
        } => {
            let mut p = load(&path)?;
            let uid = wf::register_geometry(&mut p, &file, &dir)?;
            save(&p, &path)?;
            print_json(out, &serde_json::json!({"geometry": uid}))?;
        }
        Command::Serve {
            bind,
            cors_origin,
            policy,
            replay_log,
        } => {
            let config = workbench_service::ServiceConfig {
                project: path,
                policy: match &policy {
                    Some(f) => wf::load_policy(f)?,
                    None => VerifyPolicy::default(),
                },
                replay_log,
                cors_origins: cors_origin,
            };
            let rt = tokio::runtime::Runtime::new().map_err(|e| WorkflowError::io("<runtime>", e))?;
            rt.block_on(workbench_service::serve(config, bind))
                .map_err(|e| WorkflowError::Usage(e.to_string()))?;
        }
    }
    Ok(0)
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            if code == 0 {
                let _ = out.write_all(text.as_bytes());
            } else {
                let _ = err.write_all(text.as_bytes());
            }
            return code;
        }
    };
    match execute(cli, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            2
        }
    }
}
