use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use supermech::frontend::report::{run_pipeline, PipelineOptions, Stage};
use supermech::frontend::{parse_model, FrontendError};
use supermech::numeric_flow::parse_flow_config;

#[derive(Parser)]
#[command(name = "supermech", version, about = "Constraint and Hamilton-Jacobi analysis of singular Lagrangians over even and odd variables")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Analyze one model file.
    Analyze {
        file: PathBuf,
        #[arg(long, value_enum, default_value = "all")]
        stage: StageArg,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
        /// Flow path configuration; defaults to `<model>.path` next to the model.
        #[arg(long)]
        path: Option<PathBuf>,
        #[arg(long, default_value_t = 32)]
        max_closure_rounds: usize,
        #[arg(long, default_value_t = 1e-8)]
        tolerance: f64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum StageArg {
    Legendre,
    Dirac,
    Hj,
    Flow,
    All,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Structured,
}

const EXIT_MODEL: u8 = 2;
const EXIT_INCONSISTENT: u8 = 3;

fn read(path: &Path) -> Result<String, FrontendError> {
    std::fs::read_to_string(path)
        .map_err(|e| FrontendError::Io { path: path.display().to_string(), message: e.to_string() })
}

fn fail(err: &FrontendError, format: Format) -> ExitCode {
    if format == Format::Structured {
        let body = serde_json::json!({ "error": { "kind": err.kind(), "message": err.to_string() } });
        println!("{}", serde_json::to_string_pretty(&body).expect("json"));
    } else {
        eprintln!("error: {err}");
    }
    ExitCode::from(if err.is_inconsistency() { EXIT_INCONSISTENT } else { EXIT_MODEL })
}

fn main() -> ExitCode {
    let Command::Analyze { file, stage, format, path, max_closure_rounds, tolerance } = Cli::parse().command;
    let stage = match stage {
        StageArg::Legendre => Stage::Legendre,
        StageArg::Dirac => Stage::Dirac,
        StageArg::Hj => Stage::Hj,
        StageArg::Flow => Stage::Flow,
        StageArg::All => Stage::All,
    };
    let run = || -> Result<_, FrontendError> {
        let doc = parse_model(&read(&file)?)?;
        let sibling = file.with_extension("path");
        let cfg_path = match (&path, stage) {
            (Some(p), _) => Some(p.clone()),
            (None, Stage::Flow | Stage::All) if sibling.exists() => Some(sibling),
            (None, Stage::Flow) => {
                return Err(FrontendError::Io { path: sibling.display().to_string(), message: "flow stage needs --path".into() })
            }
            _ => None,
        };
        let flow = match cfg_path {
            Some(p) => Some(parse_flow_config(&read(&p)?)?),
            None => None,
        };
        run_pipeline(&doc, &PipelineOptions { stage, max_closure_rounds, tolerance, flow })
    };
    match run() {
        Ok(report) => {
            match format {
                Format::Text => print!("{}", report.to_text()),
                Format::Structured => print!("{}", report.to_json()),
            }
            let findings = report.findings();
            if findings.is_empty() {
                ExitCode::SUCCESS
            } else {
                for f in findings {
                    eprintln!("finding: {f}");
                }
                ExitCode::from(EXIT_INCONSISTENT)
            }
        }
        Err(e) => fail(&e, format),
    }
}
