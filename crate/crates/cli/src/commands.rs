//! The `whatif` subcommands.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand};
use whatif_core::agent::{
    commander_run_observed, ChatProvider, MockProvider, SessionOutcome, ShotMode,
};
use whatif_core::bench::{judge_run, load_dataset, run_accuracy, BenchReport, CommanderRunner};
use whatif_core::graph::decision_information;
use whatif_core::model::{format_number, parse_model, LinearModel};
use whatif_core::solver::{solve_milp, Solution, DEFAULT_NODE_LIMIT};

use crate::config::WorkbenchConfig;
use crate::provider::HttpProvider;
use crate::service::{self, AppState};

#[derive(Debug, Parser)]
#[command(
    name = "whatif",
    version,
    about = "What-if analysis for linear optimization models"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve a model and print the optimum.
    Solve {
        model: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Decision information between two models.
    Diff {
        /// The original model.
        model_a: PathBuf,
        /// The updated model.
        model_b: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Answer one what-if query.
    Ask(AskArgs),
    /// Accuracy (and judge scores) over a benchmark dataset.
    Bench(BenchArgs),
    /// Run the HTTP service.
    Serve(ServeArgs),
}

/// Where chat completions come from.
#[derive(Debug, Clone, Args)]
pub struct ProviderArgs {
    /// Scripted responses: a JSON file or a directory of them. Repeat to
    /// layer scripts; later ones override earlier ones step by step.
    #[arg(long, value_name = "SCRIPTS", conflicts_with = "provider")]
    pub mock: Vec<PathBuf>,
    /// Workbench config (TOML) for a live provider; the key is read from EOR_PROVIDER_KEY.
    #[arg(long, value_name = "CONFIG")]
    pub provider: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AskArgs {
    pub model: PathBuf,
    #[arg(long)]
    pub query: String,
    #[command(flatten)]
    pub source: ProviderArgs,
    /// One-shot prompting, with the worked example read from a file if given.
    #[arg(long, value_name = "EXAMPLE", num_args = 0..=1)]
    pub one_shot: Option<Option<PathBuf>>,
    #[arg(long)]
    pub debug_limit: Option<u32>,
    #[arg(long)]
    pub temperature: Option<f64>,
    /// Session tag the provider sees; selects the script entry in mock mode.
    #[arg(long, default_value = "default")]
    pub session: String,
    /// Print the whole outcome as JSON.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    pub dataset: PathBuf,
    #[command(flatten)]
    pub source: ProviderArgs,
    #[arg(long, default_value_t = 4)]
    pub parallel: usize,
    /// Method label shown to the judge.
    #[arg(long)]
    pub label: Option<String>,
    #[arg(long)]
    pub no_judge: bool,
    #[arg(long)]
    pub debug_limit: Option<u32>,
    #[arg(long)]
    pub temperature: Option<f64>,
    /// Write the full report as JSON to this file.
    #[arg(long, value_name = "FILE")]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[command(flatten)]
    pub source: ProviderArgs,
    #[arg(long)]
    pub host: Option<String>,
    #[arg(long)]
    pub port: Option<u16>,
    /// Directory for per-session journals.
    #[arg(long, value_name = "DIR")]
    pub journal: Option<PathBuf>,
}

/// Parses arguments, runs the command, and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let stdout = std::io::stdout();
    match run(cli, &mut stdout.lock()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    }
}

/// Runs a parsed command, writing results to `out`. Returns the exit code for
/// outcomes that are not errors in themselves, such as a failed session.
pub fn run(cli: Cli, out: &mut dyn Write) -> anyhow::Result<i32> {
    match cli.command {
        Command::Solve { model, json } => {
            let m = read_model(&model)?;
            let s = solve_milp(&m, DEFAULT_NODE_LIMIT);
            if json {
                writeln!(
                    out,
                    "{}",
                    serde_json::to_string_pretty(&service::served_solution(s))?
                )?;
            } else {
                write!(out, "{}", solution_text(&s))?;
            }
            Ok(0)
        }
        Command::Diff {
            model_a,
            model_b,
            json,
        } => {
            let a = read_model(&model_a)?;
            let b = read_model(&model_b)?;
            let report = decision_information(&a, &b);
            if json {
                writeln!(out, "{}", serde_json::to_string_pretty(&report)?)?;
            } else {
                writeln!(out, "{}", report.summary())?;
            }
            Ok(0)
        }
        Command::Ask(args) => ask(args, out),
        Command::Bench(args) => bench(args, out),
        Command::Serve(args) => serve(args),
    }
}

/// `Optimal 200000` followed by one `name = value` line per variable.
pub fn solution_text(s: &Solution) -> String {
    let mut text = format!("{:?}", s.status);
    if let Some(obj) = s.objective {
        text += &format!(" {}", format_number(obj));
    }
    text.push('\n');
    for (name, v) in &s.assignment {
        text += &format!("{name} = {}\n", format_number(*v));
    }
    text
}

fn read_model(path: &Path) -> anyhow::Result<LinearModel> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_model(&text).map_err(|e| anyhow!("{}: {e}", path.display()))
}

fn load_config(args: &ProviderArgs) -> anyhow::Result<WorkbenchConfig> {
    match &args.provider {
        Some(path) => WorkbenchConfig::load(path),
        None => Ok(WorkbenchConfig::default()),
    }
}

fn writer_provider(
    args: &ProviderArgs,
    config: &WorkbenchConfig,
) -> anyhow::Result<Arc<dyn ChatProvider>> {
    if args.mock.is_empty() {
        Ok(Arc::new(HttpProvider::from_env(
            config.agent.provider.clone(),
        )?))
    } else {
        Ok(Arc::new(MockProvider::load_layered(&args.mock)?))
    }
}

fn ask(args: AskArgs, out: &mut dyn Write) -> anyhow::Result<i32> {
    let model = read_model(&args.model)?;
    let mut config = load_config(&args.source)?;
    let agent = &mut config.agent;
    if let Some(example) = &args.one_shot {
        agent.shot_mode = ShotMode::One;
        if let Some(path) = example {
            agent.example_qa = Some(
                std::fs::read_to_string(path)
                    .with_context(|| format!("reading {}", path.display()))?,
            );
        }
    }
    if let Some(n) = args.debug_limit {
        agent.debug_limit = n;
    }
    if let Some(t) = args.temperature {
        agent.temperature = t;
    }
    let provider = writer_provider(&args.source, &config)?;
    let outcome = commander_run_observed(
        &model,
        &args.query,
        &args.session,
        &config.agent,
        provider.as_ref(),
        &mut |_| {},
    );
    if args.json {
        writeln!(out, "{}", serde_json::to_string_pretty(&outcome)?)?;
    } else {
        write!(out, "{}", outcome_text(&outcome))?;
    }
    if let Some(f) = &outcome.failure {
        eprintln!("query failed ({}): {}", f.category, f.detail);
        return Ok(1);
    }
    Ok(0)
}

fn objective_text(s: Option<&Solution>) -> String {
    match s {
        Some(s) => match s.objective {
            Some(v) => format!("{:?} {}", s.status, format_number(v)),
            None => format!("{:?}", s.status),
        },
        None => "-".into(),
    }
}

/// Patch, both objectives, decision information, rating and explanations.
pub fn outcome_text(o: &SessionOutcome) -> String {
    let mut text = String::new();
    if let Some(p) = &o.patch {
        text += &format!("patch:\n{}\n", p.to_document());
    }
    text += &format!("original: {}\n", objective_text(Some(&o.original_solution)));
    text += &format!("updated: {}\n", objective_text(o.updated_solution.as_ref()));
    if let Some(r) = &o.ged_report {
        text += &format!("{}\n", r.headline());
    }
    if let Some(r) = o.impact_rating {
        text += &format!("impact rating: {r}\n");
    }
    if let Some(ec) = &o.explanation_correctness {
        text += &format!("\nexplanation of the updated model:\n{ec}\n");
    }
    if let Some(er) = &o.explanation_results {
        text += &format!("\nexplanation of the results:\n{er}\n");
    }
    if let Some(f) = &o.failure {
        text += &format!(
            "\nfailed: {} after {} debug rounds\n",
            f.category, o.retry_count
        );
    }
    text
}

fn bench(args: BenchArgs, out: &mut dyn Write) -> anyhow::Result<i32> {
    let dataset = load_dataset(&args.dataset)?;
    let mut config = load_config(&args.source)?;
    if let Some(n) = args.debug_limit {
        config.agent.debug_limit = n;
    }
    if let Some(t) = args.temperature {
        config.agent.temperature = t;
    }
    if args.parallel == 0 {
        bail!("--parallel must be at least 1");
    }
    let provider = writer_provider(&args.source, &config)?;
    let runner = CommanderRunner {
        config: config.agent.clone(),
        provider: provider.clone(),
    };
    let eval = run_accuracy(&dataset, &runner, args.parallel);
    let judge = if args.no_judge {
        None
    } else {
        let judge_provider: Arc<dyn ChatProvider> = if args.source.mock.is_empty() {
            Arc::new(HttpProvider::from_env(config.judge.provider.clone())?)
        } else {
            provider
        };
        let label = args.label.as_deref().unwrap_or(&config.judge.label);
        Some(judge_run(&eval, judge_provider.as_ref(), label))
    };
    let report = BenchReport { eval, judge };
    write!(out, "{}", report.to_table())?;
    if let Some(path) = &args.json {
        std::fs::write(path, serde_json::to_string_pretty(&report)?)
            .with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(0)
}

fn serve(args: ServeArgs) -> anyhow::Result<i32> {
    let config = load_config(&args.source)?;
    let provider = writer_provider(&args.source, &config)?;
    let host = args.host.unwrap_or(config.service.host.clone());
    let port = args.port.unwrap_or(config.service.port);
    let journal = args.journal.or(config.service.journal_dir.clone());
    let state = AppState::new(provider, config.agent, journal);
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(service::serve(state, &host, port))?;
    Ok(0)
}
