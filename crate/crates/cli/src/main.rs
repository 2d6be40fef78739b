//! `msgnav`: run navigation episodes, replay graph construction, inspect viewpoint
//! scores and summarise query statistics.

mod config;
mod error;
mod graph;
mod run;
mod stats;
mod viewpoint;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use crate::error::CliError;

#[derive(Parser)]
#[command(name = "msgnav", version, about = "Scene-graph object-goal navigation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Switch {
    On,
    Off,
}

#[derive(Subcommand)]
enum Command {
    /// Run episodes and write results, transcripts, metrics and a summary.
    Run(RunArgs),
    /// Replay a camera trajectory through a scene and write the resulting scene graph.
    Graph {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long)]
        trajectory: PathBuf,
        #[arg(long, default_value = "msgnav-graph")]
        out: PathBuf,
    },
    /// Score viewpoint candidates around one scene object.
    Viewpoint {
        #[arg(long)]
        scene: PathBuf,
        /// Scene object id.
        #[arg(long)]
        target: u64,
        /// JSON file with viewpoint parameters.
        #[arg(long)]
        params: Option<PathBuf>,
        /// Write the full candidate report as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
        /// Write a CSV of score against distance for plotting.
        #[arg(long)]
        plot: Option<PathBuf>,
    },
    /// Images-per-query and token statistics over episode transcripts.
    Stats {
        /// Transcript files, transcript directories or run output directories.
        #[arg(required = true)]
        paths: Vec<PathBuf>,
        #[arg(long)]
        json: Option<PathBuf>,
    },
}

#[derive(clap::Args)]
struct RunArgs {
    /// Scene file; repeat for several scenes.
    #[arg(long)]
    scene: Vec<PathBuf>,
    /// Run the generated last-mile suite with this many variants per template.
    #[arg(long, value_name = "VARIANTS")]
    last_mile: Option<usize>,
    #[arg(long, default_value_t = 7, requires = "last_mile")]
    last_mile_seed: u64,
    /// Goal index within each scene; every goal when omitted.
    #[arg(long)]
    goal: Option<usize>,
    /// Keep one agent per scene across its goals.
    #[arg(long)]
    lifelong: bool,
    /// `oracle`, `mock:<script.json>` or `http:<endpoint>`.
    #[arg(long)]
    reasoner: Option<String>,
    /// Model name for an http reasoner.
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    vvd: Option<Switch>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON run configuration; its values override the flags.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl RunArgs {
    fn flags(&self) -> Map<String, Value> {
        let mut m = Map::new();
        if !self.scene.is_empty() {
            m.insert("scenes".into(), json!(self.scene));
        }
        if let Some(v) = self.last_mile {
            m.insert("last_mile".into(), json!({ "variants": v, "seed": self.last_mile_seed }));
        }
        if let Some(g) = self.goal {
            m.insert("goal".into(), json!(g));
        }
        if self.lifelong {
            m.insert("lifelong".into(), json!(true));
        }
        if let Some(r) = &self.reasoner {
            m.insert("reasoner".into(), json!(r));
        }
        if let Some(model) = &self.model {
            m.insert("http".into(), json!({ "model": model }));
        }
        if let Some(o) = &self.out {
            m.insert("out".into(), json!(o));
        }
        let mut episode = Map::new();
        if let Some(v) = self.vvd {
            episode.insert("use_vvd".into(), json!(matches!(v, Switch::On)));
        }
        if let Some(s) = self.seed {
            episode.insert("seed".into(), json!(s));
        }
        if !episode.is_empty() {
            m.insert("episode".into(), Value::Object(episode));
        }
        m
    }
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run(args) => {
            let config = config::resolve(args.flags(), args.config.as_deref())?;
            let metrics = run::cmd_run(&config)?;
            print!("{}", error::read_text(&config.out.join("summary.txt"))?);
            if metrics.reasoner_failures > 0 {
                return Err(CliError::Reasoner(format!(
                    "{} episode(s) ended on a reasoner error; outputs written to {}",
                    metrics.reasoner_failures,
                    config.out.display()
                )));
            }
            Ok(())
        }
        Command::Graph { scene, trajectory, out } => graph::cmd_graph(&scene, &trajectory, &out).map(drop),
        Command::Viewpoint { scene, target, params, json, plot } => {
            let report = viewpoint::cmd_viewpoint(&scene, target, params.as_deref(), json.as_deref(), plot.as_deref())?;
            print!("{}", viewpoint::table_text(&report));
            Ok(())
        }
        Command::Stats { paths, json } => {
            let report = stats::cmd_stats(&paths, json.as_deref())?;
            print!("{}", stats::report_text(&report));
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
