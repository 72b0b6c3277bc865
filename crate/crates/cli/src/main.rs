use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use exposure_core::annotations::FisherMode;
use exposure_core::io::write_synth;
use exposure_core::pipeline::{run_pipeline, run_until, IndexName, PipelineConfig, Stage};
use exposure_core::synth::{generate, PlantedHierarchy};

#[derive(Parser)]
#[command(name = "exposure", version, about = "Multi-scale selective-exposure analysis of follow networks")]
struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Read and validate the follow network (network.json).
    Ingest(RunArgs),
    /// Influencer co-follow projection (projection.csv).
    Project(RunArgs),
    /// Markov-time sweep and scale selection (scales.json, nvi_curve.csv).
    Scan(RunArgs),
    /// Per-scale community and consumer indices (indices_*.csv).
    Indices(RunArgs),
    /// Fisher test on annotation contingency tables (contingency.json).
    Contingency(RunArgs),
    /// Regressions of consumer indices on survey attributes (report.json, residuals.csv).
    Regress(RunArgs),
    /// Alluvial-diagram data across retained scales (alluvial.json).
    ExportAlluvial(RunArgs),
    /// Every stage end to end.
    Run(RunArgs),
    /// Write a planted-hierarchy fixture.
    Synth(SynthArgs),
}

#[derive(Args)]
struct RunArgs {
    /// TOML or JSON run configuration; when given it defines the whole run
    /// and the flags below are ignored.
    #[arg(long)]
    config: Option<PathBuf>,
    /// consumer_id,influencer_id edge list.
    #[arg(long)]
    follows: Option<PathBuf>,
    /// influencer_id,dimension,label records.
    #[arg(long)]
    annotations: Option<PathBuf>,
    /// influencer_id,url shared links.
    #[arg(long)]
    links: Option<PathBuf>,
    /// consumer_id plus one numeric column per attribute.
    #[arg(long)]
    survey: Option<PathBuf>,
    /// Influencer account metadata for the influencer filter.
    #[arg(long)]
    accounts: Option<PathBuf>,
    /// Survey variable groups for PCA reduction (JSON).
    #[arg(long)]
    groups: Option<PathBuf>,
    /// Output directory [default: out].
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for the sweep and Monte Carlo tests.
    #[arg(long)]
    seed: Option<u64>,
    /// Markov times on the sweep grid.
    #[arg(long)]
    n_scale: Option<usize>,
    /// Optimizer runs per Markov time.
    #[arg(long)]
    n_tries: Option<usize>,
    /// log10 of the smallest Markov time.
    #[arg(long, allow_hyphen_values = true)]
    min_scale: Option<f64>,
    /// log10 of the largest Markov time.
    #[arg(long, allow_hyphen_values = true)]
    max_scale: Option<f64>,
    /// Annotation dimension holding identity labels.
    #[arg(long)]
    identity_dimension: Option<String>,
    /// Minimum shared links for information diversity.
    #[arg(long)]
    min_links: Option<usize>,
    /// Annotation dimensions to cross-tabulate, e.g. `--dims ideology,role`.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    dims: Option<Vec<String>>,
    /// Monte Carlo draws instead of exact enumeration.
    #[arg(long)]
    draws: Option<u64>,
    /// Regression responses.
    #[arg(long, value_enum, value_delimiter = ',', num_args = 1..)]
    responses: Option<Vec<Response>>,
    /// Fit every candidate instead of BIC forward selection.
    #[arg(long)]
    no_selection: bool,
    /// Standardized-residual cutoff for the sensitivity rerun.
    #[arg(long)]
    sensitivity_threshold: Option<f64>,
    /// Skip the regression stage of `run`.
    #[arg(long)]
    no_regression: bool,
    /// Skip the alluvial export of `run`.
    #[arg(long)]
    no_alluvial: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Response {
    Co,
    IddLabeled,
    IddProbability,
    Infd,
    Si,
    Ci,
}

impl From<Response> for IndexName {
    fn from(r: Response) -> Self {
        match r {
            Response::Co => IndexName::Co,
            Response::IddLabeled => IndexName::IddLabeled,
            Response::IddProbability => IndexName::IddProbability,
            Response::Infd => IndexName::Infd,
            Response::Si => IndexName::Si,
            Response::Ci => IndexName::Ci,
        }
    }
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, value_enum, default_value_t = Preset::ThreeLevel)]
    preset: Preset,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    ThreeLevel,
    TwoLevel,
}

impl Preset {
    fn name(self) -> &'static str {
        match self {
            Preset::ThreeLevel => "three-level",
            Preset::TwoLevel => "two-level",
        }
    }
}

impl RunArgs {
    fn flags_given(&self) -> bool {
        self.follows.is_some()
            || self.annotations.is_some()
            || self.links.is_some()
            || self.survey.is_some()
            || self.accounts.is_some()
            || self.groups.is_some()
            || self.out.is_some()
            || self.seed.is_some()
            || self.n_scale.is_some()
            || self.n_tries.is_some()
            || self.min_scale.is_some()
            || self.max_scale.is_some()
            || self.identity_dimension.is_some()
            || self.min_links.is_some()
            || self.dims.is_some()
            || self.draws.is_some()
            || self.responses.is_some()
            || self.sensitivity_threshold.is_some()
            || self.no_selection
            || self.no_regression
            || self.no_alluvial
    }

    fn into_config(self) -> Result<PipelineConfig> {
        if let Some(path) = &self.config {
            if self.flags_given() {
                log::warn!("--config given; other run flags are ignored");
            }
            return Ok(PipelineConfig::from_file(path)?);
        }
        let Some(follows) = self.follows else {
            bail!("either --follows or --config is required");
        };
        let mut cfg = PipelineConfig::new(follows, self.out.unwrap_or_else(|| PathBuf::from("out")));
        cfg.inputs.annotations = self.annotations;
        cfg.inputs.links = self.links;
        cfg.inputs.survey = self.survey;
        cfg.inputs.accounts = self.accounts;
        cfg.inputs.groups = self.groups;
        if let Some(seed) = self.seed {
            cfg.sweep.base_seed = seed;
            cfg.contingency.seed = seed;
        }
        if let Some(n) = self.n_scale {
            cfg.sweep.n_scale = n;
        }
        if let Some(n) = self.n_tries {
            cfg.sweep.n_tries = n;
        }
        if let Some(v) = self.min_scale {
            cfg.sweep.min_scale = v;
        }
        if let Some(v) = self.max_scale {
            cfg.sweep.max_scale = v;
        }
        if let Some(d) = self.identity_dimension {
            cfg.identity.dimension = d;
        }
        if let Some(n) = self.min_links {
            cfg.information.min_links = n;
        }
        if let Some(dims) = self.dims {
            let [a, b]: [String; 2] = dims
                .try_into()
                .map_err(|d: Vec<String>| anyhow::anyhow!("--dims takes exactly two dimensions, got {}", d.len()))?;
            cfg.contingency.pairs = vec![[a, b]];
        }
        if let Some(draws) = self.draws {
            cfg.contingency.mode = FisherMode::MonteCarlo {
                draws,
                seed: cfg.contingency.seed,
            };
        }
        if let Some(r) = self.responses {
            cfg.regression.responses = r.into_iter().map(IndexName::from).collect();
        }
        if self.no_selection {
            cfg.regression.bic_selection = false;
        }
        if let Some(t) = self.sensitivity_threshold {
            cfg.regression.sensitivity_threshold = Some(t);
        }
        cfg.regression.enabled = !self.no_regression;
        cfg.alluvial = !self.no_alluvial;
        Ok(cfg)
    }
}

/// Writes pretty JSON to stdout; a closed pipe (`| head`) is not an error.
fn print_json<T: serde::Serialize + ?Sized>(value: &T) -> Result<()> {
    let mut out = std::io::stdout().lock();
    let written = serde_json::to_writer_pretty(&mut out, value)
        .map_err(std::io::Error::from)
        .and_then(|()| writeln!(out));
    match written {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        other => Ok(other?),
    }
}

fn stage_command(stage: Stage, args: RunArgs) -> Result<()> {
    let cfg = args.into_config()?;
    let (manifest, state) = run_until(&cfg, stage)?;
    if stage == Stage::Contingency {
        // the test results are the useful output here
        print_json(&state.contingency)?;
    } else {
        print_json(&manifest)?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Ingest(a) => stage_command(Stage::Ingest, a),
        Command::Project(a) => stage_command(Stage::Project, a),
        Command::Scan(a) => stage_command(Stage::Scan, a),
        Command::Indices(a) => stage_command(Stage::Indices, a),
        Command::Contingency(a) => stage_command(Stage::Contingency, a),
        Command::Regress(a) => stage_command(Stage::Regress, a),
        Command::ExportAlluvial(a) => stage_command(Stage::ExportAlluvial, a),
        Command::Run(a) => {
            let cfg = a.into_config()?;
            let (manifest, _) = run_pipeline(&cfg)?;
            print_json(&manifest)
        }
        Command::Synth(a) => {
            let data = generate(&PlantedHierarchy::preset(a.preset.name(), a.seed)?)?;
            for name in write_synth(&a.out, &data)? {
                println!("{}", a.out.join(name).display());
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            // core errors already carry their cause in the message
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
