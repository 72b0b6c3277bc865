//! End-to-end run: ingest → project → scan → hyper-cover → indices →
//! contingency → regress, with a content-hashed manifest of every artifact.

mod alluvial;

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::annotations::{
    contingency, filter_influencers, fisher_exact, AnnotationTable, ContingencyTable, FisherMode, FisherResult,
    InfluencerFilterConfig,
};
use crate::error::{Error, Result};
use crate::graph::{hyper_cover, project, BipartiteNetwork, HyperCover, Side, WeightedGraph};
use crate::indices::{DomainShares, IndexInputs, IndexTable, InfoThresholds, LabelSet};
use crate::io;
use crate::scales::{scan_scales, ScaleSweepResult, SweepConfig};
use crate::stats::{
    bic_forward, pca_reduce, sensitivity_rerun, unit_interval_transform, Family, RegressionData, RegressionReport,
    RegressionSpec, SubDimension, SurveyTable, VariableGroup,
};

pub use alluvial::{export_alluvial, AlluvialCommunity, AlluvialExport, AlluvialFlow, AlluvialLevel, LabelSummary};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputPaths {
    pub follows: PathBuf,
    #[serde(default)]
    pub annotations: Option<PathBuf>,
    #[serde(default)]
    pub links: Option<PathBuf>,
    #[serde(default)]
    pub survey: Option<PathBuf>,
    /// Account metadata; when present the influencer filter is applied.
    #[serde(default)]
    pub accounts: Option<PathBuf>,
    #[serde(default)]
    pub groups: Option<PathBuf>,
}

/// Annotation dimension and label universe used for identity diversity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IdentityConfig {
    pub dimension: String,
    pub labels: Vec<String>,
}

impl Default for IdentityConfig {
    fn default() -> Self {
        IdentityConfig {
            dimension: "ideology".into(),
            labels: ["Left", "Right", "Center"].map(String::from).to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContingencyConfig {
    /// Dimension pairs to test; empty means every pair of annotated dimensions.
    pub pairs: Vec<[String; 2]>,
    pub mode: FisherMode,
    /// Monte Carlo draws used when exact enumeration exceeds its bound.
    pub fallback_draws: u64,
    pub seed: u64,
}

impl Default for ContingencyConfig {
    fn default() -> Self {
        ContingencyConfig {
            pairs: Vec::new(),
            mode: FisherMode::exact(),
            fallback_draws: 100_000,
            seed: 0,
        }
    }
}

/// Consumer-level index used as a regression response.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IndexName {
    Co,
    IddLabeled,
    IddProbability,
    Infd,
    Si,
    Ci,
}

impl IndexName {
    pub fn as_str(self) -> &'static str {
        match self {
            IndexName::Co => "co",
            IndexName::IddLabeled => "idd_labeled",
            IndexName::IddProbability => "idd_probability",
            IndexName::Infd => "infd",
            IndexName::Si => "si",
            IndexName::Ci => "ci",
        }
    }

    /// Overlap counts use the zero-truncated count model, the bounded indices beta regression.
    pub fn family(self) -> Family {
        match self {
            IndexName::Co => Family::ZeroTruncatedNegBinomial,
            _ => Family::BetaLogit,
        }
    }

    fn value(self, row: &crate::indices::ConsumerRow) -> Option<f64> {
        match self {
            IndexName::Co => Some(row.co as f64),
            IndexName::IddLabeled => row.idd_labeled,
            IndexName::IddProbability => row.idd_probability,
            IndexName::Infd => row.infd,
            IndexName::Si => row.si,
            IndexName::Ci => row.ci,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegressionConfig {
    pub enabled: bool,
    pub bic_selection: bool,
    pub responses: Vec<IndexName>,
    /// Candidate survey columns; defaults to every column, or to the group
    /// representatives plus ungrouped columns when groups are given.
    pub candidates: Option<Vec<String>>,
    /// Rerun each model without rows whose |standardized residual| exceeds this.
    pub sensitivity_threshold: Option<f64>,
}

impl Default for RegressionConfig {
    fn default() -> Self {
        RegressionConfig {
            enabled: true,
            bic_selection: true,
            responses: vec![
                IndexName::Co,
                IndexName::IddProbability,
                IndexName::Infd,
                IndexName::Si,
                IndexName::Ci,
            ],
            candidates: None,
            sensitivity_threshold: Some(3.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub inputs: InputPaths,
    pub out_dir: PathBuf,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub identity: IdentityConfig,
    #[serde(default)]
    pub information: InfoThresholds,
    #[serde(default)]
    pub filter: Option<InfluencerFilterConfig>,
    #[serde(default)]
    pub contingency: ContingencyConfig,
    #[serde(default)]
    pub regression: RegressionConfig,
    #[serde(default = "yes")]
    pub alluvial: bool,
}

fn yes() -> bool {
    true
}

impl PipelineConfig {
    pub fn new(follows: impl Into<PathBuf>, out_dir: impl Into<PathBuf>) -> Self {
        PipelineConfig {
            inputs: InputPaths {
                follows: follows.into(),
                annotations: None,
                links: None,
                survey: None,
                accounts: None,
                groups: None,
            },
            out_dir: out_dir.into(),
            sweep: SweepConfig::default(),
            identity: IdentityConfig::default(),
            information: InfoThresholds::default(),
            filter: None,
            contingency: ContingencyConfig::default(),
            regression: RegressionConfig::default(),
            alluvial: true,
        }
    }

    /// Parses TOML or JSON (by extension, TOML otherwise). Relative paths are
    /// resolved against the config file's directory.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg: PipelineConfig = if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str(&text)?
        } else {
            toml::from_str(&text).map_err(|e| Error::ConfigError(format!("{}: {e}", path.display())))?
        };
        let base = path.parent().unwrap_or(Path::new(""));
        cfg.resolve_paths(base);
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        let i = &mut self.inputs;
        fix(&mut i.follows);
        for p in [&mut i.annotations, &mut i.links, &mut i.survey, &mut i.accounts, &mut i.groups]
            .into_iter()
            .flatten()
        {
            fix(p);
        }
        fix(&mut self.out_dir);
    }

    pub fn validate(&self) -> Result<()> {
        self.sweep.validate()?;
        if let Some(f) = &self.filter {
            f.validate()?;
        }
        if self.identity.labels.is_empty() {
            return Err(Error::ConfigError("identity label universe is empty".into()));
        }
        if self.regression.enabled && self.regression.responses.is_empty() {
            return Err(Error::ConfigError("regression enabled without responses".into()));
        }
        if let Some(t) = self.regression.sensitivity_threshold {
            if t.is_nan() || t < 0.0 {
                return Err(Error::ConfigError("sensitivity threshold must be non-negative".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
    /// Written by a stage that did not finish.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub partial: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Complete,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub status: RunStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failed_stage: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    /// Stages that ran to completion, in order.
    pub stages: Vec<String>,
    /// Input files by file name.
    pub inputs: Vec<ManifestEntry>,
    /// Artifacts by path relative to the output directory, sorted.
    pub artifacts: Vec<ManifestEntry>,
}

pub const MANIFEST: &str = "manifest.json";

pub fn sha256_file(path: &Path) -> Result<(String, u64)> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok((hex::encode(Sha256::digest(&bytes)), bytes.len() as u64))
}

#[derive(Debug, Clone, Serialize)]
pub struct ContingencyOutcome {
    pub table: ContingencyTable,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub test: Option<FisherResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<FisherMode>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Builds the table and tests it, falling back to Monte Carlo when exact
/// enumeration is too large. A degenerate table is reported, not raised.
pub fn test_contingency(annotations: &AnnotationTable, dims: &[String; 2], cfg: &ContingencyConfig) -> Result<ContingencyOutcome> {
    let table = contingency(annotations, &dims[0], &dims[1])?;
    let mut mode = cfg.mode;
    let result = match fisher_exact(&table, mode) {
        Err(Error::FallbackRequired { bound }) => {
            log::warn!(
                "{} × {}: more than {bound} tables, using {} Monte Carlo draws",
                dims[0],
                dims[1],
                cfg.fallback_draws
            );
            mode = FisherMode::MonteCarlo {
                draws: cfg.fallback_draws,
                seed: cfg.seed,
            };
            fisher_exact(&table, mode)
        }
        other => other,
    };
    Ok(match result {
        Ok(test) => ContingencyOutcome {
            table,
            test: Some(test),
            mode: Some(mode),
            error: None,
        },
        Err(e @ Error::DegenerateMargins) => ContingencyOutcome {
            table,
            test: None,
            mode: None,
            error: Some(e.to_string()),
        },
        Err(e) => return Err(e),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ModelOutcome {
    pub scale: usize,
    pub response: IndexName,
    /// Rows dropped because the response or a candidate was missing or out of range.
    pub dropped_rows: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<RegressionReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl ModelOutcome {
    pub fn name(&self) -> String {
        format!("{}@{}", self.response.as_str(), self.scale)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RegressionOutput {
    pub candidates: Vec<String>,
    pub reductions: BTreeMap<String, Vec<SubDimension>>,
    pub models: Vec<ModelOutcome>,
}

/// Complete-case rows joining one consumer index with the survey.
pub fn regression_rows(
    table: &IndexTable,
    response: IndexName,
    survey: &SurveyTable,
    candidates: &[String],
) -> Result<(RegressionData, usize)> {
    let cols: Vec<usize> = candidates
        .iter()
        .map(|c| {
            survey
                .column_index(c)
                .ok_or_else(|| Error::SchemaError(format!("survey has no column `{c}`")))
        })
        .collect::<Result<_>>()?;
    let mut data = RegressionData {
        columns: candidates.to_vec(),
        ..Default::default()
    };
    let mut dropped = 0;
    for row in &table.consumers {
        let y = response.value(row).filter(|v| v.is_finite());
        let x = survey
            .row_of(&row.consumer)
            .map(|r| cols.iter().map(|&j| r[j]).collect::<Vec<f64>>())
            .filter(|x| x.iter().all(|v| v.is_finite()));
        match (y, x) {
            (Some(y), Some(x)) if response == IndexName::Co || (0.0..=1.0).contains(&y) => {
                data.ids.push(row.consumer.clone());
                data.response.push(y);
                data.values.push(x);
            }
            _ => dropped += 1,
        }
    }
    if response.family() == Family::BetaLogit {
        let n = data.len();
        for y in &mut data.response {
            *y = unit_interval_transform(*y, n)?;
        }
    }
    Ok((data, dropped))
}

/// Intermediate results of a run.
#[derive(Debug, Default)]
pub struct RunState {
    pub network: Option<BipartiteNetwork>,
    pub annotations: Option<AnnotationTable>,
    pub shares: Option<DomainShares>,
    pub survey: Option<SurveyTable>,
    pub groups: Vec<VariableGroup>,
    pub graph: Option<WeightedGraph>,
    pub sweep: Option<ScaleSweepResult>,
    pub covers: Vec<HyperCover>,
    pub tables: Vec<IndexTable>,
    pub contingency: Vec<ContingencyOutcome>,
    pub regression: Option<RegressionOutput>,
}

struct Run<'a> {
    cfg: &'a PipelineConfig,
    out: &'a Path,
    state: RunState,
    stages: Vec<String>,
    /// artifact → producing stage
    artifacts: BTreeMap<String, &'static str>,
    current: &'static str,
    /// Missing optional inputs fail instead of skipping the stage.
    strict: bool,
}

impl Run<'_> {
    fn record(&mut self, name: impl Into<String>) {
        self.artifacts.insert(name.into(), self.current);
    }

    fn json<T: Serialize + ?Sized>(&mut self, name: &str, value: &T) -> Result<()> {
        self.record(name);
        io::write_json(&self.out.join(name), value)
    }

    fn stage(&mut self, name: &'static str, f: impl FnOnce(&mut Self) -> Result<()>) -> Result<()> {
        self.current = name;
        log::info!("stage {name}");
        f(self).map_err(|e| e.in_stage(name))?;
        self.stages.push(name.to_owned());
        Ok(())
    }

    fn ingest(&mut self) -> Result<()> {
        let inputs = &self.cfg.inputs;
        let mut network = io::read_network(&inputs.follows)?;
        if let Some(path) = &inputs.accounts {
            let accounts = io::read_accounts(path)?;
            let filter = self.cfg.filter.clone().unwrap_or_default();
            let keep = filter_influencers(&accounts, &filter)?;
            network = network.restrict_influencers(|id| keep.contains(id))?;
        }
        self.state.annotations = inputs.annotations.as_deref().map(io::read_annotations).transpose()?;
        self.state.shares = inputs.links.as_deref().map(io::read_links).transpose()?;
        self.state.survey = inputs.survey.as_deref().map(io::read_survey).transpose()?;
        self.state.groups = inputs.groups.as_deref().map(io::read_groups).transpose()?.unwrap_or_default();
        self.json("network.json", &network.counts())?;
        self.state.network = Some(network);
        Ok(())
    }

    fn project(&mut self) -> Result<()> {
        let graph = project(self.state.network.as_ref().expect("ingested"), Side::Influencers);
        self.record("projection.csv");
        io::write_projection(&self.out.join("projection.csv"), &graph)?;
        self.state.graph = Some(graph);
        Ok(())
    }

    fn scan(&mut self) -> Result<()> {
        self.record("scales.json");
        self.record("nvi_curve.csv");
        let graph = self.state.graph.as_ref().expect("projected");
        let sweep = scan_scales(graph, &self.cfg.sweep)?;
        io::write_scales(&self.out.join("scales.json"), &sweep, graph.labels())?;
        io::write_nvi_curve(&self.out.join("nvi_curve.csv"), &sweep)?;
        self.state.sweep = Some(sweep);
        Ok(())
    }

    fn hyper_cover(&mut self) -> Result<()> {
        let network = self.state.network.as_ref().expect("ingested");
        let sweep = self.state.sweep.as_ref().expect("scanned");
        let covers = sweep
            .selected()
            .map(|s| hyper_cover(network, &s.best, s.index))
            .collect::<Result<Vec<_>>>()?;
        let files: Vec<(String, Vec<Vec<String>>)> = covers
            .iter()
            .map(|cover| {
                let edges = cover
                    .hyperedges
                    .iter()
                    .map(|e| e.iter().map(|&c| network.consumers()[c].clone()).collect())
                    .collect();
                (format!("hyperedges_{}.json", cover.scale), edges)
            })
            .collect();
        for (name, edges) in &files {
            self.json(name, edges)?;
        }
        self.state.covers = covers;
        Ok(())
    }

    fn indices(&mut self) -> Result<()> {
        let state = &self.state;
        let labels = state.annotations.as_ref().map(|a| {
            let universe: Vec<&str> = self.cfg.identity.labels.iter().map(String::as_str).collect();
            a.label_set(&self.cfg.identity.dimension, &universe)
        });
        let inputs = IndexInputs {
            network: state.network.as_ref().expect("ingested"),
            graph: state.graph.as_ref().expect("projected"),
            labels: labels.as_ref().filter(|l: &&LabelSet| !l.is_empty()),
            shares: state.shares.as_ref(),
            thresholds: self.cfg.information,
        };
        let sweep = state.sweep.as_ref().expect("scanned");
        let tables = sweep
            .selected()
            .zip(&state.covers)
            .map(|(s, cover)| IndexTable::compute(inputs, &s.best, cover))
            .collect::<Result<Vec<_>>>()?;
        for t in &tables {
            let names = io::write_index_tables(self.out, t)?;
            names.into_iter().for_each(|n| self.record(n));
        }
        self.state.tables = tables;
        Ok(())
    }

    fn contingency(&mut self) -> Result<()> {
        let Some(annotations) = &self.state.annotations else {
            if self.strict {
                return Err(Error::ConfigError("contingency needs an annotations file".into()));
            }
            log::info!("no annotations; contingency skipped");
            return Ok(());
        };
        let pairs: Vec<[String; 2]> = if self.cfg.contingency.pairs.is_empty() {
            let dims = annotations.dimensions();
            let mut out = Vec::new();
            for (i, a) in dims.iter().enumerate() {
                for b in &dims[i + 1..] {
                    out.push([a.to_string(), b.to_string()]);
                }
            }
            out
        } else {
            self.cfg.contingency.pairs.clone()
        };
        let outcomes = pairs
            .iter()
            .map(|p| test_contingency(annotations, p, &self.cfg.contingency))
            .collect::<Result<Vec<_>>>()?;
        self.json("contingency.json", &outcomes)?;
        self.state.contingency = outcomes;
        Ok(())
    }

    fn regress(&mut self) -> Result<()> {
        let rc = &self.cfg.regression;
        let Some(survey) = &self.state.survey else {
            if self.strict {
                return Err(Error::ConfigError("regression needs a survey file".into()));
            }
            log::info!("no survey; regression skipped");
            return Ok(());
        };
        let mut reductions = BTreeMap::new();
        let mut grouped = BTreeSet::new();
        let mut representatives = Vec::new();
        for g in &self.state.groups {
            let dims = pca_reduce(survey, g)?;
            grouped.extend(g.members.iter().cloned());
            representatives.extend(dims.iter().map(|d| d.representative.clone()));
            reductions.insert(g.name.clone(), dims);
        }
        let candidates = match &rc.candidates {
            Some(c) => c.clone(),
            None => {
                let mut c = representatives;
                c.extend(survey.columns.iter().filter(|c| !grouped.contains(*c)).cloned());
                c
            }
        };
        if candidates.is_empty() {
            return Err(Error::ConfigError("no candidate predictors".into()));
        }

        let mut models = Vec::new();
        for table in &self.state.tables {
            for &response in &rc.responses {
                let (data, dropped_rows) = regression_rows(table, response, survey, &candidates)?;
                if dropped_rows > 0 {
                    log::info!("{}@{}: dropped {dropped_rows} incomplete rows", response.as_str(), table.scale);
                }
                let spec = RegressionSpec {
                    family: response.family(),
                    response: response.as_str().into(),
                    candidates: candidates.clone(),
                    bic_selection: rc.bic_selection,
                };
                let fitted = bic_forward(&spec, &data).and_then(|report| match rc.sensitivity_threshold {
                    Some(t) if report.converged => sensitivity_rerun(&report, &data, t).map(|mut rerun| {
                        // keep the base fit and attach the rerun summary
                        let mut base = report;
                        base.sensitivity = rerun.sensitivity.take();
                        base
                    }),
                    _ => Ok(report),
                });
                let (report, error) = match fitted {
                    Ok(r) => {
                        if r.boundary {
                            log::warn!(
                                "{}@{}: estimates at the parameter-space boundary",
                                response.as_str(),
                                table.scale
                            );
                        }
                        (Some(r), None)
                    }
                    Err(e) => {
                        log::warn!("{}@{}: {e}", response.as_str(), table.scale);
                        (None, Some(e.to_string()))
                    }
                };
                models.push(ModelOutcome {
                    scale: table.scale,
                    response,
                    dropped_rows,
                    report,
                    error,
                });
            }
        }
        let names: Vec<String> = models.iter().map(ModelOutcome::name).collect();
        self.record("residuals.csv");
        io::write_residuals(
            &self.out.join("residuals.csv"),
            names
                .iter()
                .zip(&models)
                .filter_map(|(n, m)| m.report.as_ref().map(|r| (n.as_str(), r))),
        )?;
        let output = RegressionOutput {
            candidates,
            reductions,
            models,
        };
        self.json("report.json", &output)?;
        self.state.regression = Some(output);
        Ok(())
    }

    fn alluvial(&mut self) -> Result<()> {
        let sweep = self.state.sweep.as_ref().expect("scanned");
        if sweep.selected_scales.len() < 2 && !self.strict {
            log::info!("fewer than two retained scales; alluvial export skipped");
            return Ok(());
        }
        let labels = self.state.graph.as_ref().expect("projected").labels();
        let export = export_alluvial(sweep, labels, self.state.annotations.as_ref())?;
        self.json("alluvial.json", &export)
    }

    fn manifest(&self, failure: Option<(&str, &Error)>) -> Result<Manifest> {
        let i = &self.cfg.inputs;
        let mut inputs = Vec::new();
        for p in std::iter::once(&i.follows).chain(
            [&i.annotations, &i.links, &i.survey, &i.accounts, &i.groups]
                .into_iter()
                .flatten(),
        ) {
            if let Ok((sha256, bytes)) = sha256_file(p) {
                inputs.push(ManifestEntry {
                    path: p.file_name().map_or_else(String::new, |n| n.to_string_lossy().into_owned()),
                    sha256,
                    bytes,
                    partial: false,
                });
            }
        }
        let mut artifacts = Vec::new();
        for (name, stage) in &self.artifacts {
            let path = self.out.join(name);
            if !path.exists() {
                continue;
            }
            let (sha256, bytes) = sha256_file(&path)?;
            artifacts.push(ManifestEntry {
                path: name.clone(),
                sha256,
                bytes,
                partial: failure.is_some_and(|(s, _)| s == *stage),
            });
        }
        Ok(Manifest {
            status: if failure.is_some() {
                RunStatus::Failed
            } else {
                RunStatus::Complete
            },
            failed_stage: failure.map(|(s, _)| s.to_owned()),
            error: failure.map(|(_, e)| e.to_string()),
            stages: self.stages.clone(),
            inputs,
            artifacts,
        })
    }
}

/// Pipeline stages in execution order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stage {
    Ingest,
    Project,
    Scan,
    HyperCover,
    Indices,
    Contingency,
    Regress,
    ExportAlluvial,
}

impl Stage {
    pub const ALL: [Stage; 8] = [
        Stage::Ingest,
        Stage::Project,
        Stage::Scan,
        Stage::HyperCover,
        Stage::Indices,
        Stage::Contingency,
        Stage::Regress,
        Stage::ExportAlluvial,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::Project => "project",
            Stage::Scan => "scan",
            Stage::HyperCover => "hyper-cover",
            Stage::Indices => "indices",
            Stage::Contingency => "contingency",
            Stage::Regress => "regress",
            Stage::ExportAlluvial => "export-alluvial",
        }
    }

    /// Stages `self` depends on, itself included.
    fn plan(self) -> Vec<Stage> {
        use Stage::*;
        match self {
            Contingency => vec![Ingest, Contingency],
            Regress => vec![Ingest, Project, Scan, HyperCover, Indices, Regress],
            ExportAlluvial => vec![Ingest, Project, Scan, ExportAlluvial],
            s => Stage::ALL.into_iter().filter(|t| *t <= s).collect(),
        }
    }
}

/// Runs every stage and writes `manifest.json` into the output directory.
///
/// The regression stage is skipped without a survey or when disabled, the
/// contingency stage without annotations, the alluvial export with fewer
/// than two retained scales. A failing stage aborts the run with the stage
/// name; the manifest is still written, with the failing stage's artifacts
/// flagged partial.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<(Manifest, RunState)> {
    let mut plan: Vec<Stage> = Stage::ALL.to_vec();
    plan.retain(|s| match s {
        Stage::Regress => cfg.regression.enabled,
        Stage::ExportAlluvial => cfg.alluvial,
        _ => true,
    });
    execute(cfg, &plan, false)
}

/// Runs `target` and the stages it needs, nothing else. Unlike a full run,
/// an explicitly requested stage does not skip silently: regression needs a
/// survey, contingency annotations and the alluvial export two scales.
pub fn run_until(cfg: &PipelineConfig, target: Stage) -> Result<(Manifest, RunState)> {
    execute(cfg, &target.plan(), true)
}

fn execute(cfg: &PipelineConfig, plan: &[Stage], strict: bool) -> Result<(Manifest, RunState)> {
    cfg.validate()?;
    std::fs::create_dir_all(&cfg.out_dir).map_err(|e| Error::io(&cfg.out_dir, e))?;
    let mut run = Run {
        cfg,
        out: &cfg.out_dir,
        state: RunState::default(),
        stages: Vec::new(),
        artifacts: BTreeMap::new(),
        current: "",
        strict,
    };
    let outcome = plan.iter().try_for_each(|&s| {
        let f = match s {
            Stage::Ingest => Run::ingest,
            Stage::Project => Run::project,
            Stage::Scan => Run::scan,
            Stage::HyperCover => Run::hyper_cover,
            Stage::Indices => Run::indices,
            Stage::Contingency => Run::contingency,
            Stage::Regress => Run::regress,
            Stage::ExportAlluvial => Run::alluvial,
        };
        run.stage(s.as_str(), f)
    });
    let manifest = match &outcome {
        Ok(()) => run.manifest(None)?,
        Err(e) => run.manifest(Some((run.current, e)))?,
    };
    io::write_json(&cfg.out_dir.join(MANIFEST), &manifest)?;
    outcome.map(|()| (manifest, run.state))
}
