//! Readers for the ingestion formats and writers for pipeline artifacts.
//!
//! CSV files are comma separated UTF-8 with a header row. Ids must match
//! `[A-Za-z0-9_.:@-]+`. Parse errors carry the 1-based file line.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::annotations::{Annotation, AnnotationTable, AccountTable};
use crate::error::{Error, Result};
use crate::graph::{build_bipartite, BipartiteNetwork, WeightedGraph};
use crate::indices::{DomainShares, IndexTable};
use crate::scales::ScaleSweepResult;
use crate::stats::{RegressionReport, SurveyTable, VariableGroup};
use crate::synth::SynthData;

pub fn is_safe_id(id: &str) -> bool {
    !id.is_empty()
        && id
            .bytes()
            .all(|b| b.is_ascii_alphanumeric() || matches!(b, b'_' | b'.' | b':' | b'@' | b'-'))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| Error::io(path, e))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn line_of(e: &csv::Error) -> usize {
    e.position().map_or(0, |p| p.line() as usize)
}

fn parse_error(e: csv::Error) -> Error {
    match e.kind() {
        csv::ErrorKind::Io(_) => Error::Csv(e),
        _ => Error::ParseError {
            line: line_of(&e),
            message: e.to_string(),
        },
    }
}

/// Reads a headed CSV into `T` rows paired with their file line.
fn read_rows<T: for<'de> Deserialize<'de>>(path: &Path, required: &[&str]) -> Result<Vec<(usize, T)>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(open(path)?);
    let headers = rdr.headers().map_err(parse_error)?.clone();
    if let Some(missing) = required.iter().find(|h| !headers.iter().any(|x| x == **h)) {
        return Err(Error::SchemaError(format!(
            "{}: missing column `{missing}`",
            path.display()
        )));
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(parse_error)?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let row = rec.deserialize(Some(&headers)).map_err(|e| Error::ParseError {
            line,
            message: e.to_string(),
        })?;
        rows.push((line, row));
    }
    Ok(rows)
}

fn check_id(line: usize, id: &str) -> Result<()> {
    if is_safe_id(id) {
        Ok(())
    } else {
        Err(Error::ParseError {
            line,
            message: format!("id `{id}` contains characters outside [A-Za-z0-9_.:@-]"),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FollowRecord {
    pub consumer_id: String,
    pub influencer_id: String,
}

/// `consumer_id,influencer_id` pairs.
pub fn read_follows(path: &Path) -> Result<Vec<FollowRecord>> {
    let rows: Vec<(usize, FollowRecord)> = read_rows(path, &["consumer_id", "influencer_id"])?;
    rows.into_iter()
        .map(|(line, r)| {
            check_id(line, &r.consumer_id)?;
            check_id(line, &r.influencer_id)?;
            Ok(r)
        })
        .collect()
}

pub fn read_network(path: &Path) -> Result<BipartiteNetwork> {
    let follows = read_follows(path)?;
    build_bipartite(follows.iter().map(|f| (&f.consumer_id, &f.influencer_id)))
}

#[derive(Deserialize)]
struct AnnotationRow {
    influencer_id: String,
    dimension: String,
    label: String,
}

/// `influencer_id,dimension,label` rows.
pub fn read_annotations(path: &Path) -> Result<AnnotationTable> {
    let rows: Vec<(usize, AnnotationRow)> = read_rows(path, &["influencer_id", "dimension", "label"])?;
    let records = rows
        .into_iter()
        .map(|(line, r)| {
            check_id(line, &r.influencer_id)?;
            if r.dimension.is_empty() || r.label.is_empty() {
                return Err(Error::ParseError {
                    line,
                    message: "empty dimension or label".into(),
                });
            }
            Ok(Annotation {
                influencer: r.influencer_id,
                dimension: r.dimension,
                label: r.label,
            })
        })
        .collect::<Result<_>>()?;
    Ok(AnnotationTable::new(records))
}

#[derive(Deserialize)]
struct LinkRow {
    influencer_id: String,
    url: String,
}

/// `influencer_id,url` rows. Links without a parsable host are skipped.
pub fn read_links(path: &Path) -> Result<DomainShares> {
    let rows: Vec<(usize, LinkRow)> = read_rows(path, &["influencer_id", "url"])?;
    let mut shares = DomainShares::new();
    let mut skipped = 0;
    for (line, r) in rows {
        check_id(line, &r.influencer_id)?;
        if !shares.add_url(&r.influencer_id, &r.url) {
            skipped += 1;
        }
    }
    if skipped > 0 {
        log::warn!("{}: skipped {skipped} links without a host", path.display());
    }
    Ok(shares)
}

pub fn read_survey(path: &Path) -> Result<SurveyTable> {
    let table = SurveyTable::from_csv(open(path)?)?;
    for (i, id) in table.ids.iter().enumerate() {
        check_id(i + 2, id)?;
    }
    Ok(table)
}

pub fn read_accounts(path: &Path) -> Result<AccountTable> {
    AccountTable::from_csv(open(path)?)
}

#[derive(Deserialize)]
#[serde(untagged)]
enum GroupSpec {
    Members(Vec<String>),
    Full {
        members: Vec<String>,
        #[serde(default)]
        threshold: Option<f64>,
        #[serde(default)]
        overrides: BTreeMap<String, String>,
    },
}

/// `groups.json`: group name → member list, or → `{members, threshold?, overrides?}`.
pub fn read_groups(path: &Path) -> Result<Vec<VariableGroup>> {
    let raw: BTreeMap<String, GroupSpec> = serde_json::from_reader(open(path)?)?;
    raw.into_iter()
        .map(|(name, spec)| {
            let group = match spec {
                GroupSpec::Members(members) => VariableGroup::new(name, members),
                GroupSpec::Full {
                    members,
                    threshold,
                    overrides,
                } => {
                    let mut g = VariableGroup::new(name, members);
                    if let Some(t) = threshold {
                        g.threshold = t;
                    }
                    g.overrides = overrides;
                    g
                }
            };
            group.validate()?;
            Ok(group)
        })
        .collect()
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

fn write_csv_rows<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_follows(path: &Path, follows: &[(String, String)]) -> Result<()> {
    write_csv_rows(
        path,
        follows.iter().map(|(c, s)| FollowRecord {
            consumer_id: c.clone(),
            influencer_id: s.clone(),
        }),
    )
}

#[derive(Serialize)]
struct EdgeRow<'a> {
    source: &'a str,
    target: &'a str,
    weight: u64,
}

/// Co-follow edge list, `source,target,weight` with `source < target` by node order.
pub fn write_projection(path: &Path, graph: &WeightedGraph) -> Result<()> {
    let labels = graph.labels();
    write_csv_rows(
        path,
        graph.edges().map(|(u, v, w)| EdgeRow {
            source: &labels[u],
            target: &labels[v],
            weight: w,
        }),
    )
}

#[derive(Serialize)]
struct SelectedScale<'a> {
    index: usize,
    markov_time: f64,
    communities: usize,
    nvi: f64,
    quality: f64,
    /// Influencer ids per community.
    members: Vec<Vec<&'a str>>,
}

#[derive(Serialize)]
struct ScalesFile<'a> {
    selected: Vec<SelectedScale<'a>>,
    robust_scales: &'a [usize],
    discarded: &'a [crate::scales::Discarded],
}

/// `scales.json`: every retained scale with its membership, plus the
/// robust-scale candidates and discard decisions.
pub fn write_scales(path: &Path, sweep: &ScaleSweepResult, labels: &[String]) -> Result<()> {
    let selected = sweep
        .selected()
        .map(|s| SelectedScale {
            index: s.index,
            markov_time: s.markov_time,
            communities: s.best.num_communities(),
            nvi: s.nvi,
            quality: s.best_quality,
            members: s
                .best
                .communities()
                .iter()
                .map(|c| c.iter().map(|&u| labels[u].as_str()).collect())
                .collect(),
        })
        .collect();
    write_json(
        path,
        &ScalesFile {
            selected,
            robust_scales: &sweep.robust_scales,
            discarded: &sweep.discarded,
        },
    )
}

#[derive(Serialize)]
struct CurveRow {
    markov_time: f64,
    nvi: f64,
    communities: usize,
}

pub fn write_nvi_curve(path: &Path, sweep: &ScaleSweepResult) -> Result<()> {
    write_csv_rows(
        path,
        sweep.scales.iter().map(|s| CurveRow {
            markov_time: s.markov_time,
            nvi: s.nvi,
            communities: s.best.num_communities(),
        }),
    )
}

/// Writes `indices_community_{scale}.csv` and `indices_consumer_{scale}.csv`
/// into `dir` and returns their file names. Absent values are empty fields.
///
/// Community columns: `community,size,idd_labeled,idd_probability,infd,si,ci`.
/// Consumer columns: `consumer,co,idd_labeled,idd_probability,infd,si,ci`.
pub fn write_index_tables(dir: &Path, table: &IndexTable) -> Result<[String; 2]> {
    let community = format!("indices_community_{}.csv", table.scale);
    let consumer = format!("indices_consumer_{}.csv", table.scale);
    write_csv_rows(&dir.join(&community), &table.communities)?;
    write_csv_rows(&dir.join(&consumer), &table.consumers)?;
    Ok([community, consumer])
}

#[derive(Serialize)]
struct ResidualRow<'a> {
    model: &'a str,
    consumer_id: &'a str,
    residual: f64,
}

/// Long-format residuals of several named reports.
pub fn write_residuals<'a>(path: &Path, reports: impl IntoIterator<Item = (&'a str, &'a RegressionReport)>) -> Result<()> {
    let rows = reports.into_iter().flat_map(|(model, r)| {
        r.row_ids.iter().zip(&r.residuals).map(move |(id, &res)| ResidualRow {
            model,
            consumer_id: id,
            residual: res,
        })
    });
    write_csv_rows(path, rows)
}

#[derive(Serialize)]
struct TruthLevel<'a> {
    level: usize,
    communities: usize,
    membership: BTreeMap<&'a str, usize>,
}

/// Writes a synthetic fixture in the ingestion formats and returns the file names.
pub fn write_synth(dir: &Path, data: &SynthData) -> Result<Vec<String>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_follows(&dir.join("follows.csv"), &data.follows)?;

    let truth: Vec<TruthLevel> = data
        .truth_by_id
        .iter()
        .enumerate()
        .map(|(level, members)| TruthLevel {
            level,
            communities: data.hierarchy.level_sizes[level],
            membership: members.iter().map(|(id, c)| (id.as_str(), *c)).collect(),
        })
        .collect();
    write_json(&dir.join("truth.json"), &truth)?;

    let mut w = csv::Writer::from_writer(create(&dir.join("annotations.csv"))?);
    w.write_record(["influencer_id", "dimension", "label"])?;
    for a in data.annotations.records() {
        w.write_record([&a.influencer, &a.dimension, &a.label])?;
    }
    w.flush().map_err(|e| Error::io(dir, e))?;

    let mut w = csv::Writer::from_writer(create(&dir.join("links.csv"))?);
    w.write_record(["influencer_id", "url"])?;
    for (s, url) in &data.links {
        w.write_record([s, url])?;
    }
    w.flush().map_err(|e| Error::io(dir, e))?;

    data.survey.write_csv(create(&dir.join("survey.csv"))?)?;
    Ok(["follows.csv", "truth.json", "annotations.csv", "links.csv", "survey.csv"]
        .map(String::from)
        .to_vec())
}
