use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Probability that two distinct members drawn without replacement carry
/// different labels: `1 − Σ n(n−1) / N(N−1)`. Zero when `N < 2`.
///
/// Fractional counts are accepted (expected counts under label imputation).
pub fn gini_simpson<I>(counts: I) -> Result<f64>
where
    I: IntoIterator<Item = f64>,
{
    let counts: Vec<f64> = counts.into_iter().collect();
    if let Some(bad) = counts.iter().find(|c| !(c.is_finite() && **c >= 0.0)) {
        return Err(Error::InvalidCounts(format!("count {bad} is negative or not finite")));
    }
    let total: f64 = counts.iter().sum();
    if total < 2.0 {
        return Ok(0.0);
    }
    let same: f64 = counts.iter().map(|n| n * (n - 1.0)).sum();
    Ok(1.0 - same / (total * (total - 1.0)))
}

/// How unlabeled community members enter the identity-diversity count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MissingLabels {
    /// Ignore unlabeled members.
    LabeledOnly,
    /// Spread each unlabeled member over the labels in proportion to the
    /// labeled members of the same community.
    ProbabilityAssignment,
}

/// Influencer labels on one annotation dimension, drawn from a fixed universe.
#[derive(Debug, Clone, Default)]
pub struct LabelSet {
    universe: Vec<String>,
    labels: HashMap<String, usize>,
}

impl LabelSet {
    pub fn new<S: Into<String>>(universe: impl IntoIterator<Item = S>) -> Self {
        LabelSet {
            universe: universe.into_iter().map(Into::into).collect(),
            labels: HashMap::new(),
        }
    }

    /// The three-way ideology universe.
    pub fn ideology() -> Self {
        Self::new(["Left", "Right", "Center"])
    }

    /// Records a label; matching against the universe ignores ASCII case.
    pub fn insert(&mut self, influencer: &str, label: &str) -> Result<()> {
        let idx = self
            .universe
            .iter()
            .position(|u| u.eq_ignore_ascii_case(label.trim()))
            .ok_or_else(|| {
                Error::InvalidCounts(format!(
                    "label `{label}` is not one of {:?}",
                    self.universe
                ))
            })?;
        self.labels.insert(influencer.to_owned(), idx);
        Ok(())
    }

    pub fn universe(&self) -> &[String] {
        &self.universe
    }

    pub fn label_of(&self, influencer: &str) -> Option<&str> {
        self.labels.get(influencer).map(|&i| self.universe[i].as_str())
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    fn counts<'a>(&self, members: impl IntoIterator<Item = &'a str>) -> (Vec<f64>, usize) {
        let mut counts = vec![0.0; self.universe.len()];
        let mut size = 0;
        for m in members {
            size += 1;
            if let Some(&i) = self.labels.get(m) {
                counts[i] += 1.0;
            }
        }
        (counts, size)
    }
}

/// Gini-Simpson diversity of community labels; `None` when no member is labeled.
pub fn identity_diversity<'a>(
    members: impl IntoIterator<Item = &'a str>,
    labels: &LabelSet,
    strategy: MissingLabels,
) -> Option<f64> {
    let (mut counts, size) = labels.counts(members);
    let labeled: f64 = counts.iter().sum();
    if labeled == 0.0 {
        return None;
    }
    if strategy == MissingLabels::ProbabilityAssignment {
        let unlabeled = size as f64 - labeled;
        for n in counts.iter_mut() {
            *n += unlabeled * *n / labeled;
        }
    }
    Some(gini_simpson(counts).expect("label counts are non-negative"))
}

/// Domains shared by each influencer, with multiplicity.
#[derive(Debug, Clone, Default, Serialize)]
pub struct DomainShares {
    shares: BTreeMap<String, BTreeMap<String, usize>>,
}

impl DomainShares {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds one shared link. Returns `false` when no host can be parsed.
    pub fn add_url(&mut self, influencer: &str, url: &str) -> bool {
        match domain_of(url) {
            Some(d) => {
                self.add_domain(influencer, d);
                true
            }
            None => false,
        }
    }

    pub fn add_domain(&mut self, influencer: &str, domain: String) {
        *self
            .shares
            .entry(influencer.to_owned())
            .or_default()
            .entry(domain)
            .or_default() += 1;
    }

    pub fn links_of(&self, influencer: &str) -> usize {
        self.shares.get(influencer).map_or(0, |d| d.values().sum())
    }

    pub fn domains_of(&self, influencer: &str) -> Option<&BTreeMap<String, usize>> {
        self.shares.get(influencer)
    }
}

/// Lower-cased host of `url` without a leading `www.`.
pub fn domain_of(url: &str) -> Option<String> {
    let url = url.trim();
    let parsed = url::Url::parse(url)
        .ok()
        .filter(|u| u.host_str().is_some())
        .or_else(|| url::Url::parse(&format!("http://{url}")).ok())?;
    let host = parsed.host_str()?.to_ascii_lowercase();
    let host = host.strip_prefix("www.").unwrap_or(&host);
    (!host.is_empty()).then(|| host.to_owned())
}

/// Reliability filter for information diversity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InfoThresholds {
    pub min_links: usize,
    pub min_sharer_fraction: f64,
}

impl Default for InfoThresholds {
    fn default() -> Self {
        InfoThresholds {
            min_links: 100,
            min_sharer_fraction: 0.5,
        }
    }
}

/// Gini-Simpson diversity of domains pooled over the community's links.
///
/// `None` when the community shares fewer than `min_links` links or fewer than
/// `min_sharer_fraction` of its members share any link.
pub fn information_diversity<'a>(
    members: impl IntoIterator<Item = &'a str>,
    shares: &DomainShares,
    thresholds: InfoThresholds,
) -> Option<f64> {
    let mut pooled: BTreeMap<&str, usize> = BTreeMap::new();
    let mut size = 0usize;
    let mut sharers = 0usize;
    for m in members {
        size += 1;
        if let Some(domains) = shares.domains_of(m) {
            if !domains.is_empty() {
                sharers += 1;
            }
            for (d, &n) in domains {
                *pooled.entry(d.as_str()).or_default() += n;
            }
        }
    }
    let total: usize = pooled.values().sum();
    if size == 0
        || total < thresholds.min_links
        || (sharers as f64) < thresholds.min_sharer_fraction * size as f64
    {
        return None;
    }
    Some(gini_simpson(pooled.values().map(|&n| n as f64)).expect("counts are non-negative"))
}
