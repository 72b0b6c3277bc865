//! Bipartite networks with a planted nested hierarchy of influencer
//! communities, correlated annotations and a planted consumer attribute.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::annotations::{Annotation, AnnotationTable};
use crate::error::{Error, Result};
use crate::graph::{build_bipartite, BipartiteNetwork};
use crate::partition::Partition;
use crate::scales::Contingency;
use crate::stats::SurveyTable;

pub const IDEOLOGIES: [&str; 3] = ["Left", "Right", "Center"];
const SUPPORT: [&str; 3] = ["Pro-Lula", "Pro-Bolsonaro", "Neutral"];
const ACCOUNT_TYPES: [&str; 3] = ["Politician", "Media", "Individual"];
pub const NOISE_COLUMNS: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantedHierarchy {
    pub n_consumers: usize,
    pub n_influencers: usize,
    /// Community counts from fine to coarse; each divides the previous one.
    pub level_sizes: Vec<usize>,
    /// Follow probability by the finest level a consumer's home shares with
    /// the influencer: `follow_probs[ℓ]` for level ℓ, the last entry for
    /// influencers outside the home branch entirely. Non-increasing.
    pub follow_probs: Vec<f64>,
    /// Consumers' non-home follow probabilities are scaled by
    /// `exp(attribute_effect · x)` for their attribute value `x`.
    #[serde(default = "default_effect")]
    pub attribute_effect: f64,
    #[serde(default = "default_annotated")]
    pub annotated_fraction: f64,
    /// Probability that an annotated influencer carries its coarse group's label.
    #[serde(default = "default_purity")]
    pub label_purity: f64,
    #[serde(default = "default_links")]
    pub mean_links: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_effect() -> f64 {
    0.5
}
fn default_annotated() -> f64 {
    0.6
}
fn default_purity() -> f64 {
    0.85
}
fn default_links() -> usize {
    20
}

impl PlantedHierarchy {
    pub fn preset(name: &str, seed: u64) -> Result<Self> {
        let (n_consumers, n_influencers, level_sizes, follow_probs) = match name {
            "three-level" => (200, 400, vec![16, 4, 2], vec![0.5, 0.04, 0.012, 0.002]),
            "two-level" => (120, 160, vec![4, 2], vec![0.4, 0.08, 0.01]),
            other => return Err(Error::ConfigError(format!("unknown synth preset `{other}`"))),
        };
        Ok(PlantedHierarchy {
            n_consumers,
            n_influencers,
            level_sizes,
            follow_probs,
            attribute_effect: default_effect(),
            annotated_fraction: default_annotated(),
            label_purity: default_purity(),
            mean_links: default_links(),
            seed,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::ConfigError(m));
        let Some(&fine) = self.level_sizes.first() else {
            return bad("at least one level is required".into());
        };
        if self.level_sizes.contains(&0) {
            return bad("level sizes must be positive".into());
        }
        if let Some(w) = self.level_sizes.windows(2).find(|w| w[0] % w[1] != 0) {
            return bad(format!("level of {} communities does not nest in {}", w[0], w[1]));
        }
        if self.n_influencers < fine || self.n_consumers < fine {
            return bad(format!("{fine} fine communities need at least as many consumers and influencers"));
        }
        if self.follow_probs.len() != self.level_sizes.len() + 1 {
            return bad(format!(
                "{} follow probabilities for {} levels (expected one per level plus one)",
                self.follow_probs.len(),
                self.level_sizes.len()
            ));
        }
        if self.follow_probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return bad("follow probabilities must lie in [0, 1]".into());
        }
        if self.follow_probs.windows(2).any(|w| w[0] < w[1]) {
            return bad("follow probabilities must not increase from fine to coarse".into());
        }
        for (name, v) in [
            ("annotated_fraction", self.annotated_fraction),
            ("label_purity", self.label_purity),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return bad(format!("{name} must lie in [0, 1]"));
            }
        }
        if !self.attribute_effect.is_finite() {
            return bad("attribute_effect must be finite".into());
        }
        Ok(())
    }

    /// Group of fine community `f` at `level`.
    fn group(&self, f: usize, level: usize) -> usize {
        f / (self.level_sizes[0] / self.level_sizes[level])
    }

    /// Finest level at which fine communities `a` and `b` coincide, or the
    /// number of levels when they never do.
    fn shared_level(&self, a: usize, b: usize) -> usize {
        (0..self.level_sizes.len())
            .find(|&l| self.group(a, l) == self.group(b, l))
            .unwrap_or(self.level_sizes.len())
    }
}

pub fn consumer_id(i: usize) -> String {
    format!("c{i:04}")
}

pub fn influencer_id(i: usize) -> String {
    format!("i{i:04}")
}

/// A generated fixture.
#[derive(Debug, Clone)]
pub struct SynthData {
    pub hierarchy: PlantedHierarchy,
    pub follows: Vec<(String, String)>,
    pub network: BipartiteNetwork,
    /// Planted partitions from fine to coarse, over `network.influencers()`.
    pub truth: Vec<Partition>,
    /// Planted community of every influencer id at every level.
    pub truth_by_id: Vec<Vec<(String, usize)>>,
    pub annotations: AnnotationTable,
    /// `(influencer, url)` pairs.
    pub links: Vec<(String, String)>,
    /// `attribute` followed by `noise1..noise4`.
    pub survey: SurveyTable,
}

pub fn generate(h: &PlantedHierarchy) -> Result<SynthData> {
    h.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(h.seed);
    let fine = h.level_sizes[0];
    let home = |c: usize| c % fine;
    let comm = |s: usize| s % fine;

    let mut survey = SurveyTable::new(
        std::iter::once("attribute".to_owned())
            .chain((1..=NOISE_COLUMNS).map(|k| format!("noise{k}")))
            .collect(),
    );
    for c in 0..h.n_consumers {
        let row: Vec<f64> = (0..=NOISE_COLUMNS).map(|_| rng.sample(StandardNormal)).collect();
        survey.push(consumer_id(c), row);
    }

    let mut follows = vec![Vec::new(); h.n_consumers];
    let mut followed = vec![false; h.n_influencers];
    for (c, out) in follows.iter_mut().enumerate() {
        let scale = (h.attribute_effect * survey.rows[c][0]).exp();
        for s in 0..h.n_influencers {
            let level = h.shared_level(home(c), comm(s));
            let mut p = h.follow_probs[level];
            if level > 0 {
                p = (p * scale).min(1.0);
            }
            if rng.random::<f64>() < p {
                out.push(s);
                followed[s] = true;
            }
        }
    }
    for (c, out) in follows.iter_mut().enumerate() {
        if out.is_empty() {
            let k = h.n_influencers.div_ceil(fine);
            let mut s = home(c) + fine * rng.random_range(0..k);
            if s >= h.n_influencers {
                s = home(c);
            }
            out.push(s);
            followed[s] = true;
        }
    }
    for s in (0..h.n_influencers).filter(|&s| !followed[s]) {
        let k = h.n_consumers.div_ceil(fine);
        let mut c = comm(s) + fine * rng.random_range(0..k);
        if c >= h.n_consumers {
            c = comm(s);
        }
        follows[c].push(s);
        follows[c].sort_unstable();
    }

    let pairs: Vec<(String, String)> = follows
        .iter()
        .enumerate()
        .flat_map(|(c, out)| out.iter().map(move |&s| (consumer_id(c), influencer_id(s))))
        .collect();
    let network = build_bipartite(pairs.iter().map(|(a, b)| (a.as_str(), b.as_str())))?;

    let truth_by_id: Vec<Vec<(String, usize)>> = (0..h.level_sizes.len())
        .map(|l| {
            (0..h.n_influencers)
                .map(|s| (influencer_id(s), h.group(comm(s), l)))
                .collect()
        })
        .collect();
    let index: HashMap<&str, usize> = network
        .influencers()
        .iter()
        .enumerate()
        .map(|(i, id)| (id.as_str(), i))
        .collect();
    let truth = truth_by_id
        .iter()
        .map(|level| {
            let mut labels = vec![0; network.influencers().len()];
            for (id, g) in level {
                labels[index[id.as_str()]] = *g;
            }
            Partition::new(labels)
        })
        .collect();

    let coarsest = h.level_sizes.len() - 1;
    let mut records = Vec::new();
    let pick = |rng: &mut ChaCha8Rng, own: usize, purity: f64| -> usize {
        if rng.random::<f64>() < purity {
            own
        } else {
            (own + rng.random_range(1..3)) % 3
        }
    };
    for s in 0..h.n_influencers {
        if rng.random::<f64>() >= h.annotated_fraction {
            continue;
        }
        let g = h.group(comm(s), coarsest) % 3;
        let ideology = pick(&mut rng, g, h.label_purity);
        let support = pick(&mut rng, ideology, 0.9);
        let kind = rng.random_range(0..ACCOUNT_TYPES.len());
        for (dim, label) in [
            ("ideology", IDEOLOGIES[ideology]),
            ("support", SUPPORT[support]),
            ("type", ACCOUNT_TYPES[kind]),
        ] {
            records.push(Annotation {
                influencer: influencer_id(s),
                dimension: dim.into(),
                label: label.into(),
            });
        }
    }

    let mut links = Vec::new();
    for s in 0..h.n_influencers {
        let g = h.group(comm(s), coarsest);
        let n = rng.random_range(0..=2 * h.mean_links);
        for k in 0..n {
            let url = if rng.random::<f64>() < 0.5 {
                format!("https://www.outlet{}-{}.example.com/post/{k}", g, rng.random_range(0..4))
            } else {
                format!("https://news{}.example.org/a/{k}", rng.random_range(0..6))
            };
            links.push((influencer_id(s), url));
        }
    }

    Ok(SynthData {
        hierarchy: h.clone(),
        follows: pairs,
        network,
        truth,
        truth_by_id,
        annotations: AnnotationTable::new(records),
        links,
        survey,
    })
}

/// Adjusted mutual information (arithmetic-mean normalisation): 1 for
/// identical partitions, around 0 for independent ones.
pub fn agreement(p: &Partition, truth: &Partition) -> Result<f64> {
    let table = Contingency::new(p, truth)?;
    if p == truth {
        return Ok(1.0);
    }
    let n = table.n;
    let (hu, hv) = (table.entropy_rows(), table.entropy_cols());
    let mi = hu + hv - table.entropy_joint();
    let emi = expected_mutual_information(&table.rows, &table.cols, n);
    let denom = 0.5 * (hu + hv) - emi;
    if denom.abs() < f64::EPSILON {
        return Ok(if (mi - emi).abs() < f64::EPSILON { 1.0 } else { 0.0 });
    }
    Ok((mi - emi) / denom)
}

/// Expected mutual information of two partitions with the given community
/// sizes under the hypergeometric (permutation) model.
fn expected_mutual_information(rows: &[usize], cols: &[usize], n: usize) -> f64 {
    let lf: Vec<f64> = std::iter::once(0.0)
        .chain((1..=n).scan(0.0, |acc, k| {
            *acc += (k as f64).ln();
            Some(*acc)
        }))
        .collect();
    let nf = n as f64;
    let mut emi = 0.0;
    for &a in rows {
        for &b in cols {
            let lo = (a + b).saturating_sub(n).max(1);
            let hi = a.min(b);
            let fixed = lf[a] + lf[b] + lf[n - a] + lf[n - b] - lf[n];
            for nij in lo..=hi {
                let x = nij as f64;
                let log_p = fixed - lf[nij] - lf[a - nij] - lf[b - nij] - lf[n + nij - a - b];
                emi += x / nf * (nf * x / (a as f64 * b as f64)).ln() * log_p.exp();
            }
        }
    }
    emi
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn agreement_examples() {
        let truth = Partition::new(vec![0, 0, 0, 0, 1, 1, 1, 1]);
        assert_eq!(agreement(&truth, &truth).unwrap(), 1.0);
        assert_eq!(agreement(&Partition::new(vec![5, 5, 5, 5, 2, 2, 2, 2]), &truth).unwrap(), 1.0);
        let split = Partition::new(vec![0, 0, 2, 2, 1, 1, 1, 1]);
        let a = agreement(&split, &truth).unwrap();
        assert!(a > 0.0 && a < 1.0, "{a}");
        assert!(matches!(
            agreement(&Partition::whole(3), &truth),
            Err(Error::InconsistentPartition(_))
        ));
    }

    #[test]
    fn independent_partitions_agree_by_chance_only() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = Partition::new((0..1000).map(|_| rng.random_range(0..10)).collect());
        let q = Partition::new((0..1000).map(|_| rng.random_range(0..10)).collect());
        assert!(agreement(&p, &q).unwrap().abs() < 0.05);
    }

    #[test]
    fn presets_validate() {
        for name in ["three-level", "two-level"] {
            PlantedHierarchy::preset(name, 1).unwrap().validate().unwrap();
        }
        assert!(PlantedHierarchy::preset("five-level", 1).is_err());
        let mut h = PlantedHierarchy::preset("two-level", 1).unwrap();
        h.follow_probs = vec![0.1, 0.2, 0.0];
        assert!(matches!(generate(&h), Err(Error::ConfigError(_))));
        h.follow_probs = vec![0.1, 0.1, 0.1];
        assert!(generate(&h).is_ok());
        h.level_sizes = vec![4, 3];
        assert!(h.validate().is_err());
    }

    #[test]
    fn generation_is_deterministic_and_nested() {
        let h = PlantedHierarchy::preset("three-level", 7).unwrap();
        let a = generate(&h).unwrap();
        let b = generate(&h).unwrap();
        assert_eq!(a.follows, b.follows);
        assert_eq!(a.annotations, b.annotations);
        assert_eq!(a.links, b.links);
        assert_eq!(a.network.influencers().len(), 400);
        assert_eq!(a.network.consumers().len(), 200);
        assert_eq!(a.truth.len(), 3);
        assert!(a.truth[0].refines(&a.truth[1]) && a.truth[1].refines(&a.truth[2]));
        let sizes: Vec<usize> = a.truth.iter().map(Partition::num_communities).collect();
        assert_eq!(sizes, vec![16, 4, 2]);
    }
}
