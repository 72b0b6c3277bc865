//! Multi-scale community detection: Markov-time sweep, partition ensembles and
//! robust-scale selection from the ensemble variation of information.

mod leiden;
mod nvi;
mod quality;

use indexmap::IndexMap;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::WeightedGraph;
pub use crate::partition::Partition;

pub use leiden::{optimize_partition, StabilityOptimizer};
pub use nvi::nvi;
pub(crate) use nvi::Contingency;
pub use quality::{generalized_modularity, stability_quality};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    /// log10 of the smallest Markov time.
    pub min_scale: f64,
    /// log10 of the largest Markov time.
    pub max_scale: f64,
    pub n_scale: usize,
    pub n_tries: usize,
    pub base_seed: u64,
    /// Scales whose best partition has more than this fraction of singleton
    /// communities are discarded.
    pub singleton_discard_fraction: f64,
    /// Moving-average window (grid points) applied to the NVI curve; the
    /// local-minimum test spans the same number of points on each side.
    pub smoothing_window: usize,
    /// Keep every ensemble partition in the result (memory grows with
    /// `n_scale · n_tries · nodes`).
    pub keep_ensembles: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            min_scale: -3.0,
            max_scale: 3.0,
            n_scale: 1000,
            n_tries: 100,
            base_seed: 0,
            singleton_discard_fraction: 0.8,
            smoothing_window: 5,
            keep_ensembles: false,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::ConfigError(m.to_owned()));
        if !(self.min_scale < self.max_scale) {
            return fail("min_scale must be below max_scale");
        }
        if self.n_scale < 2 {
            return fail("n_scale must be at least 2");
        }
        if self.n_tries < 2 {
            return fail("n_tries must be at least 2");
        }
        if !(0.0..=1.0).contains(&self.singleton_discard_fraction) {
            return fail("singleton_discard_fraction must lie in [0, 1]");
        }
        if self.smoothing_window == 0 {
            return fail("smoothing_window must be positive");
        }
        Ok(())
    }

    /// Log-spaced Markov times of the sweep grid.
    pub fn times(&self) -> Vec<f64> {
        let step = (self.max_scale - self.min_scale) / (self.n_scale - 1) as f64;
        (0..self.n_scale)
            .map(|k| 10f64.powf(self.min_scale + step * k as f64))
            .collect()
    }

    pub fn seed(&self, scale: usize, attempt: usize) -> u64 {
        self.base_seed
            .wrapping_add((scale * self.n_tries + attempt) as u64)
    }
}

/// Outcome of the ensemble at one grid point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScaleRecord {
    pub index: usize,
    pub markov_time: f64,
    pub best: Partition,
    pub best_quality: f64,
    /// Mean pairwise NVI over the ensemble.
    pub nvi: f64,
    pub distinct_partitions: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ensemble: Option<Vec<Partition>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DiscardReason {
    /// Too many singleton communities.
    LowGranularity,
    /// A single community.
    Trivial,
    /// Same best partition as an already retained scale.
    Duplicate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Discarded {
    pub scale: usize,
    pub reason: DiscardReason,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScaleSweepResult {
    pub scales: Vec<ScaleRecord>,
    /// Local minima of the smoothed NVI curve.
    pub robust_scales: Vec<usize>,
    /// Robust scales surviving the discard rules, ordered by Markov time.
    pub selected_scales: Vec<usize>,
    pub discarded: Vec<Discarded>,
}

impl ScaleSweepResult {
    pub fn nvi_curve(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.scales.iter().map(|s| (s.markov_time, s.nvi))
    }

    pub fn selected(&self) -> impl Iterator<Item = &ScaleRecord> + '_ {
        self.selected_scales.iter().map(move |&i| &self.scales[i])
    }
}

/// Runs the full Markov-time sweep on `graph`.
pub fn scan_scales(graph: &WeightedGraph, config: &SweepConfig) -> Result<ScaleSweepResult> {
    config.validate()?;
    if graph.total_weight() == 0 {
        return Err(Error::DegenerateGraph);
    }
    let optimizer = StabilityOptimizer::new(graph);
    let times = config.times();

    let runs: Vec<(Partition, f64)> = (0..config.n_scale * config.n_tries)
        .into_par_iter()
        .map(|job| {
            let (k, attempt) = (job / config.n_tries, job % config.n_tries);
            let t = times[k];
            let p = optimizer.optimize_stability(t, config.seed(k, attempt));
            let q = stability_quality(graph, &p, t).expect("graph and partition are consistent");
            (p, q)
        })
        .collect();

    let scales: Vec<ScaleRecord> = runs
        .par_chunks(config.n_tries)
        .enumerate()
        .map(|(k, chunk)| summarize(k, times[k], chunk, config.keep_ensembles))
        .collect();

    let (robust_scales, selected_scales, discarded) = select_scales(
        &scales,
        config.smoothing_window,
        config.singleton_discard_fraction,
    );
    log::info!(
        "sweep: {} robust scales, {} selected",
        robust_scales.len(),
        selected_scales.len()
    );
    Ok(ScaleSweepResult {
        scales,
        robust_scales,
        selected_scales,
        discarded,
    })
}

fn summarize(index: usize, t: f64, runs: &[(Partition, f64)], keep: bool) -> ScaleRecord {
    let mut best = 0;
    for (i, (_, q)) in runs.iter().enumerate() {
        if *q > runs[best].1 {
            best = i;
        }
    }
    let mut distinct: IndexMap<&Partition, usize> = IndexMap::new();
    for (p, _) in runs {
        *distinct.entry(p).or_default() += 1;
    }
    let groups: Vec<(&Partition, usize)> = distinct.into_iter().collect();
    let mut total = 0.0;
    for a in 0..groups.len() {
        for b in a + 1..groups.len() {
            let d = nvi(groups[a].0, groups[b].0).expect("ensemble partitions share a node set");
            total += (groups[a].1 * groups[b].1) as f64 * d;
        }
    }
    let pairs = (runs.len() * (runs.len() - 1) / 2) as f64;
    ScaleRecord {
        index,
        markov_time: t,
        best: runs[best].0.clone(),
        best_quality: runs[best].1,
        nvi: if pairs > 0.0 { total / pairs } else { 0.0 },
        distinct_partitions: groups.len(),
        ensemble: keep.then(|| runs.iter().map(|(p, _)| p.clone()).collect()),
    }
}

/// Centred moving average, truncated at the ends of the curve.
pub fn smooth(curve: &[f64], window: usize) -> Vec<f64> {
    let half = window / 2;
    (0..curve.len())
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half).min(curve.len() - 1);
            curve[lo..=hi].iter().sum::<f64>() / (hi - lo + 1) as f64
        })
        .collect()
}

/// Runs `(start, end)` of grid points that are minima of the smoothed curve
/// over `±window` points. A run is kept only if the curve rises somewhere
/// within `window` points of it.
pub fn minimum_runs(curve: &[f64], window: usize) -> Vec<(usize, usize)> {
    const TOL: f64 = 1e-12;
    if curve.is_empty() {
        return Vec::new();
    }
    let s = smooth(curve, window);
    let last = s.len() - 1;
    let is_min = |i: usize| {
        let lo = i.saturating_sub(window);
        let hi = (i + window).min(last);
        (lo..=hi).all(|j| s[i] <= s[j] + TOL)
    };
    let rises_around = |start: usize, end: usize| {
        let level = s[start..=end].iter().cloned().fold(f64::INFINITY, f64::min);
        let lo = start.saturating_sub(window);
        let hi = (end + window).min(last);
        (lo..start).chain(end + 1..=hi).any(|j| s[j] > level + TOL)
    };
    let mut runs = Vec::new();
    let mut run_start: Option<usize> = None;
    for i in 0..=s.len() {
        let hit = i < s.len() && is_min(i);
        match (hit, run_start) {
            (true, None) => run_start = Some(i),
            (false, Some(start)) => {
                if rises_around(start, i - 1) {
                    runs.push((start, i - 1));
                }
                run_start = None;
            }
            _ => {}
        }
    }
    runs
}

/// Middle of every run from [`minimum_runs`].
pub fn detect_minima(curve: &[f64], window: usize) -> Vec<usize> {
    minimum_runs(curve, window)
        .into_iter()
        .map(|(a, b)| (a + b) / 2)
        .collect()
}

/// Robust scales from the minimum runs of the NVI curve.
///
/// A run is cut into stretches over which the best partition stays the same;
/// a flat NVI plateau can span several stable partitions. Every stretch of at
/// least `window` grid points contributes its middle, and a run without such
/// a stretch contributes the middle of the stretch holding the lowest raw NVI
/// (the longer one on ties).
pub fn robust_scales(scales: &[ScaleRecord], window: usize) -> Vec<usize> {
    let curve: Vec<f64> = scales.iter().map(|s| s.nvi).collect();
    let mut out = Vec::new();
    for (start, end) in minimum_runs(&curve, window) {
        let mut stretches = Vec::new();
        let mut seg = start;
        for i in start + 1..=end + 1 {
            if i > end || scales[i].best != scales[seg].best {
                stretches.push((seg, i - 1));
                seg = i;
            }
        }
        let long: Vec<usize> = stretches
            .iter()
            .filter(|(a, b)| b - a + 1 >= window.max(1))
            .map(|(a, b)| (a + b) / 2)
            .collect();
        if long.is_empty() {
            let lowest = |&(a, b): &(usize, usize)| curve[a..=b].iter().cloned().fold(f64::INFINITY, f64::min);
            let (a, b) = *stretches
                .iter()
                .min_by(|x, y| lowest(x).total_cmp(&lowest(y)).then((y.1 - y.0).cmp(&(x.1 - x.0))))
                .expect("a run holds at least one point");
            out.push((a + b) / 2);
        } else {
            out.extend(long);
        }
    }
    out
}

/// Drops candidates whose best partition has more than `fraction` singleton communities.
pub fn discard_low_granularity(scales: &[ScaleRecord], candidates: &[usize], fraction: f64) -> Vec<usize> {
    candidates
        .iter()
        .copied()
        .filter(|&i| scales[i].best.singleton_fraction() <= fraction)
        .collect()
}

/// Minima detection followed by the discard rules.
pub fn select_scales(
    scales: &[ScaleRecord],
    window: usize,
    singleton_fraction: f64,
) -> (Vec<usize>, Vec<usize>, Vec<Discarded>) {
    let robust = robust_scales(scales, window);
    let mut discarded = Vec::new();

    let granular = discard_low_granularity(scales, &robust, singleton_fraction);
    for &i in &robust {
        if !granular.contains(&i) {
            discarded.push(Discarded {
                scale: i,
                reason: DiscardReason::LowGranularity,
            });
        }
    }

    let mut selected: Vec<usize> = Vec::new();
    for i in granular {
        if scales[i].best.num_communities() <= 1 {
            discarded.push(Discarded {
                scale: i,
                reason: DiscardReason::Trivial,
            });
            continue;
        }
        if let Some(pos) = selected.iter().position(|&j| scales[j].best == scales[i].best) {
            let dropped = if scales[i].nvi < scales[selected[pos]].nvi {
                std::mem::replace(&mut selected[pos], i)
            } else {
                i
            };
            discarded.push(Discarded {
                scale: dropped,
                reason: DiscardReason::Duplicate,
            });
            continue;
        }
        selected.push(i);
    }
    selected.sort_unstable();
    discarded.sort_by_key(|d| d.scale);
    (robust, selected, discarded)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(index: usize, best: Partition, nvi: f64) -> ScaleRecord {
        ScaleRecord {
            index,
            markov_time: index as f64,
            best,
            best_quality: 0.0,
            nvi,
            distinct_partitions: 1,
            ensemble: None,
        }
    }

    #[test]
    fn config_validation() {
        assert!(SweepConfig::default().validate().is_ok());
        let bad = SweepConfig {
            n_tries: 1,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = SweepConfig {
            min_scale: 1.0,
            max_scale: 1.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn grid_is_log_spaced() {
        let cfg = SweepConfig {
            n_scale: 7,
            ..Default::default()
        };
        let t = cfg.times();
        assert!((t[0] - 1e-3).abs() < 1e-15);
        assert!((t[3] - 1.0).abs() < 1e-12);
        assert!((t[6] - 1e3).abs() < 1e-9);
    }

    #[test]
    fn minima_of_a_two_valley_curve() {
        let mut curve = vec![0.5; 40];
        for v in curve.iter_mut().take(16).skip(10) {
            *v = 0.0;
        }
        curve[30] = 0.05;
        curve[29] = 0.2;
        curve[31] = 0.2;
        let minima = detect_minima(&curve, 5);
        assert_eq!(minima, vec![12, 30]);
        assert!(detect_minima(&[0.3; 25], 5).is_empty());
    }

    #[test]
    fn edge_plateau_counts_when_curve_rises() {
        let curve: Vec<f64> = (0..30).map(|i| if i < 8 { 0.0 } else { 0.4 }).collect();
        assert_eq!(detect_minima(&curve, 5), vec![2]);
    }

    #[test]
    fn discard_rules() {
        let n = 20;
        let singles = Partition::singletons(n);
        let halves = Partition::new((0..n).map(|i| i / 10).collect());
        let scales = vec![
            record(0, singles.clone(), 0.0),
            record(1, halves.clone(), 0.0),
            record(2, halves.clone(), 0.0),
            record(3, Partition::whole(n), 0.0),
        ];
        let kept = discard_low_granularity(&scales, &[0, 1, 2, 3], 0.8);
        assert_eq!(kept, vec![1, 2, 3]);
    }

    #[test]
    fn flat_plateau_splits_at_stable_partitions() {
        let n = 8;
        let quarters = Partition::new((0..n).map(|i| i / 2).collect());
        let halves = Partition::new((0..n).map(|i| i / 4).collect());
        let odd = Partition::new(vec![0, 0, 1, 1, 1, 2, 2, 2]);
        let mut scales = Vec::new();
        for i in 0..30 {
            let (best, nvi) = match i {
                0..=4 => (Partition::singletons(n), 0.4),
                5..=11 => (quarters.clone(), 0.0),
                12 => (odd.clone(), 0.0),
                13..=24 => (halves.clone(), 0.0),
                _ => (Partition::whole(n), 0.4),
            };
            scales.push(record(i, best, nvi));
        }
        assert_eq!(robust_scales(&scales, 5), vec![9, 17]);
        let (robust, selected, discarded) = select_scales(&scales, 5, 0.8);
        assert_eq!(robust, selected);
        assert!(discarded.is_empty());

        // a dip without any long stretch keeps the one at its lowest point
        let mut dip: Vec<ScaleRecord> = (0..20).map(|i| record(i, Partition::whole(n), 0.5)).collect();
        dip[9] = record(9, quarters.clone(), 0.1);
        dip[10] = record(10, halves.clone(), 0.0);
        dip[11] = record(11, halves, 0.0);
        assert_eq!(robust_scales(&dip, 5), vec![10]);
    }

    #[test]
    fn duplicates_keep_the_lower_nvi() {
        let n = 8;
        let halves = Partition::new((0..n).map(|i| i / 4).collect());
        let mut scales: Vec<ScaleRecord> = (0..40).map(|i| record(i, Partition::whole(n), 0.5)).collect();
        scales[10] = record(10, halves.clone(), 0.02);
        scales[30] = record(30, halves, 0.01);
        let (_, selected, discarded) = select_scales(&scales, 5, 0.8);
        assert_eq!(selected, vec![30]);
        assert!(discarded.contains(&Discarded {
            scale: 10,
            reason: DiscardReason::Duplicate
        }));
    }
}
