//! Shared oracles for the integration suites.
#![allow(dead_code)]

use exposure_core::stats::{Design, Family, RegressionData, RegressionSpec};
use exposure_core::{Partition, WeightedGraph};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Every set partition of `0..n`, as restricted growth strings.
pub fn all_partitions(n: usize) -> Vec<Vec<usize>> {
    fn grow(prefix: &mut Vec<usize>, max: usize, n: usize, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == n {
            out.push(prefix.clone());
            return;
        }
        for c in 0..=max + 1 {
            prefix.push(c);
            grow(prefix, max.max(c), n, out);
            prefix.pop();
        }
    }
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    let mut prefix = vec![0];
    grow(&mut prefix, 0, n, &mut out);
    out
}

/// Linearized stability by the ordered-pair double sum.
pub fn brute_stability(g: &WeightedGraph, p: &Partition, t: f64) -> f64 {
    let two_m = 2.0 * g.total_weight() as f64;
    let mut q = 0.0;
    for i in 0..g.node_count() {
        for j in 0..g.node_count() {
            if p.community_of(i) == p.community_of(j) {
                q += t * g.weight(i, j) as f64 / two_m
                    - g.strength(i) as f64 * g.strength(j) as f64 / (two_m * two_m);
            }
        }
    }
    q
}

/// Exhaustive maximum of linearized stability.
pub fn exhaustive_optimum(g: &WeightedGraph, t: f64) -> (f64, Partition) {
    all_partitions(g.node_count())
        .into_iter()
        .map(|a| {
            let p = Partition::new(a);
            (brute_stability(g, &p, t), p)
        })
        .fold((f64::NEG_INFINITY, Partition::whole(0)), |best, cur| {
            if cur.0 > best.0 {
                cur
            } else {
                best
            }
        })
}

/// Random graph with integer weights in `1..=max_w` and at least one edge.
pub fn random_graph(rng: &mut ChaCha8Rng, n: usize, p_edge: f64, max_w: u64) -> WeightedGraph {
    loop {
        let mut edges = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                if rng.random_bool(p_edge) {
                    edges.push((u, v, rng.random_range(1..=max_w)));
                }
            }
        }
        if !edges.is_empty() {
            let labels = (0..n).map(|i| format!("n{i}")).collect();
            return WeightedGraph::from_edges(labels, edges).unwrap();
        }
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Zero-truncated NB draw via the gamma–Poisson mixture, rejecting zeros.
pub fn ztnb_sample(rng: &mut ChaCha8Rng, mu: f64, theta: f64) -> f64 {
    use rand_distr::{Distribution, Gamma, Poisson};
    let gamma = Gamma::new(theta, mu / theta).unwrap();
    loop {
        let lambda: f64 = gamma.sample(rng);
        if lambda <= 0.0 {
            continue;
        }
        let y: f64 = Poisson::new(lambda).unwrap().sample(rng);
        if y >= 1.0 {
            return y;
        }
    }
}

pub fn beta_sample(rng: &mut ChaCha8Rng, mu: f64, phi: f64) -> f64 {
    use rand_distr::{Beta, Distribution};
    let y: f64 = Beta::new(mu * phi, (1.0 - mu) * phi).unwrap().sample(rng);
    y.clamp(1e-12, 1.0 - 1e-12)
}

fn normals(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample(rand_distr::StandardNormal)).collect()
}

/// Responses and a one-covariate design drawn from ZTNB(exp(b0 + b1 x), theta).
pub fn simulate_ztnb(seed: u64, n: usize, beta: [f64; 2], theta: f64) -> (Vec<f64>, Design) {
    let mut r = rng(seed);
    let x = normals(&mut r, n);
    let y = x
        .iter()
        .map(|&xi| ztnb_sample(&mut r, (beta[0] + beta[1] * xi).exp(), theta))
        .collect();
    (y, Design::with_intercept(n, &[("x".into(), x)]))
}

/// Responses and a one-covariate design from Beta(logistic(b0 + b1 x), phi).
pub fn simulate_beta(seed: u64, n: usize, beta: [f64; 2], phi: f64) -> (Vec<f64>, Design) {
    let mut r = rng(seed);
    let x = normals(&mut r, n);
    let y = x
        .iter()
        .map(|&xi| beta_sample(&mut r, 1.0 / (1.0 + (-(beta[0] + beta[1] * xi)).exp()), phi))
        .collect();
    (y, Design::with_intercept(n, &[("x".into(), x)]))
}

/// One planted predictor among 24 noise columns, n = 200, ZTNB response.
/// The planted column sits at a seed-dependent position.
pub fn planted_selection_data(seed: u64) -> RegressionData {
    let n = 200;
    let mut r = rng(seed);
    let signal_at = (seed % 25) as usize;
    let columns: Vec<String> = (0..25)
        .map(|j| if j == signal_at { "signal".into() } else { format!("noise{j}") })
        .collect();
    let values: Vec<Vec<f64>> = (0..n).map(|_| normals(&mut r, 25)).collect();
    let response = values
        .iter()
        .map(|row| ztnb_sample(&mut r, (0.5 + 0.6 * row[signal_at]).exp(), 2.0))
        .collect();
    RegressionData {
        ids: (0..n).map(|i| format!("c{i}")).collect(),
        response,
        columns,
        values,
    }
}

/// Five pure-noise candidates (the width of the synthetic survey), n = 1000.
pub fn null_selection_data(seed: u64) -> RegressionData {
    let n = 1000;
    let mut r = rng(seed);
    let values: Vec<Vec<f64>> = (0..n).map(|_| normals(&mut r, 5)).collect();
    let response = (0..n).map(|_| ztnb_sample(&mut r, 0.5f64.exp(), 2.0)).collect();
    RegressionData {
        ids: (0..n).map(|i| format!("c{i}")).collect(),
        response,
        columns: (1..=5).map(|j| format!("noise{j}")).collect(),
        values,
    }
}

pub fn selection_spec(data: &RegressionData) -> RegressionSpec {
    RegressionSpec {
        family: Family::ZeroTruncatedNegBinomial,
        response: "y".into(),
        candidates: data.columns.clone(),
        bic_selection: true,
    }
}

/// Normalized cut from the full weight matrix, one node pair at a time.
pub fn brute_isolation(g: &WeightedGraph, community: &[usize]) -> f64 {
    let n = g.node_count();
    let inside: Vec<bool> = (0..n).map(|u| community.contains(&u)).collect();
    let (mut cut, mut internal, mut total) = (0.0, 0.0, 0.0);
    for u in 0..n {
        for v in u + 1..n {
            let w = g.weight(u, v) as f64;
            total += w;
            match (inside[u], inside[v]) {
                (true, true) => internal += w,
                (true, false) | (false, true) => cut += w,
                _ => {}
            }
        }
    }
    if cut == 0.0 {
        return 0.0;
    }
    cut / (2.0 * internal + cut) + cut / (2.0 * (total - internal) + cut)
}

/// Gini of internal degrees from the ordered-pair double sum.
pub fn brute_inequality(g: &WeightedGraph, community: &[usize]) -> f64 {
    let k: Vec<f64> = community
        .iter()
        .map(|&u| community.iter().map(|&v| g.weight(u, v) as f64).sum())
        .collect();
    let n = k.len() as f64;
    let mean = k.iter().sum::<f64>() / n;
    if mean == 0.0 {
        return 0.0;
    }
    let mut diff = 0.0;
    for a in &k {
        for b in &k {
            diff += (a - b).abs();
        }
    }
    diff / (2.0 * n * n * mean)
}

/// Random subset of `0..n` with at least one member.
pub fn random_community(rng: &mut ChaCha8Rng, n: usize) -> Vec<usize> {
    let p = rng.random_range(0.05..0.9);
    let mut c: Vec<usize> = (0..n).filter(|_| rng.random_bool(p)).collect();
    if c.is_empty() {
        c.push(rng.random_range(0..n));
    }
    c
}

/// Largest deviation of isolation and inequality from the pair-loop oracles
/// over `graphs` random weighted graphs of up to 100 nodes, three
/// communities each.
pub fn index_oracle_error(seed: u64, graphs: usize) -> f64 {
    use exposure_core::indices::{connectivity_inequality, structural_isolation};
    let mut r = rng(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..graphs {
        let n = r.random_range(2..=100);
        let density = r.random_range(0.02..0.5);
        let g = random_graph(&mut r, n, density, 20);
        for _ in 0..3 {
            let c = random_community(&mut r, n);
            let si = structural_isolation(&g, &c).unwrap();
            let ci = connectivity_inequality(&g, &c).unwrap();
            worst = worst
                .max((si - brute_isolation(&g, &c)).abs())
                .max((ci - brute_inequality(&g, &c)).abs());
        }
    }
    worst
}

/// Distinct member pairs with different labels, and all distinct pairs.
pub fn differing_pairs(counts: &[u64]) -> (u64, u64) {
    let members: Vec<usize> = counts
        .iter()
        .enumerate()
        .flat_map(|(l, &n)| std::iter::repeat_n(l, n as usize))
        .collect();
    let (mut differing, mut pairs) = (0, 0);
    for i in 0..members.len() {
        for j in i + 1..members.len() {
            pairs += 1;
            differing += u64::from(members[i] != members[j]);
        }
    }
    (differing, pairs)
}

/// Gini-Simpson agrees with pair enumeration: the pair count it implies is
/// the enumerated integer and the value is within rounding of the ratio.
pub fn gini_simpson_matches_pairs(counts: &[u64]) -> bool {
    let g = exposure_core::indices::gini_simpson(counts.iter().map(|&c| c as f64)).unwrap();
    let (differing, pairs) = differing_pairs(counts);
    if pairs == 0 {
        return g == 0.0;
    }
    let ratio = differing as f64 / pairs as f64;
    (g * pairs as f64).round() as u64 == differing && (g - ratio).abs() <= 2.0 * f64::EPSILON
}

/// Σ_v CO(v) = Σ_i |E_i| and CO non-increasing from each planted level to
/// the next coarser one; `Err` describes the first violation.
pub fn hypergraph_identities(data: &exposure_core::synth::SynthData) -> Result<(), String> {
    let n = data.network.consumers().len();
    let mut previous: Option<Vec<usize>> = None;
    for (level, truth) in data.truth.iter().enumerate() {
        let cover = exposure_core::hyper_cover(&data.network, truth, level).map_err(|e| e.to_string())?;
        let co = cover.overlap_counts(n);
        let incidences: usize = cover.hyperedges.iter().map(Vec::len).sum();
        if co.iter().sum::<usize>() != incidences {
            return Err(format!("level {level}: overlap sum differs from incidences"));
        }
        if let Some(prev) = &previous {
            if let Some(v) = (0..n).find(|&v| co[v] > prev[v]) {
                return Err(format!("level {level}: consumer {v} overlap rises {} → {}", prev[v], co[v]));
            }
        }
        previous = Some(co);
    }
    Ok(())
}
