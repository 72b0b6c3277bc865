//! Leiden-style optimisation of linearized stability / generalized modularity.
//!
//! Both objectives score a move of node `u` into community `C` as
//! `internal · k_{u,C} − null · s_u · S_C / 2m`, so one engine serves both:
//! Markov time `t` uses `(t, 1)`, resolution `γ` uses `(1, γ)`.

use std::collections::VecDeque;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::graph::WeightedGraph;
use crate::partition::Partition;

const MAX_LEVELS: usize = 64;
const MAX_PASSES: usize = 16;
const GAIN_EPS: f64 = 1e-10;

#[derive(Debug, Clone, Copy)]
struct Coeffs {
    internal: f64,
    null: f64,
}

impl Coeffs {
    fn gamma(&self) -> f64 {
        self.null / self.internal
    }
}

/// Graph at one aggregation level. `self_weight` holds ordered-pair weight
/// already internal to each super-node.
#[derive(Debug, Clone)]
struct Level {
    adjacency: Vec<Vec<(usize, f64)>>,
    self_weight: Vec<f64>,
    strength: Vec<f64>,
}

impl Level {
    fn len(&self) -> usize {
        self.strength.len()
    }
}

/// Reusable optimiser over one graph.
#[derive(Debug, Clone)]
pub struct StabilityOptimizer {
    base: Level,
    two_m: f64,
}

impl StabilityOptimizer {
    pub fn new(graph: &WeightedGraph) -> Self {
        let n = graph.node_count();
        let adjacency = (0..n)
            .map(|u| graph.neighbors(u).iter().map(|&(v, w)| (v, w as f64)).collect())
            .collect();
        let strength = (0..n).map(|u| graph.strength(u) as f64).collect();
        StabilityOptimizer {
            base: Level {
                adjacency,
                self_weight: vec![0.0; n],
                strength,
            },
            two_m: 2.0 * graph.total_weight() as f64,
        }
    }

    /// Best partition found for linearized stability at Markov time `t`.
    pub fn optimize_stability(&self, t: f64, seed: u64) -> Partition {
        self.optimize(
            Coeffs {
                internal: t,
                null: 1.0,
            },
            seed,
        )
    }

    /// Best partition found for generalized modularity at resolution `gamma`.
    pub fn optimize_modularity(&self, gamma: f64, seed: u64) -> Partition {
        self.optimize(
            Coeffs {
                internal: 1.0,
                null: gamma,
            },
            seed,
        )
    }

    fn optimize(&self, coeffs: Coeffs, seed: u64) -> Partition {
        let n = self.base.len();
        let mut best = Partition::singletons(n);
        if self.two_m == 0.0 || n == 0 {
            return best;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut best_q = self.objective(&best, coeffs);
        for _ in 0..MAX_PASSES {
            let candidate = self.pass(&best, coeffs, &mut rng);
            let q = self.objective(&candidate, coeffs);
            if q > best_q + GAIN_EPS * best_q.abs().max(1.0) {
                best = candidate;
                best_q = q;
            } else {
                break;
            }
        }
        best
    }

    /// Objective in engine units: Σ_c internal·in_c − null·S_c²/2m.
    fn objective(&self, p: &Partition, coeffs: Coeffs) -> f64 {
        let k = p.num_communities();
        let mut inside = vec![0.0; k];
        let mut tot = vec![0.0; k];
        for u in 0..self.base.len() {
            let cu = p.community_of(u);
            tot[cu] += self.base.strength[u];
            for &(v, w) in &self.base.adjacency[u] {
                if p.community_of(v) == cu {
                    inside[cu] += w;
                }
            }
        }
        inside
            .iter()
            .zip(&tot)
            .map(|(&i, &s)| coeffs.internal * i - coeffs.null * s * s / self.two_m)
            .sum()
    }

    /// One full multi-level run starting from `initial`.
    fn pass(&self, initial: &Partition, coeffs: Coeffs, rng: &mut ChaCha8Rng) -> Partition {
        let mut level = self.base.clone();
        let mut membership: Vec<usize> = (0..level.len()).collect();
        let mut comm: Vec<usize> = initial.assignment().to_vec();

        for _ in 0..MAX_LEVELS {
            self.move_nodes(&level, &mut comm, coeffs, rng);
            let part = Partition::new(comm);
            if part.num_communities() == level.len() {
                comm = part.assignment().to_vec();
                break;
            }
            let mut refined = self.refine(&level, &part, coeffs, rng);
            if refined.num_communities() == level.len() {
                refined = part.clone();
            }
            let next = aggregate(&level, &refined);
            let mut next_comm = vec![0; refined.num_communities()];
            for u in 0..level.len() {
                next_comm[refined.community_of(u)] = part.community_of(u);
            }
            for m in membership.iter_mut() {
                *m = refined.community_of(*m);
            }
            level = next;
            comm = next_comm;
        }
        Partition::new(membership.into_iter().map(|m| comm[m]).collect())
    }

    /// Greedy queue-driven local moves. Ties keep the current community.
    fn move_nodes(&self, level: &Level, comm: &mut [usize], coeffs: Coeffs, rng: &mut ChaCha8Rng) {
        let n = level.len();
        let mut tot = vec![0.0; n];
        let mut size = vec![0usize; n];
        for u in 0..n {
            tot[comm[u]] += level.strength[u];
            size[comm[u]] += 1;
        }
        let mut empty: Vec<usize> = (0..n).rev().filter(|&c| size[c] == 0).collect();

        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(rng);
        let mut queue: VecDeque<usize> = order.into();
        let mut queued = vec![true; n];

        let mut k_to = vec![0.0; n];
        let mut seen = vec![false; n];
        let mut touched = Vec::new();

        while let Some(u) = queue.pop_front() {
            queued[u] = false;
            let cur = comm[u];
            let s_u = level.strength[u];
            for &(v, w) in &level.adjacency[u] {
                let c = comm[v];
                if !seen[c] {
                    seen[c] = true;
                    touched.push(c);
                }
                k_to[c] += w;
            }
            tot[cur] -= s_u;
            size[cur] -= 1;

            let score = |c: usize, k: f64| coeffs.internal * k - coeffs.null * s_u * tot[c] / self.two_m;
            let mut best = cur;
            let mut best_score = score(cur, k_to[cur]);
            for &c in &touched {
                if c == cur {
                    continue;
                }
                let sc = score(c, k_to[c]);
                if sc > best_score + GAIN_EPS {
                    best = c;
                    best_score = sc;
                }
            }
            if size[cur] > 0 && 0.0 > best_score + GAIN_EPS {
                best = empty.pop().expect("an empty community exists while u is not alone");
            }

            tot[best] += s_u;
            size[best] += 1;
            comm[u] = best;
            if best != cur {
                if size[cur] == 0 {
                    empty.push(cur);
                }
                for &(v, _) in &level.adjacency[u] {
                    if !queued[v] && comm[v] != best {
                        queued[v] = true;
                        queue.push_back(v);
                    }
                }
            }
            for &c in &touched {
                k_to[c] = 0.0;
                seen[c] = false;
            }
            touched.clear();
        }
    }

    /// Merges singletons inside each community into well-connected sub-communities.
    fn refine(&self, level: &Level, part: &Partition, coeffs: Coeffs, rng: &mut ChaCha8Rng) -> Partition {
        let n = level.len();
        let gamma = coeffs.gamma();
        let mut comm_tot = vec![0.0; part.num_communities()];
        let mut k_in_comm = vec![0.0; n];
        for u in 0..n {
            let cu = part.community_of(u);
            comm_tot[cu] += level.strength[u];
            k_in_comm[u] = level.adjacency[u]
                .iter()
                .filter(|&&(v, _)| part.community_of(v) == cu)
                .map(|&(_, w)| w)
                .sum();
        }

        let mut refined: Vec<usize> = (0..n).collect();
        let mut r_tot = level.strength.clone();
        let mut r_ext = k_in_comm.clone();
        let mut r_size = vec![1usize; n];

        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(rng);
        let mut k_to = vec![0.0; n];
        let mut seen = vec![false; n];
        let mut touched = Vec::new();

        for u in order {
            let own = refined[u];
            if r_size[own] != 1 {
                continue;
            }
            let cu = part.community_of(u);
            let s_u = level.strength[u];
            if k_in_comm[u] < gamma * s_u * (comm_tot[cu] - s_u) / self.two_m {
                continue;
            }
            for &(v, w) in &level.adjacency[u] {
                if part.community_of(v) != cu {
                    continue;
                }
                let r = refined[v];
                if !seen[r] {
                    seen[r] = true;
                    touched.push(r);
                }
                k_to[r] += w;
            }
            let mut best = own;
            let mut best_score = 0.0;
            for &r in &touched {
                if r == own {
                    continue;
                }
                let well_connected =
                    r_ext[r] >= gamma * r_tot[r] * (comm_tot[cu] - r_tot[r]) / self.two_m;
                if !well_connected {
                    continue;
                }
                let sc = coeffs.internal * k_to[r] - coeffs.null * s_u * r_tot[r] / self.two_m;
                if sc > best_score + GAIN_EPS {
                    best = r;
                    best_score = sc;
                }
            }
            if best != own {
                refined[u] = best;
                r_tot[best] += s_u;
                r_ext[best] += k_in_comm[u] - 2.0 * k_to[best];
                r_size[best] += 1;
                r_size[own] = 0;
                r_tot[own] = 0.0;
            }
            for &r in &touched {
                k_to[r] = 0.0;
                seen[r] = false;
            }
            touched.clear();
        }
        Partition::new(refined)
    }
}

fn aggregate(level: &Level, groups: &Partition) -> Level {
    let k = groups.num_communities();
    let mut self_weight = vec![0.0; k];
    let mut strength = vec![0.0; k];
    let mut adjacency: Vec<Vec<(usize, f64)>> = vec![Vec::new(); k];
    let members = groups.communities();
    let mut acc = vec![0.0; k];
    let mut seen = vec![false; k];
    let mut touched = Vec::new();
    for (g, nodes) in members.iter().enumerate() {
        for &u in nodes {
            self_weight[g] += level.self_weight[u];
            strength[g] += level.strength[u];
            for &(v, w) in &level.adjacency[u] {
                let h = groups.community_of(v);
                if h == g {
                    self_weight[g] += w;
                } else {
                    if !seen[h] {
                        seen[h] = true;
                        touched.push(h);
                    }
                    acc[h] += w;
                }
            }
        }
        touched.sort_unstable();
        adjacency[g] = touched.iter().map(|&h| (h, acc[h])).collect();
        for &h in &touched {
            acc[h] = 0.0;
            seen[h] = false;
        }
        touched.clear();
    }
    Level {
        adjacency,
        self_weight,
        strength,
    }
}

/// Optimises linearized stability at Markov time `t`; deterministic given `seed`.
pub fn optimize_partition(graph: &WeightedGraph, t: f64, seed: u64) -> Partition {
    StabilityOptimizer::new(graph).optimize_stability(t, seed)
}
