//! Fisher–Freeman–Halton test for r×c tables: full enumeration of tables with
//! the observed margins, or a fixed-margin permutation estimate.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ContingencyTable;
use crate::error::{Error, Result};

/// Exact mode refuses tables with more candidate tables than this.
pub const DEFAULT_ENUMERATION_BOUND: u64 = 10_000_000;

const SHARD_DRAWS: u64 = 10_000;
/// Relative slack when comparing table probabilities with the observed one.
const PROB_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum FisherMode {
    Exact { bound: u64 },
    MonteCarlo { draws: u64, seed: u64 },
}

impl FisherMode {
    pub fn exact() -> Self {
        FisherMode::Exact {
            bound: DEFAULT_ENUMERATION_BOUND,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FisherResult {
    pub p_value: f64,
    /// Monte Carlo standard error; `None` for exact results.
    pub standard_error: Option<f64>,
    /// Tables enumerated (exact) or drawn (Monte Carlo).
    pub tables: u64,
}

fn ln_factorials(n: u64) -> Vec<f64> {
    let mut out = Vec::with_capacity(n as usize + 1);
    out.push(0.0);
    let mut acc = 0.0;
    for k in 1..=n {
        acc += (k as f64).ln();
        out.push(acc);
    }
    out
}

/// Binomial coefficient, `None` past `u128`.
fn binomial(a: u64, b: u64) -> Option<u128> {
    let b = b.min(a - b);
    let mut c: u128 = 1;
    for k in 0..b {
        c = c.checked_mul(u128::from(a - k))? / u128::from(k + 1);
    }
    Some(c)
}

/// Ways to fill one column with the given cells: `c!/Π x_i!`.
fn column_ways(cells: impl IntoIterator<Item = u64>) -> Option<u128> {
    let mut left = 0;
    let mut ways: u128 = 1;
    for x in cells {
        left += x;
        ways = ways.checked_mul(binomial(left, x)?)?;
    }
    Some(ways)
}

/// Largest table count for which integer weights give a correctly rounded p-value.
const EXACT_WEIGHT_LIMIT: u128 = 1 << 53;

fn margins(table: &ContingencyTable) -> Result<(Vec<u64>, Vec<u64>)> {
    let rows = table.row_sums();
    let cols = table.col_sums();
    if rows.len() < 2 || cols.len() < 2 || rows.contains(&0) || cols.contains(&0) {
        return Err(Error::DegenerateMargins);
    }
    Ok((rows, cols))
}

/// Two-sided p-value: total probability of tables no more likely than the observed one.
pub fn fisher_exact(table: &ContingencyTable, mode: FisherMode) -> Result<FisherResult> {
    let (rows, cols) = margins(table)?;
    let n: u64 = rows.iter().sum();
    let lf = ln_factorials(n);
    // log P(table) = const − Σ ln x_ij!, so compare Σ ln x_ij! only.
    let cells_term = |cells: &mut dyn Iterator<Item = u64>| -> f64 { cells.map(|x| lf[x as usize]).sum() };
    let observed = cells_term(&mut table.counts.iter().flatten().copied());
    let constant = rows.iter().chain(&cols).map(|&x| lf[x as usize]).sum::<f64>() - lf[n as usize];
    let threshold = observed - PROB_TOL;

    match mode {
        FisherMode::Exact { bound } => {
            // Tables are weighted by Π_j c_j!/Π_i x_ij!, proportional to their
            // probability and summing to the multinomial n!/Π_i r_i!; when that
            // fits in a double's mantissa the p-value is a ratio of exact integers.
            let ncols = cols.len();
            let observed_ways = (0..ncols)
                .try_fold(1u128, |w, j| w.checked_mul(column_ways(table.counts.iter().map(|r| r[j]))?));
            let weights = column_ways(rows.iter().copied())
                .filter(|&total| total <= EXACT_WEIGHT_LIMIT)
                .and(observed_ways);
            let mut walker = Enumerator {
                lf: &lf,
                cols: &cols,
                rem: rows.clone(),
                constant,
                threshold,
                bound,
                visited: 0,
                p: 0.0,
                observed_ways: weights,
                extreme_ways: 0,
                total_ways: 0,
            };
            walker.column(0, 0.0, 1)?;
            let p = match weights {
                Some(_) => walker.extreme_ways as f64 / walker.total_ways as f64,
                None => walker.p,
            };
            Ok(FisherResult {
                p_value: p.clamp(0.0, 1.0),
                standard_error: None,
                tables: walker.visited,
            })
        }
        FisherMode::MonteCarlo { draws, seed } => {
            if draws == 0 {
                return Err(Error::ConfigError("Monte Carlo needs at least one draw".into()));
            }
            let row_of: Vec<usize> = rows
                .iter()
                .enumerate()
                .flat_map(|(i, &r)| std::iter::repeat_n(i, r as usize))
                .collect();
            let col_labels: Vec<usize> = cols
                .iter()
                .enumerate()
                .flat_map(|(j, &c)| std::iter::repeat_n(j, c as usize))
                .collect();
            let shards = draws.div_ceil(SHARD_DRAWS);
            let hits: u64 = (0..shards)
                .into_par_iter()
                .map(|k| {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    rng.set_stream(k);
                    let todo = SHARD_DRAWS.min(draws - k * SHARD_DRAWS);
                    let mut labels = col_labels.clone();
                    let mut cells = vec![0u64; rows.len() * cols.len()];
                    let mut hits = 0;
                    for _ in 0..todo {
                        labels.shuffle(&mut rng);
                        cells.iter_mut().for_each(|x| *x = 0);
                        for (&i, &j) in row_of.iter().zip(&labels) {
                            cells[i * cols.len() + j] += 1;
                        }
                        if cells_term(&mut cells.iter().copied()) >= threshold {
                            hits += 1;
                        }
                    }
                    hits
                })
                .sum();
            let p = hits as f64 / draws as f64;
            Ok(FisherResult {
                p_value: p,
                standard_error: Some((p * (1.0 - p) / draws as f64).sqrt()),
                tables: draws,
            })
        }
    }
}

struct Enumerator<'a> {
    lf: &'a [f64],
    cols: &'a [u64],
    rem: Vec<u64>,
    constant: f64,
    threshold: f64,
    bound: u64,
    visited: u64,
    p: f64,
    /// Integer weight of the observed table when the integer path applies.
    observed_ways: Option<u128>,
    extreme_ways: u128,
    total_ways: u128,
}

impl Enumerator<'_> {
    /// Fills column `j`; the last column is forced by the remaining row sums.
    /// `ways` carries the integer weight of the cells filled so far.
    fn column(&mut self, j: usize, acc: f64, ways: u128) -> Result<()> {
        if j + 1 == self.cols.len() {
            self.visited += 1;
            if self.visited > self.bound {
                return Err(Error::FallbackRequired { bound: self.bound });
            }
            if let Some(observed) = self.observed_ways {
                let w = ways * column_ways(self.rem.iter().copied()).expect("bounded by the total");
                self.total_ways += w;
                if w <= observed {
                    self.extreme_ways += w;
                }
                return Ok(());
            }
            let last: f64 = self.rem.iter().map(|&x| self.lf[x as usize]).sum();
            let term = acc + last;
            if term >= self.threshold {
                self.p += (self.constant - term).exp();
            }
            return Ok(());
        }
        self.cell(j, 0, self.cols[j], acc, ways)
    }

    fn cell(&mut self, j: usize, i: usize, left: u64, acc: f64, ways: u128) -> Result<()> {
        let r = self.rem.len();
        if i + 1 == r {
            if left > self.rem[i] {
                return Ok(());
            }
            self.rem[i] -= left;
            let out = self.column(j + 1, acc + self.lf[left as usize], ways);
            self.rem[i] += left;
            return out;
        }
        let capacity_below: u64 = self.rem[i + 1..].iter().sum();
        let lo = left.saturating_sub(capacity_below);
        let hi = left.min(self.rem[i]);
        for x in lo..=hi {
            self.rem[i] -= x;
            let w = match self.observed_ways {
                Some(_) => ways * binomial(left, x).expect("bounded by the total"),
                None => ways,
            };
            let out = self.cell(j, i + 1, left - x, acc + self.lf[x as usize], w);
            self.rem[i] += x;
            out?;
        }
        Ok(())
    }
}
