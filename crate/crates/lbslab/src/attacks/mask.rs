//! Defeating the multiplicative mask. A disclosed value z = (d_a - d_b) * R
//! factors; every divisor of |z| no larger than the distance bound m is a
//! candidate for the true difference, and the true difference is always
//! among them. Candidates for different pairs are then pruned jointly: the
//! differences of one scene satisfy delta_ab + delta_bc = delta_ac on every
//! closed triangle, which cuts the combinatorics down to (usually) a single
//! surviving assignment.

use super::{stage, AttackError};
use crate::numkit::{self, BigInt};
use crate::protocol::PairDelta;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

/// Candidate signed differences for one disclosed z with bound m.
///
/// z = 0 pins the difference to exactly 0 (the mask is annihilated).
/// Otherwise every divisor d of |z| with d <= m yields the candidate
/// sign(z) * d. The true difference always qualifies: it divides z and its
/// magnitude is at most m.
pub fn unmask_difference(z: &BigInt, m: &BigInt) -> Result<Vec<BigInt>, AttackError> {
    if m < &BigInt::one() {
        return Err(AttackError::InvalidInput("bound m must be at least 1".into()));
    }
    if z.is_zero() {
        return Ok(vec![BigInt::zero()]);
    }
    let divisors = numkit::divisors_up_to(&z.abs(), m)?;
    Ok(if z.is_negative() {
        // Ascending numeric order.
        divisors.into_iter().rev().map(|d| -d).collect()
    } else {
        divisors
    })
}

/// Variant for masks of unknown sign: both signs of every divisor qualify.
pub fn unmask_difference_signed(z: &BigInt, m: &BigInt) -> Result<Vec<BigInt>, AttackError> {
    if m < &BigInt::one() {
        return Err(AttackError::InvalidInput("bound m must be at least 1".into()));
    }
    if z.is_zero() {
        return Ok(vec![BigInt::zero()]);
    }
    let divisors = numkit::divisors_up_to(&z.abs(), m)?;
    let mut out: Vec<BigInt> = divisors.iter().rev().map(|d| -d).collect();
    out.extend(divisors);
    Ok(out)
}

/// Candidate set for one pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairCandidates {
    pub pair: (usize, usize),
    #[serde(with = "crate::serde_util::bigint_str")]
    pub z: BigInt,
    #[serde(with = "crate::serde_util::bigint_vec_str")]
    pub candidates: Vec<BigInt>,
}

#[derive(Debug, Clone)]
pub struct FilterOutcome {
    /// Joint assignments that satisfy every triangle identity, in canonical
    /// pair order (0,1), (0,2), ..., (1,2), ...
    pub survivors: Vec<Vec<PairDelta>>,
    /// Exactly one survivor and the search ran to completion.
    pub unique: bool,
    /// The node budget ran out; `survivors` is a partial enumeration.
    pub budget_exceeded: bool,
    pub nodes_visited: u64,
}

struct Search {
    n: usize,
    /// DFS pair order: grouped by the larger index, so that when (a, b)
    /// with a >= 1 is reached, (x, a) and (x, b) are already assigned for
    /// every x < a and the triangle (x, a, b) closes immediately.
    order: Vec<(usize, usize)>,
    candidate_values: Vec<Vec<BigInt>>,
    candidate_lookup: Vec<BTreeSet<BigInt>>,
    budget: u64,
    nodes: u64,
    exceeded: bool,
    assigned: BTreeMap<(usize, usize), BigInt>,
    survivors: Vec<Vec<PairDelta>>,
}

impl Search {
    fn run(&mut self) {
        self.dfs(0);
    }

    fn record_survivor(&mut self) {
        let mut full = Vec::new();
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                full.push(PairDelta {
                    pair: (i, j),
                    delta: self.assigned[&(i, j)].clone(),
                });
            }
        }
        self.survivors.push(full);
    }

    fn try_assign(&mut self, pos: usize, value: BigInt) {
        if self.exceeded {
            return;
        }
        self.nodes += 1;
        if self.nodes > self.budget {
            self.exceeded = true;
            return;
        }
        let (a, b) = self.order[pos];
        // Verify every triangle (x, a, b) this assignment closes.
        for x in 0..a {
            let xa = &self.assigned[&(x, a)];
            let xb = &self.assigned[&(x, b)];
            if &(xa + &value) != xb {
                return;
            }
        }
        self.assigned.insert((a, b), value);
        self.dfs(pos + 1);
        self.assigned.remove(&(a, b));
    }

    fn dfs(&mut self, pos: usize) {
        if self.exceeded {
            return;
        }
        if pos == self.order.len() {
            self.record_survivor();
            return;
        }
        let (a, b) = self.order[pos];
        if a == 0 {
            // No triangle closes yet; branch over the full candidate set.
            let cands = self.candidate_values[pos].clone();
            for value in cands {
                self.try_assign(pos, value);
                if self.exceeded {
                    return;
                }
            }
        } else {
            // The triangle (0, a, b) forces the value; a set lookup decides.
            let forced = &self.assigned[&(0, b)] - &self.assigned[&(0, a)];
            if self.candidate_lookup[pos].contains(&forced) {
                self.try_assign(pos, forced);
            } else {
                self.nodes += 1;
                if self.nodes > self.budget {
                    self.exceeded = true;
                }
            }
        }
    }
}

/// Depth-first enumeration of joint difference assignments with pruning on
/// every closed triangle. Returns all consistent assignments, or a partial
/// set flagged `budget_exceeded` when the node budget runs out.
///
/// Only the pairs touching the first-processed POI branch freely; every
/// later pair is forced by a triangle. POIs are therefore relabeled so the
/// anchor with the cheapest two candidate sets goes first and its partners
/// follow in ascending set size, which keeps the pre-pruning frontier
/// small.
pub fn consistency_filter(
    sets: &[PairCandidates],
    n: usize,
    budget: u64,
) -> Result<FilterOutcome, AttackError> {
    if n < 2 {
        return Err(AttackError::InvalidInput("need at least two POIs".into()));
    }
    let expected = n * (n - 1) / 2;
    if sets.len() != expected {
        return Err(stage(
            "consistency-filter",
            format!("need candidate sets for all {expected} pairs, got {}", sets.len()),
        ));
    }
    let by_pair: BTreeMap<(usize, usize), &PairCandidates> =
        sets.iter().map(|s| (s.pair, s)).collect();
    if by_pair.len() != expected {
        return Err(stage("consistency-filter", "duplicate pair in candidate sets"));
    }
    for b in 1..n {
        for a in 0..b {
            if !by_pair.contains_key(&(a, b)) {
                return Err(stage(
                    "consistency-filter",
                    format!("missing candidate set for pair ({a}, {b})"),
                ));
            }
        }
    }

    // Relabeling: anchor = POI whose two smallest candidate sets have the
    // least product, partners ascending by set size.
    let set_len = |a: usize, b: usize| by_pair[&(a.min(b), a.max(b))].candidates.len() as u128;
    let mut anchor = 0;
    let mut best_cost = u128::MAX;
    for r in 0..n {
        let mut sizes: Vec<u128> = (0..n).filter(|&b| b != r).map(|b| set_len(r, b)).collect();
        sizes.sort_unstable();
        let cost = sizes[0].saturating_mul(*sizes.get(1).unwrap_or(&1));
        if cost < best_cost {
            best_cost = cost;
            anchor = r;
        }
    }
    let mut partners: Vec<usize> = (0..n).filter(|&b| b != anchor).collect();
    partners.sort_by_key(|&b| set_len(anchor, b));
    // relabel[new] = original index.
    let relabel: Vec<usize> = std::iter::once(anchor).chain(partners).collect();

    // Candidate sets in relabeled space. The value stored for new pair
    // (a, b) means d[relabel[a]] - d[relabel[b]], so sets whose original
    // orientation is reversed get negated.
    let mut order = Vec::with_capacity(expected);
    let mut candidate_values: Vec<Vec<BigInt>> = Vec::with_capacity(expected);
    for b in 1..n {
        for a in 0..b {
            let (oa, ob) = (relabel[a], relabel[b]);
            let original = by_pair[&(oa.min(ob), oa.max(ob))];
            let values: Vec<BigInt> = if oa < ob {
                original.candidates.clone()
            } else {
                original.candidates.iter().map(|c| -c).collect()
            };
            order.push((a, b));
            candidate_values.push(values);
        }
    }
    let candidate_lookup: Vec<BTreeSet<BigInt>> = candidate_values
        .iter()
        .map(|c| c.iter().cloned().collect())
        .collect();

    let mut search = Search {
        n,
        order,
        candidate_values,
        candidate_lookup,
        budget,
        nodes: 0,
        exceeded: false,
        assigned: BTreeMap::new(),
        survivors: Vec::new(),
    };
    search.run();

    // Map survivors back to canonical original pairs.
    let mut position = vec![0usize; n];
    for (new, &orig) in relabel.iter().enumerate() {
        position[orig] = new;
    }
    let survivors: Vec<Vec<PairDelta>> = search
        .survivors
        .iter()
        .map(|assignment| {
            let lookup: BTreeMap<(usize, usize), &BigInt> = assignment
                .iter()
                .map(|pd| (pd.pair, &pd.delta))
                .collect();
            let mut out = Vec::with_capacity(expected);
            for i in 0..n {
                for j in (i + 1)..n {
                    let (pi, pj) = (position[i], position[j]);
                    let delta = if pi < pj {
                        lookup[&(pi, pj)].clone()
                    } else {
                        -lookup[&(pj, pi)].clone()
                    };
                    out.push(PairDelta { pair: (i, j), delta });
                }
            }
            out
        })
        .collect();

    let unique = survivors.len() == 1 && !search.exceeded;
    Ok(FilterOutcome {
        survivors,
        unique,
        budget_exceeded: search.exceeded,
        nodes_visited: search.nodes,
    })
}
