//! Offline solvers: exact set cover by branch and bound, greedy set cover,
//! exact maximum coverage by enumeration, and Hamming distance.

use serde::Serialize;

use crate::bits::Bits;
use crate::error::{Error, Result};
use crate::system::{ElementSet, SetSystem};

/// Largest universe the bitmask branch and bound accepts.
pub const EXACT_MAX_UNIVERSE: usize = 4096;

/// Largest number of k-subsets `exact_max_coverage` will enumerate.
pub const MAX_COVERAGE_SUBSETS: u128 = 200_000_000;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ExactCoverResult {
    pub opt_size: usize,
    /// Sorted ascending.
    pub witness: Vec<usize>,
    pub nodes_explored: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ExactOutcome {
    Optimal(ExactCoverResult),
    /// No cover of size at most `cap` exists. The exact optimum is not computed.
    ExceedsCap {
        cap: usize,
        nodes_explored: u64,
    },
}

impl ExactOutcome {
    pub fn optimal(self) -> Option<ExactCoverResult> {
        match self {
            ExactOutcome::Optimal(r) => Some(r),
            ExactOutcome::ExceedsCap { .. } => None,
        }
    }

    pub fn nodes_explored(&self) -> u64 {
        match self {
            ExactOutcome::Optimal(r) => r.nodes_explored,
            ExactOutcome::ExceedsCap { nodes_explored, .. } => *nodes_explored,
        }
    }
}

struct Search<'a> {
    sets: &'a [Bits],
    containing: Vec<Vec<usize>>,
    /// Only covers strictly shorter than this are of interest.
    bound: usize,
    best: Option<Vec<usize>>,
    nodes: u64,
}

impl Search<'_> {
    fn go(&mut self, uncovered: &Bits, chosen: &mut Vec<usize>) {
        self.nodes += 1;
        if uncovered.is_empty() {
            if chosen.len() < self.bound {
                self.bound = chosen.len();
                self.best = Some(chosen.clone());
            }
            return;
        }
        if chosen.len() + 1 >= self.bound {
            return;
        }

        let remaining = uncovered.count();
        let gains: Vec<usize> = self
            .sets
            .iter()
            .map(|s| s.intersection_count(uncovered))
            .collect();
        // Picks still allowed if we are to beat the incumbent.
        let left = self.bound - 1 - chosen.len();
        if left == 1 {
            if let Some(c) = (0..gains.len()).find(|&c| gains[c] == remaining) {
                chosen.push(c);
                self.nodes += 1;
                self.bound = chosen.len();
                self.best = Some(chosen.clone());
                chosen.pop();
            }
            return;
        }
        // The `left` largest gains must add up to what is uncovered.
        let mut top = gains.clone();
        let k = left.min(top.len());
        if k < top.len() {
            top.select_nth_unstable_by(k, |a, b| b.cmp(a));
        }
        if top[..k].iter().sum::<usize>() < remaining {
            return;
        }

        let pivot = uncovered.first().expect("non-empty");
        let mut candidates = self.containing[pivot].clone();
        candidates.sort_by(|&a, &b| gains[b].cmp(&gains[a]).then(a.cmp(&b)));
        for c in candidates {
            if chosen.len() + 1 >= self.bound {
                break;
            }
            let mut next = uncovered.clone();
            next.difference_with(&self.sets[c]);
            chosen.push(c);
            self.go(&next, chosen);
            chosen.pop();
        }
    }
}

/// Minimum set cover by branch and bound. Branches on the lowest uncovered
/// element over every set containing it; prunes when the largest marginal
/// gains of the picks still allowed cannot add up to the uncovered count,
/// which subsumes `ceil(uncovered / max gain)`.
///
/// With `cap = Some(c)` the search only looks for covers of size `<= c` and
/// reports [`ExactOutcome::ExceedsCap`] when none exists.
pub fn exact_set_cover(system: &SetSystem, cap: Option<usize>) -> Result<ExactOutcome> {
    let n = system.universe_size();
    if n > EXACT_MAX_UNIVERSE {
        return Err(Error::param(format!(
            "exact set cover supports n <= {EXACT_MAX_UNIVERSE}, got {n}"
        )));
    }
    if let Some(element) = system.first_uncoverable() {
        return Err(Error::Uncoverable { element });
    }

    let sets = system.to_bits();
    let mut containing = vec![Vec::new(); n];
    for (i, s) in system.sets().iter().enumerate() {
        for e in s.iter() {
            containing[e as usize].push(i);
        }
    }

    let greedy = greedy_set_cover(system)?;
    let (bound, best) = match cap {
        Some(c) if greedy.len() > c => (c + 1, None),
        _ => (greedy.len(), Some(greedy)),
    };
    let mut search = Search {
        sets: &sets,
        containing,
        bound,
        best,
        nodes: 0,
    };
    search.go(&Bits::full(n), &mut Vec::new());

    let nodes_explored = search.nodes;
    Ok(match search.best {
        Some(mut witness) => {
            witness.sort_unstable();
            ExactOutcome::Optimal(ExactCoverResult {
                opt_size: witness.len(),
                witness,
                nodes_explored,
            })
        }
        None => ExactOutcome::ExceedsCap {
            cap: cap.expect("incumbent exists without a cap"),
            nodes_explored,
        },
    })
}

/// Repeatedly takes the set with the most uncovered elements, lowest index on
/// ties. Returns indices in pick order.
pub fn greedy_set_cover(system: &SetSystem) -> Result<Vec<usize>> {
    let sets = system.to_bits();
    let mut uncovered = Bits::full(system.universe_size());
    let mut picked = Vec::new();
    while let Some(first) = uncovered.first() {
        let (best, gain) = sets
            .iter()
            .enumerate()
            .map(|(i, s)| (i, s.intersection_count(&uncovered)))
            .fold(
                (usize::MAX, 0),
                |acc, cur| if cur.1 > acc.1 { cur } else { acc },
            );
        if gain == 0 {
            return Err(Error::Uncoverable {
                element: first as u32,
            });
        }
        uncovered.difference_with(&sets[best]);
        picked.push(best);
    }
    Ok(picked)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MaxCoverResult {
    pub k: usize,
    pub best_value: usize,
    /// Lexicographically smallest optimal index tuple.
    pub witness: Vec<usize>,
}

pub(crate) fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// Best union size over all k-subsets of sets.
pub fn exact_max_coverage(system: &SetSystem, k: usize) -> Result<MaxCoverResult> {
    let m = system.num_sets();
    if k == 0 || k > m {
        return Err(Error::param(format!(
            "k must satisfy 1 <= k <= m = {m}, got {k}"
        )));
    }
    if !(k <= 3 || m <= 64) || binomial(m as u64, k as u64) > MAX_COVERAGE_SUBSETS {
        return Err(Error::param(format!(
            "C({m}, {k}) subsets is too many to enumerate"
        )));
    }

    let sets = system.to_bits();
    let n = system.universe_size();
    let mut best = MaxCoverResult {
        k,
        best_value: 0,
        witness: Vec::new(),
    };
    let mut prefix = vec![Bits::empty(n); k + 1];
    let mut tuple = Vec::with_capacity(k);

    fn rec(
        start: usize,
        depth: usize,
        sets: &[Bits],
        prefix: &mut [Bits],
        tuple: &mut Vec<usize>,
        best: &mut MaxCoverResult,
    ) {
        let k = best.k;
        if depth == k {
            let v = prefix[k].count();
            if best.witness.is_empty() || v > best.best_value {
                best.best_value = v;
                best.witness = tuple.clone();
            }
            return;
        }
        for i in start..=sets.len() - (k - depth) {
            let mut u = prefix[depth].clone();
            u.union_with(&sets[i]);
            prefix[depth + 1] = u;
            tuple.push(i);
            rec(i + 1, depth + 1, sets, prefix, tuple, best);
            tuple.pop();
        }
    }

    rec(0, 0, &sets, &mut prefix, &mut tuple, &mut best);
    Ok(best)
}

/// Size of the symmetric difference.
pub fn hamming_distance(a: &ElementSet, b: &ElementSet) -> usize {
    a.len() + b.len() - 2 * a.intersection_len(b)
}
