//! Element sets, set systems and the seeded randomness contract.

use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bits::Bits;
use crate::error::{Error, Result};

/// The generator every randomized operation in the crate draws from.
pub type Rng = ChaCha8Rng;

/// A strictly increasing sequence of 0-based element ids.
#[derive(Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ElementSet(Vec<u32>);

impl ElementSet {
    pub fn new() -> Self {
        ElementSet(Vec::new())
    }

    /// Sorts and deduplicates arbitrary input.
    pub fn from_unsorted(mut elements: Vec<u32>) -> Self {
        elements.sort_unstable();
        elements.dedup();
        ElementSet(elements)
    }

    /// `0..n` as a set.
    pub fn full(n: usize) -> Self {
        ElementSet((0..n as u32).collect())
    }

    /// Caller guarantees `elements` is strictly increasing.
    pub(crate) fn from_sorted_unchecked(elements: Vec<u32>) -> Self {
        debug_assert!(elements.windows(2).all(|w| w[0] < w[1]));
        ElementSet(elements)
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<u32> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, e: u32) -> bool {
        self.0.binary_search(&e).is_ok()
    }

    pub fn max(&self) -> Option<u32> {
        self.0.last().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = u32> + '_ {
        self.0.iter().copied()
    }

    pub fn union(&self, other: &ElementSet) -> ElementSet {
        let (a, b) = (&self.0, &other.0);
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                std::cmp::Ordering::Less => {
                    out.push(a[i]);
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    out.push(b[j]);
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    out.push(a[i]);
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        ElementSet(out)
    }

    pub fn intersection(&self, other: &ElementSet) -> ElementSet {
        ElementSet(
            self.0
                .iter()
                .copied()
                .filter(|e| other.contains(*e))
                .collect(),
        )
    }

    pub fn intersection_len(&self, other: &ElementSet) -> usize {
        let (a, b) = (&self.0, &other.0);
        let (mut i, mut j, mut n) = (0, 0, 0);
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    n += 1;
                    i += 1;
                    j += 1;
                }
            }
        }
        n
    }

    pub fn difference(&self, other: &ElementSet) -> ElementSet {
        ElementSet(
            self.0
                .iter()
                .copied()
                .filter(|e| !other.contains(*e))
                .collect(),
        )
    }

    /// `[n] \ self`.
    pub fn complement(&self, n: usize) -> ElementSet {
        let mut out = Vec::with_capacity(n.saturating_sub(self.len()));
        let mut it = self.0.iter().peekable();
        for e in 0..n as u32 {
            if it.peek() == Some(&&e) {
                it.next();
            } else {
                out.push(e);
            }
        }
        ElementSet(out)
    }
}

impl fmt::Debug for ElementSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(&self.0).finish()
    }
}

impl FromIterator<u32> for ElementSet {
    fn from_iter<I: IntoIterator<Item = u32>>(iter: I) -> Self {
        ElementSet::from_unsorted(iter.into_iter().collect())
    }
}

impl From<Vec<u32>> for ElementSet {
    fn from(v: Vec<u32>) -> Self {
        ElementSet::from_unsorted(v)
    }
}

/// A universe `[n]` with an ordered collection of subsets.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SetSystem {
    universe_size: usize,
    sets: Vec<ElementSet>,
}

impl SetSystem {
    pub fn new(universe_size: usize, sets: Vec<ElementSet>) -> Result<Self> {
        if universe_size == 0 {
            return Err(Error::param("universe size must be at least 1"));
        }
        for (i, s) in sets.iter().enumerate() {
            if let Some(max) = s.max() {
                if max as usize >= universe_size {
                    return Err(Error::param(format!(
                        "set {i} contains element {max} >= universe size {universe_size}"
                    )));
                }
            }
        }
        Ok(SetSystem {
            universe_size,
            sets,
        })
    }

    /// Convenience constructor from raw element lists, which are normalized.
    pub fn from_lists<I, S>(universe_size: usize, lists: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u32]>,
    {
        let sets = lists
            .into_iter()
            .map(|l| ElementSet::from_unsorted(l.as_ref().to_vec()))
            .collect();
        SetSystem::new(universe_size, sets)
    }

    pub fn universe_size(&self) -> usize {
        self.universe_size
    }

    pub fn num_sets(&self) -> usize {
        self.sets.len()
    }

    pub fn sets(&self) -> &[ElementSet] {
        &self.sets
    }

    pub fn set(&self, i: usize) -> &ElementSet {
        &self.sets[i]
    }

    pub fn total_entries(&self) -> usize {
        self.sets.iter().map(ElementSet::len).sum()
    }

    pub(crate) fn check_indices(&self, indices: &[usize]) -> Result<()> {
        match indices.iter().find(|&&i| i >= self.sets.len()) {
            Some(&index) => Err(Error::IndexOutOfRange {
                index,
                num_sets: self.sets.len(),
            }),
            None => Ok(()),
        }
    }

    /// Bitset view of every set, for the search-heavy oracles.
    pub(crate) fn to_bits(&self) -> Vec<Bits> {
        self.sets
            .iter()
            .map(|s| Bits::from_set(self.universe_size, s))
            .collect()
    }

    /// Lowest element contained in no set, if any.
    pub fn first_uncoverable(&self) -> Option<u32> {
        let mut covered = Bits::empty(self.universe_size);
        for s in &self.sets {
            for &e in s.as_slice() {
                covered.insert(e as usize);
            }
        }
        (0..self.universe_size)
            .find(|&e| !covered.contains(e))
            .map(|e| e as u32)
    }
}

/// Union of the selected sets.
pub fn coverage(system: &SetSystem, indices: &[usize]) -> Result<ElementSet> {
    system.check_indices(indices)?;
    let mut covered = Bits::empty(system.universe_size());
    for &i in indices {
        for &e in system.set(i).as_slice() {
            covered.insert(e as usize);
        }
    }
    Ok(covered.to_set())
}

pub fn is_feasible_cover(system: &SetSystem, indices: &[usize]) -> Result<bool> {
    Ok(coverage(system, indices)?.len() == system.universe_size())
}

/// A 64-bit seed. Equal seeds and parameters give bit-identical output.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Seed(pub u64);

impl Seed {
    pub fn rng(self) -> Rng {
        Rng::seed_from_u64(self.0)
    }

    /// Independent child seed for stream `index` (splitmix64 finalizer).
    pub fn derive(self, index: u64) -> Seed {
        let mut z = self
            .0
            .wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        Seed(z ^ (z >> 31))
    }
}

impl fmt::Display for Seed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sys(n: usize, lists: &[&[u32]]) -> SetSystem {
        SetSystem::from_lists(n, lists.iter().copied()).unwrap()
    }

    #[test]
    fn coverage_examples() {
        let s = sys(3, &[&[0, 1], &[1, 2]]);
        assert_eq!(coverage(&s, &[0, 1]).unwrap().as_slice(), &[0, 1, 2]);
        assert!(coverage(&s, &[]).unwrap().is_empty());
        let s = sys(5, &[&[0, 2], &[2, 4], &[1, 3]]);
        assert_eq!(coverage(&s, &[0, 2]).unwrap().as_slice(), &[0, 1, 2, 3]);
    }

    #[test]
    fn coverage_index_out_of_range() {
        let s = sys(3, &[&[0, 1]]);
        assert!(matches!(
            coverage(&s, &[1]),
            Err(Error::IndexOutOfRange {
                index: 1,
                num_sets: 1
            })
        ));
    }

    #[test]
    fn feasibility_examples() {
        let s = sys(4, &[&[0, 1, 2, 3]]);
        assert!(is_feasible_cover(&s, &[0]).unwrap());
        let s = sys(4, &[&[0, 1], &[1, 2]]);
        assert!(!is_feasible_cover(&s, &[0, 1]).unwrap());
    }

    #[test]
    fn constructor_normalizes_and_validates() {
        let s = sys(5, &[&[3, 1, 3, 0]]);
        assert_eq!(s.set(0).as_slice(), &[0, 1, 3]);
        assert!(SetSystem::from_lists(3, [[0u32, 3]]).is_err());
        assert!(SetSystem::new(0, vec![]).is_err());
        assert!(SetSystem::new(1, vec![]).is_ok());
    }

    #[test]
    fn set_algebra() {
        let a = ElementSet::from(vec![0, 1, 2]);
        let b = ElementSet::from(vec![1, 2, 3]);
        assert_eq!(a.union(&b).as_slice(), &[0, 1, 2, 3]);
        assert_eq!(a.intersection(&b).as_slice(), &[1, 2]);
        assert_eq!(a.intersection_len(&b), 2);
        assert_eq!(a.difference(&b).as_slice(), &[0]);
        assert_eq!(a.complement(5).as_slice(), &[3, 4]);
    }

    #[test]
    fn seed_is_reproducible() {
        use rand::Rng as _;
        let x: u64 = Seed(5).rng().random();
        let y: u64 = Seed(5).rng().random();
        assert_eq!(x, y);
        assert_ne!(Seed(5).derive(0), Seed(5).derive(1));
    }

    fn arb_system() -> impl Strategy<Value = SetSystem> {
        (1usize..40).prop_flat_map(|n| {
            prop::collection::vec(prop::collection::vec(0..n as u32, 0..10), 0..8)
                .prop_map(move |lists| SetSystem::from_lists(n, lists).unwrap())
        })
    }

    proptest! {
        #[test]
        fn coverage_is_monotone(s in arb_system(), picks in prop::collection::vec(0usize..8, 0..6), extra in 0usize..8) {
            let m = s.num_sets();
            prop_assume!(m > 0);
            let picks: Vec<usize> = picks.into_iter().map(|i| i % m).collect();
            let base = coverage(&s, &picks).unwrap();
            let mut more = picks.clone();
            more.push(extra % m);
            let bigger = coverage(&s, &more).unwrap();
            prop_assert_eq!(base.intersection_len(&bigger), base.len());
        }

        #[test]
        fn coverage_ignores_duplicates(s in arb_system(), picks in prop::collection::vec(0usize..8, 0..6)) {
            let m = s.num_sets();
            prop_assume!(m > 0);
            let picks: Vec<usize> = picks.into_iter().map(|i| i % m).collect();
            let mut dedup = picks.clone();
            dedup.sort_unstable();
            dedup.dedup();
            prop_assert_eq!(coverage(&s, &picks).unwrap(), coverage(&s, &dedup).unwrap());
        }
    }
}
