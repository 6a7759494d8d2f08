//! Generators for the hard set cover and maximum coverage distributions.
//!
//! All generators draw from a caller-supplied [`Rng`]; equal seeds give equal
//! instances. Emitted systems list `S_1..S_m` first and `T_1..T_m` second, so
//! set `i` and set `m + i` form the matched pair of index `i`.

use rand::seq::{index, SliceRandom};
use rand::Rng as _;
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::oracles::hamming_distance;
use crate::solver::LogBase;
use crate::system::{ElementSet, Rng, Seed, SetSystem};

/// Default rejection-sampling budget.
pub const DEFAULT_MAX_REJECTS: u64 = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DisjSide {
    /// Fair coin for the label.
    Natural,
    /// Disjoint pair (Z = 0).
    Yes,
    /// Exactly one common element (Z = 1).
    No,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DisjInstance {
    pub t: usize,
    pub a: ElementSet,
    pub b: ElementSet,
    pub z: bool,
    pub e_star: Option<u32>,
}

/// One draw of the disjointness distribution over `[t]`. Each element
/// independently lands in neither set, only `B`, or only `A`; a No instance
/// then adds a uniform common element to both.
pub fn sample_disj(t: usize, side: DisjSide, rng: &mut Rng) -> Result<DisjInstance> {
    if t == 0 {
        return Err(Error::param("t must be >= 1"));
    }
    let mut a = Vec::new();
    let mut b = Vec::new();
    for e in 0..t as u32 {
        match rng.random_range(0..3u8) {
            0 => {}
            1 => b.push(e),
            _ => a.push(e),
        }
    }
    let z = match side {
        DisjSide::Natural => rng.random_bool(0.5),
        DisjSide::Yes => false,
        DisjSide::No => true,
    };
    let e_star = if z {
        let e = rng.random_range(0..t as u32);
        a.push(e);
        b.push(e);
        Some(e)
    } else {
        None
    };
    Ok(DisjInstance {
        t,
        a: ElementSet::from_unsorted(a),
        b: ElementSet::from_unsorted(b),
        z,
        e_star,
    })
}

/// An ordered partition of `[n]` into `t` blocks of `n/t` elements.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MappingExtension {
    pub n: usize,
    pub t: usize,
    pub blocks: Vec<ElementSet>,
}

impl MappingExtension {
    /// `f(A)`: union of the blocks indexed by `a`.
    pub fn image(&self, a: &ElementSet) -> ElementSet {
        ElementSet::from_unsorted(
            a.iter()
                .flat_map(|i| self.blocks[i as usize].iter())
                .collect(),
        )
    }
}

fn check_divides(n: usize, t: usize) -> Result<()> {
    if t == 0 || n == 0 || !n.is_multiple_of(t) {
        return Err(Error::param("t must divide n"));
    }
    Ok(())
}

/// Uniform permutation of `[n]` cut into `t` consecutive blocks.
pub fn sample_mapping_extension(n: usize, t: usize, rng: &mut Rng) -> Result<MappingExtension> {
    check_divides(n, t)?;
    let mut perm: Vec<u32> = (0..n as u32).collect();
    perm.shuffle(rng);
    let blocks = perm
        .chunks(n / t)
        .map(|c| ElementSet::from_unsorted(c.to_vec()))
        .collect();
    Ok(MappingExtension { n, t, blocks })
}

/// `floor(2^-15 · (n / log m)^{1/α})`, lowered to the largest divisor of `n`.
pub fn hard_instance_t(n: u64, m: u64, alpha: u32, log_base: LogBase) -> Result<u64> {
    if m < 2 {
        return Err(Error::param("m must be >= 2"));
    }
    if alpha == 0 || n == 0 {
        return Err(Error::param("n and alpha must be >= 1"));
    }
    let raw = 2f64.powi(-15) * (n as f64 / log_base.log(m as f64)).powf(1.0 / alpha as f64);
    let floor = (raw + 1e-9).floor();
    if floor < 1.0 {
        return Err(Error::DegenerateFormula { raw });
    }
    let cap = (floor as u64).min(n);
    Ok((1..=cap)
        .rev()
        .find(|d| n.is_multiple_of(*d))
        .expect("1 divides n"))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScHardInstance {
    pub system: SetSystem,
    pub n: usize,
    pub m: usize,
    pub t: usize,
    pub alpha: usize,
    pub theta: bool,
    pub i_star: Option<usize>,
    pub disj: Vec<DisjInstance>,
    pub maps: Vec<MappingExtension>,
    pub seed: Option<Seed>,
}

impl ScHardInstance {
    pub fn s_index(&self, i: usize) -> usize {
        i
    }

    pub fn t_index(&self, i: usize) -> usize {
        self.m + i
    }

    /// `[n] \ (S_i ∪ T_i)`.
    pub fn pair_missing(&self, i: usize) -> ElementSet {
        self.system
            .set(i)
            .union(self.system.set(self.m + i))
            .complement(self.n)
    }

    pub fn metadata(&self, full: bool, labels: Option<&PartitionLabels>) -> Value {
        let mut meta = json!({
            "generator": "sc",
            "seed": self.seed.map(|s| s.0),
            "params": {"n": self.n, "m": self.m, "t": self.t, "alpha": self.alpha},
            "theta": self.theta as u8,
            "i_star": self.i_star,
        });
        if let Some(l) = labels {
            meta["labels"] = json!(l.labels);
        }
        if full {
            meta["witness"] = json!({
                "disj": self.disj,
                "blocks": self.maps.iter().map(|f| &f.blocks).collect::<Vec<_>>(),
            });
        }
        meta
    }
}

fn build_pair(n: usize, d: &DisjInstance, f: &MappingExtension) -> (ElementSet, ElementSet) {
    (f.image(&d.a).complement(n), f.image(&d.b).complement(n))
}

/// Hard set cover instance: `m` intersecting disjointness pairs embedded
/// through random mapping-extensions; with `θ = 1` one uniformly chosen pair
/// is resampled disjoint so `S_{i*} ∪ T_{i*} = [n]`.
pub fn gen_sc(
    n: usize,
    m: usize,
    t: usize,
    alpha: usize,
    force_theta: Option<bool>,
    rng: &mut Rng,
) -> Result<ScHardInstance> {
    check_divides(n, t)?;
    if m == 0 {
        return Err(Error::param("m must be >= 1"));
    }
    let mut disj = Vec::with_capacity(m);
    let mut maps = Vec::with_capacity(m);
    for _ in 0..m {
        disj.push(sample_disj(t, DisjSide::No, rng)?);
        maps.push(sample_mapping_extension(n, t, rng)?);
    }
    let theta = force_theta.unwrap_or_else(|| rng.random_bool(0.5));
    let i_star = if theta {
        let i = rng.random_range(0..m);
        disj[i] = sample_disj(t, DisjSide::Yes, rng)?;
        Some(i)
    } else {
        None
    };
    let (s, tt): (Vec<_>, Vec<_>) = disj
        .iter()
        .zip(&maps)
        .map(|(d, f)| build_pair(n, d, f))
        .unzip();
    let system = SetSystem::new(n, s.into_iter().chain(tt).collect())?;
    Ok(ScHardInstance {
        system,
        n,
        m,
        t,
        alpha,
        theta,
        i_star,
        disj,
        maps,
        seed: None,
    })
}

/// Alice/Bob assignment of every set (0 = Alice, 1 = Bob).
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PartitionLabels {
    pub labels: Vec<u8>,
}

impl PartitionLabels {
    /// Indices whose matched pair is split across the players.
    pub fn good_indices(&self) -> Vec<usize> {
        let m = self.labels.len() / 2;
        (0..m)
            .filter(|&i| self.labels[i] != self.labels[m + i])
            .collect()
    }
}

pub fn gen_sc_partition(inst: &ScHardInstance, rng: &mut Rng) -> PartitionLabels {
    PartitionLabels {
        labels: (0..inst.system.num_sets())
            .map(|_| rng.random_bool(0.5) as u8)
            .collect(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum GhdSide {
    Yes,
    No,
}

impl GhdSide {
    /// `ceil(t/2 + √t)` for Yes, `floor(t/2 - √t)` for No.
    pub fn threshold(self, t: usize) -> i64 {
        let (half, root) = (t as f64 / 2.0, (t as f64).sqrt());
        match self {
            GhdSide::Yes => (half + root - 1e-9).ceil() as i64,
            GhdSide::No => (half - root + 1e-9).floor() as i64,
        }
    }

    pub fn accepts(self, t: usize, delta: usize) -> bool {
        let d = delta as i64;
        match self {
            GhdSide::Yes => d >= self.threshold(t),
            GhdSide::No => d <= self.threshold(t),
        }
    }
}

/// Uniform `a`-subset and `b`-subset of `[t]`, drawn independently.
pub fn ghd_proposal(t: usize, a: usize, b: usize, rng: &mut Rng) -> (ElementSet, ElementSet) {
    let draw = |k: usize, rng: &mut Rng| {
        ElementSet::from_unsorted(
            index::sample(rng, t, k)
                .into_iter()
                .map(|e| e as u32)
                .collect(),
        )
    };
    let sa = draw(a, rng);
    let sb = draw(b, rng);
    (sa, sb)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GhdSample {
    pub a: ElementSet,
    pub b: ElementSet,
    /// Proposals drawn, including the accepted one.
    pub attempts: u64,
}

/// Rejection sampler for the Gap-Hamming conditionals with fixed sizes.
pub fn sample_ghd(
    t: usize,
    a: usize,
    b: usize,
    side: GhdSide,
    rng: &mut Rng,
    max_rejects: u64,
) -> Result<GhdSample> {
    if a > t || b > t {
        return Err(Error::param("GHD set sizes must not exceed t"));
    }
    // |A ∩ B| ranges over [max(0, a+b-t), min(a, b)], so Δ = a+b-2|A∩B| does too.
    let reachable = (a + b).saturating_sub(t)..=a.min(b);
    if !reachable.clone().any(|x| side.accepts(t, a + b - 2 * x)) {
        return Err(Error::InfeasibleConditioning {
            attempts: 0,
            reason: format!(
                "no pair with |A|={a}, |B|={b} over [{t}] meets the {side:?} threshold"
            ),
        });
    }
    for attempts in 1..=max_rejects {
        let (sa, sb) = ghd_proposal(t, a, b, rng);
        if side.accepts(t, hamming_distance(&sa, &sb)) {
            return Ok(GhdSample {
                a: sa,
                b: sb,
                attempts,
            });
        }
    }
    Err(Error::InfeasibleConditioning {
        attempts: max_rejects,
        reason: format!("{side:?} conditioning never accepted"),
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct McHardInstance {
    pub system: SetSystem,
    pub m: usize,
    pub t1: usize,
    pub t2: usize,
    pub a: usize,
    pub b: usize,
    pub theta: bool,
    pub i_star: Option<usize>,
    /// `(A_i, B_i)` over `U1 = [0, t1)`.
    pub ghd: Vec<(ElementSet, ElementSet)>,
    /// `(C_i, D_i)`, a bipartition of `U2 = [t1, t1 + t2)`.
    pub partitions: Vec<(ElementSet, ElementSet)>,
    pub seed: Option<Seed>,
}

impl McHardInstance {
    /// `t2 + (a+b)/2 + t1/4`.
    pub fn tau(&self) -> f64 {
        mc_tau(self.t1, self.a, self.b)
    }

    pub fn n(&self) -> usize {
        self.t1 + self.t2
    }

    pub fn metadata(&self, full: bool) -> Value {
        let tau = self.tau();
        let mut meta = json!({
            "generator": "mc",
            "seed": self.seed.map(|s| s.0),
            "params": {"m": self.m, "t1": self.t1, "t2": self.t2, "a": self.a, "b": self.b, "n": self.n()},
            "theta": self.theta as u8,
            "i_star": self.i_star,
            "tau": if tau.fract() == 0.0 { json!(tau as u64) } else { json!(tau) },
        });
        if full {
            meta["witness"] = json!({"ghd": self.ghd, "partitions": self.partitions});
        }
        meta
    }
}

pub fn mc_tau(t1: usize, a: usize, b: usize) -> f64 {
    10.0 * t1 as f64 + (a + b) as f64 / 2.0 + t1 as f64 / 4.0
}

/// Hard maximum coverage instance over `n = t1 + 10·t1`.
pub fn gen_mc(
    m: usize,
    t1: usize,
    a: usize,
    b: usize,
    force_theta: Option<bool>,
    rng: &mut Rng,
) -> Result<McHardInstance> {
    if t1 < 4 {
        return Err(Error::param("t1 must be >= 4"));
    }
    if m == 0 {
        return Err(Error::param("m must be >= 1"));
    }
    let t2 = 10 * t1;
    let max_rejects = DEFAULT_MAX_REJECTS;
    let mut ghd = Vec::with_capacity(m);
    let mut partitions = Vec::with_capacity(m);
    for _ in 0..m {
        let g = sample_ghd(t1, a, b, GhdSide::No, rng, max_rejects)?;
        ghd.push((g.a, g.b));
        let (mut c, mut d) = (Vec::new(), Vec::new());
        for e in t1..t1 + t2 {
            if rng.random_bool(0.5) {
                c.push(e as u32);
            } else {
                d.push(e as u32);
            }
        }
        partitions.push((
            ElementSet::from_sorted_unchecked(c),
            ElementSet::from_sorted_unchecked(d),
        ));
    }
    let theta = force_theta.unwrap_or_else(|| rng.random_bool(0.5));
    let i_star = if theta {
        let i = rng.random_range(0..m);
        let g = sample_ghd(t1, a, b, GhdSide::Yes, rng, max_rejects)?;
        ghd[i] = (g.a, g.b);
        Some(i)
    } else {
        None
    };
    let s = ghd
        .iter()
        .zip(&partitions)
        .map(|((a, _), (c, _))| a.union(c));
    let tt = ghd
        .iter()
        .zip(&partitions)
        .map(|((_, b), (_, d))| b.union(d));
    let system = SetSystem::new(t1 + t2, s.chain(tt).collect())?;
    Ok(McHardInstance {
        system,
        m,
        t1,
        t2,
        a,
        b,
        theta,
        i_star,
        ghd,
        partitions,
        seed: None,
    })
}

/// A random partition of `[n]` into `k` near-equal parts followed by `m - k`
/// uniform random sets of size `n/2`, so the optimum is at most `k`.
pub fn planted_partition_instance(
    n: usize,
    m: usize,
    k: usize,
    rng: &mut Rng,
) -> Result<SetSystem> {
    if k == 0 || k > m || k > n {
        return Err(Error::param("planted instance needs 1 <= k <= min(m, n)"));
    }
    let mut perm: Vec<u32> = (0..n as u32).collect();
    perm.shuffle(rng);
    let mut sets = Vec::with_capacity(m);
    let base = n / k;
    let extra = n % k;
    let mut start = 0;
    for part in 0..k {
        let len = base + usize::from(part < extra);
        sets.push(ElementSet::from_unsorted(perm[start..start + len].to_vec()));
        start += len;
    }
    for _ in k..m {
        sets.push(ElementSet::from_unsorted(
            index::sample(rng, n, n / 2)
                .into_iter()
                .map(|e| e as u32)
                .collect(),
        ));
    }
    sets.shuffle(rng);
    SetSystem::new(n, sets)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::is_feasible_cover;

    fn rng(s: u64) -> Rng {
        Seed(s).rng()
    }

    #[test]
    fn disj_label_law() {
        let mut r = rng(1);
        for _ in 0..500 {
            let d = sample_disj(20, DisjSide::Natural, &mut r).unwrap();
            let common = d.a.intersection(&d.b);
            if d.z {
                assert_eq!(common.as_slice(), &[d.e_star.unwrap()]);
            } else {
                assert!(common.is_empty() && d.e_star.is_none());
            }
        }
        let d = sample_disj(10, DisjSide::Yes, &mut r).unwrap();
        assert_eq!(d.a.intersection_len(&d.b), 0);
        let d = sample_disj(10, DisjSide::No, &mut r).unwrap();
        assert_eq!(d.a.intersection_len(&d.b), 1);
    }

    #[test]
    fn disj_yes_mean_size() {
        let mut r = rng(2);
        let mean = (0..200)
            .map(|_| sample_disj(300, DisjSide::Yes, &mut r).unwrap().a.len() as f64)
            .sum::<f64>()
            / 200.0;
        assert!((mean - 100.0).abs() <= 15.0, "mean {mean}");
    }

    #[test]
    fn mapping_extension_shapes() {
        let mut r = rng(3);
        let f = sample_mapping_extension(12, 1, &mut r).unwrap();
        assert_eq!(f.blocks, vec![ElementSet::full(12)]);
        let f = sample_mapping_extension(6, 6, &mut r).unwrap();
        assert!(f.blocks.iter().all(|b| b.len() == 1));
        let all: ElementSet = f.blocks.iter().flat_map(|b| b.iter()).collect();
        assert_eq!(all, ElementSet::full(6));
        assert!(sample_mapping_extension(10, 4, &mut r).is_err());
    }

    #[test]
    fn mapping_extension_uniform() {
        let mut hits = [0usize; 8];
        for s in 0..1000 {
            let f = sample_mapping_extension(8, 4, &mut Seed(77).derive(s).rng()).unwrap();
            assert!(f.blocks.iter().all(|b| b.len() == 2));
            for e in f.blocks[0].iter() {
                hits[e as usize] += 1;
            }
        }
        for h in hits {
            let frac = h as f64 / 1000.0;
            assert!((frac - 0.25).abs() <= 0.05, "fraction {frac}");
        }
    }

    #[test]
    fn paper_t_values() {
        assert_eq!(
            hard_instance_t(1 << 40, 1 << 32, 1, LogBase::Base2).unwrap(),
            1 << 20
        );
        assert!(matches!(
            hard_instance_t(1024, 64, 2, LogBase::Natural),
            Err(Error::DegenerateFormula { .. })
        ));
        assert!(hard_instance_t(1 << 20, 64, 64, LogBase::Natural).is_err());
        // raw ≈ 3.00003 but 3 does not divide 196610 = 2·5·19661.
        assert_eq!(hard_instance_t(196_610, 4, 1, LogBase::Base2).unwrap(), 2);
    }

    #[test]
    fn sc_invariants() {
        let mut r = rng(4);
        for theta in [false, true] {
            let inst = gen_sc(64, 6, 4, 2, Some(theta), &mut r).unwrap();
            assert_eq!(inst.system.num_sets(), 12);
            for i in 0..inst.m {
                let f = &inst.maps[i];
                assert_eq!(inst.system.set(i), &f.image(&inst.disj[i].a).complement(64));
                assert_eq!(
                    inst.system.set(6 + i),
                    &f.image(&inst.disj[i].b).complement(64)
                );
                if Some(i) == inst.i_star {
                    assert!(!inst.disj[i].z);
                    assert!(inst.pair_missing(i).is_empty());
                } else {
                    assert!(inst.disj[i].z);
                    assert_eq!(inst.pair_missing(i).len(), 16);
                }
            }
            if let Some(i) = inst.i_star {
                assert!(is_feasible_cover(&inst.system, &[i, inst.m + i]).unwrap());
            }
        }
        assert!(gen_sc(255, 4, 4, 2, None, &mut r).is_err());
    }

    #[test]
    fn partition_labels() {
        let mut r = rng(5);
        let inst = gen_sc(16, 64, 4, 2, Some(false), &mut r).unwrap();
        let mut total = 0usize;
        for s in 0..500 {
            let l = gen_sc_partition(&inst, &mut Seed(9).derive(s).rng());
            assert_eq!(l.labels.len(), 128);
            let g = l.good_indices();
            for i in 0..64 {
                assert_eq!(g.contains(&i), l.labels[i] != l.labels[64 + i]);
            }
            total += g.len();
        }
        let mean = total as f64 / 500.0;
        assert!((mean - 32.0).abs() <= 3.0, "mean {mean}");
        let all_alice = PartitionLabels { labels: vec![0; 8] };
        assert!(all_alice.good_indices().is_empty());
    }

    #[test]
    fn ghd_thresholds() {
        assert_eq!(GhdSide::Yes.threshold(64), 40);
        assert_eq!(GhdSide::No.threshold(64), 24);
        let mut r = rng(6);
        let s = sample_ghd(16, 16, 0, GhdSide::Yes, &mut r, 10).unwrap();
        assert_eq!(s.attempts, 1);
        assert!(matches!(
            sample_ghd(16, 16, 0, GhdSide::No, &mut r, 10),
            Err(Error::InfeasibleConditioning { .. })
        ));
        assert!(matches!(
            sample_ghd(16, 0, 0, GhdSide::Yes, &mut r, 10),
            Err(Error::InfeasibleConditioning { .. })
        ));
        for side in [GhdSide::Yes, GhdSide::No] {
            for _ in 0..50 {
                let s = sample_ghd(64, 32, 32, side, &mut r, DEFAULT_MAX_REJECTS).unwrap();
                assert_eq!((s.a.len(), s.b.len()), (32, 32));
                assert!(side.accepts(64, hamming_distance(&s.a, &s.b)));
            }
        }
    }

    #[test]
    fn mc_invariants() {
        let mut r = rng(7);
        for theta in [false, true] {
            let inst = gen_mc(8, 64, 32, 32, Some(theta), &mut r).unwrap();
            assert_eq!(inst.tau(), 688.0);
            assert_eq!(inst.n(), 704);
            let u2: ElementSet = (64..704u32).collect();
            for i in 0..inst.m {
                let (a, b) = &inst.ghd[i];
                let (c, d) = &inst.partitions[i];
                assert_eq!(c.union(d), u2);
                assert_eq!(c.intersection_len(d), 0);
                assert_eq!((a.len(), b.len()), (32, 32));
                let delta = hamming_distance(a, b);
                let side = if Some(i) == inst.i_star {
                    GhdSide::Yes
                } else {
                    GhdSide::No
                };
                assert!(side.accepts(64, delta));
                let pair = inst.system.set(i).union(inst.system.set(inst.m + i));
                assert!(pair.len() >= inst.t2);
                assert_eq!(2 * pair.len(), 2 * inst.t2 + 64 + delta);
            }
        }
        assert!(gen_mc(8, 3, 1, 1, None, &mut r).is_err());
    }

    #[test]
    fn planted_instance_is_coverable_by_k() {
        let mut r = rng(8);
        let s = planted_partition_instance(100, 10, 3, &mut r).unwrap();
        assert_eq!(s.num_sets(), 10);
        let parts: Vec<usize> = (0..10).filter(|&i| s.set(i).len() != 50).collect();
        assert_eq!(parts.len(), 3);
        assert!(is_feasible_cover(&s, &parts).unwrap());
    }

    #[test]
    fn generators_are_seed_deterministic() {
        let a = gen_sc(64, 5, 4, 2, None, &mut rng(10)).unwrap();
        let b = gen_sc(64, 5, 4, 2, None, &mut rng(10)).unwrap();
        assert_eq!(a, b);
        let a = gen_mc(4, 16, 8, 8, None, &mut rng(11)).unwrap();
        let b = gen_mc(4, 16, 8, 8, None, &mut rng(11)).unwrap();
        assert_eq!(a, b);
    }
}
