//! Monte-Carlo and exhaustive checks of the structural lemmas behind the
//! hard distributions and the streaming algorithm.
//!
//! Every check derives one seed per trial from the caller's seed, so reports
//! are reproducible and independent of how rayon schedules the trials.
//! Deterministic sub-checks (planted pair coverage, matched-pair identities,
//! pass counts) abort with [`Error::Invariant`] on the first violation;
//! statistical ones are only reported. Thresholds live in the callers.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::seq::index;
use rayon::prelude::*;
use serde::Serialize;

use crate::bits::Bits;
use crate::error::{Error, Result};
use crate::hardgen::{gen_mc, gen_sc, planted_partition_instance, McHardInstance};
use crate::oracles::{
    binomial, exact_max_coverage, exact_set_cover, hamming_distance, ExactOutcome,
};
use crate::solver::{sample_universe, solve, SolveResult, SolverConfig};
use crate::stream::{SetStream, StreamOrder};
use crate::system::{is_feasible_cover, ElementSet, Seed, SetSystem};

/// Largest number of subsets the exhaustive checks will look at per trial.
pub const ENUMERATION_LIMIT: u128 = 500_000_000;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SubCheck {
    pub name: String,
    pub trials: usize,
    pub successes: usize,
    /// Hard checks must always succeed; the report is never produced otherwise.
    pub hard: bool,
}

impl SubCheck {
    pub fn rate(&self) -> f64 {
        if self.trials == 0 {
            1.0
        } else {
            self.successes as f64 / self.trials as f64
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrialReport {
    pub lemma_id: String,
    pub trials: usize,
    pub successes: usize,
    pub empirical_rate: f64,
    /// Theoretical failure probability bound, where the lemma gives one.
    pub paper_bound: Option<f64>,
    pub params: BTreeMap<String, f64>,
    pub seed: u64,
    pub sub_checks: Vec<SubCheck>,
    pub stats: BTreeMap<String, f64>,
}

impl TrialReport {
    fn new(lemma_id: &str, params: &[(&str, f64)], seed: Seed, outcomes: &[bool]) -> Self {
        let trials = outcomes.len();
        let successes = outcomes.iter().filter(|&&ok| ok).count();
        TrialReport {
            lemma_id: lemma_id.to_string(),
            trials,
            successes,
            empirical_rate: if trials == 0 {
                1.0
            } else {
                successes as f64 / trials as f64
            },
            paper_bound: None,
            params: params.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            seed: seed.0,
            sub_checks: Vec::new(),
            stats: BTreeMap::new(),
        }
    }

    fn sub_check(
        &mut self,
        name: &str,
        outcomes: impl IntoIterator<Item = bool>,
        hard: bool,
    ) -> Result<()> {
        let (mut trials, mut successes) = (0, 0);
        for ok in outcomes {
            trials += 1;
            successes += ok as usize;
        }
        if hard && successes != trials {
            return Err(Error::Invariant(format!(
                "{}: {name} held in {successes}/{trials} cases",
                self.lemma_id
            )));
        }
        self.sub_checks.push(SubCheck {
            name: name.to_string(),
            trials,
            successes,
            hard,
        });
        Ok(())
    }

    pub fn sub(&self, name: &str) -> Option<&SubCheck> {
        self.sub_checks.iter().find(|s| s.name == name)
    }

    pub fn failures(&self) -> usize {
        self.trials - self.successes
    }

    /// One `key=value` line for the report, then one per sub-check.
    pub fn to_kv(&self) -> String {
        let mut out = format!(
            "lemma={} trials={} successes={} rate={:.6} paper_bound={} seed={}",
            self.lemma_id,
            self.trials,
            self.successes,
            self.empirical_rate,
            self.paper_bound
                .map_or("none".to_string(), |b| format!("{b:.6e}")),
            self.seed
        );
        for (k, v) in &self.params {
            let _ = write!(out, " {k}={v}");
        }
        out.push('\n');
        for s in &self.sub_checks {
            let _ = writeln!(
                out,
                "  check={} trials={} successes={} rate={:.6} hard={}",
                s.name,
                s.trials,
                s.successes,
                s.rate(),
                s.hard
            );
        }
        for (k, v) in &self.stats {
            let _ = writeln!(out, "  stat={k} value={v}");
        }
        out
    }
}

/// Calls `f` on every k-combination of `0..m` in lexicographic order.
pub fn for_each_combination(m: usize, k: usize, mut f: impl FnMut(&[usize])) {
    if k > m {
        return;
    }
    let mut c: Vec<usize> = (0..k).collect();
    loop {
        f(&c);
        let Some(i) = (0..k).rev().find(|&i| c[i] != i + m - k) else {
            return;
        };
        c[i] += 1;
        for j in i + 1..k {
            c[j] = c[j - 1] + 1;
        }
    }
}

fn mean(xs: impl IntoIterator<Item = f64>) -> f64 {
    let (s, n) = xs
        .into_iter()
        .fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        s / n as f64
    }
}

/// `k` independent uniform `(n-s)`-subsets against `U = [0, u_size)`; the bad
/// event is `|U \ ∪S| < (|U|/2)(s/2n)^k`.
pub fn check_coverage_lemma(
    n: usize,
    s: usize,
    k: usize,
    u_size: usize,
    trials: usize,
    seed: Seed,
) -> Result<TrialReport> {
    if s > n || u_size > n || k == 0 || n == 0 {
        return Err(Error::param(
            "coverage lemma needs s <= n, |U| <= n, k >= 1",
        ));
    }
    let ratio = (s as f64 / (2.0 * n as f64)).powi(k as i32);
    let threshold = u_size as f64 / 2.0 * ratio;
    let uncovered: Vec<usize> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = seed.derive(trial as u64).rng();
            let mut u = Bits::empty(n);
            (0..u_size).for_each(|e| u.insert(e));
            for _ in 0..k {
                let mut set = Bits::empty(n);
                for e in index::sample(&mut rng, n, n - s) {
                    set.insert(e);
                }
                u.difference_with(&set);
            }
            u.count()
        })
        .collect();
    let outcomes: Vec<bool> = uncovered.iter().map(|&c| c as f64 >= threshold).collect();
    let mut r = TrialReport::new(
        "coverage",
        &[
            ("n", n as f64),
            ("s", s as f64),
            ("k", k as f64),
            ("u_size", u_size as f64),
        ],
        seed,
        &outcomes,
    );
    r.paper_bound = Some(2.0 * (-(u_size as f64) / 8.0 * ratio).exp());
    r.stats.insert("threshold".into(), threshold);
    r.stats.insert(
        "expected_uncovered".into(),
        u_size as f64 * (s as f64 / n as f64).powi(k as i32),
    );
    r.stats.insert(
        "mean_uncovered".into(),
        mean(uncovered.iter().map(|&c| c as f64)),
    );
    r.stats.insert(
        "min_uncovered".into(),
        uncovered.iter().copied().min().unwrap_or(0) as f64,
    );
    Ok(r)
}

/// θ = 0 instances should have no cover of size `<= 2α`; θ = 1 companions
/// must be covered by their planted pair.
pub fn check_sc_opt_gap(
    n: usize,
    m: usize,
    t: usize,
    alpha: usize,
    trials: usize,
    seed: Seed,
) -> Result<TrialReport> {
    let cap = 2 * alpha;
    let budget: u128 = (0..=cap as u64).map(|j| binomial(2 * m as u64, j)).sum();
    if budget > ENUMERATION_LIMIT {
        return Err(Error::param(format!(
            "C({}, <= {cap}) = {budget} subsets is too many; use smaller m or alpha",
            2 * m
        )));
    }
    struct Trial {
        no_small_cover: bool,
        pairs_miss_block: bool,
        planted_covers: bool,
        nodes: u64,
    }
    let results: Vec<Trial> = (0..trials)
        .into_par_iter()
        .map(|trial| -> Result<Trial> {
            let zero = gen_sc(
                n,
                m,
                t,
                alpha,
                Some(false),
                &mut seed.derive(2 * trial as u64).rng(),
            )?;
            let one = gen_sc(
                n,
                m,
                t,
                alpha,
                Some(true),
                &mut seed.derive(2 * trial as u64 + 1).rng(),
            )?;
            // An element missed by every set means no cover of any size.
            let (no_small_cover, nodes) = match exact_set_cover(&zero.system, Some(cap)) {
                Ok(outcome) => (
                    matches!(outcome, ExactOutcome::ExceedsCap { .. }),
                    outcome.nodes_explored(),
                ),
                Err(Error::Uncoverable { .. }) => (true, 0),
                Err(e) => return Err(e),
            };
            let i_star = one.i_star.expect("theta = 1 has a planted index");
            Ok(Trial {
                no_small_cover,
                pairs_miss_block: (0..m).all(|i| zero.pair_missing(i).len() == n / t),
                planted_covers: is_feasible_cover(&one.system, &[i_star, m + i_star])?,
                nodes,
            })
        })
        .collect::<Result<_>>()?;
    let outcomes: Vec<bool> = results.iter().map(|r| r.no_small_cover).collect();
    let mut r = TrialReport::new(
        "sc-opt",
        &[
            ("n", n as f64),
            ("m", m as f64),
            ("t", t as f64),
            ("alpha", alpha as f64),
        ],
        seed,
        &outcomes,
    );
    r.sub_check(
        "planted_pair_covers",
        results.iter().map(|t| t.planted_covers),
        true,
    )?;
    r.sub_check(
        "matched_pairs_miss_block",
        results.iter().map(|t| t.pairs_miss_block),
        true,
    )?;
    r.stats.insert(
        "mean_nodes".into(),
        mean(results.iter().map(|t| t.nodes as f64)),
    );
    Ok(r)
}

/// Planted k-partition plus `m - k` random half-sets; every k-subset that
/// covers the sample must cover at least `(1-ρ)n` elements.
pub fn check_element_sampling(
    n: usize,
    m: usize,
    k: usize,
    rho: f64,
    trials: usize,
    seed: Seed,
) -> Result<TrialReport> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::param("rho must lie in (0, 1)"));
    }
    if binomial(m as u64, k as u64) > ENUMERATION_LIMIT / 10 {
        return Err(Error::param(format!("C({m}, {k}) is too many subsets")));
    }
    let p = (16.0 * k as f64 * (m.max(2) as f64).ln() / (rho * n as f64)).min(1.0);
    let need = (1.0 - rho) * n as f64;
    struct Trial {
        ok: bool,
        covering: usize,
        sample: usize,
    }
    let results: Vec<Trial> = (0..trials)
        .into_par_iter()
        .map(|trial| -> Result<Trial> {
            let mut rng = seed.derive(trial as u64).rng();
            let system = planted_partition_instance(n, m, k, &mut rng)?;
            let sample = sample_universe(&ElementSet::full(n), p, &mut rng);
            let sample_bits = Bits::from_set(n, &sample);
            let sets = system.to_bits();
            let (mut ok, mut covering) = (true, 0);
            for_each_combination(m, k, |c| {
                let mut u = Bits::empty(n);
                for &i in c {
                    u.union_with(&sets[i]);
                }
                if u.intersection_count(&sample_bits) == sample.len() {
                    covering += 1;
                    if (u.count() as f64) < need {
                        ok = false;
                    }
                }
            });
            Ok(Trial {
                ok,
                covering,
                sample: sample.len(),
            })
        })
        .collect::<Result<_>>()?;
    let outcomes: Vec<bool> = results.iter().map(|t| t.ok).collect();
    let mut r = TrialReport::new(
        "sampling",
        &[
            ("n", n as f64),
            ("m", m as f64),
            ("k", k as f64),
            ("rho", rho),
        ],
        seed,
        &outcomes,
    );
    r.paper_bound = Some(1.0 / (m * m) as f64);
    r.stats.insert("p".into(), p);
    r.stats.insert(
        "mean_sample".into(),
        mean(results.iter().map(|t| t.sample as f64)),
    );
    r.stats.insert(
        "mean_covering_subsets".into(),
        mean(results.iter().map(|t| t.covering as f64)),
    );
    Ok(r)
}

fn matched_value(inst: &McHardInstance, i: usize) -> usize {
    inst.system.set(i).union(inst.system.set(inst.m + i)).len()
}

fn cross_pair_max(inst: &McHardInstance) -> usize {
    let m = inst.m;
    let mut best = 0;
    for i in 0..2 * m {
        for j in i + 1..2 * m {
            if j % m != i % m {
                best = best.max(inst.system.set(i).union(inst.system.set(j)).len());
            }
        }
    }
    best
}

/// Exact 2-coverage optimum of a θ = 0 and a θ = 1 instance, classified by
/// `τ = t2 + (a+b)/2 + t1/4`.
pub fn check_mc_gap(
    m: usize,
    t1: usize,
    a: usize,
    b: usize,
    trials: usize,
    seed: Seed,
) -> Result<TrialReport> {
    if 2 * m > 64 {
        return Err(Error::param(
            "mc-gap enumerates pairs of 2m sets; need m <= 32",
        ));
    }
    struct Trial {
        zero_ok: bool,
        one_ok: bool,
        identity: bool,
        planted_high: bool,
        matched_low: bool,
        cross_ok: bool,
        zero_opt: usize,
        one_opt: usize,
    }
    let root_half = (t1 as f64).sqrt() / 2.0;
    let results: Vec<Trial> = (0..trials)
        .into_par_iter()
        .map(|trial| -> Result<Trial> {
            let zero = gen_mc(
                m,
                t1,
                a,
                b,
                Some(false),
                &mut seed.derive(2 * trial as u64).rng(),
            )?;
            let one = gen_mc(
                m,
                t1,
                a,
                b,
                Some(true),
                &mut seed.derive(2 * trial as u64 + 1).rng(),
            )?;
            let tau = zero.tau();
            let zero_opt = exact_max_coverage(&zero.system, 2)?.best_value;
            let one_opt = exact_max_coverage(&one.system, 2)?.best_value;
            let identity = [&zero, &one].iter().all(|inst| {
                (0..m).all(|i| {
                    let (ai, bi) = &inst.ghd[i];
                    2 * matched_value(inst, i) == 2 * inst.t2 + a + b + hamming_distance(ai, bi)
                })
            });
            let i_star = one.i_star.expect("theta = 1 has a planted index");
            let cross_cap = 0.95 * zero.t2 as f64 + t1 as f64;
            Ok(Trial {
                zero_ok: (zero_opt as f64) < tau,
                one_ok: (one_opt as f64) > tau,
                identity,
                planted_high: matched_value(&one, i_star) as f64 >= tau + root_half,
                matched_low: (0..m).all(|i| matched_value(&zero, i) as f64 <= tau - root_half)
                    && (0..m)
                        .filter(|&i| i != i_star)
                        .all(|i| matched_value(&one, i) as f64 <= tau - root_half),
                cross_ok: cross_pair_max(&zero) as f64 <= cross_cap
                    && cross_pair_max(&one) as f64 <= cross_cap,
                zero_opt,
                one_opt,
            })
        })
        .collect::<Result<_>>()?;
    let outcomes: Vec<bool> = results.iter().map(|t| t.zero_ok && t.one_ok).collect();
    let mut r = TrialReport::new(
        "mc-gap",
        &[
            ("m", m as f64),
            ("t1", t1 as f64),
            ("a", a as f64),
            ("b", b as f64),
        ],
        seed,
        &outcomes,
    );
    r.sub_check(
        "matched_pair_identity",
        results.iter().map(|t| t.identity),
        true,
    )?;
    r.sub_check(
        "planted_pair_above_tau",
        results.iter().map(|t| t.planted_high),
        true,
    )?;
    r.sub_check(
        "matched_pairs_below_tau",
        results.iter().map(|t| t.matched_low),
        true,
    )?;
    r.sub_check(
        "cross_pairs_bounded",
        results.iter().map(|t| t.cross_ok),
        false,
    )?;
    r.sub_check("theta0_below_tau", results.iter().map(|t| t.zero_ok), false)?;
    r.sub_check("theta1_above_tau", results.iter().map(|t| t.one_ok), false)?;
    r.stats
        .insert("tau".into(), crate::hardgen::mc_tau(t1, a, b));
    r.stats.insert(
        "mean_opt_theta0".into(),
        mean(results.iter().map(|t| t.zero_opt as f64)),
    );
    r.stats.insert(
        "mean_opt_theta1".into(),
        mean(results.iter().map(|t| t.one_opt as f64)),
    );
    Ok(r)
}

/// One end-to-end solver run on a planted instance, as used by
/// [`check_solver_contract`].
pub fn solver_trial(
    n: usize,
    m: usize,
    alpha: usize,
    eps: f64,
    planted_opt: usize,
    seed: Seed,
) -> Result<(SetSystem, SolveResult)> {
    let system = planted_partition_instance(n, m, planted_opt, &mut seed.derive(0).rng())?;
    let config = SolverConfig::new(alpha, eps, seed.derive(1))?;
    let mut stream = SetStream::from_system(&system, StreamOrder::Adversarial);
    let result = solve(&mut stream, &config)?;
    Ok((system, result))
}

/// Streaming solver on planted instances: success is a feasible cover of size
/// at most `ceil((α+ε)(1+ε)·opt)` in exactly `2α+1` passes.
pub fn check_solver_contract(
    n: usize,
    m: usize,
    alpha: usize,
    eps: f64,
    planted_opt: usize,
    trials: usize,
    seed: Seed,
) -> Result<TrialReport> {
    let bound = ((alpha as f64 + eps) * (1.0 + eps) * planted_opt as f64 - 1e-9).ceil() as usize;
    let strict = ((alpha as f64 + eps) * planted_opt as f64 + 1e-9).floor() as usize;
    let runs: Vec<(bool, SolveResult)> = (0..trials)
        .into_par_iter()
        .map(|trial| -> Result<(bool, SolveResult)> {
            let (system, res) =
                solver_trial(n, m, alpha, eps, planted_opt, seed.derive(trial as u64))?;
            let sound = !res.feasible || is_feasible_cover(&system, &res.chosen)?;
            Ok((sound, res))
        })
        .collect::<Result<_>>()?;
    let outcomes: Vec<bool> = runs
        .iter()
        .map(|(_, r)| r.feasible && r.chosen.len() <= bound && r.passes_used == 2 * alpha + 1)
        .collect();
    let mut r = TrialReport::new(
        "solver",
        &[
            ("n", n as f64),
            ("m", m as f64),
            ("alpha", alpha as f64),
            ("eps", eps),
            ("planted_opt", planted_opt as f64),
        ],
        seed,
        &outcomes,
    );
    r.paper_bound = Some(1.0 / m as f64);
    r.sub_check(
        "pass_count",
        runs.iter().map(|(_, res)| res.passes_used == 2 * alpha + 1),
        true,
    )?;
    r.sub_check("feasibility_sound", runs.iter().map(|(ok, _)| *ok), true)?;
    r.sub_check(
        "strict_size_bound",
        runs.iter()
            .map(|(_, res)| res.feasible && res.chosen.len() <= strict),
        false,
    )?;
    let stored: f64 = runs
        .iter()
        .flat_map(|(_, res)| res.sampling_audit.iter())
        .map(|a| a.stored_entries as f64)
        .sum();
    let expected: f64 = runs
        .iter()
        .flat_map(|(_, res)| res.sampling_audit.iter())
        .map(|a| a.expected_entries)
        .sum();
    r.stats.insert("size_bound".into(), bound as f64);
    r.stats.insert("strict_size_bound".into(), strict as f64);
    r.stats.insert(
        "mean_sol_size".into(),
        mean(runs.iter().map(|(_, res)| res.chosen.len() as f64)),
    );
    r.stats.insert(
        "mean_peak_entries".into(),
        mean(runs.iter().map(|(_, res)| res.peak_entries as f64)),
    );
    r.stats.insert("stored_projection_entries".into(), stored);
    r.stats
        .insert("expected_projection_entries".into(), expected);
    Ok(r)
}
