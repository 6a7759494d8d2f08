//! The `(2α+1)`-pass streaming set cover algorithm.
//!
//! For a guess `g` of the optimum:
//!
//! 1. one pruning pass takes every set that still covers at least
//!    `min(n, ceil(n / (ε·g)))` uncovered elements;
//! 2. `α` times: sample the uncovered elements with probability
//!    `p = min(1, c·g·log m / n^{1-1/α})`, collect every set's projection onto
//!    the sample in one pass, solve the projected instance offline, then
//!    subtract the chosen (full) sets from the uncovered tracker in a second
//!    pass.
//!
//! [`solve`] runs every guess `ceil((1+ε)^j) <= n` inside the same physical
//! passes, so the stream sees exactly `2α+1` passes regardless of how many
//! guesses are live.

use std::collections::HashMap;
use std::convert::Infallible;

use rand::Rng as _;
use serde::Serialize;

use crate::bits::Bits;
use crate::error::{Error, Result};
use crate::oracles::{exact_set_cover, greedy_set_cover, ExactOutcome};
use crate::stream::{SetStream, SpaceLedger};
use crate::system::{ElementSet, Rng, Seed, SetSystem};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LogBase {
    Natural,
    Base2,
}

impl LogBase {
    pub fn log(self, x: f64) -> f64 {
        match self {
            LogBase::Natural => x.ln(),
            LogBase::Base2 => x.log2(),
        }
    }
}

/// Offline solver for the projected instance of each iteration.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SubSolver {
    /// Branch and bound; required for the `α·g` size guarantee.
    Exact,
    /// Greedy; faster, but gives up the size guarantee.
    Greedy,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolverConfig {
    pub alpha: usize,
    pub eps: f64,
    pub sampling_constant: f64,
    pub log_base: LogBase,
    pub guess_override: Option<usize>,
    pub seed: Seed,
    pub subsolver: SubSolver,
    /// Guesses whose storage would push the ledger above this are abandoned.
    pub ledger_budget: Option<usize>,
}

impl SolverConfig {
    pub fn new(alpha: usize, eps: f64, seed: Seed) -> Result<Self> {
        let cfg = SolverConfig {
            alpha,
            eps,
            sampling_constant: 16.0,
            log_base: LogBase::Natural,
            guess_override: None,
            seed,
            subsolver: SubSolver::Exact,
            ledger_budget: None,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.alpha < 1 {
            return Err(Error::param("alpha must be >= 1"));
        }
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(Error::param("eps must lie in (0, 1)"));
        }
        if !(self.sampling_constant > 0.0 && self.sampling_constant.is_finite()) {
            return Err(Error::param("sampling constant must be positive"));
        }
        if self.guess_override == Some(0) {
            return Err(Error::param("guess must be >= 1"));
        }
        Ok(())
    }

    /// Passes every successful run consumes.
    pub fn pass_budget(&self) -> usize {
        2 * self.alpha + 1
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GuessFailure {
    Uncoverable {
        element: u32,
    },
    BudgetExceeded,
    SubsolverLimit {
        reason: String,
    },
    /// Elements still uncovered after the last iteration.
    Incomplete {
        uncovered: usize,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GuessOutcome {
    pub guess: usize,
    pub feasible: bool,
    pub sol_size: usize,
    /// Sets taken by the pruning pass.
    pub prune_picks: usize,
    /// Size of the projected cover found in each completed iteration.
    pub subcover_sizes: Vec<usize>,
    pub failure: Option<GuessFailure>,
}

/// Storage recorded by one collect pass of one guess.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SamplingAudit {
    pub guess: usize,
    pub iteration: usize,
    pub probability: f64,
    /// `|U|` when the sample was drawn.
    pub uncovered: usize,
    pub sample_size: usize,
    /// `Σ_i |S_i ∩ U_smpl|`, the entries actually stored.
    pub stored_entries: usize,
    /// `Σ_i |S_i ∩ U| · p`.
    pub expected_entries: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolveResult {
    /// Sorted ascending.
    pub chosen: Vec<usize>,
    pub feasible: bool,
    pub passes_used: usize,
    pub peak_entries: usize,
    pub winning_guess: usize,
    pub per_guess_outcomes: Vec<GuessOutcome>,
    pub sampling_audit: Vec<SamplingAudit>,
}

/// `min(1, c · guess · log m / n^{1-1/α})`. `m < 2` is treated as `m = 2`.
pub fn sampling_probability(
    n: usize,
    m: usize,
    guess: usize,
    alpha: usize,
    config: &SolverConfig,
) -> f64 {
    let log_m = config.log_base.log(m.max(2) as f64);
    let exponent = 1.0 - 1.0 / alpha as f64;
    let raw = config.sampling_constant * guess as f64 * log_m / (n as f64).powf(exponent);
    raw.min(1.0)
}

/// Independent Bernoulli(p) subsample of `u`.
pub fn sample_universe(u: &ElementSet, p: f64, rng: &mut Rng) -> ElementSet {
    let p = p.clamp(0.0, 1.0);
    ElementSet::from_sorted_unchecked(u.iter().filter(|_| rng.random_bool(p)).collect())
}

/// `ceil((1+ε)^j)` for `j = 0, 1, ...` while at most `n`, deduplicated.
pub fn guess_schedule(n: usize, eps: f64) -> Vec<usize> {
    let mut out: Vec<usize> = Vec::new();
    let mut x = 1.0f64;
    loop {
        let g = (x - 1e-9).ceil().max(1.0) as usize;
        if g > n {
            break;
        }
        if out.last() != Some(&g) {
            out.push(g);
        }
        x *= 1.0 + eps;
    }
    out
}

/// Pruning-pass threshold, clamped so that a full set always qualifies.
pub fn prune_threshold(n: usize, eps: f64, guess: usize) -> usize {
    let raw = (n as f64 / (eps * guess as f64) - 1e-9).ceil();
    (raw.max(1.0) as usize).min(n)
}

/// Per-iteration state for one guess: the sample and the projections stored
/// against it.
struct Iteration {
    sample: Bits,
    sample_len: usize,
    projections: Vec<(usize, ElementSet)>,
    stored: usize,
    expected: f64,
    picked: Vec<bool>,
}

impl Iteration {
    fn new(sample: &ElementSet, n: usize, m: usize, ledger: &mut SpaceLedger) -> Self {
        ledger.charge(sample.len());
        Iteration {
            sample: Bits::from_set(n, sample),
            sample_len: sample.len(),
            projections: Vec::new(),
            stored: 0,
            expected: 0.0,
            picked: vec![false; m],
        }
    }

    fn collect(&mut self, index: usize, set: &ElementSet, ledger: &mut SpaceLedger) {
        let proj: Vec<u32> = set
            .iter()
            .filter(|&e| self.sample.contains(e as usize))
            .collect();
        if !proj.is_empty() {
            ledger.charge(proj.len());
            self.stored += proj.len();
            self.projections
                .push((index, ElementSet::from_sorted_unchecked(proj)));
        }
    }

    /// Offline cover of the stored projections; releases them afterwards.
    /// Projections are a function of the sample within one pass, so guesses
    /// that drew the same sample share one subsolver call through `memo`.
    fn solve(
        &mut self,
        subsolver: SubSolver,
        ledger: &mut SpaceLedger,
        memo: &mut SolveMemo,
    ) -> Result<Vec<usize>, GuessFailure> {
        let sample = self.sample.to_set();
        let result = memo
            .entry(sample.as_slice().to_vec())
            .or_insert_with(|| solve_projection(&sample, &self.projections, subsolver))
            .clone();
        ledger.discharge(self.stored_now());
        self.projections.clear();
        let picked = result?;
        for &i in &picked {
            self.picked[i] = true;
        }
        Ok(picked)
    }

    fn stored_now(&self) -> usize {
        self.projections.iter().map(|(_, p)| p.len()).sum()
    }

    fn remove(&mut self, index: usize, set: &ElementSet, ledger: &mut SpaceLedger) {
        if self.picked[index] {
            for e in set.iter() {
                if self.sample.contains(e as usize) {
                    self.sample.remove(e as usize);
                    self.sample_len -= 1;
                    ledger.discharge(1);
                }
            }
        }
    }

    fn release(self, ledger: &mut SpaceLedger) {
        ledger.discharge(self.sample_len + self.stored_now());
    }
}

type SolveMemo = HashMap<Vec<u32>, Result<Vec<usize>, GuessFailure>>;

/// Solve the instance `(index_i, projection_i)` over `sample`, returning the
/// original set indices chosen.
fn solve_projection(
    sample: &ElementSet,
    projections: &[(usize, ElementSet)],
    subsolver: SubSolver,
) -> Result<Vec<usize>, GuessFailure> {
    if sample.is_empty() {
        return Ok(Vec::new());
    }
    let position = |e: u32| {
        sample
            .as_slice()
            .binary_search(&e)
            .expect("projection ⊆ sample") as u32
    };
    let sets: Vec<ElementSet> = projections
        .iter()
        .map(|(_, p)| ElementSet::from_sorted_unchecked(p.iter().map(position).collect()))
        .collect();
    let system = SetSystem::new(sample.len(), sets).expect("positions < sample size");
    let local = match subsolver {
        SubSolver::Exact => match exact_set_cover(&system, None) {
            Ok(ExactOutcome::Optimal(r)) => r.witness,
            Ok(ExactOutcome::ExceedsCap { .. }) => unreachable!("uncapped search"),
            Err(e) => return Err(failure_from(e, sample)),
        },
        SubSolver::Greedy => greedy_set_cover(&system).map_err(|e| failure_from(e, sample))?,
    };
    let mut picked: Vec<usize> = local.into_iter().map(|i| projections[i].0).collect();
    picked.sort_unstable();
    Ok(picked)
}

fn failure_from(e: Error, sample: &ElementSet) -> GuessFailure {
    match e {
        Error::Uncoverable { element } => GuessFailure::Uncoverable {
            element: sample.as_slice()[element as usize],
        },
        other => GuessFailure::SubsolverLimit {
            reason: other.to_string(),
        },
    }
}

/// Everything one guess keeps between passes.
struct GuessState {
    guess: usize,
    threshold: usize,
    probability: f64,
    uncovered: Bits,
    uncovered_len: usize,
    in_sol: Vec<bool>,
    sol_len: usize,
    prune_picks: usize,
    subcovers: Vec<usize>,
    iteration: Option<Iteration>,
    failure: Option<GuessFailure>,
}

impl GuessState {
    fn new(
        guess: usize,
        n: usize,
        m: usize,
        config: &SolverConfig,
        ledger: &mut SpaceLedger,
    ) -> Self {
        ledger.charge(n);
        GuessState {
            guess,
            threshold: prune_threshold(n, config.eps, guess),
            probability: sampling_probability(n, m, guess, config.alpha, config),
            uncovered: Bits::full(n),
            uncovered_len: n,
            in_sol: vec![false; m],
            sol_len: 0,
            prune_picks: 0,
            subcovers: Vec::new(),
            iteration: None,
            failure: None,
        }
    }

    fn live(&self) -> bool {
        self.failure.is_none()
    }

    fn add_to_sol(&mut self, i: usize) {
        if !self.in_sol[i] {
            self.in_sol[i] = true;
            self.sol_len += 1;
        }
    }

    fn subtract(&mut self, set: &ElementSet, ledger: &mut SpaceLedger) {
        for e in set.iter() {
            if self.uncovered.contains(e as usize) {
                self.uncovered.remove(e as usize);
                self.uncovered_len -= 1;
                ledger.discharge(1);
            }
        }
    }

    fn prune_visit(&mut self, index: usize, set: &ElementSet, ledger: &mut SpaceLedger) {
        let gain = set
            .iter()
            .filter(|&e| self.uncovered.contains(e as usize))
            .count();
        if gain > 0 && gain >= self.threshold {
            self.add_to_sol(index);
            self.prune_picks += 1;
            self.subtract(set, ledger);
        }
    }

    fn fail(&mut self, failure: GuessFailure, ledger: &mut SpaceLedger) {
        if let Some(it) = self.iteration.take() {
            it.release(ledger);
        }
        ledger.discharge(self.uncovered_len);
        self.uncovered_len = 0;
        self.uncovered = Bits::empty(0);
        self.failure = Some(failure);
    }

    fn outcome(&self) -> GuessOutcome {
        GuessOutcome {
            guess: self.guess,
            feasible: self.live(),
            sol_size: self.sol_len,
            prune_picks: self.prune_picks,
            subcover_sizes: self.subcovers.clone(),
            failure: self.failure.clone(),
        }
    }

    fn chosen(&self) -> Vec<usize> {
        (0..self.in_sol.len()).filter(|&i| self.in_sol[i]).collect()
    }
}

fn over_budget(config: &SolverConfig, ledger: &SpaceLedger) -> bool {
    config.ledger_budget.is_some_and(|b| ledger.current() > b)
}

/// Runs the algorithm for every guess in `guesses` inside shared passes.
fn run(
    stream: &mut SetStream<'_>,
    guesses: &[usize],
    config: &SolverConfig,
) -> Result<SolveResult> {
    config.validate()?;
    let n = stream.universe_size();
    let m = stream.num_sets();
    let passes_before = stream.passes_used();
    let mut rng = config.seed.rng();

    let mut states: Vec<GuessState> = guesses
        .iter()
        .map(|&g| GuessState::new(g, n, m, config, stream.ledger_mut()))
        .collect();
    for st in &mut states {
        if over_budget(config, stream.ledger()) {
            st.fail(GuessFailure::BudgetExceeded, stream.ledger_mut());
        }
    }

    // Pruning pass; also records which elements appear at all.
    let mut seen = Bits::empty(n);
    let mut seen_len = 0usize;
    stream
        .run_pass(|i, set, ledger| {
            for e in set.iter() {
                if !seen.contains(e as usize) {
                    seen.insert(e as usize);
                    seen_len += 1;
                    ledger.charge(1);
                }
            }
            for st in states.iter_mut().filter(|s| s.live()) {
                st.prune_visit(i, set, ledger);
            }
            Ok::<_, Infallible>(())
        })
        .unwrap_or_else(|e| match e {});
    stream.ledger_mut().discharge(seen_len);

    let uncoverable = (0..n).find(|&e| !seen.contains(e));
    if let Some(e) = uncoverable {
        for st in states.iter_mut().filter(|s| s.live()) {
            st.fail(
                GuessFailure::Uncoverable { element: e as u32 },
                stream.ledger_mut(),
            );
        }
        return Ok(finish(stream, states, passes_before, Vec::new()));
    }

    let mut audit = Vec::new();
    for iteration in 1..=config.alpha {
        for st in states.iter_mut().filter(|s| s.live()) {
            let u = st.uncovered.to_set();
            let sample = sample_universe(&u, st.probability, &mut rng);
            st.iteration = Some(Iteration::new(&sample, n, m, stream.ledger_mut()));
            if over_budget(config, stream.ledger()) {
                st.fail(GuessFailure::BudgetExceeded, stream.ledger_mut());
            }
        }

        // Collect pass.
        stream
            .run_pass(|i, set, ledger| {
                for st in states.iter_mut().filter(|s| s.live()) {
                    let it = st.iteration.as_mut().expect("live guess has an iteration");
                    let on_u = set
                        .iter()
                        .filter(|&e| st.uncovered.contains(e as usize))
                        .count();
                    it.expected += on_u as f64 * st.probability;
                    it.collect(i, set, ledger);
                    if over_budget(config, ledger) {
                        st.fail(GuessFailure::BudgetExceeded, ledger);
                    }
                }
                Ok::<_, Infallible>(())
            })
            .unwrap_or_else(|e| match e {});

        let mut memo = SolveMemo::new();
        for st in states.iter_mut().filter(|s| s.live()) {
            let it = st.iteration.as_mut().expect("live guess has an iteration");
            audit.push(SamplingAudit {
                guess: st.guess,
                iteration,
                probability: st.probability,
                uncovered: st.uncovered_len,
                sample_size: it.sample_len,
                stored_entries: it.stored,
                expected_entries: it.expected,
            });
            match it.solve(config.subsolver, stream.ledger_mut(), &mut memo) {
                Ok(picked) => {
                    st.subcovers.push(picked.len());
                    for i in picked {
                        st.add_to_sol(i);
                    }
                }
                Err(f) => st.fail(f, stream.ledger_mut()),
            }
        }

        // Removal pass: full sets come off the tracker and the sample.
        stream
            .run_pass(|i, set, ledger| {
                for st in states.iter_mut().filter(|s| s.live()) {
                    let picked = st.iteration.as_ref().is_some_and(|it| it.picked[i]);
                    if picked {
                        st.subtract(set, ledger);
                        if let Some(it) = st.iteration.as_mut() {
                            it.remove(i, set, ledger);
                        }
                    }
                }
                Ok::<_, Infallible>(())
            })
            .unwrap_or_else(|e| match e {});

        for st in states.iter_mut() {
            if let Some(it) = st.iteration.take() {
                it.release(stream.ledger_mut());
            }
        }
    }

    for st in states.iter_mut().filter(|s| s.live()) {
        if st.uncovered_len > 0 {
            let uncovered = st.uncovered_len;
            // Keep the partial cover; only the tracker is released.
            stream.ledger_mut().discharge(uncovered);
            st.uncovered_len = 0;
            st.failure = Some(GuessFailure::Incomplete { uncovered });
        }
    }
    Ok(finish(stream, states, passes_before, audit))
}

fn finish(
    stream: &mut SetStream<'_>,
    mut states: Vec<GuessState>,
    passes_before: usize,
    sampling_audit: Vec<SamplingAudit>,
) -> SolveResult {
    for st in states.iter_mut().filter(|s| s.uncovered_len > 0) {
        stream.ledger_mut().discharge(st.uncovered_len);
        st.uncovered_len = 0;
    }
    let per_guess_outcomes: Vec<GuessOutcome> = states.iter().map(GuessState::outcome).collect();

    let best_feasible = states
        .iter()
        .filter(|s| s.live())
        .min_by_key(|s| (s.sol_len, s.guess));
    let (winner, feasible) = match best_feasible {
        Some(s) => (Some(s), true),
        None => {
            // Best partial: fewest uncovered elements left, then smaller guess.
            let partial = states
                .iter()
                .filter(|s| matches!(s.failure, Some(GuessFailure::Incomplete { .. })))
                .min_by_key(|s| match s.failure {
                    Some(GuessFailure::Incomplete { uncovered }) => (uncovered, s.guess),
                    _ => unreachable!(),
                });
            (partial.or(states.first()), false)
        }
    };

    SolveResult {
        chosen: winner.map(GuessState::chosen).unwrap_or_default(),
        feasible,
        passes_used: stream.passes_used() - passes_before,
        peak_entries: stream.ledger().peak(),
        winning_guess: winner.map_or(1, |s| s.guess),
        per_guess_outcomes,
        sampling_audit,
    }
}

/// Tries every guess of the schedule (or only the override) in shared passes
/// and keeps the smallest feasible cover, smaller guess on ties.
pub fn solve(stream: &mut SetStream<'_>, config: &SolverConfig) -> Result<SolveResult> {
    let guesses = match config.guess_override {
        Some(g) => vec![g],
        None => guess_schedule(stream.universe_size(), config.eps),
    };
    run(stream, &guesses, config)
}

/// The algorithm for a single guess of the optimum.
pub fn solve_for_guess(
    stream: &mut SetStream<'_>,
    guess: usize,
    config: &SolverConfig,
) -> Result<SolveResult> {
    if guess == 0 {
        return Err(Error::param("guess must be >= 1"));
    }
    run(stream, &[guess], config)
}

/// Standalone pruning pass for one guess: returns the picked sets and the
/// elements they leave uncovered.
pub fn prune_pass(
    stream: &mut SetStream<'_>,
    guess: usize,
    eps: f64,
) -> Result<(Vec<usize>, ElementSet)> {
    if guess == 0 {
        return Err(Error::param("guess must be >= 1"));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::param("eps must lie in (0, 1)"));
    }
    let n = stream.universe_size();
    let m = stream.num_sets();
    let cfg = SolverConfig {
        eps,
        ..SolverConfig::new(1, 0.5, Seed(0))?
    };
    let mut st = GuessState::new(guess, n, m, &cfg, stream.ledger_mut());
    let mut order = Vec::new();
    stream
        .run_pass(|i, set, ledger| {
            let before = st.prune_picks;
            st.prune_visit(i, set, ledger);
            if st.prune_picks > before {
                order.push(i);
            }
            Ok::<_, Infallible>(())
        })
        .unwrap_or_else(|e| match e {});
    let u = st.uncovered.to_set();
    stream.ledger_mut().discharge(st.uncovered_len);
    Ok((order, u))
}

/// Standalone collect/solve/remove iteration on a given sample. Consumes two
/// passes; returns the picked sets and what is left of the sample after
/// removing the full picked sets.
pub fn iteration(
    stream: &mut SetStream<'_>,
    sample: &ElementSet,
    subsolver: SubSolver,
) -> Result<(Vec<usize>, ElementSet)> {
    let n = stream.universe_size();
    let m = stream.num_sets();
    if sample.max().is_some_and(|e| e as usize >= n) {
        return Err(Error::param("sample is not a subset of the universe"));
    }
    let mut it = Iteration::new(sample, n, m, stream.ledger_mut());
    stream
        .run_pass(|i, set, ledger| {
            it.collect(i, set, ledger);
            Ok::<_, Infallible>(())
        })
        .unwrap_or_else(|e| match e {});
    let solved = it.solve(subsolver, stream.ledger_mut(), &mut SolveMemo::new());
    stream
        .run_pass(|i, set, ledger| {
            it.remove(i, set, ledger);
            Ok::<_, Infallible>(())
        })
        .unwrap_or_else(|e| match e {});
    let remaining = it.sample.to_set();
    it.release(stream.ledger_mut());
    match solved {
        Ok(picked) => Ok((picked, remaining)),
        Err(GuessFailure::Uncoverable { element }) => Err(Error::Uncoverable { element }),
        Err(f) => Err(Error::param(format!("sub-solver failed: {f:?}"))),
    }
}
