//! Galton-Watson chains: simulation, exact time-`T` laws, the generating
//! function extinction oracle, and block-event survival certificates.
//!
//! A chain started from `N` individuals evolves by
//! `Y_{n+1} = X_1 + ... + X_{Y_n}` with i.i.d. offspring counts `X_i ~ ν`.
//! The exact law of `Y_T` is propagated with the transition kernel
//! `P(Y_{t+1} = j | Y_t = i) = ν^{*i}(j)`, zero being absorbing.

use rand::Rng;
use rayon::prelude::*;

use crate::dist::{IntegerDistribution, DEFAULT_MASS_BUDGET};
use crate::error::{Error, Result};
use crate::rng::{sample_binomial, trial_stream};

/// Iteration cap of the generating-function fixed point.
pub const PGF_ITERATION_CAP: u64 = 1_000_000;

/// Relative snap applied before taking `⌈aN⌉`, so that `1.1 * 50` is read
/// as 55 rather than 55.000000000000007.
const CEIL_SNAP: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
enum LawKind {
    Binomial { trials: u64, p: f64 },
    General,
}

/// Offspring distribution together with its fertility (mean).
#[derive(Debug, Clone)]
pub struct OffspringLaw {
    dist: IntegerDistribution,
    fertility: f64,
    kind: LawKind,
}

impl OffspringLaw {
    /// Binomial(`trials`, `p`) offspring; `binomial(2, q)` is the law used
    /// throughout.
    pub fn binomial(trials: u64, p: f64) -> Result<Self> {
        let dist = IntegerDistribution::binomial(trials, p)?;
        Ok(Self {
            fertility: trials as f64 * p,
            dist,
            kind: LawKind::Binomial { trials, p },
        })
    }

    pub fn from_distribution(dist: IntegerDistribution) -> Self {
        Self {
            fertility: dist.mean(),
            dist,
            kind: LawKind::General,
        }
    }

    /// Every individual has exactly `k` children.
    pub fn deterministic(k: u64) -> Self {
        Self::from_distribution(IntegerDistribution::delta(k))
    }

    pub fn distribution(&self) -> &IntegerDistribution {
        &self.dist
    }

    pub fn fertility(&self) -> f64 {
        self.fertility
    }

    pub fn variance(&self) -> f64 {
        self.dist.variance()
    }

    /// Probability generating function `f(s) = Σ ν(k) s^k`.
    pub fn pgf(&self, s: f64) -> f64 {
        match self.kind {
            LawKind::Binomial { trials, p } => ((1.0 - p) + p * s).powi(trials as i32),
            LawKind::General => self.dist.iter().map(|(v, p)| p * s.powi(v as i32)).sum(),
        }
    }

    /// `ν^{*count}` with at most `budget` mass trimmed per convolution.
    pub fn convolution_power(&self, count: u64, budget: f64) -> IntegerDistribution {
        match self.kind {
            LawKind::Binomial { trials, p } => {
                IntegerDistribution::binomial_trimmed(trials * count, p, budget)
                    .expect("parameters validated at construction")
            }
            LawKind::General => self.dist.convolve_power_with_budget(count, budget),
        }
    }

    /// Total offspring of `parents` independent individuals.
    pub fn sample_total<R: Rng + ?Sized>(&self, parents: u64, rng: &mut R) -> u64 {
        match self.kind {
            LawKind::Binomial { trials, p } => sample_binomial(rng, trials * parents, p),
            LawKind::General => {
                if parents == 0 {
                    return 0;
                }
                if self.dist.support_len() == 1 {
                    return parents * self.dist.min_value();
                }
                let sampler = self.dist.sampler();
                (0..parents).map(|_| sampler.sample(rng)).sum()
            }
        }
    }
}

/// One generation: the sum of `population` independent offspring counts.
pub fn gw_step<R: Rng + ?Sized>(population: u64, law: &OffspringLaw, rng: &mut R) -> u64 {
    law.sample_total(population, rng)
}

/// How a simulated trajectory ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GwStatus {
    /// Population hit 0 at this step.
    Extinct(u32),
    /// Horizon reached with a positive population below the threshold.
    Survived(u64),
    /// Population reached the explosion threshold at this step.
    Exploded(u32),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GwOutcome {
    pub status: GwStatus,
    pub trajectory: Option<Vec<u64>>,
}

#[derive(Debug, Clone, Copy)]
pub struct SimulationConfig {
    pub horizon: u32,
    pub explosion_threshold: u64,
    pub record_trajectory: bool,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            horizon: 1000,
            explosion_threshold: 1_000_000,
            record_trajectory: false,
        }
    }
}

/// Runs a chain until extinction, explosion or the horizon.
pub fn simulate<R: Rng + ?Sized>(
    initial: u64,
    law: &OffspringLaw,
    config: &SimulationConfig,
    rng: &mut R,
) -> GwOutcome {
    let mut trajectory = config.record_trajectory.then(|| vec![initial]);
    let finish = |status, trajectory| GwOutcome { status, trajectory };
    if initial == 0 {
        return finish(GwStatus::Extinct(0), trajectory);
    }
    if initial >= config.explosion_threshold {
        return finish(GwStatus::Exploded(0), trajectory);
    }
    let mut population = initial;
    for step in 1..=config.horizon {
        population = gw_step(population, law, rng);
        if let Some(t) = trajectory.as_mut() {
            t.push(population);
        }
        if population == 0 {
            return finish(GwStatus::Extinct(step), trajectory);
        }
        if population >= config.explosion_threshold {
            return finish(GwStatus::Exploded(step), trajectory);
        }
    }
    finish(GwStatus::Survived(population), trajectory)
}

/// Outcome counts of a batch of independent simulations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GwBatchSummary {
    pub trials: u64,
    pub extinct: u64,
    pub exploded: u64,
    pub survived_horizon: u64,
    pub seed: u64,
}

impl GwBatchSummary {
    /// Explosion frequency, the survival proxy.
    pub fn survival_frequency(&self) -> f64 {
        self.exploded as f64 / self.trials as f64
    }

    pub fn standard_error(&self) -> f64 {
        let f = self.survival_frequency();
        (f * (1.0 - f) / self.trials as f64).sqrt()
    }
}

/// Simulates `trials` chains in parallel. Trial `t` draws from
/// `trial_stream(seed, t)`, so the counts do not depend on thread count.
pub fn simulate_batch(
    initial: u64,
    law: &OffspringLaw,
    config: &SimulationConfig,
    trials: u64,
    seed: u64,
) -> GwBatchSummary {
    let config = SimulationConfig {
        record_trajectory: false,
        ..*config
    };
    let (extinct, exploded, survived) = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_stream(seed, t);
            match simulate(initial, law, &config, &mut rng).status {
                GwStatus::Extinct(_) => (1, 0, 0),
                GwStatus::Exploded(_) => (0, 1, 0),
                GwStatus::Survived(_) => (0, 0, 1),
            }
        })
        .reduce(|| (0, 0, 0), |a, b| (a.0 + b.0, a.1 + b.1, a.2 + b.2));
    GwBatchSummary {
        trials,
        extinct,
        exploded,
        survived_horizon: survived,
        seed,
    }
}

/// Limits on exact distribution propagation.
#[derive(Debug, Clone, Copy)]
pub struct ExactBudget {
    /// Maximum width of the dense support window.
    pub max_support: usize,
    /// Mass that may be discarded per convolution and per step.
    pub mass_budget: f64,
}

impl Default for ExactBudget {
    fn default() -> Self {
        Self {
            max_support: 1 << 20,
            mass_budget: DEFAULT_MASS_BUDGET,
        }
    }
}

/// One application of the transition kernel to the law of `Y_t`.
fn propagate(
    current: &IntegerDistribution,
    law: &OffspringLaw,
    budget: &ExactBudget,
    step: u32,
) -> Result<IntegerDistribution> {
    let mut base: Option<usize> = None;
    let mut next: Vec<f64> = Vec::new();
    let mut loss = current.truncation_loss();
    let mut add = |kernel: &IntegerDistribution, weight: f64, loss: &mut f64| -> Result<()> {
        let end = kernel.max_value() as usize + 1;
        if end > budget.max_support {
            return Err(Error::BudgetExceeded {
                step,
                detail: format!("support {end} > cap {}", budget.max_support),
            });
        }
        let start = kernel.min_value() as usize;
        let base = base.get_or_insert(start);
        if start < *base {
            next.splice(0..0, std::iter::repeat_n(0.0, *base - start));
            *base = start;
        }
        let base = *base;
        if next.len() < end - base {
            next.resize(end - base, 0.0);
        }
        for (slot, p) in next[start - base..end - base].iter_mut().zip(kernel.probabilities()) {
            *slot += weight * p;
        }
        *loss += weight * kernel.truncation_loss();
        Ok(())
    };

    match law.kind {
        LawKind::Binomial { .. } => {
            for (i, w) in current.iter() {
                if w == 0.0 {
                    continue;
                }
                let kernel = law.convolution_power(i, budget.mass_budget);
                add(&kernel, w, &mut loss)?;
            }
        }
        LawKind::General => {
            let mut power = IntegerDistribution::delta(0);
            let mut reached = 0u64;
            for (i, w) in current.iter() {
                if w == 0.0 {
                    continue;
                }
                while reached < i {
                    power = power.convolve_with_budget(&law.dist, budget.mass_budget);
                    reached += 1;
                }
                add(&power, w, &mut loss)?;
            }
        }
    }
    let mut out = IntegerDistribution::from_parts_unchecked(base.unwrap_or(0) as u64, next, loss);
    out.trim(budget.mass_budget);
    Ok(out)
}

/// Exact law of `Y_T` under `P^N`.
pub fn exact_law_at(
    initial: u64,
    law: &OffspringLaw,
    steps: u32,
    budget: &ExactBudget,
) -> Result<IntegerDistribution> {
    let mut current = IntegerDistribution::delta(initial);
    for step in 1..=steps {
        current = propagate(&current, law, budget, step)?;
    }
    Ok(current)
}

/// Least fixed point of the generating function, reached by iterating
/// `s <- f(s)` from `s = 0`. `tol` bounds `|f(s) - s|` at the returned
/// point; near criticality that is much tighter than the distance to the
/// true fixed point.
pub fn extinction_probability(law: &OffspringLaw, tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::Domain(format!("tolerance must be positive, got {tol}")));
    }
    let mut s = 0.0;
    for _ in 0..PGF_ITERATION_CAP {
        let fs = law.pgf(s);
        if (fs - s).abs() < tol {
            return Ok(s.clamp(0.0, 1.0));
        }
        s = fs;
    }
    Err(Error::IterationCap {
        iterations: PGF_ITERATION_CAP,
    })
}

/// `P^N(τ > n) = 1 - P^N(Y_n = 0)`.
pub fn tau_tail_exact(
    initial: u64,
    law: &OffspringLaw,
    n: u32,
    budget: &ExactBudget,
) -> Result<f64> {
    let dist = exact_law_at(initial, law, n, budget)?;
    Ok(1.0 - dist.pmf(0))
}

/// `a · P^N(Y_1 >= ⌈aN⌉)`.
pub fn renormalized_fertility(law: &OffspringLaw, a: f64, block_size: u64) -> Result<f64> {
    if !(a > 0.0) || block_size == 0 {
        return Err(Error::Precondition(format!(
            "need a > 0 and N >= 1, got a = {a}, N = {block_size}"
        )));
    }
    let level = renormalized_level(a, block_size);
    let dist = law.convolution_power(block_size, DEFAULT_MASS_BUDGET);
    Ok(a * dist.tail(level))
}

/// Integer level `⌈aN⌉` used by [`renormalized_fertility`].
pub fn renormalized_level(a: f64, block_size: u64) -> u64 {
    let x = a * block_size as f64;
    (x - CEIL_SNAP * x.max(1.0)).ceil().max(0.0) as u64
}

/// Witness that a finite block event beats its survival threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Certificate {
    block_size: u64,
    block_time: u32,
    value: f64,
    threshold: f64,
}

impl Certificate {
    /// Returns `None` unless `value > threshold`, `N >= 1` and `T >= 1`.
    pub fn new(block_size: u64, block_time: u32, value: f64, threshold: f64) -> Option<Self> {
        (value > threshold && block_size >= 1 && block_time >= 1).then_some(Self {
            block_size,
            block_time,
            value,
            threshold,
        })
    }

    pub fn block_size(&self) -> u64 {
        self.block_size
    }

    pub fn block_time(&self) -> u32 {
        self.block_time
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }
}

/// `P^N(Y_T >= 2N)` for one block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockEvent {
    pub block_size: u64,
    pub block_time: u32,
    pub probability: f64,
    pub truncation_loss: f64,
}

/// Evaluates `P^N(Y_T >= 2N)` for `T = 1..=t_max` (outer) and
/// `N = 1..=n_max` (inner), handing each to `visit` until it returns
/// `false`.
fn scan_blocks(
    law: &OffspringLaw,
    n_max: u64,
    t_max: u32,
    budget: &ExactBudget,
    mut visit: impl FnMut(BlockEvent) -> bool,
) -> Result<()> {
    let mut laws: Vec<IntegerDistribution> =
        (1..=n_max).map(IntegerDistribution::delta).collect();
    for t in 1..=t_max {
        for (idx, dist) in laws.iter_mut().enumerate() {
            let n = idx as u64 + 1;
            *dist = propagate(dist, law, budget, t).map_err(|e| Error::ScanBudgetExceeded {
                block_size: n,
                block_time: t,
                source: Box::new(e),
            })?;
            let event = BlockEvent {
                block_size: n,
                block_time: t,
                probability: dist.tail(2 * n),
                truncation_loss: dist.truncation_loss(),
            };
            if !visit(event) {
                return Ok(());
            }
        }
    }
    Ok(())
}

/// All block-event probabilities with `N <= n_max`, `T <= t_max`.
pub fn block_event_table(
    law: &OffspringLaw,
    n_max: u64,
    t_max: u32,
    budget: &ExactBudget,
) -> Result<Vec<BlockEvent>> {
    let mut out = Vec::new();
    scan_blocks(law, n_max, t_max, budget, |e| {
        out.push(e);
        true
    })?;
    Ok(out)
}

/// First `(N, T)`, scanning `T` then `N`, with `P^N(Y_T >= 2N) > 1/2`.
///
/// The probability is computed over retained mass only, so it never
/// overstates the true value.
pub fn certificate_search(
    law: &OffspringLaw,
    n_max: u64,
    t_max: u32,
    budget: &ExactBudget,
) -> Result<Option<Certificate>> {
    if n_max == 0 || t_max == 0 {
        return Err(Error::Precondition("scan bounds must be at least 1".into()));
    }
    let mut found = None;
    scan_blocks(law, n_max, t_max, budget, |e| {
        found = Certificate::new(e.block_size, e.block_time, e.probability, 0.5);
        found.is_none()
    })?;
    Ok(found)
}

/// Markov bound `E^N[Y_T] / 2N = m^T / 2` on `P^N(Y_T >= 2N)`.
pub fn markov_certificate_bound(law: &OffspringLaw, block_time: u32) -> f64 {
    law.fertility().powi(block_time as i32) / 2.0
}

/// Ingredients and value of the product lower bound on `P^n(τ = ∞)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurvivalBound {
    /// `E[X ∧ M]`
    pub truncated_mean: f64,
    /// `Var(X ∧ M)`
    pub truncated_variance: f64,
    /// `c = Var(X ∧ M) / (E[X ∧ M] - a)`
    pub c: f64,
    /// `∏_{i=0}^{terms} (1 - c / (n a^i))`
    pub partial_product: f64,
    /// `Σ_{i > terms} c / (n a^i)`, the mass the omitted factors can remove.
    pub omitted_sum: f64,
    /// `partial_product · (1 - omitted_sum)`, clamped to `[0, 1]`.
    pub bound: f64,
}

/// Chebyshev product bound on survival from `n` individuals, using growth
/// rate `a` and truncation level `M`.
pub fn survival_lower_bound(
    law: &OffspringLaw,
    a: f64,
    truncation: u64,
    n: u64,
    terms: u32,
) -> Result<SurvivalBound> {
    if !(a > 1.0) {
        return Err(Error::Precondition(format!("need a > 1, got {a}")));
    }
    let truncated = law.dist.map_monotone(|v| v.min(truncation));
    let truncated_mean = truncated.mean();
    let truncated_variance = truncated.variance();
    if truncated_mean <= a {
        return Err(Error::Precondition(format!(
            "E[X ∧ M] = {truncated_mean} must exceed a = {a}"
        )));
    }
    let c = truncated_variance / (truncated_mean - a);
    let n_f = n as f64;
    if n_f <= c {
        return Err(Error::Precondition(format!(
            "initial size n = {n} must exceed c = {c}"
        )));
    }
    let partial_product = (0..=terms)
        .map(|i| 1.0 - c / (n_f * a.powi(i as i32)))
        .product::<f64>();
    let omitted_sum = c / n_f * a.powi(-(terms as i32 + 1)) / (1.0 - 1.0 / a);
    let bound = (partial_product * (1.0 - omitted_sum)).clamp(0.0, 1.0);
    Ok(SurvivalBound {
        truncated_mean,
        truncated_variance,
        c,
        partial_product: partial_product.clamp(0.0, 1.0),
        omitted_sum,
        bound,
    })
}

/// Law of `B · X` with `B ~ Bernoulli(p)` independent of `X ~ ν`.
pub fn thin(law: &OffspringLaw, p: f64) -> Result<OffspringLaw> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Domain(format!("thinning probability must lie in [0, 1], got {p}")));
    }
    if p == 1.0 {
        return Ok(law.clone());
    }
    if p == 0.0 {
        return Ok(OffspringLaw::deterministic(0));
    }
    let hi = law.dist.max_value();
    let mut probs = vec![0.0; hi as usize + 1];
    probs[0] = 1.0 - p;
    for (v, w) in law.dist.iter() {
        probs[v as usize] += p * w;
    }
    let dist = IntegerDistribution::from_parts(0, probs, p * law.dist.truncation_loss())?;
    Ok(OffspringLaw {
        dist,
        fertility: p * law.fertility,
        kind: LawKind::General,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::trial_stream;

    fn bin2(q: f64) -> OffspringLaw {
        OffspringLaw::binomial(2, q).unwrap()
    }

    #[test]
    fn step_absorbing_and_deterministic() {
        let mut rng = trial_stream(1, 0);
        assert_eq!(gw_step(0, &bin2(0.9), &mut rng), 0);
        let one = OffspringLaw::deterministic(1);
        assert_eq!(gw_step(17, &one, &mut rng), 17);
    }

    #[test]
    fn step_mean_matches_fertility() {
        let law = bin2(0.6);
        let mut rng = trial_stream(2, 0);
        let reps = 200;
        let pop = 100_000u64;
        let total: f64 = (0..reps).map(|_| gw_step(pop, &law, &mut rng) as f64).sum();
        let mean = total / reps as f64;
        let sigma = (pop as f64 * 2.0 * 0.6 * 0.4 / reps as f64).sqrt();
        assert!((mean - 1.2e5).abs() < 4.0 * sigma, "{mean}");
    }

    #[test]
    fn general_law_step_mean() {
        let law = OffspringLaw::from_distribution(
            IntegerDistribution::from_pairs([(0, 0.3), (1, 0.3), (3, 0.4)]).unwrap(),
        );
        let mut rng = trial_stream(3, 0);
        let n = 20_000;
        let mean = (0..n).map(|_| gw_step(10, &law, &mut rng) as f64).sum::<f64>() / n as f64;
        let sigma = (10.0 * law.variance() / n as f64).sqrt();
        assert!((mean - 10.0 * law.fertility()).abs() < 4.0 * sigma);
    }

    #[test]
    fn simulate_edge_cases() {
        let mut rng = trial_stream(4, 0);
        let cfg = SimulationConfig {
            horizon: 100,
            explosion_threshold: 8,
            record_trajectory: true,
        };
        let out = simulate(0, &bin2(0.5), &cfg, &mut rng);
        assert_eq!(out.status, GwStatus::Extinct(0));
        let out = simulate(1, &OffspringLaw::deterministic(2), &cfg, &mut rng);
        assert_eq!(out.status, GwStatus::Exploded(3));
        assert_eq!(out.trajectory.unwrap(), vec![1, 2, 4, 8]);
        let cfg = SimulationConfig {
            horizon: 5,
            explosion_threshold: 1000,
            record_trajectory: false,
        };
        let out = simulate(3, &OffspringLaw::deterministic(1), &cfg, &mut rng);
        assert_eq!(out.status, GwStatus::Survived(3));
        assert!(out.trajectory.is_none());
    }

    #[test]
    fn trajectory_invariants() {
        let cfg = SimulationConfig {
            horizon: 200,
            explosion_threshold: 500,
            record_trajectory: true,
        };
        for t in 0..200 {
            let mut rng = trial_stream(9, t);
            let out = simulate(1, &bin2(0.6), &cfg, &mut rng);
            let traj = out.trajectory.unwrap();
            match out.status {
                GwStatus::Extinct(n) => {
                    assert_eq!(traj[n as usize], 0);
                    assert!(traj[..n as usize].iter().all(|&y| y > 0));
                }
                GwStatus::Exploded(n) => assert!(traj[n as usize] >= 500),
                GwStatus::Survived(y) => assert_eq!(*traj.last().unwrap(), y),
            }
        }
    }

    #[test]
    fn exact_law_trivial_cases() {
        let b = ExactBudget::default();
        assert_eq!(
            exact_law_at(5, &bin2(0.3), 0, &b).unwrap(),
            IntegerDistribution::delta(5)
        );
        let one = exact_law_at(1, &bin2(0.3), 1, &b).unwrap();
        assert!(one.sup_distance(&IntegerDistribution::binomial(2, 0.3).unwrap()) < 1e-15);
    }

    /// Enumerates every offspring vector of the first and second generation.
    fn brute_force_two_generations(initial: usize, q: f64) -> Vec<f64> {
        let b = [(1.0 - q) * (1.0 - q), 2.0 * q * (1.0 - q), q * q];
        let mut out = vec![0.0; 2 * 2 * 2 * initial + 1];
        let mut first = vec![0usize; initial];
        loop {
            let p1: f64 = first.iter().map(|&k| b[k]).product();
            let y1: usize = first.iter().sum();
            let mut second = vec![0usize; y1];
            loop {
                let p2: f64 = second.iter().map(|&k| b[k]).product();
                out[second.iter().sum::<usize>()] += p1 * p2;
                if !odometer(&mut second) {
                    break;
                }
            }
            if !odometer(&mut first) {
                break;
            }
        }
        out
    }

    fn odometer(digits: &mut [usize]) -> bool {
        for d in digits.iter_mut() {
            if *d < 2 {
                *d += 1;
                return true;
            }
            *d = 0;
        }
        false
    }

    #[test]
    fn exact_law_matches_brute_force() {
        let q = 0.9;
        let brute = brute_force_two_generations(2, q);
        let dp = exact_law_at(2, &bin2(q), 2, &ExactBudget::default()).unwrap();
        assert!((dp.pmf(0) - brute[0]).abs() < 1e-15);
        for (v, p) in brute.iter().enumerate() {
            assert!((dp.pmf(v as u64) - p).abs() < 1e-14, "value {v}");
        }
    }

    #[test]
    fn general_law_dp_agrees_with_binomial_fast_path() {
        let q = 0.65;
        let general = OffspringLaw::from_distribution(IntegerDistribution::binomial(2, q).unwrap());
        let b = ExactBudget::default();
        for t in 0..5 {
            let fast = exact_law_at(2, &bin2(q), t, &b).unwrap();
            let slow = exact_law_at(2, &general, t, &b).unwrap();
            assert!(fast.sup_distance(&slow) < 1e-12);
        }
    }

    #[test]
    fn budget_exceeded_reports_step() {
        let b = ExactBudget {
            max_support: 20,
            mass_budget: 0.0,
        };
        let err = exact_law_at(1, &bin2(0.9), 10, &b).unwrap_err();
        match err {
            Error::BudgetExceeded { step, detail } => {
                assert_eq!(step, 5);
                assert!(detail.contains("cap 20"), "{detail}");
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn extinction_oracle_values() {
        let s = extinction_probability(&bin2(0.75), 1e-14).unwrap();
        assert!((s - 1.0 / 9.0).abs() < 1e-10, "{s}");
        let s = extinction_probability(&bin2(0.5), 1e-10).unwrap();
        assert!((s - 1.0).abs() < 1e-4, "{s}");
        let s = extinction_probability(&bin2(0.4), 1e-14).unwrap();
        assert!((s - 1.0).abs() < 1e-10, "{s}");
        assert!(extinction_probability(&bin2(0.4), 0.0).is_err());
    }

    #[test]
    fn extinction_oracle_iteration_cap() {
        let err = extinction_probability(&bin2(0.5), 1e-300).unwrap_err();
        assert!(matches!(err, Error::IterationCap { .. }));
    }

    #[test]
    fn tau_tail_cases() {
        let b = ExactBudget::default();
        let dead = OffspringLaw::deterministic(0);
        assert_eq!(tau_tail_exact(1, &dead, 1, &b).unwrap(), 0.0);
        for n in 1..=20 {
            let v = tau_tail_exact(1, &bin2(0.4), n, &b).unwrap();
            assert!(v <= 0.8f64.powi(n as i32) + 1e-12);
        }
        for n in 1..=6 {
            let p1 = exact_law_at(1, &bin2(0.6), n, &b).unwrap().pmf(0);
            let p3 = exact_law_at(3, &bin2(0.6), n, &b).unwrap().pmf(0);
            assert!((p3 - p1.powi(3)).abs() < 1e-12);
        }
    }

    #[test]
    fn renormalized_fertility_cases() {
        let v = renormalized_fertility(&bin2(0.9), 2.0, 1).unwrap();
        assert!((v - 1.62).abs() < 1e-15);
        for n in 1..10 {
            assert_eq!(
                renormalized_fertility(&OffspringLaw::deterministic(1), 2.0, n).unwrap(),
                0.0
            );
        }
        assert_eq!(renormalized_level(1.1, 50), 55);
        assert_eq!(renormalized_level(2.0, 3), 6);
        assert_eq!(renormalized_level(1.25, 3), 4);
        assert!(renormalized_fertility(&bin2(0.9), 0.0, 1).is_err());
    }

    #[test]
    fn renormalized_fertility_monte_carlo() {
        let law = bin2(0.6);
        let exact = renormalized_fertility(&law, 1.1, 50).unwrap();
        let level = renormalized_level(1.1, 50);
        let n = 1_000_000u64;
        let mut rng = trial_stream(77, 0);
        let hits = (0..n).filter(|_| gw_step(50, &law, &mut rng) >= level).count();
        let p_hat = hits as f64 / n as f64;
        let p = exact / 1.1;
        let sigma = (p * (1.0 - p) / n as f64).sqrt();
        assert!((p_hat - p).abs() < 4.0 * sigma, "{p_hat} vs {p}");
    }

    #[test]
    fn certificate_examples() {
        let b = ExactBudget::default();
        let c = certificate_search(&bin2(0.9), 4, 4, &b).unwrap().unwrap();
        assert_eq!((c.block_size(), c.block_time()), (1, 1));
        assert_eq!(c.value(), 0.81);
        assert_eq!(c.threshold(), 0.5);
        assert!(certificate_search(&bin2(0.4), 8, 8, &b).unwrap().is_none());
        assert!(certificate_search(&bin2(0.5), 8, 8, &b).unwrap().is_none());
        assert!(certificate_search(&bin2(0.5), 0, 8, &b).is_err());
    }

    #[test]
    fn certificate_constructor_enforces_inequality() {
        assert!(Certificate::new(1, 1, 0.5, 0.5).is_none());
        assert!(Certificate::new(0, 1, 0.9, 0.5).is_none());
        assert!(Certificate::new(1, 0, 0.9, 0.5).is_none());
        assert!(Certificate::new(1, 1, 0.51, 0.5).is_some());
    }

    #[test]
    fn certificate_scan_reports_frontier() {
        let b = ExactBudget {
            max_support: 10,
            mass_budget: 0.0,
        };
        match certificate_search(&bin2(0.3), 4, 6, &b).unwrap_err() {
            Error::ScanBudgetExceeded {
                block_size,
                block_time,
                ..
            } => {
                assert!(block_time >= 1 && block_size >= 1);
                assert!(block_size * 2u64.pow(block_time) >= 10);
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn survival_bound_arithmetic() {
        let sb = survival_lower_bound(&bin2(0.9), 1.4, 2, 10, 40).unwrap();
        assert!((sb.c - 0.45).abs() < 1e-12);
        let expected: f64 = (0..=40).map(|i| 1.0 - 0.045 / 1.4f64.powi(i)).product();
        assert!((sb.partial_product - expected).abs() < 1e-12);
        assert!(sb.bound <= sb.partial_product);
        assert!(sb.bound > 0.8);
    }

    #[test]
    fn survival_bound_preconditions() {
        assert!(survival_lower_bound(&bin2(0.9), 1.4, 2, 0, 10).is_err());
        assert!(survival_lower_bound(&bin2(0.9), 1.9, 2, 10, 10).is_err());
        assert!(survival_lower_bound(&bin2(0.9), 1.4, 1, 10, 10).is_err());
        assert!(survival_lower_bound(&bin2(0.9), 0.9, 2, 10, 10).is_err());
    }

    #[test]
    fn thinning() {
        let law = bin2(0.75);
        let same = thin(&law, 1.0).unwrap();
        assert_eq!(same.distribution(), law.distribution());
        let dead = thin(&law, 0.0).unwrap();
        assert_eq!(dead.distribution(), &IntegerDistribution::delta(0));
        for p in [0.2, 0.5, 0.6, 0.66] {
            let t = thin(&law, p).unwrap();
            assert!((t.fertility() - 1.5 * p).abs() < 1e-12);
            assert!((t.fertility() - t.distribution().mean()).abs() < 1e-10);
            let s = extinction_probability(&t, 1e-13).unwrap();
            assert!((s - 1.0).abs() < 1e-4, "p={p} s={s}");
        }
        let t = thin(&law, 0.5).unwrap();
        assert!((t.distribution().pmf(0) - (0.5 + 0.5 * 0.0625)).abs() < 1e-15);
        assert!(thin(&law, 1.2).is_err());
    }

    #[test]
    fn markov_bound_value() {
        assert_eq!(markov_certificate_bound(&bin2(0.5), 7), 0.5);
        assert!((markov_certificate_bound(&bin2(0.4), 2) - 0.32).abs() < 1e-15);
    }
}
