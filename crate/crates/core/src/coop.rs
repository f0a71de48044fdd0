//! Cooperative two-species chain.
//!
//! From state `(x, y)` the next state has independent coordinates
//! `x' ~ Bin(2(x + y), q)` and `y' ~ Bin(2 min(x, y), p)`. Type 2 needs both
//! types present to reproduce, so once `z = min(x, y)` hits zero type 2 is
//! gone for good. Survival means `z` never hits zero.
//!
//! `h(p, q) = E^{(1,1)}[Z_1]` is the one-step expectation from `(1, 1)`;
//! `h > 1` certifies survival with block size and block time 1, and the
//! curve `h(p, q) = 1` bounds the region proved this way.

use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;

use crate::dist::IntegerDistribution;
use crate::error::{Error, Result};
use crate::galton_watson::Certificate;
use crate::rng::{binomial_inverse_cdf, cell_stream, sample_binomial, stream, StreamRng};
use crate::stats::{wilson_interval, Z99};

/// Default explosion threshold of survival trials.
pub const DEFAULT_EXPLOSION_THRESHOLD: u64 = 100_000_000;

/// Default number of Monte Carlo trials.
pub const DEFAULT_TRIALS: u64 = 1000;

/// Default bisection bracket width of [`critical_q`].
pub const DEFAULT_BISECTION_TOL: f64 = 1e-12;

/// Slack of the pointwise CDF comparison in [`domination_check`].
pub const DOMINATION_SLACK: f64 = 1e-12;

/// Slack of the comparison in [`grandpas_check`].
pub const GRANDPAS_SLACK: f64 = 1e-9;

/// Model parameters: `p` drives type 2, `q` drives type 1.
///
/// Both lie in the closed unit square; the degenerate edges are kept so that
/// `h` and full-grid sweeps can be evaluated there.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoopParams {
    p: f64,
    q: f64,
}

impl CoopParams {
    pub fn new(p: f64, q: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) || !(0.0..=1.0).contains(&q) {
            return Err(Error::Domain(format!(
                "parameters must lie in [0, 1], got p = {p}, q = {q}"
            )));
        }
        Ok(Self { p, q })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> f64 {
        self.q
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CoopState {
    pub x: u64,
    pub y: u64,
}

impl CoopState {
    pub fn new(x: u64, y: u64) -> Self {
        Self { x, y }
    }

    /// `min(x, y)`
    pub fn z(&self) -> u64 {
        self.x.min(self.y)
    }

    /// Trial counts `(2(x + y), 2 min(x, y))` of the two binomials.
    fn trials(&self) -> (u64, u64) {
        (2 * (self.x + self.y), 2 * self.z())
    }
}

/// One transition. Draws `x'` first, then `y'`.
pub fn coop_step<R: Rng + ?Sized>(state: CoopState, params: &CoopParams, rng: &mut R) -> CoopState {
    let (nx, ny) = state.trials();
    let x = sample_binomial(rng, nx, params.q);
    let y = sample_binomial(rng, ny, params.p);
    CoopState { x, y }
}

/// One transition by inverse-CDF sampling from the given uniforms.
///
/// Two chains fed the same uniforms stay ordered: if `state ≤ other` and
/// `params ≤ other_params` componentwise, the successors are ordered too.
pub fn coupled_step(state: CoopState, params: &CoopParams, u_x: f64, u_y: f64) -> CoopState {
    let (nx, ny) = state.trials();
    CoopState {
        x: binomial_inverse_cdf(nx, params.q, u_x),
        y: binomial_inverse_cdf(ny, params.p, u_y),
    }
}

/// `E[min(U, V)]` with `U ~ Bin(4, q)`, `V ~ Bin(2, p)`, by enumerating all
/// 64 outcomes of the six underlying Bernoulli trials.
pub fn h_exact(params: &CoopParams) -> f64 {
    let (p, q) = (params.p, params.q);
    let mut expectation = 0.0;
    for bits in 0u32..64 {
        let s = (bits & 0b11).count_ones() as i32;
        let t = (bits >> 2).count_ones() as i32;
        let weight = p.powi(s) * (1.0 - p).powi(2 - s) * q.powi(t) * (1.0 - q).powi(4 - t);
        expectation += f64::from(s.min(t)) * weight;
    }
    expectation
}

/// Closed form of `h`:
/// `4p²q⁴ − 12p²q³ + 12p²q² − 4p²q − 2pq⁴ + 8pq³ − 12pq² + 8pq`.
pub fn h_polynomial(params: &CoopParams) -> f64 {
    let (p, q) = (params.p, params.q);
    let (p2, q2) = (p * p, q * q);
    let (q3, q4) = (q2 * q, q2 * q2);
    4.0 * p2 * q4 - 12.0 * p2 * q3 + 12.0 * p2 * q2 - 4.0 * p2 * q - 2.0 * p * q4 + 8.0 * p * q3
        - 12.0 * p * q2
        + 8.0 * p * q
}

/// `E[min(x', y') | (x, y)]`, computed as `Σ_{k≥1} P(x' ≥ k) P(y' ≥ k)`.
pub fn expected_next_min(state: CoopState, params: &CoopParams) -> f64 {
    let (nx, ny) = state.trials();
    let u = IntegerDistribution::binomial(nx, params.q).expect("validated parameters");
    let v = IntegerDistribution::binomial(ny, params.p).expect("validated parameters");
    (1..=nx.min(ny)).map(|k| u.tail(k) * v.tail(k)).sum()
}

/// Exact law of `(X_T, Y_T)` over a finite set of states.
#[derive(Debug, Clone, PartialEq)]
pub struct JointLaw {
    /// Sorted by state.
    entries: Vec<(CoopState, f64)>,
    truncation_loss: f64,
}

impl JointLaw {
    pub fn delta(state: CoopState) -> Self {
        Self {
            entries: vec![(state, 1.0)],
            truncation_loss: 0.0,
        }
    }

    pub fn truncation_loss(&self) -> f64 {
        self.truncation_loss
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (CoopState, f64)> + '_ {
        self.entries.iter().copied()
    }

    pub fn pmf(&self, x: u64, y: u64) -> f64 {
        self.entries
            .binary_search_by(|(s, _)| s.cmp(&CoopState { x, y }))
            .map_or(0.0, |i| self.entries[i].1)
    }

    pub fn total_mass(&self) -> f64 {
        self.entries.iter().map(|(_, w)| w).sum()
    }

    pub fn expectation(&self, f: impl Fn(CoopState) -> f64) -> f64 {
        self.entries.iter().map(|(s, w)| w * f(*s)).sum()
    }

    /// Marginal law of the first coordinate.
    pub fn marginal_x(&self) -> IntegerDistribution {
        self.law_of(|s| s.x)
    }

    /// Law of `⌊min(X, Y) / N⌋`.
    pub fn renormalized_z_law(&self, block_size: u64) -> IntegerDistribution {
        self.law_of(|s| s.z() / block_size)
    }

    fn law_of(&self, f: impl Fn(CoopState) -> u64) -> IntegerDistribution {
        let mut acc: BTreeMap<u64, f64> = BTreeMap::new();
        for (s, w) in &self.entries {
            *acc.entry(f(*s)).or_insert(0.0) += w;
        }
        let lo = acc.keys().next().copied().unwrap_or(0);
        let hi = acc.keys().next_back().copied().unwrap_or(0);
        let mut probs = vec![0.0; (hi - lo + 1) as usize];
        for (v, w) in acc {
            probs[(v - lo) as usize] = w;
        }
        IntegerDistribution::from_parts_unchecked(lo, probs, self.truncation_loss)
    }
}

/// Limits on exact joint-law propagation.
#[derive(Debug, Clone, Copy)]
pub struct JointBudget {
    /// States with `x + y` above this are dropped into the truncation loss.
    pub max_total: u64,
    /// Largest number of steps allowed.
    pub max_steps: u32,
    /// Largest number of retained states.
    pub max_states: usize,
    /// Mass of the smallest entries that may be dropped per step.
    pub mass_budget: f64,
}

impl Default for JointBudget {
    fn default() -> Self {
        Self {
            max_total: 2048,
            max_steps: 6,
            max_states: 4_000_000,
            mass_budget: 1e-14,
        }
    }
}

fn propagate_joint(
    current: &JointLaw,
    params: &CoopParams,
    budget: &JointBudget,
    step: u32,
) -> Result<JointLaw> {
    // x' depends on the source only through s = x + y and y' only through
    // m = min(x, y); group the sources by (m, s) first.
    let mut grouped: BTreeMap<u64, BTreeMap<u64, f64>> = BTreeMap::new();
    for (state, w) in &current.entries {
        *grouped
            .entry(state.z())
            .or_default()
            .entry(state.x + state.y)
            .or_insert(0.0) += w;
    }
    let kernel_budget = budget.mass_budget * 1e-3;
    let mut x_kernels: BTreeMap<u64, IntegerDistribution> = BTreeMap::new();
    let mut loss = current.truncation_loss;

    let mut blocks: Vec<(IntegerDistribution, Vec<f64>, u64)> = Vec::new();
    let (mut x_hi, mut y_hi) = (0u64, 0u64);
    for (&m, by_total) in &grouped {
        let mut x_acc: Vec<f64> = Vec::new();
        for (&s, &w) in by_total {
            let kernel = x_kernels.entry(s).or_insert_with(|| {
                IntegerDistribution::binomial_trimmed(2 * s, params.q, kernel_budget)
                    .expect("validated parameters")
            });
            let end = kernel.max_value() as usize + 1;
            if x_acc.len() < end {
                x_acc.resize(end, 0.0);
            }
            let start = kernel.min_value() as usize;
            for (slot, p) in x_acc[start..end].iter_mut().zip(kernel.probabilities()) {
                *slot += w * p;
            }
            loss += w * kernel.truncation_loss();
        }
        let y_kernel = IntegerDistribution::binomial_trimmed(2 * m, params.p, kernel_budget)
            .expect("validated parameters");
        loss += y_kernel.truncation_loss() * x_acc.iter().sum::<f64>();
        x_hi = x_hi.max(x_acc.len() as u64);
        y_hi = y_hi.max(y_kernel.max_value() + 1);
        blocks.push((y_kernel, x_acc, m));
    }

    let width = y_hi as usize;
    let cells = (x_hi as usize).saturating_mul(width);
    if cells > budget.max_states.saturating_mul(16) {
        return Err(Error::BudgetExceeded {
            step,
            detail: format!("dense grid of {cells} cells"),
        });
    }
    let mut grid = vec![0.0; cells];
    for (y_kernel, x_acc, _) in &blocks {
        let y_lo = y_kernel.min_value() as usize;
        for (x, &wx) in x_acc.iter().enumerate() {
            if wx == 0.0 {
                continue;
            }
            let row = &mut grid[x * width + y_lo..x * width + y_lo + y_kernel.support_len()];
            for (slot, py) in row.iter_mut().zip(y_kernel.probabilities()) {
                *slot += wx * py;
            }
        }
    }

    let mut entries = Vec::new();
    for (idx, &w) in grid.iter().enumerate() {
        if w < crate::dist::UNDERFLOW_GUARD {
            continue;
        }
        let state = CoopState {
            x: (idx / width) as u64,
            y: (idx % width) as u64,
        };
        if state.x + state.y > budget.max_total {
            loss += w;
        } else {
            entries.push((state, w));
        }
    }

    // Drop the smallest entries while the per-step budget allows.
    let mut order: Vec<usize> = (0..entries.len()).collect();
    order.sort_by(|&a, &b| entries[a].1.total_cmp(&entries[b].1));
    let mut dropped = 0.0;
    let mut keep = vec![true; entries.len()];
    for i in order {
        let w = entries[i].1;
        if dropped + w > budget.mass_budget || entries.len() == 1 {
            break;
        }
        dropped += w;
        keep[i] = false;
    }
    loss += dropped;
    let entries: Vec<_> = entries
        .into_iter()
        .zip(keep)
        .filter_map(|(e, k)| k.then_some(e))
        .collect();

    if entries.len() > budget.max_states {
        return Err(Error::BudgetExceeded {
            step,
            detail: format!("{} states > cap {}", entries.len(), budget.max_states),
        });
    }
    Ok(JointLaw {
        entries,
        truncation_loss: loss,
    })
}

/// Exact law of `(X_T, Y_T)` from an arbitrary starting state.
pub fn exact_joint_law_from(
    start: CoopState,
    steps: u32,
    params: &CoopParams,
    budget: &JointBudget,
) -> Result<JointLaw> {
    if steps > budget.max_steps {
        return Err(Error::BudgetExceeded {
            step: budget.max_steps + 1,
            detail: format!("{steps} steps requested, cap {}", budget.max_steps),
        });
    }
    let mut law = JointLaw::delta(start);
    for step in 1..=steps {
        law = propagate_joint(&law, params, budget, step)?;
    }
    Ok(law)
}

/// Exact law of `(X_T, Y_T)` under `P^{(N,N)}`.
pub fn exact_joint_law(
    block_size: u64,
    steps: u32,
    params: &CoopParams,
    budget: &JointBudget,
) -> Result<JointLaw> {
    exact_joint_law_from(CoopState::new(block_size, block_size), steps, params, budget)
}

#[derive(Debug, Clone, Copy)]
pub enum EstimationMethod {
    Exact(JointBudget),
    MonteCarlo { trials: u64, seed: u64 },
}

/// Point value with a one-sided error bar.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RenormalizedEstimate {
    pub value: f64,
    /// Exact mode: truncation loss times the largest possible value `2^T`.
    /// Monte Carlo mode: 99% normal quantile times the standard error.
    pub error_bar: f64,
    pub standard_error: Option<f64>,
    pub truncation_loss: Option<f64>,
}

/// `E^{(N,N)}[⌊Z_T / N⌋]`.
///
/// Exact mode sums over retained mass only, which can only understate the
/// expectation. Monte Carlo trial `t` uses `mix(seed, N, T, t)`.
pub fn expected_renormalized_z(
    block_size: u64,
    steps: u32,
    params: &CoopParams,
    method: &EstimationMethod,
) -> Result<RenormalizedEstimate> {
    if block_size == 0 {
        return Err(Error::Precondition("block size must be at least 1".into()));
    }
    match method {
        EstimationMethod::Exact(budget) => {
            let law = exact_joint_law(block_size, steps, params, budget)?;
            let value = law.expectation(|s| (s.z() / block_size) as f64);
            let loss = law.truncation_loss();
            Ok(RenormalizedEstimate {
                value,
                error_bar: loss * 2f64.powi(steps as i32),
                standard_error: None,
                truncation_loss: Some(loss),
            })
        }
        EstimationMethod::MonteCarlo { trials, seed } => {
            if *trials < 2 {
                return Err(Error::Precondition("need at least 2 trials".into()));
            }
            let (sum, sum_sq) = (0..*trials)
                .into_par_iter()
                .map(|t| {
                    let mut rng = stream(*seed, &[block_size, u64::from(steps), t]);
                    let mut state = CoopState::new(block_size, block_size);
                    for _ in 0..steps {
                        if state.z() == 0 {
                            break;
                        }
                        state = coop_step(state, params, &mut rng);
                    }
                    let v = u128::from(state.z() / block_size);
                    (v, v * v)
                })
                .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
            let n = *trials as f64;
            let mean = sum as f64 / n;
            let var = ((sum_sq as f64 - n * mean * mean) / (n - 1.0)).max(0.0);
            let se = (var / n).sqrt();
            Ok(RenormalizedEstimate {
                value: mean,
                error_bar: Z99 * se,
                standard_error: Some(se),
                truncation_loss: None,
            })
        }
    }
}

/// First `(N, T)` (scanning `T`, then `N`) with
/// `E^{(N,N)}[⌊Z_T / N⌋] - error_bar > 1`.
pub fn coop_certificate_search(
    params: &CoopParams,
    n_max: u64,
    t_max: u32,
    method: &EstimationMethod,
) -> Result<Option<Certificate>> {
    if n_max == 0 || t_max == 0 {
        return Err(Error::Precondition("scan bounds must be at least 1".into()));
    }
    for t in 1..=t_max {
        for n in 1..=n_max {
            let est = expected_renormalized_z(n, t, params, method).map_err(|e| {
                Error::ScanBudgetExceeded {
                    block_size: n,
                    block_time: t,
                    source: Box::new(e),
                }
            })?;
            if est.value - est.error_bar > 1.0 {
                return Ok(Certificate::new(n, t, est.value, 1.0));
            }
        }
    }
    Ok(None)
}

/// Monte Carlo estimate of survival from `(1, 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurvivalEstimate {
    pub successes: u64,
    pub trials: u64,
    pub estimate: f64,
    pub ci99_low: f64,
    pub ci99_high: f64,
    pub explosion_threshold: u64,
    pub seed: u64,
}

impl SurvivalEstimate {
    pub fn from_counts(successes: u64, trials: u64, explosion_threshold: u64, seed: u64) -> Self {
        let (ci99_low, ci99_high) = wilson_interval(successes, trials, Z99);
        Self {
            successes,
            trials,
            estimate: successes as f64 / trials as f64,
            ci99_low,
            ci99_high,
            explosion_threshold,
            seed,
        }
    }
}

/// One survival trial from `(1, 1)`: runs until a type dies (failure) or a
/// count reaches `threshold` with both types alive (success).
pub fn survival_trial<R: Rng + ?Sized>(params: &CoopParams, threshold: u64, rng: &mut R) -> bool {
    let mut s = CoopState::new(1, 1);
    while s.x > 0 && s.y > 0 && s.x < threshold && s.y < threshold {
        s = coop_step(s, params, rng);
    }
    s.x > 0 && s.y > 0
}

/// [`survival_trial`] driven by two uniforms per step through
/// [`coupled_step`]; monotone in `(p, q)` for a fixed stream.
pub fn coupled_survival_trial<R: Rng + ?Sized>(
    params: &CoopParams,
    threshold: u64,
    rng: &mut R,
) -> bool {
    let mut s = CoopState::new(1, 1);
    while s.x > 0 && s.y > 0 && s.x < threshold && s.y < threshold {
        let (u_x, u_y) = (rng.random::<f64>(), rng.random::<f64>());
        s = coupled_step(s, params, u_x, u_y);
    }
    s.x > 0 && s.y > 0
}

/// Survival frequency from `(1, 1)` over `trials` parallel trials; trial `t`
/// uses `cell_stream(seed, 0, 0, t)`.
///
/// Reaching the threshold stands in for survival, so this estimates
/// `P(τ > first time a count reaches the threshold)`, an upward-biased proxy
/// for `P(τ = ∞)`.
pub fn coop_survival_mc(
    params: &CoopParams,
    trials: u64,
    explosion_threshold: u64,
    seed: u64,
) -> Result<SurvivalEstimate> {
    survival_counts(params, trials, explosion_threshold, seed, 0, 0, false)
}

pub(crate) fn survival_counts(
    params: &CoopParams,
    trials: u64,
    explosion_threshold: u64,
    seed: u64,
    p_index: u64,
    q_index: u64,
    coupled: bool,
) -> Result<SurvivalEstimate> {
    if trials == 0 {
        return Err(Error::Precondition("need at least one trial".into()));
    }
    if explosion_threshold < 2 {
        return Err(Error::Precondition("explosion threshold must be at least 2".into()));
    }
    let run = |t: u64| -> u64 {
        let mut rng: StreamRng = cell_stream(seed, p_index, q_index, t);
        let ok = if coupled {
            coupled_survival_trial(params, explosion_threshold, &mut rng)
        } else {
            survival_trial(params, explosion_threshold, &mut rng)
        };
        u64::from(ok)
    };
    let successes: u64 = (0..trials).into_par_iter().map(run).sum();
    Ok(SurvivalEstimate::from_counts(
        successes,
        trials,
        explosion_threshold,
        seed,
    ))
}

/// Root of `q ↦ h(p, q) = 1` found by bisection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalPoint {
    pub p: f64,
    pub q: f64,
    /// Width of the final bracket.
    pub bracket: f64,
    /// `|h(p, q) - 1|`
    pub residual: f64,
}

/// Bisects `h_polynomial(p, ·) = 1` on `[0, 1]` until the bracket is no wider
/// than `tol`, returning the last midpoint.
///
/// `h(p, 0) = 0` and `h(p, 1) = 2p`, so a crossing exists exactly when
/// `p > 1/2`.
pub fn critical_q(p: f64, tol: f64) -> Result<CriticalPoint> {
    if !(tol > 0.0) {
        return Err(Error::Domain(format!("tolerance must be positive, got {tol}")));
    }
    let h_at_one = h_polynomial(&CoopParams::new(p, 1.0)?);
    if h_at_one <= 1.0 {
        return Err(Error::NoCrossing { p, h_at_one });
    }
    let (mut lo, mut hi, mut mid) = (0.0f64, 1.0f64, 0.5f64);
    while hi - lo > tol {
        mid = 0.5 * (lo + hi);
        if h_polynomial(&CoopParams { p, q: mid }) < 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(CriticalPoint {
        p,
        q: mid,
        bracket: hi - lo,
        residual: (h_polynomial(&CoopParams { p, q: mid }) - 1.0).abs(),
    })
}

/// Critical points for each `p`, skipping values with no crossing.
pub fn critical_curve(p_values: impl IntoIterator<Item = f64>, tol: f64) -> Vec<CriticalPoint> {
    p_values
        .into_iter()
        .filter_map(|p| critical_q(p, tol).ok())
        .collect()
}

/// One-step super-additivity: the convolution of the transition laws from
/// `s1` and `s2` is dominated by the transition law from `s1 + s2`.
///
/// First coordinates share the trial count `2(x + x' + y + y')`; second
/// coordinates are compared by pointwise CDF with slack
/// [`DOMINATION_SLACK`].
pub fn domination_check(s1: CoopState, s2: CoopState, params: &CoopParams) -> bool {
    let sum = CoopState::new(s1.x + s2.x, s1.y + s2.y);
    let first_equal = s1.trials().0 + s2.trials().0 == sum.trials().0;
    let small = IntegerDistribution::binomial(s1.trials().1 + s2.trials().1, params.p)
        .expect("validated parameters");
    let large =
        IntegerDistribution::binomial(sum.trials().1, params.p).expect("validated parameters");
    let hi = small.max_value().max(large.max_value());
    first_equal && (0..=hi).all(|k| small.cdf(k) + DOMINATION_SLACK >= large.cdf(k))
}

/// Both sides of the comparison
/// `P^{(x,y)}(Z_T >= kN) >= γ^{*a}([k, ∞))`, `a = min(⌊x/N⌋, ⌊y/N⌋)`,
/// `γ` the law of `⌊Z_T / N⌋` under `P^{(N,N)}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrandpasSides {
    pub lhs: f64,
    pub rhs: f64,
    pub copies: u64,
}

impl GrandpasSides {
    pub fn holds(&self) -> bool {
        self.lhs >= self.rhs - GRANDPAS_SLACK
    }
}

pub fn grandpas_sides(
    start: CoopState,
    k: u64,
    block_size: u64,
    steps: u32,
    params: &CoopParams,
    budget: &JointBudget,
) -> Result<GrandpasSides> {
    if block_size == 0 || steps == 0 {
        return Err(Error::Precondition("N and T must be at least 1".into()));
    }
    let from_start = exact_joint_law_from(start, steps, params, budget)?;
    let lhs: f64 = from_start
        .iter()
        .filter(|(s, _)| s.z() >= k * block_size)
        .map(|(_, w)| w)
        .sum();
    let copies = (start.x / block_size).min(start.y / block_size);
    let gamma = exact_joint_law(block_size, steps, params, budget)?.renormalized_z_law(block_size);
    let rhs = gamma.convolve_power(copies).tail(k);
    Ok(GrandpasSides { lhs, rhs, copies })
}

pub fn grandpas_check(
    x: u64,
    y: u64,
    k: u64,
    block_size: u64,
    steps: u32,
    params: &CoopParams,
) -> Result<bool> {
    let sides = grandpas_sides(
        CoopState::new(x, y),
        k,
        block_size,
        steps,
        params,
        &JointBudget::default(),
    )?;
    Ok(sides.holds())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::trial_stream;

    fn params(p: f64, q: f64) -> CoopParams {
        CoopParams::new(p, q).unwrap()
    }

    #[test]
    fn params_validation() {
        assert!(CoopParams::new(1.1, 0.5).is_err());
        assert!(CoopParams::new(0.5, -0.1).is_err());
        assert!(CoopParams::new(0.0, 1.0).is_ok());
    }

    #[test]
    fn step_absorbs_type_two() {
        let mut rng = trial_stream(1, 0);
        let pr = params(0.9, 0.9);
        for k in 0..20 {
            assert_eq!(coop_step(CoopState::new(0, k), &pr, &mut rng).y, 0);
            assert_eq!(coop_step(CoopState::new(k, 0), &pr, &mut rng).y, 0);
        }
    }

    #[test]
    fn step_degenerate_parameters() {
        let mut rng = trial_stream(1, 1);
        let s = coop_step(CoopState::new(1, 1), &params(1.0, 1.0), &mut rng);
        assert_eq!(s, CoopState::new(4, 2));
    }

    #[test]
    fn step_min_mean_matches_h() {
        let pr = params(0.9, 0.9);
        let mut rng = trial_stream(2, 0);
        let n = 1_000_000u64;
        let (mut sum, mut sum_sq) = (0.0, 0.0);
        for _ in 0..n {
            let z = coop_step(CoopState::new(1, 1), &pr, &mut rng).z() as f64;
            sum += z;
            sum_sq += z * z;
        }
        let mean = sum / n as f64;
        let var = sum_sq / n as f64 - mean * mean;
        let sigma = (var / n as f64).sqrt();
        assert!((mean - 1.796904).abs() < 4.0 * sigma, "{mean}");
    }

    #[test]
    fn h_values() {
        assert!((h_exact(&params(1.0, 1.0)) - 2.0).abs() < 1e-15);
        assert_eq!(h_polynomial(&params(1.0, 1.0)), 2.0);
        for p in [0.0, 0.3, 1.0] {
            assert_eq!(h_exact(&params(p, 0.0)), 0.0);
        }
        for q in [0.0, 0.4, 1.0] {
            assert_eq!(h_polynomial(&params(0.0, q)), 0.0);
        }
        assert!((h_exact(&params(0.9, 0.9)) - 1.796904).abs() < 1e-9);
        assert!((h_polynomial(&params(0.9, 0.9)) - 1.796904).abs() < 1e-9);
    }

    #[test]
    fn h_matches_tail_sum_route() {
        for (p, q) in [(0.2, 0.7), (0.9, 0.9), (0.55, 0.35)] {
            let pr = params(p, q);
            assert!((expected_next_min(CoopState::new(1, 1), &pr) - h_exact(&pr)).abs() < 1e-14);
        }
    }

    #[test]
    fn h_on_top_edge_is_two_p() {
        for p in [0.1, 0.5, 0.75] {
            assert!((h_polynomial(&params(p, 1.0)) - 2.0 * p).abs() < 1e-15);
        }
    }

    #[test]
    fn joint_law_small_cases() {
        let b = JointBudget::default();
        let pr = params(0.3, 0.6);
        let law = exact_joint_law(3, 0, &pr, &b).unwrap();
        assert_eq!(law, JointLaw::delta(CoopState::new(3, 3)));
        let law = exact_joint_law(1, 1, &params(1.0, 1.0), &b).unwrap();
        assert_eq!(law.len(), 1);
        assert_eq!(law.pmf(4, 2), 1.0);
        let law = exact_joint_law(1, 1, &pr, &b).unwrap();
        assert!((law.pmf(0, 0) - 0.4f64.powi(4) * 0.7f64.powi(2)).abs() < 1e-15);
        assert!((law.total_mass() + law.truncation_loss() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn joint_law_marginal_is_binomial() {
        let b = JointBudget::default();
        for (x, y) in [(1, 1), (2, 5), (4, 0)] {
            let pr = params(0.45, 0.7);
            let law = exact_joint_law_from(CoopState::new(x, y), 1, &pr, &b).unwrap();
            let expect = IntegerDistribution::binomial(2 * (x + y), 0.7).unwrap();
            assert!(law.marginal_x().sup_distance(&expect) < 1e-12);
        }
    }

    #[test]
    fn joint_law_absorption() {
        let b = JointBudget::default();
        for start in [CoopState::new(0, 4), CoopState::new(3, 0)] {
            let law = exact_joint_law_from(start, 1, &params(0.8, 0.6), &b).unwrap();
            assert!(law.iter().all(|(s, _)| s.y == 0));
        }
    }

    #[test]
    fn joint_law_step_cap() {
        let b = JointBudget::default();
        let err = exact_joint_law(1, 7, &params(0.5, 0.5), &b).unwrap_err();
        assert!(err.is_budget());
    }

    #[test]
    fn joint_law_state_cap() {
        let b = JointBudget {
            max_states: 10,
            ..JointBudget::default()
        };
        let err = exact_joint_law(2, 3, &params(0.5, 0.5), &b).unwrap_err();
        assert!(matches!(err, Error::BudgetExceeded { .. }));
    }

    #[test]
    fn joint_law_total_cap_moves_mass_to_loss() {
        let b = JointBudget {
            max_total: 10,
            ..JointBudget::default()
        };
        let law = exact_joint_law(1, 3, &params(0.9, 0.9), &b).unwrap();
        assert!(law.truncation_loss() > 0.01);
        assert!(law.iter().all(|(s, _)| s.x + s.y <= 10));
        assert!((law.total_mass() + law.truncation_loss() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn renormalized_z_examples() {
        let exact = EstimationMethod::Exact(JointBudget::default());
        for (p, q) in [(0.3, 0.8), (0.9, 0.9)] {
            let pr = params(p, q);
            let e = expected_renormalized_z(1, 1, &pr, &exact).unwrap();
            assert!((e.value - h_exact(&pr)).abs() < 1e-12);
        }
        let e = expected_renormalized_z(1, 1, &params(0.9, 0.9), &exact).unwrap();
        assert!((e.value - 1.796904).abs() < 1e-9);
        let e = expected_renormalized_z(1, 2, &params(1.0, 1.0), &exact).unwrap();
        assert_eq!(e.value, 4.0);
        assert!(expected_renormalized_z(0, 2, &params(1.0, 1.0), &exact).is_err());
    }

    #[test]
    fn renormalized_z_monte_carlo_agrees_with_exact() {
        let pr = params(0.8, 0.7);
        let exact = expected_renormalized_z(2, 2, &pr, &EstimationMethod::Exact(JointBudget::default()))
            .unwrap();
        let mc = expected_renormalized_z(
            2,
            2,
            &pr,
            &EstimationMethod::MonteCarlo {
                trials: 200_000,
                seed: 5,
            },
        )
        .unwrap();
        let se = mc.standard_error.unwrap();
        assert!((mc.value - exact.value).abs() < 4.0 * se, "{} vs {}", mc.value, exact.value);
    }

    #[test]
    fn certificate_examples() {
        let exact = EstimationMethod::Exact(JointBudget::default());
        let c = coop_certificate_search(&params(0.9, 0.9), 3, 3, &exact).unwrap().unwrap();
        assert_eq!((c.block_size(), c.block_time()), (1, 1));
        assert!((c.value() - 1.796904).abs() < 1e-9);
        assert_eq!(c.threshold(), 1.0);
        for q in [0.3, 0.95] {
            assert!(coop_certificate_search(&params(0.4, q), 3, 3, &exact).unwrap().is_none());
        }
        let c = coop_certificate_search(&params(1.0, 1.0), 2, 2, &exact).unwrap().unwrap();
        assert_eq!((c.block_size(), c.block_time(), c.value()), (1, 1, 2.0));
    }

    #[test]
    fn survival_mc_degenerate_and_errors() {
        let e = coop_survival_mc(&params(1.0, 1.0), 50, 1_000, 1).unwrap();
        assert_eq!(e.estimate, 1.0);
        assert_eq!(e.ci99_high, 1.0);
        assert!(coop_survival_mc(&params(0.5, 0.5), 0, 1_000, 1).is_err());
        assert!(coop_survival_mc(&params(0.5, 0.5), 10, 1, 1).is_err());
    }

    #[test]
    fn survival_mc_reproducible() {
        let a = coop_survival_mc(&params(0.8, 0.7), 500, 10_000, 42).unwrap();
        let b = coop_survival_mc(&params(0.8, 0.7), 500, 10_000, 42).unwrap();
        assert_eq!(a, b);
        assert!(a.ci99_low <= a.estimate && a.estimate <= a.ci99_high);
    }

    #[test]
    fn one_step_tail_agrees_with_simulation() {
        let pr = params(0.8, 0.8);
        let law = exact_joint_law(1, 1, &pr, &JointBudget::default()).unwrap();
        let exact: f64 = law.iter().filter(|(s, _)| s.z() >= 1).map(|(_, w)| w).sum();
        let mut rng = trial_stream(13, 0);
        let n = 200_000;
        let hits = (0..n)
            .filter(|_| coop_step(CoopState::new(1, 1), &pr, &mut rng).z() >= 1)
            .count() as f64;
        let freq = hits / n as f64;
        let sigma = (exact * (1.0 - exact) / n as f64).sqrt();
        assert!((freq - exact).abs() < 4.0 * sigma);
    }

    #[test]
    fn critical_q_values() {
        let c = critical_q(1.0, DEFAULT_BISECTION_TOL).unwrap();
        assert!((c.q - 0.266_385_252_162_986_75).abs() < 1e-11, "{}", c.q);
        let q = c.q;
        assert!((2.0 * q.powi(4) - 4.0 * q.powi(3) + 4.0 * q - 1.0).abs() < 1e-9);
        for p in [0.6, 0.7, 0.8, 0.9, 1.0] {
            let c = critical_q(p, DEFAULT_BISECTION_TOL).unwrap();
            assert!(c.residual < 1e-9);
            assert!(c.bracket <= 1e-12);
        }
        // h(0.5, 1) = 1 exactly: no crossing strictly inside.
        assert!(matches!(
            critical_q(0.5, 1e-12),
            Err(Error::NoCrossing { .. })
        ));
        assert!(critical_q(0.3, 1e-12).is_err());
        assert!(critical_q(0.8, 0.0).is_err());
    }

    #[test]
    fn domination_examples() {
        let pr = params(0.3, 0.5);
        assert!(domination_check(CoopState::new(1, 2), CoopState::new(2, 1), &pr));
        assert!(domination_check(CoopState::new(1, 1), CoopState::new(1, 1), &pr));
    }

    #[test]
    fn grandpas_examples() {
        let pr = params(0.7, 0.7);
        let b = JointBudget::default();
        for n in [1, 2] {
            let s = grandpas_sides(CoopState::new(n, n), 1, n, 1, &pr, &b).unwrap();
            assert!((s.lhs - s.rhs).abs() < 1e-12);
            let s = grandpas_sides(CoopState::new(n, n), 0, n, 2, &pr, &b).unwrap();
            assert!((s.lhs - 1.0).abs() < 1e-9 && (s.rhs - 1.0).abs() < 1e-9);
            assert!(grandpas_check(2 * n, 2 * n, 2, n, 1, &pr).unwrap());
        }
    }
}
