//! Finite-support probability mass functions on the nonnegative integers.
//!
//! [`IntegerDistribution`] is stored densely over a contiguous window
//! `[offset, offset + len)`. Every exact computation in this crate (offspring
//! laws, their convolution powers, time-`T` laws of a chain) is expressed in
//! terms of it.
//!
//! Mass that is deliberately discarded while trimming negligible tails is
//! accumulated in `truncation_loss`, so every exact answer carries an explicit
//! error bar. [`IntegerDistribution::tail`] never includes that mass: a tail
//! probability computed here is a lower bound on the untruncated one, and the
//! gap is at most `truncation_loss`.

use rand::Rng;

use crate::error::{Error, Result};

/// Entries below this value are treated as underflow and dropped.
pub const UNDERFLOW_GUARD: f64 = 1e-300;

/// Default mass budget discarded per convolution.
pub const DEFAULT_MASS_BUDGET: f64 = 1e-15;

/// Tolerance on `total mass + truncation_loss` around 1.
pub const MASS_TOLERANCE: f64 = 1e-12;

/// Largest trial count for which binomial coefficients are formed directly.
const DIRECT_BINOMIAL_MAX_TRIALS: u64 = 900;

/// Probability mass function with finite support.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegerDistribution {
    offset: u64,
    probs: Vec<f64>,
    truncation_loss: f64,
}

impl IntegerDistribution {
    /// Point mass at `value`.
    pub fn delta(value: u64) -> Self {
        Self {
            offset: value,
            probs: vec![1.0],
            truncation_loss: 0.0,
        }
    }

    /// Builds a distribution from dense probabilities starting at `offset`.
    pub fn from_dense(offset: u64, probs: Vec<f64>) -> Result<Self> {
        Self::from_parts(offset, probs, 0.0)
    }

    /// Builds a distribution from dense probabilities and an already
    /// discarded mass.
    pub fn from_parts(offset: u64, probs: Vec<f64>, truncation_loss: f64) -> Result<Self> {
        if !(truncation_loss >= 0.0) {
            return Err(Error::Domain(format!(
                "truncation loss must be nonnegative, got {truncation_loss}"
            )));
        }
        if let Some(bad) = probs.iter().find(|p| !(**p >= 0.0) || !p.is_finite()) {
            return Err(Error::Domain(format!("invalid probability {bad}")));
        }
        let total: f64 = probs.iter().sum::<f64>() + truncation_loss;
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::Domain(format!(
                "mass plus truncation loss is {total}, expected 1"
            )));
        }
        let mut d = Self {
            offset,
            probs,
            truncation_loss,
        };
        d.strip_underflow();
        if d.probs.is_empty() {
            return Err(Error::Domain("empty support".into()));
        }
        Ok(d)
    }

    /// Trusted constructor for internal propagation code.
    pub(crate) fn from_parts_unchecked(offset: u64, probs: Vec<f64>, truncation_loss: f64) -> Self {
        let mut d = Self {
            offset,
            probs,
            truncation_loss,
        };
        d.strip_underflow();
        if d.probs.is_empty() {
            d.probs.push(0.0);
        }
        d
    }

    /// Builds a distribution from `(value, probability)` pairs.
    pub fn from_pairs<I>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (u64, f64)>,
    {
        let pairs: Vec<(u64, f64)> = pairs.into_iter().collect();
        let lo = pairs
            .iter()
            .map(|(v, _)| *v)
            .min()
            .ok_or_else(|| Error::Domain("empty support".into()))?;
        let hi = pairs.iter().map(|(v, _)| *v).max().unwrap_or(lo);
        let mut probs = vec![0.0; (hi - lo + 1) as usize];
        for (v, p) in pairs {
            if !(p >= 0.0) {
                return Err(Error::Domain(format!("invalid probability {p}")));
            }
            probs[(v - lo) as usize] += p;
        }
        Self::from_dense(lo, probs)
    }

    /// Law of the number of successes in `trials` independent Bernoulli(`p`)
    /// trials.
    pub fn binomial(trials: u64, p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Domain(format!(
                "success probability must lie in [0, 1], got {p}"
            )));
        }
        let (offset, probs) = binomial_pmf(trials, p);
        let mut d = Self {
            offset,
            probs,
            truncation_loss: 0.0,
        };
        d.strip_underflow();
        Ok(d)
    }

    /// Binomial law with negligible tails discarded into `truncation_loss`.
    pub(crate) fn binomial_trimmed(trials: u64, p: f64, budget: f64) -> Result<Self> {
        let mut d = Self::binomial(trials, p)?;
        d.trim(budget);
        Ok(d)
    }

    pub fn offset(&self) -> u64 {
        self.offset
    }

    /// Smallest value in the stored support.
    pub fn min_value(&self) -> u64 {
        self.offset
    }

    /// Largest value in the stored support.
    pub fn max_value(&self) -> u64 {
        self.offset + self.probs.len() as u64 - 1
    }

    /// Width of the stored support window.
    pub fn support_len(&self) -> usize {
        self.probs.len()
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probs
    }

    pub fn truncation_loss(&self) -> f64 {
        self.truncation_loss
    }

    pub fn pmf(&self, value: u64) -> f64 {
        if value < self.offset {
            return 0.0;
        }
        self.probs
            .get((value - self.offset) as usize)
            .copied()
            .unwrap_or(0.0)
    }

    /// `(value, probability)` pairs in increasing order of value.
    pub fn iter(&self) -> impl Iterator<Item = (u64, f64)> + '_ {
        self.probs
            .iter()
            .enumerate()
            .map(move |(i, p)| (self.offset + i as u64, *p))
    }

    pub fn total_mass(&self) -> f64 {
        self.probs.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.iter().map(|(v, p)| v as f64 * p).sum()
    }

    pub fn variance(&self) -> f64 {
        let mean = self.mean();
        self.iter()
            .map(|(v, p)| {
                let d = v as f64 - mean;
                d * d * p
            })
            .sum()
    }

    /// `P(X >= k)` over the retained mass.
    pub fn tail(&self, k: u64) -> f64 {
        if k <= self.offset {
            return self.total_mass();
        }
        let start = (k - self.offset) as usize;
        if start >= self.probs.len() {
            return 0.0;
        }
        self.probs[start..].iter().sum()
    }

    /// `P(X <= k)` over the retained mass.
    pub fn cdf(&self, k: u64) -> f64 {
        if k < self.offset {
            return 0.0;
        }
        let end = ((k - self.offset) as usize + 1).min(self.probs.len());
        self.probs[..end].iter().sum()
    }

    /// Sup-norm distance between two mass functions.
    pub fn sup_distance(&self, other: &Self) -> f64 {
        let lo = self.min_value().min(other.min_value());
        let hi = self.max_value().max(other.max_value());
        (lo..=hi)
            .map(|v| (self.pmf(v) - other.pmf(v)).abs())
            .fold(0.0, f64::max)
    }

    /// Law of the sum of independent draws, trimming at most
    /// [`DEFAULT_MASS_BUDGET`] of mass.
    pub fn convolve(&self, other: &Self) -> Self {
        self.convolve_with_budget(other, DEFAULT_MASS_BUDGET)
    }

    pub fn convolve_with_budget(&self, other: &Self, budget: f64) -> Self {
        let (short, long) = if self.probs.len() <= other.probs.len() {
            (self, other)
        } else {
            (other, self)
        };
        let mut out = vec![0.0; short.probs.len() + long.probs.len() - 1];
        for (i, &a) in short.probs.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            for (slot, &b) in out[i..].iter_mut().zip(&long.probs) {
                *slot += a * b;
            }
        }
        let mut d = Self {
            offset: self.offset + other.offset,
            probs: out,
            truncation_loss: self.truncation_loss + other.truncation_loss,
        };
        d.trim(budget);
        d
    }

    /// `k`-fold self-convolution by repeated squaring; `k = 0` yields the
    /// point mass at zero.
    pub fn convolve_power(&self, k: u64) -> Self {
        self.convolve_power_with_budget(k, DEFAULT_MASS_BUDGET)
    }

    pub fn convolve_power_with_budget(&self, mut k: u64, budget: f64) -> Self {
        let mut acc = Self::delta(0);
        let mut base = self.clone();
        while k > 0 {
            if k & 1 == 1 {
                acc = acc.convolve_with_budget(&base, budget);
            }
            k >>= 1;
            if k > 0 {
                base = base.convolve_with_budget(&base, budget);
            }
        }
        acc
    }

    /// Law of `f(X)` for a non-decreasing map `f`.
    pub fn map_monotone(&self, f: impl Fn(u64) -> u64) -> Self {
        let lo = f(self.min_value());
        let hi = f(self.max_value());
        let mut probs = vec![0.0; (hi - lo + 1) as usize];
        for (v, p) in self.iter() {
            probs[(f(v) - lo) as usize] += p;
        }
        let mut d = Self {
            offset: lo,
            probs,
            truncation_loss: self.truncation_loss,
        };
        d.strip_underflow();
        d
    }

    /// Discards at most `budget` of mass from the two ends of the support,
    /// smallest end entry first.
    pub fn trim(&mut self, budget: f64) {
        self.strip_underflow();
        let mut dropped = 0.0;
        let mut lo = 0;
        let mut hi = self.probs.len();
        while hi - lo > 1 {
            let (idx, p) = if self.probs[lo] <= self.probs[hi - 1] {
                (lo, self.probs[lo])
            } else {
                (hi - 1, self.probs[hi - 1])
            };
            if dropped + p > budget {
                break;
            }
            dropped += p;
            if idx == lo {
                lo += 1;
            } else {
                hi -= 1;
            }
        }
        if lo > 0 || hi < self.probs.len() {
            self.probs.truncate(hi);
            self.probs.drain(..lo);
            self.offset += lo as u64;
            self.truncation_loss += dropped;
        }
    }

    fn strip_underflow(&mut self) {
        let hi = self
            .probs
            .iter()
            .rposition(|p| *p >= UNDERFLOW_GUARD)
            .map_or(0, |i| i + 1);
        self.probs.truncate(hi);
        let lo = self
            .probs
            .iter()
            .position(|p| *p >= UNDERFLOW_GUARD)
            .unwrap_or(0);
        self.probs.drain(..lo);
        self.offset += lo as u64;
    }

    /// Draws one value; discarded mass is renormalized away.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        let u = rng.random::<f64>() * self.total_mass();
        let mut acc = 0.0;
        for (v, p) in self.iter() {
            acc += p;
            if u < acc {
                return v;
            }
        }
        self.max_value()
    }

    /// Precomputes a cumulative table for repeated draws.
    pub fn sampler(&self) -> CumulativeSampler {
        let mut cumulative = Vec::with_capacity(self.probs.len());
        let mut acc = 0.0;
        for p in &self.probs {
            acc += p;
            cumulative.push(acc);
        }
        CumulativeSampler {
            offset: self.offset,
            cumulative,
        }
    }
}

/// Inverse-CDF sampler backed by a cumulative table.
#[derive(Debug, Clone)]
pub struct CumulativeSampler {
    offset: u64,
    cumulative: Vec<f64>,
}

impl CumulativeSampler {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        let total = *self.cumulative.last().expect("nonempty support");
        let u = rng.random::<f64>() * total;
        let idx = self.cumulative.partition_point(|c| *c <= u);
        self.offset + idx.min(self.cumulative.len() - 1) as u64
    }
}

/// Dense binomial mass function over `0..=trials`.
/// Binomial pmf as `(offset, probs)`. Large trial counts are evaluated in log
/// space outward from the mode until entries fall below the underflow guard.
fn binomial_pmf(trials: u64, p: f64) -> (u64, Vec<f64>) {
    if p == 0.0 || trials == 0 {
        return (0, vec![1.0]);
    }
    if p == 1.0 {
        return (trials, vec![1.0]);
    }
    let q = 1.0 - p;
    if trials <= DIRECT_BINOMIAL_MAX_TRIALS {
        let n = trials as usize;
        let mut out = Vec::with_capacity(n + 1);
        let mut coeff = 1.0_f64;
        for k in 0..=n {
            out.push(coeff * p.powi(k as i32) * q.powi((n - k) as i32));
            coeff = coeff * (n - k) as f64 / (k + 1) as f64;
        }
        return (0, out);
    }
    let mode = (((trials + 1) as f64 * p).floor() as u64).min(trials);
    let at_mode = (ln_factorial(trials) - ln_factorial(mode) - ln_factorial(trials - mode)
        + mode as f64 * p.ln()
        + (trials - mode) as f64 * q.ln())
    .exp();
    let odds = p / q;
    let mut below = Vec::new();
    let (mut k, mut v) = (mode, at_mode);
    while k > 0 {
        v *= k as f64 / ((trials - k + 1) as f64 * odds);
        if v < UNDERFLOW_GUARD {
            break;
        }
        k -= 1;
        below.push(v);
    }
    let mut out: Vec<f64> = below.into_iter().rev().collect();
    let lo = mode - out.len() as u64;
    out.push(at_mode);
    let (mut k, mut v) = (mode, at_mode);
    while k < trials {
        v *= (trials - k) as f64 / (k + 1) as f64 * odds;
        if v < UNDERFLOW_GUARD {
            break;
        }
        k += 1;
        out.push(v);
    }
    // The anchor carries the cancellation error of the log factorials; the
    // window holds all but a sub-underflow sliver of the mass.
    let total: f64 = out.iter().sum();
    out.iter_mut().for_each(|v| *v /= total);
    (lo, out)
}

fn ln_factorial(n: u64) -> f64 {
    statrs::function::factorial::ln_factorial(n)
}
