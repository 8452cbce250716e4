//! Closed forms for the Gaussian-quadratic environment.
//!
//! `ω₀ ~ N(0, 1/p₀)`, sender components `ωᵢ ~ N(ω₀, 1/pᵢ)` independent given
//! `ω₀`, and `u(a, ω₀) = −(a − ω₀)²`, so the stopping value of a belief is
//! minus its posterior variance. Rates are reported in the continuous-time
//! reading and flagged when they exceed one.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::simulate::{episode_rng, mean_se};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GaussianScenario {
    pub p0: f64,
    pub precisions: Vec<f64>,
    pub cost: f64,
}

impl GaussianScenario {
    pub fn new(p0: f64, precisions: Vec<f64>, cost: f64) -> Result<Self> {
        positive("p0", p0)?;
        for &p in &precisions {
            positive("sender precision", p)?;
        }
        positive("cost", cost)?;
        Ok(GaussianScenario {
            p0,
            precisions,
            cost,
        })
    }

    /// Total precision `P = p₀ + Σ pᵢ`.
    pub fn total_precision(&self) -> f64 {
        self.p0 + self.precisions.iter().sum::<f64>()
    }
}

fn positive(what: &str, x: f64) -> Result<()> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "{what} must be positive and finite, got {x}"
        )))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GaussianRates {
    pub rates: Vec<f64>,
    /// Expected visits `1/λ*ᵢ`.
    pub visits: Vec<f64>,
    /// Whether every rate is a valid per-round probability.
    pub discrete_feasible: bool,
}

/// `λ*ᵢ = c·P(P − pᵢ)/pᵢ`.
pub fn gaussian_rates(s: &GaussianScenario) -> GaussianRates {
    let big_p = s.total_precision();
    let rates: Vec<f64> = s
        .precisions
        .iter()
        .map(|&p| s.cost * big_p * (big_p - p) / p)
        .collect();
    GaussianRates {
        visits: rates.iter().map(|r| r.recip()).collect(),
        discrete_feasible: rates.iter().all(|&r| r < 1.0),
        rates,
    }
}

/// `−(1/P)(1 + Σ pᵢ/(P − pᵢ))`.
pub fn gaussian_receiver_payoff(s: &GaussianScenario) -> f64 {
    let big_p = s.total_precision();
    -(1.0 + s.precisions.iter().map(|&p| p / (big_p - p)).sum::<f64>()) / big_p
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SymmetryReport {
    pub symmetric_allocation: Vec<f64>,
    pub symmetric_payoff: f64,
    pub best_allocation: Vec<f64>,
    pub best_payoff: f64,
    pub allocations_checked: usize,
    /// No grid allocation beats the symmetric one by more than 1e-12.
    pub symmetric_is_max: bool,
}

/// One allocation of sender precision and its receiver payoff.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AllocationPoint {
    pub allocation: Vec<f64>,
    pub payoff: f64,
}

/// Every allocation of total sender precision `q` among `n` senders in
/// multiples of `step`, each sender getting a positive share, in
/// lexicographic order of the shares.
pub fn allocation_grid(p0: f64, q: f64, n: usize, step: f64) -> Result<Vec<AllocationPoint>> {
    positive("p0", p0)?;
    positive("total precision", q)?;
    positive("grid step", step)?;
    if n == 0 {
        return Err(Error::InvalidArgument(
            "at least one sender is required".into(),
        ));
    }
    let units = (q / step).round() as usize;
    if units < n || ((units as f64) * step - q).abs() > 1e-9 * q.max(1.0) {
        return Err(Error::InvalidArgument(format!(
            "step {step} must divide total precision {q} into at least {n} parts"
        )));
    }
    let mut grid = Vec::new();
    let mut parts = vec![0usize; n];
    compositions(units, n, 0, &mut parts, &mut |c| {
        let allocation: Vec<f64> = c.iter().map(|&k| k as f64 * q / units as f64).collect();
        grid.push(AllocationPoint {
            payoff: allocation_payoff(p0, &allocation),
            allocation,
        });
    });
    Ok(grid)
}

fn allocation_payoff(p0: f64, allocation: &[f64]) -> f64 {
    gaussian_receiver_payoff(&GaussianScenario {
        p0,
        precisions: allocation.to_vec(),
        cost: 1.0,
    })
}

/// Grid search over allocations of total sender precision `q` among `n`
/// senders in multiples of `step`, every sender getting a positive share.
pub fn symmetry_gap(p0: f64, q: f64, n: usize, step: f64) -> Result<SymmetryReport> {
    let grid = allocation_grid(p0, q, n, step)?;
    let symmetric = vec![q / n as f64; n];
    let symmetric_payoff = allocation_payoff(p0, &symmetric);
    let mut best = (symmetric_payoff, symmetric.clone());
    for point in &grid {
        if point.payoff > best.0 {
            best = (point.payoff, point.allocation.clone());
        }
    }
    Ok(SymmetryReport {
        symmetric_is_max: best.0 <= symmetric_payoff + 1e-12,
        symmetric_allocation: symmetric,
        symmetric_payoff,
        best_allocation: best.1,
        best_payoff: best.0,
        allocations_checked: grid.len(),
    })
}

/// Calls `f` with every composition of `total` into `parts.len() - k`
/// positive integers, written into `parts[k..]`.
fn compositions(
    total: usize,
    n: usize,
    k: usize,
    parts: &mut [usize],
    f: &mut impl FnMut(&[usize]),
) {
    if k == n - 1 {
        parts[k] = total;
        f(parts);
        return;
    }
    for first in 1..=total - (n - 1 - k) {
        parts[k] = first;
        compositions(total - first, n, k + 1, parts, f);
    }
}

/// Two senders whose components mix a private and a common signal with
/// weight α on the common one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CorrelatedScenario {
    pub p0: f64,
    pub p1: f64,
    pub p2: f64,
    pub pc: f64,
    pub alpha: f64,
    pub cost: f64,
}

impl CorrelatedScenario {
    pub fn new(p0: f64, p1: f64, p2: f64, pc: f64, alpha: f64, cost: f64) -> Result<Self> {
        for (what, x) in [
            ("p0", p0),
            ("p1", p1),
            ("p2", p2),
            ("pc", pc),
            ("cost", cost),
        ] {
            positive(what, x)?;
        }
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::InvalidArgument(format!(
                "alpha {alpha} outside [0, 1]"
            )));
        }
        Ok(CorrelatedScenario {
            p0,
            p1,
            p2,
            pc,
            alpha,
            cost,
        })
    }
}

/// Precision at which full correlation starts to beat independence.
pub fn correlation_threshold(p0: f64, p1: f64, p2: f64) -> f64 {
    let s = 2.0 * p0 + p1 + p2;
    p1 * p2 * s / ((p0 + p1).powi(2) + p2 * s)
}

/// Stopping values of the correlated environment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CorrelatedValues {
    pub prior: f64,
    pub sender1: f64,
    pub sender2: f64,
    pub both: f64,
}

pub fn correlated_values(cs: &CorrelatedScenario) -> CorrelatedValues {
    let a2 = cs.alpha * cs.alpha;
    let b2 = (1.0 - cs.alpha).powi(2);
    let one = |p: f64| {
        let num = a2 * p + b2 * cs.pc;
        -num / (cs.p0 * num + (a2 + b2) * p * cs.pc)
    };
    CorrelatedValues {
        prior: -1.0 / cs.p0,
        sender1: one(cs.p1),
        sender2: one(cs.p2),
        both: one(cs.p1 + cs.p2),
    }
}

/// Receiver equilibrium payoff `U(ω₁,ω₂) − v̄(ω̃₁|ω₂) − v̄(ω̃₂|ω₁)`, which
/// simplifies to `U(ω₁) + U(ω₂) − U(ω₁,ω₂)`.
pub fn payoff_at_alpha(cs: &CorrelatedScenario) -> f64 {
    let v = correlated_values(cs);
    let r1 = v.both - v.sender2;
    let r2 = v.both - v.sender1;
    v.both - r1 - r2
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BinaryActionRate {
    pub rate: f64,
    pub reveal_value: f64,
}

/// Two actions ±1 against `ω₁ ~ N(0, 1/p)`: the value of seeing ω₁ is
/// `E|ω₁| = √(2/(πp))`.
pub fn binary_action_rate(p: f64, cost: f64) -> Result<BinaryActionRate> {
    positive("precision", p)?;
    positive("cost", cost)?;
    let reveal_value = (2.0 / (std::f64::consts::PI * p)).sqrt();
    Ok(BinaryActionRate {
        rate: cost / reveal_value,
        reveal_value,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BridgeSchedule {
    /// `T* = 1/(pc)`.
    pub horizon: f64,
    pub times: Vec<f64>,
    /// Posterior variance `1/p − ct`.
    pub variance: Vec<f64>,
}

/// Posterior variance along the bridge at `points` evenly spaced times.
pub fn bridge_schedule(p: f64, cost: f64, points: usize) -> Result<BridgeSchedule> {
    positive("precision", p)?;
    positive("cost", cost)?;
    if points < 2 {
        return Err(Error::InvalidArgument(
            "a schedule needs at least two points".into(),
        ));
    }
    let horizon = 1.0 / (p * cost);
    let times: Vec<f64> = (0..points)
        .map(|k| horizon * k as f64 / (points - 1) as f64)
        .collect();
    let variance = times.iter().map(|&t| bridge_variance(p, cost, t)).collect();
    Ok(BridgeSchedule {
        horizon,
        times,
        variance,
    })
}

pub fn bridge_variance(p: f64, cost: f64, t: f64) -> f64 {
    (1.0 / p - cost * t).max(0.0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BridgeRow {
    pub time: f64,
    pub analytic: f64,
    pub empirical: f64,
    pub standard_error: f64,
}

impl BridgeRow {
    pub fn within(&self, k: f64) -> bool {
        (self.empirical - self.analytic).abs() <= k * self.standard_error + 1e-12
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BridgeReport {
    pub samples: usize,
    pub steps: usize,
    pub seed: u64,
    pub rows: Vec<BridgeRow>,
    pub passed: bool,
}

pub const BRIDGE_STEPS: usize = 1000;
pub const BRIDGE_CHECKS: usize = 11;

/// Simulates bridge paths from 0 to ω₁ and compares the squared error of
/// the posterior mean `E[ω₁ | X_t] = X_t` with the analytic variance.
pub fn bridge_mc_check(p: f64, cost: f64, samples: usize, seed: u64) -> Result<BridgeReport> {
    let schedule = bridge_schedule(p, cost, BRIDGE_CHECKS)?;
    if samples < 2 {
        return Err(Error::InvalidArgument(
            "at least two sample paths are required".into(),
        ));
    }
    let horizon = schedule.horizon;
    let steps = BRIDGE_STEPS;
    let every = steps / (BRIDGE_CHECKS - 1);
    let dt = horizon / steps as f64;
    let errors: Vec<Vec<f64>> = (0..samples as u64)
        .into_par_iter()
        .map(|k| {
            let mut rng = episode_rng(seed, k);
            let z: f64 = rng.sample(StandardNormal);
            let omega = z / p.sqrt();
            let mut x = 0.0;
            let mut out = Vec::with_capacity(BRIDGE_CHECKS);
            out.push(omega * omega);
            for step in 0..steps {
                let t = step as f64 * dt;
                let left = horizon - t;
                // Exact Brownian-bridge transition over one step.
                let mean = x + (omega - x) * dt / left;
                let var = cost * dt * (left - dt) / left;
                let z: f64 = rng.sample(StandardNormal);
                x = mean + var.max(0.0).sqrt() * z;
                if (step + 1) % every == 0 {
                    out.push((omega - x).powi(2));
                }
            }
            out
        })
        .collect();
    let rows: Vec<BridgeRow> = (0..BRIDGE_CHECKS)
        .map(|j| {
            let (empirical, standard_error) = mean_se(errors.iter().map(|e| e[j]));
            BridgeRow {
                time: schedule.times[j],
                analytic: schedule.variance[j],
                empirical,
                standard_error,
            }
        })
        .collect();
    Ok(BridgeReport {
        samples,
        steps,
        seed,
        passed: rows.iter().all(|r| r.within(3.0)),
        rows,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LargeNRow {
    pub n: usize,
    /// `−1/(p₀ + np)`.
    pub decision_value: f64,
    /// `n·p / ((p₀ + (n−1)p)(p₀ + np))`, the expected attention bill.
    pub attention_cost: f64,
    pub receiver_payoff: f64,
}

/// Symmetric senders of precision `p`: information and attention terms of
/// the receiver payoff as `n` grows. The attention cost does not depend on
/// `c` because rates scale with it.
pub fn large_n_gaussian(
    p0: f64,
    p: f64,
    ns: impl IntoIterator<Item = usize>,
) -> Result<Vec<LargeNRow>> {
    positive("p0", p0)?;
    positive("precision", p)?;
    Ok(ns
        .into_iter()
        .map(|n| {
            let nf = n as f64;
            let big_p = p0 + nf * p;
            let decision_value = -1.0 / big_p;
            let attention_cost = nf * p / ((big_p - p) * big_p);
            LargeNRow {
                n,
                decision_value,
                attention_cost,
                receiver_payoff: decision_value - attention_cost,
            }
        })
        .collect())
}
