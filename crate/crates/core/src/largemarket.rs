//! Many conditionally iid senders over a finite environment.
//!
//! Every sender holds one draw from `f(· | ω₀)`. Expectations over signal
//! profiles depend only on the signal counts, so exact evaluation enumerates
//! count vectors with multinomial weights in log space. Past a budget the
//! curves fall back to Monte Carlo stratified by ω₀.

use rand::distr::Distribution;
use rand::Rng;
use rand_distr::Binomial;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::simulate::{episode_rng, mean_se};

/// Largest number of count vectors enumerated per `n` by default.
pub const DEFAULT_BUDGET: u128 = 10_000_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IIDEnvironment {
    pub states: Vec<String>,
    pub prior: Vec<f64>,
    pub signals: Vec<String>,
    /// `likelihood[j][l] = f(signal l | ω₀ = j)`.
    pub likelihood: Vec<Vec<f64>>,
    pub actions: Vec<String>,
    /// `utility[a][j]`.
    pub utility: Vec<Vec<f64>>,
}

impl IIDEnvironment {
    pub fn new(
        states: Vec<String>,
        prior: Vec<f64>,
        signals: Vec<String>,
        likelihood: Vec<Vec<f64>>,
        actions: Vec<String>,
        utility: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let m = states.len();
        let invalid = |reason: String| Error::InvalidDistribution {
            what: "iid environment".into(),
            reason,
        };
        if m == 0 || prior.len() != m || likelihood.len() != m {
            return Err(invalid(format!(
                "{m} states, {} prior weights, {} likelihood rows",
                prior.len(),
                likelihood.len()
            )));
        }
        if prior.iter().any(|&p| !(p > 0.0 && p.is_finite()))
            || (prior.iter().sum::<f64>() - 1.0).abs() > 1e-12
        {
            return Err(invalid("prior must be positive and sum to 1".into()));
        }
        for (j, row) in likelihood.iter().enumerate() {
            if row.len() != signals.len() {
                return Err(invalid(format!(
                    "likelihood row {j} has {} entries",
                    row.len()
                )));
            }
            if row.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
                return Err(invalid(format!(
                    "likelihood row {j} must be strictly positive"
                )));
            }
            if (row.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
                return Err(invalid(format!("likelihood row {j} must sum to 1")));
            }
        }
        for j in 0..m {
            for k in j + 1..m {
                if likelihood[j] == likelihood[k] {
                    return Err(invalid(format!(
                        "states {j} and {k} have identical signal distributions"
                    )));
                }
            }
        }
        if actions.len() < m
            || utility.len() != actions.len()
            || utility.iter().any(|r| r.len() != m)
        {
            return Err(Error::InvalidArgument(format!(
                "need at least {m} actions with one utility per state"
            )));
        }
        for (j, own) in utility.iter().enumerate().take(m) {
            if utility
                .iter()
                .enumerate()
                .any(|(k, row)| k != j && row[j] >= own[j])
            {
                return Err(Error::InvalidArgument(format!(
                    "action {j} must be strictly best in state {j}"
                )));
            }
        }
        Ok(IIDEnvironment {
            states,
            prior,
            signals,
            likelihood,
            actions,
            utility,
        })
    }

    /// Uniform binary state, symmetric binary signals of the given
    /// accuracy, guess actions with utility 1 when right and an optional
    /// abstain action paying `abstain` in both states.
    pub fn binary(accuracy: f64, abstain: Option<f64>) -> Result<Self> {
        let s = |xs: &[&str]| xs.iter().map(|x| x.to_string()).collect::<Vec<_>>();
        let mut actions = s(&["guess-0", "guess-1"]);
        let mut utility = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        if let Some(a) = abstain {
            actions.push("abstain".into());
            utility.push(vec![a, a]);
        }
        IIDEnvironment::new(
            s(&["0", "1"]),
            vec![0.5, 0.5],
            s(&["0", "1"]),
            vec![
                vec![accuracy, 1.0 - accuracy],
                vec![1.0 - accuracy, accuracy],
            ],
            actions,
            utility,
        )
    }

    /// Accuracy 0.6 with abstention at 0.55.
    pub fn default_abstention() -> Self {
        IIDEnvironment::binary(0.6, Some(0.55)).expect("default environment is valid")
    }

    /// `Σⱼ μ(j) maxₐ u(a, j)`.
    pub fn full_info_value(&self) -> f64 {
        (0..self.states.len())
            .map(|j| {
                self.prior[j]
                    * self
                        .utility
                        .iter()
                        .map(|r| r[j])
                        .fold(f64::NEG_INFINITY, f64::max)
            })
            .sum()
    }

    /// Stopping value at the unnormalized state weights `w`.
    fn best(&self, w: &[f64]) -> f64 {
        self.utility
            .iter()
            .map(|r| r.iter().zip(w).map(|(u, x)| u * x).sum::<f64>())
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Number of signal count vectors for `n` draws from `l` signals.
pub fn multisets(n: usize, l: usize) -> u128 {
    // C(n + l − 1, l − 1), saturating.
    let k = l.saturating_sub(1) as u128;
    let mut acc: u128 = 1;
    for i in 1..=k {
        acc = match acc.checked_mul(n as u128 + i) {
            Some(x) => x / i,
            None => return u128::MAX,
        };
    }
    acc
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum CurveMode {
    Exact {
        budget: u128,
    },
    Sampled {
        samples: usize,
        seed: u64,
    },
    /// Exact within the budget, sampled beyond it.
    Auto {
        budget: u128,
        samples: usize,
        seed: u64,
    },
}

impl Default for CurveMode {
    fn default() -> Self {
        CurveMode::Auto {
            budget: DEFAULT_BUDGET,
            samples: 100_000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePoint {
    pub n: usize,
    pub value: f64,
    /// Zero for exact points.
    pub standard_error: f64,
    /// `n × value`.
    pub scaled: f64,
    pub exact: bool,
}

/// E[U(posterior after n signals)] by exact enumeration.
pub fn expected_stopping_value(env: &IIDEnvironment, n: usize, budget: u128) -> Result<f64> {
    let l = env.signals.len();
    let needed = multisets(n, l);
    if needed > budget {
        return Err(Error::BudgetExceeded { needed, budget });
    }
    let m = env.states.len();
    let ln_fact: Vec<f64> = std::iter::once(0.0)
        .chain((1..=n).scan(0.0, |acc, k| {
            *acc += (k as f64).ln();
            Some(*acc)
        }))
        .collect();
    let ln_f: Vec<Vec<f64>> = env
        .likelihood
        .iter()
        .map(|r| r.iter().map(|x| x.ln()).collect())
        .collect();
    let ln_prior: Vec<f64> = env.prior.iter().map(|x| x.ln()).collect();
    let mut total = 0.0;
    let mut counts = vec![0usize; l];
    let mut w = vec![0.0; m];
    let mut visit = |counts: &[usize]| {
        let ln_coef = ln_fact[n] - counts.iter().map(|&c| ln_fact[c]).sum::<f64>();
        for j in 0..m {
            let ll: f64 = counts
                .iter()
                .zip(&ln_f[j])
                .map(|(&c, lf)| c as f64 * lf)
                .sum();
            w[j] = (ln_coef + ln_prior[j] + ll).exp();
        }
        total += env.best(&w);
    };
    for_each_count(n, 0, &mut counts, &mut visit);
    Ok(total)
}

fn for_each_count(left: usize, k: usize, counts: &mut [usize], f: &mut impl FnMut(&[usize])) {
    if k == counts.len() - 1 {
        counts[k] = left;
        f(counts);
        return;
    }
    for c in 0..=left {
        counts[k] = c;
        for_each_count(left - c, k + 1, counts, f);
    }
}

/// One Monte Carlo draw of signal counts: `n − 1` signals plus the last.
fn draw_counts<R: Rng>(
    env: &IIDEnvironment,
    j: usize,
    n: usize,
    rng: &mut R,
) -> (Vec<usize>, usize) {
    let l = env.signals.len();
    let row = &env.likelihood[j];
    let mut counts = vec![0usize; l];
    let mut left = (n - 1) as u64;
    let mut mass = 1.0;
    for k in 0..l {
        if k == l - 1 || left == 0 {
            counts[k] = left as usize;
            break;
        }
        let p = (row[k] / mass).clamp(0.0, 1.0);
        let c = Binomial::new(left, p).expect("valid binomial").sample(rng);
        counts[k] = c as usize;
        left -= c;
        mass -= row[k];
    }
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last = l - 1;
    for (k, &p) in row.iter().enumerate() {
        acc += p;
        if u < acc {
            last = k;
            break;
        }
    }
    (counts, last)
}

/// Posterior stopping value given signal counts.
fn posterior_value(env: &IIDEnvironment, counts: &[usize]) -> f64 {
    let m = env.states.len();
    let ln: Vec<f64> = (0..m)
        .map(|j| {
            env.prior[j].ln()
                + counts
                    .iter()
                    .zip(&env.likelihood[j])
                    .map(|(&c, f)| c as f64 * f.ln())
                    .sum::<f64>()
        })
        .collect();
    let top = ln.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = ln.iter().map(|x| (x - top).exp()).collect();
    let z: f64 = w.iter().sum();
    env.best(&w) / z
}

/// Stratified estimate of `E[g(state, counts, last)]`; `samples` split
/// across ω₀ in proportion to the prior.
fn stratified<F>(env: &IIDEnvironment, n: usize, samples: usize, seed: u64, g: F) -> (f64, f64)
where
    F: Fn(&[usize], usize) -> f64 + Sync,
{
    let m = env.states.len();
    let mut mean = 0.0;
    let mut var = 0.0;
    for j in 0..m {
        let k = ((samples as f64 * env.prior[j]).round() as usize).max(2);
        // Disjoint streams per (n, stratum, draw).
        let base = ((n as u64) << 40) | ((j as u64) << 32);
        let xs: Vec<f64> = (0..k as u64)
            .into_par_iter()
            .map(|s| {
                let mut rng = episode_rng(seed, base | s);
                let (counts, last) = draw_counts(env, j, n, &mut rng);
                g(&counts, last)
            })
            .collect();
        let (mu, se) = mean_se(xs);
        mean += env.prior[j] * mu;
        var += (env.prior[j] * se).powi(2);
    }
    (mean, var.sqrt())
}

fn check_range(ns: &[usize]) -> Result<()> {
    if ns.contains(&0) {
        return Err(Error::InvalidArgument("curves start at n = 1".into()));
    }
    Ok(())
}

fn exact_fits(mode: CurveMode, env: &IIDEnvironment, n: usize) -> Result<Option<u128>> {
    let needed = multisets(n, env.signals.len());
    match mode {
        CurveMode::Exact { budget } if needed > budget => {
            Err(Error::BudgetExceeded { needed, budget })
        }
        CurveMode::Exact { budget } => Ok(Some(budget)),
        CurveMode::Sampled { .. } => Ok(None),
        CurveMode::Auto { budget, .. } => Ok((needed <= budget).then_some(budget)),
    }
}

fn sampling(mode: CurveMode) -> (usize, u64) {
    match mode {
        CurveMode::Sampled { samples, seed } | CurveMode::Auto { samples, seed, .. } => {
            (samples, seed)
        }
        CurveMode::Exact { .. } => (0, 0),
    }
}

/// `E[v̄(ω̃ₙ | ω₁ … ωₙ₋₁)] = G(n) − G(n−1)` with `G(m)` the expected
/// stopping value after `m` signals.
pub fn residual_value_curve(
    env: &IIDEnvironment,
    ns: &[usize],
    mode: CurveMode,
) -> Result<Vec<CurvePoint>> {
    check_range(ns)?;
    ns.par_iter()
        .map(|&n| {
            let (value, se, exact) = match exact_fits(mode, env, n)? {
                Some(budget) => (
                    expected_stopping_value(env, n, budget)?
                        - expected_stopping_value(env, n - 1, budget)?,
                    0.0,
                    true,
                ),
                None => {
                    let (samples, seed) = sampling(mode);
                    let (v, se) = stratified(env, n, samples, seed, |counts, last| {
                        let mut all = counts.to_vec();
                        all[last] += 1;
                        posterior_value(env, &all) - posterior_value(env, counts)
                    });
                    (v, se, false)
                }
            };
            Ok(CurvePoint {
                n,
                value,
                standard_error: se,
                scaled: n as f64 * value,
                exact,
            })
        })
        .collect()
}

/// `Σⱼ μ(j) maxₐ u(a, j) − G(n)`.
pub fn decision_error_curve(
    env: &IIDEnvironment,
    ns: &[usize],
    mode: CurveMode,
) -> Result<Vec<CurvePoint>> {
    check_range(ns)?;
    let full = env.full_info_value();
    ns.par_iter()
        .map(|&n| {
            let (g, se, exact) = match exact_fits(mode, env, n)? {
                Some(budget) => (expected_stopping_value(env, n, budget)?, 0.0, true),
                None => {
                    let (samples, seed) = sampling(mode);
                    let (v, se) = stratified(env, n, samples, seed, |counts, last| {
                        let mut all = counts.to_vec();
                        all[last] += 1;
                        posterior_value(env, &all)
                    });
                    (v, se, false)
                }
            };
            let value = full - g;
            Ok(CurvePoint {
                n,
                value,
                standard_error: se,
                scaled: n as f64 * value,
                exact,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExponentialFit {
    /// Fitted `v(n) ≈ κ ρⁿ⁻¹`.
    pub kappa: f64,
    pub rho: f64,
    pub r_squared: f64,
    /// Largest |ln v − fitted ln v| over the points used.
    pub max_log_deviation: f64,
    pub points_used: usize,
    pub decaying: bool,
}

/// Least squares of `ln v` on `n − 1` over the tail half of the curve.
pub fn fit_exponential_rate(curve: &[(usize, f64)]) -> Result<ExponentialFit> {
    if curve.len() < 4 {
        return Err(Error::DegenerateCurve(format!(
            "{} points, need at least 4",
            curve.len()
        )));
    }
    if let Some(&(n, v)) = curve.iter().find(|(_, v)| !(*v > 0.0 && v.is_finite())) {
        return Err(Error::DegenerateCurve(format!(
            "value {v} at n = {n} is not strictly positive"
        )));
    }
    let mut pts = curve.to_vec();
    pts.sort_by_key(|&(n, _)| n);
    let tail = &pts[pts.len() / 2..];
    let k = tail.len() as f64;
    let xs: Vec<f64> = tail.iter().map(|&(n, _)| n as f64 - 1.0).collect();
    let ys: Vec<f64> = tail.iter().map(|&(_, v)| v.ln()).collect();
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let residuals: Vec<f64> = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| y - intercept - slope * x)
        .collect();
    let ss_res: f64 = residuals.iter().map(|r| r * r).sum();
    // A flat curve is fitted perfectly by ρ = 1.
    let r_squared = if syy <= f64::EPSILON * k * my.abs().max(1.0) {
        1.0
    } else {
        1.0 - ss_res / syy
    };
    let rho = slope.exp();
    Ok(ExponentialFit {
        kappa: intercept.exp(),
        rho,
        r_squared,
        max_log_deviation: residuals.iter().fold(0.0, |a, r| a.max(r.abs())),
        points_used: tail.len(),
        decaying: rho < 1.0 - 1e-9,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn one_signal() {
        let env = IIDEnvironment::binary(0.6, None).unwrap();
        let r = residual_value_curve(&env, &[1, 2], CurveMode::Exact { budget: 100 }).unwrap();
        assert_abs_diff_eq!(r[0].value, 0.1, epsilon = 1e-12);
        assert_abs_diff_eq!(r[1].value, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn default_environment() {
        let env = IIDEnvironment::default_abstention();
        let r = residual_value_curve(&env, &[1, 2, 3], CurveMode::Exact { budget: 100 }).unwrap();
        assert_abs_diff_eq!(r[0].value, 0.05, epsilon = 1e-12);
        assert_abs_diff_eq!(r[1].value, 0.024, epsilon = 1e-12);
        assert_abs_diff_eq!(r[2].value, 0.024, epsilon = 1e-12);
        let e = decision_error_curve(&env, &[1], CurveMode::Exact { budget: 100 }).unwrap();
        assert_abs_diff_eq!(e[0].value, 0.4, epsilon = 1e-12);
    }

    #[test]
    fn invalid_environments() {
        assert!(IIDEnvironment::binary(0.5, Some(0.55)).is_err());
        assert!(IIDEnvironment::binary(1.0, None).is_err());
        assert!(IIDEnvironment::binary(0.6, Some(1.0)).is_err());
    }

    #[test]
    fn budget() {
        let env = IIDEnvironment::default_abstention();
        assert_eq!(multisets(10, 2), 11);
        assert_eq!(multisets(10, 3), 66);
        assert!(matches!(
            residual_value_curve(&env, &[50], CurveMode::Exact { budget: 10 }),
            Err(Error::BudgetExceeded {
                needed: 51,
                budget: 10
            })
        ));
        let auto = residual_value_curve(
            &env,
            &[50],
            CurveMode::Auto {
                budget: 10,
                samples: 1000,
                seed: 1,
            },
        )
        .unwrap();
        assert!(!auto[0].exact && auto[0].standard_error > 0.0);
    }

    #[test]
    fn fits() {
        let geo: Vec<(usize, f64)> = (1..=20)
            .map(|n| (n, 2.0 * 0.5f64.powi(n as i32 - 1)))
            .collect();
        let f = fit_exponential_rate(&geo).unwrap();
        assert_abs_diff_eq!(f.rho, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(f.kappa, 2.0, epsilon = 1e-9);
        assert_abs_diff_eq!(f.r_squared, 1.0, epsilon = 1e-12);
        let flat: Vec<(usize, f64)> = (1..=8).map(|n| (n, 0.3)).collect();
        let f = fit_exponential_rate(&flat).unwrap();
        assert_abs_diff_eq!(f.rho, 1.0, epsilon = 1e-12);
        assert!(!f.decaying);
        assert!(fit_exponential_rate(&[(1, 1.0), (2, 0.0), (3, 0.5), (4, 0.2)]).is_err());
        assert!(fit_exponential_rate(&[(1, 1.0), (2, 0.5), (3, 0.2)]).is_err());
    }
}
