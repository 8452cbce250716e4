//! Checks of the structural conditions behind the equilibrium constructions:
//! information worth at least one visit, the substitutes inequality, and
//! M♮-concavity of the coalition value.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decision::{
    expected_residual_value, revealed_stopping_value, stopping_utility, DecisionProblem,
    RevelationLattice,
};
use crate::environment::{
    message_distribution, no_direct_info, update, Experiment, JointPrior, JointSpace, SenderSet,
};
use crate::error::{Error, Result};

/// Absolute tolerance of every inequality check.
pub const CHECK_TOL: f64 = 1e-10;

/// At most this many witnesses are kept per report.
pub const MAX_WITNESSES: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub sender: Option<usize>,
    pub context: String,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub name: String,
    pub holds: bool,
    pub witnesses: Vec<Witness>,
    /// Minimum slack over all checked instances, clamped at 0 when the
    /// condition holds within tolerance.
    pub margin: f64,
    pub checked: usize,
    pub violations: usize,
}

impl ConditionReport {
    fn new(name: &str) -> Self {
        ConditionReport {
            name: name.into(),
            holds: true,
            witnesses: Vec::new(),
            margin: f64::INFINITY,
            checked: 0,
            violations: 0,
        }
    }

    /// Records one checked instance and its slack.
    fn record(&mut self, slack: f64, violated: bool, witness: impl FnOnce() -> Witness) {
        self.checked += 1;
        self.margin = self.margin.min(slack);
        if violated {
            self.violations += 1;
            self.holds = false;
            if self.witnesses.len() < MAX_WITNESSES {
                self.witnesses.push(witness());
            }
        }
    }

    fn finish(mut self) -> Self {
        if self.checked == 0 {
            self.margin = 0.0;
        }
        if self.holds && self.margin < 0.0 {
            self.margin = 0.0;
        }
        self
    }
}

pub(crate) fn describe(space: &JointSpace, set: SenderSet, code: usize) -> String {
    let parts: Vec<String> = space
        .decode_realization(set, code)
        .into_iter()
        .map(|(i, v)| format!("ω{i}={}", space.components()[i].values()[v]))
        .collect();
    format!("({})", parts.join(", "))
}

/// Assumption 2 (Assumption 1 when there is one sender): `c < v̄(ω̃ᵢ | 𝝎₋ᵢ)`
/// for every sender and every realization of the others in the support.
pub fn check_assumption2(
    dp: &DecisionProblem,
    prior: &JointPrior,
    cost: f64,
) -> Result<ConditionReport> {
    if cost.is_nan() || cost <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "attention cost {cost} must be positive"
        )));
    }
    let lattice = RevelationLattice::new(dp, prior)?;
    let space = prior.space();
    let all = lattice.senders();
    let mut report = ConditionReport::new("assumption2");
    for i in all.iter() {
        let others = all.without(i);
        let agg = lattice.aggregate(all, others);
        let best = lattice.best(others);
        for (k, &m) in lattice.mass(others).iter().enumerate() {
            if m <= 0.0 {
                continue;
            }
            let residual = (agg[k] - best[k]) / m;
            report.record(residual - cost, residual <= cost, || Witness {
                sender: Some(i),
                context: format!("residual value given {}", describe(space, others, k)),
                lhs: cost,
                rhs: residual,
            });
        }
    }
    Ok(report.finish())
}

/// Substitutes check split into the exhaustive layer over exact-revelation
/// beliefs and the sampled layer over randomly garbled beliefs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubstitutesReport {
    pub exact: ConditionReport,
    pub sampled: ConditionReport,
    /// Sampled beliefs that failed the no-direct-information test and were
    /// therefore not checked.
    pub rejected_samples: usize,
    pub seed: u64,
}

impl SubstitutesReport {
    pub fn holds(&self) -> bool {
        self.exact.holds && self.sampled.holds
    }

    /// Both layers folded into one report.
    pub fn combined(&self) -> ConditionReport {
        let mut witnesses = self.exact.witnesses.clone();
        witnesses.extend(self.sampled.witnesses.iter().cloned());
        witnesses.truncate(MAX_WITNESSES);
        ConditionReport {
            name: "substitutes".into(),
            holds: self.holds(),
            witnesses,
            margin: self.exact.margin.min(self.sampled.margin),
            checked: self.exact.checked + self.sampled.checked,
            violations: self.exact.violations + self.sampled.violations,
        }
    }
}

/// Verifies `v̄(ω̃ᵢ | μ) ≥ E_{𝝎₋ᵢ ~ μ}[v̄(ω̃ᵢ | 𝝎₋ᵢ)]`.
///
/// The exact layer covers every belief μ′(𝝎_S) with `i ∉ S`. The sampled
/// layer draws `samples` beliefs by running one to three symmetric-channel
/// garblings of senders other than `i` from a random exact-revelation
/// belief, keeping only beliefs without direct information from `i`.
pub fn check_substitutes(
    dp: &DecisionProblem,
    prior: &JointPrior,
    samples: usize,
    seed: u64,
) -> Result<SubstitutesReport> {
    let lattice = RevelationLattice::new(dp, prior)?;
    let space = prior.space();
    let all = lattice.senders();

    let mut exact = ConditionReport::new("substitutes/exact");
    for i in all.iter() {
        let pool = all.without(i);
        for s in SenderSet::subsets(lattice.num_senders()).filter(|s| s.is_subset(pool)) {
            let with_i = lattice.aggregate(s.with(i), s);
            let full = lattice.aggregate(all, s);
            let without_i = lattice.aggregate(pool, s);
            let here = lattice.best(s);
            for (k, &m) in lattice.mass(s).iter().enumerate() {
                if m <= 0.0 {
                    continue;
                }
                let lhs = (with_i[k] - here[k]) / m;
                let rhs = (full[k] - without_i[k]) / m;
                exact.record(lhs - rhs, lhs - rhs < -CHECK_TOL, || Witness {
                    sender: Some(i),
                    context: format!("belief after revealing {s} = {}", describe(space, s, k)),
                    lhs,
                    rhs,
                });
            }
        }
    }

    let mut sampled = ConditionReport::new("substitutes/sampled");
    let mut rejected = 0;
    let n = lattice.num_senders();
    if n >= 2 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..samples {
            let i = rng.random_range(1..=n);
            let pool = all.without(i);
            let revealed: SenderSet = pool.iter().filter(|_| rng.random_bool(0.5)).collect();
            let state = draw_state(prior.mass(), &mut rng);
            let assignment: Vec<(usize, usize)> = revealed
                .iter()
                .map(|j| (j, space.value(state, j)))
                .collect();
            let mut belief = prior.belief().condition(&assignment)?;
            let rounds = rng.random_range(1..=3);
            let mut steps = Vec::with_capacity(rounds);
            for _ in 0..rounds {
                let others: Vec<usize> = pool.iter().collect();
                let j = others[rng.random_range(0..others.len())];
                let flip: f64 = rng.random();
                let garble = Experiment::symmetric_channel(space, j, flip)?;
                let dist = message_distribution(&belief, &garble);
                let m = draw_state(&dist, &mut rng);
                belief = update(&belief, &garble, m)?;
                steps.push(format!("ω{j} flip {flip:.3} → {}", garble.messages()[m]));
            }
            if !no_direct_info(&belief, prior, i) {
                rejected += 1;
                continue;
            }
            let u = stopping_utility(dp, &belief).stopping_value;
            let lhs = revealed_stopping_value(dp, &belief, SenderSet::empty().with(i)) - u;
            let rhs = expected_residual_value(dp, &belief, i)?;
            sampled.record(lhs - rhs, lhs - rhs < -CHECK_TOL, || Witness {
                sender: Some(i),
                context: format!(
                    "revealed {revealed} = {}, garbled [{}]",
                    describe(space, revealed, space.project(state, revealed)),
                    steps.join("; ")
                ),
                lhs,
                rhs,
            });
        }
    }

    Ok(SubstitutesReport {
        exact: exact.finish(),
        sampled: sampled.finish(),
        rejected_samples: rejected,
        seed,
    })
}

/// Index drawn from a probability vector.
pub(crate) fn draw_state<R: Rng + ?Sized>(mass: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last = 0;
    for (k, &p) in mass.iter().enumerate() {
        if p > 0.0 {
            acc += p;
            last = k;
            if u < acc {
                return k;
            }
        }
    }
    last
}

/// Exhaustive M♮-concavity check of the coalition value f over all
/// `(S, T, s)` with `s ∈ S \ T`.
pub fn check_mnat_concave(dp: &DecisionProblem, prior: &JointPrior) -> Result<ConditionReport> {
    let n = prior.num_senders();
    if n > 20 {
        return Err(Error::SubsetSpaceTooLarge(n));
    }
    let lattice = RevelationLattice::new(dp, prior)?;
    let f: Vec<f64> = SenderSet::subsets(n)
        .map(|s| lattice.coalition_value(s))
        .collect();
    Ok(mnat_report(n, &f))
}

/// M♮-concavity of a set function given as a table over `SenderSet::subsets(n)`.
pub fn mnat_report(n: usize, f: &[f64]) -> ConditionReport {
    let value = |s: SenderSet| f[(s.bits() >> 1) as usize];
    let sets: Vec<SenderSet> = SenderSet::subsets(n).collect();
    let partial: Vec<ConditionReport> = sets
        .par_iter()
        .map(|&s_set| {
            let mut report = ConditionReport::new("mnat");
            for &t_set in &sets {
                let lhs = value(s_set) + value(t_set);
                for s in s_set.difference(t_set).iter() {
                    let mut rhs = value(s_set.without(s)) + value(t_set.with(s));
                    for t in t_set.difference(s_set).iter() {
                        rhs = rhs
                            .max(value(s_set.without(s).with(t)) + value(t_set.with(s).without(t)));
                    }
                    report.record(rhs - lhs, rhs - lhs < -CHECK_TOL, || Witness {
                        sender: Some(s),
                        context: format!("S={s_set} T={t_set} s={s}"),
                        lhs,
                        rhs,
                    });
                }
            }
            report
        })
        .collect();
    let mut report = ConditionReport::new("mnat");
    for p in partial {
        report.checked += p.checked;
        report.violations += p.violations;
        report.holds &= p.holds;
        report.margin = report.margin.min(p.margin);
        for w in p.witnesses {
            if report.witnesses.len() < MAX_WITNESSES {
                report.witnesses.push(w);
            }
        }
    }
    report.finish()
}
