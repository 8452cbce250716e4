//! Decision problems and the value-of-information calculus.
//!
//! Every expectation here is an exact sum over joint states. The identity
//! used throughout is
//!
//! ```text
//! E_{ω_T ~ μ}[ U(μ | ω_T) ] = Σ_{ω_T} max_a Σ_{ω ⊇ ω_T} μ(ω) u(a, ω)
//! ```
//!
//! so that revealing a set of components never requires normalizing a
//! posterior. [`RevelationLattice`] tabulates the inner maxima under the
//! prior for every subset of senders at once.

use serde::{Deserialize, Serialize};

use crate::environment::{Belief, Experiment, JointPrior, JointSpace, SenderSet};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
enum Table {
    /// `cols[s * A + a]` over joint states.
    Joint(Vec<f64>),
    /// `cols[v0 * A + a]` over payoff-state values, broadcast across the
    /// sender components.
    ByState {
        cols: Vec<f64>,
        stride: usize,
        len: usize,
    },
}

/// Finite action set with a utility table `u(a, ω)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionProblem {
    actions: Vec<String>,
    table: Table,
    num_states: usize,
}

impl DecisionProblem {
    /// `utility[a][s]` over joint states `s`.
    pub fn new(space: &JointSpace, actions: Vec<String>, utility: Vec<Vec<f64>>) -> Result<Self> {
        let n_a = actions.len();
        if n_a == 0 {
            return Err(Error::InvalidArgument(
                "decision problem has no actions".into(),
            ));
        }
        if utility.len() != n_a {
            return Err(Error::InvalidArgument(format!(
                "utility table has {} rows for {n_a} actions",
                utility.len()
            )));
        }
        let num_states = space.size();
        let mut cols = vec![0.0; num_states * n_a];
        for (a, row) in utility.iter().enumerate() {
            if row.len() != num_states {
                return Err(Error::InvalidArgument(format!(
                    "utility row of action {:?} has {} entries, expected {num_states}",
                    actions[a],
                    row.len()
                )));
            }
            for (s, &u) in row.iter().enumerate() {
                if !u.is_finite() {
                    return Err(Error::InvalidArgument(format!("utility {u} is not finite")));
                }
                cols[s * n_a + a] = u;
            }
        }
        Ok(DecisionProblem {
            actions,
            table: Table::Joint(cols),
            num_states,
        })
    }

    /// Utility given by a function of the action index and the decoded joint
    /// state (value index per component).
    pub fn from_fn<S: Into<String>>(
        space: &JointSpace,
        actions: impl IntoIterator<Item = S>,
        u: impl Fn(usize, &[usize]) -> f64,
    ) -> Result<Self> {
        let actions: Vec<String> = actions.into_iter().map(Into::into).collect();
        let rows = (0..actions.len())
            .map(|a| (0..space.size()).map(|s| u(a, &space.decode(s))).collect())
            .collect();
        DecisionProblem::new(space, actions, rows)
    }

    /// Utility that depends on the payoff state ω₀ only: `utility[a][v0]`.
    pub fn by_state(
        space: &JointSpace,
        actions: Vec<String>,
        utility: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let n_a = actions.len();
        if n_a == 0 {
            return Err(Error::InvalidArgument(
                "decision problem has no actions".into(),
            ));
        }
        if utility.len() != n_a {
            return Err(Error::InvalidArgument(format!(
                "utility table has {} rows for {n_a} actions",
                utility.len()
            )));
        }
        let len = space.components()[0].len();
        let mut cols = vec![0.0; len * n_a];
        for (a, row) in utility.iter().enumerate() {
            if row.len() != len {
                return Err(Error::InvalidArgument(format!(
                    "utility row of action {:?} has {} entries, expected {len}",
                    actions[a],
                    row.len()
                )));
            }
            for (v, &u) in row.iter().enumerate() {
                if !u.is_finite() {
                    return Err(Error::InvalidArgument(format!("utility {u} is not finite")));
                }
                cols[v * n_a + a] = u;
            }
        }
        Ok(DecisionProblem {
            actions,
            table: Table::ByState {
                cols,
                stride: space.stride(0),
                len,
            },
            num_states: space.size(),
        })
    }

    pub fn actions(&self) -> &[String] {
        &self.actions
    }

    pub fn num_actions(&self) -> usize {
        self.actions.len()
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    /// Utilities of all actions in joint state `s`.
    #[inline]
    pub fn column(&self, s: usize) -> &[f64] {
        let n_a = self.actions.len();
        match &self.table {
            Table::Joint(cols) => &cols[s * n_a..(s + 1) * n_a],
            Table::ByState { cols, stride, len } => {
                let v = (s / stride) % len;
                &cols[v * n_a..(v + 1) * n_a]
            }
        }
    }

    #[inline]
    pub fn utility(&self, action: usize, s: usize) -> f64 {
        self.column(s)[action]
    }

    /// `acc[a] += weight · u(a, s)`.
    #[inline]
    fn accumulate(&self, s: usize, weight: f64, acc: &mut [f64]) {
        for (o, u) in acc.iter_mut().zip(self.column(s)) {
            *o += weight * u;
        }
    }

    /// `E_μ[u(a, ω)]` for every action.
    pub fn expected_utilities(&self, belief: &Belief) -> Vec<f64> {
        let mut acc = vec![0.0; self.num_actions()];
        for (s, p) in belief.support() {
            self.accumulate(s, p, &mut acc);
        }
        acc
    }

    fn check(&self, belief: &Belief) {
        assert_eq!(
            belief.space().size(),
            self.num_states,
            "belief and decision problem live on different spaces"
        );
    }
}

/// Lowest-index argmax and its value.
pub(crate) fn argmax(values: &[f64]) -> (usize, f64) {
    let mut best = (0, values[0]);
    for (a, &v) in values.iter().enumerate().skip(1) {
        if v > best.1 {
            best = (a, v);
        }
    }
    best
}

#[inline]
fn max_of(values: &[f64]) -> f64 {
    values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// Stopping and full-information values at a belief.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueReport {
    pub stopping_value: f64,
    pub full_info_value: f64,
    pub optimal_action: usize,
    pub action_label: String,
}

/// U(μ), the full-information value Ū(μ), and the optimal action (ties
/// broken by lowest index).
pub fn stopping_utility(dp: &DecisionProblem, belief: &Belief) -> ValueReport {
    dp.check(belief);
    let (optimal_action, stopping_value) = argmax(&dp.expected_utilities(belief));
    ValueReport {
        stopping_value,
        full_info_value: full_info_utility(dp, belief),
        optimal_action,
        action_label: dp.actions[optimal_action].clone(),
    }
}

/// Ū(μ) = E_μ[max_a u(a, ω)].
pub fn full_info_utility(dp: &DecisionProblem, belief: &Belief) -> f64 {
    dp.check(belief);
    belief
        .support()
        .map(|(s, p)| p * max_of(dp.column(s)))
        .sum()
}

/// E_{ω_T ~ μ}[U(μ | ω_T)] for the senders in `revealed`.
pub fn revealed_stopping_value(dp: &DecisionProblem, belief: &Belief, revealed: SenderSet) -> f64 {
    dp.check(belief);
    let space = belief.space();
    let n_a = dp.num_actions();
    let keys = space.realizations(revealed);
    let mut acc = vec![0.0; keys * n_a];
    for (s, p) in belief.support() {
        let k = space.project(s, revealed);
        dp.accumulate(s, p, &mut acc[k * n_a..(k + 1) * n_a]);
    }
    acc.chunks(n_a)
        .filter(|c| c.iter().any(|x| *x != 0.0))
        .map(max_of)
        .sum()
}

/// v(λ | μ): expected gain in stopping utility from observing the
/// experiment's message, ignoring option value.
pub fn experiment_value(dp: &DecisionProblem, belief: &Belief, experiment: &Experiment) -> f64 {
    dp.check(belief);
    let space = belief.space();
    let n_a = dp.num_actions();
    let n_m = experiment.messages().len();
    let mut acc = vec![0.0; n_m * n_a];
    let mut mass = vec![0.0; n_m];
    let i = experiment.sender();
    for (s, p) in belief.support() {
        let v = space.value(s, i);
        for m in 0..n_m {
            let w = experiment.likelihood(v, m) * p;
            if w > 0.0 {
                mass[m] += w;
                dp.accumulate(s, w, &mut acc[m * n_a..(m + 1) * n_a]);
            }
        }
    }
    let with: f64 = (0..n_m)
        .filter(|&m| mass[m] > 0.0)
        .map(|m| max_of(&acc[m * n_a..(m + 1) * n_a]))
        .sum();
    with - stopping_utility(dp, belief).stopping_value
}

/// v̄(ω̃ᵢ | μ): value of learning sender `sender`'s component exactly.
pub fn full_reveal_value(dp: &DecisionProblem, belief: &Belief, sender: usize) -> Result<f64> {
    belief.space().component(sender)?;
    if sender == 0 {
        return Err(Error::UnknownComponent(0));
    }
    let u = max_of(&dp.expected_utilities(belief));
    Ok(revealed_stopping_value(dp, belief, SenderSet::empty().with(sender)) - u)
}

/// v̄(ω̃ᵢ | 𝝎_S): value of learning `sender`'s component after the prior has
/// been conditioned on `assignment`.
pub fn full_reveal_value_given(
    dp: &DecisionProblem,
    prior: &JointPrior,
    sender: usize,
    assignment: &[(usize, usize)],
) -> Result<f64> {
    let belief = prior.belief().condition(assignment)?;
    full_reveal_value(dp, &belief, sender)
}

/// E_{𝝎₋ᵢ ~ μ}[v̄(ω̃ᵢ | 𝝎₋ᵢ)]: expected residual value of sender `sender`
/// once every other sender has been revealed. Conditioning is on μ, which
/// coincides with conditioning the prior whenever μ carries no direct
/// information from `sender`.
pub fn expected_residual_value(
    dp: &DecisionProblem,
    belief: &Belief,
    sender: usize,
) -> Result<f64> {
    let space = belief.space();
    space.component(sender)?;
    if sender == 0 {
        return Err(Error::UnknownComponent(0));
    }
    let all = space.senders();
    Ok(revealed_stopping_value(dp, belief, all)
        - revealed_stopping_value(dp, belief, all.without(sender)))
}

/// f(S): ex-ante expected increase in stopping utility from learning the
/// components in `subset` exactly. f(∅) = 0.
pub fn coalition_value(dp: &DecisionProblem, prior: &JointPrior, subset: SenderSet) -> Result<f64> {
    if !subset.is_subset(prior.space().senders()) {
        return Err(Error::InvalidArgument(format!(
            "subset {subset} not within senders 1..={}",
            prior.num_senders()
        )));
    }
    if subset.is_empty() {
        return Ok(0.0);
    }
    let belief = prior.belief();
    let u = max_of(&dp.expected_utilities(&belief));
    Ok(revealed_stopping_value(dp, &belief, subset) - u)
}

/// Prior-weighted value tables for every subset of senders.
///
/// For a subset `T` and a realization code `k` of `T`,
/// `best(T)[k] = max_a Σ_{ω ⊇ k} μ⁰(ω) u(a, ω)` and `mass(T)[k]` is the
/// prior probability of the realization. Every quantity at a reachable
/// belief μ′(𝝎_S) follows by summing these tables over the extensions of
/// 𝝎_S and dividing by its probability.
#[derive(Debug, Clone)]
pub struct RevelationLattice {
    n: usize,
    radix: Vec<usize>,
    best: Vec<Vec<f64>>,
    mass: Vec<Vec<f64>>,
}

impl RevelationLattice {
    pub fn new(dp: &DecisionProblem, prior: &JointPrior) -> Result<Self> {
        let space = prior.space();
        let n = space.num_senders();
        if n > 20 {
            return Err(Error::SubsetSpaceTooLarge(n));
        }
        assert_eq!(dp.num_states(), space.size());
        let n_a = dp.num_actions();
        let all = space.senders();
        let keys_n = space.realizations(all);
        let mut sums = vec![0.0; keys_n * n_a];
        let mut mass_n = vec![0.0; keys_n];
        for (s, &p) in prior.mass().iter().enumerate() {
            if p > 0.0 {
                let k = space.project(s, all);
                mass_n[k] += p;
                dp.accumulate(s, p, &mut sums[k * n_a..(k + 1) * n_a]);
            }
        }
        let radix: Vec<usize> = std::iter::once(1)
            .chain((1..=n).map(|i| space.components()[i].len()))
            .collect();
        let mut lattice = RevelationLattice {
            n,
            radix,
            best: Vec::with_capacity(1 << n),
            mass: Vec::with_capacity(1 << n),
        };
        for t in SenderSet::subsets(n) {
            let keys = lattice.keys(t);
            let mut agg = vec![0.0; keys * n_a];
            let mut m = vec![0.0; keys];
            for k in 0..keys_n {
                if mass_n[k] == 0.0 {
                    continue;
                }
                let kt = lattice.subcode(all, t, k);
                m[kt] += mass_n[k];
                for (o, x) in agg[kt * n_a..(kt + 1) * n_a]
                    .iter_mut()
                    .zip(&sums[k * n_a..(k + 1) * n_a])
                {
                    *o += x;
                }
            }
            let best = (0..keys)
                .map(|k| {
                    if m[k] > 0.0 {
                        max_of(&agg[k * n_a..(k + 1) * n_a])
                    } else {
                        0.0
                    }
                })
                .collect();
            lattice.best.push(best);
            lattice.mass.push(m);
        }
        Ok(lattice)
    }

    pub fn num_senders(&self) -> usize {
        self.n
    }

    pub fn senders(&self) -> SenderSet {
        SenderSet::all(self.n)
    }

    /// Number of realization codes of `set`.
    pub fn keys(&self, set: SenderSet) -> usize {
        set.iter().map(|i| self.radix[i]).product()
    }

    #[inline]
    fn slot(set: SenderSet) -> usize {
        (set.bits() >> 1) as usize
    }

    pub fn best(&self, set: SenderSet) -> &[f64] {
        &self.best[Self::slot(set)]
    }

    pub fn mass(&self, set: SenderSet) -> &[f64] {
        &self.mass[Self::slot(set)]
    }

    /// Value index of `sender` in realization `code` of `set`.
    pub fn digit(&self, set: SenderSet, code: usize, sender: usize) -> usize {
        let mut code = code;
        for i in set.iter().collect::<Vec<_>>().into_iter().rev() {
            if i == sender {
                return code % self.radix[i];
            }
            code /= self.radix[i];
        }
        panic!("sender {sender} not in {set}")
    }

    /// Projects realization `code` of `from` onto the subset `to`.
    pub fn subcode(&self, from: SenderSet, to: SenderSet, code: usize) -> usize {
        debug_assert!(to.is_subset(from));
        let mut digits = [0usize; 64];
        let mut c = code;
        let senders: Vec<usize> = from.iter().collect();
        for &i in senders.iter().rev() {
            digits[i] = c % self.radix[i];
            c /= self.radix[i];
        }
        to.iter().fold(0, |acc, i| acc * self.radix[i] + digits[i])
    }

    /// Extends realization `code` of `set` by value `value` of `sender`.
    pub fn extend(&self, set: SenderSet, code: usize, sender: usize, value: usize) -> usize {
        let mut digits = [0usize; 64];
        let mut c = code;
        for i in set.iter().collect::<Vec<_>>().into_iter().rev() {
            digits[i] = c % self.radix[i];
            c /= self.radix[i];
        }
        digits[sender] = value;
        set.with(sender)
            .iter()
            .fold(0, |acc, i| acc * self.radix[i] + digits[i])
    }

    /// `Σ_{k ⊇ code} best(t)[k]` over the realizations of `t` extending
    /// realization `code` of `s`, for every code of `s` at once.
    pub fn aggregate(&self, t: SenderSet, s: SenderSet) -> Vec<f64> {
        let mut out = vec![0.0; self.keys(s)];
        for (k, &b) in self.best(t).iter().enumerate() {
            if b != 0.0 {
                out[self.subcode(t, s, k)] += b;
            }
        }
        out
    }

    /// Unconditional f(S) through the tables.
    pub fn coalition_value(&self, s: SenderSet) -> f64 {
        self.best(s).iter().sum::<f64>() - self.best(SenderSet::empty())[0]
    }
}
