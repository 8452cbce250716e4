//! All-or-nothing equilibrium objects.
//!
//! Along the equilibrium path every consultation either reveals a sender's
//! component exactly or nothing at all, so the receiver's belief is always
//! μ′(𝝎_S) for some revealed set `S` and realization 𝝎_S. [`StateGraph`]
//! materializes this finite set together with the value quantities needed
//! at each state; [`EquilibriumProfile`] adds the equilibrium rates.

use std::collections::HashMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::conditions::{
    check_assumption2, check_substitutes, describe, ConditionReport, SubstitutesReport,
};
use crate::decision::{DecisionProblem, RevelationLattice};
use crate::environment::{ComponentSpace, JointPrior, JointSpace, SenderSet};
use crate::error::{Error, Result};
use crate::scenario::InformationEnvironment;

/// Residual values at or below this are treated as zero.
const VALUE_EPS: f64 = 1e-12;

/// One reachable belief μ′(𝝎_S).
#[derive(Debug, Clone, PartialEq)]
pub struct RevealedState {
    pub id: usize,
    pub revealed: SenderSet,
    /// Realization code of `revealed` (see [`JointSpace::project`]).
    pub code: usize,
    pub probability: f64,
    /// U(μ′(𝝎_S)).
    pub stopping_value: f64,
    /// E[U(μ′(𝝎_N)) | 𝝎_S]: the value of learning every component.
    pub full_value: f64,
    /// `residual[i] = E_{𝝎₋ᵢ}[v̄(ω̃ᵢ | 𝝎₋ᵢ) | 𝝎_S]` for unrevealed senders.
    pub residual: Vec<Option<f64>>,
    /// `reveal_value[i] = v̄(ω̃ᵢ | 𝝎_S)` for unrevealed senders.
    pub reveal_value: Vec<Option<f64>>,
}

/// The finite set of exact-revelation beliefs with positive probability.
#[derive(Debug, Clone)]
pub struct StateGraph {
    space: Arc<JointSpace>,
    lattice: RevelationLattice,
    states: Vec<RevealedState>,
    index: HashMap<(SenderSet, usize), usize>,
}

impl StateGraph {
    pub fn new(dp: &DecisionProblem, prior: &JointPrior) -> Result<Self> {
        let lattice = RevelationLattice::new(dp, prior)?;
        let n = lattice.num_senders();
        let all = lattice.senders();
        let mut states = Vec::new();
        let mut index = HashMap::new();
        let mut subsets: Vec<SenderSet> = SenderSet::subsets(n).collect();
        // Fewer revealed components first, so the root gets id 0.
        subsets.sort_by_key(|s| (s.len(), s.bits()));
        for s in subsets {
            let mass = lattice.mass(s);
            let best = lattice.best(s);
            let full = lattice.aggregate(all, s);
            let mut without = vec![None; n + 1];
            let mut with = vec![None; n + 1];
            for i in all.difference(s).iter() {
                without[i] = Some(lattice.aggregate(all.without(i), s));
                with[i] = Some(lattice.aggregate(s.with(i), s));
            }
            for (code, &m) in mass.iter().enumerate() {
                if m <= 0.0 {
                    continue;
                }
                let residual = (0..=n)
                    .map(|i| {
                        without[i]
                            .as_ref()
                            .map(|w| ((full[code] - w[code]) / m).max(0.0))
                    })
                    .collect();
                let reveal_value = (0..=n)
                    .map(|i| {
                        with[i]
                            .as_ref()
                            .map(|w| ((w[code] - best[code]) / m).max(0.0))
                    })
                    .collect();
                let id = states.len();
                index.insert((s, code), id);
                states.push(RevealedState {
                    id,
                    revealed: s,
                    code,
                    probability: m,
                    stopping_value: best[code] / m,
                    full_value: full[code] / m,
                    residual,
                    reveal_value,
                });
            }
        }
        Ok(StateGraph {
            space: prior.shared_space(),
            lattice,
            states,
            index,
        })
    }

    pub fn space(&self) -> &JointSpace {
        &self.space
    }

    pub fn num_senders(&self) -> usize {
        self.lattice.num_senders()
    }

    pub fn states(&self) -> &[RevealedState] {
        &self.states
    }

    pub fn state(&self, id: usize) -> &RevealedState {
        &self.states[id]
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn root(&self) -> usize {
        0
    }

    pub fn lookup(&self, revealed: SenderSet, code: usize) -> Option<usize> {
        self.index.get(&(revealed, code)).copied()
    }

    /// State reached from `id` when `sender` reveals `value`.
    pub fn reveal(&self, id: usize, sender: usize, value: usize) -> Option<usize> {
        let st = &self.states[id];
        let code = self.lattice.extend(st.revealed, st.code, sender, value);
        self.lookup(st.revealed.with(sender), code)
    }

    /// The state a joint realization `state` reaches once `revealed` is known.
    pub fn locate(&self, revealed: SenderSet, joint_state: usize) -> Option<usize> {
        self.lookup(revealed, self.space.project(joint_state, revealed))
    }

    /// `(value, conditional probability, next state)` for every value
    /// `sender` may reveal at state `id`.
    pub fn successors(&self, id: usize, sender: usize) -> Vec<(usize, f64, usize)> {
        let st = &self.states[id];
        assert!(
            !st.revealed.contains(sender),
            "sender {sender} already revealed"
        );
        let k = self.space.components()[sender].len();
        (0..k)
            .filter_map(|v| {
                self.reveal(id, sender, v)
                    .map(|next| (v, self.states[next].probability / st.probability, next))
            })
            .collect()
    }

    /// Human-readable realization of a state, e.g. `(ω1=H, ω2=T)`.
    pub fn describe(&self, id: usize) -> String {
        let st = &self.states[id];
        describe(&self.space, st.revealed, st.code)
    }

    pub fn lattice(&self) -> &RevelationLattice {
        &self.lattice
    }
}

/// Monopoly outcome of a single sender.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonopolyOutcome {
    pub rate: f64,
    /// v̄(ω̃₁) at the prior.
    pub reveal_value: f64,
    pub expected_visits: f64,
    pub receiver_payoff: f64,
}

/// λ^M = c / v̄(ω̃₁) for a single sender.
pub fn monopoly_rate(
    dp: &DecisionProblem,
    prior: &JointPrior,
    cost: f64,
) -> Result<MonopolyOutcome> {
    if prior.num_senders() != 1 {
        return Err(Error::InvalidArgument(format!(
            "monopoly needs exactly one sender, found {}",
            prior.num_senders()
        )));
    }
    if cost.is_nan() || cost <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "attention cost {cost} must be positive"
        )));
    }
    let graph = StateGraph::new(dp, prior)?;
    let root = graph.state(graph.root());
    let value = root.reveal_value[1].unwrap_or(0.0);
    if cost >= value {
        return Err(Error::AssumptionViolated(format!(
            "cost {cost} is not below the value of information {value}"
        )));
    }
    Ok(MonopolyOutcome {
        rate: cost / value,
        reveal_value: value,
        expected_visits: value / cost,
        receiver_payoff: root.stopping_value,
    })
}

/// AoN equilibrium rates at every reachable state with theoretical payoffs.
#[derive(Debug, Clone)]
pub struct EquilibriumProfile {
    pub graph: Arc<StateGraph>,
    pub cost: f64,
    /// `rates[state][sender]`, `None` once the sender is revealed.
    pub rates: Vec<Vec<Option<f64>>>,
    /// Expected visits of senders `1..=n` (index 0 is sender 1).
    pub sender_payoffs: Vec<f64>,
    pub receiver_payoff: f64,
    /// E[U(μ′(𝝎_N))].
    pub full_value: f64,
    /// False when the profile was forced through failed conditions.
    pub verified: bool,
    pub assumption2: ConditionReport,
    pub substitutes: SubstitutesReport,
}

/// One line of the tabulated profile.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProfileRow {
    pub state: usize,
    pub revealed: String,
    pub realization: String,
    pub sender: usize,
    pub rate: f64,
}

impl EquilibriumProfile {
    pub fn rate(&self, state: usize, sender: usize) -> Option<f64> {
        self.rates[state][sender]
    }

    pub fn total_visits(&self) -> f64 {
        self.sender_payoffs.iter().sum()
    }

    pub fn rows(&self) -> Vec<ProfileRow> {
        let mut rows = Vec::new();
        for st in self.graph.states() {
            for (i, r) in self.rates[st.id].iter().enumerate() {
                if let Some(rate) = r {
                    rows.push(ProfileRow {
                        state: st.id,
                        revealed: st.revealed.to_string(),
                        realization: self.graph.describe(st.id),
                        sender: i,
                        rate: *rate,
                    });
                }
            }
        }
        rows
    }
}

/// λ*ᵢ(μ) = c / E_{𝝎₋ᵢ ~ μ}[v̄(ω̃ᵢ | 𝝎₋ᵢ)] at every reachable state.
///
/// Assumption 2 must hold. The exhaustive substitutes layer must hold
/// unless `force` is set, in which case the profile is flagged unverified.
pub fn aon_rates(
    dp: &DecisionProblem,
    prior: &JointPrior,
    cost: f64,
    force: bool,
) -> Result<EquilibriumProfile> {
    let assumption2 = check_assumption2(dp, prior, cost)?;
    if !assumption2.holds {
        let w = &assumption2.witnesses[0];
        return Err(Error::AssumptionViolated(format!(
            "sender {} has residual value {} ≤ cost {} ({})",
            w.sender.unwrap_or(0),
            w.rhs,
            cost,
            w.context
        )));
    }
    let substitutes = check_substitutes(dp, prior, 0, 0)?;
    if !substitutes.holds() && !force {
        let w = &substitutes.exact.witnesses[0];
        return Err(Error::ConditionNotVerified(format!(
            "substitutes fails for sender {} at {}: {} < {}",
            w.sender.unwrap_or(0),
            w.context,
            w.lhs,
            w.rhs
        )));
    }
    let graph = Arc::new(StateGraph::new(dp, prior)?);
    let n = graph.num_senders();
    let mut rates = Vec::with_capacity(graph.len());
    for st in graph.states() {
        let mut row = vec![None; n + 1];
        for (i, slot) in row.iter_mut().enumerate() {
            if let Some(res) = st.residual[i] {
                if res <= cost + VALUE_EPS {
                    return Err(Error::AssumptionViolated(format!(
                        "sender {i} has expected residual value {res} ≤ cost {cost} at {}",
                        graph.describe(st.id)
                    )));
                }
                *slot = Some(cost / res);
            }
        }
        rates.push(row);
    }
    let root = graph.state(graph.root());
    let sender_payoffs: Vec<f64> = (1..=n)
        .map(|i| root.residual[i].unwrap_or(0.0) / cost)
        .collect();
    let receiver_payoff = root.full_value - cost * sender_payoffs.iter().sum::<f64>();
    Ok(EquilibriumProfile {
        full_value: root.full_value,
        graph,
        cost,
        rates,
        sender_payoffs,
        receiver_payoff,
        verified: substitutes.holds(),
        assumption2,
        substitutes,
    })
}

/// Auxiliary-exchange prices `pᵢ = f(N) − f(N \ {i})`.
pub fn marginal_prices(dp: &DecisionProblem, prior: &JointPrior) -> Result<Vec<f64>> {
    let lattice = RevelationLattice::new(dp, prior)?;
    let all = lattice.senders();
    let f_all = lattice.coalition_value(all);
    Ok(all
        .iter()
        .map(|i| f_all - lattice.coalition_value(all.without(i)))
        .collect())
}

/// Replaces senders `a` and `b` by one sender holding `(ω_a, ω_b)`. The
/// merged sender takes index `min(a, b)`; the remaining senders keep their
/// relative order.
pub fn merge_senders(
    env: &InformationEnvironment,
    a: usize,
    b: usize,
) -> Result<InformationEnvironment> {
    let space = env.prior.space();
    let n = space.num_senders();
    if a == b || a == 0 || b == 0 || a > n || b > n {
        return Err(Error::InvalidArgument(format!(
            "cannot merge senders {a} and {b}"
        )));
    }
    let (lo, hi) = (a.min(b), a.max(b));
    // Old component for each new position; the merged one maps to `lo`.
    let order: Vec<usize> = (0..=n).filter(|&k| k != hi).collect();
    let comps = space.components();
    let mut new_comps = Vec::with_capacity(order.len());
    for (pos, &k) in order.iter().enumerate() {
        let values: Vec<String> = if k == lo {
            comps[lo]
                .values()
                .iter()
                .flat_map(|x| comps[hi].values().iter().map(move |y| format!("{x}|{y}")))
                .collect()
        } else {
            comps[k].values().to_vec()
        };
        new_comps.push(ComponentSpace::new(pos, values)?);
    }
    let new_space = JointSpace::new(new_comps)?;
    let hi_len = comps[hi].len();
    let to_old = |digits: &[usize]| -> usize {
        let mut old = vec![0; n + 1];
        for (pos, &k) in order.iter().enumerate() {
            if k == lo {
                old[lo] = digits[pos] / hi_len;
                old[hi] = digits[pos] % hi_len;
            } else {
                old[k] = digits[pos];
            }
        }
        space.encode(&old)
    };
    let mass = (0..new_space.size())
        .map(|s| env.prior.mass()[to_old(&new_space.decode(s))])
        .collect();
    let problem =
        DecisionProblem::from_fn(&new_space, env.problem.actions().to_vec(), |act, digits| {
            env.problem.utility(act, to_old(digits))
        })?;
    Ok(InformationEnvironment {
        prior: JointPrior::new(new_space, mass)?,
        problem,
        cost: env.cost,
    })
}
