//! Discrete-round game engine and Monte Carlo driver.
//!
//! Nature draws 𝝎 once; in every round the receiver either stops and acts or
//! consults one sender, whose current experiment then emits a message. When
//! every sender plays an all-or-nothing policy the receiver's belief always
//! sits on the [`StateGraph`], which the engine tracks by state id. A custom
//! experiment switches the engine to explicit Bayesian updating.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decision::{
    argmax, expected_residual_value, experiment_value, full_reveal_value, DecisionProblem,
};
use crate::environment::{update, Belief, Experiment, JointPrior, SenderSet, NULL_MESSAGE};
use crate::equilibrium::StateGraph;
use crate::error::{Error, Result};

pub const DEFAULT_ROUND_CAP: u64 = 1_000_000;

/// Values closer than this (relative to their size) count as ties.
const TIE_TOL: f64 = 1e-12;

/// Per-state, per-sender reveal probabilities; `None` once revealed.
pub type RateTable = Vec<Vec<Option<f64>>>;

#[derive(Debug, Clone, PartialEq)]
pub enum SenderPolicy {
    /// λ*ᵢ(μ) = c / E[v̄(ω̃ᵢ | 𝝎₋ᵢ)], capped at 1.
    AonEquilibrium,
    /// The same reveal probability at every state.
    AonFixed(f64),
    /// λ*ᵢ(μ) / (1 − ε), capped at 1.
    EpsilonBoost(f64),
    /// Never reveals anything.
    Uninformative,
    /// Reveal probability per state id of the [`StateGraph`].
    AonTable(Vec<f64>),
    /// The same experiment in every round.
    Custom(Experiment),
}

impl SenderPolicy {
    fn is_aon(&self) -> bool {
        !matches!(self, SenderPolicy::Custom(_))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum VisitOrder {
    LowestIndex,
    /// Senders visited in the listed order.
    Permutation(Vec<usize>),
    /// A fresh uniformly random order per episode.
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TieBreak {
    PreferStop,
    PreferContinue,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ReceiverPolicy {
    /// Consult senders one after another in the given order, each until it
    /// reveals; act once everything is known.
    EquilibriumOrder(VisitOrder),
    /// Follow the exact dynamic program over the state graph.
    DpOptimal(TieBreak),
    /// Consult whichever sender has the largest positive one-round gain.
    GreedyMyopic,
    StopAlways,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DpAction {
    Stop,
    Consult(usize),
}

/// Receiver values over the state graph.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DpSolution {
    pub value: Vec<f64>,
    pub stop_value: Vec<f64>,
    /// Best continuation value over senders with positive rate.
    pub continue_value: Vec<Option<f64>>,
    pub action: Vec<DpAction>,
}

impl DpSolution {
    /// Whether stopping is among the optimal choices at `state`.
    pub fn stop_optimal(&self, state: usize) -> bool {
        match self.continue_value[state] {
            Some(cv) => !strictly_greater(cv, self.stop_value[state]),
            None => true,
        }
    }

    /// Whether continuing is among the optimal choices at `state`.
    pub fn continue_optimal(&self, state: usize) -> bool {
        self.continue_value[state].is_some_and(|cv| !strictly_greater(self.stop_value[state], cv))
    }
}

fn strictly_greater(a: f64, b: f64) -> bool {
    a - b > TIE_TOL * a.abs().max(b.abs()).max(1.0)
}

/// Resolves every sender policy into reveal probabilities on the graph.
pub fn aon_tables(graph: &StateGraph, cost: f64, senders: &[SenderPolicy]) -> Result<RateTable> {
    let n = graph.num_senders();
    if senders.len() != n {
        return Err(Error::InvalidArgument(format!(
            "{} sender policies for {n} senders",
            senders.len()
        )));
    }
    let mut table = Vec::with_capacity(graph.len());
    for st in graph.states() {
        let mut row = vec![None; n + 1];
        for i in graph.space().senders().difference(st.revealed).iter() {
            let equilibrium = || (cost / st.residual[i].unwrap_or(0.0)).min(1.0);
            let rate = match &senders[i - 1] {
                SenderPolicy::AonEquilibrium => equilibrium(),
                SenderPolicy::AonFixed(r) => *r,
                SenderPolicy::EpsilonBoost(eps) => (equilibrium() / (1.0 - eps)).min(1.0),
                SenderPolicy::Uninformative => 0.0,
                SenderPolicy::AonTable(rates) => *rates.get(st.id).ok_or_else(|| {
                    Error::InvalidArgument(format!(
                        "rate table of sender {i} has no entry for state {}",
                        st.id
                    ))
                })?,
                SenderPolicy::Custom(_) => return Err(Error::NonAonPolicy(i)),
            };
            if !(0.0..=1.0).contains(&rate) {
                return Err(Error::InvalidArgument(format!(
                    "sender {i} rate {rate} outside [0, 1]"
                )));
            }
            row[i] = Some(rate);
        }
        table.push(row);
    }
    Ok(table)
}

/// Exact receiver dynamic program
/// `V(s) = max{U(s), maxᵢ E[V(s′)] − c/λᵢ(s)}` over the state graph.
///
/// Continuing with sender `i` forever until it reveals costs `c/λᵢ` in
/// expectation, which is the closed form of the self-referential fixed
/// point. Among senders, the lowest index wins ties.
pub fn solve_receiver_dp(
    graph: &StateGraph,
    cost: f64,
    rates: &RateTable,
    tie: TieBreak,
) -> Result<DpSolution> {
    let len = graph.len();
    if rates.len() != len {
        return Err(Error::InvalidArgument(format!(
            "rate table has {} states, graph has {len}",
            rates.len()
        )));
    }
    for st in graph.states() {
        if let Some(i) = graph
            .space()
            .senders()
            .difference(st.revealed)
            .iter()
            .find(|&i| rates[st.id].get(i).copied().flatten().is_none())
        {
            return Err(Error::NonAonPolicy(i));
        }
    }
    let mut value = vec![0.0; len];
    let mut stop_value = vec![0.0; len];
    let mut continue_value = vec![None; len];
    let mut action = vec![DpAction::Stop; len];
    // States are ordered by revealed-set size, so successors come later.
    for st in graph.states().iter().rev() {
        let id = st.id;
        let mut best: Option<(usize, f64)> = None;
        for (i, rate) in rates[id].iter().enumerate() {
            let Some(rate) = *rate else { continue };
            if rate <= 0.0 {
                continue;
            }
            let ev: f64 = graph
                .successors(id, i)
                .iter()
                .map(|&(_, p, next)| p * value[next])
                .sum();
            let cv = ev - cost / rate;
            if best.is_none_or(|(_, b)| strictly_greater(cv, b)) {
                best = Some((i, cv));
            }
        }
        stop_value[id] = st.stopping_value;
        continue_value[id] = best.map(|(_, v)| v);
        let (act, v) = match best {
            Some((i, cv)) => {
                let go = match tie {
                    TieBreak::PreferStop => strictly_greater(cv, st.stopping_value),
                    TieBreak::PreferContinue => !strictly_greater(st.stopping_value, cv),
                };
                if go {
                    (DpAction::Consult(i), cv.max(st.stopping_value))
                } else {
                    (DpAction::Stop, st.stopping_value.max(cv))
                }
            }
            None => (DpAction::Stop, st.stopping_value),
        };
        value[id] = v;
        action[id] = act;
    }
    Ok(DpSolution {
        value,
        stop_value,
        continue_value,
        action,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoundRecord {
    pub round: u64,
    pub sender: usize,
    /// Reveal probability offered, for all-or-nothing offers.
    pub offered_rate: Option<f64>,
    pub message: String,
    /// State-graph id after the update, when the belief is on the graph.
    pub state: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpisodeTrace {
    pub index: u64,
    pub state: Vec<String>,
    pub rounds: Vec<RoundRecord>,
    /// Visits of senders `1..=n` (index 0 is sender 1).
    pub visits: Vec<u64>,
    pub total_rounds: u64,
    pub total_cost: f64,
    pub action: String,
    pub utility: f64,
    pub payoff: f64,
}

/// Compact per-replication result.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpisodeOutcome {
    pub index: u64,
    pub visits: Vec<u64>,
    pub rounds: u64,
    pub utility: f64,
    pub cost: f64,
    pub payoff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonteCarloSummary {
    pub replications: u64,
    pub seed: u64,
    pub visit_mean: Vec<f64>,
    pub visit_se: Vec<f64>,
    pub receiver_mean: f64,
    pub receiver_se: f64,
    /// Number of episodes stopping after each round count.
    pub stopping_times: BTreeMap<u64, u64>,
    pub episodes: Vec<EpisodeOutcome>,
}

/// Mean and standard error (sample standard deviation over √n).
pub fn mean_se(xs: impl IntoIterator<Item = f64>) -> (f64, f64) {
    let xs: Vec<f64> = xs.into_iter().collect();
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Generator of episode `index` under root seed `seed`.
pub fn episode_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// A fully specified game ready to be played repeatedly.
pub struct Game<'a> {
    dp: &'a DecisionProblem,
    prior: &'a JointPrior,
    cost: f64,
    senders: Vec<SenderPolicy>,
    receiver: ReceiverPolicy,
    round_cap: u64,
    graph: Arc<StateGraph>,
    rates: Option<RateTable>,
    dp_solution: Option<DpSolution>,
    stop_action: Vec<usize>,
    sampler: WeightedIndex<f64>,
}

impl<'a> Game<'a> {
    pub fn new(
        dp: &'a DecisionProblem,
        prior: &'a JointPrior,
        cost: f64,
        senders: Vec<SenderPolicy>,
        receiver: ReceiverPolicy,
    ) -> Result<Self> {
        if cost.is_nan() || cost <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "attention cost {cost} must be positive"
            )));
        }
        let n = prior.num_senders();
        if senders.len() != n {
            return Err(Error::InvalidArgument(format!(
                "{} sender policies for {n} senders",
                senders.len()
            )));
        }
        for (k, s) in senders.iter().enumerate() {
            match s {
                SenderPolicy::EpsilonBoost(eps) if !(0.0..1.0).contains(eps) => {
                    return Err(Error::InvalidArgument(format!(
                        "epsilon {eps} outside [0, 1)"
                    )))
                }
                SenderPolicy::Custom(e) if e.sender() != k + 1 => {
                    return Err(Error::InvalidArgument(format!(
                        "custom experiment of sender {} assigned to sender {}",
                        e.sender(),
                        k + 1
                    )))
                }
                _ => {}
            }
        }
        if let ReceiverPolicy::EquilibriumOrder(VisitOrder::Permutation(p)) = &receiver {
            let mut sorted = p.clone();
            sorted.sort_unstable();
            if sorted != (1..=n).collect::<Vec<_>>() {
                return Err(Error::InvalidArgument(format!(
                    "{p:?} is not a permutation of 1..={n}"
                )));
            }
        }
        let graph = Arc::new(StateGraph::new(dp, prior)?);
        let rates = if senders.iter().all(SenderPolicy::is_aon) {
            Some(aon_tables(&graph, cost, &senders)?)
        } else {
            None
        };
        let dp_solution = match (&receiver, &rates) {
            (ReceiverPolicy::DpOptimal(tie), Some(r)) => {
                Some(solve_receiver_dp(&graph, cost, r, *tie)?)
            }
            (ReceiverPolicy::DpOptimal(_), None) => {
                let i = senders.iter().position(|s| !s.is_aon()).unwrap_or(0) + 1;
                return Err(Error::NonAonPolicy(i));
            }
            _ => None,
        };
        let stop_action = stop_actions(dp, prior, &graph);
        let sampler = WeightedIndex::new(prior.mass()).map_err(|e| Error::InvalidDistribution {
            what: "prior".into(),
            reason: e.to_string(),
        })?;
        Ok(Game {
            dp,
            prior,
            cost,
            senders,
            receiver,
            round_cap: DEFAULT_ROUND_CAP,
            graph,
            rates,
            dp_solution,
            stop_action,
            sampler,
        })
    }

    pub fn with_round_cap(mut self, cap: u64) -> Self {
        self.round_cap = cap;
        self
    }

    pub fn graph(&self) -> &StateGraph {
        &self.graph
    }

    pub fn rates(&self) -> Option<&RateTable> {
        self.rates.as_ref()
    }

    pub fn dp_solution(&self) -> Option<&DpSolution> {
        self.dp_solution.as_ref()
    }

    /// Plays episode `index` of the stream rooted at `seed`, keeping the
    /// round-by-round record.
    pub fn episode(&self, seed: u64, index: u64) -> Result<EpisodeTrace> {
        self.play(seed, index, true)
    }

    pub fn monte_carlo(&self, replications: u64, seed: u64) -> Result<MonteCarloSummary> {
        if replications == 0 {
            return Err(Error::InvalidArgument(
                "at least one replication is required".into(),
            ));
        }
        let traces: Vec<EpisodeTrace> = (0..replications)
            .into_par_iter()
            .map(|k| self.play(seed, k, false))
            .collect::<Result<_>>()?;
        let n = self.prior.num_senders();
        let mut visit_mean = Vec::with_capacity(n);
        let mut visit_se = Vec::with_capacity(n);
        for i in 0..n {
            let (m, se) = mean_se(traces.iter().map(|t| t.visits[i] as f64));
            visit_mean.push(m);
            visit_se.push(se);
        }
        let (receiver_mean, receiver_se) = mean_se(traces.iter().map(|t| t.payoff));
        let mut stopping_times = BTreeMap::new();
        for t in &traces {
            *stopping_times.entry(t.total_rounds).or_insert(0) += 1;
        }
        let episodes = traces
            .into_iter()
            .map(|t| EpisodeOutcome {
                index: t.index,
                visits: t.visits,
                rounds: t.total_rounds,
                utility: t.utility,
                cost: t.total_cost,
                payoff: t.payoff,
            })
            .collect();
        Ok(MonteCarloSummary {
            replications,
            seed,
            visit_mean,
            visit_se,
            receiver_mean,
            receiver_se,
            stopping_times,
            episodes,
        })
    }

    fn play(&self, seed: u64, index: u64, record: bool) -> Result<EpisodeTrace> {
        let mut rng = episode_rng(seed, index);
        let space = self.graph.space();
        let n = space.num_senders();
        let omega = self.sampler.sample(&mut rng);
        let order: Vec<usize> = match &self.receiver {
            ReceiverPolicy::EquilibriumOrder(VisitOrder::LowestIndex) => (1..=n).collect(),
            ReceiverPolicy::EquilibriumOrder(VisitOrder::Permutation(p)) => p.clone(),
            ReceiverPolicy::EquilibriumOrder(VisitOrder::Random) => {
                let mut p: Vec<usize> = (1..=n).collect();
                p.shuffle(&mut rng);
                p
            }
            _ => Vec::new(),
        };
        let mut pos = Position {
            id: Some(self.graph.root()),
            revealed: SenderSet::empty(),
            belief: if self.rates.is_none() {
                Some(self.prior.belief())
            } else {
                None
            },
        };
        let mut visits = vec![0u64; n];
        let mut rounds = Vec::new();
        let mut t = 0u64;
        while let Some(i) = self.choose(&pos, &order)? {
            t += 1;
            if t > self.round_cap {
                return Err(Error::RoundLimitExceeded(self.round_cap));
            }
            visits[i - 1] += 1;
            let (offered_rate, message) = self.consult(&mut pos, i, omega, &mut rng)?;
            if record {
                rounds.push(RoundRecord {
                    round: t,
                    sender: i,
                    offered_rate,
                    message,
                    state: pos.id,
                });
            }
        }
        let act = match (&pos.belief, pos.id) {
            (None, Some(id)) => self.stop_action[id],
            (Some(b), _) => argmax(&self.dp.expected_utilities(b)).0,
            (None, None) => unreachable!("belief is tracked whenever the graph position is lost"),
        };
        let utility = self.dp.utility(act, omega);
        let total_cost = self.cost * t as f64;
        Ok(EpisodeTrace {
            index,
            state: space.labels(omega).into_iter().map(String::from).collect(),
            rounds,
            visits,
            total_rounds: t,
            total_cost,
            action: self.dp.actions()[act].clone(),
            utility,
            payoff: utility - total_cost,
        })
    }

    /// The sender consulted next, or `None` to stop.
    fn choose(&self, pos: &Position, order: &[usize]) -> Result<Option<usize>> {
        let n = self.graph.num_senders();
        Ok(match &self.receiver {
            ReceiverPolicy::StopAlways => None,
            ReceiverPolicy::EquilibriumOrder(_) => order.iter().copied().find(|&i| !pos.knows(i)),
            ReceiverPolicy::DpOptimal(_) => {
                let id = pos.id.ok_or(Error::NonAonPolicy(0))?;
                match self.dp_solution.as_ref().map(|s| s.action[id]) {
                    Some(DpAction::Consult(i)) => Some(i),
                    _ => None,
                }
            }
            ReceiverPolicy::GreedyMyopic => {
                let mut best: Option<(usize, f64)> = None;
                for i in 1..=n {
                    if pos.knows(i) {
                        continue;
                    }
                    let gain = match (&pos.belief, pos.id) {
                        (None, Some(id)) => {
                            let st = self.graph.state(id);
                            self.rate_at(id, i)? * st.reveal_value[i].unwrap_or(0.0)
                        }
                        (Some(b), _) => experiment_value(self.dp, b, &self.experiment_at(pos, i)?),
                        (None, None) => 0.0,
                    };
                    let net = gain - self.cost;
                    if net > 0.0 && best.is_none_or(|(_, b)| strictly_greater(net, b)) {
                        best = Some((i, net));
                    }
                }
                best.map(|(i, _)| i)
            }
        })
    }

    fn rate_at(&self, id: usize, sender: usize) -> Result<f64> {
        self.rates
            .as_ref()
            .and_then(|r| r[id][sender])
            .ok_or(Error::NonAonPolicy(sender))
    }

    /// The experiment sender `i` offers at the current position.
    fn experiment_at(&self, pos: &Position, i: usize) -> Result<Experiment> {
        let space = self.graph.space();
        let rate = match &self.senders[i - 1] {
            SenderPolicy::Custom(e) => return Ok(e.clone()),
            SenderPolicy::AonFixed(r) => *r,
            SenderPolicy::Uninformative => 0.0,
            SenderPolicy::AonTable(rates) => {
                let id = pos.id.ok_or(Error::NonAonPolicy(i))?;
                rates[id]
            }
            policy @ (SenderPolicy::AonEquilibrium | SenderPolicy::EpsilonBoost(_)) => {
                let belief = pos
                    .belief
                    .as_ref()
                    .expect("belief tracked in explicit mode");
                let residual = expected_residual_value(self.dp, belief, i)?;
                let base = (self.cost / residual).min(1.0);
                match policy {
                    SenderPolicy::EpsilonBoost(eps) => (base / (1.0 - eps)).min(1.0),
                    _ => base,
                }
            }
        };
        Experiment::all_or_nothing(space, i, rate)
    }

    /// Runs one consultation of sender `i`; returns the offered rate and the
    /// message label.
    fn consult<R: Rng>(
        &self,
        pos: &mut Position,
        i: usize,
        omega: usize,
        rng: &mut R,
    ) -> Result<(Option<f64>, String)> {
        let space = self.graph.space();
        let vi = space.value(omega, i);
        if pos.belief.is_none() {
            let id = pos.id.expect("graph position tracked in AoN mode");
            let rate = self.rate_at(id, i)?;
            if rng.random::<f64>() < rate {
                pos.id = self.graph.reveal(id, i, vi);
                pos.revealed = pos.revealed.with(i);
                return Ok((Some(rate), space.components()[i].values()[vi].clone()));
            }
            return Ok((Some(rate), NULL_MESSAGE.to_string()));
        }
        let exp = self.experiment_at(pos, i)?;
        let row = &exp.kernel()[vi];
        let m = WeightedIndex::new(row)
            .map_err(|e| Error::InvalidDistribution {
                what: "experiment row".into(),
                reason: e.to_string(),
            })?
            .sample(rng);
        let belief = pos.belief.take().expect("belief tracked in explicit mode");
        let next = update(&belief, &exp, m)?;
        // All-or-nothing experiments list the component values first and
        // the null message last.
        let offered = match &self.senders[i - 1] {
            SenderPolicy::Custom(_) => {
                pos.id = None;
                None
            }
            _ => {
                let null = exp.messages().len() - 1;
                if m != null {
                    pos.id = pos.id.and_then(|id| self.graph.reveal(id, i, vi));
                    pos.revealed = pos.revealed.with(i);
                }
                Some(1.0 - exp.likelihood(vi, null))
            }
        };
        pos.belief = Some(next);
        Ok((offered, exp.messages()[m].clone()))
    }
}

/// Where the receiver stands: a graph id while the belief is an exact
/// revelation belief, plus the explicit belief in non-AoN mode.
struct Position {
    id: Option<usize>,
    revealed: SenderSet,
    belief: Option<Belief>,
}

impl Position {
    fn knows(&self, i: usize) -> bool {
        self.revealed.contains(i)
            || self.belief.as_ref().is_some_and(|b| {
                b.marginal(i)
                    .is_ok_and(|m| m.iter().any(|&p| p >= 1.0 - 1e-12))
            })
    }
}

/// Receiver's optimal action at every graph state.
fn stop_actions(dp: &DecisionProblem, prior: &JointPrior, graph: &StateGraph) -> Vec<usize> {
    let a = dp.num_actions();
    let mut acc = vec![0.0; graph.len() * a];
    let n = graph.num_senders();
    for (s, &m) in prior.mass().iter().enumerate() {
        if m <= 0.0 {
            continue;
        }
        let col = dp.column(s);
        for set in SenderSet::subsets(n) {
            if let Some(id) = graph.locate(set, s) {
                for (x, u) in acc[id * a..(id + 1) * a].iter_mut().zip(col) {
                    *x += m * u;
                }
            }
        }
    }
    acc.chunks(a).map(|row| argmax(row).0).collect()
}

/// Plays one recorded episode (stream index 0 of `seed`).
pub fn run_episode(
    dp: &DecisionProblem,
    prior: &JointPrior,
    cost: f64,
    senders: Vec<SenderPolicy>,
    receiver: ReceiverPolicy,
    seed: u64,
) -> Result<EpisodeTrace> {
    Game::new(dp, prior, cost, senders, receiver)?.episode(seed, 0)
}

pub fn monte_carlo(
    dp: &DecisionProblem,
    prior: &JointPrior,
    cost: f64,
    senders: Vec<SenderPolicy>,
    receiver: ReceiverPolicy,
    replications: u64,
    seed: u64,
) -> Result<MonteCarloSummary> {
    Game::new(dp, prior, cost, senders, receiver)?.monte_carlo(replications, seed)
}

/// Coin-match hold-up: no sender-1 offer makes the first visit worthwhile.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HoldupReport {
    pub cost: f64,
    /// v̄(ω̃₁ | μ⁰).
    pub sender1_reveal_value: f64,
    /// E[v̄(ω̃₂ | ω₁)], extracted by sender 2 once ω₁ is known.
    pub sender2_residual: f64,
    pub sender2_visits: f64,
    pub receiver_value: f64,
    pub stop_value: f64,
    /// Best continuation at μ⁰ over the tested sender-1 rates.
    pub best_continue_value: f64,
    pub sender1_rates: Vec<f64>,
    pub stop_strictly_optimal: bool,
    /// v̄(ω̃₂ | μ₁) when ω₁ = H has probability 0.75.
    pub partial_information_value: f64,
}

pub fn holdup_demo(cost: f64) -> Result<HoldupReport> {
    if !(cost > 0.0 && cost < 0.5) {
        return Err(Error::InvalidArgument(format!(
            "hold-up demo needs 0 < c < 0.5, got {cost}"
        )));
    }
    let env = crate::scenario::coin_match(cost);
    let graph = StateGraph::new(&env.problem, &env.prior)?;
    let root = graph.state(graph.root());
    let sender1_rates = vec![0.05, 0.25, 0.5, 1.0];
    let mut best_continue = f64::NEG_INFINITY;
    let mut receiver_value = f64::NEG_INFINITY;
    let mut strict = true;
    for &r in &sender1_rates {
        let senders = [SenderPolicy::AonFixed(r), SenderPolicy::AonEquilibrium];
        let rates = aon_tables(&graph, cost, &senders)?;
        let sol = solve_receiver_dp(&graph, cost, &rates, TieBreak::PreferStop)?;
        let cv = sol.continue_value[graph.root()].unwrap_or(f64::NEG_INFINITY);
        best_continue = best_continue.max(cv);
        receiver_value = receiver_value.max(sol.value[graph.root()]);
        strict &= strictly_greater(sol.stop_value[graph.root()], cv);
    }
    let belief = Belief::new(env.prior.shared_space(), vec![0.375, 0.375, 0.125, 0.125])?;
    let residual = root.residual[2].unwrap_or(0.0);
    Ok(HoldupReport {
        cost,
        sender1_reveal_value: root.reveal_value[1].unwrap_or(0.0),
        sender2_residual: residual,
        sender2_visits: residual / cost,
        receiver_value,
        stop_value: root.stopping_value,
        best_continue_value: best_continue,
        sender1_rates,
        stop_strictly_optimal: strict,
        partial_information_value: full_reveal_value(&env.problem, &belief, 2)?,
    })
}
