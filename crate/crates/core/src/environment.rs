//! Finite probability core: component spaces, joint priors, beliefs,
//! experiments and Bayesian updating.
//!
//! Joint states are enumerated in row-major order of the component value
//! indices, component 0 (the payoff state that no sender can reveal) being
//! the most significant digit. Every distribution over joint states is a
//! dense `Vec<f64>` over that enumeration.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Normalization tolerance applied when a distribution is constructed.
pub const NORMALIZATION_TOL: f64 = 1e-12;

/// Relative tolerance of the likelihood-ratio test in [`no_direct_info`].
pub const RATIO_TOL: f64 = 1e-9;

/// A set of sender indices `1..=63`, stored as a bit mask.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SenderSet(u64);

impl SenderSet {
    pub const fn empty() -> Self {
        SenderSet(0)
    }

    /// All senders `1..=n`.
    pub fn all(n: usize) -> Self {
        assert!(n < 64, "at most 63 senders");
        SenderSet(((1u64 << n) - 1) << 1)
    }

    pub fn from_bits(bits: u64) -> Self {
        SenderSet(bits & !1)
    }

    pub fn bits(self) -> u64 {
        self.0
    }

    pub fn contains(self, sender: usize) -> bool {
        sender < 64 && self.0 & (1 << sender) != 0
    }

    pub fn with(self, sender: usize) -> Self {
        SenderSet(self.0 | (1 << sender))
    }

    pub fn without(self, sender: usize) -> Self {
        SenderSet(self.0 & !(1 << sender))
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn is_subset(self, other: SenderSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn union(self, other: SenderSet) -> Self {
        SenderSet(self.0 | other.0)
    }

    pub fn difference(self, other: SenderSet) -> Self {
        SenderSet(self.0 & !other.0)
    }

    /// Senders in increasing order.
    pub fn iter(self) -> impl Iterator<Item = usize> {
        let bits = self.0;
        (1..64).filter(move |i| bits & (1 << i) != 0)
    }

    /// Every subset of `1..=n`, in increasing bit order.
    pub fn subsets(n: usize) -> impl Iterator<Item = SenderSet> {
        (0u64..(1u64 << n)).map(|b| SenderSet(b << 1))
    }
}

impl fmt::Debug for SenderSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for SenderSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (k, i) in self.iter().enumerate() {
            if k > 0 {
                f.write_str(",")?;
            }
            write!(f, "{i}")?;
        }
        f.write_str("}")
    }
}

impl FromIterator<usize> for SenderSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        iter.into_iter().fold(SenderSet::empty(), SenderSet::with)
    }
}

/// Finite realization space of one component. Component 0 is the payoff
/// state; components `1..=n` belong to the senders.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentSpace {
    pub id: usize,
    values: Vec<String>,
}

impl ComponentSpace {
    pub fn new<S: Into<String>>(id: usize, values: impl IntoIterator<Item = S>) -> Result<Self> {
        let values: Vec<String> = values.into_iter().map(Into::into).collect();
        if values.is_empty() {
            return Err(Error::InvalidSpace(format!("component {id} has no values")));
        }
        for (k, v) in values.iter().enumerate() {
            if values[..k].contains(v) {
                return Err(Error::InvalidSpace(format!(
                    "component {id} repeats the label {v:?}"
                )));
            }
        }
        Ok(ComponentSpace { id, values })
    }

    pub fn values(&self) -> &[String] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.values.iter().position(|v| v == label)
    }
}

/// The product space `Ω₀ × Ω₁ × … × Ωₙ`.
#[derive(Debug, Clone, PartialEq)]
pub struct JointSpace {
    components: Vec<ComponentSpace>,
    strides: Vec<usize>,
    size: usize,
}

impl JointSpace {
    pub fn new(components: Vec<ComponentSpace>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidSpace("no components".into()));
        }
        if components.len() > 64 {
            return Err(Error::InvalidSpace("at most 63 senders".into()));
        }
        for (k, c) in components.iter().enumerate() {
            if c.id != k {
                return Err(Error::InvalidSpace(format!(
                    "component at position {k} has id {}",
                    c.id
                )));
            }
        }
        let mut strides = vec![1; components.len()];
        for k in (0..components.len() - 1).rev() {
            strides[k] = strides[k + 1] * components[k + 1].len();
        }
        let size = strides[0] * components[0].len();
        Ok(JointSpace {
            components,
            strides,
            size,
        })
    }

    /// Convenience constructor from value lists: `state` is Ω₀, `senders`
    /// are Ω₁…Ωₙ.
    pub fn from_labels<S: AsRef<str>>(state: &[S], senders: &[Vec<S>]) -> Result<Self> {
        let mut comps = vec![ComponentSpace::new(0, state.iter().map(|s| s.as_ref()))?];
        for (i, vals) in senders.iter().enumerate() {
            comps.push(ComponentSpace::new(i + 1, vals.iter().map(|s| s.as_ref()))?);
        }
        JointSpace::new(comps)
    }

    pub fn components(&self) -> &[ComponentSpace] {
        &self.components
    }

    pub fn component(&self, id: usize) -> Result<&ComponentSpace> {
        self.components.get(id).ok_or(Error::UnknownComponent(id))
    }

    pub fn num_senders(&self) -> usize {
        self.components.len() - 1
    }

    pub fn senders(&self) -> SenderSet {
        SenderSet::all(self.num_senders())
    }

    /// Number of joint states.
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn stride(&self, component: usize) -> usize {
        self.strides[component]
    }

    /// Value index of `component` in joint state `state`.
    #[inline]
    pub fn value(&self, state: usize, component: usize) -> usize {
        (state / self.strides[component]) % self.components[component].len()
    }

    pub fn decode(&self, state: usize) -> Vec<usize> {
        (0..self.components.len())
            .map(|k| self.value(state, k))
            .collect()
    }

    pub fn encode(&self, values: &[usize]) -> usize {
        values.iter().zip(&self.strides).map(|(v, s)| v * s).sum()
    }

    pub fn labels(&self, state: usize) -> Vec<&str> {
        (0..self.components.len())
            .map(|k| self.components[k].values[self.value(state, k)].as_str())
            .collect()
    }

    fn check_sender(&self, sender: usize) -> Result<()> {
        if sender == 0 || sender >= self.components.len() {
            Err(Error::UnknownComponent(sender))
        } else {
            Ok(())
        }
    }

    fn check_assignment(&self, assignment: &[(usize, usize)]) -> Result<()> {
        for &(sender, value) in assignment {
            self.check_sender(sender)?;
            if value >= self.components[sender].len() {
                return Err(Error::UnknownValue {
                    component: sender,
                    value,
                });
            }
        }
        Ok(())
    }

    /// Number of realizations of the senders in `set`.
    pub fn realizations(&self, set: SenderSet) -> usize {
        set.iter().map(|i| self.components[i].len()).product()
    }

    /// Mixed-radix code of the realization of `set` in joint state `state`;
    /// senders in increasing order, the last one least significant.
    #[inline]
    pub fn project(&self, state: usize, set: SenderSet) -> usize {
        let mut code = 0;
        for i in set.iter() {
            code = code * self.components[i].len() + self.value(state, i);
        }
        code
    }

    /// Inverse of [`JointSpace::project`]: `(sender, value)` pairs.
    pub fn decode_realization(&self, set: SenderSet, mut code: usize) -> Vec<(usize, usize)> {
        let senders: Vec<usize> = set.iter().collect();
        let mut out = vec![(0, 0); senders.len()];
        for (k, &i) in senders.iter().enumerate().rev() {
            let len = self.components[i].len();
            out[k] = (i, code % len);
            code /= len;
        }
        out
    }

    pub fn encode_realization(&self, assignment: &[(usize, usize)]) -> (SenderSet, usize) {
        let mut sorted = assignment.to_vec();
        sorted.sort_unstable();
        let set: SenderSet = sorted.iter().map(|&(i, _)| i).collect();
        let code = sorted
            .iter()
            .fold(0, |acc, &(i, v)| acc * self.components[i].len() + v);
        (set, code)
    }
}

fn validate_mass(what: &str, mass: &mut [f64], expected_len: usize) -> Result<()> {
    if mass.len() != expected_len {
        return Err(Error::InvalidDistribution {
            what: what.into(),
            reason: format!("expected {expected_len} entries, got {}", mass.len()),
        });
    }
    if let Some(bad) = mass.iter().find(|p| !p.is_finite() || **p < 0.0) {
        return Err(Error::InvalidDistribution {
            what: what.into(),
            reason: format!("entry {bad} is negative or not finite"),
        });
    }
    let total: f64 = mass.iter().sum();
    if (total - 1.0).abs() > NORMALIZATION_TOL {
        return Err(Error::InvalidDistribution {
            what: what.into(),
            reason: format!("sums to {total}"),
        });
    }
    mass.iter_mut().for_each(|p| *p /= total);
    Ok(())
}

/// The common prior μ⁰ over joint states.
#[derive(Debug, Clone, PartialEq)]
pub struct JointPrior {
    space: Arc<JointSpace>,
    mass: Vec<f64>,
}

impl JointPrior {
    pub fn new(space: JointSpace, mut mass: Vec<f64>) -> Result<Self> {
        validate_mass("joint prior", &mut mass, space.size())?;
        Ok(JointPrior {
            space: Arc::new(space),
            mass,
        })
    }

    /// Prior built as `p(ω₀) · Πᵢ p(ωᵢ | ω₀)`; `conditionals[i-1][v0]` is the
    /// distribution of sender `i`'s component given payoff state `v0`.
    pub fn from_conditionals(
        space: JointSpace,
        state_marginal: &[f64],
        conditionals: &[Vec<Vec<f64>>],
    ) -> Result<Self> {
        let n = space.num_senders();
        let mut marginal = state_marginal.to_vec();
        validate_mass(
            "payoff-state marginal",
            &mut marginal,
            space.components[0].len(),
        )?;
        if conditionals.len() != n {
            return Err(Error::InvalidDistribution {
                what: "conditionals".into(),
                reason: format!("expected {n} senders, got {}", conditionals.len()),
            });
        }
        let mut rows = conditionals.to_vec();
        for (i, table) in rows.iter_mut().enumerate() {
            if table.len() != marginal.len() {
                return Err(Error::InvalidDistribution {
                    what: format!("sender {} conditionals", i + 1),
                    reason: format!("expected {} rows, got {}", marginal.len(), table.len()),
                });
            }
            for (v0, row) in table.iter_mut().enumerate() {
                validate_mass(
                    &format!("sender {} row {v0}", i + 1),
                    row,
                    space.components[i + 1].len(),
                )?;
            }
        }
        let mass = (0..space.size())
            .map(|s| {
                let v0 = space.value(s, 0);
                (1..=n).fold(marginal[v0], |acc, i| {
                    acc * rows[i - 1][v0][space.value(s, i)]
                })
            })
            .collect();
        JointPrior::new(space, mass)
    }

    /// Independent components with the given marginals (one per component,
    /// payoff state first).
    pub fn independent(space: JointSpace, marginals: &[Vec<f64>]) -> Result<Self> {
        if marginals.len() != space.components.len() {
            return Err(Error::InvalidDistribution {
                what: "marginals".into(),
                reason: format!(
                    "expected {} marginals, got {}",
                    space.components.len(),
                    marginals.len()
                ),
            });
        }
        let mut m = marginals.to_vec();
        for (k, row) in m.iter_mut().enumerate() {
            validate_mass(
                &format!("component {k} marginal"),
                row,
                space.components[k].len(),
            )?;
        }
        let mass = (0..space.size())
            .map(|s| (0..m.len()).map(|k| m[k][space.value(s, k)]).product())
            .collect();
        JointPrior::new(space, mass)
    }

    pub fn space(&self) -> &JointSpace {
        &self.space
    }

    pub fn shared_space(&self) -> Arc<JointSpace> {
        Arc::clone(&self.space)
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn num_senders(&self) -> usize {
        self.space.num_senders()
    }

    pub fn belief(&self) -> Belief {
        Belief {
            space: Arc::clone(&self.space),
            mass: self.mass.clone(),
        }
    }

    /// Prior probability of a partial realization of the senders.
    pub fn event_mass(&self, assignment: &[(usize, usize)]) -> Result<f64> {
        self.space.check_assignment(assignment)?;
        Ok(self
            .mass
            .iter()
            .enumerate()
            .filter(|(s, _)| matches(&self.space, *s, assignment))
            .map(|(_, p)| p)
            .sum())
    }
}

#[inline]
fn matches(space: &JointSpace, state: usize, assignment: &[(usize, usize)]) -> bool {
    assignment.iter().all(|&(i, v)| space.value(state, i) == v)
}

/// The receiver's belief μ over joint states.
#[derive(Debug, Clone, PartialEq)]
pub struct Belief {
    space: Arc<JointSpace>,
    mass: Vec<f64>,
}

impl Belief {
    pub fn new(space: Arc<JointSpace>, mut mass: Vec<f64>) -> Result<Self> {
        validate_mass("belief", &mut mass, space.size())?;
        Ok(Belief { space, mass })
    }

    pub fn space(&self) -> &JointSpace {
        &self.space
    }

    pub fn shared_space(&self) -> Arc<JointSpace> {
        Arc::clone(&self.space)
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn support(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.mass
            .iter()
            .copied()
            .enumerate()
            .filter(|(_, p)| *p > 0.0)
    }

    /// Marginal distribution of one component.
    pub fn marginal(&self, component: usize) -> Result<Vec<f64>> {
        let len = self.space.component(component)?.len();
        let mut out = vec![0.0; len];
        for (s, p) in self.support() {
            out[self.space.value(s, component)] += p;
        }
        Ok(out)
    }

    /// Restricts the belief to joint states matching `assignment` and
    /// renormalizes.
    pub fn condition(&self, assignment: &[(usize, usize)]) -> Result<Belief> {
        self.space.check_assignment(assignment)?;
        let mut mass = vec![0.0; self.mass.len()];
        let mut total = 0.0;
        for (s, p) in self.support() {
            if matches(&self.space, s, assignment) {
                mass[s] = p;
                total += p;
            }
        }
        if total <= 0.0 {
            return Err(Error::ZeroMassEvent);
        }
        mass.iter_mut().for_each(|p| *p /= total);
        Ok(Belief {
            space: Arc::clone(&self.space),
            mass,
        })
    }

    /// Largest absolute difference from another belief over the same space.
    pub fn distance(&self, other: &Belief) -> f64 {
        self.mass
            .iter()
            .zip(&other.mass)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// μ′(𝝎_S): the prior conditioned on the realization of some senders'
/// components. `assignment` holds `(sender, value index)` pairs.
pub fn condition_on_components(
    prior: &JointPrior,
    assignment: &[(usize, usize)],
) -> Result<Belief> {
    prior.belief().condition(assignment)
}

/// A sender's experiment: a distribution over a finite message alphabet for
/// every value of her component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Experiment {
    sender: usize,
    messages: Vec<String>,
    kernel: Vec<Vec<f64>>,
}

/// Label of the uninformative message of all-or-nothing experiments.
pub const NULL_MESSAGE: &str = "null";

impl Experiment {
    pub fn new(
        space: &JointSpace,
        sender: usize,
        messages: Vec<String>,
        mut kernel: Vec<Vec<f64>>,
    ) -> Result<Self> {
        space.check_sender(sender)?;
        let values = space.components[sender].len();
        if kernel.len() != values {
            return Err(Error::InvalidDistribution {
                what: format!("experiment of sender {sender}"),
                reason: format!("expected {values} rows, got {}", kernel.len()),
            });
        }
        if messages.is_empty() {
            return Err(Error::InvalidArgument("experiment has no messages".into()));
        }
        for (v, row) in kernel.iter_mut().enumerate() {
            validate_mass(
                &format!("experiment of sender {sender}, value {v}"),
                row,
                messages.len(),
            )?;
        }
        Ok(Experiment {
            sender,
            messages,
            kernel,
        })
    }

    /// Reveals the component exactly; messages are the component's labels.
    pub fn fully_revealing(space: &JointSpace, sender: usize) -> Result<Self> {
        space.check_sender(sender)?;
        let comp = &space.components[sender];
        let kernel = (0..comp.len())
            .map(|v| {
                (0..comp.len())
                    .map(|m| f64::from(u8::from(m == v)))
                    .collect()
            })
            .collect();
        Experiment::new(space, sender, comp.values.clone(), kernel)
    }

    /// All-or-nothing offer: reveals the component with probability
    /// `reveal`, otherwise sends [`NULL_MESSAGE`].
    pub fn all_or_nothing(space: &JointSpace, sender: usize, reveal: f64) -> Result<Self> {
        space.check_sender(sender)?;
        if !(0.0..=1.0).contains(&reveal) {
            return Err(Error::InvalidArgument(format!(
                "reveal probability {reveal} outside [0, 1]"
            )));
        }
        let comp = &space.components[sender];
        let mut messages = comp.values.clone();
        let mut null = NULL_MESSAGE.to_string();
        while messages.contains(&null) {
            null.push('\'');
        }
        messages.push(null);
        let k = comp.len();
        let kernel = (0..k)
            .map(|v| {
                let mut row = vec![0.0; k + 1];
                row[v] = reveal;
                row[k] = 1.0 - reveal;
                row
            })
            .collect();
        Experiment::new(space, sender, messages, kernel)
    }

    pub fn uninformative(space: &JointSpace, sender: usize) -> Result<Self> {
        space.check_sender(sender)?;
        let k = space.components[sender].len();
        Experiment::new(space, sender, vec![NULL_MESSAGE.into()], vec![vec![1.0]; k])
    }

    /// Symmetric channel: reports the true value with probability
    /// `1 - flip`, otherwise a uniformly drawn different value. With two
    /// values this is the binary symmetric channel.
    pub fn symmetric_channel(space: &JointSpace, sender: usize, flip: f64) -> Result<Self> {
        space.check_sender(sender)?;
        if !(0.0..=1.0).contains(&flip) {
            return Err(Error::InvalidArgument(format!("flip probability {flip}")));
        }
        let comp = &space.components[sender];
        let k = comp.len();
        if k == 1 {
            return Experiment::fully_revealing(space, sender);
        }
        let off = flip / (k - 1) as f64;
        let kernel = (0..k)
            .map(|v| {
                (0..k)
                    .map(|m| if m == v { 1.0 - flip } else { off })
                    .collect()
            })
            .collect();
        Experiment::new(space, sender, comp.values.clone(), kernel)
    }

    pub fn sender(&self) -> usize {
        self.sender
    }

    pub fn messages(&self) -> &[String] {
        &self.messages
    }

    pub fn message_index(&self, label: &str) -> Option<usize> {
        self.messages.iter().position(|m| m == label)
    }

    /// Probability of message `m` given value `v` of the sender's component.
    #[inline]
    pub fn likelihood(&self, v: usize, m: usize) -> f64 {
        self.kernel[v][m]
    }

    pub fn kernel(&self) -> &[Vec<f64>] {
        &self.kernel
    }
}

/// L(m) = Σ_ω λ(ωᵢ, m)·μ(ω).
pub fn message_distribution(belief: &Belief, experiment: &Experiment) -> Vec<f64> {
    let space = belief.space();
    let i = experiment.sender;
    let mut out = vec![0.0; experiment.messages.len()];
    for (s, p) in belief.support() {
        let row = &experiment.kernel[space.value(s, i)];
        for (o, l) in out.iter_mut().zip(row) {
            *o += l * p;
        }
    }
    out
}

/// Bayes posterior after observing message index `message`.
pub fn update(belief: &Belief, experiment: &Experiment, message: usize) -> Result<Belief> {
    if message >= experiment.messages.len() {
        return Err(Error::InvalidArgument(format!("message index {message}")));
    }
    let space = belief.space();
    let i = experiment.sender;
    let mut mass = vec![0.0; belief.mass.len()];
    let mut total = 0.0;
    for (s, p) in belief.support() {
        let q = experiment.kernel[space.value(s, i)][message] * p;
        mass[s] = q;
        total += q;
    }
    if total <= 0.0 {
        return Err(Error::ZeroProbabilityMessage(message));
    }
    mass.iter_mut().for_each(|p| *p /= total);
    Ok(Belief {
        space: belief.shared_space(),
        mass,
    })
}

/// Whether `belief` carries no direct information from `sender`: for every
/// realization of the other components, the likelihood ratios between any
/// two values of the sender's component equal those under the prior.
pub fn no_direct_info(belief: &Belief, prior: &JointPrior, sender: usize) -> bool {
    let space = prior.space();
    if sender == 0 || sender > space.num_senders() {
        return false;
    }
    let k = space.components[sender].len();
    let stride = space.stride(sender);
    let close = |a: f64, b: f64| (a - b).abs() <= RATIO_TOL * a.abs().max(b.abs());
    for s in 0..space.size() {
        if space.value(s, sender) != 0 {
            continue;
        }
        // s runs over realizations of the other components; s + v·stride
        // sets the sender's value to v.
        for a in 0..k {
            for b in (a + 1)..k {
                let (sa, sb) = (s + a * stride, s + b * stride);
                let lhs = belief.mass[sa] * prior.mass[sb];
                let rhs = belief.mass[sb] * prior.mass[sa];
                if !close(lhs, rhs) {
                    return false;
                }
            }
        }
        // Mass where the prior has none would break support containment.
        for v in 0..k {
            let sv = s + v * stride;
            if prior.mass[sv] == 0.0 && belief.mass[sv] > 0.0 {
                return false;
            }
        }
    }
    true
}
