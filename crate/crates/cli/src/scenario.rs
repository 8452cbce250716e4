//! Scenario files: TOML documents describing either a finite information
//! environment or a Gaussian-quadratic one, plus optional simulation
//! settings.

use std::path::Path;

use attention_core::environment::NORMALIZATION_TOL;
use attention_core::simulate::VisitOrder;
use attention_core::{DecisionProblem, InformationEnvironment, JointPrior, JointSpace};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Metadata {
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateBlock {
    pub values: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SenderBlock {
    #[serde(default)]
    pub name: Option<String>,
    pub values: Vec<String>,
}

/// Either `joint` (dense, row-major, payoff state most significant) or
/// `state` plus `conditionals[sender][state value]`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorBlock {
    pub joint: Option<Vec<f64>>,
    pub state: Option<Vec<f64>>,
    pub conditionals: Option<Vec<Vec<Vec<f64>>>>,
}

/// `by_state[action][state value]` broadcast over sender components, or
/// `joint[action][joint state]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecisionBlock {
    pub actions: Vec<String>,
    pub by_state: Option<Vec<Vec<f64>>>,
    pub joint: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianBlock {
    pub p0: f64,
    pub precisions: Vec<f64>,
    pub pc: Option<f64>,
    pub alpha: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationBlock {
    pub replications: Option<u64>,
    pub seed: Option<u64>,
    pub receiver_order: Option<String>,
    pub round_cap: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub schema_version: u32,
    #[serde(default)]
    pub metadata: Metadata,
    pub cost: Option<f64>,
    pub state: Option<StateBlock>,
    #[serde(default)]
    pub senders: Vec<SenderBlock>,
    pub prior: Option<PriorBlock>,
    pub decision: Option<DecisionBlock>,
    pub gaussian: Option<GaussianBlock>,
    pub simulation: Option<SimulationBlock>,
}

/// A validated scenario.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub file: ScenarioFile,
    pub environment: Option<InformationEnvironment>,
}

fn invalid(field: impl Into<String>, reason: impl Into<String>) -> CliError {
    CliError::Invalid {
        field: field.into(),
        reason: reason.into(),
    }
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Scenario, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let file: ScenarioFile = toml::from_str(&text).map_err(|e| CliError::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        let fallback = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        Scenario::from_file(file, &fallback)
    }

    pub fn from_file(file: ScenarioFile, fallback_name: &str) -> Result<Scenario, CliError> {
        if file.schema_version != SCHEMA_VERSION {
            return Err(invalid(
                "schema_version",
                format!(
                    "unsupported version {} (expected {SCHEMA_VERSION})",
                    file.schema_version
                ),
            ));
        }
        if let Some(c) = file.cost {
            if !(c.is_finite() && c > 0.0) {
                return Err(invalid("cost", format!("{c} must be positive and finite")));
            }
        }
        if let Some(g) = &file.gaussian {
            validate_gaussian(g)?;
        }
        if let Some(sim) = &file.simulation {
            if let Some(order) = &sim.receiver_order {
                parse_order(order, &sender_names(&file))
                    .map_err(|e| invalid("simulation.receiver_order", e))?;
            }
        }
        let environment = if has_finite_block(&file) {
            Some(build_environment(&file)?)
        } else {
            None
        };
        let name = if file.metadata.name.is_empty() {
            fallback_name.to_string()
        } else {
            file.metadata.name.clone()
        };
        Ok(Scenario {
            name,
            file,
            environment,
        })
    }

    pub fn gaussian(&self) -> Option<&GaussianBlock> {
        self.file.gaussian.as_ref()
    }

    pub fn simulation(&self) -> SimulationBlock {
        self.file.simulation.clone().unwrap_or_default()
    }

    pub fn sender_names(&self) -> Vec<String> {
        sender_names(&self.file)
    }

    /// The finite environment, required by check, solve and simulate.
    pub fn finite(&self) -> Result<&InformationEnvironment, CliError> {
        if self.file.gaussian.is_some() && self.environment.is_some() {
            return Err(invalid(
                "gaussian",
                "a scenario holds either a finite environment or a gaussian block, not both",
            ));
        }
        self.environment.as_ref().ok_or_else(|| {
            invalid(
                "state",
                "this command needs a finite environment (state, senders, prior, decision, cost)",
            )
        })
    }
}

fn has_finite_block(f: &ScenarioFile) -> bool {
    f.state.is_some() || !f.senders.is_empty() || f.prior.is_some() || f.decision.is_some()
}

fn sender_names(f: &ScenarioFile) -> Vec<String> {
    f.senders
        .iter()
        .enumerate()
        .map(|(k, s)| s.name.clone().unwrap_or_else(|| format!("sender{}", k + 1)))
        .collect()
}

/// Parses `lowest`, `random` or `perm:a,b,...` where each entry is a
/// 1-based sender index or a sender name.
pub fn parse_order(text: &str, names: &[String]) -> Result<VisitOrder, String> {
    match text {
        "lowest" => Ok(VisitOrder::LowestIndex),
        "random" => Ok(VisitOrder::Random),
        _ => {
            let list = text.strip_prefix("perm:").ok_or_else(|| {
                format!("unknown receiver order {text:?} (lowest, random or perm:...)")
            })?;
            let mut perm = Vec::new();
            for item in list.split(',').map(str::trim) {
                let idx = match item.parse::<usize>() {
                    Ok(i) => i,
                    Err(_) => {
                        1 + names
                            .iter()
                            .position(|n| n == item)
                            .ok_or_else(|| format!("unknown sender {item:?} in permutation"))?
                    }
                };
                perm.push(idx);
            }
            if !names.is_empty() {
                let mut sorted = perm.clone();
                sorted.sort_unstable();
                if sorted != (1..=names.len()).collect::<Vec<_>>() {
                    return Err(format!(
                        "{text:?} is not a permutation of senders 1..={}",
                        names.len()
                    ));
                }
            }
            Ok(VisitOrder::Permutation(perm))
        }
    }
}

fn validate_gaussian(g: &GaussianBlock) -> Result<(), CliError> {
    let positive = |field: String, x: f64| {
        if x.is_finite() && x > 0.0 {
            Ok(())
        } else {
            Err(invalid(field, format!("{x} must be positive and finite")))
        }
    };
    positive("gaussian.p0".into(), g.p0)?;
    for (k, &p) in g.precisions.iter().enumerate() {
        positive(format!("gaussian.precisions[{k}]"), p)?;
    }
    if let Some(pc) = g.pc {
        positive("gaussian.pc".into(), pc)?;
    }
    if let Some(a) = g.alpha {
        if !(0.0..=1.0).contains(&a) {
            return Err(invalid("gaussian.alpha", format!("{a} is outside [0, 1]")));
        }
    }
    if (g.pc.is_some() || g.alpha.is_some()) && g.precisions.len() != 2 {
        return Err(invalid(
            "gaussian.precisions",
            "the correlated model (pc, alpha) needs exactly two senders",
        ));
    }
    Ok(())
}

/// `x` to 12 decimals without trailing zeros, for diagnostics.
fn rounded(x: f64) -> String {
    let s = format!("{x:.12}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

fn check_row(field: String, row: &[f64], len: usize) -> Result<(), CliError> {
    if row.len() != len {
        return Err(invalid(
            field,
            format!("has {} entries, expected {len}", row.len()),
        ));
    }
    if let Some(bad) = row.iter().find(|p| !p.is_finite() || **p < 0.0) {
        return Err(invalid(
            field,
            format!("entry {bad} is negative or not finite"),
        ));
    }
    let total: f64 = row.iter().sum();
    if (total - 1.0).abs() > NORMALIZATION_TOL {
        return Err(invalid(
            field,
            format!("sums to {}, expected 1", rounded(total)),
        ));
    }
    Ok(())
}

fn build_environment(f: &ScenarioFile) -> Result<InformationEnvironment, CliError> {
    let state = f
        .state
        .as_ref()
        .ok_or_else(|| invalid("state", "missing [state] block"))?;
    if f.senders.is_empty() {
        return Err(invalid(
            "senders",
            "at least one [[senders]] block is required",
        ));
    }
    let prior = f
        .prior
        .as_ref()
        .ok_or_else(|| invalid("prior", "missing [prior] block"))?;
    let decision = f
        .decision
        .as_ref()
        .ok_or_else(|| invalid("decision", "missing [decision] block"))?;
    let cost = f
        .cost
        .ok_or_else(|| invalid("cost", "missing attention cost"))?;

    let names = sender_names(f);
    for (k, name) in names.iter().enumerate() {
        if names[..k].contains(name) {
            return Err(invalid(
                format!("senders[{k}].name"),
                format!("duplicate sender name {name:?}"),
            ));
        }
    }
    let sender_values: Vec<Vec<String>> = f.senders.iter().map(|s| s.values.clone()).collect();
    let space = JointSpace::from_labels(&state.values, &sender_values).map_err(|e| {
        let field = if state.values.is_empty() {
            "state.values"
        } else {
            "senders"
        };
        invalid(field, e.to_string())
    })?;

    let prior = match (&prior.joint, &prior.state, &prior.conditionals) {
        (Some(joint), None, None) => {
            check_row("prior.joint".into(), joint, space.size())?;
            JointPrior::new(space.clone(), joint.clone())
        }
        (None, Some(marginal), Some(conditionals)) => {
            check_row("prior.state".into(), marginal, state.values.len())?;
            if conditionals.len() != f.senders.len() {
                return Err(invalid(
                    "prior.conditionals",
                    format!(
                        "has {} tables for {} senders",
                        conditionals.len(),
                        f.senders.len()
                    ),
                ));
            }
            for (i, table) in conditionals.iter().enumerate() {
                if table.len() != state.values.len() {
                    return Err(invalid(
                        format!("prior.conditionals[{i}]"),
                        format!(
                            "has {} rows, expected one per state value ({})",
                            table.len(),
                            state.values.len()
                        ),
                    ));
                }
                for (v, row) in table.iter().enumerate() {
                    check_row(
                        format!(
                            "prior.conditionals[{i}][{v}] (sender {:?}, state {:?})",
                            names[i], state.values[v]
                        ),
                        row,
                        f.senders[i].values.len(),
                    )?;
                }
            }
            JointPrior::from_conditionals(space.clone(), marginal, conditionals)
        }
        _ => {
            return Err(invalid(
                "prior",
                "give either `joint` or both `state` and `conditionals`",
            ))
        }
    }
    .map_err(|e| invalid("prior", e.to_string()))?;

    let problem = match (&decision.by_state, &decision.joint) {
        (Some(table), None) => {
            check_table(
                "decision.by_state",
                table,
                decision.actions.len(),
                state.values.len(),
            )?;
            DecisionProblem::by_state(&space, decision.actions.clone(), table.clone())
        }
        (None, Some(table)) => {
            check_table(
                "decision.joint",
                table,
                decision.actions.len(),
                space.size(),
            )?;
            DecisionProblem::new(&space, decision.actions.clone(), table.clone())
        }
        _ => {
            return Err(invalid(
                "decision",
                "give exactly one of `by_state` or `joint`",
            ))
        }
    }
    .map_err(|e| invalid("decision", e.to_string()))?;

    Ok(InformationEnvironment {
        prior,
        problem,
        cost,
    })
}

fn check_table(
    field: &str,
    table: &[Vec<f64>],
    actions: usize,
    len: usize,
) -> Result<(), CliError> {
    if actions == 0 {
        return Err(invalid("decision.actions", "no actions"));
    }
    if table.len() != actions {
        return Err(invalid(
            field,
            format!("has {} rows for {actions} actions", table.len()),
        ));
    }
    for (a, row) in table.iter().enumerate() {
        if row.len() != len {
            return Err(invalid(
                format!("{field}[{a}]"),
                format!("has {} entries, expected {len}", row.len()),
            ));
        }
        if let Some(bad) = row.iter().find(|u| !u.is_finite()) {
            return Err(invalid(
                format!("{field}[{a}]"),
                format!("utility {bad} is not finite"),
            ));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const PAIR: &str = r#"
schema_version = 1
cost = 0.1
[state]
values = ["*"]
[[senders]]
values = ["H", "T"]
[[senders]]
values = ["H", "T"]
[prior]
state = [1.0]
conditionals = [[[0.7, 0.3]], [[0.7, 0.3]]]
[decision]
actions = ["HH", "HT", "TH", "TT"]
joint = [[2, 1, 1, 0], [1, 2, 0, 1], [1, 0, 2, 1], [0, 1, 1, 2]]
"#;

    fn parse(text: &str) -> Result<Scenario, CliError> {
        Scenario::from_file(toml::from_str(text).unwrap(), "test")
    }

    #[test]
    fn pair_guess_matches_builtin() {
        let s = parse(PAIR).unwrap();
        let env = s.environment.unwrap();
        let builtin = attention_core::scenario::pair_guess(0.7, 0.1);
        for (a, b) in env.prior.mass().iter().zip(builtin.prior.mass()) {
            assert!((a - b).abs() < 1e-15);
        }
        for st in 0..4 {
            assert_eq!(env.problem.column(st), builtin.problem.column(st));
        }
    }

    #[test]
    fn bad_row_is_named() {
        let text = PAIR.replace("[[0.7, 0.3]], [[0.7, 0.3]]", "[[0.7, 0.3]], [[0.6, 0.3]]");
        let err = parse(&text).unwrap_err().to_string();
        assert!(err.contains("prior.conditionals[1][0]"), "{err}");
        assert!(err.contains("0.9"), "{err}");
    }

    #[test]
    fn orders_parse() {
        let names = vec!["a".to_string(), "b".to_string()];
        assert_eq!(parse_order("lowest", &names), Ok(VisitOrder::LowestIndex));
        assert_eq!(
            parse_order("perm:b,1", &names),
            Ok(VisitOrder::Permutation(vec![2, 1]))
        );
        assert!(parse_order("perm:1,1", &names).is_err());
        assert!(parse_order("backwards", &names).is_err());
    }
}
