//! Competition for attention among information senders.
//!
//! A receiver facing a finite decision problem consults senders one at a
//! time, paying an attention cost per consultation. This crate computes
//! values of information, checks the structural conditions under which
//! all-or-nothing disclosure is an equilibrium, solves for the equilibrium
//! rates, simulates the dynamic game, and provides the Gaussian and large
//! market comparative statics.

pub mod conditions;
pub mod decision;
pub mod environment;
pub mod equilibrium;
pub mod error;
pub mod gaussian;
pub mod largemarket;
pub mod scenario;
pub mod simulate;

pub use conditions::{
    check_assumption2, check_mnat_concave, check_substitutes, ConditionReport, SubstitutesReport,
    Witness,
};
pub use decision::{
    coalition_value, expected_residual_value, experiment_value, full_info_utility,
    full_reveal_value, stopping_utility, DecisionProblem, RevelationLattice, ValueReport,
};
pub use environment::{
    message_distribution, no_direct_info, update, Belief, ComponentSpace, Experiment, JointPrior,
    JointSpace, SenderSet,
};
pub use equilibrium::{
    aon_rates, marginal_prices, merge_senders, monopoly_rate, EquilibriumProfile, StateGraph,
};
pub use error::{Error, Result};
pub use scenario::InformationEnvironment;
