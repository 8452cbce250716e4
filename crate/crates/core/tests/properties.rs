use attention_core::decision::{
    expected_residual_value, experiment_value, full_info_utility, full_reveal_value,
};
use attention_core::environment::{
    condition_on_components, message_distribution, no_direct_info, update,
};
use attention_core::{
    check_mnat_concave, check_substitutes, coalition_value, scenario, stopping_utility,
    DecisionProblem, Experiment, JointPrior, JointSpace, RevelationLattice, SenderSet,
};
use proptest::prelude::*;

/// A small random environment: raw mass and utilities plus component sizes.
#[derive(Debug, Clone)]
struct Env {
    sizes: Vec<usize>,
    mass: Vec<f64>,
    utility: Vec<Vec<f64>>,
}

impl Env {
    fn space(&self) -> JointSpace {
        let labels = |k: usize| (0..k).map(|v| format!("v{v}")).collect::<Vec<_>>();
        let senders: Vec<Vec<String>> = self.sizes[1..].iter().map(|&k| labels(k)).collect();
        JointSpace::from_labels(&labels(self.sizes[0]), &senders).unwrap()
    }

    fn prior(&self) -> JointPrior {
        JointPrior::new(self.space(), self.mass.clone()).unwrap()
    }

    fn problem(&self) -> DecisionProblem {
        let actions = (0..self.utility.len()).map(|a| format!("a{a}")).collect();
        DecisionProblem::new(&self.space(), actions, self.utility.clone()).unwrap()
    }

    /// Component values of joint state `s`, most significant first.
    fn digits(&self, mut s: usize) -> Vec<usize> {
        let mut d = vec![0; self.sizes.len()];
        for k in (0..self.sizes.len()).rev() {
            d[k] = s % self.sizes[k];
            s /= self.sizes[k];
        }
        d
    }
}

fn normalized(raw: Vec<f64>) -> Vec<f64> {
    let t: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / t).collect()
}

fn env_strategy(max_senders: usize, max_size: usize) -> impl Strategy<Value = Env> {
    (
        1..=2usize,
        prop::collection::vec(2..=max_size, 1..=max_senders),
        2..=3usize,
    )
        .prop_flat_map(|(s0, senders, actions)| {
            let mut sizes = vec![s0];
            sizes.extend(senders);
            let states: usize = sizes.iter().product();
            (
                Just(sizes),
                prop::collection::vec(prop_oneof![1 => Just(0.0), 4 => 0.05f64..1.0], states),
                prop::collection::vec(prop::collection::vec(-1.0f64..1.0, states), actions),
            )
        })
        .prop_filter("prior needs mass", |(_, m, _)| m.iter().sum::<f64>() > 0.0)
        .prop_map(|(sizes, mass, utility)| Env {
            sizes,
            mass: normalized(mass),
            utility,
        })
}

fn experiment_strategy(values: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    (2..=3usize).prop_flat_map(move |m| {
        prop::collection::vec(prop::collection::vec(0.01f64..1.0, m), values)
            .prop_map(|rows| rows.into_iter().map(normalized).collect::<Vec<_>>())
    })
}

fn experiment(space: &JointSpace, sender: usize, kernel: Vec<Vec<f64>>) -> Experiment {
    let msgs = (0..kernel[0].len()).map(|m| format!("m{m}")).collect();
    Experiment::new(space, sender, msgs, kernel).unwrap()
}

/// Env plus a random experiment for a random sender.
fn env_and_experiment() -> impl Strategy<Value = (Env, usize, Vec<Vec<f64>>)> {
    env_strategy(2, 3).prop_flat_map(|env| {
        let n = env.sizes.len() - 1;
        (Just(env), 1..=n).prop_flat_map(|(env, i)| {
            let k = env.sizes[i];
            (Just(env), Just(i), experiment_strategy(k))
        })
    })
}

// Independent enumeration over joint states, messages and actions.
mod oracle {
    use super::Env;

    pub fn stop(env: &Env, mass: &[f64]) -> f64 {
        env.utility
            .iter()
            .map(|row| row.iter().zip(mass).map(|(u, m)| u * m).sum::<f64>())
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn full(env: &Env, mass: &[f64]) -> f64 {
        (0..mass.len())
            .map(|s| {
                mass[s]
                    * env
                        .utility
                        .iter()
                        .map(|r| r[s])
                        .fold(f64::NEG_INFINITY, f64::max)
            })
            .sum()
    }

    /// Σ_m maxₐ Σ_s μ(s) L(m | ωᵢ(s)) u(a, s) − U(μ).
    pub fn experiment(env: &Env, mass: &[f64], sender: usize, kernel: &[Vec<f64>]) -> f64 {
        let msgs = kernel[0].len();
        let total: f64 = (0..msgs)
            .map(|m| {
                let weighted: Vec<f64> = (0..mass.len())
                    .map(|s| mass[s] * kernel[env.digits(s)[sender]][m])
                    .collect();
                stop(env, &weighted)
            })
            .sum();
        total - stop(env, mass)
    }

    pub fn reveal(env: &Env, mass: &[f64], sender: usize) -> f64 {
        let k = env.sizes[sender];
        let identity: Vec<Vec<f64>> = (0..k)
            .map(|v| (0..k).map(|m| f64::from(u8::from(v == m))).collect())
            .collect();
        experiment(env, mass, sender, &identity)
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn beliefs_are_martingales((env, i, kernel) in env_and_experiment()) {
        let prior = env.prior();
        let exp = experiment(prior.space(), i, kernel);
        let belief = prior.belief();
        let dist = message_distribution(&belief, &exp);
        let mut mix = vec![0.0; belief.mass().len()];
        for (m, &p) in dist.iter().enumerate() {
            if p <= 0.0 {
                continue;
            }
            let post = update(&belief, &exp, m).unwrap();
            for (s, &x) in post.mass().iter().enumerate() {
                prop_assert!(x == 0.0 || belief.mass()[s] > 0.0, "support grew at {s}");
                mix[s] += p * x;
            }
        }
        for (a, b) in mix.iter().zip(belief.mass()) {
            prop_assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn revealing_update_is_conditioning(env in env_strategy(2, 3), pick in 0usize..100) {
        let prior = env.prior();
        let i = 1 + pick % (env.sizes.len() - 1);
        let exp = Experiment::fully_revealing(prior.space(), i).unwrap();
        let belief = prior.belief();
        for (v, &p) in message_distribution(&belief, &exp).iter().enumerate() {
            if p > 0.0 {
                let a = update(&belief, &exp, v).unwrap();
                let b = condition_on_components(&prior, &[(i, v)]).unwrap();
                prop_assert!(a.distance(&b) < 1e-12);
            }
        }
    }

    #[test]
    fn others_experiments_keep_no_direct_info(
        env in env_strategy(3, 3),
        kernels in prop::collection::vec(experiment_strategy(3), 1..=3),
        picks in prop::collection::vec(0usize..1000, 8),
    ) {
        let prior = env.prior();
        let n = env.sizes.len() - 1;
        prop_assume!(n >= 2);
        let i = 1 + picks[0] % n;
        let mut belief = prior.belief();
        for (step, kernel) in kernels.into_iter().enumerate() {
            let j = 1 + (i + picks[1 + step] % (n - 1)) % n;
            prop_assert_ne!(i, j);
            let kernel: Vec<Vec<f64>> = kernel.into_iter().cycle().take(env.sizes[j]).collect();
            let exp = experiment(prior.space(), j, kernel);
            let dist = message_distribution(&belief, &exp);
            let m = (0..dist.len()).cycle().skip(picks[4 + step] % dist.len()).find(|&m| dist[m] > 0.0).unwrap();
            belief = update(&belief, &exp, m).unwrap();
            prop_assert!(no_direct_info(&belief, &prior, i));
        }
    }

    #[test]
    fn values_match_brute_force((env, i, kernel) in env_and_experiment()) {
        prop_assume!(env.mass.len() <= 12);
        let prior = env.prior();
        let dp = env.problem();
        let belief = prior.belief();
        let exp = experiment(prior.space(), i, kernel.clone());
        let u = stopping_utility(&dp, &belief).stopping_value;
        let ubar = full_info_utility(&dp, &belief);
        let v = experiment_value(&dp, &belief, &exp);
        let vbar = full_reveal_value(&dp, &belief, i).unwrap();
        prop_assert!((u - oracle::stop(&env, &env.mass)).abs() < 1e-12);
        prop_assert!((ubar - oracle::full(&env, &env.mass)).abs() < 1e-12);
        prop_assert!((v - oracle::experiment(&env, &env.mass, i, &kernel)).abs() < 1e-12);
        prop_assert!((vbar - oracle::reveal(&env, &env.mass, i)).abs() < 1e-12);
        prop_assert!(v >= -1e-12);
        prop_assert!(vbar >= v - 1e-12);
        prop_assert!(ubar - u >= vbar - 1e-12);
    }

    #[test]
    fn coalition_value_is_monotone(env in env_strategy(3, 3)) {
        let prior = env.prior();
        let dp = env.problem();
        let n = env.sizes.len() - 1;
        let lattice = RevelationLattice::new(&dp, &prior).unwrap();
        prop_assert_eq!(lattice.coalition_value(SenderSet::empty()), 0.0);
        for s in SenderSet::subsets(n) {
            let f = lattice.coalition_value(s);
            prop_assert!((f - coalition_value(&dp, &prior, s).unwrap()).abs() < 1e-12);
            for i in 1..=n {
                prop_assert!(f <= lattice.coalition_value(s.with(i)) + 1e-10);
            }
        }
    }

    #[test]
    fn iterated_expectations(env in env_strategy(3, 3), pick in 0usize..100) {
        let prior = env.prior();
        let dp = env.problem();
        let n = env.sizes.len() - 1;
        prop_assume!(n >= 2);
        let i = 1 + pick % n;
        let j = 1 + (i % n);
        let direct = expected_residual_value(&dp, &prior.belief(), i).unwrap();
        let mut nested = 0.0;
        for v in 0..env.sizes[j] {
            let p = prior.event_mass(&[(j, v)]).unwrap();
            if p > 0.0 {
                let post = condition_on_components(&prior, &[(j, v)]).unwrap();
                nested += p * expected_residual_value(&dp, &post, i).unwrap();
            }
        }
        prop_assert!((direct - nested).abs() < 1e-9);
    }

    #[test]
    fn separable_environments_are_substitutes(p in 0.05f64..0.95, seed in 0u64..1000) {
        let env = scenario::pair_guess(p, 0.01);
        let su = check_substitutes(&env.problem, &env.prior, 20, seed).unwrap();
        prop_assert!(su.holds());
        prop_assert!(su.exact.margin.abs() < 1e-10);
        prop_assert!(check_mnat_concave(&env.problem, &env.prior).unwrap().holds);
    }
}
