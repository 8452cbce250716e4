//! Canonical information environments used across the crate, the CLI and
//! the tests.

use crate::decision::DecisionProblem;
use crate::environment::{JointPrior, JointSpace};

/// A finite environment: prior over the product space, the receiver's
/// decision problem and the attention cost per consultation.
#[derive(Debug, Clone)]
pub struct InformationEnvironment {
    pub prior: JointPrior,
    pub problem: DecisionProblem,
    pub cost: f64,
}

impl InformationEnvironment {
    pub fn num_senders(&self) -> usize {
        self.prior.num_senders()
    }
}

fn labels(xs: &[&str]) -> Vec<String> {
    xs.iter().map(|s| s.to_string()).collect()
}

/// Two fair coins; the receiver guesses whether they match. Perfect
/// complements.
pub fn coin_match(cost: f64) -> InformationEnvironment {
    let space = JointSpace::from_labels(&["*"], &[vec!["H", "T"], vec!["H", "T"]]).unwrap();
    let problem = DecisionProblem::from_fn(&space, ["match", "differ"], |a, w| {
        f64::from(u8::from((a == 0) == (w[1] == w[2])))
    })
    .unwrap();
    InformationEnvironment {
        prior: JointPrior::new(space, vec![0.25; 4]).unwrap(),
        problem,
        cost,
    }
}

/// Two independent coins with `P(H) = p_heads`; the receiver guesses both
/// and earns one unit per correct guess. Additively separable.
pub fn pair_guess(p_heads: f64, cost: f64) -> InformationEnvironment {
    let space = JointSpace::from_labels(&["*"], &[vec!["H", "T"], vec!["H", "T"]]).unwrap();
    let problem = DecisionProblem::from_fn(&space, ["HH", "HT", "TH", "TT"], |a, w| {
        f64::from(u8::from(a / 2 == w[1]) + u8::from(a % 2 == w[2]))
    })
    .unwrap();
    let coin = vec![p_heads, 1.0 - p_heads];
    InformationEnvironment {
        prior: JointPrior::independent(space, &[vec![1.0], coin.clone(), coin]).unwrap(),
        problem,
        cost,
    }
}

/// Single sender who knows which of two hypotheses holds; wrong rejections
/// cost `alpha` (type I) or `beta` (type II); `q = P(H1)`.
pub fn hypothesis_testing(alpha: f64, beta: f64, q: f64, cost: f64) -> InformationEnvironment {
    let space = JointSpace::from_labels(&["H0", "H1"], &[vec!["H0", "H1"]]).unwrap();
    let problem = DecisionProblem::by_state(
        &space,
        labels(&["accept-H0", "accept-H1"]),
        vec![vec![0.0, -beta], vec![-alpha, 0.0]],
    )
    .unwrap();
    let identity = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
    InformationEnvironment {
        prior: JointPrior::from_conditionals(space, &[1.0 - q, q], &[identity]).unwrap(),
        problem,
        cost,
    }
}

/// Binary payoff state with a uniform prior and `n` conditionally iid binary
/// signals of the given accuracy. Actions: guess 0, guess 1 (utility 1 when
/// right) and abstain (utility `abstain` in both states).
pub fn binary_signals(accuracy: f64, abstain: f64, n: usize, cost: f64) -> InformationEnvironment {
    let senders: Vec<Vec<&str>> = (0..n).map(|_| vec!["0", "1"]).collect();
    let space = JointSpace::from_labels(&["0", "1"], &senders).unwrap();
    let row = vec![
        vec![accuracy, 1.0 - accuracy],
        vec![1.0 - accuracy, accuracy],
    ];
    let problem = DecisionProblem::by_state(
        &space,
        labels(&["guess-0", "guess-1", "abstain"]),
        vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![abstain, abstain]],
    )
    .unwrap();
    InformationEnvironment {
        prior: JointPrior::from_conditionals(space, &[0.5, 0.5], &vec![row; n]).unwrap(),
        problem,
        cost,
    }
}

/// Gaussian-quadratic environment discretized on grids.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianGrid {
    /// Grid points per component.
    pub points: usize,
    /// Number of actions on an even grid over the payoff-state range.
    pub actions: usize,
    /// Half-width of each grid in standard deviations of the component.
    pub span: f64,
}

impl Default for GaussianGrid {
    fn default() -> Self {
        GaussianGrid {
            points: 41,
            actions: 401,
            span: 4.0,
        }
    }
}

/// `ω₀ ~ N(0, 1/p0)`, `ωᵢ | ω₀ ~ N(ω₀, 1/pᵢ)`, `u(a, ω₀) = -(a - ω₀)²`, all
/// truncated onto even grids with density weights.
pub fn gaussian_grid(
    p0: f64,
    precisions: &[f64],
    grid: GaussianGrid,
    cost: f64,
) -> InformationEnvironment {
    let even = |half: f64| -> Vec<f64> {
        (0..grid.points)
            .map(|k| -half + 2.0 * half * k as f64 / (grid.points - 1) as f64)
            .collect()
    };
    let sd0 = p0.recip().sqrt();
    let state_pts = even(grid.span * sd0);
    let fmt = |x: &f64| format!("{x:.6}");
    let state_labels: Vec<String> = state_pts.iter().map(fmt).collect();
    let mut sender_pts = Vec::new();
    let mut sender_labels = Vec::new();
    for &p in precisions {
        let pts = even(grid.span * (p0.recip() + p.recip()).sqrt());
        sender_labels.push(pts.iter().map(fmt).collect::<Vec<_>>());
        sender_pts.push(pts);
    }
    let space = JointSpace::from_labels(&state_labels, &sender_labels).unwrap();
    let density = |x: f64, mean: f64, precision: f64| (-0.5 * precision * (x - mean).powi(2)).exp();
    let normalize = |v: Vec<f64>| {
        let t: f64 = v.iter().sum();
        v.into_iter().map(|x| x / t).collect::<Vec<_>>()
    };
    let marginal = normalize(state_pts.iter().map(|&x| density(x, 0.0, p0)).collect());
    let conditionals: Vec<Vec<Vec<f64>>> = precisions
        .iter()
        .zip(&sender_pts)
        .map(|(&p, pts)| {
            state_pts
                .iter()
                .map(|&w0| normalize(pts.iter().map(|&x| density(x, w0, p)).collect()))
                .collect()
        })
        .collect();
    let half = grid.span * sd0;
    let acts: Vec<f64> = (0..grid.actions)
        .map(|k| -half + 2.0 * half * k as f64 / (grid.actions - 1) as f64)
        .collect();
    let problem = DecisionProblem::by_state(
        &space,
        acts.iter().map(|a| format!("{a:.6}")).collect(),
        acts.iter()
            .map(|&a| state_pts.iter().map(|&w| -(a - w).powi(2)).collect())
            .collect(),
    )
    .unwrap();
    InformationEnvironment {
        prior: JointPrior::from_conditionals(space, &marginal, &conditionals).unwrap(),
        problem,
        cost,
    }
}
