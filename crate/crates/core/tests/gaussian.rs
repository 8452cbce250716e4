use approx::assert_abs_diff_eq;
use attention_core::aon_rates;
use attention_core::gaussian::*;
use attention_core::scenario::{gaussian_grid, GaussianGrid};
use proptest::prelude::*;

/// Posterior variance of ω₀ ~ N(0, 1/p0) after observing `y = h ω₀ + e`
/// with `e ~ N(0, cov)`, for one or two observations.
fn posterior_variance(p0: f64, h: &[f64], cov: &[[f64; 2]; 2]) -> f64 {
    let info = match h.len() {
        1 => h[0] * h[0] / cov[0][0],
        // Identical observations carry the information of one.
        2 if cov[0][0] * cov[1][1] - cov[0][1] * cov[1][0] < 1e-14 => h[0] * h[0] / cov[0][0],
        2 => {
            let det = cov[0][0] * cov[1][1] - cov[0][1] * cov[1][0];
            let inv = [
                [cov[1][1] / det, -cov[0][1] / det],
                [-cov[1][0] / det, cov[0][0] / det],
            ];
            (0..2)
                .map(|a| (0..2).map(|b| h[a] * inv[a][b] * h[b]).sum::<f64>())
                .sum()
        }
        _ => unreachable!(),
    };
    1.0 / (p0 + info)
}

/// Components `ωᵢ = ω₀ + k((1−α)εᵢ + α ε_c)`, the normalization scaling the
/// noise only.
fn additive_noise_values(cs: &CorrelatedScenario) -> CorrelatedValues {
    let a = cs.alpha;
    let k2 = 1.0 / ((1.0 - a).powi(2) + a * a);
    let var = |p: f64| k2 * ((1.0 - a).powi(2) / p + a * a / cs.pc);
    let common = k2 * a * a / cs.pc;
    let one = |p: f64| -posterior_variance(cs.p0, &[1.0], &[[var(p), 0.0], [0.0, 1.0]]);
    CorrelatedValues {
        prior: -1.0 / cs.p0,
        sender1: one(cs.p1),
        sender2: one(cs.p2),
        both: -posterior_variance(
            cs.p0,
            &[1.0, 1.0],
            &[[var(cs.p1), common], [common, var(cs.p2)]],
        ),
    }
}

/// Components `ωᵢ = k((1−α)sᵢ + α s_c)` with `s ~ N(ω₀, ·)`.
fn mixed_signal_values(cs: &CorrelatedScenario) -> CorrelatedValues {
    let a = cs.alpha;
    let var = |p: f64| (1.0 - a).powi(2) / p + a * a / cs.pc;
    let common = a * a / cs.pc;
    let one = |p: f64| -posterior_variance(cs.p0, &[1.0], &[[var(p), 0.0], [0.0, 1.0]]);
    CorrelatedValues {
        prior: -1.0 / cs.p0,
        sender1: one(cs.p1),
        sender2: one(cs.p2),
        both: -posterior_variance(
            cs.p0,
            &[1.0, 1.0],
            &[[var(cs.p1), common], [common, var(cs.p2)]],
        ),
    }
}

fn close(a: CorrelatedValues, b: CorrelatedValues, tol: f64) -> bool {
    (a.sender1 - b.sender1).abs() < tol
        && (a.sender2 - b.sender2).abs() < tol
        && (a.both - b.both).abs() < tol
}

#[test]
fn correlated_values_match_linear_gaussian_conditioning() {
    for &(p0, p1, p2, pc) in &[
        (1.0, 1.0, 1.0, 0.6),
        (0.5, 2.0, 1.0, 3.0),
        (2.0, 0.3, 0.8, 1.5),
    ] {
        for alpha in [0.0, 0.25, 0.5, 0.75, 1.0] {
            let cs = CorrelatedScenario::new(p0, p1, p2, pc, alpha, 0.01).unwrap();
            let v = correlated_values(&cs);
            assert!(close(v, additive_noise_values(&cs), 1e-12), "{cs:?}");
            if alpha == 0.0 || alpha == 1.0 {
                assert!(close(v, mixed_signal_values(&cs), 1e-12));
            }
        }
    }
    // The two readings part ways strictly inside (0, 1).
    let cs = CorrelatedScenario::new(1.0, 1.0, 1.0, 0.6, 0.5, 0.01).unwrap();
    assert!(!close(
        correlated_values(&cs),
        mixed_signal_values(&cs),
        1e-6
    ));
}

#[test]
fn precise_common_signal_raises_payoff_in_alpha() {
    let (p0, p1, p2) = (1.0, 1.0, 0.5);
    let pc = 2.0;
    assert!(pc > p1 + p2);
    let mut last = f64::NEG_INFINITY;
    for k in 0..=20 {
        let cs = CorrelatedScenario::new(p0, p1, p2, pc, k as f64 / 20.0, 0.01).unwrap();
        let v = payoff_at_alpha(&cs);
        assert!(v > last);
        last = v;
    }
}

#[test]
fn reveal_value_matches_quadrature() {
    // Composite Simpson of E|ω| for ω ~ N(0, 1/p) over ±12 sd.
    for p in [0.25, 1.0, 4.0] {
        let sd = 1.0 / f64::sqrt(p);
        let n = 20_000;
        let (a, b) = (-12.0 * sd, 12.0 * sd);
        let h = (b - a) / n as f64;
        let f =
            |x: f64| x.abs() * (-0.5 * p * x * x).exp() * (p / (2.0 * std::f64::consts::PI)).sqrt();
        let mut s = f(a) + f(b);
        for k in 1..n {
            s += f(a + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
        }
        let quad = s * h / 3.0;
        assert_abs_diff_eq!(
            binary_action_rate(p, 0.1).unwrap().reveal_value,
            quad,
            epsilon = 1e-9
        );
    }
}

#[test]
fn bridge_monte_carlo_matches_schedule() {
    let r = bridge_mc_check(1.0, 0.1, 10_000, 42).unwrap();
    assert_eq!(r.rows.len(), 11);
    for row in &r.rows {
        assert!(row.within(3.0), "{row:?}");
    }
    assert!(r.passed);
    assert_eq!(r, bridge_mc_check(1.0, 0.1, 10_000, 42).unwrap());
}

#[test]
fn discretized_grid_reproduces_closed_form_rates() {
    let c = 0.01;
    let env = gaussian_grid(1.0, &[1.0, 1.0], GaussianGrid::default(), c);
    let p = aon_rates(&env.problem, &env.prior, c, false).unwrap();
    let closed = gaussian_rates(&GaussianScenario::new(1.0, vec![1.0, 1.0], c).unwrap());
    for i in 1..=2 {
        let rel = (p.rate(0, i).unwrap() - closed.rates[i - 1]).abs() / closed.rates[i - 1];
        assert!(
            rel < 0.02,
            "sender {i}: {} vs {}",
            p.rate(0, i).unwrap(),
            closed.rates[i - 1]
        );
    }
    let payoff = gaussian_receiver_payoff(&GaussianScenario::new(1.0, vec![1.0, 1.0], c).unwrap());
    assert!((p.receiver_payoff - payoff).abs() / payoff.abs() < 0.02);
}

proptest! {
    #[test]
    fn payoff_is_information_minus_attention(
        p0 in 0.1f64..5.0,
        ps in prop::collection::vec(0.1f64..5.0, 0..5),
        c in 1e-4f64..1.0,
    ) {
        let s = GaussianScenario::new(p0, ps, c).unwrap();
        let rates = gaussian_rates(&s);
        let attention: f64 = rates.rates.iter().map(|r| c / r).sum();
        let lhs = gaussian_receiver_payoff(&s);
        prop_assert!((lhs - (-1.0 / s.total_precision() - attention)).abs() < 1e-12);
    }

    #[test]
    fn threshold_below_both_precisions(p0 in 0.1f64..5.0, p1 in 0.1f64..5.0, p2 in 0.1f64..5.0) {
        prop_assert!(correlation_threshold(p0, p1, p2) < p1.min(p2));
    }
}
