//! Acceptance suite. Prints one PASS/FAIL line per criterion followed by its
//! sub-checks, and exits non-zero if any sub-check fails unexpectedly.
//!
//! A sub-check may be marked `expected_failure` when the target cannot hold
//! on the stated environment; it still makes its criterion FAIL, but the
//! process only errors if the recorded reason stops being true.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use attention_cli::cmd_simulate;
use attention_cli::commands::{OutArgs, SimulateArgs};
use attention_core::gaussian::{
    bridge_mc_check, correlation_threshold, gaussian_rates, gaussian_receiver_payoff,
    large_n_gaussian, payoff_at_alpha, symmetry_gap, CorrelatedScenario, GaussianScenario,
    BRIDGE_CHECKS,
};
use attention_core::largemarket::{
    decision_error_curve, fit_exponential_rate, residual_value_curve, CurveMode, IIDEnvironment,
};
use attention_core::scenario::{self, gaussian_grid, GaussianGrid};
use attention_core::simulate::{
    holdup_demo, monte_carlo, MonteCarloSummary, ReceiverPolicy, SenderPolicy, VisitOrder,
};
use attention_core::{aon_rates, check_mnat_concave, check_substitutes, monopoly_rate};

type Res<T> = Result<T, Box<dyn std::error::Error>>;
type Criterion = (&'static str, fn() -> Res<Checks>);

struct Sub {
    name: String,
    pass: bool,
    detail: String,
    /// Why this sub-check is known not to hold, with whether that reason
    /// was re-verified on this run.
    expected_failure: Option<(String, bool)>,
}

#[derive(Default)]
struct Checks(Vec<Sub>);

impl Checks {
    fn add(&mut self, name: &str, pass: bool, detail: impl Into<String>) {
        self.0.push(Sub {
            name: name.into(),
            pass,
            detail: detail.into(),
            expected_failure: None,
        });
    }

    fn add_known(
        &mut self,
        name: &str,
        pass: bool,
        detail: impl Into<String>,
        reason: &str,
        reason_holds: bool,
    ) {
        self.0.push(Sub {
            name: name.into(),
            pass,
            detail: detail.into(),
            expected_failure: Some((reason.into(), reason_holds)),
        });
    }

    fn runtime(&mut self, started: Instant, limit: Duration) {
        let t = started.elapsed();
        self.add(
            "runtime",
            t < limit,
            format!("{:.2} s (limit {} s)", t.as_secs_f64(), limit.as_secs()),
        );
    }
}

fn within(mean: f64, se: f64, target: f64) -> bool {
    (mean - target).abs() <= 3.0 * se
}

fn mc_detail(mean: f64, se: f64, target: f64) -> String {
    format!(
        "{mean:.5} ± {se:.5} vs {target} (z = {:.2})",
        (mean - target) / se
    )
}

fn criterion_1() -> Res<Checks> {
    let started = Instant::now();
    let mut c = Checks::default();
    let env = scenario::hypothesis_testing(1.0, 1.0, 0.5, 0.1);
    let m = monopoly_rate(&env.problem, &env.prior, 0.1)?;
    c.add(
        "rate 0.2",
        (m.rate - 0.2).abs() < 1e-12,
        format!("λ = {}", m.rate),
    );
    let s = monte_carlo(
        &env.problem,
        &env.prior,
        0.1,
        vec![SenderPolicy::AonEquilibrium],
        ReceiverPolicy::EquilibriumOrder(VisitOrder::LowestIndex),
        100_000,
        2024,
    )?;
    c.add(
        "mean visits 5",
        within(s.visit_mean[0], s.visit_se[0], 5.0),
        mc_detail(s.visit_mean[0], s.visit_se[0], 5.0),
    );
    c.add(
        "receiver payoff -0.5",
        within(s.receiver_mean, s.receiver_se, -0.5),
        mc_detail(s.receiver_mean, s.receiver_se, -0.5),
    );
    c.runtime(started, Duration::from_secs(10));
    Ok(c)
}

fn criterion_2() -> Res<Checks> {
    let started = Instant::now();
    let mut c = Checks::default();
    let env = scenario::pair_guess(0.7, 0.1);
    let p = aon_rates(&env.problem, &env.prior, 0.1, false)?;
    c.add(
        "exact payoffs 3, 3, 1.4",
        p.sender_payoffs.iter().all(|v| (v - 3.0).abs() < 1e-9)
            && (p.receiver_payoff - 1.4).abs() < 1e-9,
        format!(
            "senders {:?}, receiver {}",
            p.sender_payoffs, p.receiver_payoff
        ),
    );
    let orders = [
        ("lowest", VisitOrder::LowestIndex, 1),
        ("perm:2,1", VisitOrder::Permutation(vec![2, 1]), 2),
        ("random", VisitOrder::Random, 3),
    ];
    let mut runs: Vec<(&str, MonteCarloSummary)> = Vec::new();
    for (name, order, seed) in orders {
        let s = monte_carlo(
            &env.problem,
            &env.prior,
            0.1,
            vec![SenderPolicy::AonEquilibrium; 2],
            ReceiverPolicy::EquilibriumOrder(order),
            100_000,
            seed,
        )?;
        let ok = (0..2).all(|i| within(s.visit_mean[i], s.visit_se[i], 3.0))
            && within(s.receiver_mean, s.receiver_se, 1.4);
        c.add(
            &format!("monte carlo, {name} order"),
            ok,
            format!(
                "visits {:.4} / {:.4}, receiver {}",
                s.visit_mean[0],
                s.visit_mean[1],
                mc_detail(s.receiver_mean, s.receiver_se, 1.4)
            ),
        );
        runs.push((name, s));
    }
    let mut worst: f64 = 0.0;
    for (_, a) in &runs {
        for (_, b) in &runs {
            for i in 0..2 {
                worst = worst.max(
                    (a.visit_mean[i] - b.visit_mean[i]).abs() / a.visit_se[i].hypot(b.visit_se[i]),
                );
            }
            worst = worst.max(
                (a.receiver_mean - b.receiver_mean).abs() / a.receiver_se.hypot(b.receiver_se),
            );
        }
    }
    c.add(
        "order invariance",
        worst <= 3.0,
        format!("largest pairwise |z| = {worst:.2}"),
    );
    c.runtime(started, Duration::from_secs(30));
    Ok(c)
}

fn criterion_3() -> Res<Checks> {
    let mut c = Checks::default();
    // Three iid binary signals always break the value condition (two agreeing
    // signals leave the third unable to move the decision), so the
    // two-signal environment is joined by a three-sender Gaussian grid.
    let envs = [
        (
            "binary signals",
            scenario::binary_signals(0.8, 0.55, 2, 0.01),
        ),
        (
            "gaussian grid, 3 senders",
            gaussian_grid(
                1.0,
                &[1.0, 2.0, 0.5],
                GaussianGrid {
                    points: 7,
                    actions: 25,
                    span: 3.0,
                },
                0.001,
            ),
        ),
    ];
    for (name, env) in envs {
        let p = aon_rates(&env.problem, &env.prior, env.cost, false)?;
        let g = &p.graph;
        let (mut drift, mut worst_level, mut transitions): (f64, f64, usize) =
            (0.0, f64::INFINITY, 0);
        for st in g.states() {
            let remaining = g.space().senders().difference(st.revealed);
            for i in remaining.iter() {
                let here = p.rate(st.id, i).ok_or("missing rate")?;
                for j in remaining.without(i).iter() {
                    let mut recip = 0.0;
                    let mut level = 0.0;
                    for (_, q, s) in g.successors(st.id, j) {
                        let r = p.rate(s, i).ok_or("missing rate")?;
                        recip += q / r;
                        level += q * r;
                    }
                    drift = drift.max((recip - 1.0 / here).abs() / (1.0 / here).max(1.0));
                    worst_level = worst_level.min(level - here);
                    transitions += 1;
                }
            }
        }
        c.add(
            &format!("{name}: E[1/λ] constant"),
            transitions > 0 && drift <= 1e-9,
            format!("max drift {drift:.2e} over {transitions} transitions"),
        );
        c.add(
            &format!("{name}: E[λ] non-decreasing"),
            worst_level >= -1e-12,
            format!("min E[λ'] − λ = {worst_level:.2e}"),
        );
    }
    Ok(c)
}

fn criterion_4() -> Res<Checks> {
    let started = Instant::now();
    let mut c = Checks::default();
    let coin = scenario::coin_match(0.1);
    let su = check_substitutes(&coin.problem, &coin.prior, 0, 0)?;
    let w = su.exact.witnesses.first();
    c.add(
        "coin-match fails substitutes with witness 0 vs 0.5",
        !su.exact.holds && w.is_some_and(|w| w.lhs.abs() < 1e-12 && (w.rhs - 0.5).abs() < 1e-12),
        format!("{:?}", w.map(|w| (w.lhs, w.rhs))),
    );
    let mn = check_mnat_concave(&coin.problem, &coin.prior)?;
    let w = mn.witnesses.first();
    c.add(
        "coin-match fails M♮ with witness 0.5 + 0 > 0",
        !mn.holds && w.is_some_and(|w| (w.lhs - 0.5).abs() < 1e-12 && w.rhs.abs() < 1e-12),
        format!("{:?}", w.map(|w| (w.context.clone(), w.lhs, w.rhs))),
    );
    let pair = scenario::pair_guess(0.7, 0.1);
    let su = check_substitutes(&pair.problem, &pair.prior, 0, 0)?;
    let mn = check_mnat_concave(&pair.problem, &pair.prior)?;
    c.add(
        "pair-guess passes both at margin 0",
        su.exact.holds && mn.holds && su.exact.margin == 0.0 && mn.margin == 0.0,
        format!(
            "substitutes margin {}, M♮ margin {}",
            su.exact.margin, mn.margin
        ),
    );
    let h = holdup_demo(0.1)?;
    c.add(
        "hold-up: receiver value 0.5, stopping strictly optimal",
        (h.receiver_value - 0.5).abs() < 1e-12 && h.stop_strictly_optimal,
        format!(
            "value {}, best continuation {}",
            h.receiver_value, h.best_continue_value
        ),
    );
    c.runtime(started, Duration::from_secs(1));
    Ok(c)
}

fn criterion_5() -> Res<Checks> {
    let started = Instant::now();
    let mut c = Checks::default();
    let s = GaussianScenario::new(1.0, vec![1.0, 1.0], 0.01)?;
    let rates = gaussian_rates(&s);
    let payoff = gaussian_receiver_payoff(&s);
    c.add(
        "closed form λ = 0.06, payoff -2/3",
        rates.rates.iter().all(|r| (r - 0.06).abs() < 1e-12) && (payoff + 2.0 / 3.0).abs() < 1e-12,
        format!("λ = {:?}, payoff {payoff}", rates.rates),
    );
    let env = gaussian_grid(1.0, &[1.0, 1.0], GaussianGrid::default(), 0.01);
    let p = aon_rates(&env.problem, &env.prior, 0.01, false)?;
    let mut worst: f64 = 0.0;
    for i in 1..=2 {
        worst = worst.max((p.rate(0, i).ok_or("missing rate")? - 0.06).abs() / 0.06);
    }
    worst = worst.max((p.receiver_payoff - payoff).abs() / payoff.abs());
    c.add(
        "grid cross-check within 2%",
        worst < 0.02,
        format!("largest relative error {:.3}%", 100.0 * worst),
    );
    let two = symmetry_gap(1.0, 2.0, 2, 0.05)?;
    let three = symmetry_gap(1.0, 3.0, 3, 0.1)?;
    c.add(
        "equal allocation maximizes payoff",
        two.symmetric_is_max && three.symmetric_is_max,
        format!(
            "{} and {} allocations checked, best {:?}",
            two.allocations_checked, three.allocations_checked, two.best_allocation
        ),
    );
    let threshold = correlation_threshold(1.0, 1.0, 1.0);
    let gain = |pc: f64| -> Res<f64> {
        let at = |a: f64| {
            CorrelatedScenario::new(1.0, 1.0, 1.0, pc, a, 0.01).map(|cs| payoff_at_alpha(&cs))
        };
        Ok(at(1.0)? - at(0.0)?)
    };
    let (low, high) = (gain(0.4)?, gain(0.6)?);
    c.add(
        "α ordering flips across p̄ = 0.5",
        (threshold - 0.5).abs() < 1e-12 && low < 0.0 && high > 0.0,
        format!("p̄ = {threshold}; U(1) − U(0) = {low:.5} at pc 0.4, {high:.5} at pc 0.6"),
    );
    c.runtime(started, Duration::from_secs(60));
    Ok(c)
}

fn criterion_6() -> Res<Checks> {
    let mut c = Checks::default();
    let rows = large_n_gaussian(1.0, 1.0, 1..=10_000)?;
    let err = rows
        .iter()
        .map(|r| (r.attention_cost - 1.0 / (r.n as f64 + 1.0)).abs())
        .fold(0.0, f64::max);
    c.add(
        "cost = 1/(n+1)",
        err <= 1e-12,
        format!("max |error| {err:e} over n = 1..10000"),
    );
    let far = large_n_gaussian(1.0, 1.0, [1_000_000])?[0].attention_cost;
    let decreasing = rows
        .windows(2)
        .all(|w| w[1].attention_cost < w[0].attention_cost);
    c.add(
        "cost tends to 0",
        decreasing && far < 1e-5,
        format!("cost at n = 10⁶: {far:e}"),
    );
    Ok(c)
}

fn strictly_decreasing(v: &[f64]) -> (bool, usize) {
    let rises = v.windows(2).filter(|w| w[1] >= w[0]).count();
    (rises == 0, rises)
}

fn criterion_7() -> Res<Checks> {
    let started = Instant::now();
    let mut c = Checks::default();
    let env = IIDEnvironment::default_abstention();
    let ns: Vec<usize> = (1..=400).collect();
    let mode = CurveMode::default();
    let error = decision_error_curve(&env, &ns, mode)?;
    let residual = residual_value_curve(&env, &ns, mode)?;
    let err_v: Vec<f64> = error.iter().map(|p| p.value).collect();
    let scaled: Vec<f64> = residual.iter().map(|p| p.scaled).collect();
    c.add(
        "all points exact",
        error.iter().chain(&residual).all(|p| p.exact),
        "binary signals: n + 1 multisets per n",
    );

    let (dec, rises) = strictly_decreasing(&err_v);
    c.add(
        "decision error decreasing",
        dec,
        format!("{rises} rises over n = 1..400"),
    );
    c.add(
        "decision error terminal < 1e-3",
        err_v[399] < 1e-3,
        format!("{:e} at n = 400", err_v[399]),
    );
    let fit_err = fit_exponential_rate(
        &ns.iter()
            .copied()
            .zip(err_v.iter().copied())
            .collect::<Vec<_>>(),
    )?;
    c.add(
        "decision error tail fit r² ≥ 0.98",
        fit_err.r_squared >= 0.98,
        format!("r² = {:.6}, ρ = {:.5}", fit_err.r_squared, fit_err.rho),
    );

    // The residual of the (2k+1)-th signal equals that of the 2k-th: after
    // an even count the next signal can at best break a tie and the one
    // after restores it. n·E[v̄] therefore rises at every even n.
    let (dec, rises) = strictly_decreasing(&scaled);
    // G is O(1), so the tie holds to rounding of a difference of O(1) terms.
    let parity_tie =
        (1..200).all(|k| (residual[2 * k - 1].value - residual[2 * k].value).abs() <= 1e-12);
    let rises_at_even = scaled
        .windows(2)
        .enumerate()
        .filter(|(_, w)| w[1] >= w[0])
        .all(|(k, _)| (k + 1) % 2 == 0);
    // Smallest n from which both parity subsequences strictly decrease.
    let settled = (1..=400)
        .find(|&n0| {
            (0..2).all(|r| {
                let sub: Vec<f64> = (n0 + r..=400).step_by(2).map(|n| scaled[n - 1]).collect();
                strictly_decreasing(&sub).0
            })
        })
        .unwrap_or(400);
    c.add_known(
        "n·E[v̄] decreasing",
        dec,
        format!("{rises} rises, all at even n → n+1; both parity subsequences decrease from n = {settled}"),
        "E[v̄] at n = 2k and 2k+1 coincide, so n·E[v̄] rises at every even n",
        parity_tie && rises_at_even,
    );
    c.add(
        "n·E[v̄] terminal < 1e-3",
        scaled[399] < 1e-3,
        format!("{:e} at n = 400", scaled[399]),
    );
    let fit_res = fit_exponential_rate(
        &ns.iter()
            .copied()
            .zip(scaled.iter().copied())
            .collect::<Vec<_>>(),
    )?;
    c.add(
        "n·E[v̄] tail fit r² ≥ 0.98",
        fit_res.r_squared >= 0.98,
        format!("r² = {:.6}, ρ = {:.5}", fit_res.r_squared, fit_res.rho),
    );

    let reference: Vec<(usize, f64)> = ns.iter().map(|&n| (n, 1.0 / (n as f64 + 1.0))).collect();
    let fit_ref = fit_exponential_rate(&reference)?;
    let misfit = |r2: f64| 1.0 - r2;
    let worse = misfit(fit_ref.r_squared)
        >= 10.0 * misfit(fit_err.r_squared).max(misfit(fit_res.r_squared));
    c.add(
        "1/(n+1) fits visibly worse",
        worse,
        format!(
            "1 − r²: {:.2e} for 1/(n+1) vs {:.2e} and {:.2e}",
            misfit(fit_ref.r_squared),
            misfit(fit_err.r_squared),
            misfit(fit_res.r_squared)
        ),
    );
    c.runtime(started, Duration::from_secs(60));
    Ok(c)
}

fn criterion_8() -> Res<Checks> {
    let started = Instant::now();
    let mut c = Checks::default();
    let r = bridge_mc_check(1.0, 0.1, 10_000, 42)?;
    let worst = r
        .rows
        .iter()
        .filter(|row| row.analytic > 0.0)
        .map(|row| (row.empirical - row.analytic).abs() / row.standard_error)
        .fold(0.0, f64::max);
    c.add(
        "11 checkpoints within 3 SE",
        r.rows.len() == BRIDGE_CHECKS && r.passed,
        format!(
            "{} points, largest |z| = {worst:.2} before the horizon",
            r.rows.len()
        ),
    );
    let last = r.rows.last().ok_or("no rows")?;
    c.add(
        "schedule 1/p − ct ends at (10, 0)",
        (last.time - 10.0).abs() < 1e-12
            && last.analytic.abs() < 1e-12
            && (r.rows[0].analytic - 1.0).abs() < 1e-12,
        format!("({}, {})", last.time, last.analytic),
    );
    c.runtime(started, Duration::from_secs(30));
    Ok(c)
}

fn read_dir(dir: &Path) -> Res<BTreeMap<String, Vec<u8>>> {
    let mut files = BTreeMap::new();
    for e in fs::read_dir(dir)? {
        let e = e?;
        files.insert(
            e.file_name().to_string_lossy().into_owned(),
            fs::read(e.path())?,
        );
    }
    Ok(files)
}

fn criterion_9() -> Res<Checks> {
    let mut c = Checks::default();
    let scenario =
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/pair_guess.toml");
    let tmp = std::env::temp_dir().join(format!("attn-acceptance-{}", std::process::id()));
    let mut outputs = Vec::new();
    for run in ["a", "b"] {
        let args = SimulateArgs {
            scenario: scenario.clone(),
            out: OutArgs { out: tmp.join(run) },
            seed: Some(7),
            replications: Some(20_000),
            force: false,
            receiver_order: Some("random".into()),
            round_cap: None,
        };
        cmd_simulate(&args)?;
        outputs.push(read_dir(&tmp.join(run))?);
    }
    let _ = fs::remove_dir_all(&tmp);
    let csvs: Vec<&String> = outputs[0].keys().filter(|k| k.ends_with(".csv")).collect();
    c.add(
        "identical CSV bytes on rerun",
        !csvs.is_empty()
            && csvs
                .iter()
                .all(|k| outputs[0].get(*k) == outputs[1].get(*k)),
        format!("{} files compared: {csvs:?}", csvs.len()),
    );
    c.add(
        "identical report",
        outputs[0].get("report.json") == outputs[1].get("report.json"),
        "report.json",
    );
    Ok(c)
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("monopoly extraction", criterion_1),
        ("competitive payoffs", criterion_2),
        ("martingale invariants", criterion_3),
        ("substitutes gate", criterion_4),
        ("gaussian closed forms", criterion_5),
        ("large-n gaussian", criterion_6),
        ("large market", criterion_7),
        ("brownian bridge", criterion_8),
        ("determinism", criterion_9),
    ];
    let mut passed = 0;
    let mut unexpected = 0;
    for (k, (title, f)) in criteria.iter().enumerate() {
        let started = Instant::now();
        let result = f();
        let secs = started.elapsed().as_secs_f64();
        match result {
            Ok(checks) => {
                let ok = checks.0.iter().all(|s| s.pass);
                passed += usize::from(ok);
                println!(
                    "criterion {}: {} {title} ({secs:.2} s)",
                    k + 1,
                    if ok { "PASS" } else { "FAIL" }
                );
                for s in &checks.0 {
                    let mark = if s.pass { "ok  " } else { "FAIL" };
                    println!("    {mark} {}: {}", s.name, s.detail);
                    match &s.expected_failure {
                        Some((reason, holds)) => {
                            println!("         known: {reason} (re-verified: {holds})");
                            if s.pass || !holds {
                                unexpected += 1;
                            }
                        }
                        None if !s.pass => unexpected += 1,
                        None => {}
                    }
                }
            }
            Err(e) => {
                println!(
                    "criterion {}: FAIL {title} ({secs:.2} s)\n    error: {e}",
                    k + 1
                );
                unexpected += 1;
            }
        }
    }
    println!(
        "{passed} of {} criteria pass; {unexpected} unexpected failures",
        criteria.len()
    );
    if unexpected > 0 {
        std::process::exit(1);
    }
}
