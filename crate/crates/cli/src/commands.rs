//! The four subcommands. Each returns a [`RunReport`] after every output
//! file has been written; `report.json` is written last.

use std::path::PathBuf;
use std::time::{Duration, Instant};

use attention_core::gaussian::{
    allocation_grid, bridge_mc_check, correlated_values, correlation_threshold, gaussian_rates,
    gaussian_receiver_payoff, large_n_gaussian, payoff_at_alpha, symmetry_gap, CorrelatedScenario,
    GaussianScenario,
};
use attention_core::largemarket::{
    decision_error_curve, fit_exponential_rate, residual_value_curve, CurveMode, IIDEnvironment,
    DEFAULT_BUDGET,
};
use attention_core::simulate::{Game, ReceiverPolicy, SenderPolicy, VisitOrder, DEFAULT_ROUND_CAP};
use attention_core::{
    aon_rates, check_assumption2, check_mnat_concave, check_substitutes, marginal_prices,
    ConditionReport, EquilibriumProfile, InformationEnvironment,
};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::error::{CliError, EXIT_CONDITION, EXIT_OK};
use crate::output::{num, render_table, schema, OutDir};
use crate::scenario::{parse_order, GaussianBlock, Scenario};

pub const DEFAULT_REPLICATIONS: u64 = 10_000;
pub const DEFAULT_SU_SAMPLES: usize = 200;
const SHOWN_WITNESSES: usize = 3;

#[derive(Debug, Parser)]
#[command(
    name = "attn",
    version,
    about = "Equilibrium, simulation and sweeps for competition over attention"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check the structural conditions of a finite scenario.
    Check(CheckArgs),
    /// Solve for the all-or-nothing equilibrium (or the Gaussian closed forms).
    Solve(SolveArgs),
    /// Monte Carlo of the dynamic game under the equilibrium profile.
    Simulate(SimulateArgs),
    /// Comparative-statics curves.
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Args)]
pub struct OutArgs {
    /// Output directory.
    #[arg(long, env = "ATTN_OUT_DIR", default_value = "attn-out")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct CheckArgs {
    /// Scenario file (TOML).
    #[arg(long)]
    pub scenario: PathBuf,
    #[command(flatten)]
    pub out: OutArgs,
    /// Random beliefs for the sampled substitutes layer.
    #[arg(long, default_value_t = DEFAULT_SU_SAMPLES)]
    pub samples: usize,
    /// Seed for the sampled layer; falls back to the scenario, then 0.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Args)]
pub struct SolveArgs {
    /// Scenario file (TOML).
    #[arg(long)]
    pub scenario: PathBuf,
    #[command(flatten)]
    pub out: OutArgs,
    /// Solve even when the substitutes check fails; the profile is flagged.
    #[arg(long)]
    pub force: bool,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    /// Scenario file (TOML).
    #[arg(long)]
    pub scenario: PathBuf,
    #[command(flatten)]
    pub out: OutArgs,
    /// Falls back to the scenario's simulation.seed, then 0.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Falls back to the scenario, then 10000.
    #[arg(long)]
    pub replications: Option<u64>,
    /// Simulate even when the substitutes check fails.
    #[arg(long)]
    pub force: bool,
    /// lowest, random, or perm:<i,j,...> (indices or sender names).
    #[arg(long)]
    pub receiver_order: Option<String>,
    /// Rounds per episode before the run aborts (default 1000000).
    #[arg(long)]
    pub round_cap: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepKind {
    LargeN,
    Alpha,
    Symmetry,
    Bridge,
    LargeMarket,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[arg(long, value_enum)]
    pub sweep_kind: SweepKind,
    /// Scenario whose gaussian block and cost parametrize the sweep.
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    #[command(flatten)]
    pub out: OutArgs,
    /// Grid step for alpha (default 0.05) and symmetry (default 0.05) sweeps.
    #[arg(long)]
    pub grid_step: Option<f64>,
    /// Largest n for large-n (default 50) and large-market (default 400).
    #[arg(long)]
    pub n_max: Option<usize>,
    /// Common-signal precisions for the alpha sweep; repeatable.
    #[arg(long)]
    pub pc: Vec<f64>,
    /// Seed for the bridge and sampled large-market points.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Monte Carlo paths for the bridge sweep (default 10000).
    #[arg(long)]
    pub replications: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProfileSummary {
    pub verified: bool,
    pub cost: f64,
    pub states: usize,
    pub root_rates: Vec<Option<f64>>,
    pub sender_payoffs: Vec<f64>,
    pub receiver_payoff: f64,
    pub full_value: f64,
    pub total_visits: f64,
}

impl ProfileSummary {
    fn new(p: &EquilibriumProfile) -> Self {
        ProfileSummary {
            verified: p.verified,
            cost: p.cost,
            states: p.graph.len(),
            root_rates: p.rates[p.graph.root()][1..].to_vec(),
            sender_payoffs: p.sender_payoffs.clone(),
            receiver_payoff: p.receiver_payoff,
            full_value: p.full_value,
            total_visits: p.total_visits(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationSummary {
    pub replications: u64,
    pub seed: u64,
    pub receiver_order: String,
    pub round_cap: u64,
    pub theory_visits: Vec<f64>,
    pub visit_mean: Vec<f64>,
    pub visit_se: Vec<f64>,
    pub theory_receiver: f64,
    pub receiver_mean: f64,
    pub receiver_se: f64,
}

/// Machine-readable record of one command. Wall-clock time is kept out of
/// the serialized form so reruns produce identical bytes.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub command: String,
    pub scenario: Option<String>,
    pub exit_code: i32,
    pub conditions: Vec<ConditionReport>,
    pub profile: Option<ProfileSummary>,
    pub monte_carlo: Option<SimulationSummary>,
    pub details: Option<serde_json::Value>,
    pub files: Vec<String>,
    #[serde(skip)]
    pub text: String,
    #[serde(skip)]
    pub elapsed: Duration,
}

impl RunReport {
    fn new(command: &str, scenario: Option<String>) -> Self {
        RunReport {
            command: command.into(),
            scenario,
            exit_code: EXIT_OK,
            conditions: Vec::new(),
            profile: None,
            monte_carlo: None,
            details: None,
            files: Vec::new(),
            text: String::new(),
            elapsed: Duration::ZERO,
        }
    }

    fn finish(mut self, mut out: OutDir, started: Instant) -> Result<Self, CliError> {
        self.files = out.written().to_vec();
        self.files.push("report.json".into());
        out.json("report.json", &self)?;
        self.elapsed = started.elapsed();
        Ok(self)
    }
}

/// Runs a parsed command line and returns the process exit code, printing
/// the report table to stdout and errors and timing to stderr.
pub fn run(cli: Cli) -> i32 {
    let result = match cli.command {
        Command::Check(a) => cmd_check(&a),
        Command::Solve(a) => cmd_solve(&a),
        Command::Simulate(a) => cmd_simulate(&a),
        Command::Sweep(a) => cmd_sweep(&a),
    };
    match result {
        Ok(report) => {
            print!("{}", report.text);
            eprintln!("done in {:.3} s", report.elapsed.as_secs_f64());
            report.exit_code
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn b(x: bool) -> String {
    x.to_string()
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_else(|| "-".into())
}

fn condition_rows(reports: &[ConditionReport]) -> Vec<Vec<String>> {
    reports
        .iter()
        .map(|r| {
            vec![
                r.name.clone(),
                b(r.holds),
                num(r.margin),
                r.checked.to_string(),
                r.violations.to_string(),
            ]
        })
        .collect()
}

fn witness_rows(reports: &[ConditionReport]) -> Vec<Vec<String>> {
    reports
        .iter()
        .flat_map(|r| {
            r.witnesses.iter().map(move |w| {
                vec![
                    r.name.clone(),
                    w.sender.map(|s| s.to_string()).unwrap_or_default(),
                    w.context.clone(),
                    num(w.lhs),
                    num(w.rhs),
                ]
            })
        })
        .collect()
}

fn headers(h: &[&str]) -> Vec<String> {
    schema::expand(h, 0)
}

pub fn cmd_check(args: &CheckArgs) -> Result<RunReport, CliError> {
    let started = Instant::now();
    let scenario = Scenario::load(&args.scenario)?;
    let env = scenario.finite()?;
    let seed = args.seed.or(scenario.simulation().seed).unwrap_or(0);
    let a2 = check_assumption2(&env.problem, &env.prior, env.cost)?;
    let su = check_substitutes(&env.problem, &env.prior, args.samples, seed)?;
    let mnat = check_mnat_concave(&env.problem, &env.prior)?;
    let reports = vec![a2, su.exact, su.sampled, mnat];

    let mut out = OutDir::create(&args.out.out)?;
    out.csv(
        "conditions.csv",
        &headers(schema::CONDITIONS),
        &condition_rows(&reports),
    )?;
    out.csv(
        "witnesses.csv",
        &headers(schema::WITNESSES),
        &witness_rows(&reports),
    )?;

    let mut report = RunReport::new("check", Some(scenario.name.clone()));
    report.exit_code = if reports.iter().all(|r| r.holds) {
        EXIT_OK
    } else {
        EXIT_CONDITION
    };
    report.text = format!("scenario {}\n", scenario.name);
    report.text += &render_table(schema::CONDITIONS, &condition_rows(&reports));
    let witnesses = witness_rows(&reports);
    if !witnesses.is_empty() {
        let mut shown = Vec::new();
        for r in &reports {
            let rows = witness_rows(std::slice::from_ref(r));
            shown.extend(rows.into_iter().take(SHOWN_WITNESSES));
        }
        report.text += "\nwitnesses\n";
        report.text += &render_table(schema::WITNESSES, &shown);
        if shown.len() < witnesses.len() {
            report.text += &format!(
                "({} more in witnesses.csv)\n",
                witnesses.len() - shown.len()
            );
        }
    }
    report.conditions = reports;
    report.finish(out, started)
}

pub fn cmd_solve(args: &SolveArgs) -> Result<RunReport, CliError> {
    let started = Instant::now();
    let scenario = Scenario::load(&args.scenario)?;
    match (&scenario.environment, scenario.gaussian()) {
        (None, Some(g)) => solve_gaussian(&scenario, g, args, started),
        _ => solve_finite(&scenario, scenario.finite()?, args, started),
    }
}

fn solve_finite(
    scenario: &Scenario,
    env: &InformationEnvironment,
    args: &SolveArgs,
    started: Instant,
) -> Result<RunReport, CliError> {
    let profile = aon_rates(&env.problem, &env.prior, env.cost, args.force)?;
    let prices = marginal_prices(&env.problem, &env.prior)?;
    let names = scenario.sender_names();

    let mut out = OutDir::create(&args.out.out)?;
    let profile_rows: Vec<Vec<String>> = profile
        .rows()
        .into_iter()
        .map(|r| {
            vec![
                r.state.to_string(),
                r.revealed,
                r.realization,
                r.sender.to_string(),
                num(r.rate),
            ]
        })
        .collect();
    out.csv("profile.csv", &headers(schema::PROFILE), &profile_rows)?;

    let mut payoff_rows: Vec<Vec<String>> = profile
        .sender_payoffs
        .iter()
        .enumerate()
        .map(|(k, &v)| vec![names[k].clone(), num(v), num(v)])
        .collect();
    payoff_rows.push(vec![
        "receiver".into(),
        String::new(),
        num(profile.receiver_payoff),
    ]);
    out.csv("payoffs.csv", &headers(schema::PAYOFFS), &payoff_rows)?;

    let price_rows: Vec<Vec<String>> = prices
        .iter()
        .enumerate()
        .map(|(k, &p)| {
            vec![
                names[k].clone(),
                num(p),
                num(env.cost * profile.sender_payoffs[k]),
            ]
        })
        .collect();
    out.csv("prices.csv", &headers(schema::PRICES), &price_rows)?;

    let mut report = RunReport::new("solve", Some(scenario.name.clone()));
    report.text = format!(
        "scenario {}  cost {}  states {}\n",
        scenario.name,
        num(env.cost),
        profile.graph.len()
    );
    if !profile.verified {
        report.text += "warning: substitutes check failed; profile forced and not verified\n";
    }
    let root = profile.graph.root();
    let rate_rows: Vec<Vec<String>> = (1..=names.len())
        .map(|i| vec![names[i - 1].clone(), opt(profile.rate(root, i))])
        .collect();
    report.text += &render_table(&["sender", "initial rate"], &rate_rows);
    report.text += "\n";
    report.text += &render_table(schema::PAYOFFS, &payoff_rows);
    report.text += "\n";
    report.text += &render_table(schema::PRICES, &price_rows);
    report.conditions = vec![
        profile.assumption2.clone(),
        profile.substitutes.exact.clone(),
    ];
    report.profile = Some(ProfileSummary::new(&profile));
    report.finish(out, started)
}

fn solve_gaussian(
    scenario: &Scenario,
    g: &GaussianBlock,
    args: &SolveArgs,
    started: Instant,
) -> Result<RunReport, CliError> {
    let cost = scenario.file.cost.ok_or_else(|| CliError::Invalid {
        field: "cost".into(),
        reason: "the gaussian closed forms need an attention cost".into(),
    })?;
    let s = GaussianScenario::new(g.p0, g.precisions.clone(), cost)?;
    let rates = gaussian_rates(&s);
    let payoff = gaussian_receiver_payoff(&s);
    let big_p = s.total_precision();

    let rate_rows: Vec<Vec<String>> = (0..s.precisions.len())
        .map(|k| {
            vec![
                (k + 1).to_string(),
                num(s.precisions[k]),
                num(rates.rates[k]),
                num(rates.visits[k]),
                b(rates.rates[k] <= 1.0),
            ]
        })
        .collect();
    let attention: f64 = rates.visits.iter().sum::<f64>() * cost;
    let mut summary = vec![
        vec!["p0".to_string(), num(g.p0)],
        vec!["total_precision".into(), num(big_p)],
        vec!["cost".into(), num(cost)],
        vec!["decision_value".into(), num(-1.0 / big_p)],
        vec!["attention_cost".into(), num(attention)],
        vec!["receiver_payoff".into(), num(payoff)],
    ];
    let mut details = json!({
        "total_precision": big_p,
        "receiver_payoff": payoff,
        "rates": rates.rates,
        "discrete_feasible": rates.discrete_feasible,
    });
    if let Some(pc) = g.pc {
        let alpha = g.alpha.unwrap_or(0.0);
        let (p1, p2) = (g.precisions[0], g.precisions[1]);
        let at = |a: f64| {
            CorrelatedScenario::new(g.p0, p1, p2, pc, a, cost).map(|cs| payoff_at_alpha(&cs))
        };
        let threshold = correlation_threshold(g.p0, p1, p2);
        let values = correlated_values(&CorrelatedScenario::new(g.p0, p1, p2, pc, alpha, cost)?);
        summary.extend([
            vec!["pc".into(), num(pc)],
            vec!["alpha".into(), num(alpha)],
            vec!["correlation_threshold".into(), num(threshold)],
            vec!["payoff_at_alpha".into(), num(at(alpha)?)],
            vec!["payoff_alpha_0".into(), num(at(0.0)?)],
            vec!["payoff_alpha_1".into(), num(at(1.0)?)],
        ]);
        details["correlated"] = json!({
            "pc": pc,
            "alpha": alpha,
            "threshold": threshold,
            "values": values,
            "payoff_at_alpha": at(alpha)?,
        });
    }

    let mut out = OutDir::create(&args.out.out)?;
    out.csv(
        "gaussian_rates.csv",
        &headers(schema::GAUSSIAN_RATES),
        &rate_rows,
    )?;
    out.csv(
        "gaussian_summary.csv",
        &headers(schema::GAUSSIAN_SUMMARY),
        &summary,
    )?;

    let mut report = RunReport::new("solve", Some(scenario.name.clone()));
    report.text = format!("scenario {} (gaussian closed forms)\n", scenario.name);
    if !rates.discrete_feasible {
        report.text += "note: some rates exceed 1 and have no discrete-round counterpart\n";
    }
    report.text += &render_table(schema::GAUSSIAN_RATES, &rate_rows);
    report.text += "\n";
    report.text += &render_table(schema::GAUSSIAN_SUMMARY, &summary);
    report.details = Some(details);
    report.finish(out, started)
}

fn order_name(order: &VisitOrder) -> String {
    match order {
        VisitOrder::LowestIndex => "lowest".into(),
        VisitOrder::Random => "random".into(),
        VisitOrder::Permutation(p) => {
            let items: Vec<String> = p.iter().map(usize::to_string).collect();
            format!("perm:{}", items.join(","))
        }
    }
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<RunReport, CliError> {
    let started = Instant::now();
    let scenario = Scenario::load(&args.scenario)?;
    let env = scenario.finite()?;
    let sim = scenario.simulation();
    let names = scenario.sender_names();
    let n = names.len();
    let replications = args
        .replications
        .or(sim.replications)
        .unwrap_or(DEFAULT_REPLICATIONS);
    let seed = args.seed.or(sim.seed).unwrap_or(0);
    let cap = args
        .round_cap
        .or(sim.round_cap)
        .unwrap_or(DEFAULT_ROUND_CAP);
    let order_text = args
        .receiver_order
        .clone()
        .or(sim.receiver_order)
        .unwrap_or_else(|| "lowest".into());
    let order = parse_order(&order_text, &names).map_err(CliError::Usage)?;

    let profile = aon_rates(&env.problem, &env.prior, env.cost, args.force)?;
    let game = Game::new(
        &env.problem,
        &env.prior,
        env.cost,
        vec![SenderPolicy::AonEquilibrium; n],
        ReceiverPolicy::EquilibriumOrder(order.clone()),
    )?
    .with_round_cap(cap);
    let mc = game.monte_carlo(replications, seed)?;

    let mut out = OutDir::create(&args.out.out)?;
    let reps: Vec<Vec<String>> = mc
        .episodes
        .iter()
        .map(|e| {
            let mut row = vec![e.index.to_string(), e.rounds.to_string()];
            row.extend(e.visits.iter().map(u64::to_string));
            row.extend([num(e.utility), num(e.cost), num(e.payoff)]);
            row
        })
        .collect();
    out.csv(
        "replications.csv",
        &schema::expand(schema::REPLICATIONS, n),
        &reps,
    )?;

    let z = |mean: f64, se: f64, theory: f64| {
        if se > 0.0 {
            num((mean - theory) / se)
        } else {
            String::new()
        }
    };
    let mut summary: Vec<Vec<String>> = (0..n)
        .map(|k| {
            let theory = profile.sender_payoffs[k];
            vec![
                format!("visits_{}", k + 1),
                num(theory),
                num(mc.visit_mean[k]),
                num(mc.visit_se[k]),
                z(mc.visit_mean[k], mc.visit_se[k], theory),
            ]
        })
        .collect();
    summary.push(vec![
        "receiver_payoff".into(),
        num(profile.receiver_payoff),
        num(mc.receiver_mean),
        num(mc.receiver_se),
        z(mc.receiver_mean, mc.receiver_se, profile.receiver_payoff),
    ]);
    out.csv("summary.csv", &headers(schema::SUMMARY), &summary)?;
    let stops: Vec<Vec<String>> = mc
        .stopping_times
        .iter()
        .map(|(k, c)| vec![k.to_string(), c.to_string()])
        .collect();
    out.csv(
        "stopping_times.csv",
        &headers(schema::STOPPING_TIMES),
        &stops,
    )?;

    let mut report = RunReport::new("simulate", Some(scenario.name.clone()));
    report.text = format!(
        "scenario {}  replications {replications}  seed {seed}  order {}\n",
        scenario.name,
        order_name(&order)
    );
    if !profile.verified {
        report.text +=
            "warning: substitutes check failed; theory column comes from a forced profile\n";
    }
    report.text += &render_table(schema::SUMMARY, &summary);
    report.profile = Some(ProfileSummary::new(&profile));
    report.monte_carlo = Some(SimulationSummary {
        replications,
        seed,
        receiver_order: order_name(&order),
        round_cap: cap,
        theory_visits: profile.sender_payoffs.clone(),
        visit_mean: mc.visit_mean.clone(),
        visit_se: mc.visit_se.clone(),
        theory_receiver: profile.receiver_payoff,
        receiver_mean: mc.receiver_mean,
        receiver_se: mc.receiver_se,
    });
    report.finish(out, started)
}

/// Parameters shared by the sweeps, taken from the scenario when given.
struct SweepParams {
    name: Option<String>,
    p0: f64,
    precisions: Vec<f64>,
    pc: Vec<f64>,
    cost: f64,
    seed: u64,
}

fn sweep_params(args: &SweepArgs) -> Result<SweepParams, CliError> {
    let mut params = SweepParams {
        name: None,
        p0: 1.0,
        precisions: vec![1.0, 1.0],
        pc: vec![0.4, 0.6],
        cost: 0.1,
        seed: 0,
    };
    if let Some(path) = &args.scenario {
        let s = Scenario::load(path)?;
        if let Some(g) = s.gaussian() {
            params.p0 = g.p0;
            params.precisions = g.precisions.clone();
            if let Some(pc) = g.pc {
                params.pc = vec![pc];
            }
        }
        if let Some(c) = s.file.cost {
            params.cost = c;
        }
        if let Some(seed) = s.simulation().seed {
            params.seed = seed;
        }
        params.name = Some(s.name);
    }
    if !args.pc.is_empty() {
        params.pc = args.pc.clone();
    }
    if let Some(seed) = args.seed {
        params.seed = seed;
    }
    if params.precisions.is_empty() {
        return Err(CliError::Invalid {
            field: "gaussian.precisions".into(),
            reason: "sweeps need at least one sender precision".into(),
        });
    }
    Ok(params)
}

fn unit_grid(step: f64) -> Result<Vec<f64>, CliError> {
    let k = (1.0 / step).round();
    if !(step > 0.0 && step <= 1.0) || (k * step - 1.0).abs() > 1e-9 {
        return Err(CliError::Usage(format!(
            "grid step {step} must divide [0, 1] evenly"
        )));
    }
    let k = k as usize;
    Ok((0..=k).map(|j| j as f64 / k as f64).collect())
}

pub fn cmd_sweep(args: &SweepArgs) -> Result<RunReport, CliError> {
    let started = Instant::now();
    let params = sweep_params(args)?;
    let mut out = OutDir::create(&args.out.out)?;
    let kind = args
        .sweep_kind
        .to_possible_value()
        .map(|v| v.get_name().to_string())
        .unwrap_or_default();
    let mut report = RunReport::new(&format!("sweep {kind}"), params.name.clone());
    let (table_header, rows, details): (Vec<String>, Vec<Vec<String>>, serde_json::Value) =
        match args.sweep_kind {
            SweepKind::LargeN => {
                let n_max = args.n_max.unwrap_or(50);
                let p = params.precisions[0];
                let curve = large_n_gaussian(params.p0, p, 1..=n_max)?;
                let rows: Vec<Vec<String>> = curve
                    .iter()
                    .map(|r| {
                        vec![
                            r.n.to_string(),
                            num(r.decision_value),
                            num(r.attention_cost),
                            num(r.receiver_payoff),
                        ]
                    })
                    .collect();
                out.csv("large_n.csv", &headers(schema::LARGE_N), &rows)?;
                (
                    headers(schema::LARGE_N),
                    rows,
                    json!({ "p0": params.p0, "p": p, "n_max": n_max }),
                )
            }
            SweepKind::Alpha => {
                if params.precisions.len() != 2 {
                    return Err(CliError::Usage(
                        "the alpha sweep needs exactly two sender precisions".into(),
                    ));
                }
                let (p1, p2) = (params.precisions[0], params.precisions[1]);
                let threshold = correlation_threshold(params.p0, p1, p2);
                let alphas = unit_grid(args.grid_step.unwrap_or(0.05))?;
                let mut rows = Vec::new();
                let mut ends = Vec::new();
                for &pc in &params.pc {
                    let mut first = None;
                    let mut last = 0.0;
                    for &a in &alphas {
                        let v = payoff_at_alpha(&CorrelatedScenario::new(
                            params.p0,
                            p1,
                            p2,
                            pc,
                            a,
                            params.cost,
                        )?);
                        first.get_or_insert(v);
                        last = v;
                        rows.push(vec![num(pc), num(a), num(v), num(threshold)]);
                    }
                    let first = first.unwrap_or(last);
                    ends.push(json!({
                        "pc": pc,
                        "payoff_alpha_0": first,
                        "payoff_alpha_1": last,
                        "correlation_helps": last > first,
                    }));
                }
                out.csv("alpha.csv", &headers(schema::ALPHA), &rows)?;
                (
                    headers(schema::ALPHA),
                    rows,
                    json!({ "threshold": threshold, "endpoints": ends }),
                )
            }
            SweepKind::Symmetry => {
                let n = params.precisions.len();
                let q: f64 = params.precisions.iter().sum();
                let step = args.grid_step.unwrap_or(0.05);
                let grid = allocation_grid(params.p0, q, n, step)?;
                let gap = symmetry_gap(params.p0, q, n, step)?;
                let sym = q / n as f64;
                let rows: Vec<Vec<String>> = grid
                    .iter()
                    .map(|pt| {
                        let mut row: Vec<String> = pt.allocation.iter().map(|&x| num(x)).collect();
                        row.push(num(pt.payoff));
                        row.push(b(pt
                            .allocation
                            .iter()
                            .all(|&x| (x - sym).abs() <= 1e-9 * q)));
                        row
                    })
                    .collect();
                let header = schema::expand(schema::SYMMETRY, n);
                out.csv("symmetry.csv", &header, &rows)?;
                (header, rows, serde_json::to_value(&gap)?)
            }
            SweepKind::Bridge => {
                let p = params.precisions[0];
                let samples = args.replications.unwrap_or(10_000) as usize;
                let check = bridge_mc_check(p, params.cost, samples, params.seed)?;
                let rows: Vec<Vec<String>> = check
                    .rows
                    .iter()
                    .map(|r| {
                        vec![
                            num(r.time),
                            num(r.analytic),
                            num(r.empirical),
                            num(r.standard_error),
                        ]
                    })
                    .collect();
                out.csv("bridge.csv", &headers(schema::BRIDGE), &rows)?;
                let details = json!({
                    "p": p,
                    "cost": params.cost,
                    "horizon": 1.0 / (p * params.cost),
                    "samples": check.samples,
                    "steps": check.steps,
                    "seed": check.seed,
                    "within_3se": check.passed,
                });
                (headers(schema::BRIDGE), rows, details)
            }
            SweepKind::LargeMarket => {
                let n_max = args.n_max.unwrap_or(400);
                let env = IIDEnvironment::default_abstention();
                let ns: Vec<usize> = (1..=n_max).collect();
                let mode = CurveMode::Auto {
                    budget: DEFAULT_BUDGET,
                    samples: 100_000,
                    seed: params.seed,
                };
                let residual = residual_value_curve(&env, &ns, mode)?;
                let error = decision_error_curve(&env, &ns, mode)?;
                let rows: Vec<Vec<String>> = residual
                    .iter()
                    .zip(&error)
                    .map(|(r, e)| {
                        vec![
                            r.n.to_string(),
                            num(r.value),
                            num(r.standard_error),
                            num(r.scaled),
                            num(e.value),
                            num(e.standard_error),
                            b(r.exact && e.exact),
                        ]
                    })
                    .collect();
                out.csv("large_market.csv", &headers(schema::LARGE_MARKET), &rows)?;
                let fit = |pts: Vec<(usize, f64)>| fit_exponential_rate(&pts).ok();
                let details = json!({
                    "n_max": n_max,
                    "decision_error_fit": fit(error.iter().map(|p| (p.n, p.value)).collect()),
                    "scaled_residual_fit": fit(residual.iter().map(|p| (p.n, p.scaled)).collect()),
                    "reference_fit": fit(ns.iter().map(|&n| (n, 1.0 / (n as f64 + 1.0))).collect()),
                });
                (headers(schema::LARGE_MARKET), rows, details)
            }
        };
    report.text = format!("sweep {kind}: {} rows\n", rows.len());
    let shown: Vec<Vec<String>> = if rows.len() > 24 {
        rows[..12]
            .iter()
            .chain(&rows[rows.len() - 12..])
            .cloned()
            .collect()
    } else {
        rows.clone()
    };
    let header: Vec<&str> = table_header.iter().map(String::as_str).collect();
    report.text += &render_table(&header, &shown);
    report.details = Some(details);
    report.finish(out, started)
}
