//! One function per subcommand; each returns the full output so nothing is
//! printed when a command fails part way.

use serde::Serialize;
use trialkit_core::alpha_solver::OverlapSource;
use trialkit_core::sim::{self, ReplicateResult};
use trialkit_core::{
    buyback_alpha, conjunctive_power, disjunctive_power, fwer, pairwise_power, predict_timeline,
    recursive_alpha_adjust, solve_uniform_alpha, strategy_recommend, AlphaAllocation, ControlTarget,
    CorrelationMatrix, FwerMethod, OverlapInfo, Scenario, StrategyContext, StrategyThresholds, Truth,
};

use crate::report::{corr, prob, Table};
use crate::{CliError, Command, Common, Format, MethodArg, TruthArg};

type Out = Result<String, CliError>;

pub fn run(command: Command) -> Out {
    match command {
        Command::Correlation { common, pair, simulate, reps, seed } => correlation(&common, &pair, simulate, reps, seed),
        Command::Fwer { common, method } => fwer_cmd(&common, method),
        Command::Power { common } => power(&common),
        Command::Solve { common, target, buyback, recursive } => solve(&common, target, buyback.as_deref(), recursive),
        Command::Simulate { common, reps, seed, truth } => simulate(&common, reps, seed, truth),
        Command::Recommend { common, fwer_required, related, post_hoc, correlation_threshold, overlap_threshold } => {
            recommend(&common, fwer_required, related, post_hoc, correlation_threshold, overlap_threshold)
        }
        Command::PredictEvents { common, at } => predict_events(&common, at),
    }
}

fn load(common: &Common) -> Result<Scenario, CliError> {
    let mut s = Scenario::load(&common.scenario)?;
    for (id, t) in &common.open {
        s.set_open_time(id, *t)?;
    }
    Ok(s)
}

fn json<T: Serialize>(value: &T) -> Out {
    serde_json::to_string_pretty(value)
        .map(|s| s + "\n")
        .map_err(|e| CliError::Numeric(format!("cannot serialise output: {e}")))
}

fn no_csv(common: &Common, what: &str) -> Result<(), CliError> {
    if common.out == Format::Csv {
        return Err(CliError::Config(format!("--out csv is only available for simulate, not {what}")));
    }
    Ok(())
}

fn matrix_table(s: &Scenario, m: &CorrelationMatrix) -> String {
    let ids: Vec<&str> = s.schedule.comparisons.iter().map(|c| c.id.as_str()).collect();
    let mut t = Table::new(std::iter::once("").chain(ids.iter().copied()));
    for (i, row) in m.rows().iter().enumerate() {
        t.row(std::iter::once(ids[i].to_string()).chain(row.iter().map(|&r| corr(r))).collect());
    }
    t.render()
}

#[derive(Serialize)]
struct PairRow {
    pair: [String; 2],
    shared: f64,
    totals: [f64; 2],
    rho: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    simulated: Option<sim::Estimate>,
}

fn correlation(common: &Common, pairs: &[(String, String)], simulate: bool, reps: Option<usize>, seed: Option<u64>) -> Out {
    no_csv(common, "correlation")?;
    let s = load(common)?;
    let k = s.schedule.len();
    let mut wanted = Vec::new();
    for (a, b) in pairs {
        let idx = |id: &str| {
            s.schedule.index_of(id).ok_or_else(|| CliError::Config(format!("unknown comparison {id}")))
        };
        let (i, j) = (idx(a)?, idx(b)?);
        if i == j {
            return Err(CliError::Config(format!("pair {a} with itself")));
        }
        wanted.push((i.min(j), i.max(j)));
    }
    if wanted.is_empty() {
        wanted = (0..k).flat_map(|i| (i + 1..k).map(move |j| (i, j))).collect();
    }
    let overlaps = s.resolved_overlaps()?;
    let matrix = s.correlation()?;
    let summary = if simulate {
        let mut cfg = s.sim_config()?;
        cfg.truth = vec![Truth::Null; k];
        cfg.replications = reps.unwrap_or(cfg.replications);
        cfg.seed = seed.unwrap_or(cfg.seed);
        Some(trialkit_core::simulate_platform(&cfg)?)
    } else {
        None
    };

    let rows: Vec<PairRow> = wanted
        .iter()
        .map(|&(i, j)| {
            let o = overlaps.iter().find(|o| (o.i.min(o.j), o.i.max(o.j)) == (i, j)).copied().unwrap_or(OverlapInfo {
                i,
                j,
                shared: 0.0,
                total_i: s.schedule.comparisons[i].target.count() as f64,
                total_j: s.schedule.comparisons[j].target.count() as f64,
            });
            let (ti, tj) = if o.i == i { (o.total_i, o.total_j) } else { (o.total_j, o.total_i) };
            PairRow {
                pair: [s.schedule.comparisons[i].id.clone(), s.schedule.comparisons[j].id.clone()],
                shared: o.shared,
                totals: [ti, tj],
                rho: matrix.get(i, j),
                simulated: summary.as_ref().and_then(|m| m.pair(i, j)).map(|p| p.correlation),
            }
        })
        .collect();

    if common.out == Format::Json {
        return json(&rows);
    }
    let mut header = vec!["pair", "shared", "total_i", "total_j", "rho"];
    if simulate {
        header.extend(["rho_sim", "se"]);
    }
    let mut t = Table::new(header);
    for r in &rows {
        let mut cells = vec![
            format!("{}-{}", r.pair[0], r.pair[1]),
            format!("{:.1}", r.shared),
            format!("{:.1}", r.totals[0]),
            format!("{:.1}", r.totals[1]),
            corr(r.rho),
        ];
        if let Some(e) = r.simulated {
            cells.push(corr(e.value));
            cells.push(format!("{:.3}", e.se));
        }
        t.row(cells);
    }
    let source = if s.overlaps.is_empty() { "predicted from the timeline" } else { "given in the scenario" };
    let norm = match s.normalization() {
        trialkit_core::OverlapNormalization::GeometricMean => "shared/sqrt(total_i*total_j)",
        trialkit_core::OverlapNormalization::SmallerTotal => "shared/min(total_i, total_j)",
    };
    Ok(format!("{}\nshared counts {source}; unequal totals use {norm}\n", t.render()))
}

fn methods(m: MethodArg) -> Vec<FwerMethod> {
    match m {
        MethodArg::Sidak => vec![FwerMethod::Sidak],
        MethodArg::Bonferroni => vec![FwerMethod::Bonferroni],
        MethodArg::Dunnett => vec![FwerMethod::Dunnett],
        MethodArg::All => FwerMethod::ALL.to_vec(),
    }
}

fn fwer_cmd(common: &Common, method: MethodArg) -> Out {
    no_csv(common, "fwer")?;
    let s = load(common)?;
    let alphas: Vec<f64> = s.schedule.comparisons.iter().map(|c| c.alpha).collect();
    let matrix = s.correlation()?;
    let results = methods(method)
        .into_iter()
        .map(|m| fwer(m, &alphas, &matrix))
        .collect::<Result<Vec<_>, _>>()?;
    if common.out == Format::Json {
        #[derive(Serialize)]
        struct Report<'a> {
            alphas: &'a [f64],
            correlation: &'a CorrelationMatrix,
            results: Vec<(FwerMethod, f64)>,
        }
        return json(&Report {
            alphas: &alphas,
            correlation: &matrix,
            results: results.iter().map(|r| (r.method, r.value.value())).collect(),
        });
    }
    let mut t = Table::new(["method", "fwer"]);
    for r in &results {
        t.row(vec![r.method.name().into(), prob(r.value.value())]);
    }
    Ok(format!("{}\ncorrelation matrix\n{}", t.render(), matrix_table(&s, &matrix)))
}

fn power(common: &Common) -> Out {
    no_csv(common, "power")?;
    let s = load(common)?;
    let matrix = s.correlation()?;
    let omegas: Vec<f64> = s.schedule.comparisons.iter().map(|c| c.power).collect();
    let pairwise = s
        .schedule
        .comparisons
        .iter()
        .map(|c| {
            // survival: total events when control events are e0 under a 1:A split
            let count = match c.target {
                ControlTarget::Events(e) => e as f64 * (1.0 + c.allocation_ratio),
                ControlTarget::Patients(n) => n as f64,
            };
            pairwise_power(&c.outcome, count, c.allocation_ratio, c.alpha)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let disjunctive = disjunctive_power(&omegas, &matrix)?;
    let conjunctive = conjunctive_power(&omegas, &matrix)?;
    if common.out == Format::Json {
        #[derive(Serialize)]
        struct Report<'a> {
            design_power: &'a [f64],
            pairwise_power: &'a [f64],
            disjunctive: f64,
            conjunctive: f64,
            correlation: &'a CorrelationMatrix,
        }
        return json(&Report {
            design_power: &omegas,
            pairwise_power: &pairwise,
            disjunctive,
            conjunctive,
            correlation: &matrix,
        });
    }
    let mut t = Table::new(["comparison", "design", "at target"]);
    for (c, p) in s.schedule.comparisons.iter().zip(&pairwise) {
        t.row(vec![c.id.clone(), prob(c.power), prob(*p)]);
    }
    Ok(format!(
        "{}\ndisjunctive  {}\nconjunctive  {}\n",
        t.render(),
        prob(disjunctive),
        prob(conjunctive)
    ))
}

fn solve(common: &Common, target: Option<f64>, buyback: Option<&str>, recursive: bool) -> Out {
    no_csv(common, "solve")?;
    let s = load(common)?;
    let target = target
        .or(s.solver.target_fwer)
        .ok_or_else(|| CliError::Config("no target: pass --target or set solver.target_fwer".into()))?;
    let mut ids: Vec<String> = s.schedule.comparisons.iter().map(|c| c.id.clone()).collect();
    let mut schedule_out = None;
    let allocation: AlphaAllocation = if recursive {
        let source =
            if s.overlaps.is_empty() { OverlapSource::Predicted } else { OverlapSource::Fixed(s.overlaps.clone()) };
        let r = recursive_alpha_adjust(&s.schedule, target, s.solver.max_iter, s.solver.damping, &source, s.normalization())?;
        schedule_out = Some(r.schedule.comparisons.iter().map(|c| c.target.count()).collect::<Vec<_>>());
        r.allocation
    } else if let Some(id) = buyback {
        let idx = s.schedule.index_of(id).ok_or_else(|| CliError::Config(format!("unknown comparison {id}")))?;
        ids.remove(idx);
        buyback_alpha(target, &s.correlation()?.without(idx)?)?
    } else {
        solve_uniform_alpha(target, &s.correlation()?)?
    };
    if common.out == Format::Json {
        #[derive(Serialize)]
        struct Report<'a> {
            target: f64,
            comparisons: &'a [String],
            #[serde(flatten)]
            allocation: &'a AlphaAllocation,
            #[serde(skip_serializing_if = "Option::is_none")]
            control_targets: Option<Vec<u64>>,
        }
        return json(&Report { target, comparisons: &ids, allocation: &allocation, control_targets: schedule_out });
    }
    let mut header = vec!["comparison", "alpha"];
    if schedule_out.is_some() {
        header.push("control target");
    }
    let mut t = Table::new(header);
    for (i, (id, a)) in ids.iter().zip(&allocation.alphas).enumerate() {
        let mut row = vec![id.clone(), prob(*a)];
        if let Some(targets) = &schedule_out {
            row.push(targets[i].to_string());
        }
        t.row(row);
    }
    Ok(format!(
        "{}\ntarget FWER    {}\nachieved FWER  {}\niterations     {}\n",
        t.render(),
        prob(target),
        prob(allocation.achieved_fwer),
        allocation.iterations
    ))
}

fn simulate(common: &Common, reps: Option<usize>, seed: Option<u64>, truth: Option<TruthArg>) -> Out {
    let s = load(common)?;
    let mut cfg = s.sim_config()?;
    if let Some(r) = reps {
        if r == 0 {
            return Err(CliError::Config("--reps must be at least 1".into()));
        }
        cfg.replications = r;
    }
    cfg.seed = seed.unwrap_or(cfg.seed);
    if let Some(t) = truth {
        let t = match t {
            TruthArg::Null => Truth::Null,
            TruthArg::Alternative => Truth::Alternative,
        };
        cfg.truth = vec![t; s.schedule.len()];
    }
    let reps = sim::simulate_replicates(&cfg)?;
    let summary = sim::summarize(&cfg, &reps)?;
    match common.out {
        Format::Json => json(&summary),
        Format::Csv => replicate_csv(&s, &reps),
        Format::Table => Ok(summary_table(&s, &summary)),
    }
}

fn replicate_csv(s: &Scenario, reps: &[ReplicateResult]) -> Out {
    let ids: Vec<&str> = s.schedule.comparisons.iter().map(|c| c.id.as_str()).collect();
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["replicate".to_string(), "comparison".into(), "z".into(), "rejected".into(), "cutoff".into(), "total_events".into()];
    header.extend(ids.iter().map(|id| format!("shared_{id}")));
    let err = |e: csv::Error| CliError::Numeric(format!("cannot write csv: {e}"));
    w.write_record(&header).map_err(err)?;
    for (r, rep) in reps.iter().enumerate() {
        for (i, id) in ids.iter().enumerate() {
            let mut row = vec![
                r.to_string(),
                id.to_string(),
                rep.z[i].to_string(),
                rep.rejected[i].to_string(),
                rep.analysis_times[i].to_string(),
                rep.total_events[i].to_string(),
            ];
            row.extend((0..ids.len()).map(|j| sim::shared_control_events(rep, i, j).to_string()));
            w.write_record(&row).map_err(err)?;
        }
    }
    let bytes = w.into_inner().map_err(|e| CliError::Numeric(format!("cannot write csv: {e}")))?;
    String::from_utf8(bytes).map_err(|e| CliError::Numeric(e.to_string()))
}

fn summary_table(s: &Scenario, m: &sim::SimSummary) -> String {
    let mut t = Table::new(["comparison", "truth", "reject", "se", "mean z", "sd z", "analysis", "events"]);
    for c in &m.comparisons {
        t.row(vec![
            c.id.clone(),
            if c.null { "null".into() } else { "effect".into() },
            prob(c.rejection_rate.value),
            prob(c.rejection_rate.se),
            format!("{:.3}", c.mean_z),
            format!("{:.3}", c.sd_z),
            format!("{:.3}", c.mean_analysis_time),
            format!("{:.1}", c.mean_total_events),
        ]);
    }
    let mut out = format!("{} replicates, seed {}\n\n{}", m.replications, m.seed, t.render());
    let line = |name: &str, e: Option<sim::Estimate>| {
        e.map(|e| format!("{name:<12} {} (se {})\n", prob(e.value), prob(e.se))).unwrap_or_default()
    };
    out.push('\n');
    out.push_str(&line("fwer", m.fwer));
    out.push_str(&line("disjunctive", m.disjunctive_power));
    out.push_str(&line("conjunctive", m.conjunctive_power));
    if !m.pairs.is_empty() {
        let mut p = Table::new(["pair", "rho", "se", "shared events", "se"]);
        for pair in &m.pairs {
            p.row(vec![
                format!("{}-{}", s.schedule.comparisons[pair.i].id, s.schedule.comparisons[pair.j].id),
                corr(pair.correlation.value),
                format!("{:.3}", pair.correlation.se),
                format!("{:.1}", pair.shared_events.value),
                format!("{:.2}", pair.shared_events.se),
            ]);
        }
        out.push('\n');
        out.push_str(&p.render());
    }
    out
}

fn recommend(
    common: &Common,
    fwer_required: bool,
    related: bool,
    post_hoc: bool,
    correlation_threshold: f64,
    overlap_threshold: f64,
) -> Out {
    no_csv(common, "recommend")?;
    let s = load(common)?;
    let matrix = s.correlation()?;
    let overlap_fractions = s
        .resolved_overlaps()?
        .iter()
        .map(|o| o.shared / (o.total_i * o.total_j).sqrt())
        .collect();
    let ctx = StrategyContext {
        fwer_control_required: fwer_required,
        questions_related: related,
        post_hoc_addition: post_hoc,
        allocation_ratios: s.schedule.comparisons.iter().map(|c| c.allocation_ratio).collect(),
        correlation: matrix.clone(),
        overlap_fractions,
        thresholds: StrategyThresholds { correlation: correlation_threshold, overlap_fraction: overlap_threshold },
    };
    let strategy = strategy_recommend(&ctx)?;
    if common.out == Format::Json {
        #[derive(Serialize)]
        struct Report {
            code: &'static str,
            description: &'static str,
            max_correlation: f64,
        }
        return json(&Report {
            code: strategy.code(),
            description: strategy.describe(),
            max_correlation: matrix.max_off_diagonal(),
        });
    }
    Ok(format!(
        "{}\nlargest correlation {}\ncode: {}\n",
        strategy.describe(),
        corr(matrix.max_off_diagonal()),
        strategy.code()
    ))
}

fn predict_events(common: &Common, at: Option<f64>) -> Out {
    no_csv(common, "predict-events")?;
    let s = load(common)?;
    let tl = predict_timeline(&s.schedule)?;
    let t = at.unwrap_or(f64::INFINITY);
    let k = s.schedule.len();
    let ids: Vec<&str> = s.schedule.comparisons.iter().map(|c| c.id.as_str()).collect();
    let controls: Vec<f64> = (0..k).map(|i| tl.control_count_at(i, t)).collect();
    let shared: Vec<(usize, usize, f64)> =
        (0..k).flat_map(|i| (i + 1..k).map(move |j| (i, j))).map(|(i, j)| (i, j, tl.shared_at(i, j, t))).collect();
    if common.out == Format::Json {
        #[derive(Serialize)]
        struct Comparison<'a> {
            id: &'a str,
            open: f64,
            close: f64,
            analysis: f64,
            control: f64,
        }
        #[derive(Serialize)]
        struct Shared<'a> {
            pair: [&'a str; 2],
            shared: f64,
        }
        #[derive(Serialize)]
        struct Report<'a> {
            at: Option<f64>,
            comparisons: Vec<Comparison<'a>>,
            shared: Vec<Shared<'a>>,
        }
        return json(&Report {
            at,
            comparisons: (0..k)
                .map(|i| Comparison {
                    id: ids[i],
                    open: tl.open_times[i],
                    close: tl.close_times[i],
                    analysis: tl.analysis_times[i],
                    control: controls[i],
                })
                .collect(),
            shared: shared.iter().map(|&(i, j, v)| Shared { pair: [ids[i], ids[j]], shared: v }).collect(),
        });
    }
    let unit = &s.platform.time_unit;
    let mut c = Table::new(["comparison", "open", "close", "analysis", "control"]);
    for i in 0..k {
        c.row(vec![
            ids[i].into(),
            format!("{:.3}", tl.open_times[i]),
            format!("{:.3}", tl.close_times[i]),
            format!("{:.3}", tl.analysis_times[i]),
            format!("{:.1}", controls[i]),
        ]);
    }
    let when = at.map_or("at each analysis".to_string(), |t| format!("at t = {t} {unit}"));
    let mut out = format!("expected control counts {when}; times in {unit}s\n\n{}", c.render());
    if !shared.is_empty() {
        let mut p = Table::new(["pair", "shared"]);
        for &(i, j, v) in &shared {
            p.row(vec![format!("{}-{}", ids[i], ids[j]), format!("{v:.1}")]);
        }
        out.push('\n');
        out.push_str(&p.render());
    }
    Ok(out)
}
