//! Acceptance criteria, one PASS/FAIL line each. Runs without the libtest
//! harness so every line is printed; exits non-zero if any criterion fails.

mod common;

use std::process::ExitCode;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use trialkit_core::{
    bivariate_normal_cdf, buyback_alpha, conjunctive_power, control_event_share, disjunctive_power,
    fwer_bonferroni, fwer_dunnett, fwer_sidak, mvn_cdf_qmc, mvn_orthant_product_corr, predict_timeline,
    required_events, round2, simulate_platform, solve_uniform_alpha, std_normal_cdf, AccrualModel, ControlShare,
    CorrelationMatrix, PlatformSchedule, Scenario, SimConfig, SimSummary, Truth,
};

use common::*;

struct Outcome {
    pass: bool,
    detail: String,
}

fn report(id: &str, name: &str, o: &Outcome) {
    let tag = if o.pass { "PASS" } else { "FAIL" };
    println!("{tag} {id} {name}: {}", o.detail);
}

fn cell(r: usize, o: usize) -> String {
    format!("A={} offset={}", RATIOS[r], OFFSETS[o])
}

fn tally(total: usize, misses: &[String]) -> Outcome {
    let mut detail = format!("{}/{total} within tolerance", total - misses.len());
    if !misses.is_empty() {
        detail.push_str("; misses: ");
        detail.push_str(&misses.join("; "));
    }
    Outcome { pass: misses.is_empty(), detail }
}

fn c1_correlations() -> Outcome {
    let mut misses = Vec::new();
    for r in 0..3 {
        for o in 0..OFFSETS.len() {
            let rho = table_rho(r, o);
            if (round2(rho) - RHO[r][o]).abs() > 1e-9 {
                misses.push(format!("{} {rho:.4} vs {:.2}", cell(r, o), RHO[r][o]));
            }
        }
    }
    tally(33, &misses)
}

fn c2_fwer() -> Outcome {
    let mut misses = Vec::new();
    for r in 0..3 {
        for o in 0..OFFSETS.len() {
            let corr = CorrelationMatrix::pair(table_rho(r, o)).unwrap();
            let f = fwer_dunnett(&[0.025, 0.025], &corr).unwrap();
            if (f - FWER[r][o]).abs() > 0.0005 {
                misses.push(format!("{} {f:.5} vs {:.3}", cell(r, o), FWER[r][o]));
            }
        }
    }
    tally(33, &misses)
}

fn c3_powers() -> Outcome {
    let mut misses = Vec::new();
    for r in 0..3 {
        for o in 0..OFFSETS.len() {
            let corr = CorrelationMatrix::pair(table_rho(r, o)).unwrap();
            let d = disjunctive_power(&[0.9, 0.9], &corr).unwrap();
            let c = conjunctive_power(&[0.9, 0.9], &corr).unwrap();
            if (d - DISJUNCTIVE[r][o]).abs() > 0.0005 {
                misses.push(format!("{} disjunctive {d:.5} vs {:.3}", cell(r, o), DISJUNCTIVE[r][o]));
            }
            if (c - CONJUNCTIVE[r][o]).abs() > 0.0005 {
                misses.push(format!("{} conjunctive {c:.5} vs {:.3}", cell(r, o), CONJUNCTIVE[r][o]));
            }
        }
    }
    tally(66, &misses)
}

fn simulate_cells() -> Vec<(usize, usize, SimSummary)> {
    let mut out = Vec::new();
    for r in 0..3 {
        for (o, &offset) in OFFSETS.iter().enumerate() {
            let cfg = two_arm_config(r, offset, Truth::Null, 10_000, 7000 + (r * 11 + o) as u64);
            out.push((r, o, simulate_platform(&cfg).unwrap()));
        }
    }
    out
}

fn c4_calibration(cells: &[(usize, usize, SimSummary)]) -> Outcome {
    let mut misses = Vec::new();
    let mut checked = 0;
    for (r, o, s) in cells {
        if ![0.0, 1.0, 2.0].contains(&OFFSETS[*o]) {
            continue;
        }
        checked += 1;
        let schedule = two_arm_schedule(*r, OFFSETS[*o]);
        let tl = predict_timeline(&schedule).unwrap();
        let rho = trialkit_core::build_correlation_matrix(&schedule, &tl.overlaps(), Default::default()).unwrap();
        let analytic_fwer = fwer_dunnett(&[0.025, 0.025], &rho).unwrap();
        let f = s.fwer.unwrap().value;
        let est = s.pair(0, 1).unwrap().correlation.value;
        if (f - analytic_fwer).abs() > 0.007 || (est - rho.get(0, 1)).abs() > 0.03 {
            misses.push(format!(
                "{} fwer {f:.4} vs {analytic_fwer:.4}, rho {est:.3} vs {:.3}",
                cell(*r, *o),
                rho.get(0, 1)
            ));
        }
    }
    tally(checked, &misses)
}

fn c5_shared(cells: &[(usize, usize, SimSummary)]) -> Outcome {
    let mut misses = Vec::new();
    for (r, o, s) in cells {
        let mean = s.pair(0, 1).unwrap().shared_events.value;
        let printed = SHARED[*r][*o];
        if (mean - printed).abs() > 0.05 * printed {
            misses.push(format!("{} {mean:.2} vs {printed}", cell(*r, *o)));
        }
    }
    tally(cells.len(), &misses)
}

fn c6_rampart() -> Outcome {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../scenarios/rampart.toml");
    let s = Scenario::load(path).unwrap();
    let corr = s.correlation().unwrap();
    let all = solve_uniform_alpha(0.025, &corr).unwrap().alpha();
    let e3 = s.schedule.index_of("E3").unwrap();
    let bought = buyback_alpha(0.025, &corr.without(e3).unwrap()).unwrap().alpha();
    let pass = (all - 0.0097).abs() <= 0.0010 && (bought - 0.015).abs() <= 0.0015;
    Outcome {
        pass,
        detail: format!(
            "three comparisons alpha {all:.5} (0.0097 ± 0.0010), buy-back alpha {bought:.5} (0.015 ± 0.0015); \
             correlations {:.3}/{:.3}/{:.3}",
            corr.get(0, 1),
            corr.get(0, 2),
            corr.get(1, 2)
        ),
    }
}

fn c7_event_targets() -> Outcome {
    let mut misses = Vec::new();
    let mut parts = Vec::new();
    for r in 0..3 {
        let d = required_events(0.025, 0.9, HAZARD_RATIO, RATIOS[r]).unwrap();
        let e0 = control_event_share(d as f64, RATIOS[r], ControlShare::Null).unwrap();
        let printed = CONTROL_EVENTS[r] as f64;
        parts.push(format!("A={}: d={d}, e0={e0:.1} vs {printed}", RATIOS[r]));
        if (e0 - printed).abs() > 0.07 * printed {
            misses.push(format!("A={} {e0:.1} vs {printed}", RATIOS[r]));
        }
    }
    let mut o = tally(3, &misses);
    o.detail = format!("{}; {}", o.detail, parts.join(", "));
    o
}

fn c8_properties() -> Outcome {
    let mut failures: Vec<String> = Vec::new();
    let mut check = |ok: bool, what: &str| {
        if !ok {
            failures.push(what.to_string());
        }
    };

    // ordering and monotonicity in the correlation
    let mut prev: Option<(f64, f64, f64)> = None;
    for i in 0..=18 {
        let rho = 0.05 * i as f64;
        let m = CorrelationMatrix::pair(rho).unwrap();
        let alphas = [0.025, 0.025];
        let (b, s, d) = (fwer_bonferroni(&alphas).unwrap(), fwer_sidak(&alphas).unwrap(), fwer_dunnett(&alphas, &m).unwrap());
        check(b >= s && s >= d - 1e-12, "bonferroni >= sidak >= dunnett");
        let (pd, pc) = (disjunctive_power(&[0.9, 0.9], &m).unwrap(), conjunctive_power(&[0.9, 0.9], &m).unwrap());
        check(pc <= 0.9 && 0.9 <= pd, "conjunctive <= power <= disjunctive");
        if let Some((d0, pd0, pc0)) = prev {
            check(d < d0, "fwer decreasing in rho");
            check(pd < pd0 && pc > pc0, "powers move in opposite directions");
        }
        prev = Some((d, pd, pc));
    }

    // solver round trips
    let mut rng = ChaCha8Rng::seed_from_u64(88);
    for _ in 0..10 {
        let k = rng.random_range(2..=4);
        let pairs: Vec<(usize, usize, f64)> = (0..k)
            .flat_map(|i| (i + 1..k).map(move |j| (i, j)))
            .map(|(i, j)| (i, j, 0.0))
            .collect();
        let lambda: Vec<f64> = (0..k).map(|_| rng.random_range(0.0..0.9)).collect();
        let pairs: Vec<_> = pairs.iter().map(|&(i, j, _)| (i, j, lambda[i] * lambda[j])).collect();
        let m = CorrelationMatrix::from_pairs(k, &pairs).unwrap();
        for t in [0.01, 0.025, 0.05] {
            let a = solve_uniform_alpha(t, &m).unwrap();
            let back = fwer_dunnett(&a.alphas, &m).unwrap();
            check((back - t).abs() <= 1e-6, "solver round trip");
        }
    }

    // bivariate identities
    check((bivariate_normal_cdf(0.0, 0.0, 0.5).unwrap() - 1.0 / 3.0).abs() < 1e-7, "Sheppard value");
    for h in [-3.0, -1.0, 0.0, 0.7, 2.5] {
        for k in [-2.0, 0.3, 1.96] {
            let p = bivariate_normal_cdf(h, k, 0.0).unwrap();
            let q = std_normal_cdf(h).unwrap() * std_normal_cdf(k).unwrap();
            check((p - q).abs() < 1e-9, "independence identity");
        }
    }

    // QMC against the product-structure quadrature
    let lambda = [0.8, 0.6, 0.3];
    let c = [1.5, 2.0, 0.8];
    let exact = mvn_orthant_product_corr(&c, &lambda).unwrap();
    let pairs: Vec<_> = [(0, 1), (0, 2), (1, 2)].iter().map(|&(i, j)| (i, j, lambda[i] * lambda[j])).collect();
    let qmc = mvn_cdf_qmc(&c, &CorrelationMatrix::from_pairs(3, &pairs).unwrap(), 1e-5, 3).unwrap();
    check((qmc.estimate - exact).abs() <= qmc.half_width.max(1e-6), "QMC vs product quadrature");

    // logrank null calibration and determinism
    let single = PlatformSchedule::new(
        ACCRUAL_RATE,
        AccrualModel::PerComparison,
        vec![survival_comparison("E1", 1.0, 0.0, 264)],
    )
    .unwrap();
    let cfg = SimConfig::uniform(single, Truth::Null, 10_000, 5).unwrap();
    let s = simulate_platform(&cfg).unwrap();
    let rate = s.comparisons[0].rejection_rate;
    check((rate.value - 0.025).abs() <= 3.0 * rate.se, "logrank null calibration");
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let again = pool.install(|| simulate_platform(&cfg)).unwrap();
    check(again == s, "determinism across thread counts");

    let total = 8;
    let mut unique = failures.clone();
    unique.dedup();
    Outcome {
        pass: failures.is_empty(),
        detail: if failures.is_empty() {
            format!("{total} property groups hold")
        } else {
            format!("violations: {}", unique.join(", "))
        },
    }
}

fn main() -> ExitCode {
    let mut all = true;
    let mut run = |id: &str, name: &str, o: Outcome| {
        report(id, name, &o);
        all &= o.pass;
    };
    run("C1", "analytic correlations round to the printed values", c1_correlations());
    run("C2", "Dunnett FWER within 0.0005 of the printed values", c2_fwer());
    run("C3", "disjunctive and conjunctive powers within 0.0005", c3_powers());
    let cells = simulate_cells();
    run("C4", "simulated FWER (±0.007) and correlation (±0.03) at 10,000 replicates", c4_calibration(&cells));
    run("C5", "simulated shared control events within 5% of the printed means", c5_shared(&cells));
    run("C6", "RAMPART common and buy-back levels", c6_rampart());
    run("C7", "control event targets within 7%", c7_event_targets());
    run("C8", "property suites", c8_properties());
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
