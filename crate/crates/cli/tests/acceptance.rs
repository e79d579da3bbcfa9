//! Acceptance report. Prints one PASS/FAIL line per criterion and exits
//! non-zero if a hard criterion fails. The scenario-ordering and baseline
//! shape checks describe emergent behaviour of the kernel; they are printed
//! with their measurements but do not fail the run.

#[path = "../../core/tests/common/oracle.rs"]
mod oracle;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use ubsim_core::accounting::{Account, BalanceSheet, Flow};
use ubsim_core::analysis::hp_filter;
use ubsim_core::config::{ScenarioConfig, SCENARIOS};
use ubsim_core::engine::{run_scenario, solve_stationary, EconomyState};
use ubsim_core::firms::ExpectationMode;
use ubsim_core::labour_market::{BenefitScheme, ExpiryMode};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn stationary_state() -> Outcome {
    let cfg = ScenarioConfig::default();
    let start = Instant::now();
    let state = EconomyState::new(&cfg, cfg.replicate_seed(0));
    let ss = solve_stationary(&cfg);
    let elapsed = start.elapsed().as_secs_f64();
    let (Ok(_), Ok(ss)) = (state, ss) else {
        return outcome(false, "initialization failed");
    };
    let mut misses = Vec::new();
    for (symbol, want) in [
        ("H", 1576.018),
        ("A", 1073.109),
        ("Bcb", 502.909),
        ("Bb", 0.0),
        ("B", 502.909),
        ("WB", 4000.0),
        ("UC", 7.158356),
        ("p", 10.021698),
    ] {
        let got = ss.value(symbol).unwrap_or(f64::NAN);
        if !((got - want).abs() < 5e-4) {
            misses.push(format!("{symbol} {got:.6} vs {want}"));
        }
    }
    let deviations: Vec<String> = ss.deviations(5e-4).iter().map(|d| d.to_string()).collect();
    let pass = misses.is_empty() && elapsed < 1.0;
    outcome(
        pass,
        format!(
            "{:.3}s; misses [{}]; deviations from the published table: [{}]",
            elapsed,
            misses.join(", "),
            deviations.join("; ")
        ),
    )
}

fn stock_flow_closure() -> Outcome {
    let cfg = ScenarioConfig::preset("baseline").unwrap();
    let start = Instant::now();
    let mut state = match EconomyState::new(&cfg, cfg.replicate_seed(0)) {
        Ok(s) => s,
        Err(e) => return outcome(false, e.to_string()),
    };
    let mut worst: f64 = 0.0;
    for _ in 0..cfg.steps {
        match state.step(&cfg) {
            Ok(report) => {
                if !report.is_consistent() {
                    return outcome(false, format!("flagged at step {}", state.step));
                }
                worst = worst.max(report.worst().map_or(0.0, |r| r.relative()));
            }
            Err(e) => return outcome(false, format!("step {}: {e}", state.step)),
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    outcome(
        worst < 1e-6 && elapsed < 10.0,
        format!("{} steps, worst relative residual {worst:.2e}, {elapsed:.2}s", state.step),
    )
}

fn stocks(bs: &BalanceSheet) -> [(&'static str, f64); 15] {
    [
        ("INV", bs.inventories),
        ("L firms", bs.firm_loans),
        ("L bank", bs.bank_loans),
        ("Dh", bs.household_deposits),
        ("D bank", bs.bank_deposits),
        ("B", bs.government_bills),
        ("Bb", bs.bank_bills),
        ("Bcb", bs.central_bank_bills),
        ("H", bs.reserves),
        ("A", bs.advances),
        ("NWf", bs.firm_net_worth),
        ("NWh", bs.household_net_worth),
        ("NWb", bs.bank_net_worth),
        ("GD", bs.government_debt),
        ("NWcb", bs.central_bank_net_worth),
    ]
}

fn rel_gap(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

fn fixed_point() -> Outcome {
    let cfg = ScenarioConfig {
        adaptation: false,
        monitoring: false,
        quitting: false,
        expectation_mode: ExpectationMode::Adaptive,
        ..ScenarioConfig::default()
    };
    let ss = match solve_stationary(&cfg) {
        Ok(ss) => ss,
        Err(e) => return outcome(false, e.to_string()),
    };
    let mut state = EconomyState::new(&cfg, 5).unwrap();
    let before = state.balance.clone();
    let mut worst: (f64, String) = (0.0, String::new());
    let mut note = |gap: f64, what: String| {
        if gap > worst.0 {
            worst = (gap, what);
        }
    };
    if let Err(e) = state.step(&cfg) {
        return outcome(false, e.to_string());
    }
    for ((name, a), (_, b)) in stocks(&before).iter().zip(stocks(&state.balance)) {
        note(rel_gap(*a, b), format!("stock {name}"));
    }
    let first = state.flows.clone();
    for (flow, acct, want) in [
        (Flow::Consumption, Account::Households, -ss.consumption),
        (Flow::GovernmentExpenditure, Account::Government, -ss.government_spending),
        (Flow::Wages, Account::Households, ss.wage_bill),
        (Flow::Taxes, Account::Households, -ss.taxes),
        (Flow::FirmProfits, Account::FirmsCurrent, -ss.firm_profits),
        (Flow::BankProfits, Account::BankCurrent, -ss.bank_profits),
    ] {
        note(rel_gap(first.get(flow, acct), want), format!("flow {}", flow.name()));
    }
    // A second step must reproduce every cell of the first.
    if let Err(e) = state.step(&cfg) {
        return outcome(false, e.to_string());
    }
    for flow in Flow::ALL {
        for &acct in flow.accounts() {
            let (a, b) = (first.get(flow, acct), state.flows.get(flow, acct));
            note(rel_gap(a, b), format!("flow {} {}", flow.name(), acct.name()));
        }
    }
    outcome(worst.0 <= 1e-8, format!("largest relative change {:.2e} ({})", worst.0, worst.1))
}

fn set_oracles() -> Outcome {
    match oracle::check_matching(50) {
        Ok(()) => outcome(true, "hire, fire (either rule) and quit sets equal brute force on 50 fixtures"),
        Err(e) => outcome(false, e),
    }
}

fn benefit_schedule() -> Outcome {
    let base = BenefitScheme::new(0.52, 360, ExpiryMode::Calendar).unwrap();
    let high = BenefitScheme::new(0.69, 360, ExpiryMode::Calendar).unwrap();
    let cases = [
        ("baseline", base.benefits(Some(8.0), 8.0, 10, 10), 4.80),
        ("high", high.benefits(Some(8.0), 8.0, 10, 10), 5.52),
        ("after expiry", high.benefits(Some(8.0), 8.0, 360, 360), 4.80),
    ];
    let pass = cases.iter().all(|c| c.1 == c.2);
    let detail: Vec<String> = cases.iter().map(|c| format!("{} {}", c.0, c.1)).collect();
    outcome(pass, detail.join(", "))
}

fn hp() -> Outcome {
    let (gap, line) = oracle::check_hp(50);
    outcome(
        gap < 1e-8 && line < 1e-10,
        format!("dense-solve gap {gap:.2e}, cycle on lines {line:.2e}"),
    )
}

fn csv_files(dir: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).into_iter().flatten().flatten() {
            let p = entry.path();
            if p.is_dir() {
                stack.push(p);
            } else if p.extension().is_some_and(|e| e == "csv") {
                out.push(p.strip_prefix(dir).unwrap().to_path_buf());
            }
        }
    }
    out.sort();
    out
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let run = |name: &str| -> Result<PathBuf, String> {
        let out = tmp.path().join(name);
        let status = Command::new(env!("CARGO_BIN_EXE_ubsim"))
            .args(["run", "--scenario", "all", "--seed", "7", "--replicates", "3", "--steps", "300", "--out"])
            .arg(&out)
            .output()
            .map_err(|e| e.to_string())?;
        if !status.status.success() {
            return Err(format!("exit {:?}: {}", status.status.code(), String::from_utf8_lossy(&status.stderr)));
        }
        Ok(out)
    };
    let (a, b) = match (run("a"), run("b")) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => return outcome(false, e),
    };
    let files = csv_files(&a);
    if files != csv_files(&b) || files.is_empty() {
        return outcome(false, "output trees differ");
    }
    for f in &files {
        if std::fs::read(a.join(f)).unwrap() != std::fs::read(b.join(f)).unwrap() {
            return outcome(false, format!("{} differs", f.display()));
        }
    }
    outcome(true, format!("{} CSV files byte-identical", files.len()))
}

/// Per-scenario means over one master seed, plus the baseline paths.
struct Sweep {
    unemployment: BTreeMap<&'static str, f64>,
    match_quality: BTreeMap<&'static str, f64>,
    aborted: usize,
    baseline_spell_end: Vec<f64>,
    baseline_unemployment: Vec<Vec<f64>>,
}

const SEEDS: [u64; 5] = [1, 2, 3, 4, 5];

fn sweep(seed: u64) -> Sweep {
    let mut s = Sweep {
        unemployment: BTreeMap::new(),
        match_quality: BTreeMap::new(),
        aborted: 0,
        baseline_spell_end: Vec::new(),
        baseline_unemployment: Vec::new(),
    };
    for &(name, _, _) in SCENARIOS.iter() {
        let cfg = ScenarioConfig {
            replicates: 20,
            seed,
            ..ScenarioConfig::preset(name).unwrap()
        };
        let result = run_scenario(&cfg, None, false).unwrap();
        let done: Vec<_> = result.replicates.iter().filter(|r| r.is_complete()).collect();
        s.aborted += result.replicates.len() - done.len();
        let mean = |metric: &str| {
            done.iter().map(|r| r.frame.mean_after(metric, cfg.burn_in)).sum::<f64>() / done.len() as f64
        };
        s.unemployment.insert(name, mean("unemployment_rate"));
        s.match_quality.insert(name, mean("match_quality"));
        if name == "baseline" {
            for r in &done {
                s.baseline_spell_end.push(r.frame.value(cfg.steps, "unemployment_spell").unwrap());
                s.baseline_unemployment.push(
                    r.frame
                        .series("unemployment_rate")
                        .unwrap()
                        .into_iter()
                        .filter(|(t, _)| *t > cfg.burn_in)
                        .map(|(_, v)| v)
                        .collect(),
                );
            }
        }
    }
    s
}

fn directional(sweeps: &[Sweep]) -> Outcome {
    let (mut a, mut b, mut c) = (0, 0, 0);
    let mut leaders = Vec::new();
    for s in sweeps {
        let u = &s.unemployment;
        let q = &s.match_quality;
        a += usize::from(u["high"] > u["low"]);
        let top = u.iter().max_by(|x, y| x.1.total_cmp(y.1)).map(|x| *x.0).unwrap();
        leaders.push(top);
        b += usize::from(top == "low-long");
        c += usize::from(q["high-short"] > q["long"] && q["low-short"] > q["long"]);
    }
    let need = (sweeps.len() * 7).div_ceil(10);
    let aborted: usize = sweeps.iter().map(|s| s.aborted).sum();
    outcome(
        a >= need && b >= need && c >= need,
        format!(
            "(a) high > low unemployment in {a}/{n}; (b) low-long highest in {b}/{n} (leaders {leaders:?}); \
             (c) high-short and low-short match quality above long in {c}/{n}; need {need}; {aborted} aborted replicates excluded",
            n = sweeps.len()
        ),
    )
}

fn baseline_shape(sweeps: &[Sweep]) -> Outcome {
    let cfg = ScenarioConfig::preset("baseline").unwrap();
    let spells: Vec<f64> = sweeps.iter().flat_map(|s| s.baseline_spell_end.iter().copied()).collect();
    let spell = spells.iter().sum::<f64>() / spells.len() as f64;
    let paths: Vec<&Vec<f64>> = sweeps.iter().flat_map(|s| s.baseline_unemployment.iter()).collect();
    let len = paths[0].len();
    let mean: Vec<f64> = (0..len).map(|i| paths.iter().map(|p| p[i]).sum::<f64>() / paths.len() as f64).collect();
    let (trend, _) = hp_filter(&mean, cfg.hp_lambda).unwrap();
    let at = |step: u32| trend[(step - cfg.burn_in - 1) as usize];
    let (u_eps, u_end) = (at(cfg.benefit_duration), at(cfg.steps));
    let spell_ok = (0.35..=0.65).contains(&spell);
    let declining = u_end < u_eps;
    outcome(
        spell_ok && declining,
        format!(
            "mean normalized spell at step {} = {spell:.4} over {} replicates (target 0.35-0.65: {}); \
             unemployment trend {u_eps:.4} at step {} -> {u_end:.4} at step {} (declining: {declining})",
            cfg.steps,
            spells.len(),
            if spell_ok { "met" } else { "missed" },
            cfg.benefit_duration,
            cfg.steps
        ),
    )
}

fn main() {
    let mut hard_failures = 0;
    let mut report = |name: &str, hard: bool, o: Outcome| {
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        let kind = if hard || o.pass { "" } else { " (calibration finding)" };
        println!("{verdict}{kind} {name}: {}", o.detail);
        if hard && !o.pass {
            hard_failures += 1;
        }
    };
    report("stationary state", true, stationary_state());
    report("stock-flow closure", true, stock_flow_closure());
    report("fixed point", true, fixed_point());
    report("matching set oracles", true, set_oracles());
    report("benefit schedule", true, benefit_schedule());
    report("hp filter", true, hp());
    report("cli determinism", true, determinism());

    let start = Instant::now();
    let sweeps: Vec<Sweep> = SEEDS.iter().map(|&s| sweep(s)).collect();
    eprintln!("scenario sweep: {:.0}s", start.elapsed().as_secs_f64());
    report("directional scenario checks", false, directional(&sweeps));
    report("baseline qualitative shape", false, baseline_shape(&sweeps));

    if hard_failures > 0 {
        eprintln!("{hard_failures} hard criteria failed");
        std::process::exit(1);
    }
}
