//! Brute-force references for the matching rules and the HP filter. Each one
//! is written straight from the set definitions, with no code shared with the
//! library beyond the data types.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ubsim_core::behavior::FriendshipNetwork;
use ubsim_core::labour_market::LabourAgent;

pub struct Fixture {
    pub step: u32,
    pub agents: Vec<LabourAgent>,
    pub edges: Vec<(usize, usize)>,
    pub adjacency: Vec<Vec<bool>>,
    pub rosters: Vec<Vec<usize>>,
    pub network: FriendshipNetwork,
}

/// A small random labour market: up to 20 agents, up to 3 firms, a random
/// friendship graph and random warning, wage and satisfaction histories.
pub fn fixture(seed: u64) -> Fixture {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(4..=20usize);
    let n_f = rng.random_range(1..=3usize);
    let step = rng.random_range(3..40u32);
    let mut agents = Vec::with_capacity(n);
    let mut rosters = vec![Vec::new(); n_f];
    for i in 0..n {
        let mut a = LabourAgent::default();
        if rng.random_bool(0.6) {
            let k = rng.random_range(0..n_f);
            a.employer = Some(k);
            a.hired_at = rng.random_range(0..=step);
            rosters[k].push(i);
            a.contract_warnings = rng.random_range(0..5);
            if a.contract_warnings > 0 {
                a.last_warning = Some(rng.random_range(step.saturating_sub(3)..=step));
            }
            a.embeddedness = (rng.random_range(0..5) as f64) * 0.2;
            a.prev_wage = 8.0 + rng.random_range(0..4) as f64 * 0.5;
            a.wage = 8.0 + rng.random_range(0..4) as f64 * 0.5;
            a.satisfaction = rng.random_range(0..6) as f64 * 0.2;
        } else {
            a.unemployment_spell = rng.random_range(0..10);
            if rng.random_bool(0.5) {
                a.last_employer = Some(rng.random_range(0..n_f));
                a.separated_at = Some(rng.random_range(step.saturating_sub(3)..step));
            }
        }
        agents.push(a);
    }
    let p = rng.random_range(0.1..0.5);
    let mut edges = Vec::new();
    let mut adjacency = vec![vec![false; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            if rng.random_bool(p) {
                edges.push((i, j));
                adjacency[i][j] = true;
                adjacency[j][i] = true;
            }
        }
    }
    let network = FriendshipNetwork::from_edges(n, &edges);
    Fixture {
        step,
        agents,
        edges,
        adjacency,
        rosters,
        network,
    }
}

fn was_at(a: &LabourAgent, firm: usize, t: u32) -> bool {
    // On the roster at some point during t − 1 or t.
    if a.employer == Some(firm) {
        return true;
    }
    match (a.last_employer, a.separated_at) {
        (Some(k), Some(s)) => k == firm && s + 1 >= t,
        _ => false,
    }
}

/// Eligible referral hires of `firm`, in priority order.
pub fn hire_oracle(fx: &Fixture, firm: usize, pool: &[usize], n: usize) -> Vec<usize> {
    let t = fx.step;
    let mut a: Vec<usize> = Vec::new();
    for &i in pool {
        let cand = &fx.agents[i];
        if cand.employer.is_some() || was_at(cand, firm, t) {
            continue;
        }
        let mut has_referrer = false;
        for b in 0..fx.agents.len() {
            if b == i || !fx.adjacency[i][b] {
                continue;
            }
            let r = &fx.agents[b];
            let clean_last_step = r.last_warning != Some(t - 1);
            if r.employer == Some(firm) && (clean_last_step || r.contract_warnings < 3) {
                has_referrer = true;
            }
        }
        if has_referrer {
            a.push(i);
        }
    }
    a.sort_by_key(|&i| (std::cmp::Reverse(fx.agents[i].unemployment_spell), i));
    a.truncate(n);
    a
}

pub fn fire_oracle(fx: &Fixture, firm: usize, n: usize, strict: bool) -> Vec<usize> {
    let t = fx.step;
    let roster = &fx.rosters[firm];
    let mean = if roster.is_empty() {
        0.0
    } else {
        roster.iter().map(|&i| fx.agents[i].embeddedness).sum::<f64>() / roster.len() as f64
    };
    let mut out: Vec<usize> = Vec::new();
    for &i in roster {
        let a = &fx.agents[i];
        let many = a.contract_warnings >= 3;
        let recent = a.last_warning == Some(t - 1);
        let in_c = if strict { many && recent } else { many || recent };
        let in_d = a.embeddedness < mean;
        if in_c && in_d {
            out.push(i);
        }
    }
    out.sort_by(|&x, &y| {
        let (a, b) = (&fx.agents[x], &fx.agents[y]);
        b.contract_warnings
            .cmp(&a.contract_warnings)
            .then(a.embeddedness.partial_cmp(&b.embeddedness).unwrap())
            .then(x.cmp(&y))
    });
    out.truncate(n);
    out
}

pub fn quit_oracle(fx: &Fixture) -> Vec<usize> {
    let t = fx.step;
    let mut out = Vec::new();
    for (k, roster) in fx.rosters.iter().enumerate() {
        let mean = if roster.is_empty() {
            0.0
        } else {
            roster.iter().map(|&i| fx.agents[i].embeddedness).sum::<f64>() / roster.len() as f64
        };
        for &i in roster {
            let a = &fx.agents[i];
            assert_eq!(a.employer, Some(k));
            let in_e = a.hired_at < t;
            let friends: Vec<usize> = (0..fx.agents.len())
                .filter(|&j| fx.adjacency[i][j] && fx.agents[j].employer.is_some())
                .collect();
            if !in_e || friends.is_empty() {
                continue;
            }
            let wf = friends.iter().map(|&j| fx.agents[j].wage).sum::<f64>() / friends.len() as f64;
            let sf = friends.iter().map(|&j| fx.agents[j].satisfaction).sum::<f64>() / friends.len() as f64;
            let fell = a.wage < a.prev_wage;
            if fell && a.embeddedness < mean && (a.wage < wf || a.satisfaction < sf) {
                out.push(i);
            }
        }
    }
    out.sort_unstable();
    out
}

/// Runs hire, fire and quit against the oracles on fixtures `0..count`.
/// Returns the first mismatch.
pub fn check_matching(count: u64) -> Result<(), String> {
    use ubsim_core::labour_market::{fire, hire, quit, FiringRule};
    for seed in 0..count {
        let fx = fixture(seed);
        let pool: Vec<usize> = (0..fx.agents.len()).filter(|&i| fx.agents[i].employer.is_none()).collect();
        for firm in 0..fx.rosters.len() {
            for n in [1usize, 2, 5, 20] {
                let got = hire(firm, n, &pool, &fx.agents, &fx.network, fx.step);
                let want = hire_oracle(&fx, firm, &pool, n);
                if got != want {
                    return Err(format!("hire seed {seed} firm {firm} n {n}: {got:?} vs {want:?}"));
                }
                for (rule, strict) in [(FiringRule::Either, false), (FiringRule::Both, true)] {
                    let got = fire(n, &fx.rosters[firm], &fx.agents, fx.step, rule);
                    let want = fire_oracle(&fx, firm, n, strict);
                    if got != want {
                        return Err(format!("fire seed {seed} firm {firm} n {n}: {got:?} vs {want:?}"));
                    }
                }
            }
        }
        let got = quit(&fx.rosters, &fx.agents, &fx.network, fx.step);
        let want = quit_oracle(&fx);
        if got != want {
            return Err(format!("quit seed {seed}: {got:?} vs {want:?}"));
        }
    }
    Ok(())
}

/// HP trend by a dense solve of (I + λ DᵀD) τ = y.
pub fn dense_hp(y: &[f64], lambda: f64) -> Vec<f64> {
    let n = y.len();
    let mut d = DMatrix::<f64>::zeros(n - 2, n);
    for r in 0..n - 2 {
        d[(r, r)] = 1.0;
        d[(r, r + 1)] = -2.0;
        d[(r, r + 2)] = 1.0;
    }
    let a = DMatrix::<f64>::identity(n, n) + lambda * d.transpose() * &d;
    let b = DVector::from_column_slice(y);
    let x = a.lu().solve(&b).expect("HP system is positive definite");
    x.iter().copied().collect()
}

/// Random walk plus cycle, the kind of path the filter sees in practice.
pub fn hp_fixture(seed: u64, n: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut level = 0.0;
    (0..n)
        .map(|t| {
            level += rng.random_range(-1.0..1.0);
            level + (t as f64 * 0.3).sin() * 2.0
        })
        .collect()
}

/// Worst absolute gap between the banded filter and the dense solve, and the
/// worst cycle on straight lines.
pub fn check_hp(fixtures: u64) -> (f64, f64) {
    use ubsim_core::analysis::hp_filter;
    let mut dense_gap: f64 = 0.0;
    let mut line_cycle: f64 = 0.0;
    for seed in 0..fixtures {
        let y = hp_fixture(seed, 200);
        for lambda in [1600.0, 100.0, 129_600.0] {
            let (trend, _) = hp_filter(&y, lambda).unwrap();
            let reference = dense_hp(&y, lambda);
            for (a, b) in trend.iter().zip(&reference) {
                dense_gap = dense_gap.max((a - b).abs());
            }
        }
        let (a, b) = (seed as f64 * 0.7 - 3.0, 0.05 * (seed as f64 - 4.0));
        let line: Vec<f64> = (0..200).map(|t| a + b * t as f64).collect();
        let (_, cycle) = hp_filter(&line, 1600.0).unwrap();
        for c in cycle {
            line_cycle = line_cycle.max(c.abs());
        }
    }
    (dense_gap, line_cycle)
}
