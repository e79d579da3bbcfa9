mod common;

use common::oracle::{check_matching, fixture, hire_oracle};
use proptest::prelude::*;
use ubsim_core::labour_market::{
    fire, hire, hire_signalling, quit, BenefitScheme, EventLog, ExpiryMode, FiringRule, MatchEvent, MatchKind,
};

#[test]
fn fifty_fixtures_match_brute_force() {
    check_matching(50).unwrap();
}

#[test]
fn fixtures_exercise_every_rule() {
    // The oracle comparison is only meaningful if the fixtures produce
    // non-empty sets often enough.
    let (mut hires, mut fires, mut quits) = (0, 0, 0);
    for seed in 0..50 {
        let fx = fixture(seed);
        let pool: Vec<usize> = (0..fx.agents.len()).filter(|&i| fx.agents[i].employer.is_none()).collect();
        for firm in 0..fx.rosters.len() {
            hires += usize::from(!hire_oracle(&fx, firm, &pool, 20).is_empty());
            fires += usize::from(!fire(20, &fx.rosters[firm], &fx.agents, fx.step, FiringRule::Either).is_empty());
        }
        quits += usize::from(!quit(&fx.rosters, &fx.agents, &fx.network, fx.step).is_empty());
    }
    assert!(hires >= 10 && fires >= 10 && quits >= 5, "{hires} {fires} {quits}");
}

#[test]
fn benefit_schedule_values() {
    let base = BenefitScheme::new(0.52, 360, ExpiryMode::Calendar).unwrap();
    let high = BenefitScheme::new(0.69, 360, ExpiryMode::Calendar).unwrap();
    assert_eq!(base.benefits(Some(8.0), 8.0, 10, 3), 0.6 * 8.0);
    assert_eq!(high.benefits(Some(8.0), 8.0, 10, 3), 0.69 * 8.0);
    assert_eq!(high.benefits(Some(8.0), 8.0, 360, 3), 0.6 * 8.0);
    assert_eq!(base.benefits(None, 8.0, 10, 0), 0.6 * 8.0);
    let spell = BenefitScheme::new(0.69, 180, ExpiryMode::Spell).unwrap();
    assert_eq!(spell.benefits(Some(8.0), 8.0, 900, 179), 0.69 * 8.0);
    assert_eq!(spell.benefits(Some(8.0), 8.0, 900, 180), 0.6 * 8.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn hires_fires_and_quits_are_disjoint(seed in any::<u64>()) {
        let fx = fixture(seed);
        let pool: Vec<usize> = (0..fx.agents.len()).filter(|&i| fx.agents[i].employer.is_none()).collect();
        let quits = quit(&fx.rosters, &fx.agents, &fx.network, fx.step);
        for firm in 0..fx.rosters.len() {
            let hired = hire(firm, 20, &pool, &fx.agents, &fx.network, fx.step);
            let fired = fire(20, &fx.rosters[firm], &fx.agents, fx.step, FiringRule::Either);
            for i in &hired {
                prop_assert!(fx.agents[*i].employer.is_none());
                prop_assert!(!fired.contains(i) && !quits.contains(i));
                // Never rehired by the firm it just left.
                prop_assert!(!(fx.agents[*i].last_employer == Some(firm)
                    && fx.agents[*i].separated_at.is_some_and(|s| s + 1 >= fx.step)));
            }
            for i in &fired {
                prop_assert_eq!(fx.agents[*i].employer, Some(firm));
            }
        }
    }

    #[test]
    fn signalling_takes_longest_spells(seed in any::<u64>(), n in 0usize..8) {
        let fx = fixture(seed);
        let pool: Vec<usize> = (0..fx.agents.len()).filter(|&i| fx.agents[i].employer.is_none()).collect();
        let hired = hire_signalling(n, &pool, &fx.agents);
        prop_assert_eq!(hired.len(), n.min(pool.len()));
        let min_hired = hired.iter().map(|&i| fx.agents[i].unemployment_spell).min();
        for i in pool.iter().filter(|i| !hired.contains(i)) {
            if let Some(m) = min_hired {
                prop_assert!(fx.agents[*i].unemployment_spell <= m);
            }
        }
    }

    #[test]
    fn benefits_never_below_poverty_line(
        rate in 0.01f64..0.99,
        duration in 1u32..800,
        last in proptest::option::of(0.0f64..30.0),
        median in 0.0f64..30.0,
        step in 0u32..1200,
        spell in 0u32..1200,
        by_spell in any::<bool>(),
    ) {
        let mode = if by_spell { ExpiryMode::Spell } else { ExpiryMode::Calendar };
        let s = BenefitScheme::new(rate, duration, mode).unwrap();
        let ub = s.benefits(last, median, step, spell);
        prop_assert!(ub >= 0.6 * median);
        let clock = if by_spell { spell } else { step };
        if clock >= duration || last.is_none() {
            prop_assert_eq!(ub, 0.6 * median);
        } else {
            prop_assert_eq!(ub, (rate * last.unwrap()).max(0.6 * median));
        }
    }

    #[test]
    fn replay_inverts_the_log(seed in any::<u64>(), moves in proptest::collection::vec((0usize..12, 0usize..3, any::<bool>()), 0..60)) {
        // Build a valid log by applying random moves to random rosters.
        let _ = seed;
        let mut employer: Vec<Option<usize>> = vec![None; 12];
        let initial: Vec<Vec<usize>> = vec![vec![0, 3], vec![1], vec![]];
        for (k, r) in initial.iter().enumerate() {
            for &i in r {
                employer[i] = Some(k);
            }
        }
        let mut log = EventLog::new();
        for (step, (i, k, fire_it)) in moves.into_iter().enumerate() {
            let step = step as u32 + 1;
            let ev = match employer[i] {
                Some(cur) => {
                    employer[i] = None;
                    MatchEvent { step, kind: if fire_it { MatchKind::Fire } else { MatchKind::Quit }, household: i, firm: cur }
                }
                None => {
                    employer[i] = Some(k);
                    MatchEvent { step, kind: if fire_it { MatchKind::SignalHire } else { MatchKind::Hire }, household: i, firm: k }
                }
            };
            log.push(ev);
        }
        let rosters = log.replay(&initial).unwrap();
        for (k, r) in rosters.iter().enumerate() {
            for &i in r {
                prop_assert_eq!(employer[i], Some(k));
            }
        }
        prop_assert_eq!(rosters.iter().map(Vec::len).sum::<usize>(), employer.iter().filter(|e| e.is_some()).count());
    }
}
