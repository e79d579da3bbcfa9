use proptest::prelude::*;
use ubsim_core::config::{scenario_names, ScenarioConfig, SCENARIOS};

#[test]
fn nine_presets_cover_the_grid() {
    let presets = ScenarioConfig::all_presets();
    assert_eq!(presets.len(), 9);
    let mut grid: Vec<(u64, u32)> = presets
        .iter()
        .map(|c| ((c.replacement_rate * 100.0).round() as u64, c.benefit_duration))
        .collect();
    grid.sort_unstable();
    grid.dedup();
    assert_eq!(grid.len(), 9);
    for c in &presets {
        assert!([0.35, 0.52, 0.69].contains(&c.replacement_rate));
        assert!([180, 360, 540].contains(&c.benefit_duration));
    }
    assert_eq!(scenario_names(), SCENARIOS.iter().map(|s| s.0).collect::<Vec<_>>());
}

#[test]
fn replacement_rate_outside_unit_interval_rejected() {
    let err = ScenarioConfig::parse("replacement_rate = 1.5\n").unwrap_err().to_string();
    assert!(err.contains("(0, 1)"), "{err}");
}

proptest! {
    #[test]
    fn emit_then_parse_is_identity(
        preset in 0usize..9,
        seed in any::<u64>(),
        steps in 1u32..5000,
        reps in 1usize..500,
        rate in 0.01f64..0.99,
        duration in 1u32..2000,
        markup in 0.0f64..2.0,
        lambda in 1.0f64..1e6,
        adaptation in any::<bool>(),
        quitting in any::<bool>(),
    ) {
        let mut cfg = ScenarioConfig::preset(SCENARIOS[preset].0).unwrap();
        cfg.seed = seed;
        cfg.steps = steps;
        cfg.burn_in = cfg.burn_in.min(steps - 1);
        cfg.replicates = reps;
        cfg.replacement_rate = rate;
        cfg.benefit_duration = duration;
        cfg.markup = markup;
        cfg.hp_lambda = lambda;
        cfg.adaptation = adaptation;
        cfg.quitting = quitting;
        let text = cfg.emit();
        let back = ScenarioConfig::parse(&text).unwrap();
        prop_assert_eq!(back, cfg);
    }
}
