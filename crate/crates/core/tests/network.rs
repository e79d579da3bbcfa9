use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use ubsim_core::behavior::{build_friendship_network, HomophilyMatrix, ValueType};

fn quarters(n: usize) -> Vec<ValueType> {
    (0..n).map(|i| ValueType::ALL[i % 4]).collect()
}

fn same_type_fraction(types: &[ValueType], edges: &[(usize, usize)]) -> f64 {
    edges.iter().filter(|&&(a, b)| types[a] == types[b]).count() as f64 / edges.len() as f64
}

#[test]
fn mean_degree_on_target() {
    let types = quarters(500);
    let mut total = 0.0;
    for seed in 0..100 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let net = build_friendship_network(&types, &HomophilyMatrix::default(), 5.0, &mut rng).unwrap();
        let d = net.mean_degree();
        assert!((4.0..=6.0).contains(&d), "seed {seed}: {d}");
        total += d;
    }
    assert!((total / 100.0 - 5.0).abs() < 0.1, "{}", total / 100.0);
}

#[test]
fn uniform_mixing_gives_share_squared() {
    let types = quarters(500);
    // 4 groups of 125: C(125,2)·4 / C(500,2).
    let expected = 4.0 * 125.0 * 124.0 / (500.0 * 499.0);
    let mut total = 0.0;
    for seed in 0..100 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let net = build_friendship_network(&types, &HomophilyMatrix::uniform(), 5.0, &mut rng).unwrap();
        let edges: Vec<_> = net.edges().collect();
        total += same_type_fraction(&types, &edges);
    }
    assert!((total / 100.0 - expected).abs() < 0.01, "{} vs {expected}", total / 100.0);
}

#[test]
fn self_enhancement_and_conservation_avoid_their_own_type() {
    let types = quarters(500);
    let (mut same, mut cross) = ([0usize; 4], [0usize; 4]);
    for seed in 0..100 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let net = build_friendship_network(&types, &HomophilyMatrix::default(), 5.0, &mut rng).unwrap();
        for (a, b) in net.edges() {
            if types[a] == types[b] {
                same[types[a].index()] += 1;
            } else {
                cross[types[a].index()] += 1;
                cross[types[b].index()] += 1;
            }
        }
    }
    // Per-pair rates: same-type pairs 125·124/2, cross-type pairs 125·375.
    let rate = |k: usize| {
        let s = same[k] as f64 / (125.0 * 124.0 / 2.0);
        let c = cross[k] as f64 / (125.0 * 375.0);
        s / c
    };
    for t in [ValueType::SelfEnhancement, ValueType::Conservation] {
        assert!(rate(t.index()) < 0.7, "{t:?}: {}", rate(t.index()));
    }
    for t in [ValueType::Openness, ValueType::SelfTranscendence] {
        assert!(rate(t.index()) > 1.2, "{t:?}: {}", rate(t.index()));
    }
}

#[test]
fn symmetric_irreflexive_and_empty_at_zero() {
    let types = quarters(60);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let net = build_friendship_network(&types, &HomophilyMatrix::default(), 5.0, &mut rng).unwrap();
    for i in 0..60 {
        assert!(!net.are_friends(i, i));
        for &j in net.friends(i) {
            assert!(net.are_friends(j, i));
        }
    }
    let empty = build_friendship_network(&types, &HomophilyMatrix::default(), 0.0, &mut rng).unwrap();
    assert_eq!(empty.edge_count(), 0);
    assert!(build_friendship_network(&types, &HomophilyMatrix::default(), 60.0, &mut rng).is_err());
}
