use std::collections::BTreeMap;

use forgekit::corpus::{
    balance_repeat, hard_select, mark_aim_share, stats, BalanceFactor, Group, Label, Manifest, SampleRecord, Split,
};
use forgekit::scores::ScoreSet;
use forgekit::SeedContext;
use proptest::prelude::*;
use rand::Rng;

fn random_manifest(n: usize, seed: u64) -> Manifest {
    let mut rng = SeedContext::new(seed, "manifest").rng();
    let records = (0..n)
        .map(|i| {
            let split = Split::ALL[rng.random_range(0..4)];
            let label = match rng.random_range(0..3) {
                0 => Label::Real,
                2 if split == Split::Train => Label::AimFake,
                _ => Label::Fake,
            };
            let kind = match label {
                Label::Real => "real".to_string(),
                Label::AimFake => "aim".to_string(),
                Label::Fake => format!("type{}", rng.random_range(0..5)),
            };
            let group = [Group::Seen, Group::Unseen, Group::NotApplicable][rng.random_range(0..3)];
            let mut r = SampleRecord::new(format!("id{i}-{}", rng.random::<u16>()), format!("dir/{i}.png"), label, kind, split)
                .with_group(group);
            r.aim = label == Label::Real && split == Split::Train && rng.random_bool(0.3);
            r
        })
        .collect();
    Manifest::from_records(records).unwrap()
}

fn scores_for(m: &Manifest, seed: u64) -> ScoreSet {
    let mut rng = SeedContext::new(seed, "scores").rng();
    ScoreSet::new(m.records().iter().map(|r| (r.id.clone(), rng.random_range(0..=100) as f64 / 100.0)).collect()).unwrap()
}

#[test]
fn thousand_record_round_trip_is_byte_stable() {
    let mut m = random_manifest(1000, 1);
    m.metadata.insert("note".into(), serde_json::json!({"nested": [1, 2, 3]}));
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.jsonl");
    m.save(&path).unwrap();
    let loaded = Manifest::load(&path).unwrap();
    assert_eq!(loaded, m);
    let again = dir.path().join("again.jsonl");
    loaded.save(&again).unwrap();
    assert_eq!(std::fs::read(&path).unwrap(), std::fs::read(&again).unwrap());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn balance_touches_only_real_records(n in 1usize..200, seed in 0u64..10_000, k in 1usize..5) {
        let m = random_manifest(n, seed);
        prop_assume!(m.records().iter().any(|r| r.label == Label::Real));
        let (out, used) = balance_repeat(&m, BalanceFactor::Fixed(k), None).unwrap();
        prop_assert_eq!(used, k);
        let fakes = |m: &Manifest| m.records().iter().filter(|r| r.label.is_fake()).cloned().collect::<Vec<_>>();
        prop_assert_eq!(fakes(&out), fakes(&m));
        let real = |m: &Manifest| m.records().iter().filter(|r| r.label == Label::Real).count();
        prop_assert_eq!(real(&out), k * real(&m));
    }

    #[test]
    fn hard_select_is_a_monotone_subset(n in 1usize..200, seed in 0u64..10_000, a in 0.0f64..=1.0, b in 0.0f64..=1.0) {
        let m = random_manifest(n, seed);
        let scores = scores_for(&m, seed);
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let small = hard_select(&m, &scores, lo, &BTreeMap::new()).unwrap();
        let large = hard_select(&m, &scores, hi, &BTreeMap::new()).unwrap();
        prop_assert!(small.records().iter().all(|r| r.label.is_fake()));
        prop_assert!(small.records().iter().all(|r| large.get(&r.id).is_some()));
    }

    #[test]
    fn aim_share_has_exact_cardinality(n in 0usize..200, seed in 0u64..10_000, fraction in 0.0f64..=1.0) {
        let m = random_manifest(n, seed);
        let eligible = m.records().iter().filter(|r| r.label == Label::Real && r.split == Split::Train).count();
        let s = SeedContext::new(seed, "share");
        let out = mark_aim_share(&m, fraction, &s).unwrap();
        let tagged: Vec<&str> = out.records().iter().filter(|r| r.aim).map(|r| r.id.as_str()).collect();
        prop_assert_eq!(tagged.len(), (fraction * eligible as f64).floor() as usize);
        let again = mark_aim_share(&m, fraction, &s).unwrap();
        prop_assert_eq!(out, again);
    }

    #[test]
    fn stats_cells_partition_the_records(n in 0usize..300, seed in 0u64..10_000) {
        let m = random_manifest(n, seed);
        let s = stats(&m);
        prop_assert_eq!(s.total(), m.len());
        let by_split: usize = Split::ALL.iter().map(|&sp| { let (r, f) = s.real_and_forged(sp); r + f }).sum();
        prop_assert_eq!(by_split, m.len());
    }
}
