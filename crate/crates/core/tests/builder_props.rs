use std::collections::BTreeMap;

use hybridloc::fingerprint::{assign_scan, FingerprintBuilder};
use hybridloc::{
    build_fingerprint, ApId, AssignmentStrategy, BuilderConfig, CellId, FingerprintDb, GridSpec,
    GroundTruthEstimate, Point, Reading, TaggedScan, WifiScan,
};
use proptest::prelude::*;

const N_APS: usize = 6;

fn grid() -> GridSpec {
    GridSpec::new(Point::new(0.0, 0.0), 2.0, 5, 4).unwrap()
}

fn ap(i: usize) -> ApId {
    ApId::new(format!("ap{i}")).unwrap()
}

fn scan_strategy() -> impl Strategy<Value = TaggedScan> {
    (
        0.0f64..9.999,
        0.0f64..7.999,
        prop_oneof![Just(0.0), 0.1f64..3.0],
        proptest::collection::vec(proptest::option::of(-100.0f64..-30.0), N_APS),
    )
        .prop_map(|(x, y, c, rss)| {
            let readings = rss
                .into_iter()
                .enumerate()
                .filter_map(|(i, r)| r.map(|r| Reading::new(ap(i), r)))
                .collect();
            TaggedScan {
                wifi: WifiScan::new(0.0, readings).unwrap(),
                truth: GroundTruthEstimate::new(Point::new(x, y), c).unwrap(),
            }
        })
}

fn strategy_strategy() -> impl Strategy<Value = AssignmentStrategy> {
    prop_oneof![
        Just(AssignmentStrategy::LocationOnly),
        Just(AssignmentStrategy::UnweightedConfidence),
        Just(AssignmentStrategy::WeightedConfidence),
    ]
}

fn config(strategy: AssignmentStrategy) -> BuilderConfig {
    BuilderConfig {
        min_cell_weight: 0.0,
        ..BuilderConfig::new(grid(), strategy)
    }
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

fn assert_same_db(a: &FingerprintDb, b: &FingerprintDb) -> Result<(), TestCaseError> {
    prop_assert_eq!(a.cells().len(), b.cells().len());
    prop_assert_eq!(a.ap_universe(), b.ap_universe());
    for (id, ca) in a.cells() {
        let cb = &b.cells()[id];
        prop_assert!(close(ca.total_weight, cb.total_weight, 1e-9));
        prop_assert!(close(ca.mass_centroid.x, cb.mass_centroid.x, 1e-9));
        prop_assert!(close(ca.mass_centroid.y, cb.mass_centroid.y, 1e-9));
        prop_assert_eq!(ca.per_ap.len(), cb.per_ap.len());
        for (apid, sa) in &ca.per_ap {
            let sb = &cb.per_ap[apid];
            prop_assert!(close(sa.weight_sum(), sb.weight_sum(), 1e-9));
            prop_assert!(close(sa.mean(), sb.mean(), 1e-9));
            prop_assert!(close(sa.variance().unwrap(), sb.variance().unwrap(), 1e-7));
        }
    }
    Ok(())
}

/// Weighted samples per (cell, ap), gathered without any streaming update.
fn collect(scans: &[TaggedScan], cfg: &BuilderConfig) -> BTreeMap<(CellId, ApId), Vec<(f64, f64)>> {
    let mut out: BTreeMap<(CellId, ApId), Vec<(f64, f64)>> = BTreeMap::new();
    for s in scans {
        for (cell, w) in assign_scan(&s.truth, cfg).unwrap() {
            for r in s.wifi.readings() {
                out.entry((cell, r.id.clone())).or_default().push((r.rss, w));
            }
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ingestion_order_does_not_matter(
        scans in proptest::collection::vec(scan_strategy(), 1..60),
        strategy in strategy_strategy(),
        seed in any::<u64>(),
    ) {
        let cfg = config(strategy);
        let a = build_fingerprint(&scans, &cfg).unwrap();
        let mut shuffled = scans.clone();
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed);
        rand::seq::SliceRandom::shuffle(shuffled.as_mut_slice(), &mut rng);
        let b = build_fingerprint(&shuffled, &cfg).unwrap();
        assert_same_db(&a, &b)?;
    }

    #[test]
    fn streaming_moments_match_two_pass(
        scans in proptest::collection::vec(scan_strategy(), 1..60),
        strategy in strategy_strategy(),
    ) {
        let cfg = config(strategy);
        let db = build_fingerprint(&scans, &cfg).unwrap();
        for ((cell, apid), samples) in collect(&scans, &cfg) {
            let w: f64 = samples.iter().map(|s| s.1).sum();
            let mean = samples.iter().map(|s| s.0 * s.1).sum::<f64>() / w;
            let var = samples.iter().map(|s| s.1 * (s.0 - mean).powi(2)).sum::<f64>() / w;
            let st = &db.cells()[&cell].per_ap[&apid];
            prop_assert!(close(st.weight_sum(), w, 1e-12));
            prop_assert!(close(st.mean(), mean, 1e-10));
            prop_assert!(close(st.variance().unwrap(), var.max(cfg.sigma_floor), 1e-8));
        }
    }

    #[test]
    fn total_weight_is_sum_of_assignments(
        scans in proptest::collection::vec(scan_strategy(), 1..60),
        strategy in strategy_strategy(),
    ) {
        let cfg = config(strategy);
        let db = build_fingerprint(&scans, &cfg).unwrap();
        let mut expect: BTreeMap<CellId, f64> = BTreeMap::new();
        for s in &scans {
            for (cell, w) in assign_scan(&s.truth, &cfg).unwrap() {
                *expect.entry(cell).or_default() += w;
            }
        }
        for (cell, stats) in db.cells() {
            prop_assert!(close(stats.total_weight, expect[cell], 1e-12));
        }
        prop_assert!(db.check_invariants().is_ok());
    }

    #[test]
    fn merged_shards_equal_single_pass(
        scans in proptest::collection::vec(scan_strategy(), 2..60),
        strategy in strategy_strategy(),
        n_shards in 2usize..5,
    ) {
        let cfg = config(strategy);
        let whole = build_fingerprint(&scans, &cfg).unwrap();
        let mut shards: Vec<FingerprintBuilder> =
            (0..n_shards).map(|_| FingerprintBuilder::new(cfg).unwrap()).collect();
        for (i, s) in scans.iter().enumerate() {
            shards[i % n_shards].ingest(s).unwrap();
        }
        let mut merged = shards.remove(0);
        for s in shards {
            merged.merge(s).unwrap();
        }
        assert_same_db(&whole, &merged.finalize().unwrap())?;
    }

    #[test]
    fn zero_radius_labels_build_the_same_db_for_every_strategy(
        scans in proptest::collection::vec(scan_strategy(), 1..40),
    ) {
        let exact: Vec<TaggedScan> = scans
            .into_iter()
            .map(|mut s| {
                s.truth.confidence_radius = 0.0;
                s
            })
            .collect();
        let base = build_fingerprint(&exact, &config(AssignmentStrategy::LocationOnly)).unwrap();
        for strategy in AssignmentStrategy::ALL {
            let db = build_fingerprint(&exact, &config(strategy)).unwrap();
            prop_assert_eq!(&db, &base);
        }
    }
}
