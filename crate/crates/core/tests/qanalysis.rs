use std::collections::BTreeMap;
use std::path::Path;

use proptest::prelude::*;
use sidewall::fem::EprReport;
use sidewall::qanalysis::*;

fn data(name: &str) -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

fn report(p_surface: f64) -> EprReport {
    let e = BTreeMap::from([("oxide_top".to_string(), p_surface), ("vacuum".to_string(), 1.0 - p_surface)]);
    EprReport::from_energies(e, 1, 0, 0)
}

fn record(chip: &str, qubit: &str, q: f64, feature: Option<(&str, f64)>) -> QubitRecord {
    // Q = 2π f T1 with f = 1 GHz
    let t1 = q / (2.0 * std::f64::consts::PI * 1e3);
    let mut r = parse_qubit_table(&format!("chip_id,qubit_id,substrate,capping,t1_avg_us,t1_sigma_us,freq_ghz\n{chip},{qubit},si,,{t1},,1\n")).unwrap().remove(0);
    if let Some((name, v)) = feature {
        r.features.insert(name.into(), Feature { value: v, unit: "nm".into(), uncertainty: None });
    }
    r
}

/// Surface participation falling linearly from 2e-6 to 5e-7 over 0–120.
fn curve() -> EprCurve {
    EprCurve::new("trench_depth", [0.0, 40.0, 80.0, 120.0].iter().map(|&v| (v, report(2e-6 - 1.25e-8 * v))).collect()).unwrap()
}

#[test]
fn table1_q_matches_printed_values() {
    let recs = load_qubit_table(&data("table1.csv")).unwrap();
    assert_eq!(recs.len(), 22);
    for r in &recs {
        let printed = r.q_printed.unwrap();
        assert!((r.q - printed).abs() <= Q_TOLERANCE * printed, "{}: {} vs {}", r.id(), r.q, printed);
        assert!(!r.q_mismatch);
    }
    assert!((recs[0].q - 3.44e6).abs() < 0.005 * 3.44e6);
    assert!((recs[4].q - 2.83e6).abs() < 0.005 * 2.83e6);
}

#[test]
fn table_without_q_column_derives_it() {
    let recs = parse_qubit_table("chip_id,qubit_id,substrate,capping,t1_avg_us,t1_sigma_us,freq_ghz\n1,1,sapphire,Au,116,,4.726\n").unwrap();
    assert!((recs[0].q - 3.4446e6).abs() < 1e3);
    assert!(recs[0].q_printed.is_none() && !recs[0].q_mismatch);
}

#[test]
fn wrong_printed_q_is_flagged_not_rejected() {
    let recs = parse_qubit_table("chip_id,qubit_id,substrate,capping,t1_avg_us,t1_sigma_us,freq_ghz,q\n1,1,sapphire,Au,116,,4.726,3.6e6\n").unwrap();
    assert!(recs[0].q_mismatch);
}

#[test]
fn missing_file_is_an_io_error() {
    assert!(matches!(load_qubit_table(Path::new("/nonexistent/q.csv")), Err(AnalysisError::Io { .. })));
}

#[test]
fn perfect_antitone_gives_minus_one() {
    let recs: Vec<_> = (0..4).map(|i| record("A", &i.to_string(), 4e6 - i as f64 * 1e5, Some(("x", i as f64)))).collect();
    let c = correlate_feature(&recs, "x", false).unwrap();
    assert_eq!((c.spearman, c.kendall, c.sign, c.n), (-1.0, -1.0, -1, 4));
}

#[test]
fn degenerate_correlations_are_errors() {
    let recs: Vec<_> = (0..4).map(|i| record("A", &i.to_string(), 4e6 - i as f64 * 1e5, Some(("x", 7.0)))).collect();
    assert!(matches!(correlate_feature(&recs, "x", false), Err(AnalysisError::ConstantFeature(_))));
    assert!(matches!(correlate_feature(&recs[..2], "x", false), Err(AnalysisError::InsufficientData { found: 2, .. })));
    assert!(matches!(correlate_feature(&recs, "y", true), Err(AnalysisError::InsufficientData { .. })));
}

#[test]
fn chip4_footer_angle_trends_against_q() {
    let recs = load_qubit_table(&data("chip4_alpha.csv")).unwrap();
    let c = correlate_feature(&recs, "alpha", true).unwrap();
    assert!(c.spearman < 0.0 && c.kendall < 0.0);
    assert_eq!(recs[0].features["alpha"].uncertainty, Some(4.0));
}

#[test]
fn grouped_correlation_weights_by_chip_size() {
    // chip A (4 records) is perfectly concordant, chip B (3) perfectly discordant
    let mut recs: Vec<_> = (0..4).map(|i| record("A", &i.to_string(), 1e6 + i as f64 * 1e5, Some(("x", i as f64)))).collect();
    recs.extend((0..3).map(|i| record("B", &i.to_string(), 1e6 - i as f64 * 1e5, Some(("x", i as f64)))));
    let c = correlate_feature(&recs, "x", true).unwrap();
    assert!((c.spearman - 1.0 / 7.0).abs() < 1e-12);
    assert_eq!(c.n, 7);
}

#[test]
fn loss_budget_arithmetic() {
    let q = loss_budget_q(&report(5e-5), &LossModel::oxide(0.1)).unwrap();
    assert!((q - 2e5).abs() < 1e-6);

    let e = BTreeMap::from([("oxide_top".into(), 1e-5), ("oxide_side".into(), 1e-5), ("vacuum".into(), 1.0 - 2e-5)]);
    let model = LossModel { tan_delta: BTreeMap::from([("top".into(), 0.1), ("side".into(), 0.1)]), q_other: 1e7 };
    let q = loss_budget_q(&EprReport::from_energies(e, 1, 0, 0), &model).unwrap();
    assert!((q - 1.0 / 2.1e-6).abs() < 1e-3);

    let model = LossModel { tan_delta: BTreeMap::from([("surface".into(), 0.0)]), q_other: 3e6 };
    assert_eq!(loss_budget_q(&report(5e-5), &model).unwrap(), 3e6);
}

#[test]
fn loss_model_validation() {
    let bad = LossModel { tan_delta: BTreeMap::from([("surface".into(), -0.1)]), q_other: f64::INFINITY };
    assert!(matches!(loss_budget_q(&report(1e-5), &bad), Err(AnalysisError::InvalidInput(_))));
    let bad = LossModel { tan_delta: BTreeMap::new(), q_other: 0.0 };
    assert!(bad.validate().is_err());
    let unknown = LossModel { tan_delta: BTreeMap::from([("lid".into(), 0.1)]), q_other: 1e7 };
    assert!(matches!(loss_budget_q(&report(1e-5), &unknown), Err(AnalysisError::UnknownInterface(_))));
}

#[test]
fn anchor_sits_inside_its_band() {
    let anchor = record("A", "1", 3e6, Some(("trench_depth", 50.0)));
    let band = predict_q_band(&curve(), &LossModel::oxide(0.1), "trench_depth", &anchor, 50.0, 0.1).unwrap();
    let (lo, mid, hi) = band.q_at(50.0).unwrap();
    assert!(lo <= anchor.q && anchor.q <= hi);
    assert!((mid - anchor.q).abs() < 1e-6 * anchor.q);
    let (m, s) = band_membership(std::slice::from_ref(&anchor), &band).unwrap();
    assert_eq!(m[0].side, Side::Inside);
    assert_eq!(s.inside, 1);
}

#[test]
fn zero_error_collapses_the_band() {
    let anchor = record("A", "1", 3e6, None);
    let band = predict_q_band(&curve(), &LossModel::oxide(0.1), "trench_depth", &anchor, 50.0, 0.0).unwrap();
    assert_eq!(band.q_low, band.q_mid);
    assert_eq!(band.q_high, band.q_mid);
}

#[test]
fn falling_participation_raises_q_mid() {
    let anchor = record("A", "1", 3e6, None);
    let band = predict_q_band(&curve(), &LossModel::oxide(0.1), "trench_depth", &anchor, 0.0, 0.1).unwrap();
    assert!(band.q_mid.windows(2).all(|w| w[1] > w[0]));
    for i in 0..band.values.len() {
        assert!(band.q_low[i] <= band.q_mid[i] && band.q_mid[i] <= band.q_high[i]);
    }
}

#[test]
fn infeasible_anchor_and_out_of_range() {
    // 1/Q = 1e-7 is below the surface loss of 2e-7 at v = 0
    let anchor = record("A", "1", 1e7, None);
    assert!(matches!(predict_q_band(&curve(), &LossModel::oxide(0.1), "t", &anchor, 0.0, 0.1), Err(AnalysisError::AnchorInfeasible { .. })));
    let anchor = record("A", "1", 3e6, None);
    assert!(matches!(predict_q_band(&curve(), &LossModel::oxide(0.1), "t", &anchor, 130.0, 0.1), Err(AnalysisError::InvalidInput(_))));
    assert!(predict_q_band(&curve(), &LossModel::oxide(0.1), "t", &anchor, 60.0, 1.0).is_err());
}

#[test]
fn one_of_four_outside() {
    let anchor = record("C", "1", 3e6, Some(("trench_depth", 40.0)));
    let band = predict_q_band(&curve(), &LossModel::oxide(0.1), "trench_depth", &anchor, 40.0, 0.1).unwrap();
    let mid = |v: f64| band.q_at(v).unwrap().1;
    let recs = vec![
        anchor.clone(),
        record("C", "2", mid(80.0), Some(("trench_depth", 80.0))),
        record("C", "3", mid(10.0) * 1.001, Some(("trench_depth", 10.0))),
        record("C", "4", band.q_at(100.0).unwrap().2 * 1.5, Some(("trench_depth", 100.0))),
    ];
    let (m, s) = band_membership(&recs, &band).unwrap();
    assert_eq!(m[3].side, Side::Above);
    assert_eq!((s.inside, s.total, s.above), (3, 4, 1));

    let low = record("C", "5", band.q_at(100.0).unwrap().0 * 0.5, Some(("trench_depth", 100.0)));
    let far = record("C", "6", 3e6, Some(("trench_depth", 500.0)));
    let (m, _) = band_membership(&[low, far], &band).unwrap();
    assert_eq!((m[0].side, m[1].side), (Side::Below, Side::OutOfRange));

    let bare = record("C", "7", 3e6, None);
    assert!(matches!(band_membership(&[bare], &band), Err(AnalysisError::MissingFeature(..))));
}

#[test]
fn default_anchor_prefers_tightest_spread_then_highest_q() {
    let recs = load_qubit_table(&data("table1.csv")).unwrap();
    assert_eq!(default_anchor(&recs, "1").unwrap().qubit_id, "4");
    let text = "chip_id,qubit_id,substrate,capping,t1_avg_us,t1_sigma_us,freq_ghz\nX,1,si,,100,20,5\nX,2,si,,50,2,5\n";
    let recs = parse_qubit_table(text).unwrap();
    assert_eq!(default_anchor(&recs, "X").unwrap().qubit_id, "2");
    assert!(default_anchor(&recs, "Y").is_none());
}

proptest! {
    #[test]
    fn q_scales_linearly_in_t1(t1 in 1.0f64..500.0, f in 3.0f64..8.0, k in 0.1f64..10.0) {
        let q = quality_factor(t1, f).unwrap();
        let scaled = quality_factor(k * t1, f).unwrap();
        prop_assert!((scaled - k * q).abs() <= 1e-12 * scaled);
        prop_assert!(quality_factor(t1 * 1.01, f).unwrap() > q);
        prop_assert!(quality_factor(t1, f * 1.01).unwrap() > q);
    }

    #[test]
    fn rank_statistics_ignore_monotone_transforms(xs in prop::collection::vec(0.1f64..10.0, 3..12), qs in prop::collection::vec(1e5f64..1e7, 12)) {
        let recs: Vec<_> = xs.iter().zip(&qs).enumerate().map(|(i, (&x, &q))| record("A", &i.to_string(), q, Some(("x", x)))).collect();
        let mut logged = recs.clone();
        let mut exped = recs.clone();
        for r in logged.iter_mut() { let f = r.features.get_mut("x").unwrap(); f.value = f.value.ln(); }
        for r in exped.iter_mut() { let f = r.features.get_mut("x").unwrap(); f.value = f.value.exp(); }
        match correlate_feature(&recs, "x", false) {
            Ok(c) => {
                prop_assert!((-1.0..=1.0).contains(&c.spearman) && (-1.0..=1.0).contains(&c.kendall));
                for other in [&logged, &exped] {
                    let d = correlate_feature(other, "x", false).unwrap();
                    prop_assert!((c.spearman - d.spearman).abs() < 1e-12);
                    prop_assert!((c.kendall - d.kendall).abs() < 1e-12);
                }
            }
            Err(e) => prop_assert!(matches!(e, AnalysisError::ConstantFeature(_))),
        }
    }

    #[test]
    fn band_ignores_curve_point_order(seed in any::<u64>(), v in 0.0f64..120.0) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let c = curve();
        let mut points: Vec<_> = c.values.iter().copied().zip(c.reports.iter().cloned()).collect();
        points.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
        let shuffled = EprCurve::new("trench_depth", points).unwrap();
        let anchor = record("A", "1", 3e6, None);
        let a = predict_q_band(&c, &LossModel::oxide(0.1), "trench_depth", &anchor, 30.0, 0.1).unwrap();
        let b = predict_q_band(&shuffled, &LossModel::oxide(0.1), "trench_depth", &anchor, 30.0, 0.1).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(a.q_at(v), b.q_at(v));
    }
}

#[test]
fn side_table_features_join_by_qubit() {
    let mut recs = load_qubit_table(&data("table1.csv")).unwrap();
    let n = attach_features(&mut recs, &std::fs::read_to_string(data("trench_depth.csv")).unwrap()).unwrap();
    assert_eq!(n, 22);
    assert!(recs.iter().all(|r| r.features["trench_depth"].unit == "nm"));
    let c = correlate_feature(&recs, "trench_depth", true).unwrap();
    assert!(c.spearman > 0.0);

    let err = attach_features(&mut recs, "chip_id,qubit_id,feat:x:nm\n9,9,1\n").unwrap_err();
    assert!(matches!(err, AnalysisError::RowError { row: 1, .. }));
}
