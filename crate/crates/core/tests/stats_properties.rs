use aiq_core::{
    absolute_iq, deviation_iq, mean, population_std_dev, rank_entries, CohortEntry,
    IntelligenceScale, ScoreVector,
};
use proptest::prelude::*;

fn cohort() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec((0u32..=400).prop_map(|q| f64::from(q) / 4.0), 2..60)
        .prop_filter("needs spread", |v| v.iter().any(|x| *x != v[0]))
}

fn entries(values: &[f64]) -> Vec<CohortEntry> {
    values
        .iter()
        .enumerate()
        .map(|(i, v)| CohortEntry {
            subject_id: format!("s{i:03}"),
            label: format!("s{i:03}"),
            region: None,
            absolute_iq: *v,
            flagged: false,
        })
        .collect()
}

fn weights() -> Vec<f64> {
    IntelligenceScale::default_scale()
        .subtests
        .iter()
        .map(|s| s.weight.as_f64())
        .collect()
}

fn subtest_scores() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec((0u32..=4).prop_map(|c| f64::from(c * 25)), 15)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn deviation_iqs_average_to_100(values in cohort()) {
        let r = rank_entries(entries(&values)).unwrap();
        let avg = r.rows.iter().map(|row| row.deviation_iq).sum::<f64>() / r.rows.len() as f64;
        prop_assert!((avg - 100.0).abs() < 1e-9, "mean IQ_d {}", avg);
    }

    #[test]
    fn ranking_by_absolute_equals_ranking_by_deviation(values in cohort()) {
        let r = rank_entries(entries(&values)).unwrap();
        for pair in r.rows.windows(2) {
            prop_assert!(pair[0].absolute_iq >= pair[1].absolute_iq);
            prop_assert!(pair[0].deviation_iq >= pair[1].deviation_iq);
            prop_assert_eq!(
                pair[0].absolute_iq == pair[1].absolute_iq,
                pair[0].deviation_iq == pair[1].deviation_iq
            );
        }
    }

    #[test]
    fn std_dev_is_translation_invariant(values in cohort(), shift in -1000.0f64..1000.0) {
        let s = population_std_dev(&values).unwrap();
        let moved: Vec<f64> = values.iter().map(|x| x + shift).collect();
        prop_assert!((population_std_dev(&moved).unwrap() - s).abs() < 1e-9);
    }

    #[test]
    fn std_dev_scales_with_the_data(values in cohort(), k in 0.01f64..100.0) {
        let s = population_std_dev(&values).unwrap();
        let scaled: Vec<f64> = values.iter().map(|x| x * k).collect();
        prop_assert!((population_std_dev(&scaled).unwrap() - k * s).abs() < 1e-9 * (1.0 + k * s));
    }

    #[test]
    fn deviation_iq_is_unchanged_by_affine_rescaling(values in cohort(), k in 0.1f64..10.0, b in -50.0f64..50.0) {
        let (m, s) = (mean(&values).unwrap(), population_std_dev(&values).unwrap());
        let moved: Vec<f64> = values.iter().map(|x| k * x + b).collect();
        let (m2, s2) = (mean(&moved).unwrap(), population_std_dev(&moved).unwrap());
        for (x, y) in values.iter().zip(&moved) {
            prop_assert!((deviation_iq(*x, m, s) - deviation_iq(*y, m2, s2)).abs() < 1e-9);
        }
    }

    #[test]
    fn absolute_iq_is_linear_and_bounded(a in subtest_scores(), b in subtest_scores()) {
        let w = weights();
        let iq = |f: &[f64]| absolute_iq(&ScoreVector::new(f.to_vec(), w.clone()).unwrap());
        let half_sum: Vec<f64> = a.iter().zip(&b).map(|(x, y)| (x + y) / 2.0).collect();
        prop_assert!((iq(&half_sum) - (iq(&a) + iq(&b)) / 2.0).abs() < 1e-9);
        prop_assert!((0.0..=100.0 + 1e-9).contains(&iq(&a)));
        // Oracle: integer percent weights, so 100·IQ_A is an exact integer sum.
        let scale = IntelligenceScale::default_scale();
        let exact: u32 = scale.subtests.iter().zip(&a).map(|(s, f)| s.weight.as_percent() * (*f as u32)).sum();
        prop_assert!((iq(&a) - f64::from(exact) / 100.0).abs() < 1e-9);
    }
}

#[test]
fn identical_scores_put_everyone_at_100() {
    let r = rank_entries(entries(&[12.0, 12.0, 12.0])).unwrap();
    assert_eq!(r.std_dev, 0.0);
    assert!(r.rows.iter().all(|row| row.deviation_iq == 100.0));
    let single = rank_entries(entries(&[55.5])).unwrap();
    assert_eq!(
        (single.rows[0].rank, single.rows[0].deviation_iq),
        (1, 100.0)
    );
}

#[test]
fn ties_are_ranked_by_subject_id() {
    let r = rank_entries(entries(&[6.0, 20.5, 6.0])).unwrap();
    let ids: Vec<&str> = r.rows.iter().map(|row| row.subject_id.as_str()).collect();
    assert_eq!(ids, ["s001", "s000", "s002"]);
}
