mod common;

use asdface::classifiers::{fit, predict_proba, ClassifierKind, ClassifierSpec};
use asdface::eval::{
    ablation_study, attribute_mask, attribute_significance, default_ablation_subsets, fit_fold, loocv, Cohort,
    Diagnosis, StudyRecord,
};
use asdface::features::{temporal_feature_vector, Attribute, DEFAULT_TAU, FEATURE_DIM, VALENCE_COLUMN};
use asdface::features::TemporalFeatures;
use asdface::io::{synthesize_streams, AttributeEffects, SynthSpec};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

fn record(id: &str, positive: bool, values: Vec<f64>) -> StudyRecord {
    StudyRecord {
        id: id.to_string(),
        diagnosis: Diagnosis::from_positive(positive),
        features: TemporalFeatures::from_values(values).unwrap(),
    }
}

/// Gaussian features; positives are shifted by `shift` on the given dims.
fn gaussian_cohort(seed: u64, per_group: usize, dims: &[usize], shift: f64) -> Cohort {
    let mut r = common::rng(seed);
    let mut records = Vec::new();
    for g in 0..2 {
        for i in 0..per_group {
            let mut v: Vec<f64> = (0..FEATURE_DIM).map(|_| StandardNormal.sample(&mut r)).collect();
            if g == 0 {
                for &d in dims {
                    v[d] += shift;
                }
            }
            records.push(record(&format!("p{g}_{i:03}"), g == 0, v));
        }
    }
    Cohort::new(records).unwrap()
}

fn synthetic_cohort(spec: &SynthSpec) -> Cohort {
    let records = synthesize_streams(spec)
        .unwrap()
        .into_iter()
        .map(|p| StudyRecord {
            features: temporal_feature_vector(&p.frames, DEFAULT_TAU).unwrap(),
            id: p.id,
            diagnosis: p.diagnosis,
        })
        .collect();
    Cohort::new(records).unwrap()
}

fn masked_rows(cohort: &Cohort, mask: &[usize], skip: Option<usize>) -> (Vec<Vec<f64>>, Vec<bool>) {
    let mut x = Vec::new();
    let mut y = Vec::new();
    for (i, r) in cohort.records().iter().enumerate() {
        if Some(i) != skip {
            x.push(mask.iter().map(|&j| r.features.as_slice()[j]).collect());
            y.push(r.diagnosis.is_positive());
        }
    }
    (x, y)
}

#[test]
fn five_participants_give_five_folds() {
    let values = |a: f64| {
        let mut v = vec![0.0; FEATURE_DIM];
        v[0] = a;
        v[1] = 0.5 * a + 0.1;
        v
    };
    let cohort = Cohort::new(vec![
        record("a", true, values(3.0)),
        record("b", true, values(2.5)),
        record("c", true, values(2.0)),
        record("d", false, values(-2.0)),
        record("e", false, values(-3.0)),
    ])
    .unwrap();
    let mask = vec![0, 1];
    let spec = ClassifierSpec::new(ClassifierKind::LogisticRegression);
    let report = loocv(&cohort, &spec, &mask).unwrap();
    assert_eq!(report.folds.len(), 5);
    assert_eq!(report.folds.iter().map(|f| f.id.as_str()).collect::<Vec<_>>(), ["a", "b", "c", "d", "e"]);
    assert!(report.folds.iter().all(|f| f.predicted == f.truth && !f.base_rate_fallback));
    assert_eq!(report.metrics.f1, Some(1.0));
    // each fold model is the one trained on the other four
    for i in 0..5 {
        let (x, y) = masked_rows(&cohort, &mask, Some(i));
        assert_eq!(x.len(), 4);
        let direct = fit(&spec, &x, &y).unwrap();
        assert_eq!(fit_fold(&cohort, &spec, &mask, i).unwrap().unwrap(), direct);
        let held: Vec<f64> = mask.iter().map(|&j| cohort.records()[i].features.as_slice()[j]).collect();
        assert_eq!(predict_proba(&direct, &held).unwrap(), report.folds[i].probability);
    }
}

#[test]
fn held_out_record_never_leaks_into_its_fold() {
    let cohort = gaussian_cohort(2, 8, &[3, 10], 1.0);
    let mask: Vec<usize> = (0..FEATURE_DIM).collect();
    for kind in ClassifierKind::ALL {
        let spec = ClassifierSpec::new(kind);
        for i in [0, 5, 13] {
            let before = fit_fold(&cohort, &spec, &mask, i).unwrap();
            let mut records = cohort.records().to_vec();
            let r = &mut records[i];
            let mut v = r.features.as_slice().to_vec();
            v.iter_mut().for_each(|x| *x = *x * 100.0 + 42.0);
            r.features = TemporalFeatures::from_values(v).unwrap();
            let mutated = Cohort::new(records).unwrap();
            assert_eq!(before, fit_fold(&mutated, &spec, &mask, i).unwrap(), "{kind} fold {i}");
        }
    }
}

#[test]
fn duplication_never_lowers_fold_training_accuracy() {
    let cohort = gaussian_cohort(3, 10, &[0, 1, 2], 0.8);
    let mask = attribute_mask(&[Attribute::Au]).unwrap();
    for kind in [ClassifierKind::LogisticRegression, ClassifierKind::Lda, ClassifierKind::GradientBoostedTrees] {
        let spec = ClassifierSpec::new(kind);
        for i in 0..cohort.len() {
            let (x, y) = masked_rows(&cohort, &mask, Some(i));
            let acc = |xs: &[Vec<f64>], ys: &[bool]| {
                let m = fit(&spec, xs, ys).unwrap();
                x.iter().zip(&y).filter(|(r, &t)| (predict_proba(&m, r).unwrap() > 0.5) == t).count() as f64
                    / x.len() as f64
            };
            let (mut dx, mut dy) = (x.clone(), y.clone());
            dx.extend(x.iter().cloned());
            dy.extend(y.iter().copied());
            assert!(acc(&dx, &dy) >= acc(&x, &y) - 1e-12, "{kind} fold {i}");
        }
    }
}

#[test]
fn single_label_fold_falls_back_to_base_rate() {
    let mut v = vec![0.0; FEATURE_DIM];
    let cohort = Cohort::new(vec![
        record("a", true, v.clone()),
        {
            v[0] = 1.0;
            record("b", false, v.clone())
        },
        {
            v[0] = 2.0;
            record("c", false, v.clone())
        },
    ])
    .unwrap();
    let report = loocv(&cohort, &ClassifierSpec::new(ClassifierKind::LogisticRegression), &[0]).unwrap();
    let a = &report.folds[0];
    assert!(a.base_rate_fallback && a.probability == 0.0 && !a.predicted);
    assert_eq!(report.warnings.len(), 1);
    assert!(report.warnings[0].contains("'a'"));
}

#[test]
fn loocv_contract_errors() {
    let cohort = gaussian_cohort(4, 3, &[], 0.0);
    let spec = ClassifierSpec::new(ClassifierKind::LogisticRegression);
    assert!(loocv(&cohort, &spec, &[]).is_err());
    assert!(loocv(&cohort, &spec, &[FEATURE_DIM]).is_err());
    let one_group = Cohort::new(cohort.records().iter().filter(|r| r.diagnosis.is_positive()).cloned().collect()).unwrap();
    assert!(loocv(&one_group, &spec, &[0]).is_err());
    let dup = Cohort::new(vec![cohort.records()[0].clone(), cohort.records()[0].clone()]);
    assert!(dup.unwrap_err().to_string().contains(&cohort.records()[0].id));
}

#[test]
fn attribute_masks_partition_the_features() {
    assert_eq!(attribute_mask(&[Attribute::Au]).unwrap().len(), 36);
    assert_eq!(attribute_mask(&[Attribute::Arousal]).unwrap(), vec![20, 42, 56]);
    assert_eq!(attribute_mask(&[Attribute::Valence]).unwrap(), vec![21, 43, 57]);
    assert_eq!(attribute_mask(&Attribute::ALL).unwrap(), (0..FEATURE_DIM).collect::<Vec<_>>());
    let total: usize = Attribute::ALL.iter().map(|a| a.feature_indices().len()).sum();
    assert_eq!(total, FEATURE_DIM);
    assert!(attribute_mask(&[]).is_err());
}

#[test]
fn ablation_is_reproducible_and_rewards_signal_outside_aus() {
    let mut spec = SynthSpec {
        participants_per_group: 20,
        frames_per_participant: 100,
        ..SynthSpec::default()
    };
    spec.effects = AttributeEffects {
        au: 0.0,
        arousal: 0.0,
        valence: 0.0,
        expr: 3.0,
    };
    let cohort = synthetic_cohort(&spec);
    let clf = ClassifierSpec::new(ClassifierKind::LogisticRegression).with_seed(5);
    let a = ablation_study(&cohort, &clf, &default_ablation_subsets()).unwrap();
    let b = ablation_study(&cohort, &clf, &default_ablation_subsets()).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.len(), 4);
    assert!(a[3].metrics.f1.unwrap() > a[0].metrics.f1.unwrap_or(0.0));
}

#[test]
fn null_groups_are_not_significant() {
    let mut medians = Vec::new();
    for seed in 0..100 {
        let spec = SynthSpec {
            participants_per_group: 10,
            frames_per_participant: 40,
            effects: AttributeEffects {
                au: 0.0,
                arousal: 0.0,
                valence: 0.0,
                expr: 0.0,
            },
            seed,
            ..SynthSpec::default()
        };
        let report = attribute_significance(&synthetic_cohort(&spec)).unwrap();
        let ps: Vec<f64> = report.attributes.iter().map(|a| a.test.p).collect();
        assert!(ps.iter().all(|p| (0.0..=1.0).contains(p)));
        medians.push(ps);
    }
    for k in 0..4 {
        let mut col: Vec<f64> = medians.iter().map(|ps| ps[k]).collect();
        col.sort_by(f64::total_cmp);
        let median = 0.5 * (col[49] + col[50]);
        assert!(median > 0.2, "attribute {k}: median p {median}");
    }
}

#[test]
fn shifted_valence_is_significant() {
    // valence summary shifted by three within-group standard deviations
    let mut r = common::rng(12);
    let mut records = Vec::new();
    for i in 0..40 {
        let pos = i < 20;
        let mut v: Vec<f64> = (0..FEATURE_DIM).map(|_| r.random_range(0.0..1.0)).collect();
        let e: f64 = StandardNormal.sample(&mut r);
        v[VALENCE_COLUMN] = 0.1 * e + if pos { 0.3 } else { 0.0 };
        records.push(record(&format!("r{i:02}"), pos, v));
    }
    let report = attribute_significance(&Cohort::new(records).unwrap()).unwrap();
    let val = report.attribute(Attribute::Valence).unwrap();
    assert!(val.test.p < 0.01, "{}", val.test.p);
    assert!(val.asd_mean > val.non_asd_mean);
    assert_eq!(report.per_feature.len(), FEATURE_DIM);
    assert_eq!(report.per_feature[VALENCE_COLUMN].test, val.test);
}
