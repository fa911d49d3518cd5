mod common;

use rand::Rng;
use tesskern::data::persist::{load_model, model_from_json, model_to_json, save_model};
use tesskern::data::synth::{generate_circle, generate_spiral};
use tesskern::data::{load_csv, stratified_folds, train_test_split, write_csv};
use tesskern::learner::{cross_validate, fit, Method, MethodConfig};
use tesskern::{Dataset, Error, LabelColumn, SplitSpec};

fn fixed(c: f64) -> MethodConfig {
    MethodConfig::new(Method::FixedKernel).with_c(c)
}

#[test]
fn folds_are_balanced_and_stratified() {
    let data = generate_circle(53, 0.0, 4).unwrap();
    let folds = stratified_folds(data.labels(), 5, 9).unwrap();
    let mut sizes = [0usize; 5];
    let mut pos = [0usize; 5];
    for (i, &f) in folds.iter().enumerate() {
        sizes[f] += 1;
        if data.labels()[i] > 0.0 {
            pos[f] += 1;
        }
    }
    assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
    assert!(pos.iter().max().unwrap() - pos.iter().min().unwrap() <= 1);
    assert_eq!(stratified_folds(data.labels(), 5, 9).unwrap(), folds);
}

#[test]
fn cross_validation_ties_go_to_the_smallest_c() {
    // two well separated clusters: every C classifies every fold perfectly
    let mut rng = common::rng(1);
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for i in 0..30 {
        let y = if i % 2 == 0 { 1.0 } else { -1.0 };
        let centre = if y > 0.0 { 0.15 } else { 0.85 };
        rows.push(vec![centre + 0.05 * rng.random::<f64>(), centre + 0.05 * rng.random::<f64>()]);
        labels.push(y);
    }
    let data = Dataset::from_rows(&rows, labels).unwrap();
    let cv = cross_validate(&data, &[100.0, 1.0, 10.0], 5, &fixed(1.0), 3).unwrap();
    assert_eq!(cv.c_grid, vec![1.0, 10.0, 100.0]);
    assert!(cv.mean_scores.iter().all(|&s| s == 1.0), "{:?}", cv.mean_scores);
    assert_eq!(cv.best_c, 1.0);
    assert!(cv.flagged_folds().is_empty());
}

#[test]
fn single_class_folds_are_flagged_and_excluded() {
    // three positives over five folds leaves two validation folds without one
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for i in 0..20 {
        rows.push(vec![i as f64 / 20.0]);
        labels.push(if i < 3 { 1.0 } else { -1.0 });
    }
    let data = Dataset::from_rows(&rows, labels).unwrap();
    let cv = cross_validate(&data, &[1.0], 5, &fixed(1.0), 0).unwrap();
    assert_eq!(cv.flagged_folds().len(), 2);
    assert!(cv.mean_scores[0].is_finite());
}

#[test]
fn split_is_stratified_and_reproducible() {
    let data = generate_spiral(100, 0.0, 1.25, 2).unwrap();
    let (tr, te) = train_test_split(&data, &SplitSpec::with_seed(5)).unwrap();
    assert_eq!(tr.len(), 80);
    assert_eq!(te.len(), 20);
    let (p, n) = tr.class_counts();
    assert!(p.abs_diff(n) <= 1);
    let (tr2, _) = train_test_split(&data, &SplitSpec::with_seed(5)).unwrap();
    assert_eq!(tr.features(), tr2.features());
}

#[test]
fn synthetic_prefix_property() {
    let small = generate_spiral(50, 0.0, 1.25, 7).unwrap();
    let large = generate_spiral(400, 0.0, 1.25, 7).unwrap();
    for i in 0..50 {
        assert_eq!(small.row(i), large.row(i));
        assert_eq!(small.labels()[i], large.labels()[i]);
    }
}

#[test]
fn csv_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.csv");
    let data = generate_circle(25, 0.1, 1).unwrap();
    write_csv(&data, &path).unwrap();
    let (back, _) = load_csv(&path, &LabelColumn::Last).unwrap();
    assert_eq!(back.labels(), data.labels());
    assert_eq!(back.features(), data.features());
}

#[test]
fn malformed_csv_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    std::fs::write(&path, "a,b,label\n0.1,0.2,1\n0.3,oops,-1\n").unwrap();
    assert!(load_csv(&path, &LabelColumn::Last).is_err());
    let missing = dir.path().join("missing.csv");
    assert!(matches!(load_csv(&missing, &LabelColumn::Last), Err(e) if e.is_io()));
}

fn trained_model(method: Method) -> (tesskern::SvmModel, Dataset) {
    let data = generate_circle(40, 0.0, 3).unwrap();
    let mut cfg = MethodConfig::new(method).with_c(10.0);
    cfg.basis_size = 10;
    cfg.saddle_max_iter = 200;
    let (model, _) = fit(&data, &cfg).unwrap();
    (model, data)
}

#[test]
fn models_round_trip_through_json() {
    for method in [Method::TessellatedSaddle, Method::MklGaussianPoly, Method::MklCombined] {
        let (model, data) = trained_model(method);
        let back = model_from_json(&model_to_json(&model).unwrap()).unwrap();
        assert_eq!(back, model, "{method}");
        assert_eq!(back.decision_values(&data).unwrap(), model.decision_values(&data).unwrap());
    }
}

#[test]
fn awkward_floats_survive_persistence() {
    let (mut model, _) = trained_model(Method::FixedKernel);
    let mut rng = common::rng(12);
    let specials = [0.1 + 0.2, 1e-300, 5e-324, 1.0 / 3.0, 123456789.123456789, f64::MIN_POSITIVE];
    for (i, a) in model.alpha.iter_mut().enumerate() {
        *a = if i < specials.len() { specials[i] } else { rng.random::<f64>() * 10f64.powi(rng.random_range(-200..200)) };
    }
    model.bias = -rng.random::<f64>() / 7.0;
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.json");
    save_model(&model, &path).unwrap();
    let back = load_model(&path).unwrap();
    assert_eq!(back.alpha, model.alpha);
    assert_eq!(back.bias.to_bits(), model.bias.to_bits());
}

#[test]
fn corrupted_documents_are_rejected() {
    let (model, _) = trained_model(Method::FixedKernel);
    let text = model_to_json(&model).unwrap();

    let tampered = text.replacen("\"bias\": ", "\"bias\": 1", 1);
    assert_ne!(tampered, text);
    assert!(matches!(model_from_json(&tampered), Err(Error::Corrupted(_))));

    assert!(matches!(model_from_json(&text[..text.len() / 2]), Err(Error::Corrupted(_))));

    let future = text.replacen("\"format_version\": 1", "\"format_version\": 99", 1);
    assert!(matches!(model_from_json(&future), Err(Error::FormatVersion { found: 99, .. })));
}

#[test]
fn fitting_is_deterministic() {
    for method in [Method::TessellatedSaddle, Method::MklRandomTess] {
        let (a, _) = trained_model(method);
        let (b, _) = trained_model(method);
        assert_eq!(model_to_json(&a).unwrap(), model_to_json(&b).unwrap());
    }
}
