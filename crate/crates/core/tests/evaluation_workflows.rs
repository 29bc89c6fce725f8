mod common;

use ccbench::evaluation::{evaluate, tabulate, EstimateSet, RunTags, MISMATCH_WARNING, UNSUBTRACTED_WARNING};
use ccbench::groundtruth::{diff_ground_truths, GroundTruthTable};
use ccbench::illuminant::Illuminant;
use ccbench::imaging::Pipeline;
use ccbench::Error;

fn base_table(n: usize) -> GroundTruthTable<f64> {
    let mut t = GroundTruthTable::new();
    for i in 0..n {
        let x = i as f64 / n as f64;
        t.insert(
            format!("{:03}", i + 1),
            Illuminant::new([0.9 - 0.4 * x, 0.8, 0.3 + 0.5 * x]).unwrap(),
            "cam",
        )
        .unwrap();
    }
    t
}

fn tags(pipeline: Pipeline, gt: &str) -> RunTags {
    RunTags {
        estimator: "gray-world".into(),
        pipeline,
        ground_truth_id: gt.into(),
        ground_truth_pipeline: Some(Pipeline::Subtracted),
    }
}

#[test]
fn diff_of_two_degree_rotation_has_two_degree_median() {
    let a = base_table(25);
    let mut b = GroundTruthTable::new();
    for (id, rec) in a.iter() {
        let rotated = common::tilt(rec.illuminant.rgb(), 2.0);
        b.insert(id, Illuminant::new(rotated).unwrap(), rec.camera_id.clone())
            .unwrap();
    }
    let d = diff_ground_truths(&a, &b).unwrap();
    assert!((d.stats.median - 2.0).abs() < 1e-6, "{}", d.stats.median);
    assert!((d.max - 2.0).abs() < 1e-6);
    let back = diff_ground_truths(&b, &a).unwrap();
    assert_eq!(d.per_image_angle, back.per_image_angle);
}

#[test]
fn diff_of_identical_tables_is_zero() {
    let a = base_table(7);
    let d = diff_ground_truths(&a, &a).unwrap();
    assert!(d.per_image_angle.values().all(|v| *v == 0.0));
    assert_eq!(d.stats.median, 0.0);
}

#[test]
fn diff_single_orthogonal_pair() {
    let mut a = GroundTruthTable::<f64>::new();
    a.insert("x", Illuminant::new([1.0, 0.0, 0.0]).unwrap(), "c").unwrap();
    a.insert("only-a", Illuminant::neutral(), "c").unwrap();
    let mut b = GroundTruthTable::new();
    b.insert("x", Illuminant::new([0.0, 1.0, 0.0]).unwrap(), "c").unwrap();
    let d = diff_ground_truths(&a, &b).unwrap();
    assert_eq!(d.per_image_angle.len(), 1);
    for v in [
        d.stats.mean,
        d.stats.median,
        d.stats.trimean,
        d.stats.best25_mean,
        d.stats.worst25_mean,
        d.max,
        d.p75,
    ] {
        assert!((v - 90.0).abs() < 1e-12);
    }
}

#[test]
fn diff_requires_overlap() {
    let a = base_table(2);
    let mut b = GroundTruthTable::new();
    b.insert("zzz", Illuminant::neutral(), "c").unwrap();
    assert!(matches!(diff_ground_truths(&a, &b), Err(Error::EmptyIntersection)));
}

#[test]
fn injected_errors_one_to_ten_degrees() {
    let gt = base_table(10);
    let estimates: EstimateSet<f64> = gt
        .iter()
        .enumerate()
        .map(|(i, (id, rec))| {
            let e = common::tilt(rec.illuminant.rgb(), (i + 1) as f64);
            (id.to_string(), Illuminant::new(e).unwrap())
        })
        .collect();
    let run = evaluate(&estimates, &gt, tags(Pipeline::Subtracted, "v2")).unwrap();
    assert!((run.stats.median - 5.5).abs() < 1e-9);
    assert!((run.stats.max - 10.0).abs() < 1e-9);
    assert_eq!(run.recompute_stats().unwrap(), run.stats);
    assert!(run.warnings.is_empty());
}

#[test]
fn unsafe_runs_carry_warnings() {
    let gt = base_table(3);
    let est: EstimateSet<f64> = gt.iter().map(|(id, r)| (id.to_string(), r.illuminant)).collect();
    let run = evaluate(&est, &gt, tags(Pipeline::Unsubtracted, "v2")).unwrap();
    assert_eq!(run.pipeline, Pipeline::Unsubtracted);
    assert!(run.warnings.iter().any(|w| w == UNSUBTRACTED_WARNING));
    assert!(run.warnings.iter().any(|w| w == MISMATCH_WARNING));
    let json = serde_json::to_value(&run).unwrap();
    assert_eq!(json["pipeline"], "unsubtracted");
}

#[test]
fn tables_refuse_mixed_ground_truth() {
    let gt = base_table(3);
    let est: EstimateSet<f64> = gt.iter().map(|(id, r)| (id.to_string(), r.illuminant)).collect();
    let a = evaluate(&est, &gt, tags(Pipeline::Subtracted, "v2")).unwrap();
    let b = evaluate(&est, &gt, tags(Pipeline::Subtracted, "v1")).unwrap();
    assert!(matches!(
        tabulate(&[a.clone(), b.clone()], false),
        Err(Error::MixedGroundTruth(_))
    ));
    assert_eq!(tabulate(&[a.clone(), b], true).unwrap().len(), 2);
    assert_eq!(tabulate(&[a.clone(), a], false).unwrap().len(), 2);
}

#[test]
fn csv_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let gt = base_table(5);
    let p = dir.path().join("gt.csv");
    gt.write_csv(&p).unwrap();
    let back = GroundTruthTable::<f64>::read_csv(&p).unwrap();
    assert_eq!(back.len(), 5);
    for (id, rec) in gt.iter() {
        assert!(rec.illuminant.angle_to(&back.get(id).unwrap().illuminant) < 1e-9);
    }
    // Unnormalised triples are accepted and normalised.
    std::fs::write(&p, "image_id,R,G,B,camera_id\n7,2,1,1,cam\n").unwrap();
    let t = GroundTruthTable::<f64>::read_csv(&p).unwrap();
    let rgb = t.get("7").unwrap().illuminant.rgb();
    assert!((rgb[0] - 2.0 / 6f64.sqrt()).abs() < 1e-12);
}
