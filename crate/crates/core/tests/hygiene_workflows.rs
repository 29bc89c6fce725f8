mod common;

use ccbench::estimators::{estimate_with_policy, EstimatorSpec};
use ccbench::evaluation::EstimateSet;
use ccbench::geometry::Quad;
use ccbench::groundtruth::{extract_ground_truth, GroundTruthTable};
use ccbench::hygiene::{
    camera_split_analysis, detect_unsubtracted_black, pipeline_forensics, uniform_illumination_check, CheckId,
    HygieneReport, LabeledRegion, Severity,
};
use ccbench::imaging::{saturation_mask, subtract_black, BlackLevelPolicy, ClipMargin, Pipeline};
use ccbench::synthetic::{
    flat, make_benchmark, planckian_spd, render, BenchmarkConfig, CameraModel, RenderOptions, SpectralScene, Surface,
};

fn raw_dataset(n: usize, seed: u64) -> ccbench::SyntheticDataset {
    let mut cfg = BenchmarkConfig::<f64>::new(n, vec![CameraModel::reference()], seed);
    cfg.inject_black = true;
    cfg.quantize = true;
    make_benchmark(cfg).unwrap()
}

#[test]
fn pedestal_detected_before_and_not_after_subtraction() {
    let ds = raw_dataset(3, 8);
    for item in &ds.items {
        let before = detect_unsubtracted_black(&item.image, Some(&item.image_id), 0.01);
        assert_eq!(before.severity, Severity::Warn);
        let after = detect_unsubtracted_black(&subtract_black(&item.image).unwrap(), None, 0.01);
        assert_eq!(after.severity, Severity::Info);
    }
}

#[test]
fn forensics_attributes_unsubtracted_gray_world() {
    let ds = raw_dataset(12, 9);
    let gw = EstimatorSpec::<f64>::gray_world();
    let mut gt_sub = GroundTruthTable::new();
    let mut gt_unsub = GroundTruthTable::new();
    let mut wrong = EstimateSet::new();
    let mut right = EstimateSet::new();
    for (item, ann) in ds.items.iter().zip(&ds.annotations) {
        let raw = &item.image;
        let sub = subtract_black(raw).unwrap();
        let m_raw = saturation_mask(raw, ClipMargin::default());
        let m_sub = saturation_mask(&sub, ClipMargin::default());
        let id = item.image_id.clone();
        let unsafe_ = BlackLevelPolicy::UnsafeAllowUnsubtracted;
        gt_sub
            .insert(
                &id,
                extract_ground_truth(&sub, ann, &m_sub, BlackLevelPolicy::Require).unwrap(),
                "a",
            )
            .unwrap();
        gt_unsub
            .insert(&id, extract_ground_truth(raw, ann, &m_raw, unsafe_).unwrap(), "a")
            .unwrap();
        wrong
            .insert(&id, estimate_with_policy(raw, &gw, None, unsafe_).unwrap())
            .unwrap();
        right
            .insert(
                &id,
                estimate_with_policy(&sub, &gw, None, BlackLevelPolicy::Require).unwrap(),
            )
            .unwrap();
    }
    let findings = pipeline_forensics(&wrong, &right, &gt_sub, &gt_unsub).unwrap();
    assert_eq!(findings[0].check_id, CheckId::PipelineIdentity);
    assert_eq!(findings[0].severity, Severity::Info);
    let wrong_attr = &findings[1];
    assert_eq!(
        wrong_attr.evidence["closer_to"],
        serde_json::json!(Pipeline::Unsubtracted)
    );
    assert!(wrong_attr.evidence["gap_deg"].as_f64().unwrap() > 0.0);
    assert!(wrong_attr.message.contains("closer to gt_unsub"));
    assert_eq!(
        findings[2].evidence["closer_to"],
        serde_json::json!(Pipeline::Subtracted)
    );

    let copy = pipeline_forensics(&wrong, &wrong.clone(), &gt_sub, &gt_unsub).unwrap();
    assert_eq!(copy[0].severity, Severity::Fail);
    assert!(HygieneReport::new(copy).fails(Severity::Fail));
}

#[test]
fn benchmark_with_two_cameras_shows_two_lines() {
    let mut cfg = BenchmarkConfig::<f64>::new(100, vec![CameraModel::reference(), CameraModel::shifted()], 10);
    // Over 2500-7500 K locus curvature alone puts the residual near a third of the gap.
    cfg.cct_range = (3500.0, 6500.0);
    let ds = make_benchmark(cfg).unwrap();
    let rep = camera_split_analysis(&ds.ground_truth).unwrap();
    assert_eq!(rep.cameras.len(), 2);
    assert_eq!(rep.cameras[0].points.len(), 50);
    assert!(
        rep.two_lines,
        "separation {} residual {}",
        rep.separation, rep.max_rms_residual
    );
    assert!(rep.separation > 0.0);
}

#[test]
fn line_fit_is_order_invariant_on_real_data() {
    let cfg = BenchmarkConfig::<f64>::new(30, vec![CameraModel::reference()], 12);
    let ds = make_benchmark(cfg).unwrap();
    let fwd = camera_split_analysis(&ds.ground_truth).unwrap();
    let mut rows: Vec<_> = ds.ground_truth.iter().collect();
    rows.reverse();
    let mut rev = GroundTruthTable::new();
    for (id, r) in rows {
        rev.insert(id, r.illuminant, r.camera_id.clone()).unwrap();
    }
    let back = camera_split_analysis(&rev).unwrap();
    assert_eq!(fwd.cameras[0].fit, back.cameras[0].fit);
}

/// Wall lit by light A on the left third, lights B and C on the others.
fn three_light_check(angles: [f64; 2]) -> ccbench::hygiene::UniformityReport<f64> {
    let cam = CameraModel::<f64>::reference();
    let spd_a = planckian_spd(4500.0).unwrap();
    let e_a = cam.response(&spd_a);
    let (w, h) = (48, 16);
    let mut scene = SpectralScene::uniform(
        w,
        h,
        spd_a,
        Surface {
            name: "wall".into(),
            reflectance: flat(0.6),
        },
    );
    for (k, deg) in angles.iter().enumerate() {
        let spd = cam.spd_with_response(&spd_a, common::tilt(e_a, *deg)).unwrap();
        scene.lights.push(spd);
        scene.paint(16 * (k + 1), 0, 16 * (k + 2), h, 0, (k + 1) as u8);
    }
    let peak = e_a.iter().copied().fold(0.0, f64::max) * 0.6;
    let cam = cam.with_gain(1500.0 / peak).unwrap();
    let img = render(&scene, &cam, &RenderOptions::default()).unwrap().image;
    let regions: Vec<LabeledRegion<f64>> = ["wall", "shadow", "deep shadow"]
        .iter()
        .enumerate()
        .map(|(k, label)| LabeledRegion {
            label: label.to_string(),
            quad: Quad::rect(16.0 * k as f64 + 2.0, 2.0, 16.0 * k as f64 + 14.0, 14.0),
        })
        .collect();
    uniform_illumination_check(&img, Some("scene"), &regions, 1.0, BlackLevelPolicy::Require).unwrap()
}

#[test]
fn three_regions_three_findings() {
    // Coplanar tilts: pairs at 1.8, 4.0 and 2.2 degrees.
    let rep = three_light_check([1.8, 4.0]);
    assert!((rep.matrix[0][1] - 1.8).abs() < 0.02);
    assert!((rep.matrix[0][2] - 4.0).abs() < 0.02);
    assert!((rep.matrix[1][2] - 2.2).abs() < 0.02);
    assert_eq!(rep.findings.len(), 3);
    assert!(rep.findings.iter().all(|f| f.severity == Severity::Warn));
    for i in 0..3 {
        assert_eq!(rep.matrix[i][i], 0.0);
        for j in 0..3 {
            assert_eq!(rep.matrix[i][j], rep.matrix[j][i]);
        }
    }
}

#[test]
fn unsubtracted_image_refused_by_uniform_check() {
    let ds = raw_dataset(1, 3);
    let regions = vec![
        LabeledRegion {
            label: "a".into(),
            quad: Quad::rect(0.0, 0.0, 4.0, 4.0),
        },
        LabeledRegion {
            label: "b".into(),
            quad: Quad::rect(4.0, 0.0, 8.0, 4.0),
        },
    ];
    assert!(uniform_illumination_check(&ds.items[0].image, None, &regions, 1.0, BlackLevelPolicy::Require).is_err());
}
