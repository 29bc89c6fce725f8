use ccbench::estimators::{estimate, EstimatorSpec};
use ccbench::groundtruth::{extract_ground_truth, read_annotations, GroundTruthTable};
use ccbench::imaging::{read_ppm16, saturation_mask, subtract_black, BlackLevelPolicy, ClipMargin, LinearImage};
use ccbench::manifest::Manifest;
use ccbench::synthetic::{make_benchmark, BenchmarkConfig, CameraModel};

fn raw_config(n: usize, seed: u64) -> BenchmarkConfig<f64> {
    let mut cfg = BenchmarkConfig::new(n, vec![CameraModel::reference(), CameraModel::shifted()], seed);
    cfg.inject_black = true;
    cfg.quantize = true;
    cfg
}

fn tree(dir: &std::path::Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                out.push((rel, std::fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn written_dataset_reads_back_exactly() {
    let ds = make_benchmark(raw_config(4, 7)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let manifest = ds.write(dir.path()).unwrap();
    let mpath = dir.path().join("manifest.json");
    assert_eq!(Manifest::read(&mpath).unwrap(), manifest);

    let anns = read_annotations::<f64>(&Manifest::resolve(&mpath, manifest.annotations.as_deref().unwrap())).unwrap();
    let gt = GroundTruthTable::<f64>::read_csv(&Manifest::resolve(&mpath, manifest.ground_truth.as_deref().unwrap()))
        .unwrap();
    for ((entry, item), ann) in manifest.entries.iter().zip(&ds.items).zip(&anns) {
        let img: LinearImage<f64> = read_ppm16(&Manifest::resolve(&mpath, entry.image.as_deref().unwrap())).unwrap();
        assert_eq!(img, item.image);
        assert_eq!(ann.image_id, entry.image_id);
        let sub = subtract_black(&img).unwrap();
        let e = extract_ground_truth(
            &sub,
            ann,
            &saturation_mask(&sub, ClipMargin::default()),
            BlackLevelPolicy::Require,
        )
        .unwrap();
        let rec = gt.get(&entry.image_id).unwrap();
        assert!(rec.illuminant.angle_to(&item.true_illuminant) < 1e-9);
        // Quantisation keeps the chart estimate close to, not equal to, the truth.
        assert!(e.angle_to(&rec.illuminant) < 0.1);
        assert_eq!(rec.camera_id, entry.camera_id);
    }
}

#[test]
fn generation_is_byte_identical_across_runs() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    make_benchmark(raw_config(4, 7)).unwrap().write(a.path()).unwrap();
    make_benchmark(raw_config(4, 7)).unwrap().write(b.path()).unwrap();
    let (ta, tb) = (tree(a.path()), tree(b.path()));
    assert!(ta.len() >= 7);
    assert_eq!(ta, tb);
}

#[test]
fn raw_images_refused_then_estimated_after_subtraction() {
    let ds = make_benchmark(raw_config(2, 1)).unwrap();
    let raw = &ds.items[0].image;
    let gw = EstimatorSpec::<f64>::gray_world();
    assert!(estimate(raw, &gw, None).is_err());
    assert!(estimate(&subtract_black(raw).unwrap(), &gw, None).is_ok());
}

#[test]
fn single_precision_pipeline() {
    let cfg = BenchmarkConfig::<f32>::new(2, vec![CameraModel::reference()], 5);
    let ds = make_benchmark(cfg).unwrap();
    let item = &ds.items[0];
    let e = estimate(&item.image, &EstimatorSpec::<f32>::white_patch(), None).unwrap();
    assert!(e.angle_to(&item.true_illuminant) < 5.0);
}
