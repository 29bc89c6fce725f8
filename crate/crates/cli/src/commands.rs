use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use ccbench::estimators::{estimate_with_policy, EstimatorSpec};
use ccbench::evaluation::{evaluate, oracle_mismatch_experiment, tabulate, EstimateSet, EvaluationRun, RunTags};
use ccbench::groundtruth::{
    diff_ground_truths, extract_ground_truth, read_annotations, GroundTruthTable, PatchAnnotation,
};
use ccbench::hygiene::{
    audit_folds, camera_split_analysis, detect_unsubtracted_black, fold_camera_findings, make_folds,
    pipeline_forensics, stratified_folds, uniform_illumination_check, CheckId, Finding, FoldSpec, HygieneReport,
    LabeledRegion, Severity, ShuffleMode,
};
use ccbench::imaging::{
    read_ppm16, saturation_mask, subtract_black, write_ppm16, BlackLevelPolicy, ClipMargin, LinearImage, Pipeline,
};
use ccbench::manifest::{Manifest, ManifestEntry};
use ccbench::synthetic::{make_benchmark, BenchmarkConfig, CameraModel, SyntheticDataset};
use rayon::prelude::*;
use serde::Deserialize;
use serde_json::{json, Value};

use crate::cli::*;
use crate::output::*;
use crate::svg;

pub const UNSAFE_NOTE: &str = "produced with --unsafe-allow-unsubtracted: black level left in the images \
     (wrong pipeline, reproduced deliberately); do not compare with subtracted-pipeline results";

type Image = LinearImage<f64>;

fn usage(e: impl std::fmt::Display) -> Failure {
    Failure::Usage(e.to_string())
}

fn f(v: f64) -> String {
    v.to_string()
}

fn load_manifest(path: &Path) -> Outcome<Manifest> {
    if !path.exists() {
        return Err(Failure::Data(format!("manifest {} not found", path.display())));
    }
    Ok(Manifest::read(path)?)
}

fn entry_image(manifest_path: &Path, e: &ManifestEntry) -> Outcome<PathBuf> {
    e.image
        .as_deref()
        .map(|rel| Manifest::resolve(manifest_path, rel))
        .ok_or_else(|| Failure::Data(format!("manifest entry {} lists no image", e.image_id)))
}

/// Reads every manifest image in parallel, keeping manifest order.
fn load_images(manifest_path: &Path, m: &Manifest) -> Outcome<Vec<Image>> {
    m.entries
        .par_iter()
        .map(|e| {
            let p = entry_image(manifest_path, e)?;
            read_ppm16(&p).map_err(|err| Failure::Data(format!("image {}: {err}", e.image_id)))
        })
        .collect()
}

fn ground_truth_path(manifest_path: &Path, m: &Manifest, explicit: Option<&Path>) -> Option<PathBuf> {
    explicit
        .map(Path::to_path_buf)
        .or_else(|| m.ground_truth.as_deref().map(|g| Manifest::resolve(manifest_path, g)))
}

fn read_gt(path: &Path) -> Outcome<GroundTruthTable<f64>> {
    if !path.exists() {
        return Err(Failure::Data(format!("ground truth {} not found", path.display())));
    }
    Ok(GroundTruthTable::read_csv(path)?)
}

fn read_estimates(path: &Path) -> Outcome<EstimateSet<f64>> {
    if !path.exists() {
        return Err(Failure::Data(format!("estimates {} not found", path.display())));
    }
    Ok(EstimateSet::read_csv(path)?)
}

fn prepare(img: Image, id: &str, p: PipelineArgs) -> Outcome<(Image, Pipeline)> {
    if img.black_subtracted() {
        Ok((img, Pipeline::Subtracted))
    } else if p.subtract_black {
        Ok((subtract_black(&img)?, Pipeline::Subtracted))
    } else if p.unsafe_allow_unsubtracted {
        Ok((img, Pipeline::Unsubtracted))
    } else {
        Err(Failure::Data(format!(
            "image {id} still carries its black level; pass --subtract-black \
             (or --unsafe-allow-unsubtracted to reproduce the wrong pipeline deliberately)"
        )))
    }
}

fn policy(p: Pipeline) -> BlackLevelPolicy {
    match p {
        Pipeline::Subtracted => BlackLevelPolicy::Require,
        Pipeline::Unsubtracted => BlackLevelPolicy::UnsafeAllowUnsubtracted,
    }
}

/// Loads and prepares all images; the overall pipeline is unsubtracted if any image is.
fn prepared_images(manifest_path: &Path, m: &Manifest, p: PipelineArgs) -> Outcome<(Vec<(Image, Pipeline)>, Pipeline)> {
    let images = load_images(manifest_path, m)?;
    let prepared: Vec<(Image, Pipeline)> = images
        .into_par_iter()
        .zip(&m.entries)
        .map(|(img, e)| prepare(img, &e.image_id, p))
        .collect::<Outcome<_>>()?;
    let pipeline = if prepared.iter().any(|(_, p)| *p == Pipeline::Unsubtracted) {
        Pipeline::Unsubtracted
    } else {
        Pipeline::Subtracted
    };
    Ok((prepared, pipeline))
}

fn taint(p: PipelineArgs) -> Vec<String> {
    if p.unsafe_allow_unsubtracted {
        warn(UNSAFE_NOTE);
        vec![UNSAFE_NOTE.to_string()]
    } else {
        Vec::new()
    }
}

pub fn subtract(args: &SubtractArgs, echo: &Echo) -> Outcome {
    let m = load_manifest(&args.manifest)?;
    let images = load_images(&args.manifest, &m)?;
    let out = &args.out;
    fs::create_dir_all(out.join("images")).map_err(|e| io_failure(out, e))?;
    let written: Vec<ManifestEntry> = images
        .par_iter()
        .zip(&m.entries)
        .map(|(img, e)| {
            let sub = if img.black_subtracted() {
                img.clone()
            } else {
                subtract_black(img)?
            };
            let rel = format!("images/{}.ppm", e.image_id);
            write_ppm16(&sub, &out.join(&rel))?;
            Ok(ManifestEntry {
                image: Some(rel),
                ..e.clone()
            })
        })
        .collect::<Outcome<_>>()?;
    let already = images.iter().filter(|i| i.black_subtracted()).count();
    let mut manifest = Manifest {
        entries: written,
        ..Manifest::default()
    };
    // Annotations and ground truth are pipeline-independent files; carry them along.
    for (src, dst) in [
        (m.annotations.as_deref(), &mut manifest.annotations),
        (m.ground_truth.as_deref(), &mut manifest.ground_truth),
    ] {
        if let Some(rel) = src {
            let from = Manifest::resolve(&args.manifest, rel);
            let name = from
                .file_name()
                .ok_or_else(|| Failure::Data(format!("bad path {rel}")))?
                .to_string_lossy()
                .into_owned();
            fs::copy(&from, out.join(&name)).map_err(|e| io_failure(&from, e))?;
            *dst = Some(name);
        }
    }
    manifest.write(&out.join("manifest.json"))?;
    emit(
        echo,
        json!({"images": images.len(), "already_subtracted": already, "manifest": "manifest.json"}),
        None,
        Some(&out.join("subtract_report.json")),
    )
}

pub fn estimate(args: &EstimateArgs, echo: &Echo) -> Outcome {
    let spec: EstimatorSpec<f64> = args.estimator.parse().map_err(usage)?;
    let margin = ClipMargin::new(args.clip_margin).map_err(usage)?;
    let m = load_manifest(&args.manifest)?;
    let (prepared, pipeline) = prepared_images(&args.manifest, &m, args.pipeline)?;
    let results: Vec<_> = prepared
        .par_iter()
        .zip(&m.entries)
        .map(|((img, p), e)| {
            let mask = (!args.no_mask).then(|| saturation_mask(img, margin));
            estimate_with_policy(img, &spec, mask.as_ref(), policy(*p))
                .map_err(|err| Failure::Data(format!("image {}: {err}", e.image_id)))
        })
        .collect();
    let mut set = EstimateSet::new();
    for (r, e) in results.into_iter().zip(&m.entries) {
        set.insert(e.image_id.clone(), r?)?;
    }
    create_parent(&args.out)?;
    set.write_csv(&args.out)?;
    let prov = Provenance {
        command: echo.command.into(),
        pipeline,
        estimator: Some(spec.to_string()),
        ground_truth_id: None,
        warnings: taint(args.pipeline),
        config: echo.config.clone(),
    };
    write_json(
        &provenance_path(&args.out),
        &echo.wrap(serde_json::to_value(&prov).expect("serializable")),
    )
}

fn create_parent(p: &Path) -> Outcome {
    match p.parent().filter(|d| !d.as_os_str().is_empty()) {
        Some(d) => fs::create_dir_all(d).map_err(|e| io_failure(d, e)),
        None => Ok(()),
    }
}

fn stem(p: &Path) -> String {
    p.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

pub fn extract_gt(args: &ExtractGtArgs, echo: &Echo) -> Outcome {
    let margin = ClipMargin::new(args.clip_margin).map_err(usage)?;
    let m = load_manifest(&args.manifest)?;
    let ann_path = match (&args.annotations, &m.annotations) {
        (Some(p), _) => p.clone(),
        (None, Some(rel)) => Manifest::resolve(&args.manifest, rel),
        (None, None) => return Err(usage("the manifest names no annotation file; pass --annotations")),
    };
    if !ann_path.exists() {
        return Err(Failure::Data(format!("annotations {} not found", ann_path.display())));
    }
    let anns: HashMap<String, PatchAnnotation<f64>> = read_annotations(&ann_path)?
        .into_iter()
        .map(|a| (a.image_id.clone(), a))
        .collect();
    let (prepared, pipeline) = prepared_images(&args.manifest, &m, args.pipeline)?;
    let results: Vec<_> = prepared
        .par_iter()
        .zip(&m.entries)
        .map(|((img, p), e)| {
            let ann = anns
                .get(&e.image_id)
                .ok_or_else(|| Failure::Data(format!("no annotation for image {}", e.image_id)))?;
            let ann = match &args.patches {
                Some(idx) => ann.select(idx)?,
                None => ann.clone(),
            };
            extract_ground_truth(img, &ann, &saturation_mask(img, margin), policy(*p))
                .map_err(|err| Failure::Data(format!("image {}: {err}", e.image_id)))
        })
        .collect();
    let mut table = GroundTruthTable::new();
    for (r, e) in results.into_iter().zip(&m.entries) {
        table.insert(e.image_id.clone(), r?, e.camera_id.clone())?;
    }
    create_parent(&args.out)?;
    table.write_csv(&args.out)?;
    let prov = Provenance {
        command: echo.command.into(),
        pipeline,
        estimator: None,
        ground_truth_id: Some(args.id.clone().unwrap_or_else(|| stem(&args.out))),
        warnings: taint(args.pipeline),
        config: echo.config.clone(),
    };
    write_json(
        &provenance_path(&args.out),
        &echo.wrap(serde_json::to_value(&prov).expect("serializable")),
    )
}

fn parse_pipeline(s: &str) -> Outcome<Pipeline> {
    s.parse().map_err(usage)
}

fn run_row(run: &EvaluationRun<f64>) -> Vec<String> {
    let s = &run.stats;
    vec![
        run.estimator.clone(),
        run.pipeline.to_string(),
        run.ground_truth_id.clone(),
        run.per_image_error.len().to_string(),
        f(s.mean),
        f(s.median),
        f(s.trimean),
        f(s.best25_mean),
        f(s.worst25_mean),
        f(s.max),
        run.warnings.len().to_string(),
    ]
}

const RUN_HEADER: [&str; 11] = [
    "estimator",
    "pipeline",
    "ground_truth_id",
    "n",
    "mean",
    "median",
    "trimean",
    "best25_mean",
    "worst25_mean",
    "max",
    "warnings",
];

fn read_run_report(path: &Path) -> Outcome<EvaluationRun<f64>> {
    let text = fs::read_to_string(path).map_err(|e| io_failure(path, e))?;
    let mut v: Value = serde_json::from_str(&text).map_err(|e| io_failure(path, e))?;
    let run = v.get_mut("run").map(Value::take).unwrap_or(v);
    serde_json::from_value(run).map_err(|e| io_failure(path, e))
}

pub fn evaluate_cmd(args: &EvaluateArgs, echo: &Echo) -> Outcome {
    if let Some(paths) = &args.runs {
        let runs = paths.iter().map(|p| read_run_report(p)).collect::<Outcome<Vec<_>>>()?;
        tabulate(&runs, args.force_mixed)?;
        let tainted: Vec<String> = runs
            .iter()
            .filter(|r| !r.warnings.is_empty())
            .map(|r| {
                format!(
                    "run {} on {} carries methodology warnings",
                    r.estimator, r.ground_truth_id
                )
            })
            .collect();
        for t in &tainted {
            warn(t);
        }
        let table = Table {
            header: RUN_HEADER.to_vec(),
            rows: runs.iter().map(run_row).collect(),
        };
        return emit(
            echo,
            json!({"runs": runs, "warnings": tainted}),
            Some(table),
            args.out.as_deref(),
        );
    }

    let (est_path, gt_path) = match (&args.estimates, &args.gt) {
        (Some(e), Some(g)) => (e, g),
        _ => return Err(usage("pass --estimates and --gt, or --runs")),
    };
    let estimates = read_estimates(est_path)?;
    let gt = read_gt(gt_path)?;
    let est_prov = read_provenance(est_path)?;
    let gt_prov = read_provenance(gt_path)?;

    let flagged = args.pipeline.as_deref().map(parse_pipeline).transpose()?;
    let pipeline = match (flagged, &est_prov) {
        (Some(f), Some(p)) if f != p.pipeline => {
            return Err(usage(format!(
                "--pipeline {f} contradicts the estimates' provenance ({})",
                p.pipeline
            )))
        }
        (Some(f), _) => f,
        (None, Some(p)) => p.pipeline,
        (None, None) => {
            return Err(usage(
                "the estimates have no provenance file; pass --pipeline subtracted|unsubtracted",
            ))
        }
    };
    let gt_pipeline = match args.gt_pipeline.as_deref() {
        Some(s) => Some(parse_pipeline(s)?),
        None => gt_prov.as_ref().map(|p| p.pipeline),
    };
    let gt_id = args
        .gt_id
        .clone()
        .or_else(|| gt_prov.as_ref().and_then(|p| p.ground_truth_id.clone()))
        .unwrap_or_else(|| stem(gt_path));
    let estimator = est_prov
        .as_ref()
        .and_then(|p| p.estimator.clone())
        .unwrap_or_else(|| stem(est_path));

    let mut run = evaluate(
        &estimates,
        &gt,
        RunTags {
            estimator,
            pipeline,
            ground_truth_id: gt_id,
            ground_truth_pipeline: gt_pipeline,
        },
    )?;
    for w in est_prov.iter().chain(&gt_prov).flat_map(|p| &p.warnings) {
        if !run.warnings.contains(w) {
            run.warnings.push(w.clone());
        }
    }
    for w in &run.warnings {
        warn(w);
    }
    let table = Table {
        header: RUN_HEADER.to_vec(),
        rows: vec![run_row(&run)],
    };
    emit(echo, json!({ "run": run }), Some(table), args.out.as_deref())
}

pub fn diff_gt(args: &DiffGtArgs, echo: &Echo) -> Outcome {
    let a = read_gt(&args.a)?;
    let b = read_gt(&args.b)?;
    let d = diff_ground_truths(&a, &b)?;
    let table = Table {
        header: vec!["image_id", "angle_deg"],
        rows: d
            .per_image_angle
            .iter()
            .map(|(id, v)| vec![id.clone(), f(*v)])
            .collect(),
    };
    emit(echo, json!({ "diff": d }), Some(table), args.out.as_deref())
}

#[derive(Deserialize)]
struct RegionSet {
    image_id: String,
    regions: Vec<LabeledRegion<f64>>,
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Outcome<T> {
    let text = fs::read_to_string(path).map_err(|e| io_failure(path, e))?;
    serde_json::from_str(&text).map_err(|e| io_failure(path, e))
}

fn fail_threshold(f: FailOn) -> Severity {
    match f {
        FailOn::Warn => Severity::Warn,
        FailOn::Fail => Severity::Fail,
    }
}

fn finding_rows(findings: &[Finding]) -> Table {
    Table {
        header: vec!["check_id", "severity", "image_id", "message"],
        rows: findings
            .iter()
            .map(|x| {
                vec![
                    x.check_id.to_string(),
                    serde_json::to_value(x.severity)
                        .expect("enum")
                        .as_str()
                        .unwrap_or("")
                        .to_string(),
                    x.image_id.clone().unwrap_or_default(),
                    x.message.clone(),
                ]
            })
            .collect(),
    }
}

fn read_fold_file(path: &Path, ids: &[String]) -> Outcome<FoldSpec> {
    let spec: FoldSpec = read_json(path)?;
    spec.validate(ids)?;
    Ok(spec)
}

/// Camera-confinement findings always; the centroid check only with ground truth.
fn fold_findings(
    spec: &FoldSpec,
    m: &Manifest,
    gt: Option<&GroundTruthTable<f64>>,
    threshold: f64,
) -> Outcome<(Value, Vec<Finding>)> {
    match gt {
        Some(gt) => {
            let audit = audit_folds(spec, gt, threshold)?;
            let findings = audit.findings.clone();
            Ok((serde_json::to_value(&audit).expect("serializable"), findings))
        }
        None => {
            let cams: HashMap<&str, &str> = m
                .entries
                .iter()
                .map(|e| (e.image_id.as_str(), e.camera_id.as_str()))
                .collect();
            let (composition, findings) = fold_camera_findings(spec, |id| cams.get(id).copied())?;
            Ok((json!({ "composition": composition, "findings": findings }), findings))
        }
    }
}

fn lint_outcome(report: &HygieneReport, fail_on: FailOn) -> Outcome {
    let threshold = fail_threshold(fail_on);
    if report.fails(threshold) {
        let n = report.findings.iter().filter(|f| f.severity >= threshold).count();
        Err(Failure::Lint(n))
    } else {
        Ok(())
    }
}

pub fn lint(args: &LintArgs, echo: &Echo) -> Outcome {
    let m = load_manifest(&args.manifest)?;
    let ids = m.ids();
    let images = load_images(&args.manifest, &m)?;
    let mut findings: Vec<Finding> = images
        .par_iter()
        .zip(&m.entries)
        .map(|(img, e)| detect_unsubtracted_black(img, Some(&e.image_id), args.black_threshold))
        .collect();

    let gt = match ground_truth_path(&args.manifest, &m, args.gt.as_deref()) {
        Some(p) => Some(read_gt(&p)?),
        None => None,
    };
    if let Some(gt) = &gt {
        match camera_split_analysis(gt) {
            Ok(rep) => findings.push(rep.finding),
            Err(e @ (ccbench::Error::TooFewPoints { .. } | ccbench::Error::EmptyInput)) => findings.push(Finding::new(
                CheckId::CameraSplit,
                Severity::Info,
                format!("camera split skipped: {e}"),
            )),
            Err(e) => return Err(e.into()),
        }
    }
    if let Some(path) = &args.folds {
        let spec = read_fold_file(path, &ids)?;
        findings.extend(fold_findings(&spec, &m, gt.as_ref(), args.centroid_threshold)?.1);
    }
    if let Some(path) = &args.regions {
        let sets: Vec<RegionSet> = read_json(path)?;
        let index: HashMap<&str, usize> = ids.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect();
        let per_set: Vec<Vec<Finding>> = sets
            .par_iter()
            .map(|set| {
                let i = *index
                    .get(set.image_id.as_str())
                    .ok_or_else(|| Failure::Data(format!("regions name unknown image {}", set.image_id)))?;
                let (img, p) = prepare(images[i].clone(), &set.image_id, args.pipeline)?;
                let rep = uniform_illumination_check(
                    &img,
                    Some(&set.image_id),
                    &set.regions,
                    args.uniform_threshold,
                    policy(p),
                )
                .map_err(|e| Failure::Data(format!("image {}: {e}", set.image_id)))?;
                Ok(rep.findings)
            })
            .collect::<Outcome<_>>()?;
        findings.extend(per_set.into_iter().flatten());
    }
    if let Some(runs) = &args.forensics {
        let a = read_estimates(&runs[0])?;
        let b = read_estimates(&runs[1])?;
        let gs = read_gt(args.gt_sub.as_deref().expect("required by clap"))?;
        let gu = read_gt(args.gt_unsub.as_deref().expect("required by clap"))?;
        findings.extend(pipeline_forensics(&a, &b, &gs, &gu)?);
    }

    let report = HygieneReport::new(findings);
    let summary = json!({
        "info": report.count(Severity::Info),
        "warn": report.count(Severity::Warn),
        "fail": report.count(Severity::Fail),
    });
    // Only the region check looks at pixel values through the pipeline flags.
    let warnings = if args.regions.is_some() {
        taint(args.pipeline)
    } else {
        Vec::new()
    };
    emit(
        echo,
        json!({"summary": summary, "warnings": warnings, "findings": report.findings}),
        Some(finding_rows(&report.findings)),
        args.out.as_deref(),
    )?;
    lint_outcome(&report, args.fail_on)
}

pub fn folds(args: &FoldsArgs, echo: &Echo) -> Outcome {
    let m = load_manifest(&args.manifest)?;
    let ids = m.ids();
    let spec = match args.mode {
        FoldMode::None => make_folds(&ids, args.k, ShuffleMode::None, args.seed)?,
        FoldMode::Seeded => make_folds(&ids, args.k, ShuffleMode::Seeded, args.seed)?,
        FoldMode::External => {
            let from = args
                .from
                .as_deref()
                .ok_or_else(|| usage("--mode external needs --from"))?;
            if !from.exists() {
                return Err(Failure::Data(format!("fold file {} not found", from.display())));
            }
            let spec = FoldSpec::load_external(from, &ids)?;
            if spec.k != args.k {
                warn(&format!("--k {} ignored; the fold file has k = {}", args.k, spec.k));
            }
            spec
        }
        FoldMode::Stratified => stratified_folds(
            m.entries.iter().map(|e| (e.image_id.as_str(), e.camera_id.as_str())),
            args.k,
        )?,
    };
    let gt = match ground_truth_path(&args.manifest, &m, args.gt.as_deref()) {
        Some(p) => Some(read_gt(&p)?),
        None => None,
    };
    let (audit, findings) = fold_findings(&spec, &m, gt.as_ref(), args.centroid_threshold)?;
    let report = HygieneReport::new(findings);
    for f in report.findings.iter().filter(|f| f.severity >= Severity::Warn) {
        warn(&f.message);
    }
    if let Some(out) = &args.out {
        create_parent(out)?;
        spec.write(out)?;
    }
    let sizes: Vec<usize> = spec.folds.iter().map(Vec::len).collect();
    emit(
        echo,
        json!({"k": spec.k, "mode": spec.mode, "seed": spec.seed, "fold_sizes": sizes, "audit": audit, "findings": report.findings}),
        Some(finding_rows(&report.findings)),
        args.report.as_deref(),
    )?;
    lint_outcome(&report, args.fail_on)
}

fn camera_by_name(name: &str) -> Outcome<CameraModel<f64>> {
    match name {
        "reference" => Ok(CameraModel::reference()),
        "shifted" => Ok(CameraModel::shifted()),
        other => Err(usage(format!(
            "unknown camera {other:?} (expected reference or shifted)"
        ))),
    }
}

fn benchmark_config(n: usize, seed: u64, s: &SceneArgs, black_level: f64) -> Outcome<BenchmarkConfig<f64>> {
    if s.cameras.is_empty() {
        return Err(usage("at least one camera is required"));
    }
    let cameras = s
        .cameras
        .iter()
        .map(|c| Ok(camera_by_name(c)?.with_black_level([black_level; 3])?))
        .collect::<Outcome<Vec<_>>>()?;
    if !(s.cct_min > 0.0 && s.cct_min <= s.cct_max) {
        return Err(usage("need 0 < --cct-min <= --cct-max"));
    }
    let mut cfg = BenchmarkConfig::new(n, cameras, seed);
    cfg.camera_counts = s.camera_counts.clone();
    cfg.width = s.width;
    cfg.height = s.height;
    cfg.cct_range = (s.cct_min, s.cct_max);
    cfg.noise_sigma = s.noise_sigma;
    cfg.exposure = s.exposure;
    Ok(cfg)
}

fn synthesize(cfg: BenchmarkConfig<f64>) -> Outcome<SyntheticDataset<f64>> {
    make_benchmark(cfg).map_err(|e| match e {
        ccbench::Error::InvalidArgument(m) => Failure::Usage(m),
        other => other.into(),
    })
}

pub fn simulate(args: &SimulateArgs, echo: &Echo) -> Outcome {
    let mut cfg = benchmark_config(args.n, args.seed, &args.scene, args.black_level)?;
    cfg.inject_black = !args.no_black;
    cfg.quantize = !args.no_quantize;
    let ds = synthesize(cfg)?;
    fs::create_dir_all(&args.out).map_err(|e| io_failure(&args.out, e))?;
    let manifest = ds.write(&args.out)?;
    let cameras: Vec<&str> = ds.config.cameras.iter().map(|c| c.camera_id.as_str()).collect();
    emit(
        echo,
        json!({
            "images": manifest.entries.len(),
            "cameras": cameras,
            "black_subtracted": args.no_black,
            "manifest": "manifest.json",
        }),
        None,
        Some(&args.out.join("simulate_report.json")),
    )?;
    eprintln!("wrote {} images to {}", manifest.entries.len(), args.out.display());
    Ok(())
}

pub fn oracle(args: &OracleArgs, echo: &Echo) -> Outcome {
    if args.black_levels.iter().any(|b| b.is_nan() || *b < 0.0) {
        return Err(usage("black levels must be nonnegative"));
    }
    let ds = synthesize(benchmark_config(args.n, args.seed, &args.scene, 0.0)?)?;
    let mut rows = Vec::new();
    let mut table = Vec::new();
    for &bl in &args.black_levels {
        let ex = oracle_mismatch_experiment(&ds, bl)?;
        for w in &ex.warnings {
            warn(w);
        }
        table.push(vec![
            f(bl),
            f(ex.right_run.stats.median),
            f(ex.wrong_run.stats.median),
            f(ex.wrong_run.stats.mean),
            f(ex.wrong_run.stats.max),
            f(ex.min_patch_value),
        ]);
        rows.push(json!({
            "black_level": bl,
            "right": {"pipeline": ex.right_run.pipeline, "stats": ex.right_run.stats},
            "wrong": {"pipeline": ex.wrong_run.pipeline, "stats": ex.wrong_run.stats, "warnings": ex.wrong_run.warnings},
            "min_patch_value": ex.min_patch_value,
            "warnings": ex.warnings,
        }));
    }
    let medians: Vec<f64> = table.iter().map(|r| r[2].parse().unwrap_or(f64::NAN)).collect();
    let nondecreasing = medians.windows(2).all(|w| w[1] >= w[0]);
    emit(
        echo,
        json!({"experiments": rows, "wrong_median_nondecreasing": nondecreasing}),
        Some(Table {
            header: vec![
                "black_level",
                "right_median",
                "wrong_median",
                "wrong_mean",
                "wrong_max",
                "min_patch_value",
            ],
            rows: table,
        }),
        args.out.as_deref(),
    )
}

pub fn plot_chroma(args: &PlotArgs, echo: &Echo) -> Outcome {
    let gt = read_gt(&args.gt)?;
    let mut groups: Vec<(String, Vec<[f64; 2]>)> = Vec::new();
    let mut rows = Vec::new();
    for (id, rec) in gt.iter() {
        let (r, b) = rec.illuminant.rb();
        rows.push(vec![id.to_string(), rec.camera_id.clone(), f(r), f(b)]);
        match groups.iter_mut().find(|g| g.0 == rec.camera_id) {
            Some(g) => g.1.push([r, b]),
            None => groups.push((rec.camera_id.clone(), vec![[r, b]])),
        }
    }
    let split = camera_split_analysis(&gt).ok();
    let series: Vec<svg::Series<'_>> = groups
        .iter()
        .map(|(cam, pts)| svg::Series {
            label: cam,
            points: pts,
            fit: split
                .as_ref()
                .and_then(|s| s.cameras.iter().find(|c| &c.camera_id == cam))
                .map(|c| &c.fit),
        })
        .collect();
    let title = args
        .title
        .clone()
        .unwrap_or_else(|| format!("rb chromaticity: {}", stem(&args.gt)));
    let csv_path = companion(&args.out, ".csv");
    let svg_path = companion(&args.out, ".svg");
    create_parent(&csv_path)?;
    let mut w = csv::Writer::from_path(&csv_path).map_err(|e| io_failure(&csv_path, e))?;
    w.write_record(["image_id", "camera_id", "r", "b"])
        .map_err(|e| io_failure(&csv_path, e))?;
    for r in &rows {
        w.write_record(r).map_err(|e| io_failure(&csv_path, e))?;
    }
    w.flush().map_err(|e| io_failure(&csv_path, e))?;
    fs::write(&svg_path, svg::scatter(&title, &series)).map_err(|e| io_failure(&svg_path, e))?;
    let name = |p: &Path| p.file_name().map(|s| s.to_string_lossy().into_owned());
    emit(
        echo,
        json!({
            "points": rows.len(),
            "csv": name(&csv_path),
            "svg": name(&svg_path),
            "camera_split": split.map(|s| s.finding),
        }),
        None,
        None,
    )
}
