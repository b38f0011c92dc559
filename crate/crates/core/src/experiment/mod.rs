//! End-to-end experiment orchestration: splitting, preprocessing, two-stage
//! training, detection, clustering and all three evaluation curves, from a
//! single config.

pub mod artifacts;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::boosting::cascade::{CascadeParams, CascadeTrainingSet};
use crate::boosting::{
    train_cascade, train_rusboost, BoostedStage, CascadeModel, FeatureMatrix, FeatureSpace,
    SampleSet,
};
use crate::data::{
    generate_phantom_dataset, load_dataset, split_cases, AnnotationSet, CaseSplit, Mammogram,
    PhantomDatasetSpec,
};
use crate::evaluation::{
    aggregate_curves, aggregate_roc, auc, case_roc, cluster_mean_score, default_fpi_grid,
    default_fpr_grid, froc, gt_clusters_from_annotations, interpolate_at, match_clusters,
    match_individual, CaseScore, FrocCurve, FrocImage, FrocOptions, OverlapMetric, RocCurve,
    ScoredDetection,
};
use crate::features::enumerate_haar_bank;
use crate::pipeline::classify::candidate_features;
use crate::pipeline::{
    classify_candidates, cluster_candidates, detect_candidates, CandidateDetection, ClusterSet,
    DetectOptions, MacroFilterMode,
};
use crate::preprocess::{equalize, estimate_noise};
use crate::{derive_seed, Error, Result, WINDOW_SIZE};

use artifacts::{write_curve_csv, write_detections_csv, DetectionRow};

/// Where the experiment's records come from.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DataSource {
    /// A directory in the dataset layout (`images/`, `masks/`, `cases.csv`).
    Dataset { root: PathBuf },
    /// A seeded synthetic phantom dataset.
    Phantom(PhantomDatasetSpec),
}

fn default_spacing() -> f64 {
    crate::DEFAULT_PIXEL_SPACING_MM
}
fn default_window() -> usize {
    WINDOW_SIZE
}
fn default_n_folds() -> usize {
    5
}
fn default_ratios() -> (f64, f64, f64) {
    (0.6, 0.2, 0.2)
}
fn default_budgets() -> Vec<usize> {
    vec![2, 3, 5, 12, 40]
}
fn default_d_target() -> f64 {
    0.99
}
fn default_f_target() -> f64 {
    0.30
}
fn default_stage2() -> usize {
    1000
}
fn default_neg_pool() -> usize {
    100_000
}
fn default_ratio_per_round() -> f64 {
    1.0
}
fn default_val_neg_cap() -> usize {
    20_000
}
fn default_cluster_dist() -> f64 {
    10.0
}
fn default_min_cluster() -> usize {
    3
}
fn default_macro_size() -> f64 {
    1.0
}
fn default_macro_mode() -> MacroFilterMode {
    MacroFilterMode::Conjunctive
}
fn default_metric() -> OverlapMetric {
    OverlapMetric::Iou
}
fn default_min_overlap() -> f64 {
    0.5
}
fn default_stride() -> usize {
    1
}

/// Full experiment configuration. Every default mirrors the pipeline's
/// published operating point and is recorded in the run manifest.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub source: DataSource,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_spacing")]
    pub pixel_spacing_mm: f64,
    /// Classification window side; must stay 12.
    #[serde(default = "default_window")]
    pub window: usize,
    #[serde(default = "default_n_folds")]
    pub n_folds: usize,
    #[serde(default = "default_ratios")]
    pub split_ratios: (f64, f64, f64),
    #[serde(default = "default_budgets")]
    pub stage_budgets: Vec<usize>,
    #[serde(default = "default_d_target")]
    pub d_target: f64,
    #[serde(default = "default_f_target")]
    pub f_target: f64,
    #[serde(default = "default_stage2")]
    pub stage2_weak_learners: usize,
    #[serde(default = "default_neg_pool")]
    pub neg_pool_size: usize,
    #[serde(default = "default_ratio_per_round")]
    pub neg_pos_ratio_per_round: f64,
    #[serde(default = "default_val_neg_cap")]
    pub val_neg_cap: usize,
    #[serde(default = "default_cluster_dist")]
    pub cluster_dist_mm: f64,
    #[serde(default = "default_min_cluster")]
    pub min_cluster_size: usize,
    #[serde(default = "default_macro_size")]
    pub macro_size_mm: f64,
    #[serde(default = "default_macro_mode")]
    pub macro_filter: MacroFilterMode,
    #[serde(default = "default_metric")]
    pub overlap_metric: OverlapMetric,
    #[serde(default = "default_min_overlap")]
    pub min_overlap: f64,
    #[serde(default = "default_stride")]
    pub stride: usize,
    /// Caps evaluation sweeps at this many quantile thresholds (None = all).
    #[serde(default)]
    pub max_sweep_thresholds: Option<usize>,
}

impl ExperimentConfig {
    pub fn new(source: DataSource) -> Self {
        ExperimentConfig {
            source,
            seed: 0,
            pixel_spacing_mm: default_spacing(),
            window: default_window(),
            n_folds: default_n_folds(),
            split_ratios: default_ratios(),
            stage_budgets: default_budgets(),
            d_target: default_d_target(),
            f_target: default_f_target(),
            stage2_weak_learners: default_stage2(),
            neg_pool_size: default_neg_pool(),
            neg_pos_ratio_per_round: default_ratio_per_round(),
            val_neg_cap: default_val_neg_cap(),
            cluster_dist_mm: default_cluster_dist(),
            min_cluster_size: default_min_cluster(),
            macro_size_mm: default_macro_size(),
            macro_filter: default_macro_mode(),
            overlap_metric: default_metric(),
            min_overlap: default_min_overlap(),
            stride: default_stride(),
            max_sweep_thresholds: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.window != WINDOW_SIZE {
            return Err(Error::Config(format!(
                "window must be {WINDOW_SIZE} (the feature bank is fixed to it), got {}",
                self.window
            )));
        }
        if !(0.0 < self.d_target && self.d_target <= 1.0) || !(0.0..=1.0).contains(&self.f_target) {
            return Err(Error::Config("d_target/f_target must lie in (0,1]/[0,1]".into()));
        }
        if self.stage2_weak_learners == 0 {
            return Err(Error::Config("stage2_weak_learners must be >= 1".into()));
        }
        if self.cluster_dist_mm <= 0.0 || self.macro_size_mm <= 0.0 || self.min_overlap <= 0.0 {
            return Err(Error::Config("distances and overlap thresholds must be positive".into()));
        }
        if self.stride == 0 {
            return Err(Error::Config("stride must be >= 1".into()));
        }
        Ok(())
    }

    pub fn detect_options(&self) -> DetectOptions {
        DetectOptions {
            stride: self.stride,
            macro_size_mm: self.macro_size_mm,
            macro_mode: self.macro_filter,
        }
    }
}

/// Both trained models of one fold.
pub struct TrainedModels {
    pub model1: CascadeModel,
    pub model2: CascadeModel,
    pub stage2_positives: usize,
    pub stage2_negatives: usize,
}

/// Noise-equalizes every record (pure per image).
pub fn preprocess_records(
    records: &[(Mammogram, AnnotationSet)],
) -> Result<Vec<(Mammogram, AnnotationSet)>> {
    let processed: Vec<Result<(Mammogram, AnnotationSet)>> =
        crate::exec::map_slice(records, |(img, ann)| {
            let model = estimate_noise(img)?;
            Ok((equalize(img, &model), ann.clone()))
        });
    processed.into_iter().collect()
}

/// Scored candidates of one image after both pipeline stages.
pub struct ImageDetections {
    pub image_id: String,
    pub case_id: String,
    /// All P.1 candidates with stage-2 scores attached (threshold −inf).
    pub candidates: Vec<CandidateDetection>,
    pub annotations: AnnotationSet,
}

fn candidate_training_set(
    records: &[(Mammogram, AnnotationSet)],
    model1: &CascadeModel,
    config: &ExperimentConfig,
) -> Result<(FeatureMatrix, FeatureMatrix, usize, usize)> {
    let bank = enumerate_haar_bank(WINDOW_SIZE)?;
    let opts = config.detect_options();

    let per_image: Vec<Result<(Vec<Vec<f64>>, Vec<Vec<f64>>)>> =
        crate::exec::map_slice(records, |(img, ann)| {
            let candidates = detect_candidates(img, model1, &opts)?;
            let scored: Vec<ScoredDetection> = candidates
                .iter()
                .map(|c| ScoredDetection { mask: &c.mask, score: c.peak_margin })
                .collect();
            let matches =
                match_individual(&scored, &ann.regions, config.min_overlap, config.overlap_metric);
            let mut is_positive = vec![false; candidates.len()];
            for &(d, _) in &matches.tp_pairs {
                is_positive[d] = true;
            }
            let mut pos_rows = Vec::new();
            let mut neg_rows = Vec::new();
            for (idx, candidate) in candidates.iter().enumerate() {
                match candidate_features(img, candidate, &bank) {
                    Ok(fv) => {
                        let row = fv.values().to_vec();
                        if is_positive[idx] {
                            pos_rows.push(row);
                        } else {
                            neg_rows.push(row);
                        }
                    }
                    Err(e) => log::warn!("skipping degenerate training candidate: {e}"),
                }
            }
            Ok((pos_rows, neg_rows))
        });

    let mut pos = FeatureMatrix::new(crate::FEATURE_VECTOR_LEN);
    let mut neg = FeatureMatrix::new(crate::FEATURE_VECTOR_LEN);
    for r in per_image {
        let (p, n) = r?;
        for row in p {
            pos.push_row(&row)?;
        }
        for row in n {
            neg.push_row(&row)?;
        }
    }

    // Too few detector-shaped positives to train on: fall back to the manual
    // annotations themselves as positive candidates.
    const MIN_STAGE2_POSITIVES: usize = 25;
    if pos.len() < MIN_STAGE2_POSITIVES {
        log::warn!(
            "only {} matched candidates for the candidate classifier; augmenting with annotations",
            pos.len()
        );
        for (img, ann) in records {
            for region in &ann.regions {
                let centroid = region.centroid_px();
                let pseudo = CandidateDetection {
                    mask: region.clone(),
                    centroid_mm: (
                        centroid.0 * img.pixel_spacing_mm,
                        centroid.1 * img.pixel_spacing_mm,
                    ),
                    peak_margin: 0.0,
                    score: None,
                };
                if let Ok(fv) = candidate_features(img, &pseudo, &bank) {
                    pos.push_row(fv.values())?;
                }
            }
        }
    }
    let (np, nn) = (pos.len(), neg.len());
    Ok((pos, neg, np, nn))
}

/// Trains the pixel cascade and the candidate classifier on preprocessed
/// train/validation records.
pub fn train_fold_models(
    train: &[(Mammogram, AnnotationSet)],
    validation: &[(Mammogram, AnnotationSet)],
    config: &ExperimentConfig,
    seed: u64,
) -> Result<TrainedModels> {
    let cascade_params = CascadeParams {
        stage_budgets: config.stage_budgets.clone(),
        d_target: config.d_target,
        f_target: config.f_target,
        neg_pool_size: config.neg_pool_size,
        neg_pos_ratio: config.neg_pos_ratio_per_round,
        val_neg_cap: config.val_neg_cap,
        seed: derive_seed(seed, "cascade"),
    };
    let model1 = train_cascade(&CascadeTrainingSet { train, validation }, &cascade_params)?;

    let (pos, neg, n_pos, n_neg) = candidate_training_set(train, &model1, config)?;
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::Training(format!(
            "candidate classifier needs both classes (got {n_pos} positive / {n_neg} negative candidates)"
        )));
    }
    let stumps = train_rusboost(
        &pos,
        &neg,
        config.stage2_weak_learners,
        config.neg_pos_ratio_per_round,
        derive_seed(seed, "stage2"),
    )?;

    // Measured rates of the raw (threshold 0) ensemble on its training
    // candidates; the operating threshold itself is swept at evaluation time.
    let d = crate::boosting::sample::score_all(&pos, &stumps)
        .iter()
        .filter(|&&s| s >= 0.0)
        .count() as f64
        / pos.len() as f64;
    let f = crate::boosting::sample::score_all(&neg, &stumps)
        .iter()
        .filter(|&&s| s >= 0.0)
        .count() as f64
        / neg.len() as f64;
    let stage = BoostedStage { stumps, stage_threshold: 0.0, measured_d: d, measured_f: f };
    let model2 = CascadeModel::new(FeatureSpace::CandidateFeatureVector, vec![stage]);

    Ok(TrainedModels { model1, model2, stage2_positives: n_pos, stage2_negatives: n_neg })
}

/// Runs both pipeline stages on preprocessed test records, attaching stage-2
/// scores to every candidate (threshold −inf; sweeping happens in evaluation).
pub fn detect_on_records(
    records: &[(Mammogram, AnnotationSet)],
    models: &TrainedModels,
    config: &ExperimentConfig,
) -> Result<Vec<ImageDetections>> {
    let opts = config.detect_options();
    let results: Vec<Result<ImageDetections>> = crate::exec::map_slice(records, |(img, ann)| {
        let p1 = detect_candidates(img, &models.model1, &opts)?;
        let candidates =
            classify_candidates(img, p1, &models.model2, f64::NEG_INFINITY)?;
        Ok(ImageDetections {
            image_id: img.image_id.clone(),
            case_id: img.case_id.clone(),
            candidates,
            annotations: ann.clone(),
        })
    });
    results.into_iter().collect()
}

/// Clusters an image's candidates at a given stage-2 threshold; returns the
/// kept candidate indices and the clusters over them (indices into the kept
/// list).
fn clusters_at_threshold(
    detections: &ImageDetections,
    threshold: f64,
    config: &ExperimentConfig,
) -> (Vec<usize>, ClusterSet) {
    let kept: Vec<usize> = detections
        .candidates
        .iter()
        .enumerate()
        .filter(|(_, c)| c.score.unwrap_or(f64::NEG_INFINITY) >= threshold)
        .map(|(i, _)| i)
        .collect();
    let kept_candidates: Vec<CandidateDetection> =
        kept.iter().map(|&i| detections.candidates[i].clone()).collect();
    let clusters =
        cluster_candidates(&kept_candidates, config.cluster_dist_mm, config.min_cluster_size);
    (kept, clusters)
}

/// All three curves of one fold.
pub struct FoldCurves {
    pub froc_individual: FrocCurve,
    pub froc_individual_stage1: FrocCurve,
    pub froc_cluster: Option<FrocCurve>,
    pub roc_case: Option<RocCurve>,
}

/// Cluster-level FROC sweep: at each stage-2 threshold, cluster the kept
/// candidates, build GT clusters from the annotations, and apply the
/// two-in-common rule.
fn cluster_froc_points(
    detections: &[ImageDetections],
    thresholds: &[f64],
    config: &ExperimentConfig,
) -> Option<Vec<(f64, f64)>> {
    let gt_clusters: Vec<Vec<Vec<usize>>> = detections
        .iter()
        .map(|d| {
            gt_clusters_from_annotations(
                &d.annotations.regions,
                config.pixel_spacing_mm,
                config.cluster_dist_mm,
                config.min_cluster_size,
            )
        })
        .collect();
    let total_gt: usize = gt_clusters.iter().map(|g| g.len()).sum();
    if total_gt == 0 {
        return None;
    }

    let per_image: Vec<Vec<(usize, usize)>> =
        crate::exec::map_indexed(detections.len(), |img_idx| {
            let image = &detections[img_idx];
            let gt = &gt_clusters[img_idx];
            thresholds
                .iter()
                .map(|&t| {
                    let (kept, clusters) = clusters_at_threshold(image, t, config);
                    // Individual matching over the kept candidates, to know
                    // which detections are true µCs of which annotation.
                    let scored: Vec<ScoredDetection> = kept
                        .iter()
                        .map(|&i| ScoredDetection {
                            mask: &image.candidates[i].mask,
                            score: image.candidates[i].score.unwrap_or(f64::NEG_INFINITY),
                        })
                        .collect();
                    let matches = match_individual(
                        &scored,
                        &image.annotations.regions,
                        config.min_overlap,
                        config.overlap_metric,
                    );
                    let mut det_to_annot = vec![None; kept.len()];
                    for &(d, a) in &matches.tp_pairs {
                        det_to_annot[d] = Some(a);
                    }
                    let det_clusters: Vec<Vec<usize>> =
                        clusters.clusters.iter().map(|c| c.members.clone()).collect();
                    let result = match_clusters(&det_clusters, gt, &det_to_annot);
                    (result.tp_pairs.len(), result.fp_detections.len())
                })
                .collect()
        });

    let n_images = detections.len() as f64;
    let mut points: Vec<(f64, f64)> = (0..thresholds.len())
        .map(|k| {
            let tp: usize = per_image.iter().map(|c| c[k].0).sum();
            let fp: usize = per_image.iter().map(|c| c[k].1).sum();
            (fp as f64 / n_images, tp as f64 / total_gt as f64)
        })
        .collect();
    points.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    Some(points)
}

fn case_scores(
    detections: &[ImageDetections],
    config: &ExperimentConfig,
) -> Vec<CaseScore> {
    let mut by_case: std::collections::BTreeMap<String, (bool, Option<f64>)> = Default::default();
    for image in detections {
        let has_gt_cluster = !gt_clusters_from_annotations(
            &image.annotations.regions,
            config.pixel_spacing_mm,
            config.cluster_dist_mm,
            config.min_cluster_size,
        )
        .is_empty();
        let (_, clusters) = clusters_at_threshold(image, f64::NEG_INFINITY, config);
        let best: Option<f64> = clusters
            .clusters
            .iter()
            .map(|c| {
                let member_scores: Vec<f64> = c
                    .members
                    .iter()
                    .map(|&i| image.candidates[i].score.unwrap_or(f64::NEG_INFINITY))
                    .collect();
                cluster_mean_score(&member_scores)
            })
            .fold(None, |acc: Option<f64>, s| Some(acc.map_or(s, |a| a.max(s))));
        let entry = by_case.entry(image.case_id.clone()).or_insert((false, None));
        entry.0 |= has_gt_cluster;
        entry.1 = match (entry.1, best) {
            (Some(a), Some(b)) => Some(a.max(b)),
            (a, b) => a.or(b),
        };
    }
    by_case
        .into_iter()
        .map(|(case_id, (positive, score))| CaseScore { case_id, positive, score })
        .collect()
}

/// Evaluates all three curve types on one fold's detections.
pub fn evaluate_fold(
    detections: &[ImageDetections],
    config: &ExperimentConfig,
) -> Result<FoldCurves> {
    let fpi_grid = default_fpi_grid();
    let froc_opts = FrocOptions {
        min_overlap: config.min_overlap,
        metric: config.overlap_metric,
        max_thresholds: config.max_sweep_thresholds,
    };

    // Individual-µC FROC on stage-2 scores.
    let images: Vec<FrocImage> = detections
        .iter()
        .map(|d| FrocImage {
            detections: d
                .candidates
                .iter()
                .map(|c| ScoredDetection {
                    mask: &c.mask,
                    score: c.score.unwrap_or(f64::NEG_INFINITY),
                })
                .collect(),
            annotations: &d.annotations.regions,
        })
        .collect();
    let froc_individual = froc(&images, &fpi_grid, &froc_opts)?;

    // The same candidates ranked by the pixel detector alone (P.1-only).
    let stage1_images: Vec<FrocImage> = detections
        .iter()
        .map(|d| FrocImage {
            detections: d
                .candidates
                .iter()
                .map(|c| ScoredDetection { mask: &c.mask, score: c.peak_margin })
                .collect(),
            annotations: &d.annotations.regions,
        })
        .collect();
    let froc_individual_stage1 = froc(&stage1_images, &fpi_grid, &froc_opts)?;

    // Cluster FROC over the same threshold sweep.
    let mut scores: Vec<f64> = detections
        .iter()
        .flat_map(|d| d.candidates.iter().filter_map(|c| c.score))
        .collect();
    scores.sort_by(|a, b| b.total_cmp(a));
    scores.dedup();
    if let Some(cap) = config.max_sweep_thresholds {
        if cap >= 2 && scores.len() > cap {
            let n = scores.len();
            scores = (0..cap).map(|i| scores[i * (n - 1) / (cap - 1)]).collect();
            scores.dedup();
        }
    }
    let froc_cluster = cluster_froc_points(detections, &scores, config)
        .map(|points| FrocCurve::from_points(points, fpi_grid.clone()));
    if froc_cluster.is_none() {
        log::warn!("fold has no ground-truth clusters; cluster FROC skipped");
    }

    // Case ROC.
    let cases = case_scores(detections, config);
    let roc = match case_roc(&cases, &default_fpr_grid()) {
        Ok(curve) => Some(curve),
        Err(e) => {
            log::warn!("case ROC skipped: {e}");
            None
        }
    };

    Ok(FoldCurves { froc_individual, froc_individual_stage1, froc_cluster, roc_case: roc })
}

/// Per-stage summary recorded in the report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StageSummary {
    pub n_stumps: usize,
    pub measured_d: f64,
    pub measured_f: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FoldReport {
    pub fold_index: usize,
    pub status: String,
    pub train_cases: usize,
    pub validation_cases: usize,
    pub test_cases: usize,
    pub test_images: usize,
    pub test_annotations: usize,
    pub stage1_stages: Vec<StageSummary>,
    pub stage2_positives: usize,
    pub stage2_negatives: usize,
    pub candidates_per_test_image: f64,
    pub tpr_at_1_fpi: Option<f64>,
    pub tpr_at_10_fpi: Option<f64>,
    pub case_auc: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AggregateReport {
    pub folds_succeeded: usize,
    pub folds_failed: usize,
    pub tpr_at_1_fpi: Option<f64>,
    pub tpr_at_10_fpi: Option<f64>,
    pub stage1_tpr_at_10_fpi: Option<f64>,
    pub case_auc_mean: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub folds: Vec<FoldReport>,
    pub aggregate: AggregateReport,
}

struct FoldOutput {
    report: FoldReport,
    curves: Option<FoldCurves>,
}

fn records_for_cases<'a>(
    records: &'a [(Mammogram, AnnotationSet)],
    cases: &[String],
) -> Vec<(Mammogram, AnnotationSet)> {
    records
        .iter()
        .filter(|(img, _)| cases.contains(&img.case_id))
        .map(|(img, ann)| (img.clone(), ann.clone()))
        .collect()
}

fn run_fold(
    fold: &CaseSplit,
    preprocessed: &[(Mammogram, AnnotationSet)],
    config: &ExperimentConfig,
    fold_dir: &Path,
) -> Result<FoldOutput> {
    std::fs::create_dir_all(fold_dir).map_err(|e| Error::io(fold_dir, e))?;
    let train = records_for_cases(preprocessed, &fold.train_cases);
    let validation = records_for_cases(preprocessed, &fold.validation_cases);
    let test = records_for_cases(preprocessed, &fold.test_cases);
    if train.is_empty() || validation.is_empty() || test.is_empty() {
        return Err(Error::Data(format!("fold {} has an empty partition", fold.fold_index)));
    }

    let seed = derive_seed(config.seed, &format!("fold-{}", fold.fold_index));
    let models = train_fold_models(&train, &validation, config, seed)?;
    models.model1.save(&fold_dir.join("model1.json"))?;
    models.model2.save(&fold_dir.join("model2.json"))?;

    let detections = detect_on_records(&test, &models, config)?;

    // Detections CSV with cluster ids at the loosest operating point.
    let mut rows: Vec<DetectionRow> = Vec::new();
    for image in &detections {
        let (kept, clusters) = clusters_at_threshold(image, f64::NEG_INFINITY, config);
        let mut cluster_of = vec![-1i64; kept.len()];
        for (cid, cluster) in clusters.clusters.iter().enumerate() {
            for &m in &cluster.members {
                cluster_of[m] = cid as i64;
            }
        }
        for (k, &i) in kept.iter().enumerate() {
            let c = &image.candidates[i];
            rows.push(DetectionRow {
                image_id: image.image_id.clone(),
                bbox: c.bbox(),
                score: c.score.unwrap_or(f64::NEG_INFINITY),
                cluster_id: cluster_of[k],
            });
        }
    }
    write_detections_csv(&fold_dir.join("detections_test.csv"), &rows)?;

    let curves = evaluate_fold(&detections, config)?;
    write_curve_csv(
        &fold_dir.join("froc_individual.csv"),
        &curves.froc_individual.grid,
        &curves.froc_individual.mean_tpr,
        &curves.froc_individual.std_tpr,
    )?;
    if let Some(c) = &curves.froc_cluster {
        write_curve_csv(&fold_dir.join("froc_cluster.csv"), &c.grid, &c.mean_tpr, &c.std_tpr)?;
    }
    if let Some(c) = &curves.roc_case {
        write_curve_csv(&fold_dir.join("roc_case.csv"), &c.grid, &c.mean_tpr, &c.std_tpr)?;
    }

    let n_candidates: usize = detections.iter().map(|d| d.candidates.len()).sum();
    let report = FoldReport {
        fold_index: fold.fold_index,
        status: "ok".into(),
        train_cases: fold.train_cases.len(),
        validation_cases: fold.validation_cases.len(),
        test_cases: fold.test_cases.len(),
        test_images: test.len(),
        test_annotations: test.iter().map(|(_, a)| a.len()).sum(),
        stage1_stages: models
            .model1
            .stages
            .iter()
            .map(|s| StageSummary {
                n_stumps: s.stumps.len(),
                measured_d: s.measured_d,
                measured_f: s.measured_f,
            })
            .collect(),
        stage2_positives: models.stage2_positives,
        stage2_negatives: models.stage2_negatives,
        candidates_per_test_image: n_candidates as f64 / detections.len() as f64,
        tpr_at_1_fpi: Some(interpolate_at(&curves.froc_individual.points, 1.0)),
        tpr_at_10_fpi: Some(interpolate_at(&curves.froc_individual.points, 10.0)),
        case_auc: curves.roc_case.as_ref().map(|c| auc(&c.points)),
    };
    Ok(FoldOutput { report, curves: Some(curves) })
}

/// Runs the full cross-validated experiment and writes every artifact under
/// `out_dir`. Existing runs are never overwritten unless `force` is set.
pub fn run_experiment(
    config: &ExperimentConfig,
    out_dir: &Path,
    force: bool,
    parallel_folds: usize,
) -> Result<ExperimentReport> {
    config.validate()?;
    let manifest_path = out_dir.join("manifest.json");
    if manifest_path.exists() && !force {
        return Err(Error::Config(format!(
            "{} already contains a run (pass --force to overwrite)",
            out_dir.display()
        )));
    }
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;

    let records = match &config.source {
        DataSource::Dataset { root } => load_dataset(root, config.pixel_spacing_mm)?,
        DataSource::Phantom(spec) => {
            let mut spec = spec.clone();
            spec.image.pixel_spacing_mm = config.pixel_spacing_mm;
            generate_phantom_dataset(&spec)?
        }
    };

    // The manifest records the fully resolved config: no silent defaults.
    let manifest = serde_json::json!({
        "config": config,
        "n_images": records.len(),
        "n_annotations": records.iter().map(|(_, a)| a.len()).sum::<usize>(),
    });
    std::fs::write(&manifest_path, serde_json::to_string_pretty(&manifest).unwrap())
        .map_err(|e| Error::io(&manifest_path, e))?;

    let mut case_ids: Vec<String> = records.iter().map(|(img, _)| img.case_id.clone()).collect();
    case_ids.sort();
    case_ids.dedup();
    let splits = split_cases(&case_ids, config.n_folds, config.split_ratios, config.seed)?;

    let preprocessed = preprocess_records(&records)?;
    drop(records);

    // Folds are independent; run them on a small worker pool when asked.
    let workers = parallel_folds.max(1).min(splits.len());
    let outputs: Vec<std::result::Result<FoldOutput, Error>> = if workers <= 1 {
        splits
            .iter()
            .map(|fold| {
                run_fold(fold, &preprocessed, config, &out_dir.join(format!("folds/fold_{}", fold.fold_index)))
            })
            .collect()
    } else {
        let next = std::sync::atomic::AtomicUsize::new(0);
        let results: Vec<std::sync::Mutex<Option<std::result::Result<FoldOutput, Error>>>> =
            splits.iter().map(|_| std::sync::Mutex::new(None)).collect();
        std::thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
                    if i >= splits.len() {
                        break;
                    }
                    let out = run_fold(
                        &splits[i],
                        &preprocessed,
                        config,
                        &out_dir.join(format!("folds/fold_{}", splits[i].fold_index)),
                    );
                    *results[i].lock().unwrap() = Some(out);
                });
            }
        });
        results.into_iter().map(|m| m.into_inner().unwrap().unwrap()).collect()
    };

    let mut fold_reports = Vec::new();
    let mut ok_curves: Vec<FoldCurves> = Vec::new();
    for (fold, output) in splits.iter().zip(outputs) {
        match output {
            Ok(out) => {
                fold_reports.push(out.report);
                if let Some(c) = out.curves {
                    ok_curves.push(c);
                }
            }
            Err(e) => {
                log::error!("fold {} failed: {e}", fold.fold_index);
                fold_reports.push(FoldReport {
                    fold_index: fold.fold_index,
                    status: format!("failed: {e}"),
                    train_cases: fold.train_cases.len(),
                    validation_cases: fold.validation_cases.len(),
                    test_cases: fold.test_cases.len(),
                    test_images: 0,
                    test_annotations: 0,
                    stage1_stages: vec![],
                    stage2_positives: 0,
                    stage2_negatives: 0,
                    candidates_per_test_image: 0.0,
                    tpr_at_1_fpi: None,
                    tpr_at_10_fpi: None,
                    case_auc: None,
                });
            }
        }
    }

    // Aggregate curves over successful folds.
    let curves_dir = out_dir.join("curves");
    std::fs::create_dir_all(&curves_dir).map_err(|e| Error::io(&curves_dir, e))?;
    let mut aggregate = AggregateReport {
        folds_succeeded: ok_curves.len(),
        folds_failed: fold_reports.len() - ok_curves.len(),
        tpr_at_1_fpi: None,
        tpr_at_10_fpi: None,
        stage1_tpr_at_10_fpi: None,
        case_auc_mean: None,
    };
    if !ok_curves.is_empty() {
        let individual: Vec<FrocCurve> =
            ok_curves.iter().map(|c| c.froc_individual.clone()).collect();
        let agg = aggregate_curves(&individual)?;
        write_curve_csv(
            &curves_dir.join("froc_individual.csv"),
            &agg.grid,
            &agg.mean_tpr,
            &agg.std_tpr,
        )?;
        let grid = &agg.grid;
        let at = |x: f64| -> Option<f64> {
            let pts: Vec<(f64, f64)> =
                grid.iter().copied().zip(agg.mean_tpr.iter().copied()).collect();
            Some(interpolate_at(&pts, x))
        };
        aggregate.tpr_at_1_fpi = at(1.0);
        aggregate.tpr_at_10_fpi = at(10.0);

        let stage1: Vec<FrocCurve> =
            ok_curves.iter().map(|c| c.froc_individual_stage1.clone()).collect();
        let agg1 = aggregate_curves(&stage1)?;
        write_curve_csv(
            &curves_dir.join("froc_individual_stage1.csv"),
            &agg1.grid,
            &agg1.mean_tpr,
            &agg1.std_tpr,
        )?;
        let pts1: Vec<(f64, f64)> =
            agg1.grid.iter().copied().zip(agg1.mean_tpr.iter().copied()).collect();
        aggregate.stage1_tpr_at_10_fpi = Some(interpolate_at(&pts1, 10.0));

        let clusters: Vec<FrocCurve> =
            ok_curves.iter().filter_map(|c| c.froc_cluster.clone()).collect();
        if !clusters.is_empty() {
            let aggc = aggregate_curves(&clusters)?;
            write_curve_csv(
                &curves_dir.join("froc_cluster.csv"),
                &aggc.grid,
                &aggc.mean_tpr,
                &aggc.std_tpr,
            )?;
        }
        let rocs: Vec<RocCurve> = ok_curves.iter().filter_map(|c| c.roc_case.clone()).collect();
        if !rocs.is_empty() {
            let aggr = aggregate_roc(&rocs)?;
            write_curve_csv(&curves_dir.join("roc_case.csv"), &aggr.grid, &aggr.mean_tpr, &aggr.std_tpr)?;
            let aucs: Vec<f64> =
                ok_curves.iter().filter_map(|c| c.roc_case.as_ref()).map(|c| auc(&c.points)).collect();
            aggregate.case_auc_mean = Some(aucs.iter().sum::<f64>() / aucs.len() as f64);
        }
    }

    let report = ExperimentReport { config: config.clone(), folds: fold_reports, aggregate };
    let report_path = out_dir.join("report.json");
    std::fs::write(&report_path, serde_json::to_string_pretty(&report).unwrap())
        .map_err(|e| Error::io(&report_path, e))?;
    Ok(report)
}
