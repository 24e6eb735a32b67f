//! Seeded multi-trial experiment runners.
//!
//! A run derives one generator per (trial, video) pair from the master
//! seed, so results are independent of execution order and worker count,
//! and extending the trial count leaves earlier trials unchanged. Reference
//! summaries are regenerated per trial from annotator scores under the
//! trial's segmentation (score-based datasets) or taken as fixed stored
//! masks (mask-based datasets).

use crate::datamodel::{FrameScores, Segmentation, SummaryMask, VideoRecord};
use crate::ingest::{load_prediction_scores, DatasetBundle, IngestError};
use crate::metrics::{
    evaluate_against_references, is_constant, kendall_tau_b, leave_one_out_f1, rank_eval_vs_annotators,
    spearman_rho, tvsum_reference_summaries, MetricsError, RankCorrelation,
};
use crate::seeding::trial_rng;
use crate::segmentation::{segment_video, SegmentError, SegmenterSpec};
use crate::selection::{
    knapsack_select, pool_scores, selected_length_stats, Pooling, SelectError,
};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("experiment needs annotations, bundle has none")]
    NeedsAnnotations,
    #[error("experiment needs stored reference masks, bundle has none")]
    NeedsReferenceMasks,
    #[error("video {video_id} has no annotations")]
    MissingAnnotations { video_id: String },
    #[error("segmenter requires per-frame features; missing for video {video_id}")]
    MissingFeatures { video_id: String },
    #[error("annotator index {index} out of range for video {video_id} ({available} annotators)")]
    AnnotatorIndex {
        video_id: String,
        index: usize,
        available: usize,
    },
    #[error("leave-one-out needs at least 2 annotators, video {video_id} has {available}")]
    TooFewAnnotators { video_id: String, available: usize },
    #[error("no videos eligible for this experiment")]
    NoVideos,
    #[error("trials must be >= 1")]
    ZeroTrials,
    #[error("budget fraction must lie in (0, 1], got {0}")]
    BadBudget(f64),
    #[error("thread pool: {0}")]
    ThreadPool(String),
    #[error(transparent)]
    Segment(#[from] SegmentError),
    #[error(transparent)]
    Select(#[from] SelectError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Ingest(#[from] IngestError),
}

/// Where candidate importance scores come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ScorerSpec {
    /// i.i.d. Uniform[0,1) per frame, fresh each trial.
    Random,
    /// Frame scores loaded from a prediction file.
    FromFile { path: PathBuf },
    /// One annotator's own scores.
    HumanAnnotator { index: usize },
}

impl ScorerSpec {
    pub fn label(&self) -> String {
        match self {
            ScorerSpec::Random => "random".to_string(),
            ScorerSpec::FromFile { path } => format!("pred:{}", path.display()),
            ScorerSpec::HumanAnnotator { index } => format!("annotator:{index}"),
        }
    }
}

/// How reference summaries are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReferenceMode {
    /// Stored masks if the bundle has them, otherwise regenerated from scores.
    Auto,
    /// Regenerate per trial from annotator scores under the trial's
    /// segmentation (TVSum-style protocol).
    FromScores,
    /// Fixed stored masks (SumMe-style protocol).
    FromMasks,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregation {
    Avg,
    Max,
    Both,
}

/// Full description of one randomization experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub segmenter: SegmenterSpec,
    pub scorer: ScorerSpec,
    pub pooling: Pooling,
    pub budget_fraction: f64,
    pub trials: usize,
    pub master_seed: u64,
    pub aggregation: Aggregation,
    pub references: ReferenceMode,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            segmenter: SegmenterSpec::two_peak_default(),
            scorer: ScorerSpec::Random,
            pooling: Pooling::Mean,
            budget_fraction: 0.15,
            trials: 100,
            master_seed: 0,
            aggregation: Aggregation::Both,
            references: ReferenceMode::Auto,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.trials == 0 {
            return Err(HarnessError::ZeroTrials);
        }
        if !(self.budget_fraction > 0.0 && self.budget_fraction <= 1.0) {
            return Err(HarnessError::BadBudget(self.budget_fraction));
        }
        self.segmenter.validate()?;
        Ok(())
    }
}

/// Mean and normal-approximation 95% confidence half-width
/// (1.96 σ / sqrt(n), population σ; 0 for a single sample).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ci {
    pub mean: f64,
    pub half_width_95: f64,
}

pub fn confidence_interval(samples: &[f64]) -> Ci {
    assert!(!samples.is_empty(), "confidence_interval needs samples");
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|&x| (x - mean) * (x - mean)).sum::<f64>() / n;
    Ci {
        mean,
        half_width_95: 1.96 * var.sqrt() / n.sqrt(),
    }
}

/// Uniform[0,1) importance score per frame.
pub fn random_frame_scores<R: Rng + ?Sized>(video: &VideoRecord, rng: &mut R) -> FrameScores {
    FrameScores {
        video_id: video.video_id.clone(),
        values: (0..video.n_frames).map(|_| rng.random::<f64>()).collect(),
    }
}

/// One (video, trial) outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub avg_f1: f64,
    pub max_f1: f64,
    /// None when no segmentation is involved (mask-based leave-one-out).
    pub n_segments: Option<usize>,
    pub median_selected: Option<f64>,
    pub median_unselected: Option<f64>,
    pub share_of_short: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoReport {
    pub video_id: String,
    pub mean_avg_f1: f64,
    pub mean_max_f1: f64,
    pub trials: Vec<TrialRecord>,
}

/// Segment-length selection-bias tallies over all (video, trial) pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasStats {
    /// Pairs for which both group medians existed.
    pub pairs: usize,
    /// Pairs with median selected length strictly below median unselected.
    pub pairs_selected_shorter: usize,
    pub frac_selected_shorter: Option<f64>,
    pub mean_share_of_short: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub version: String,
    /// "randomized" or "human-loo".
    pub method: String,
    pub config: ExperimentConfig,
    pub videos: Vec<VideoReport>,
    /// Mean of per-video means.
    pub dataset_mean_avg_f1: f64,
    pub dataset_mean_max_f1: f64,
    /// CI over the per-trial dataset means.
    pub ci_avg_f1: Ci,
    pub ci_max_f1: Ci,
    pub per_trial_avg_f1: Vec<f64>,
    pub per_trial_max_f1: Vec<f64>,
    pub bias: BiasStats,
}

// Resolved run context shared by the randomized and leave-one-out runners.
struct RunContext<'a> {
    bundle: &'a DatasetBundle,
    cfg: &'a ExperimentConfig,
    mode: ReferenceMode,
    videos: Vec<&'a VideoRecord>,
    predictions: Option<BTreeMap<String, FrameScores>>,
    /// Deterministic per-video segmentation for Uniform/KTS, and the shuffle
    /// base for randomized KTS.
    fixed_segs: BTreeMap<String, Segmentation>,
}

fn resolve_mode(bundle: &DatasetBundle, requested: ReferenceMode) -> Result<ReferenceMode, HarnessError> {
    match requested {
        ReferenceMode::Auto => {
            if bundle.has_reference_masks() {
                Ok(ReferenceMode::FromMasks)
            } else if bundle.has_annotations() {
                Ok(ReferenceMode::FromScores)
            } else {
                Err(HarnessError::NeedsAnnotations)
            }
        }
        ReferenceMode::FromScores => {
            if bundle.has_annotations() {
                Ok(ReferenceMode::FromScores)
            } else {
                Err(HarnessError::NeedsAnnotations)
            }
        }
        ReferenceMode::FromMasks => {
            if bundle.has_reference_masks() {
                Ok(ReferenceMode::FromMasks)
            } else {
                Err(HarnessError::NeedsReferenceMasks)
            }
        }
    }
}

fn build_context<'a>(
    bundle: &'a DatasetBundle,
    cfg: &'a ExperimentConfig,
    need_annotations: bool,
) -> Result<RunContext<'a>, HarnessError> {
    cfg.validate()?;
    let mode = resolve_mode(bundle, cfg.references)?;

    let videos: Vec<&VideoRecord> = bundle
        .videos
        .iter()
        .filter(|v| match mode {
            ReferenceMode::FromScores => bundle.annotations.contains_key(&v.video_id),
            ReferenceMode::FromMasks => bundle
                .reference_masks
                .get(&v.video_id)
                .is_some_and(|m| !m.is_empty()),
            ReferenceMode::Auto => unreachable!("mode is resolved"),
        })
        .collect();
    if videos.is_empty() {
        return Err(HarnessError::NoVideos);
    }

    if need_annotations || matches!(cfg.scorer, ScorerSpec::HumanAnnotator { .. }) {
        for video in &videos {
            if !bundle.annotations.contains_key(&video.video_id) {
                return Err(HarnessError::MissingAnnotations {
                    video_id: video.video_id.clone(),
                });
            }
        }
    }
    if let ScorerSpec::HumanAnnotator { index } = cfg.scorer {
        for video in &videos {
            let available = bundle.annotations[&video.video_id].n_annotators();
            if index >= available {
                return Err(HarnessError::AnnotatorIndex {
                    video_id: video.video_id.clone(),
                    index,
                    available,
                });
            }
        }
    }

    let predictions = match &cfg.scorer {
        ScorerSpec::FromFile { path } => Some(load_prediction_scores(Path::new(path), bundle)?),
        _ => None,
    };

    let mut fixed_segs = BTreeMap::new();
    if cfg.segmenter.requires_features() {
        for video in &videos {
            if !bundle.features.contains_key(&video.video_id) {
                return Err(HarnessError::MissingFeatures {
                    video_id: video.video_id.clone(),
                });
            }
        }
    }
    match &cfg.segmenter {
        SegmenterSpec::Uniform { .. } => {
            for video in &videos {
                let seg = segment_video(&cfg.segmenter, video, None, &mut noop_rng())?;
                fixed_segs.insert(video.video_id.clone(), seg);
            }
        }
        SegmenterSpec::Kts { .. } | SegmenterSpec::RandomizedKts { .. } => {
            // Base KTS boundaries are deterministic; compute once per video.
            let kts_spec = match &cfg.segmenter {
                SegmenterSpec::RandomizedKts {
                    penalty_c,
                    max_segments,
                    min_seg_len,
                } => SegmenterSpec::Kts {
                    penalty_c: *penalty_c,
                    max_segments: *max_segments,
                    min_seg_len: *min_seg_len,
                },
                other => other.clone(),
            };
            let computed: Vec<(String, Result<Segmentation, SegmentError>)> = videos
                .par_iter()
                .map(|video| {
                    let features = bundle.features.get(&video.video_id).map(|f| f.as_slice());
                    (
                        video.video_id.clone(),
                        segment_video(&kts_spec, video, features, &mut noop_rng()),
                    )
                })
                .collect();
            for (video_id, seg) in computed {
                fixed_segs.insert(video_id, seg?);
            }
        }
        _ => {}
    }

    Ok(RunContext {
        bundle,
        cfg,
        mode,
        videos,
        predictions,
        fixed_segs,
    })
}

// Deterministic segmenters never draw from their generator; hand them a
// fixed-seed one so the call signature stays uniform.
fn noop_rng() -> rand_chacha::ChaCha8Rng {
    crate::seeding::rng_from_seed(0)
}

impl RunContext<'_> {
    fn trial_segmentation(
        &self,
        video: &VideoRecord,
        rng: &mut rand_chacha::ChaCha8Rng,
    ) -> Result<Segmentation, HarnessError> {
        match &self.cfg.segmenter {
            SegmenterSpec::Uniform { .. } | SegmenterSpec::Kts { .. } => {
                Ok(self.fixed_segs[&video.video_id].clone())
            }
            SegmenterSpec::RandomizedKts { .. } => {
                let base = &self.fixed_segs[&video.video_id];
                Ok(crate::segmentation::randomize_kts(base, rng)?)
            }
            spec @ (SegmenterSpec::OnePeak { .. } | SegmenterSpec::TwoPeak { .. }) => {
                Ok(segment_video(spec, video, None, rng)?)
            }
        }
    }

    fn trial_scores(
        &self,
        video: &VideoRecord,
        rng: &mut rand_chacha::ChaCha8Rng,
    ) -> FrameScores {
        match &self.cfg.scorer {
            ScorerSpec::Random => random_frame_scores(video, rng),
            ScorerSpec::FromFile { .. } => self
                .predictions
                .as_ref()
                .expect("predictions resolved at context build")[&video.video_id]
                .clone(),
            ScorerSpec::HumanAnnotator { index } => {
                self.bundle.annotations[&video.video_id].annotators[*index].clone()
            }
        }
    }

    fn references(
        &self,
        video: &VideoRecord,
        seg: &Segmentation,
        budget: usize,
    ) -> Result<Vec<SummaryMask>, HarnessError> {
        match self.mode {
            ReferenceMode::FromScores => Ok(tvsum_reference_summaries(
                &self.bundle.annotations[&video.video_id],
                seg,
                budget,
            )?),
            ReferenceMode::FromMasks => Ok(self.bundle.reference_masks[&video.video_id].clone()),
            ReferenceMode::Auto => unreachable!("mode is resolved"),
        }
    }
}

fn run_pairs<F>(
    ctx: &RunContext<'_>,
    jobs: usize,
    per_pair: F,
) -> Result<Vec<Vec<TrialRecord>>, HarnessError>
where
    F: Fn(&VideoRecord, usize) -> Result<TrialRecord, HarnessError> + Sync,
{
    let trials = ctx.cfg.trials;
    let pairs: Vec<(usize, usize)> = (0..ctx.videos.len())
        .flat_map(|v| (0..trials).map(move |t| (v, t)))
        .collect();

    let compute = |&(v, t): &(usize, usize)| per_pair(ctx.videos[v], t);
    let flat: Vec<TrialRecord> = if jobs == 1 {
        pairs.iter().map(compute).collect::<Result<_, _>>()?
    } else {
        let mut builder = rayon::ThreadPoolBuilder::new();
        if jobs > 1 {
            builder = builder.num_threads(jobs);
        }
        let pool = builder
            .build()
            .map_err(|e| HarnessError::ThreadPool(e.to_string()))?;
        pool.install(|| pairs.par_iter().map(compute).collect::<Result<_, _>>())?
    };

    // Indexed collect preserves (video, trial) order; regroup per video.
    Ok(flat
        .chunks(trials)
        .map(|chunk| chunk.to_vec())
        .collect())
}

fn assemble_report(
    method: &str,
    ctx: &RunContext<'_>,
    per_video_trials: Vec<Vec<TrialRecord>>,
) -> ExperimentReport {
    let trials = ctx.cfg.trials;
    let videos: Vec<VideoReport> = ctx
        .videos
        .iter()
        .zip(per_video_trials)
        .map(|(video, records)| {
            let n = records.len() as f64;
            VideoReport {
                video_id: video.video_id.clone(),
                mean_avg_f1: records.iter().map(|r| r.avg_f1).sum::<f64>() / n,
                mean_max_f1: records.iter().map(|r| r.max_f1).sum::<f64>() / n,
                trials: records,
            }
        })
        .collect();

    let n_videos = videos.len() as f64;
    let dataset_mean_avg_f1 = videos.iter().map(|v| v.mean_avg_f1).sum::<f64>() / n_videos;
    let dataset_mean_max_f1 = videos.iter().map(|v| v.mean_max_f1).sum::<f64>() / n_videos;

    let per_trial_avg_f1: Vec<f64> = (0..trials)
        .map(|t| videos.iter().map(|v| v.trials[t].avg_f1).sum::<f64>() / n_videos)
        .collect();
    let per_trial_max_f1: Vec<f64> = (0..trials)
        .map(|t| videos.iter().map(|v| v.trials[t].max_f1).sum::<f64>() / n_videos)
        .collect();

    let mut pairs = 0usize;
    let mut shorter = 0usize;
    let mut share_sum = 0.0;
    let mut share_count = 0usize;
    for video in &videos {
        for record in &video.trials {
            if let (Some(sel), Some(unsel)) = (record.median_selected, record.median_unselected) {
                pairs += 1;
                if sel < unsel {
                    shorter += 1;
                }
            }
            if let Some(share) = record.share_of_short {
                share_sum += share;
                share_count += 1;
            }
        }
    }
    let bias = BiasStats {
        pairs,
        pairs_selected_shorter: shorter,
        frac_selected_shorter: (pairs > 0).then(|| shorter as f64 / pairs as f64),
        mean_share_of_short: (share_count > 0).then(|| share_sum / share_count as f64),
    };

    ExperimentReport {
        version: env!("CARGO_PKG_VERSION").to_string(),
        method: method.to_string(),
        config: ctx.cfg.clone(),
        videos,
        dataset_mean_avg_f1,
        dataset_mean_max_f1,
        ci_avg_f1: confidence_interval(&per_trial_avg_f1),
        ci_max_f1: confidence_interval(&per_trial_max_f1),
        per_trial_avg_f1,
        per_trial_max_f1,
        bias,
    }
}

/// Runs the randomization test: per trial and video, segment, score, pool,
/// select at the budget, and evaluate against the references.
pub fn run_randomization_test(
    bundle: &DatasetBundle,
    cfg: &ExperimentConfig,
    jobs: usize,
) -> Result<ExperimentReport, HarnessError> {
    let ctx = build_context(bundle, cfg, matches!(cfg.references, ReferenceMode::FromScores))?;
    // Score-based references need annotations even in Auto mode.
    if matches!(ctx.mode, ReferenceMode::FromScores) && !bundle.has_annotations() {
        return Err(HarnessError::NeedsAnnotations);
    }

    let per_video = run_pairs(&ctx, jobs, |video, trial| {
        let mut rng = trial_rng(cfg.master_seed, trial as u64, &video.video_id, "randtest");
        let seg = ctx.trial_segmentation(video, &mut rng)?;
        let scores = ctx.trial_scores(video, &mut rng);
        let budget = (cfg.budget_fraction * video.n_frames as f64).floor() as usize;
        let pooled = pool_scores(&scores, &seg, cfg.pooling)?;
        let candidate = knapsack_select(&pooled, budget);
        let refs = ctx.references(video, &seg, budget)?;
        let eval = evaluate_against_references(&candidate, &refs)?;
        let stats = selected_length_stats(&seg, &candidate)?;
        Ok(TrialRecord {
            trial,
            avg_f1: eval.avg_f1,
            max_f1: eval.max_f1,
            n_segments: Some(seg.n_segments()),
            median_selected: stats.median_selected,
            median_unselected: stats.median_unselected,
            share_of_short: Some(stats.share_of_short),
        })
    })?;

    Ok(assemble_report("randomized", &ctx, per_video))
}

/// Human leave-one-out baseline: each annotator's summary evaluated against
/// the remaining annotators' summaries.
///
/// With score-based references every annotator is converted to a summary
/// via the segmentation + knapsack protocol per trial; with stored masks
/// the masks are compared directly (a single deterministic trial).
pub fn run_human_loo(
    bundle: &DatasetBundle,
    cfg: &ExperimentConfig,
    jobs: usize,
) -> Result<ExperimentReport, HarnessError> {
    let mode = resolve_mode(bundle, cfg.references)?;
    let mut cfg = cfg.clone();
    if matches!(mode, ReferenceMode::FromMasks) {
        // Stored masks do not change across trials.
        cfg.trials = 1;
    }
    let ctx = build_context(bundle, &cfg, matches!(mode, ReferenceMode::FromScores))?;

    match ctx.mode {
        ReferenceMode::FromScores => {
            for video in &ctx.videos {
                let available = bundle.annotations[&video.video_id].n_annotators();
                if available < 2 {
                    return Err(HarnessError::TooFewAnnotators {
                        video_id: video.video_id.clone(),
                        available,
                    });
                }
            }
        }
        ReferenceMode::FromMasks => {
            for video in &ctx.videos {
                let available = bundle.reference_masks[&video.video_id].len();
                if available < 2 {
                    return Err(HarnessError::TooFewAnnotators {
                        video_id: video.video_id.clone(),
                        available,
                    });
                }
            }
        }
        ReferenceMode::Auto => unreachable!("mode is resolved"),
    }

    let per_video = run_pairs(&ctx, jobs, |video, trial| {
        match ctx.mode {
            ReferenceMode::FromScores => {
                let mut rng =
                    trial_rng(cfg.master_seed, trial as u64, &video.video_id, "randtest");
                let seg = ctx.trial_segmentation(video, &mut rng)?;
                let budget = (cfg.budget_fraction * video.n_frames as f64).floor() as usize;
                let ann = &ctx.bundle.annotations[&video.video_id];
                let summaries = tvsum_reference_summaries(ann, &seg, budget)?;
                let loo = leave_one_out_f1(&summaries)?;

                // Selection bias measured over each annotator's own summary.
                let mut pairs_shorter = Vec::new();
                let mut share_sum = 0.0;
                for summary in &summaries {
                    let stats = selected_length_stats(&seg, summary)?;
                    if let (Some(sel), Some(unsel)) =
                        (stats.median_selected, stats.median_unselected)
                    {
                        pairs_shorter.push(sel < unsel);
                    }
                    share_sum += stats.share_of_short;
                }
                let medians = aggregate_loo_medians(&seg, &summaries)?;
                Ok(TrialRecord {
                    trial,
                    avg_f1: loo.mean_avg_f1,
                    max_f1: loo.mean_max_f1,
                    n_segments: Some(seg.n_segments()),
                    median_selected: medians.0,
                    median_unselected: medians.1,
                    share_of_short: Some(share_sum / summaries.len() as f64),
                })
            }
            ReferenceMode::FromMasks => {
                let masks = &ctx.bundle.reference_masks[&video.video_id];
                let loo = leave_one_out_f1(masks)?;
                Ok(TrialRecord {
                    trial,
                    avg_f1: loo.mean_avg_f1,
                    max_f1: loo.mean_max_f1,
                    n_segments: None,
                    median_selected: None,
                    median_unselected: None,
                    share_of_short: None,
                })
            }
            ReferenceMode::Auto => unreachable!("mode is resolved"),
        }
    })?;

    Ok(assemble_report("human-loo", &ctx, per_video))
}

// Mean of the per-annotator group medians, used as the trial's bias record
// for leave-one-out runs.
fn aggregate_loo_medians(
    seg: &Segmentation,
    summaries: &[SummaryMask],
) -> Result<(Option<f64>, Option<f64>), HarnessError> {
    let mut sel = Vec::new();
    let mut unsel = Vec::new();
    for summary in summaries {
        let stats = selected_length_stats(seg, summary)?;
        if let Some(m) = stats.median_selected {
            sel.push(m);
        }
        if let Some(m) = stats.median_unselected {
            unsel.push(m);
        }
    }
    let mean = |v: &[f64]| (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64);
    Ok((mean(&sel), mean(&unsel)))
}

/// Paired budget sweep: one report per fraction with identical seeds, so
/// per-trial segmentations and scores match across budgets.
pub fn run_budget_sweep(
    bundle: &DatasetBundle,
    cfg: &ExperimentConfig,
    fractions: &[f64],
    jobs: usize,
) -> Result<Vec<ExperimentReport>, HarnessError> {
    fractions
        .iter()
        .map(|&fraction| {
            let mut swept = cfg.clone();
            swept.budget_fraction = fraction;
            run_randomization_test(bundle, &swept, jobs)
        })
        .collect()
}

/// Source of the scores whose ranking is evaluated.
#[derive(Debug, Clone, PartialEq)]
pub enum RankScorer {
    Random,
    LeaveOneOut,
    Predictions(BTreeMap<String, FrameScores>),
}

impl RankScorer {
    pub fn label(&self) -> &'static str {
        match self {
            RankScorer::Random => "random",
            RankScorer::LeaveOneOut => "human-loo",
            RankScorer::Predictions(_) => "predictions",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoRankEval {
    pub video_id: String,
    pub tau: f64,
    pub rho: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankEvalReport {
    pub version: String,
    pub method: String,
    pub trials: usize,
    pub master_seed: u64,
    pub videos: Vec<VideoRankEval>,
    pub dataset: RankCorrelation,
    pub ci_tau: Ci,
    pub ci_rho: Ci,
    /// Count of evaluated pairs with a constant input (correlation
    /// reported as 0).
    pub degenerate_pairs: usize,
}

/// Rank-correlation evaluation of predicted (or random, or leave-one-out
/// human) scores against annotator scores.
pub fn run_rank_eval(
    bundle: &DatasetBundle,
    scorer: &RankScorer,
    trials: usize,
    master_seed: u64,
    jobs: usize,
) -> Result<RankEvalReport, HarnessError> {
    if trials == 0 {
        return Err(HarnessError::ZeroTrials);
    }
    if !bundle.has_annotations() {
        return Err(HarnessError::NeedsAnnotations);
    }
    let videos: Vec<&VideoRecord> = bundle
        .videos
        .iter()
        .filter(|v| bundle.annotations.contains_key(&v.video_id))
        .collect();
    if videos.is_empty() {
        return Err(HarnessError::NoVideos);
    }
    if let RankScorer::LeaveOneOut = scorer {
        for video in &videos {
            let available = bundle.annotations[&video.video_id].n_annotators();
            if available < 2 {
                return Err(HarnessError::TooFewAnnotators {
                    video_id: video.video_id.clone(),
                    available,
                });
            }
        }
    }
    if let RankScorer::Predictions(map) = scorer {
        for video in &videos {
            if !map.contains_key(&video.video_id) {
                return Err(HarnessError::Ingest(IngestError::MissingPredictions {
                    missing: vec![video.video_id.clone()],
                }));
            }
        }
    }
    // Random scoring is the only multi-trial mode.
    let trials = if matches!(scorer, RankScorer::Random) {
        trials
    } else {
        1
    };

    struct Cell {
        tau: f64,
        rho: f64,
        degenerate: usize,
    }

    let pairs: Vec<(usize, usize)> = (0..videos.len())
        .flat_map(|v| (0..trials).map(move |t| (v, t)))
        .collect();
    let compute = |&(v, t): &(usize, usize)| -> Result<Cell, HarnessError> {
        let video = videos[v];
        let ann = &bundle.annotations[&video.video_id];
        match scorer {
            RankScorer::Random => {
                let mut rng = trial_rng(master_seed, t as u64, &video.video_id, "rankeval");
                let pred = random_frame_scores(video, &mut rng);
                let rc = rank_eval_vs_annotators(&pred, ann)?;
                let degenerate = ann
                    .annotators
                    .iter()
                    .filter(|a| is_constant(&a.values))
                    .count();
                Ok(Cell {
                    tau: rc.tau,
                    rho: rc.rho,
                    degenerate,
                })
            }
            RankScorer::Predictions(map) => {
                let pred = &map[&video.video_id];
                let rc = rank_eval_vs_annotators(pred, ann)?;
                let degenerate = if is_constant(&pred.values) {
                    ann.n_annotators()
                } else {
                    ann.annotators
                        .iter()
                        .filter(|a| is_constant(&a.values))
                        .count()
                };
                Ok(Cell {
                    tau: rc.tau,
                    rho: rc.rho,
                    degenerate,
                })
            }
            RankScorer::LeaveOneOut => {
                // Both correlations are symmetric; compute each unordered
                // pair once.
                let a = ann.n_annotators();
                let mut tau = vec![0.0; a * a];
                let mut rho = vec![0.0; a * a];
                let mut degenerate = 0usize;
                for k in 0..a {
                    for j in (k + 1)..a {
                        let x = &ann.annotators[k].values;
                        let y = &ann.annotators[j].values;
                        if is_constant(x) || is_constant(y) {
                            degenerate += 1;
                        }
                        let t = kendall_tau_b(x, y)?;
                        let r = spearman_rho(x, y)?;
                        tau[k * a + j] = t;
                        tau[j * a + k] = t;
                        rho[k * a + j] = r;
                        rho[j * a + k] = r;
                    }
                }
                let mut tau_sum = 0.0;
                let mut rho_sum = 0.0;
                for k in 0..a {
                    let row_tau: f64 = (0..a).filter(|&j| j != k).map(|j| tau[k * a + j]).sum();
                    let row_rho: f64 = (0..a).filter(|&j| j != k).map(|j| rho[k * a + j]).sum();
                    tau_sum += row_tau / (a - 1) as f64;
                    rho_sum += row_rho / (a - 1) as f64;
                }
                Ok(Cell {
                    tau: tau_sum / a as f64,
                    rho: rho_sum / a as f64,
                    degenerate,
                })
            }
        }
    };

    let flat: Vec<Cell> = if jobs == 1 {
        pairs.iter().map(compute).collect::<Result<_, _>>()?
    } else {
        let mut builder = rayon::ThreadPoolBuilder::new();
        if jobs > 1 {
            builder = builder.num_threads(jobs);
        }
        let pool = builder
            .build()
            .map_err(|e| HarnessError::ThreadPool(e.to_string()))?;
        pool.install(|| pairs.par_iter().map(compute).collect::<Result<_, _>>())?
    };

    let mut video_reports = Vec::with_capacity(videos.len());
    let mut degenerate_pairs = 0usize;
    for (v, video) in videos.iter().enumerate() {
        let cells = &flat[v * trials..(v + 1) * trials];
        degenerate_pairs += cells.iter().map(|c| c.degenerate).sum::<usize>();
        video_reports.push(VideoRankEval {
            video_id: video.video_id.clone(),
            tau: cells.iter().map(|c| c.tau).sum::<f64>() / trials as f64,
            rho: cells.iter().map(|c| c.rho).sum::<f64>() / trials as f64,
        });
    }
    let n_videos = videos.len() as f64;
    let dataset = RankCorrelation {
        tau: video_reports.iter().map(|v| v.tau).sum::<f64>() / n_videos,
        rho: video_reports.iter().map(|v| v.rho).sum::<f64>() / n_videos,
    };
    let per_trial_tau: Vec<f64> = (0..trials)
        .map(|t| (0..videos.len()).map(|v| flat[v * trials + t].tau).sum::<f64>() / n_videos)
        .collect();
    let per_trial_rho: Vec<f64> = (0..trials)
        .map(|t| (0..videos.len()).map(|v| flat[v * trials + t].rho).sum::<f64>() / n_videos)
        .collect();

    Ok(RankEvalReport {
        version: env!("CARGO_PKG_VERSION").to_string(),
        method: scorer.label().to_string(),
        trials,
        master_seed,
        videos: video_reports,
        dataset,
        ci_tau: confidence_interval(&per_trial_tau),
        ci_rho: confidence_interval(&per_trial_rho),
        degenerate_pairs,
    })
}

/// Table-style CSV for experiment reports: one row per report.
pub fn reports_to_csv(reports: &[&ExperimentReport]) -> String {
    let mut out = String::from(
        "method,segmenter,pooling,budget_fraction,trials,avg_f1,avg_f1_ci95,max_f1,max_f1_ci95\n",
    );
    for report in reports {
        out.push_str(&format!(
            "{},{},{},{:.4},{},{:.4},{:.4},{:.4},{:.4}\n",
            report.method,
            report.config.segmenter.label(),
            report.config.pooling,
            report.config.budget_fraction,
            report.config.trials,
            report.dataset_mean_avg_f1,
            report.ci_avg_f1.half_width_95,
            report.dataset_mean_max_f1,
            report.ci_max_f1.half_width_95,
        ));
    }
    out
}

/// Table-style CSV for rank evaluations: `method,kendall_tau,spearman_rho`.
pub fn rank_reports_to_csv(reports: &[&RankEvalReport]) -> String {
    let mut out = String::from("method,kendall_tau,spearman_rho\n");
    for report in reports {
        out.push_str(&format!(
            "{},{:.4},{:.4}\n",
            report.method, report.dataset.tau, report.dataset.rho
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn ci_constant_samples() {
        let ci = confidence_interval(&[1.0, 1.0, 1.0, 1.0]);
        assert_eq!(ci.mean, 1.0);
        assert_eq!(ci.half_width_95, 0.0);
    }

    #[test]
    fn ci_two_point_sample() {
        let ci = confidence_interval(&[0.0, 1.0]);
        assert_abs_diff_eq!(ci.mean, 0.5);
        assert_abs_diff_eq!(ci.half_width_95, 1.96 * 0.5 / 2f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn ci_single_sample_has_zero_width() {
        let ci = confidence_interval(&[0.42]);
        assert_eq!(ci.half_width_95, 0.0);
    }

    #[test]
    fn ci_uniform_samples_match_known_variance() {
        let mut rng = crate::seeding::rng_from_seed(3);
        let samples: Vec<f64> = (0..10_000).map(|_| rng.random::<f64>()).collect();
        let ci = confidence_interval(&samples);
        assert!((ci.mean - 0.5).abs() < 0.01, "mean {}", ci.mean);
        let expected = 1.96 * (1.0 / 12f64).sqrt() / 100.0;
        assert!((ci.half_width_95 - expected).abs() < 0.0005);
    }

    #[test]
    fn random_scores_are_seeded_and_in_range() {
        let video = VideoRecord::new("v", 100_000, 30.0).unwrap();
        let a = random_frame_scores(&video, &mut crate::seeding::rng_from_seed(1));
        let b = random_frame_scores(&video, &mut crate::seeding::rng_from_seed(1));
        assert_eq!(a, b);
        assert!(a.values.iter().all(|&v| (0.0..1.0).contains(&v)));
        let mean = a.values.iter().sum::<f64>() / a.values.len() as f64;
        assert!((mean - 0.5).abs() < 0.005, "mean {mean}");
    }

    #[test]
    fn config_validation_errors() {
        let mut cfg = ExperimentConfig::default();
        cfg.trials = 0;
        assert!(matches!(cfg.validate(), Err(HarnessError::ZeroTrials)));
        let mut cfg = ExperimentConfig::default();
        cfg.budget_fraction = 0.0;
        assert!(matches!(cfg.validate(), Err(HarnessError::BadBudget(_))));
        let mut cfg = ExperimentConfig::default();
        cfg.budget_fraction = 1.5;
        assert!(cfg.validate().is_err());
    }
}
