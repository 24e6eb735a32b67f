//! Synthetic annotator datasets for dataset-free testing.
//!
//! Each video gets a latent importance profile: a low baseline with
//! `n_events` Gaussian bumps at separated event regions. Inlier annotators
//! report the profile plus Gaussian noise, quantized to the 1..5 scale;
//! outlier annotators report `6 - profile` before noise, so they highlight
//! the opposite parts of the video. Per-frame features are piecewise
//! constant and change exactly at the event-region edges, which gives KTS
//! known ground-truth boundaries. Everything is a pure function of the
//! config seed.

use super::{DatasetBundle, IngestError};
use crate::datamodel::{AnnotationSet, FrameScores, SummaryMask, VideoRecord};
use crate::seeding::trial_rng;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

const FEATURE_DIM: usize = 8;
const MASK_FRACTION: f64 = 0.15;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub n_videos: usize,
    pub n_frames_min: usize,
    pub n_frames_max: usize,
    pub fps: f64,
    pub n_annotators: usize,
    /// High-importance regions per video.
    pub n_events: usize,
    /// Annotator noise, in score units before quantization.
    pub base_noise: f64,
    /// Fraction of annotators scoring the inverted profile.
    pub outlier_fraction: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_videos: 4,
            n_frames_min: 1500,
            n_frames_max: 3000,
            fps: 30.0,
            n_annotators: 10,
            n_events: 5,
            base_noise: 0.5,
            outlier_fraction: 0.0,
            seed: 7,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<(), IngestError> {
        let fail = |msg: String| Err(IngestError::BadSynthConfig(msg));
        if self.n_videos == 0 || self.n_annotators == 0 || self.n_events == 0 {
            return fail("n_videos, n_annotators and n_events must be >= 1".into());
        }
        if self.n_frames_min == 0 || self.n_frames_max < self.n_frames_min {
            return fail(format!(
                "bad n_frames range {}..{}",
                self.n_frames_min, self.n_frames_max
            ));
        }
        if self.n_frames_min / self.n_events < 8 {
            return fail(format!(
                "n_frames_min {} too small for {} events (need >= {})",
                self.n_frames_min,
                self.n_events,
                8 * self.n_events
            ));
        }
        if !(self.fps.is_finite() && self.fps > 0.0) {
            return fail(format!("fps must be positive, got {}", self.fps));
        }
        if !(self.base_noise.is_finite() && self.base_noise >= 0.0) {
            return fail(format!("base_noise must be >= 0, got {}", self.base_noise));
        }
        if !(0.0..=1.0).contains(&self.outlier_fraction) {
            return fail(format!(
                "outlier_fraction must lie in [0,1], got {}",
                self.outlier_fraction
            ));
        }
        Ok(())
    }
}

/// Ground truth the generator used: per-video feature change points (the
/// event-region edges), available for segmentation oracles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthTruth {
    pub event_boundaries: BTreeMap<String, Vec<usize>>,
}

struct EventRegion {
    start: usize,
    end: usize,
    amplitude: f64,
}

fn sample_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    // Box-Muller; u1 shifted away from zero.
    let u1: f64 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

fn quantize(value: f64) -> f64 {
    value.round().clamp(1.0, 5.0)
}

/// Generates a synthetic bundle. Deterministic given the config seed.
pub fn synth_dataset(cfg: &SynthConfig) -> Result<DatasetBundle, IngestError> {
    synth_dataset_with_truth(cfg).map(|(bundle, _)| bundle)
}

/// As [`synth_dataset`], also returning the generator's ground truth.
pub fn synth_dataset_with_truth(
    cfg: &SynthConfig,
) -> Result<(DatasetBundle, SynthTruth), IngestError> {
    cfg.validate()?;

    let mut videos = Vec::with_capacity(cfg.n_videos);
    let mut annotations = BTreeMap::new();
    let mut reference_masks = BTreeMap::new();
    let mut features = BTreeMap::new();
    let mut event_boundaries = BTreeMap::new();

    let n_outliers = ((cfg.outlier_fraction * cfg.n_annotators as f64).round() as usize)
        .min(cfg.n_annotators);
    let first_outlier = cfg.n_annotators - n_outliers;

    for v in 0..cfg.n_videos {
        let video_id = format!("synth_{v:03}");
        let mut rng = trial_rng(cfg.seed, v as u64, &video_id, "synth-video");

        let n = rng.random_range(cfg.n_frames_min..=cfg.n_frames_max);
        let video = VideoRecord::new(video_id.clone(), n, cfg.fps)?;

        // One event region per slot, comfortably inside it so consecutive
        // regions never touch and all cut points are interior.
        let slot = n / cfg.n_events;
        let mut regions = Vec::with_capacity(cfg.n_events);
        for k in 0..cfg.n_events {
            let jitter = rng.random_range(0..=slot / 8);
            let start = k * slot + slot / 4 + jitter;
            let len = rng.random_range(slot / 4..slot / 2);
            let amplitude = 2.5 + rng.random::<f64>();
            regions.push(EventRegion {
                start,
                end: start + len,
                amplitude,
            });
        }

        let profile: Vec<f64> = (0..n)
            .map(|i| {
                let mut value = 1.0;
                for region in &regions {
                    let center = (region.start + region.end) as f64 / 2.0;
                    let sigma = ((region.end - region.start) as f64 / 4.0).max(0.5);
                    let d = i as f64 - center;
                    value += region.amplitude * (-d * d / (2.0 * sigma * sigma)).exp();
                }
                value
            })
            .collect();

        let mut annotators = Vec::with_capacity(cfg.n_annotators);
        let mut masks = Vec::with_capacity(cfg.n_annotators);
        for a in 0..cfg.n_annotators {
            let mut ann_rng = trial_rng(cfg.seed, a as u64, &video_id, "synth-annotator");
            let outlier = a >= first_outlier;
            let values: Vec<f64> = profile
                .iter()
                .map(|&p| {
                    let base = if outlier { 6.0 - p } else { p };
                    let noisy = if cfg.base_noise > 0.0 {
                        base + cfg.base_noise * sample_normal(&mut ann_rng)
                    } else {
                        base
                    };
                    quantize(noisy)
                })
                .collect();
            masks.push(top_fraction_mask(&video_id, &values, MASK_FRACTION));
            annotators.push(FrameScores::new(video_id.clone(), values)?);
        }

        let cuts: Vec<usize> = regions.iter().flat_map(|r| [r.start, r.end]).collect();
        let mut feat_rng = trial_rng(cfg.seed, v as u64, &video_id, "synth-features");
        let mut rows: Vec<Vec<f64>> = Vec::with_capacity(n);
        let mut era_edges = vec![0usize];
        era_edges.extend(&cuts);
        era_edges.push(n);
        for window in era_edges.windows(2) {
            let vector: Vec<f64> = (0..FEATURE_DIM)
                .map(|_| feat_rng.random_range(-1.0..1.0))
                .collect();
            for _ in window[0]..window[1] {
                rows.push(vector.clone());
            }
        }

        annotations.insert(video_id.clone(), AnnotationSet::new(video_id.clone(), annotators)?);
        reference_masks.insert(video_id.clone(), masks);
        features.insert(video_id.clone(), rows);
        event_boundaries.insert(video_id.clone(), cuts);
        videos.push(video);
    }

    let bundle = DatasetBundle {
        videos,
        annotations,
        reference_masks,
        features,
        reference_limit_fraction: Some(MASK_FRACTION),
    };
    bundle.validate()?;
    Ok((bundle, SynthTruth { event_boundaries }))
}

// Mask selecting the floor(fraction * n) highest-scoring frames, ties broken
// by frame index.
fn top_fraction_mask(video_id: &str, scores: &[f64], fraction: f64) -> SummaryMask {
    let n = scores.len();
    let k = (fraction * n as f64).floor() as usize;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        scores[b]
            .partial_cmp(&scores[a])
            .unwrap()
            .then_with(|| a.cmp(&b))
    });
    let mut mask = vec![0u8; n];
    for &i in order.iter().take(k) {
        mask[i] = 1;
    }
    SummaryMask {
        video_id: video_id.to_string(),
        mask,
    }
}
