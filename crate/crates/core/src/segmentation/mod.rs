//! Temporal segmentation methods.
//!
//! Five segmenters produce the boundary structure the selection stage
//! operates on: fixed-length uniform segments, Poisson-length one-peak and
//! two-peak random segmentations, content-based KTS change-point detection
//! over per-frame features, and randomized KTS (KTS lengths, shuffled
//! order). Random segmenters draw from a caller-provided generator and are
//! deterministic given its seed.

use crate::datamodel::{DataError, Segmentation, VideoRecord};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

mod kts;
pub use kts::segment_kts;

#[derive(Debug, Error, PartialEq)]
pub enum SegmentError {
    #[error("segment length must be >= 1")]
    ZeroSegmentLength,
    #[error("poisson rate must be positive and finite, got {0}")]
    BadRate(f64),
    #[error("mixture probability must lie in [0,1], got {0}")]
    BadMixtureProbability(f64),
    #[error("kts: {0}")]
    BadKtsParams(String),
    #[error("video {video_id}: features are empty")]
    EmptyFeatures { video_id: String },
    #[error("video {video_id}: features have {got} rows, expected {expected}")]
    FeatureRows {
        video_id: String,
        expected: usize,
        got: usize,
    },
    #[error("video {video_id}: feature row {row} has {got} columns, expected {expected}")]
    RaggedFeatures {
        video_id: String,
        row: usize,
        expected: usize,
        got: usize,
    },
    #[error("video {video_id}: non-finite feature value at row {row}")]
    NonFiniteFeature { video_id: String, row: usize },
    #[error("segmenter {0} requires per-frame features, none available")]
    MissingFeatures(String),
    #[error(transparent)]
    Data(#[from] DataError),
}

/// Configuration of one segmentation method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "kebab-case")]
pub enum SegmenterSpec {
    Uniform {
        len_frames: usize,
    },
    OnePeak {
        lambda: f64,
    },
    TwoPeak {
        lambda_short: f64,
        lambda_long: f64,
        p_short: f64,
    },
    Kts {
        penalty_c: f64,
        /// Upper bound on candidate segment counts; `None` derives
        /// `max(1, n_frames / 30)` from the video.
        max_segments: Option<usize>,
        min_seg_len: usize,
    },
    RandomizedKts {
        penalty_c: f64,
        max_segments: Option<usize>,
        min_seg_len: usize,
    },
}

impl SegmenterSpec {
    /// Uniform segments of 60 frames, roughly two seconds of video.
    pub fn uniform_default() -> Self {
        SegmenterSpec::Uniform { len_frames: 60 }
    }

    /// Poisson segment lengths with rate 60.
    pub fn one_peak_default() -> Self {
        SegmenterSpec::OnePeak { lambda: 60.0 }
    }

    /// Equal mixture of Poisson(30) and Poisson(90) lengths, mean 60.
    pub fn two_peak_default() -> Self {
        SegmenterSpec::TwoPeak {
            lambda_short: 30.0,
            lambda_long: 90.0,
            p_short: 0.5,
        }
    }

    pub fn kts_default() -> Self {
        SegmenterSpec::Kts {
            penalty_c: 1.0,
            max_segments: None,
            min_seg_len: 1,
        }
    }

    pub fn validate(&self) -> Result<(), SegmentError> {
        match *self {
            SegmenterSpec::Uniform { len_frames } => {
                if len_frames == 0 {
                    return Err(SegmentError::ZeroSegmentLength);
                }
            }
            SegmenterSpec::OnePeak { lambda } => {
                if !(lambda.is_finite() && lambda > 0.0) {
                    return Err(SegmentError::BadRate(lambda));
                }
            }
            SegmenterSpec::TwoPeak {
                lambda_short,
                lambda_long,
                p_short,
            } => {
                for rate in [lambda_short, lambda_long] {
                    if !(rate.is_finite() && rate > 0.0) {
                        return Err(SegmentError::BadRate(rate));
                    }
                }
                if !(0.0..=1.0).contains(&p_short) {
                    return Err(SegmentError::BadMixtureProbability(p_short));
                }
            }
            SegmenterSpec::Kts {
                penalty_c,
                max_segments,
                min_seg_len,
            }
            | SegmenterSpec::RandomizedKts {
                penalty_c,
                max_segments,
                min_seg_len,
            } => {
                if !(penalty_c.is_finite() && penalty_c >= 0.0) {
                    return Err(SegmentError::BadKtsParams(format!(
                        "penalty_c must be finite and >= 0, got {penalty_c}"
                    )));
                }
                if min_seg_len == 0 {
                    return Err(SegmentError::BadKtsParams(
                        "min_seg_len must be >= 1".into(),
                    ));
                }
                if max_segments == Some(0) {
                    return Err(SegmentError::BadKtsParams(
                        "max_segments must be >= 1".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Whether a fresh draw happens per trial (new lengths or a new shuffle).
    pub fn is_stochastic(&self) -> bool {
        matches!(
            self,
            SegmenterSpec::OnePeak { .. }
                | SegmenterSpec::TwoPeak { .. }
                | SegmenterSpec::RandomizedKts { .. }
        )
    }

    pub fn requires_features(&self) -> bool {
        matches!(
            self,
            SegmenterSpec::Kts { .. } | SegmenterSpec::RandomizedKts { .. }
        )
    }

    /// Short label used in report tables.
    pub fn label(&self) -> &'static str {
        match self {
            SegmenterSpec::Uniform { .. } => "uniform",
            SegmenterSpec::OnePeak { .. } => "one-peak",
            SegmenterSpec::TwoPeak { .. } => "two-peak",
            SegmenterSpec::Kts { .. } => "kts",
            SegmenterSpec::RandomizedKts { .. } => "randomized-kts",
        }
    }
}

/// Divides the video into constant-length segments; the final segment may
/// be shorter.
pub fn segment_uniform(video: &VideoRecord, len_frames: usize) -> Result<Segmentation, SegmentError> {
    if len_frames == 0 {
        return Err(SegmentError::ZeroSegmentLength);
    }
    let mut boundaries: Vec<usize> = (0..video.n_frames).step_by(len_frames).collect();
    boundaries.push(video.n_frames);
    Ok(Segmentation::new(video.video_id.clone(), boundaries)?)
}

/// Poisson sample by Knuth's product method; exact and adequate for the
/// event rates used here (λ ≤ ~120).
pub fn sample_poisson<R: Rng + ?Sized>(lambda: f64, rng: &mut R) -> usize {
    let limit = (-lambda).exp();
    let mut k = 0usize;
    let mut p = 1.0f64;
    loop {
        k += 1;
        p *= rng.random::<f64>();
        if p <= limit {
            return k - 1;
        }
    }
}

fn segment_poisson_lengths<R, F>(
    video: &VideoRecord,
    rng: &mut R,
    mut draw: F,
) -> Result<Segmentation, SegmentError>
where
    R: Rng + ?Sized,
    F: FnMut(&mut R) -> usize,
{
    let n = video.n_frames;
    let mut lengths = Vec::new();
    let mut acc = 0usize;
    while acc < n {
        // Zero draws clamp to one frame; the final segment truncates to fit.
        let mut len = draw(rng).max(1);
        if acc + len > n {
            len = n - acc;
        }
        lengths.push(len);
        acc += len;
    }
    Ok(Segmentation::from_lengths(video.video_id.clone(), &lengths)?)
}

/// Segment lengths drawn i.i.d. from Poisson(λ).
pub fn segment_one_peak<R: Rng + ?Sized>(
    video: &VideoRecord,
    lambda: f64,
    rng: &mut R,
) -> Result<Segmentation, SegmentError> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(SegmentError::BadRate(lambda));
    }
    segment_poisson_lengths(video, rng, |r| sample_poisson(lambda, r))
}

/// Segment lengths drawn from a two-component Poisson mixture: with
/// probability `p_short` from Poisson(λ_short), otherwise Poisson(λ_long).
pub fn segment_two_peak<R: Rng + ?Sized>(
    video: &VideoRecord,
    lambda_short: f64,
    lambda_long: f64,
    p_short: f64,
    rng: &mut R,
) -> Result<Segmentation, SegmentError> {
    for rate in [lambda_short, lambda_long] {
        if !(rate.is_finite() && rate > 0.0) {
            return Err(SegmentError::BadRate(rate));
        }
    }
    if !(0.0..=1.0).contains(&p_short) {
        return Err(SegmentError::BadMixtureProbability(p_short));
    }
    segment_poisson_lengths(video, rng, |r| {
        let lambda = if r.random::<f64>() < p_short {
            lambda_short
        } else {
            lambda_long
        };
        sample_poisson(lambda, r)
    })
}

/// Uniformly permutes the segment-length ordering; the length multiset is
/// preserved exactly.
pub fn randomize_kts<R: Rng + ?Sized>(
    seg: &Segmentation,
    rng: &mut R,
) -> Result<Segmentation, SegmentError> {
    let mut lengths = seg.lengths();
    lengths.shuffle(rng);
    Ok(Segmentation::from_lengths(seg.video_id.clone(), &lengths)?)
}

/// Runs the segmenter described by `spec` on one video.
pub fn segment_video<R: Rng + ?Sized>(
    spec: &SegmenterSpec,
    video: &VideoRecord,
    features: Option<&[Vec<f64>]>,
    rng: &mut R,
) -> Result<Segmentation, SegmentError> {
    spec.validate()?;
    match *spec {
        SegmenterSpec::Uniform { len_frames } => segment_uniform(video, len_frames),
        SegmenterSpec::OnePeak { lambda } => segment_one_peak(video, lambda, rng),
        SegmenterSpec::TwoPeak {
            lambda_short,
            lambda_long,
            p_short,
        } => segment_two_peak(video, lambda_short, lambda_long, p_short, rng),
        SegmenterSpec::Kts {
            penalty_c,
            max_segments,
            min_seg_len,
        } => {
            let features = features
                .ok_or_else(|| SegmentError::MissingFeatures(spec.label().to_string()))?;
            segment_kts(
                video,
                features,
                penalty_c,
                resolve_max_segments(max_segments, video.n_frames),
                min_seg_len,
            )
        }
        SegmenterSpec::RandomizedKts {
            penalty_c,
            max_segments,
            min_seg_len,
        } => {
            let features = features
                .ok_or_else(|| SegmentError::MissingFeatures(spec.label().to_string()))?;
            let base = segment_kts(
                video,
                features,
                penalty_c,
                resolve_max_segments(max_segments, video.n_frames),
                min_seg_len,
            )?;
            randomize_kts(&base, rng)
        }
    }
}

/// Default candidate-count cap when the spec leaves it open: one segment
/// per 30 frames, at least one.
pub fn resolve_max_segments(max_segments: Option<usize>, n_frames: usize) -> usize {
    max_segments.unwrap_or_else(|| (n_frames / 30).max(1))
}
