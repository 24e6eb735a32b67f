//! Core domain types shared by every pipeline stage.
//!
//! Frames are indexed from zero and segments are half-open intervals
//! `[b_k, b_{k+1})`. Scores live at frame level everywhere; shot-level
//! inputs are expanded once at ingestion. All types are immutable value
//! objects after construction.

use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum DataError {
    #[error("video {video_id}: n_frames must be >= 1")]
    EmptyVideo { video_id: String },
    #[error("video {video_id}: fps must be positive and finite, got {fps}")]
    BadFps { video_id: String, fps: f64 },
    #[error("video id must be non-empty")]
    EmptyVideoId,
    #[error("video {video_id}: score sequence has length {got}, expected {expected}")]
    ScoreLength {
        video_id: String,
        expected: usize,
        got: usize,
    },
    #[error("video {video_id}: score at frame {index} is not finite")]
    NonFiniteScore { video_id: String, index: usize },
    #[error("video {video_id}: invalid segment boundaries: {reason}")]
    BadBoundaries { video_id: String, reason: String },
    #[error("video {video_id}: mask value at frame {index} is not 0/1")]
    NonBinaryMask { video_id: String, index: usize },
    #[error("video {video_id}: segment index {index} out of range (S={n_segments})")]
    SegmentIndexOutOfRange {
        video_id: String,
        index: usize,
        n_segments: usize,
    },
    #[error(
        "video {video_id}: {n_shots} shots of {shot_len_frames} frames cannot cover \
         {n_frames} frames within one shot of slack"
    )]
    ShotCountMismatch {
        video_id: String,
        n_shots: usize,
        shot_len_frames: usize,
        n_frames: usize,
    },
    #[error("shot scores must be non-empty and shot length positive")]
    BadShotInput,
    #[error("annotation set for {video_id} must contain at least one annotator")]
    EmptyAnnotationSet { video_id: String },
    #[error("annotation set for {video_id}: annotator {index} has video_id {got}")]
    AnnotatorVideoMismatch {
        video_id: String,
        index: usize,
        got: String,
    },
    #[error("annotation set for {video_id}: annotator {index} has length {got}, expected {expected}")]
    AnnotatorLengthMismatch {
        video_id: String,
        index: usize,
        expected: usize,
        got: usize,
    },
}

/// Identity and frame geometry of one video.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoRecord {
    pub video_id: String,
    pub n_frames: usize,
    pub fps: f64,
}

impl VideoRecord {
    pub fn new(video_id: impl Into<String>, n_frames: usize, fps: f64) -> Result<Self, DataError> {
        let video_id = video_id.into();
        if video_id.is_empty() {
            return Err(DataError::EmptyVideoId);
        }
        if n_frames == 0 {
            return Err(DataError::EmptyVideo { video_id });
        }
        if !(fps.is_finite() && fps > 0.0) {
            return Err(DataError::BadFps { video_id, fps });
        }
        Ok(Self {
            video_id,
            n_frames,
            fps,
        })
    }
}

/// Real-valued per-frame importance sequence (predicted, random, or human).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameScores {
    pub video_id: String,
    pub values: Vec<f64>,
}

impl FrameScores {
    /// Builds a score sequence, rejecting NaN/infinite entries.
    pub fn new(video_id: impl Into<String>, values: Vec<f64>) -> Result<Self, DataError> {
        let video_id = video_id.into();
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(DataError::NonFiniteScore { video_id, index });
        }
        Ok(Self { video_id, values })
    }

    /// As [`FrameScores::new`] but also pins the length to a video's frame count.
    pub fn for_video(video: &VideoRecord, values: Vec<f64>) -> Result<Self, DataError> {
        if values.len() != video.n_frames {
            return Err(DataError::ScoreLength {
                video_id: video.video_id.clone(),
                expected: video.n_frames,
                got: values.len(),
            });
        }
        Self::new(video.video_id.clone(), values)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Ordered partition of `[0, n_frames)` into contiguous segments.
///
/// Boundaries are `b_0 = 0 < b_1 < … < b_S = n_frames`; segment `k` spans
/// `[b_k, b_{k+1})`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segmentation {
    pub video_id: String,
    pub boundaries: Vec<usize>,
}

impl Segmentation {
    /// Builds a segmentation, enforcing the boundary invariants.
    pub fn new(video_id: impl Into<String>, boundaries: Vec<usize>) -> Result<Self, DataError> {
        let video_id = video_id.into();
        let reason = if boundaries.len() < 2 {
            Some("need at least two boundaries".to_string())
        } else if boundaries[0] != 0 {
            Some(format!("first boundary is {}, expected 0", boundaries[0]))
        } else {
            boundaries
                .windows(2)
                .position(|w| w[0] >= w[1])
                .map(|k| format!("empty or reversed segment at boundary index {k}"))
        };
        match reason {
            Some(reason) => Err(DataError::BadBoundaries { video_id, reason }),
            None => Ok(Self {
                video_id,
                boundaries,
            }),
        }
    }

    /// Builds a segmentation without checking invariants. Intended for
    /// validation workflows that inspect raw boundary data via
    /// [`validate_segmentation`].
    pub fn new_unchecked(video_id: impl Into<String>, boundaries: Vec<usize>) -> Self {
        Self {
            video_id: video_id.into(),
            boundaries,
        }
    }

    /// Builds from consecutive segment lengths starting at frame 0.
    pub fn from_lengths(
        video_id: impl Into<String>,
        lengths: &[usize],
    ) -> Result<Self, DataError> {
        let mut boundaries = Vec::with_capacity(lengths.len() + 1);
        let mut acc = 0usize;
        boundaries.push(0);
        for &len in lengths {
            acc += len;
            boundaries.push(acc);
        }
        Self::new(video_id, boundaries)
    }

    pub fn n_segments(&self) -> usize {
        self.boundaries.len().saturating_sub(1)
    }

    /// Total frame count covered, i.e. the last boundary.
    pub fn n_frames(&self) -> usize {
        *self.boundaries.last().unwrap_or(&0)
    }

    pub fn segment_range(&self, k: usize) -> std::ops::Range<usize> {
        self.boundaries[k]..self.boundaries[k + 1]
    }

    pub fn segment_len(&self, k: usize) -> usize {
        self.boundaries[k + 1] - self.boundaries[k]
    }

    pub fn lengths(&self) -> Vec<usize> {
        self.boundaries.windows(2).map(|w| w[1] - w[0]).collect()
    }

    pub fn iter_segments(&self) -> impl Iterator<Item = std::ops::Range<usize>> + '_ {
        self.boundaries.windows(2).map(|w| w[0]..w[1])
    }
}

/// Binary per-frame selection labels for one summary.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SummaryMask {
    pub video_id: String,
    pub mask: Vec<u8>,
}

impl SummaryMask {
    /// Builds a mask, rejecting values other than 0/1.
    pub fn new(video_id: impl Into<String>, mask: Vec<u8>) -> Result<Self, DataError> {
        let video_id = video_id.into();
        if let Some(index) = mask.iter().position(|&v| v > 1) {
            return Err(DataError::NonBinaryMask { video_id, index });
        }
        Ok(Self { video_id, mask })
    }

    pub fn zeros(video_id: impl Into<String>, n_frames: usize) -> Self {
        Self {
            video_id: video_id.into(),
            mask: vec![0; n_frames],
        }
    }

    pub fn len(&self) -> usize {
        self.mask.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mask.is_empty()
    }

    /// Number of selected frames.
    pub fn selected_frames(&self) -> usize {
        self.mask.iter().map(|&v| v as usize).sum()
    }
}

/// Per-annotator frame scores for one video, in dataset order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationSet {
    pub video_id: String,
    pub annotators: Vec<FrameScores>,
}

impl AnnotationSet {
    pub fn new(
        video_id: impl Into<String>,
        annotators: Vec<FrameScores>,
    ) -> Result<Self, DataError> {
        let video_id = video_id.into();
        if annotators.is_empty() {
            return Err(DataError::EmptyAnnotationSet { video_id });
        }
        let expected = annotators[0].len();
        for (index, scores) in annotators.iter().enumerate() {
            if scores.video_id != video_id {
                return Err(DataError::AnnotatorVideoMismatch {
                    video_id,
                    index,
                    got: scores.video_id.clone(),
                });
            }
            if scores.len() != expected {
                return Err(DataError::AnnotatorLengthMismatch {
                    video_id,
                    index,
                    expected,
                    got: scores.len(),
                });
            }
        }
        Ok(Self {
            video_id,
            annotators,
        })
    }

    pub fn n_annotators(&self) -> usize {
        self.annotators.len()
    }

    pub fn n_frames(&self) -> usize {
        self.annotators[0].len()
    }
}

/// A single violated segmentation invariant. Violations are data, not
/// failures; an empty list means the segmentation is valid for the video.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum SegmentationViolation {
    /// Fewer than two boundaries, so no segment exists.
    NoSegments,
    /// First boundary is not frame 0.
    DoesNotStartAtZero { first: usize },
    /// Last boundary falls short of the video's frame count.
    DoesNotCoverTail { last: usize, n_frames: usize },
    /// Last boundary exceeds the video's frame count.
    OverrunsVideo { last: usize, n_frames: usize },
    /// A zero-length or reversed segment.
    EmptySegment { boundary_index: usize },
    /// Segmentation is labeled with a different video id.
    VideoIdMismatch { got: String, expected: String },
}

impl fmt::Display for SegmentationViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::NoSegments => write!(f, "no segments (need at least two boundaries)"),
            Self::DoesNotStartAtZero { first } => {
                write!(f, "first boundary is {first}, expected 0")
            }
            Self::DoesNotCoverTail { last, n_frames } => {
                write!(f, "does not cover tail: last boundary {last} < n_frames {n_frames}")
            }
            Self::OverrunsVideo { last, n_frames } => {
                write!(f, "overruns video: last boundary {last} > n_frames {n_frames}")
            }
            Self::EmptySegment { boundary_index } => {
                write!(f, "empty segment at boundary index {boundary_index}")
            }
            Self::VideoIdMismatch { got, expected } => {
                write!(f, "video id mismatch: segmentation is for {got}, video is {expected}")
            }
        }
    }
}

/// Checks every segmentation invariant against a video record and returns
/// the list of violations (empty when valid).
pub fn validate_segmentation(
    seg: &Segmentation,
    video: &VideoRecord,
) -> Vec<SegmentationViolation> {
    let mut violations = Vec::new();
    if seg.video_id != video.video_id {
        violations.push(SegmentationViolation::VideoIdMismatch {
            got: seg.video_id.clone(),
            expected: video.video_id.clone(),
        });
    }
    let b = &seg.boundaries;
    if b.len() < 2 {
        violations.push(SegmentationViolation::NoSegments);
        return violations;
    }
    if b[0] != 0 {
        violations.push(SegmentationViolation::DoesNotStartAtZero { first: b[0] });
    }
    for (k, w) in b.windows(2).enumerate() {
        if w[0] >= w[1] {
            violations.push(SegmentationViolation::EmptySegment { boundary_index: k });
        }
    }
    let last = *b.last().unwrap();
    if last < video.n_frames {
        violations.push(SegmentationViolation::DoesNotCoverTail {
            last,
            n_frames: video.n_frames,
        });
    } else if last > video.n_frames {
        violations.push(SegmentationViolation::OverrunsVideo {
            last,
            n_frames: video.n_frames,
        });
    }
    violations
}

/// Expands shot-level scores to frame level.
///
/// Each shot score repeats for `round(shot_len_sec * fps)` frames; the tail
/// is truncated, or extended by repeating the final value, so the output
/// length is exactly the video's frame count. A mismatch larger than one
/// full shot is rejected as inconsistent metadata.
pub fn expand_shot_scores(
    shot_scores: &[f64],
    shot_len_sec: f64,
    video: &VideoRecord,
) -> Result<FrameScores, DataError> {
    if shot_scores.is_empty() || !(shot_len_sec.is_finite() && shot_len_sec > 0.0) {
        return Err(DataError::BadShotInput);
    }
    let shot_len_frames = ((shot_len_sec * video.fps).round() as usize).max(1);
    let expected = shot_scores.len() * shot_len_frames;
    let slack = shot_len_frames;
    if video.n_frames + slack < expected || video.n_frames > expected + slack {
        return Err(DataError::ShotCountMismatch {
            video_id: video.video_id.clone(),
            n_shots: shot_scores.len(),
            shot_len_frames,
            n_frames: video.n_frames,
        });
    }
    let mut values = Vec::with_capacity(video.n_frames);
    'fill: for &score in shot_scores {
        for _ in 0..shot_len_frames {
            if values.len() == video.n_frames {
                break 'fill;
            }
            values.push(score);
        }
    }
    let last = *shot_scores.last().unwrap();
    while values.len() < video.n_frames {
        values.push(last);
    }
    FrameScores::for_video(video, values)
}

/// Builds the mask that is 1 exactly on the frames of the selected segments.
pub fn mask_from_segments(
    seg: &Segmentation,
    selected: &[usize],
) -> Result<SummaryMask, DataError> {
    let n_segments = seg.n_segments();
    let mut mask = vec![0u8; seg.n_frames()];
    for &k in selected {
        if k >= n_segments {
            return Err(DataError::SegmentIndexOutOfRange {
                video_id: seg.video_id.clone(),
                index: k,
                n_segments,
            });
        }
        for frame in seg.segment_range(k) {
            mask[frame] = 1;
        }
    }
    Ok(SummaryMask {
        video_id: seg.video_id.clone(),
        mask,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn video(n_frames: usize, fps: f64) -> VideoRecord {
        VideoRecord::new("v", n_frames, fps).unwrap()
    }

    #[test]
    fn validate_accepts_exact_cover() {
        let seg = Segmentation::new("v", vec![0, 30, 60]).unwrap();
        assert!(validate_segmentation(&seg, &video(60, 30.0)).is_empty());
    }

    #[test]
    fn validate_reports_tail_gap() {
        let seg = Segmentation::new_unchecked("v", vec![0, 30, 50]);
        let violations = validate_segmentation(&seg, &video(60, 30.0));
        assert_eq!(
            violations,
            vec![SegmentationViolation::DoesNotCoverTail { last: 50, n_frames: 60 }]
        );
    }

    #[test]
    fn validate_reports_empty_segment() {
        let seg = Segmentation::new_unchecked("v", vec![0, 30, 30, 60]);
        let violations = validate_segmentation(&seg, &video(60, 30.0));
        assert_eq!(
            violations,
            vec![SegmentationViolation::EmptySegment { boundary_index: 1 }]
        );
    }

    #[test]
    fn validate_reports_overrun_and_bad_start() {
        let seg = Segmentation::new_unchecked("v", vec![5, 70]);
        let violations = validate_segmentation(&seg, &video(60, 30.0));
        assert!(violations.contains(&SegmentationViolation::DoesNotStartAtZero { first: 5 }));
        assert!(violations.contains(&SegmentationViolation::OverrunsVideo { last: 70, n_frames: 60 }));
    }

    #[test]
    fn expand_exact_tiling() {
        let out = expand_shot_scores(&[1.0, 5.0], 2.0, &video(120, 30.0)).unwrap();
        assert_eq!(out.len(), 120);
        assert!(out.values[..60].iter().all(|&v| v == 1.0));
        assert!(out.values[60..].iter().all(|&v| v == 5.0));
    }

    #[test]
    fn expand_truncates_tail() {
        let out = expand_shot_scores(&[3.0], 2.0, &video(45, 30.0)).unwrap();
        assert_eq!(out.values, vec![3.0; 45]);
    }

    #[test]
    fn expand_extends_last_value() {
        let out = expand_shot_scores(&[1.0, 2.0], 2.0, &video(101, 25.0)).unwrap();
        assert_eq!(out.len(), 101);
        assert!(out.values[..50].iter().all(|&v| v == 1.0));
        assert!(out.values[50..].iter().all(|&v| v == 2.0));
        assert_eq!(out.values[50..].len(), 51);
    }

    #[test]
    fn expand_rejects_large_mismatch() {
        // 2 shots of 60 frames cover 120; a 250-frame video is out of reach.
        let err = expand_shot_scores(&[1.0, 2.0], 2.0, &video(250, 30.0)).unwrap_err();
        assert!(matches!(err, DataError::ShotCountMismatch { .. }));
        // Too many shots for a short video is equally inconsistent.
        let err = expand_shot_scores(&[1.0; 10], 2.0, &video(60, 30.0)).unwrap_err();
        assert!(matches!(err, DataError::ShotCountMismatch { .. }));
    }

    #[test]
    fn mask_from_selected_segments() {
        let seg = Segmentation::new("v", vec![0, 3, 6]).unwrap();
        let mask = mask_from_segments(&seg, &[1]).unwrap();
        assert_eq!(mask.mask, vec![0, 0, 0, 1, 1, 1]);
        let empty = mask_from_segments(&seg, &[]).unwrap();
        assert_eq!(empty.mask, vec![0; 6]);
        let full = mask_from_segments(&seg, &[0, 1]).unwrap();
        assert_eq!(full.mask, vec![1; 6]);
    }

    #[test]
    fn mask_rejects_out_of_range_index() {
        let seg = Segmentation::new("v", vec![0, 3, 6]).unwrap();
        let err = mask_from_segments(&seg, &[2]).unwrap_err();
        assert!(matches!(err, DataError::SegmentIndexOutOfRange { index: 2, .. }));
    }

    #[test]
    fn frame_scores_reject_non_finite() {
        let err = FrameScores::new("v", vec![0.0, f64::NAN]).unwrap_err();
        assert!(matches!(err, DataError::NonFiniteScore { index: 1, .. }));
    }

    #[test]
    fn segmentation_constructor_rejects_bad_boundaries() {
        assert!(Segmentation::new("v", vec![0]).is_err());
        assert!(Segmentation::new("v", vec![1, 5]).is_err());
        assert!(Segmentation::new("v", vec![0, 5, 5]).is_err());
    }

    #[test]
    fn annotation_set_checks_membership() {
        let a = FrameScores::new("v", vec![1.0, 2.0]).unwrap();
        let b = FrameScores::new("v", vec![2.0, 1.0]).unwrap();
        let set = AnnotationSet::new("v", vec![a.clone(), b]).unwrap();
        assert_eq!(set.n_annotators(), 2);
        assert_eq!(set.n_frames(), 2);

        let short = FrameScores::new("v", vec![1.0]).unwrap();
        assert!(AnnotationSet::new("v", vec![a.clone(), short]).is_err());
        let other = FrameScores::new("w", vec![1.0, 2.0]).unwrap();
        assert!(AnnotationSet::new("v", vec![a, other]).is_err());
        assert!(AnnotationSet::new("v", vec![]).is_err());
    }
}
