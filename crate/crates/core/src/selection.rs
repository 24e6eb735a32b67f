//! Segment-level score pooling and budgeted segment selection.
//!
//! Selection is the exact 0/1 knapsack over integer frame capacity:
//! maximize the sum of pooled segment scores subject to the total selected
//! length staying within the budget. Ties between optima are broken
//! deterministically toward the lexicographically smallest selected-index
//! set, and segments with pooled score <= 0 are never selected.

use crate::datamodel::{mask_from_segments, FrameScores, Segmentation, SummaryMask};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SelectError {
    #[error("frame scores for {video_id} have length {scores_len}, segmentation covers {seg_len}")]
    LengthMismatch {
        video_id: String,
        scores_len: usize,
        seg_len: usize,
    },
    #[error("segment scores: {got} values for {expected} segments")]
    ValueCount { expected: usize, got: usize },
    #[error("segment score {index} is not finite")]
    NonFiniteValue { index: usize },
    #[error("video id mismatch: scores are for {scores}, segmentation for {seg}")]
    VideoIdMismatch { scores: String, seg: String },
    #[error("mask length {mask_len} does not match segmentation frame count {seg_len}")]
    MaskLength { mask_len: usize, seg_len: usize },
    #[error("mask splits segment {segment}: selection must keep whole segments")]
    MaskSplitsSegment { segment: usize },
    #[error("brute-force oracle limited to 25 segments, got {got}")]
    TooManySegments { got: usize },
}

/// How frame scores are pooled to one value per segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pooling {
    Mean,
    Sum,
}

impl std::fmt::Display for Pooling {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Pooling::Mean => write!(f, "mean"),
            Pooling::Sum => write!(f, "sum"),
        }
    }
}

/// One pooled score per segment of a segmentation.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentScores {
    pub video_id: String,
    pub seg: Segmentation,
    pub values: Vec<f64>,
    pub pooling: Pooling,
}

impl SegmentScores {
    pub fn new(seg: Segmentation, values: Vec<f64>, pooling: Pooling) -> Result<Self, SelectError> {
        if values.len() != seg.n_segments() {
            return Err(SelectError::ValueCount {
                expected: seg.n_segments(),
                got: values.len(),
            });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(SelectError::NonFiniteValue { index });
        }
        Ok(Self {
            video_id: seg.video_id.clone(),
            seg,
            values,
            pooling,
        })
    }

    pub fn n_segments(&self) -> usize {
        self.values.len()
    }
}

/// Summary-length budget, either a fraction of the video or absolute frames.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Budget {
    /// Fraction of `n_frames` in (0, 1]; resolves to `floor(fraction * n_frames)`.
    Fraction(f64),
    Frames(usize),
}

impl Budget {
    pub fn resolve(&self, n_frames: usize) -> usize {
        match *self {
            Budget::Fraction(f) => ((f * n_frames as f64).floor() as usize).min(n_frames),
            Budget::Frames(frames) => frames.min(n_frames),
        }
    }
}

/// Pools frame scores to segment level by mean or sum.
pub fn pool_scores(
    frame_scores: &FrameScores,
    seg: &Segmentation,
    pooling: Pooling,
) -> Result<SegmentScores, SelectError> {
    if frame_scores.video_id != seg.video_id {
        return Err(SelectError::VideoIdMismatch {
            scores: frame_scores.video_id.clone(),
            seg: seg.video_id.clone(),
        });
    }
    if frame_scores.len() != seg.n_frames() {
        return Err(SelectError::LengthMismatch {
            video_id: seg.video_id.clone(),
            scores_len: frame_scores.len(),
            seg_len: seg.n_frames(),
        });
    }
    let values = seg
        .iter_segments()
        .map(|range| {
            let len = range.len();
            let sum: f64 = frame_scores.values[range].iter().sum();
            match pooling {
                Pooling::Sum => sum,
                Pooling::Mean => sum / len as f64,
            }
        })
        .collect();
    SegmentScores::new(seg.clone(), values, pooling)
}

/// A resolved selection: which segments, the objective achieved, the mask.
#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub selected_segments: Vec<usize>,
    pub objective: f64,
    pub mask: SummaryMask,
}

// Canonical subset value: fold segment values from the highest selected
// index down, starting at 0.0. The DP and the brute-force oracle both sum
// in exactly this order so that score comparisons (including ties) are
// bitwise identical.
fn subset_value(values: &[f64], selected: &[usize]) -> f64 {
    let mut acc = 0.0;
    for &i in selected.iter().rev() {
        acc = values[i] + acc;
    }
    acc
}

/// Exact knapsack selection of segments under a frame budget.
///
/// Dynamic program over `(segment index, remaining capacity)`; O(S * budget)
/// time and memory. Segments with value <= 0 are excluded outright. Among
/// equal-valued optima, reconstruction walks segments left to right and
/// keeps the earliest index whenever including it still attains the
/// optimum, which yields the lexicographically smallest index set.
pub fn knapsack_select(seg_scores: &SegmentScores, budget_frames: usize) -> SummaryMask {
    knapsack_select_detailed(seg_scores, budget_frames).mask
}

/// As [`knapsack_select`] but also reports the selected indices and objective.
pub fn knapsack_select_detailed(seg_scores: &SegmentScores, budget_frames: usize) -> Selection {
    let lengths = seg_scores.seg.lengths();
    let values = &seg_scores.values;
    let n = values.len();
    let cap = budget_frames;

    // best[i * (cap+1) + w]: max attainable value from segments i.. with
    // remaining capacity w, summed back-to-front.
    let width = cap + 1;
    let mut best = vec![0.0f64; (n + 1) * width];
    for i in (0..n).rev() {
        let (head, tail) = best.split_at_mut((i + 1) * width);
        let row = &mut head[i * width..];
        let next = &tail[..width];
        let len = lengths[i];
        let value = values[i];
        for w in 0..width {
            let mut v = next[w];
            if value > 0.0 && len <= w {
                let with = value + next[w - len];
                if with > v {
                    v = with;
                }
            }
            row[w] = v;
        }
    }

    let mut selected = Vec::new();
    let mut w = cap;
    for i in 0..n {
        let len = lengths[i];
        let value = values[i];
        if value > 0.0 && len <= w && value + best[(i + 1) * width + w - len] >= best[(i + 1) * width + w]
        {
            selected.push(i);
            w -= len;
        }
    }

    let objective = subset_value(values, &selected);
    let mask = mask_from_segments(&seg_scores.seg, &selected)
        .expect("selected indices are in range by construction");
    Selection {
        selected_segments: selected,
        objective,
        mask,
    }
}

/// Exhaustive-subset oracle with the same objective and tie-breaking as
/// [`knapsack_select`]. Guarded at 25 segments.
pub fn brute_force_select(
    seg_scores: &SegmentScores,
    budget_frames: usize,
) -> Result<SummaryMask, SelectError> {
    Ok(brute_force_select_detailed(seg_scores, budget_frames)?.mask)
}

pub fn brute_force_select_detailed(
    seg_scores: &SegmentScores,
    budget_frames: usize,
) -> Result<Selection, SelectError> {
    let n = seg_scores.n_segments();
    if n > 25 {
        return Err(SelectError::TooManySegments { got: n });
    }
    let lengths = seg_scores.seg.lengths();
    let values = &seg_scores.values;

    // Only positive-valued segments can appear in a selection.
    let candidates: Vec<usize> = (0..n).filter(|&i| values[i] > 0.0).collect();
    let m = candidates.len();

    let mut best_value = 0.0f64;
    let mut best_set: Vec<usize> = Vec::new();
    for bits in 0u32..(1u32 << m) {
        let mut total_len = 0usize;
        let mut subset = Vec::new();
        for (pos, &idx) in candidates.iter().enumerate() {
            if bits & (1 << pos) != 0 {
                total_len += lengths[idx];
                subset.push(idx);
            }
        }
        if total_len > budget_frames {
            continue;
        }
        let value = subset_value(values, &subset);
        if value > best_value || (value == best_value && prefers(&subset, &best_set, n)) {
            best_value = value;
            best_set = subset;
        }
    }

    let mask = mask_from_segments(&seg_scores.seg, &best_set)
        .expect("oracle indices are in range by construction");
    Ok(Selection {
        selected_segments: best_set,
        objective: best_value,
        mask,
    })
}

// Tie order between equal-valued subsets: at the first index where
// membership differs, prefer the subset containing it. For optima this is
// the lexicographically-smallest-index-set rule.
fn prefers(candidate: &[usize], incumbent: &[usize], n: usize) -> bool {
    let mut cand = vec![false; n];
    let mut inc = vec![false; n];
    for &i in candidate {
        cand[i] = true;
    }
    for &i in incumbent {
        inc[i] = true;
    }
    for i in 0..n {
        if cand[i] != inc[i] {
            return cand[i];
        }
    }
    false
}

/// Segment-length distributions for the selected vs. unselected groups.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LengthStats {
    pub selected_lengths: Vec<usize>,
    pub unselected_lengths: Vec<usize>,
    pub median_selected: Option<f64>,
    pub median_unselected: Option<f64>,
    /// Fraction of selected frames lying in segments strictly shorter than
    /// the global median segment length. 0 when nothing is selected.
    pub share_of_short: f64,
}

fn median(sorted: &[usize]) -> Option<f64> {
    if sorted.is_empty() {
        return None;
    }
    let n = sorted.len();
    Some(if n % 2 == 1 {
        sorted[n / 2] as f64
    } else {
        (sorted[n / 2 - 1] as f64 + sorted[n / 2] as f64) / 2.0
    })
}

/// Splits segment lengths by selection status and reports group medians and
/// the short-segment share of the summary.
pub fn selected_length_stats(
    seg: &Segmentation,
    mask: &SummaryMask,
) -> Result<LengthStats, SelectError> {
    if mask.len() != seg.n_frames() {
        return Err(SelectError::MaskLength {
            mask_len: mask.len(),
            seg_len: seg.n_frames(),
        });
    }
    let mut selected_lengths = Vec::new();
    let mut unselected_lengths = Vec::new();
    for (k, range) in seg.iter_segments().enumerate() {
        let len = range.len();
        let ones = mask.mask[range].iter().map(|&v| v as usize).sum::<usize>();
        if ones == len {
            selected_lengths.push(len);
        } else if ones == 0 {
            unselected_lengths.push(len);
        } else {
            return Err(SelectError::MaskSplitsSegment { segment: k });
        }
    }

    let mut all: Vec<usize> = seg.lengths();
    all.sort_unstable();
    let global_median = median(&all).expect("segmentation has at least one segment");

    let selected_frames: usize = selected_lengths.iter().sum();
    let short_frames: usize = selected_lengths
        .iter()
        .filter(|&&len| (len as f64) < global_median)
        .sum();
    let share_of_short = if selected_frames == 0 {
        0.0
    } else {
        short_frames as f64 / selected_frames as f64
    };

    selected_lengths.sort_unstable();
    unselected_lengths.sort_unstable();
    let median_selected = median(&selected_lengths);
    let median_unselected = median(&unselected_lengths);
    Ok(LengthStats {
        selected_lengths,
        unselected_lengths,
        median_selected,
        median_unselected,
        share_of_short,
    })
}
