//! F1 evaluation protocol, leave-one-out baselines, and rank correlation.
//!
//! F1 compares binary frame masks: precision is the selected-frame overlap
//! over the candidate size, recall over the reference size, F1 their
//! harmonic mean, with the empty-mask conventions fixed (empty candidate
//! gives precision 0, empty reference gives recall 0, and F1 is 0 whenever
//! precision + recall is 0). Per-reference F1 values aggregate by mean and
//! by maximum.
//!
//! Rank correlation uses the tie-corrected Kendall τ-b (merge-sort
//! inversion counting, O(n log n)) and Spearman ρ (Pearson correlation of
//! tie-averaged ranks). Degenerate constant inputs return 0 rather than an
//! error so batch evaluations never abort mid-run.

use crate::datamodel::{AnnotationSet, FrameScores, Segmentation, SummaryMask};
use crate::selection::{knapsack_select, pool_scores, Pooling, SelectError};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("mask length mismatch: candidate {gen} vs reference {reference}")]
    MaskLength { gen: usize, reference: usize },
    #[error("need at least one reference summary")]
    NoReferences,
    #[error("leave-one-out needs at least 2 summaries, got {got}")]
    TooFewSummaries { got: usize },
    #[error("rank correlation needs equal lengths, got {x} and {y}")]
    SequenceLength { x: usize, y: usize },
    #[error("rank correlation needs at least 2 elements, got {got}")]
    TooShort { got: usize },
    #[error(transparent)]
    Select(#[from] SelectError),
}

/// Frame-level precision/recall/F1 for one candidate-reference pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct F1Result {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Mean Kendall τ-b and Spearman ρ against a set of reference rankings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankCorrelation {
    pub tau: f64,
    pub rho: f64,
}

/// Per-reference F1 list with its mean and maximum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoEvaluation {
    pub per_reference: Vec<F1Result>,
    pub avg_f1: f64,
    pub max_f1: f64,
}

/// Leave-one-out evaluations, one per held-out summary, plus their means.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeaveOneOutF1 {
    pub per_annotator: Vec<VideoEvaluation>,
    pub mean_avg_f1: f64,
    pub mean_max_f1: f64,
}

/// Frame-level F1 between a candidate and one reference mask.
pub fn f1_score(gen: &SummaryMask, reference: &SummaryMask) -> Result<F1Result, MetricsError> {
    if gen.len() != reference.len() {
        return Err(MetricsError::MaskLength {
            gen: gen.len(),
            reference: reference.len(),
        });
    }
    let mut overlap = 0usize;
    let mut gen_total = 0usize;
    let mut ref_total = 0usize;
    for (&g, &r) in gen.mask.iter().zip(&reference.mask) {
        overlap += (g & r) as usize;
        gen_total += g as usize;
        ref_total += r as usize;
    }
    let precision = if gen_total == 0 {
        0.0
    } else {
        overlap as f64 / gen_total as f64
    };
    let recall = if ref_total == 0 {
        0.0
    } else {
        overlap as f64 / ref_total as f64
    };
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Ok(F1Result {
        precision,
        recall,
        f1,
    })
}

/// Evaluates one candidate against every reference, aggregating by mean and max.
pub fn evaluate_against_references(
    gen: &SummaryMask,
    refs: &[SummaryMask],
) -> Result<VideoEvaluation, MetricsError> {
    if refs.is_empty() {
        return Err(MetricsError::NoReferences);
    }
    let per_reference: Vec<F1Result> = refs
        .iter()
        .map(|r| f1_score(gen, r))
        .collect::<Result<_, _>>()?;
    let avg_f1 = per_reference.iter().map(|r| r.f1).sum::<f64>() / per_reference.len() as f64;
    let max_f1 = per_reference.iter().map(|r| r.f1).fold(f64::MIN, f64::max);
    Ok(VideoEvaluation {
        per_reference,
        avg_f1,
        max_f1,
    })
}

/// Generates one reference summary per annotator from shot-importance
/// annotations: mean-pool the annotator's frame scores over the given
/// segmentation, then select segments by knapsack at the budget.
pub fn tvsum_reference_summaries(
    ann: &AnnotationSet,
    seg: &Segmentation,
    budget_frames: usize,
) -> Result<Vec<SummaryMask>, MetricsError> {
    ann.annotators
        .iter()
        .map(|scores| {
            let pooled = pool_scores(scores, seg, Pooling::Mean)?;
            Ok(knapsack_select(&pooled, budget_frames))
        })
        .collect()
}

/// Evaluates each summary against all the others.
pub fn leave_one_out_f1(summaries: &[SummaryMask]) -> Result<LeaveOneOutF1, MetricsError> {
    if summaries.len() < 2 {
        return Err(MetricsError::TooFewSummaries {
            got: summaries.len(),
        });
    }
    let mut per_annotator = Vec::with_capacity(summaries.len());
    for (k, candidate) in summaries.iter().enumerate() {
        let rest: Vec<SummaryMask> = summaries
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != k)
            .map(|(_, m)| m.clone())
            .collect();
        per_annotator.push(evaluate_against_references(candidate, &rest)?);
    }
    let n = per_annotator.len() as f64;
    let mean_avg_f1 = per_annotator.iter().map(|e| e.avg_f1).sum::<f64>() / n;
    let mean_max_f1 = per_annotator.iter().map(|e| e.max_f1).sum::<f64>() / n;
    Ok(LeaveOneOutF1 {
        per_annotator,
        mean_avg_f1,
        mean_max_f1,
    })
}

fn check_pair(x: &[f64], y: &[f64]) -> Result<(), MetricsError> {
    if x.len() != y.len() {
        return Err(MetricsError::SequenceLength { x: x.len(), y: y.len() });
    }
    if x.len() < 2 {
        return Err(MetricsError::TooShort { got: x.len() });
    }
    Ok(())
}

// Merge step of an inversion-counting merge sort: counts pairs (i, j) with
// i < j and sequence[i] > sequence[j]. Ties are not inversions.
fn merge_count(buf: &mut [f64], scratch: &mut [f64]) -> u64 {
    let n = buf.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let (left, right) = buf.split_at_mut(mid);
    let mut inversions = merge_count(left, &mut scratch[..mid]) + merge_count(right, &mut scratch[mid..]);
    let mut i = 0;
    let mut j = 0;
    for slot in scratch[..n].iter_mut() {
        if i < left.len() && (j >= right.len() || left[i] <= right[j]) {
            *slot = left[i];
            i += 1;
        } else {
            inversions += (left.len() - i) as u64;
            *slot = right[j];
            j += 1;
        }
    }
    buf.copy_from_slice(&scratch[..n]);
    inversions
}

fn tie_pairs<F: Fn(usize, usize) -> bool>(n: usize, same: F) -> u64 {
    let mut total = 0u64;
    let mut start = 0usize;
    for i in 1..=n {
        if i == n || !same(i - 1, i) {
            let run = (i - start) as u64;
            total += run * (run - 1) / 2;
            start = i;
        }
    }
    total
}

/// Tie-corrected Kendall rank correlation (τ-b).
///
/// τ-b = (C − D) / sqrt((n₀ − T_x)(n₀ − T_y)) with C/D the concordant and
/// discordant pair counts, n₀ = n(n−1)/2, and T_x/T_y the tied-pair counts
/// in each argument. Returns 0 when either denominator factor is 0 (an
/// all-ties degenerate input). O(n log n) via merge-sort inversion counting.
pub fn kendall_tau_b(x: &[f64], y: &[f64]) -> Result<f64, MetricsError> {
    check_pair(x, y)?;
    let n = x.len();

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        x[a].partial_cmp(&x[b])
            .unwrap()
            .then_with(|| y[a].partial_cmp(&y[b]).unwrap())
    });
    let xs: Vec<f64> = order.iter().map(|&i| x[i]).collect();
    let mut ys: Vec<f64> = order.iter().map(|&i| y[i]).collect();

    let n0 = (n as u64) * (n as u64 - 1) / 2;
    let tie_x = tie_pairs(n, |a, b| xs[a] == xs[b]);
    let tie_y_sorted = {
        let mut sorted_y: Vec<f64> = ys.clone();
        sorted_y.sort_by(|a, b| a.partial_cmp(b).unwrap());
        tie_pairs(n, |a, b| sorted_y[a] == sorted_y[b])
    };
    let tie_xy = tie_pairs(n, |a, b| xs[a] == xs[b] && ys[a] == ys[b]);

    let mut scratch = vec![0.0; n];
    let discordant = merge_count(&mut ys, &mut scratch);

    let denom_x = n0 - tie_x;
    let denom_y = n0 - tie_y_sorted;
    if denom_x == 0 || denom_y == 0 {
        return Ok(0.0);
    }
    // C - D = n0 - T_x - T_y + T_xy - 2D, counting x-tied pairs once.
    let con_minus_dis =
        n0 as f64 - tie_x as f64 - tie_y_sorted as f64 + tie_xy as f64 - 2.0 * discordant as f64;
    let tau = con_minus_dis / ((denom_x as f64) * (denom_y as f64)).sqrt();
    Ok(tau.clamp(-1.0, 1.0))
}

/// Tie-averaged ranks, 1-based: equal values share the mean of the
/// positions they occupy.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
    let mut ranks = vec![0.0; n];
    let mut start = 0usize;
    for i in 1..=n {
        if i == n || values[order[i - 1]] != values[order[i]] {
            // Positions start..i share the average rank.
            let avg = (start + 1 + i) as f64 / 2.0;
            for &idx in &order[start..i] {
                ranks[idx] = avg;
            }
            start = i;
        }
    }
    ranks
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (&a, &b) in x.iter().zip(y) {
        let dx = a - mx;
        let dy = b - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return 0.0;
    }
    (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0)
}

/// Spearman rank correlation: Pearson correlation of tie-averaged ranks,
/// 0 on zero-variance degenerate input.
pub fn spearman_rho(x: &[f64], y: &[f64]) -> Result<f64, MetricsError> {
    check_pair(x, y)?;
    let rx = average_ranks(x);
    let ry = average_ranks(y);
    Ok(pearson(&rx, &ry))
}

/// True when all values are equal; such inputs make rank correlations
/// degenerate (reported as 0).
pub fn is_constant(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[0] == w[1])
}

/// Mean τ-b and ρ of a prediction against each annotator's scores.
pub fn rank_eval_vs_annotators(
    pred: &FrameScores,
    ann: &AnnotationSet,
) -> Result<RankCorrelation, MetricsError> {
    let mut tau_sum = 0.0;
    let mut rho_sum = 0.0;
    for annotator in &ann.annotators {
        tau_sum += kendall_tau_b(&pred.values, &annotator.values)?;
        rho_sum += spearman_rho(&pred.values, &annotator.values)?;
    }
    let a = ann.n_annotators() as f64;
    Ok(RankCorrelation {
        tau: tau_sum / a,
        rho: rho_sum / a,
    })
}
