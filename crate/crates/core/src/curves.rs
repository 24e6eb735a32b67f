//! Accumulated-score correlation curves.
//!
//! Frames are sorted by the predicted importance score in descending order
//! and the averaged reference scores are accumulated along that ordering:
//! `a_i = Σ_{t<=i} s_t / Σ_j s_j`. A strongly concordant prediction front-
//! loads the reference mass, so its curve rises fast; the expectation under
//! random scoring is the diagonal, and sorting the reference itself
//! descending/ascending gives the upper/lower concordance bounds.

use crate::datamodel::{AnnotationSet, FrameScores};
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CurveError {
    #[error("reference scores sum to {sum}; normalization needs a positive total")]
    NonPositiveReferenceMass { sum: f64 },
    #[error("reference score at frame {index} is negative; curves need non-negative mass")]
    NegativeReference { index: usize },
    #[error("prediction has {pred} frames, reference {reference}")]
    LengthMismatch { pred: usize, reference: usize },
    #[error("leave-one-out curves need at least 2 annotators, got {got}")]
    TooFewAnnotators { got: usize },
    #[error("curve {label} has {got} points, expected {expected}")]
    PointCountMismatch {
        label: String,
        expected: usize,
        got: usize,
    },
    #[error("no curves to emit")]
    NoCurves,
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

/// One accumulated-score curve: monotone, ends at 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationCurve {
    pub video_id: String,
    pub label: String,
    pub points: Vec<f64>,
}

/// Upper and lower concordance bounds for a reference score vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveBounds {
    pub upper: CorrelationCurve,
    pub lower: CorrelationCurve,
}

/// Output format for curve emission.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CurveFormat {
    Csv,
    Svg,
}

fn check_reference(ref_mean: &FrameScores) -> Result<f64, CurveError> {
    if let Some(index) = ref_mean.values.iter().position(|&v| v < 0.0) {
        return Err(CurveError::NegativeReference { index });
    }
    let sum: f64 = ref_mean.values.iter().sum();
    if sum <= 0.0 {
        return Err(CurveError::NonPositiveReferenceMass { sum });
    }
    Ok(sum)
}

fn normalized_prefix(video_id: &str, label: &str, ordered: &[f64], total: f64) -> CorrelationCurve {
    let mut points = Vec::with_capacity(ordered.len());
    let mut acc = 0.0;
    for &v in ordered {
        acc += v;
        points.push(acc / total);
    }
    CorrelationCurve {
        video_id: video_id.to_string(),
        label: label.to_string(),
        points,
    }
}

/// Per-frame arithmetic mean across annotators.
pub fn mean_reference_scores(ann: &AnnotationSet) -> FrameScores {
    let n = ann.n_frames();
    let a = ann.n_annotators() as f64;
    let mut values = vec![0.0; n];
    for annotator in &ann.annotators {
        for (acc, &v) in values.iter_mut().zip(&annotator.values) {
            *acc += v;
        }
    }
    for v in &mut values {
        *v /= a;
    }
    FrameScores {
        video_id: ann.video_id.clone(),
        values,
    }
}

/// Mean of all annotators except `leave_out`.
pub fn mean_reference_scores_excluding(ann: &AnnotationSet, leave_out: usize) -> FrameScores {
    let n = ann.n_frames();
    let mut values = vec![0.0; n];
    let mut count = 0.0;
    for (k, annotator) in ann.annotators.iter().enumerate() {
        if k == leave_out {
            continue;
        }
        count += 1.0;
        for (acc, &v) in values.iter_mut().zip(&annotator.values) {
            *acc += v;
        }
    }
    for v in &mut values {
        *v /= count;
    }
    FrameScores {
        video_id: ann.video_id.clone(),
        values,
    }
}

/// Accumulates the reference mass along the prediction's descending-score
/// frame order (ties broken by ascending frame index).
pub fn accumulate_curve(
    pred: &FrameScores,
    ref_mean: &FrameScores,
    label: &str,
) -> Result<CorrelationCurve, CurveError> {
    if pred.len() != ref_mean.len() {
        return Err(CurveError::LengthMismatch {
            pred: pred.len(),
            reference: ref_mean.len(),
        });
    }
    let total = check_reference(ref_mean)?;
    let mut order: Vec<usize> = (0..pred.len()).collect();
    order.sort_by(|&a, &b| {
        pred.values[b]
            .partial_cmp(&pred.values[a])
            .unwrap()
            .then_with(|| a.cmp(&b))
    });
    let ordered: Vec<f64> = order.iter().map(|&i| ref_mean.values[i]).collect();
    Ok(normalized_prefix(&pred.video_id, label, &ordered, total))
}

/// Concordance bounds: the reference accumulated over its own descending
/// (upper) and ascending (lower) order.
pub fn curve_bounds(ref_mean: &FrameScores) -> Result<CurveBounds, CurveError> {
    let total = check_reference(ref_mean)?;
    let mut sorted = ref_mean.values.clone();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let upper = normalized_prefix(&ref_mean.video_id, "upper", &sorted, total);
    sorted.reverse();
    let lower = normalized_prefix(&ref_mean.video_id, "lower", &sorted, total);
    Ok(CurveBounds { upper, lower })
}

/// Expected curve under uniformly random scoring: the diagonal `a_i = i/n`.
pub fn random_baseline(n: usize) -> CorrelationCurve {
    let points = (1..=n).map(|i| i as f64 / n as f64).collect();
    CorrelationCurve {
        video_id: String::new(),
        label: "baseline".to_string(),
        points,
    }
}

/// Leave-one-out curves: each annotator's scores accumulated against the
/// mean of the remaining annotators.
pub fn annotator_curves(ann: &AnnotationSet) -> Result<Vec<CorrelationCurve>, CurveError> {
    if ann.n_annotators() < 2 {
        return Err(CurveError::TooFewAnnotators {
            got: ann.n_annotators(),
        });
    }
    (0..ann.n_annotators())
        .map(|k| {
            let rest_mean = mean_reference_scores_excluding(ann, k);
            accumulate_curve(&ann.annotators[k], &rest_mean, &format!("annotator-{k}"))
        })
        .collect()
}

const SVG_WIDTH: f64 = 800.0;
const SVG_HEIGHT: f64 = 500.0;
const SVG_MARGIN: f64 = 50.0;
const SVG_MAX_POINTS: usize = 2000;

const PALETTE: [&str; 8] = [
    "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf", "#bcbd22",
];

/// Writes curves plus bounds and baseline to one file.
///
/// CSV holds full resolution with header `i,<label..>,upper,lower,baseline`.
/// SVG is a fixed 800x500 chart with the bound region shaded, curves
/// down-sampled to at most 2000 points. Output bytes are a pure function of
/// the inputs.
pub fn emit_curves(
    curves: &[CorrelationCurve],
    bounds: &CurveBounds,
    baseline: &CorrelationCurve,
    path: &Path,
    format: CurveFormat,
) -> Result<(), CurveError> {
    if curves.is_empty() {
        return Err(CurveError::NoCurves);
    }
    let n = curves[0].points.len();
    for curve in curves
        .iter()
        .chain([&bounds.upper, &bounds.lower, baseline])
    {
        if curve.points.len() != n {
            return Err(CurveError::PointCountMismatch {
                label: curve.label.clone(),
                expected: n,
                got: curve.points.len(),
            });
        }
    }
    let body = match format {
        CurveFormat::Csv => render_csv(curves, bounds, baseline, n),
        CurveFormat::Svg => render_svg(curves, bounds, baseline, n),
    };
    let mut file = std::fs::File::create(path)?;
    file.write_all(body.as_bytes())?;
    Ok(())
}

fn render_csv(
    curves: &[CorrelationCurve],
    bounds: &CurveBounds,
    baseline: &CorrelationCurve,
    n: usize,
) -> String {
    let mut out = String::from("i");
    for curve in curves {
        out.push(',');
        out.push_str(&curve.label);
    }
    out.push_str(",upper,lower,baseline\n");
    for i in 0..n {
        out.push_str(&format!("{}", i + 1));
        for curve in curves {
            out.push_str(&format!(",{:.9}", curve.points[i]));
        }
        out.push_str(&format!(
            ",{:.9},{:.9},{:.9}\n",
            bounds.upper.points[i], bounds.lower.points[i], baseline.points[i]
        ));
    }
    out
}

// Index stride keeping at most SVG_MAX_POINTS samples, always including the
// final point.
fn downsample_indices(n: usize) -> Vec<usize> {
    let stride = n.div_ceil(SVG_MAX_POINTS).max(1);
    let mut idx: Vec<usize> = (0..n).step_by(stride).collect();
    if *idx.last().unwrap() != n - 1 {
        idx.push(n - 1);
    }
    idx
}

fn svg_x(i: usize, n: usize) -> f64 {
    SVG_MARGIN + (i as f64 + 1.0) / n as f64 * (SVG_WIDTH - 2.0 * SVG_MARGIN)
}

fn svg_y(a: f64) -> f64 {
    SVG_HEIGHT - SVG_MARGIN - a * (SVG_HEIGHT - 2.0 * SVG_MARGIN)
}

fn polyline_points(points: &[f64], idx: &[usize], n: usize) -> String {
    idx.iter()
        .map(|&i| format!("{:.2},{:.2}", svg_x(i, n), svg_y(points[i])))
        .collect::<Vec<_>>()
        .join(" ")
}

fn render_svg(
    curves: &[CorrelationCurve],
    bounds: &CurveBounds,
    baseline: &CorrelationCurve,
    n: usize,
) -> String {
    let idx = downsample_indices(n);
    let mut out = String::new();
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{SVG_WIDTH}\" height=\"{SVG_HEIGHT}\" viewBox=\"0 0 {SVG_WIDTH} {SVG_HEIGHT}\">\n"
    ));
    out.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");

    // Shaded region between the bounds: upper path forward, lower reversed.
    let mut region = String::from("M");
    for &i in &idx {
        region.push_str(&format!(" {:.2},{:.2}", svg_x(i, n), svg_y(bounds.upper.points[i])));
    }
    for &i in idx.iter().rev() {
        region.push_str(&format!(" {:.2},{:.2}", svg_x(i, n), svg_y(bounds.lower.points[i])));
    }
    region.push_str(" Z");
    out.push_str(&format!(
        "<path d=\"{region}\" fill=\"#cfe8f7\" stroke=\"none\"/>\n"
    ));

    out.push_str(&format!(
        "<polyline points=\"{}\" fill=\"none\" stroke=\"black\" stroke-dasharray=\"6,4\" stroke-width=\"1.5\"/>\n",
        polyline_points(&baseline.points, &idx, n)
    ));

    for (k, curve) in curves.iter().enumerate() {
        let color = if curve.label.starts_with("annotator") {
            "#d62728"
        } else {
            PALETTE[k % PALETTE.len()]
        };
        out.push_str(&format!(
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>\n",
            polyline_points(&curve.points, &idx, n)
        ));
    }

    // Axes.
    out.push_str(&format!(
        "<rect x=\"{m}\" y=\"{m}\" width=\"{w}\" height=\"{h}\" fill=\"none\" stroke=\"#555555\" stroke-width=\"1\"/>\n",
        m = SVG_MARGIN,
        w = SVG_WIDTH - 2.0 * SVG_MARGIN,
        h = SVG_HEIGHT - 2.0 * SVG_MARGIN
    ));
    out.push_str(&format!(
        "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"12\" text-anchor=\"middle\">sorted frame rank</text>\n",
        SVG_WIDTH / 2.0,
        SVG_HEIGHT - 12.0
    ));
    out.push_str(&format!(
        "<text x=\"14\" y=\"{:.2}\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 14 {:.2})\">accumulated reference mass</text>\n",
        SVG_HEIGHT / 2.0,
        SVG_HEIGHT / 2.0
    ));

    // Legend, one line per curve.
    let mut ly = SVG_MARGIN + 14.0;
    for (k, curve) in curves.iter().enumerate() {
        let color = if curve.label.starts_with("annotator") {
            "#d62728"
        } else {
            PALETTE[k % PALETTE.len()]
        };
        out.push_str(&format!(
            "<line x1=\"{x1:.2}\" y1=\"{y:.2}\" x2=\"{x2:.2}\" y2=\"{y:.2}\" stroke=\"{color}\" stroke-width=\"2\"/>\n",
            x1 = SVG_MARGIN + 8.0,
            x2 = SVG_MARGIN + 28.0,
            y = ly
        ));
        out.push_str(&format!(
            "<text x=\"{x:.2}\" y=\"{y:.2}\" font-size=\"11\">{label}</text>\n",
            x = SVG_MARGIN + 34.0,
            y = ly + 4.0,
            label = curve.label
        ));
        ly += 16.0;
        if k > 24 {
            break;
        }
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn fs(values: &[f64]) -> FrameScores {
        FrameScores::new("v", values.to_vec()).unwrap()
    }

    #[test]
    fn mean_reference_is_per_frame_average() {
        let ann = AnnotationSet::new("v", vec![fs(&[1.0, 1.0]), fs(&[5.0, 5.0])]).unwrap();
        assert_eq!(mean_reference_scores(&ann).values, vec![3.0, 3.0]);
        let ann = AnnotationSet::new("v", vec![fs(&[1.0, 5.0]), fs(&[5.0, 1.0])]).unwrap();
        assert_eq!(mean_reference_scores(&ann).values, vec![3.0, 3.0]);
        let single = AnnotationSet::new("v", vec![fs(&[2.0, 7.0])]).unwrap();
        assert_eq!(mean_reference_scores(&single).values, vec![2.0, 7.0]);
    }

    #[test]
    fn constant_reference_gives_diagonal() {
        let pred = fs(&[0.3, 0.9, 0.1, 0.5]);
        let reference = fs(&[2.0, 2.0, 2.0, 2.0]);
        let curve = accumulate_curve(&pred, &reference, "pred").unwrap();
        for (i, &a) in curve.points.iter().enumerate() {
            assert_abs_diff_eq!(a, (i + 1) as f64 / 4.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn concordant_prediction_hits_upper_bound() {
        let reference = fs(&[4.0, 1.0, 3.0, 2.0]);
        let curve = accumulate_curve(&reference, &reference, "self").unwrap();
        let bounds = curve_bounds(&reference).unwrap();
        assert_eq!(curve.points, bounds.upper.points);
    }

    #[test]
    fn anti_concordant_prediction_hits_lower_bound() {
        let reference = fs(&[4.0, 1.0, 3.0, 2.0]);
        let negated = fs(&[-4.0, -1.0, -3.0, -2.0]);
        let curve = accumulate_curve(&negated, &reference, "anti").unwrap();
        let bounds = curve_bounds(&reference).unwrap();
        assert_eq!(curve.points, bounds.lower.points);
    }

    #[test]
    fn bounds_extreme_mass() {
        let reference = fs(&[0.0, 1.0, 0.0, 0.0]);
        let bounds = curve_bounds(&reference).unwrap();
        assert_eq!(bounds.upper.points, vec![1.0, 1.0, 1.0, 1.0]);
        assert_eq!(bounds.lower.points, vec![0.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn baseline_is_diagonal() {
        assert_eq!(random_baseline(4).points, vec![0.25, 0.5, 0.75, 1.0]);
        assert_eq!(random_baseline(1).points, vec![1.0]);
    }

    #[test]
    fn all_zero_reference_is_rejected() {
        let pred = fs(&[0.1, 0.2]);
        let zeros = fs(&[0.0, 0.0]);
        assert!(matches!(
            accumulate_curve(&pred, &zeros, "x"),
            Err(CurveError::NonPositiveReferenceMass { .. })
        ));
        assert!(curve_bounds(&zeros).is_err());
    }

    #[test]
    fn negative_reference_is_rejected() {
        let pred = fs(&[0.1, 0.2]);
        let negative = fs(&[1.0, -0.5]);
        assert!(matches!(
            accumulate_curve(&pred, &negative, "x"),
            Err(CurveError::NegativeReference { index: 1 })
        ));
    }

    #[test]
    fn identical_annotators_sit_on_upper_bound() {
        let a = fs(&[1.0, 3.0, 2.0]);
        let ann = AnnotationSet::new("v", vec![a.clone(), a.clone(), a]).unwrap();
        let curves = annotator_curves(&ann).unwrap();
        for curve in curves {
            let rest_mean = fs(&[1.0, 3.0, 2.0]);
            let bounds = curve_bounds(&rest_mean).unwrap();
            assert_eq!(curve.points, bounds.upper.points);
        }
    }

    #[test]
    fn two_anti_correlated_annotators_trace_lower_bounds() {
        let a = fs(&[1.0, 2.0, 3.0, 4.0]);
        let b = fs(&[4.0, 3.0, 2.0, 1.0]);
        let ann = AnnotationSet::new("v", vec![a.clone(), b.clone()]).unwrap();
        let curves = annotator_curves(&ann).unwrap();
        assert_eq!(curves[0].points, curve_bounds(&b).unwrap().lower.points);
        assert_eq!(curves[1].points, curve_bounds(&a).unwrap().lower.points);
    }

    #[test]
    fn annotator_curves_need_two() {
        let ann = AnnotationSet::new("v", vec![fs(&[1.0, 2.0])]).unwrap();
        assert!(matches!(
            annotator_curves(&ann),
            Err(CurveError::TooFewAnnotators { got: 1 })
        ));
    }

    #[test]
    fn tie_order_is_by_frame_index() {
        // Equal predictions with constant reference: permuting the tied
        // frames must not change the curve.
        let pred = fs(&[0.5, 0.5, 0.5]);
        let reference = fs(&[1.0, 1.0, 1.0]);
        let curve = accumulate_curve(&pred, &reference, "t").unwrap();
        assert_eq!(curve.points.len(), 3);
        assert_abs_diff_eq!(curve.points[2], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn emit_csv_and_svg_are_deterministic() {
        let dir = tempfile::tempdir().unwrap();
        let reference = fs(&[3.0, 1.0, 2.0]);
        let pred = fs(&[0.9, 0.4, 0.6]);
        let curve = accumulate_curve(&pred, &reference, "pred").unwrap();
        let bounds = curve_bounds(&reference).unwrap();
        let baseline = random_baseline(3);

        let csv_path = dir.path().join("c.csv");
        emit_curves(&[curve.clone()], &bounds, &baseline, &csv_path, CurveFormat::Csv).unwrap();
        let first = std::fs::read(&csv_path).unwrap();
        emit_curves(&[curve.clone()], &bounds, &baseline, &csv_path, CurveFormat::Csv).unwrap();
        assert_eq!(first, std::fs::read(&csv_path).unwrap());
        let text = String::from_utf8(first).unwrap();
        assert!(text.starts_with("i,pred,upper,lower,baseline\n"));
        assert_eq!(text.lines().count(), 4);

        let svg_path = dir.path().join("c.svg");
        emit_curves(&[curve.clone()], &bounds, &baseline, &svg_path, CurveFormat::Svg).unwrap();
        let first = std::fs::read(&svg_path).unwrap();
        emit_curves(&[curve], &bounds, &baseline, &svg_path, CurveFormat::Svg).unwrap();
        assert_eq!(first, std::fs::read(&svg_path).unwrap());
        let text = String::from_utf8(first).unwrap();
        assert!(text.starts_with("<svg"));
        assert_eq!(text.matches("<polyline").count(), 2); // baseline + curve
    }
}
