//! Dataset ingestion: TVSum-style TSV annotations, the neutral JSON dataset
//! container, external prediction-score files, and synthetic bundles.
//!
//! Every loader returns a fully validated [`DatasetBundle`]; invalid input
//! is rejected with an error naming the offending line (TSV) or JSON path.

use crate::datamodel::{AnnotationSet, DataError, SummaryMask, VideoRecord};
use std::collections::BTreeMap;
use std::path::Path;
use thiserror::Error;

mod json;
mod synth;
mod tsv;

pub use json::{load_json_dataset, write_json_dataset};
pub use synth::{synth_dataset, synth_dataset_with_truth, SynthConfig, SynthTruth};
pub use tsv::load_tvsum_tsv;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("i/o on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("json parse error in {path}: {message}")]
    Json { path: String, message: String },
    #[error("schema violation at {path}: {message}")]
    Schema { path: String, message: String },
    #[error("line {line}: {message}")]
    Tsv { line: usize, message: String },
    #[error("line {line}: score {value} outside 1..5")]
    ScoreOutOfRange { line: usize, value: i64 },
    #[error("no metadata for video {video_id} (expected an entry in the sidecar videos.json)")]
    MissingMetadata { video_id: String },
    #[error("prediction file references unknown video {video_id}")]
    UnknownVideo { video_id: String },
    #[error("prediction file missing videos: {}", missing.join(", "))]
    MissingPredictions { missing: Vec<String> },
    #[error("predictions for {video_id} have {got} frames, expected {expected}")]
    PredictionLength {
        video_id: String,
        expected: usize,
        got: usize,
    },
    #[error("predictions for {video_id} contain a non-finite value")]
    NonFinitePrediction { video_id: String },
    #[error("invalid synthetic config: {0}")]
    BadSynthConfig(String),
    #[error(transparent)]
    Data(#[from] DataError),
}

/// One loaded dataset: videos plus any of annotations, fixed reference
/// masks, and per-frame features.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DatasetBundle {
    /// Video records in dataset order.
    pub videos: Vec<VideoRecord>,
    pub annotations: BTreeMap<String, AnnotationSet>,
    pub reference_masks: BTreeMap<String, Vec<SummaryMask>>,
    /// Per-frame feature rows (n_frames x D), for KTS.
    pub features: BTreeMap<String, Vec<Vec<f64>>>,
    /// Declared length cap for reference masks, as a fraction of n_frames.
    pub reference_limit_fraction: Option<f64>,
}

impl DatasetBundle {
    pub fn video(&self, video_id: &str) -> Option<&VideoRecord> {
        self.videos.iter().find(|v| v.video_id == video_id)
    }

    pub fn has_annotations(&self) -> bool {
        !self.annotations.is_empty()
    }

    pub fn has_reference_masks(&self) -> bool {
        !self.reference_masks.is_empty()
    }

    /// Cross-checks every bundle invariant; loaders call this before
    /// returning and external callers can re-validate assembled bundles.
    pub fn validate(&self) -> Result<(), IngestError> {
        let mut ids = std::collections::BTreeSet::new();
        for (i, video) in self.videos.iter().enumerate() {
            VideoRecord::new(video.video_id.clone(), video.n_frames, video.fps)?;
            if !ids.insert(video.video_id.as_str()) {
                return Err(IngestError::Schema {
                    path: format!("videos[{i}].video_id"),
                    message: format!("duplicate video id {}", video.video_id),
                });
            }
        }
        for (vid, ann) in &self.annotations {
            let video = self.video(vid).ok_or_else(|| IngestError::Schema {
                path: format!("annotations.{vid}"),
                message: "no matching video record".to_string(),
            })?;
            if ann.video_id != *vid {
                return Err(IngestError::Schema {
                    path: format!("annotations.{vid}"),
                    message: format!("annotation set labeled {}", ann.video_id),
                });
            }
            if ann.n_frames() != video.n_frames {
                return Err(IngestError::Schema {
                    path: format!("annotations.{vid}"),
                    message: format!(
                        "annotators have {} frames, video has {}",
                        ann.n_frames(),
                        video.n_frames
                    ),
                });
            }
        }
        for (vid, masks) in &self.reference_masks {
            let video = self.video(vid).ok_or_else(|| IngestError::Schema {
                path: format!("reference_masks.{vid}"),
                message: "no matching video record".to_string(),
            })?;
            for (j, mask) in masks.iter().enumerate() {
                if mask.len() != video.n_frames {
                    return Err(IngestError::Schema {
                        path: format!("reference_masks.{vid}[{j}]"),
                        message: format!(
                            "mask has {} frames, video has {}",
                            mask.len(),
                            video.n_frames
                        ),
                    });
                }
                if let Some(limit) = self.reference_limit_fraction {
                    let cap = (limit * video.n_frames as f64).floor() as usize;
                    if mask.selected_frames() > cap {
                        return Err(IngestError::Schema {
                            path: format!("reference_masks.{vid}[{j}]"),
                            message: format!(
                                "mask selects {} frames, declared limit is {cap}",
                                mask.selected_frames()
                            ),
                        });
                    }
                }
            }
        }
        for (vid, rows) in &self.features {
            let video = self.video(vid).ok_or_else(|| IngestError::Schema {
                path: format!("features.{vid}"),
                message: "no matching video record".to_string(),
            })?;
            if rows.len() != video.n_frames {
                return Err(IngestError::Schema {
                    path: format!("features.{vid}"),
                    message: format!("{} rows, video has {} frames", rows.len(), video.n_frames),
                });
            }
            let dim = rows.first().map(Vec::len).unwrap_or(0);
            for (r, row) in rows.iter().enumerate() {
                if row.len() != dim {
                    return Err(IngestError::Schema {
                        path: format!("features.{vid}[{r}]"),
                        message: format!("row has {} columns, expected {dim}", row.len()),
                    });
                }
                if row.iter().any(|v| !v.is_finite()) {
                    return Err(IngestError::Schema {
                        path: format!("features.{vid}[{r}]"),
                        message: "non-finite feature value".to_string(),
                    });
                }
            }
        }
        Ok(())
    }
}

/// Loads a `{video_id: [frame scores]}` prediction file and checks it
/// covers every bundle video at the right length.
pub fn load_prediction_scores(
    path: &Path,
    bundle: &DatasetBundle,
) -> Result<BTreeMap<String, crate::datamodel::FrameScores>, IngestError> {
    let text = std::fs::read_to_string(path).map_err(|source| IngestError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let raw: BTreeMap<String, Vec<f64>> =
        serde_json::from_str(&text).map_err(|e| IngestError::Json {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;

    let missing: Vec<String> = bundle
        .videos
        .iter()
        .filter(|v| !raw.contains_key(&v.video_id))
        .map(|v| v.video_id.clone())
        .collect();
    if !missing.is_empty() {
        return Err(IngestError::MissingPredictions { missing });
    }

    let mut out = BTreeMap::new();
    for (vid, values) in raw {
        let video = bundle
            .video(&vid)
            .ok_or_else(|| IngestError::UnknownVideo {
                video_id: vid.clone(),
            })?;
        if values.len() != video.n_frames {
            return Err(IngestError::PredictionLength {
                video_id: vid,
                expected: video.n_frames,
                got: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(IngestError::NonFinitePrediction { video_id: vid });
        }
        let scores = crate::datamodel::FrameScores::new(vid.clone(), values)?;
        out.insert(vid, scores);
    }
    Ok(out)
}
