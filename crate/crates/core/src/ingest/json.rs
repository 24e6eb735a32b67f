//! The neutral JSON dataset container.
//!
//! Schema:
//!
//! ```json
//! {
//!   "videos": [{"video_id": "...", "n_frames": 120, "fps": 30.0}, ...],
//!   "annotations": {"vid": [[frame scores], ...]},
//!   "reference_masks": {"vid": [[0, 1, ...], ...]},
//!   "features": {"vid": [[d reals], ...]},
//!   "reference_limit_fraction": 0.15
//! }
//! ```
//!
//! `annotations`, `reference_masks`, `features`, and
//! `reference_limit_fraction` are optional. Writing then re-loading a
//! bundle reproduces it exactly.

use super::{DatasetBundle, IngestError};
use crate::datamodel::{AnnotationSet, FrameScores, SummaryMask, VideoRecord};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;

#[derive(Debug, Serialize, Deserialize)]
struct RawBundle {
    videos: Vec<VideoRecord>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    annotations: BTreeMap<String, Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    reference_masks: BTreeMap<String, Vec<Vec<u8>>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    features: BTreeMap<String, Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    reference_limit_fraction: Option<f64>,
}

/// Loads and validates a neutral JSON dataset.
pub fn load_json_dataset(path: &Path) -> Result<DatasetBundle, IngestError> {
    let text = std::fs::read_to_string(path).map_err(|source| IngestError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let raw: RawBundle = serde_json::from_str(&text).map_err(|e| IngestError::Json {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    bundle_from_raw(raw)
}

fn bundle_from_raw(raw: RawBundle) -> Result<DatasetBundle, IngestError> {
    let mut annotations = BTreeMap::new();
    for (vid, rows) in raw.annotations {
        if rows.is_empty() {
            return Err(IngestError::Schema {
                path: format!("annotations.{vid}"),
                message: "empty annotator list".to_string(),
            });
        }
        let mut scores = Vec::with_capacity(rows.len());
        for (j, row) in rows.into_iter().enumerate() {
            let fs = FrameScores::new(vid.clone(), row).map_err(|e| IngestError::Schema {
                path: format!("annotations.{vid}[{j}]"),
                message: e.to_string(),
            })?;
            scores.push(fs);
        }
        let set = AnnotationSet::new(vid.clone(), scores).map_err(|e| IngestError::Schema {
            path: format!("annotations.{vid}"),
            message: e.to_string(),
        })?;
        annotations.insert(vid, set);
    }

    let mut reference_masks = BTreeMap::new();
    for (vid, rows) in raw.reference_masks {
        let mut masks = Vec::with_capacity(rows.len());
        for (j, row) in rows.into_iter().enumerate() {
            let mask = SummaryMask::new(vid.clone(), row).map_err(|e| IngestError::Schema {
                path: format!("reference_masks.{vid}[{j}]"),
                message: e.to_string(),
            })?;
            masks.push(mask);
        }
        reference_masks.insert(vid, masks);
    }

    let bundle = DatasetBundle {
        videos: raw.videos,
        annotations,
        reference_masks,
        features: raw.features,
        reference_limit_fraction: raw.reference_limit_fraction,
    };
    bundle.validate()?;
    Ok(bundle)
}

/// Writes a bundle in the neutral JSON format. Output is deterministic for
/// a given bundle.
pub fn write_json_dataset(bundle: &DatasetBundle, path: &Path) -> Result<(), IngestError> {
    let text = dataset_to_json_string(bundle);
    std::fs::write(path, text).map_err(|source| IngestError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub(crate) fn dataset_to_json_string(bundle: &DatasetBundle) -> String {
    let raw = RawBundle {
        videos: bundle.videos.clone(),
        annotations: bundle
            .annotations
            .iter()
            .map(|(vid, set)| {
                (
                    vid.clone(),
                    set.annotators.iter().map(|a| a.values.clone()).collect(),
                )
            })
            .collect(),
        reference_masks: bundle
            .reference_masks
            .iter()
            .map(|(vid, masks)| (vid.clone(), masks.iter().map(|m| m.mask.clone()).collect()))
            .collect(),
        features: bundle.features.clone(),
        reference_limit_fraction: bundle.reference_limit_fraction,
    };
    let mut text = serde_json::to_string(&raw).expect("bundle serialization cannot fail");
    text.push('\n');
    text
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_and_load(json: &str) -> Result<DatasetBundle, IngestError> {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("data.json");
        std::fs::write(&path, json).unwrap();
        load_json_dataset(&path)
    }

    #[test]
    fn minimal_document_loads() {
        let bundle = write_and_load(
            r#"{"videos":[{"video_id":"a","n_frames":3,"fps":30.0}],
                "annotations":{"a":[[1.0,2.0,3.0]]}}"#,
        )
        .unwrap();
        assert_eq!(bundle.videos.len(), 1);
        assert_eq!(bundle.annotations["a"].n_annotators(), 1);
    }

    #[test]
    fn mask_longer_than_video_is_rejected_with_path() {
        let err = write_and_load(
            r#"{"videos":[{"video_id":"a","n_frames":3,"fps":30.0}],
                "reference_masks":{"a":[[1,0,1,0]]}}"#,
        )
        .unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("reference_masks.a[0]"), "{msg}");
    }

    #[test]
    fn features_shape_is_checked() {
        let bundle = write_and_load(
            r#"{"videos":[{"video_id":"a","n_frames":2,"fps":30.0}],
                "features":{"a":[[1.0,0.0],[0.0,1.0]]}}"#,
        )
        .unwrap();
        assert_eq!(bundle.features["a"].len(), 2);

        let err = write_and_load(
            r#"{"videos":[{"video_id":"a","n_frames":2,"fps":30.0}],
                "features":{"a":[[1.0,0.0]]}}"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("features.a"), "{err}");
    }

    #[test]
    fn annotation_length_mismatch_names_the_annotator() {
        let err = write_and_load(
            r#"{"videos":[{"video_id":"a","n_frames":3,"fps":30.0}],
                "annotations":{"a":[[1.0,2.0,3.0],[1.0,2.0]]}}"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("annotations.a"), "{err}");
    }

    #[test]
    fn non_binary_mask_is_rejected() {
        let err = write_and_load(
            r#"{"videos":[{"video_id":"a","n_frames":2,"fps":30.0}],
                "reference_masks":{"a":[[1,2]]}}"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("reference_masks.a[0]"), "{err}");
    }

    #[test]
    fn round_trip_preserves_bundle() {
        let bundle = write_and_load(
            r#"{"videos":[{"video_id":"a","n_frames":3,"fps":30.0},
                           {"video_id":"b","n_frames":2,"fps":25.0}],
                "annotations":{"a":[[1.0,2.0,3.0],[3.0,2.0,1.0]]},
                "reference_masks":{"b":[[1,0]]},
                "features":{"a":[[0.5],[0.5],[1.5]]},
                "reference_limit_fraction":0.5}"#,
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.json");
        write_json_dataset(&bundle, &path).unwrap();
        let reloaded = load_json_dataset(&path).unwrap();
        assert_eq!(bundle, reloaded);
    }
}
