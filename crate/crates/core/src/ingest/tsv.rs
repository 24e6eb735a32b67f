//! TVSum-style TSV annotation loader.
//!
//! One row per (video, annotator): `video_id<TAB>category<TAB>s1,s2,...`
//! with integer shot scores in 1..5, one score per fixed-length shot
//! (2 seconds for TVSum). A sidecar JSON array supplies per-video frame
//! counts and frame rates. Shot scores are expanded to frame level on load;
//! annotator order follows file order.

use super::{DatasetBundle, IngestError};
use crate::datamodel::{expand_shot_scores, AnnotationSet, FrameScores, VideoRecord};
use std::collections::BTreeMap;
use std::path::Path;

fn read_to_string(path: &Path) -> Result<String, IngestError> {
    std::fs::read_to_string(path).map_err(|source| IngestError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Loads the sidecar metadata: a JSON array of `{video_id, n_frames, fps}`.
fn load_video_metadata(path: &Path) -> Result<Vec<VideoRecord>, IngestError> {
    let text = read_to_string(path)?;
    let videos: Vec<VideoRecord> = serde_json::from_str(&text).map_err(|e| IngestError::Json {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    Ok(videos)
}

/// Loads a TVSum-style annotation TSV plus its video metadata sidecar.
///
/// `shot_len_sec` is the annotation shot duration (2.0 for TVSum).
pub fn load_tvsum_tsv(
    tsv_path: &Path,
    videos_json_path: &Path,
    shot_len_sec: f64,
) -> Result<DatasetBundle, IngestError> {
    let videos = load_video_metadata(videos_json_path)?;
    let by_id: BTreeMap<&str, &VideoRecord> =
        videos.iter().map(|v| (v.video_id.as_str(), v)).collect();

    let text = read_to_string(tsv_path)?;
    let mut rows: BTreeMap<String, Vec<FrameScores>> = BTreeMap::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(IngestError::Tsv {
                line: line_no,
                message: format!(
                    "expected 3 tab-separated fields (video_id, category, scores), got {}",
                    fields.len()
                ),
            });
        }
        let video_id = fields[0];
        let video = by_id
            .get(video_id)
            .copied()
            .ok_or_else(|| IngestError::MissingMetadata {
                video_id: video_id.to_string(),
            })?;

        let mut shot_scores = Vec::new();
        for token in fields[2].split(',') {
            let value: i64 = token.trim().parse().map_err(|_| IngestError::Tsv {
                line: line_no,
                message: format!("score {token:?} is not an integer"),
            })?;
            if !(1..=5).contains(&value) {
                return Err(IngestError::ScoreOutOfRange {
                    line: line_no,
                    value,
                });
            }
            shot_scores.push(value as f64);
        }
        if shot_scores.is_empty() {
            return Err(IngestError::Tsv {
                line: line_no,
                message: "empty score list".to_string(),
            });
        }

        let frame_scores =
            expand_shot_scores(&shot_scores, shot_len_sec, video).map_err(|e| IngestError::Tsv {
                line: line_no,
                message: e.to_string(),
            })?;
        rows.entry(video_id.to_string()).or_default().push(frame_scores);
    }

    let mut annotations = BTreeMap::new();
    for (vid, scores) in rows {
        annotations.insert(vid.clone(), AnnotationSet::new(vid, scores)?);
    }

    let bundle = DatasetBundle {
        videos,
        annotations,
        ..Default::default()
    };
    bundle.validate()?;
    Ok(bundle)
}
