//! Dataset ingestion: annotation files, frame alignment, cross-validation
//! splits, on-disk layout, and the synthetic drifting-grating generator.

mod annotation;
mod folds;
mod manifest;
mod synth;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::Image;

pub use annotation::{format_annotation_file, parse_annotation_file, ANNOTATION_HEADER};
pub use folds::{fixed_split, make_folds, DataSplit, FoldSplit};
pub use manifest::{read_dataset, read_index, write_dataset, IndexEntry, ANNOTATION_FILE, INDEX_FILE};
pub use synth::{generate_synthetic_dataset, grating, SynthConfig};

/// Marker for "no annotated value".
pub const SENTINEL: f64 = -5.0;

/// A (valence, arousal) pair. Used for annotations and predictions alike.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Va {
    pub valence: f64,
    pub arousal: f64,
}

impl Va {
    pub const UNANNOTATED: Va = Va {
        valence: SENTINEL,
        arousal: SENTINEL,
    };

    pub fn new(valence: f64, arousal: f64) -> Self {
        Self { valence, arousal }
    }

    pub fn is_sentinel(&self) -> bool {
        self.valence == SENTINEL
    }

    /// Checks the label invariants: each component in `[-1, 1]` or exactly
    /// the sentinel, and both components sentinel or neither.
    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| (-1.0..=1.0).contains(&v) || v == SENTINEL;
        if !ok(self.valence) || !ok(self.arousal) {
            return Err(Error::Validation(format!(
                "label ({}, {}) outside [-1, 1] and not the -5 sentinel",
                self.valence, self.arousal
            )));
        }
        if (self.valence == SENTINEL) != (self.arousal == SENTINEL) {
            return Err(Error::Validation(format!(
                "label ({}, {}) is annotated for only one target",
                self.valence, self.arousal
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct FrameRecord {
    pub video_id: Arc<str>,
    /// Position of the frame in the original (pre-alignment) image list.
    pub frame_index: usize,
    pub image: Arc<Image>,
    pub label: Va,
}

impl FrameRecord {
    /// Interior unannotated frames stay in the sequence but are excluded
    /// from losses and metrics.
    pub fn is_annotated(&self) -> bool {
        !self.label.is_sentinel()
    }
}

#[derive(Debug, Clone)]
pub struct VideoSequence {
    pub video_id: String,
    pub frames: Vec<FrameRecord>,
}

impl VideoSequence {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn labels(&self) -> impl Iterator<Item = Va> + '_ {
        self.frames.iter().map(|f| f.label)
    }

    pub fn images(&self) -> impl Iterator<Item = &Image> + '_ {
        self.frames.iter().map(|f| f.image.as_ref())
    }
}

/// Pairs frames with annotations after dropping leading unannotated frames.
///
/// The first `n` annotations that are sentinels are removed together with
/// the first `n` images; the rest are paired positionally and truncated to
/// the shorter list.
pub fn align_frames(video_id: &str, images: Vec<Arc<Image>>, annotations: &[Va]) -> Result<VideoSequence> {
    if images.is_empty() || annotations.is_empty() {
        return Err(Error::EmptySequence(format!("video {video_id}: no images or no annotations")));
    }
    let leading = annotations.iter().take_while(|a| a.is_sentinel()).count();
    if leading == annotations.len() {
        return Err(Error::EmptySequence(format!("video {video_id}: every annotation is the sentinel")));
    }
    if leading >= images.len() {
        return Err(Error::EmptySequence(format!(
            "video {video_id}: {leading} leading unannotated frames but only {} images",
            images.len()
        )));
    }
    let id: Arc<str> = Arc::from(video_id);
    let frames = images
        .into_iter()
        .enumerate()
        .skip(leading)
        .zip(&annotations[leading..])
        .map(|((frame_index, image), &label)| FrameRecord {
            video_id: Arc::clone(&id),
            frame_index,
            image,
            label,
        })
        .collect();
    Ok(VideoSequence {
        video_id: video_id.to_string(),
        frames,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn imgs(n: usize) -> Vec<Arc<Image>> {
        (0..n).map(|i| Arc::new(Image::filled(2, 2, i as f64 / 10.0))).collect()
    }

    #[test]
    fn drops_leading_sentinels() {
        let ann = [Va::UNANNOTATED, Va::new(0.1, 0.2), Va::new(0.3, 0.4)];
        let seq = align_frames("v", imgs(3), &ann).unwrap();
        assert_eq!(seq.len(), 2);
        assert_eq!(seq.frames[0].frame_index, 1);
        assert_eq!(seq.frames[0].image.get(0, 0), 0.1);
        assert_eq!(seq.frames[0].label, Va::new(0.1, 0.2));
        assert_eq!(seq.frames[1].label, Va::new(0.3, 0.4));
    }

    #[test]
    fn keeps_everything_without_sentinels() {
        let ann = [Va::new(0.0, 0.0); 2];
        let seq = align_frames("v", imgs(2), &ann).unwrap();
        assert_eq!(seq.len(), 2);
        assert_eq!(seq.frames[0].frame_index, 0);
    }

    #[test]
    fn truncates_to_shorter_list() {
        let ann = [Va::new(0.1, 0.1), Va::new(0.2, 0.2), Va::new(0.3, 0.3)];
        let seq = align_frames("v", imgs(5), &ann).unwrap();
        assert_eq!(seq.len(), 3);
        let ann5 = [Va::new(0.1, 0.1); 5];
        assert_eq!(align_frames("v", imgs(2), &ann5).unwrap().len(), 2);
    }

    #[test]
    fn interior_sentinels_are_kept_but_unannotated() {
        let ann = [Va::new(0.1, 0.1), Va::UNANNOTATED, Va::new(0.2, 0.2)];
        let seq = align_frames("v", imgs(3), &ann).unwrap();
        assert_eq!(seq.len(), 3);
        assert!(!seq.frames[1].is_annotated());
    }

    #[test]
    fn all_sentinels_is_an_error() {
        let ann = [Va::UNANNOTATED; 3];
        assert!(matches!(align_frames("v", imgs(3), &ann), Err(Error::EmptySequence(_))));
    }

    #[test]
    fn label_validation() {
        assert!(Va::new(1.0, -1.0).validate().is_ok());
        assert!(Va::UNANNOTATED.validate().is_ok());
        assert!(Va::new(2.0, 0.0).validate().is_err());
        assert!(Va::new(SENTINEL, 0.0).validate().is_err());
    }
}
