//! On-disk dataset layout:
//!
//! ```text
//! <root>/index.csv              video_id,path
//! <root>/<video>/000000.png     zero-padded frame images
//! <root>/<video>/annotations.txt
//! ```

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use image::{DynamicImage, GrayImage};

use super::{align_frames, format_annotation_file, parse_annotation_file, VideoSequence};
use crate::error::{Error, Result};
use crate::image::Image;

pub const INDEX_FILE: &str = "index.csv";
pub const ANNOTATION_FILE: &str = "annotations.txt";
const INDEX_HEADER: &str = "video_id,path";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexEntry {
    pub video_id: String,
    /// Relative to the dataset root.
    pub path: PathBuf,
}

pub fn read_index(root: &Path) -> Result<Vec<IndexEntry>> {
    let path = root.join(INDEX_FILE);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == INDEX_HEADER => {}
        _ => {
            return Err(Error::Parse {
                line: 1,
                message: format!("{}: expected header {INDEX_HEADER:?}", path.display()),
            })
        }
    }
    let mut entries = Vec::new();
    for (idx, line) in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let Some((id, rel)) = line.split_once(',') else {
            return Err(Error::Parse {
                line: idx + 1,
                message: format!("{}: expected video_id,path", path.display()),
            });
        };
        entries.push(IndexEntry {
            video_id: id.trim().to_string(),
            path: PathBuf::from(rel.trim()),
        });
    }
    Ok(entries)
}

fn load_frame(path: &Path) -> Result<Image> {
    let decoded = image::ImageReader::open(path)
        .map_err(|e| Error::io(path, e))?
        .decode()
        .map_err(|source| Error::Image {
            path: path.to_path_buf(),
            source,
        })?;
    let (w, h) = (decoded.width() as usize, decoded.height() as usize);
    match decoded {
        DynamicImage::ImageLuma8(g) => Image::from_luma8(w, h, g.as_raw()),
        other => {
            let rgb: Vec<f64> = other.to_rgb8().as_raw().iter().map(|&b| b as f64 / 255.0).collect();
            Image::from_rgb(w, h, &rgb)
        }
    }
}

fn frame_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|ext| ext.eq_ignore_ascii_case("png")))
        .collect();
    files.sort();
    Ok(files)
}

/// Loads and aligns every video listed in the index, in index order.
pub fn read_dataset(root: &Path) -> Result<Vec<VideoSequence>> {
    read_index(root)?
        .into_iter()
        .map(|entry| {
            let dir = root.join(&entry.path);
            let ann_path = dir.join(ANNOTATION_FILE);
            let text = fs::read_to_string(&ann_path).map_err(|e| Error::io(&ann_path, e))?;
            let annotations = parse_annotation_file(&text).map_err(|e| match e {
                Error::Parse { line, message } => Error::Parse {
                    line,
                    message: format!("{}: {message}", ann_path.display()),
                },
                Error::Validation(m) => Error::Validation(format!("{}: {m}", ann_path.display())),
                other => other,
            })?;
            let images = frame_files(&dir)?
                .iter()
                .map(|p| load_frame(p).map(Arc::new))
                .collect::<Result<Vec<_>>>()?;
            align_frames(&entry.video_id, images, &annotations)
        })
        .collect()
}

/// Writes videos in the manifest layout. Images are quantized to 8 bits.
pub fn write_dataset(root: &Path, videos: &[VideoSequence]) -> Result<()> {
    fs::create_dir_all(root).map_err(|e| Error::io(root, e))?;
    let mut index = String::from(INDEX_HEADER);
    index.push('\n');
    for video in videos {
        let dir = root.join(&video.video_id);
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        for (pos, frame) in video.frames.iter().enumerate() {
            let img = &frame.image;
            let buf = GrayImage::from_raw(img.width() as u32, img.height() as u32, img.to_luma8())
                .ok_or_else(|| Error::Shape("frame buffer size mismatch".into()))?;
            let path = dir.join(format!("{pos:06}.png"));
            buf.save(&path).map_err(|source| Error::Image { path, source })?;
        }
        let labels: Vec<_> = video.labels().collect();
        let ann_path = dir.join(ANNOTATION_FILE);
        fs::write(&ann_path, format_annotation_file(&labels)).map_err(|e| Error::io(&ann_path, e))?;
        index.push_str(&format!("{},{}\n", video.video_id, video.video_id));
    }
    let index_path = root.join(INDEX_FILE);
    fs::write(&index_path, index).map_err(|e| Error::io(&index_path, e))
}
