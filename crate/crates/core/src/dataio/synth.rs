use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{FrameRecord, Va, VideoSequence};
use crate::error::{Error, Result};
use crate::image::Image;

/// Grating wavelength in pixels.
const WAVELENGTH: f64 = 8.0;
/// Displacement per frame at arousal = 1, in pixels (a quarter wavelength).
const MAX_SPEED: f64 = WAVELENGTH / 4.0;
/// Exposure length in frames; faster motion smears the grating and lowers
/// its contrast by `sinc(EXPOSURE * speed / WAVELENGTH)`.
const EXPOSURE: f64 = 2.0;
const BASE_CONTRAST: f64 = 0.25;
const MIN_BRIGHTNESS: f64 = 0.3;
const BRIGHTNESS_RANGE: f64 = 0.4;
/// Latent label trajectories are triangle waves with periods drawn from this
/// range (frames).
const PERIOD_RANGE: (f64, f64) = (40.0, 160.0);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n_videos: usize,
    pub frames_per_video: usize,
    pub image_size: usize,
    /// 0 gives approximately uniform label marginals; larger values pile
    /// labels up near -1.
    pub imbalance_exponent: f64,
    /// Standard deviation of additive pixel noise.
    pub noise_std: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_videos: 20,
            frames_per_video: 64,
            image_size: 16,
            imbalance_exponent: 3.0,
            noise_std: 0.02,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_videos == 0 {
            return Err(Error::Config("n_videos must be positive".into()));
        }
        if self.frames_per_video < 2 {
            return Err(Error::Config("frames_per_video must be at least 2".into()));
        }
        if self.image_size < 16 {
            return Err(Error::Config("image_size must be at least 16".into()));
        }
        if !(self.imbalance_exponent >= 0.0 && self.imbalance_exponent.is_finite()) {
            return Err(Error::Config("imbalance_exponent must be a finite value >= 0".into()));
        }
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            return Err(Error::Config("noise_std must be a finite value >= 0".into()));
        }
        Ok(())
    }
}

fn triangle(x: f64) -> f64 {
    1.0 - (2.0 * x.rem_euclid(1.0) - 1.0).abs()
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

/// A square sinusoidal grating `mean + contrast * cos(2π/λ · (x cosθ + y sinθ) - phase)`.
/// Increasing `phase` moves the pattern along `(cosθ, sinθ)`.
pub fn grating(size: usize, wavelength: f64, orientation: f64, phase: f64, mean: f64, contrast: f64) -> Image {
    let (c, s) = (orientation.cos(), orientation.sin());
    let k = 2.0 * PI / wavelength;
    Image::from_fn(size, size, |x, y| {
        mean + contrast * (k * (x as f64 * c + y as f64 * s) - phase).cos()
    })
}

/// Drifting-grating videos with labels tied to what is visible:
/// valence is an affine map of mean brightness, arousal an affine map of the
/// grating's displacement since the previous frame.
pub fn generate_synthetic_dataset(config: &SynthConfig) -> Result<Vec<VideoSequence>> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let noise = Normal::new(0.0, config.noise_std.max(f64::MIN_POSITIVE))
        .map_err(|e| Error::Config(format!("noise_std: {e}")))?;
    let skew = 1.0 + config.imbalance_exponent;

    let mut videos = Vec::with_capacity(config.n_videos);
    for v in 0..config.n_videos {
        let video_id = format!("synth_{v:04}");
        let id: Arc<str> = Arc::from(video_id.as_str());
        let orientation = rng.random_range(0.0..PI);
        let mut phase = rng.random_range(0.0..2.0 * PI);
        let period_v = rng.random_range(PERIOD_RANGE.0..PERIOD_RANGE.1);
        let offset_v: f64 = rng.random();
        let period_a = rng.random_range(PERIOD_RANGE.0..PERIOD_RANGE.1);
        let offset_a: f64 = rng.random();

        let mut frames = Vec::with_capacity(config.frames_per_video);
        for t in 0..config.frames_per_video {
            let s_v = triangle(t as f64 / period_v + offset_v).powf(skew);
            let s_a = triangle(t as f64 / period_a + offset_a).powf(skew);
            let brightness = MIN_BRIGHTNESS + BRIGHTNESS_RANGE * s_v;
            let speed = MAX_SPEED * s_a;
            if t > 0 {
                phase += 2.0 * PI * speed / WAVELENGTH;
            }
            let contrast = BASE_CONTRAST * sinc(EXPOSURE * speed / WAVELENGTH);
            let clean = grating(config.image_size, WAVELENGTH, orientation, phase, brightness, contrast);
            let image = if config.noise_std > 0.0 {
                let pixels = clean
                    .pixels()
                    .iter()
                    .map(|p| (p + noise.sample(&mut rng)).clamp(0.0, 1.0))
                    .collect();
                Image::new(config.image_size, config.image_size, pixels)?
            } else {
                clean
            };
            let valence = (2.0 * (brightness - MIN_BRIGHTNESS) / BRIGHTNESS_RANGE - 1.0).clamp(-1.0, 1.0);
            let arousal = (2.0 * speed / MAX_SPEED - 1.0).clamp(-1.0, 1.0);
            frames.push(FrameRecord {
                video_id: Arc::clone(&id),
                frame_index: t,
                image: Arc::new(image),
                label: Va::new(valence, arousal),
            });
        }
        videos.push(VideoSequence { video_id, frames });
    }
    Ok(videos)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bin_ratio(values: impl Iterator<Item = f64>, bins: usize) -> f64 {
        let mut counts = vec![0usize; bins];
        for v in values {
            let b = (((v + 1.0) / 2.0 * bins as f64) as usize).min(bins - 1);
            counts[b] += 1;
        }
        let max = *counts.iter().max().unwrap() as f64;
        let min = *counts.iter().min().unwrap() as f64;
        max / min
    }

    fn config(exponent: f64) -> SynthConfig {
        SynthConfig {
            n_videos: 40,
            frames_per_video: 250,
            image_size: 16,
            imbalance_exponent: exponent,
            noise_std: 0.0,
            seed: 7,
        }
    }

    #[test]
    fn uniform_marginals_without_skew() {
        let videos = generate_synthetic_dataset(&config(0.0)).unwrap();
        let labels: Vec<Va> = videos.iter().flat_map(|v| v.labels()).collect();
        assert_eq!(labels.len(), 10_000);
        let rv = bin_ratio(labels.iter().map(|l| l.valence), 20);
        let ra = bin_ratio(labels.iter().map(|l| l.arousal), 20);
        assert!(rv < 2.0 && ra < 2.0, "ratios {rv} {ra}");
    }

    #[test]
    fn skewed_marginals_with_exponent_three() {
        let videos = generate_synthetic_dataset(&config(3.0)).unwrap();
        let labels: Vec<Va> = videos.iter().flat_map(|v| v.labels()).collect();
        let rv = bin_ratio(labels.iter().map(|l| l.valence), 20);
        let ra = bin_ratio(labels.iter().map(|l| l.arousal), 20);
        assert!(rv > 10.0 && ra > 10.0, "ratios {rv} {ra}");
    }

    #[test]
    fn minimum_length_videos() {
        let cfg = SynthConfig {
            n_videos: 3,
            frames_per_video: 2,
            ..SynthConfig::default()
        };
        let videos = generate_synthetic_dataset(&cfg).unwrap();
        assert!(videos.iter().all(|v| v.len() == 2));
    }

    #[test]
    fn labels_in_range_and_never_sentinel() {
        let cfg = SynthConfig {
            noise_std: 0.1,
            ..SynthConfig::default()
        };
        for v in generate_synthetic_dataset(&cfg).unwrap() {
            for f in &v.frames {
                assert!(f.is_annotated());
                assert!((-1.0..=1.0).contains(&f.label.valence));
                assert!((-1.0..=1.0).contains(&f.label.arousal));
                assert!(f.image.pixels().iter().all(|p| (0.0..=1.0).contains(p)));
            }
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let a = generate_synthetic_dataset(&SynthConfig::default()).unwrap();
        let b = generate_synthetic_dataset(&SynthConfig::default()).unwrap();
        for (va, vb) in a.iter().zip(&b) {
            for (fa, fb) in va.frames.iter().zip(&vb.frames) {
                assert_eq!(fa.label, fb.label);
                assert_eq!(fa.image, fb.image);
            }
        }
    }

    #[test]
    fn rejects_invalid_config() {
        let bad = [
            SynthConfig { image_size: 8, ..SynthConfig::default() },
            SynthConfig { frames_per_video: 1, ..SynthConfig::default() },
            SynthConfig { n_videos: 0, ..SynthConfig::default() },
            SynthConfig { noise_std: -1.0, ..SynthConfig::default() },
        ];
        for cfg in bad {
            assert!(matches!(generate_synthetic_dataset(&cfg), Err(Error::Config(_))));
        }
    }
}
