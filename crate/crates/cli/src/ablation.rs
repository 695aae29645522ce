//! LDS on/off comparison on skewed synthetic data with a spatial-only model.
//!
//! Each seed generates a training set and an independent test set, trains
//! once with and once without LDS using identical settings, and scores both
//! on all test frames and on the rare-label subset. A test frame belongs to
//! the rare subset for a target when the smoothed training density at its
//! label is at or below the 10th percentile of that density taken over the
//! training frames.

use vaest::dataio::{fixed_split, generate_synthetic_dataset, SynthConfig, Va};
use vaest::eval::{ccc, mean_ccc, Pooling};
use vaest::lds::{estimate_target, LdsParams, TargetLds};
use vaest::model::{ModelConfig, ModelMode};
use vaest::train::{evaluate, fit, prepare_videos, PreparedVideo, TrainConfig};

#[derive(Debug, Clone)]
pub struct AblationSettings {
    pub n_videos: usize,
    pub frames_per_video: usize,
    pub imbalance_exponent: f64,
    pub val_fraction: f64,
    pub model: ModelConfig,
    /// `lds_enabled` and `seed` are overwritten per arm.
    pub train: TrainConfig,
}

impl Default for AblationSettings {
    fn default() -> Self {
        Self {
            n_videos: 200,
            frames_per_video: 250,
            imbalance_exponent: 3.0,
            val_fraction: 0.1,
            model: ModelConfig {
                mode: ModelMode::SpatialOnly,
                image_size: 16,
                backbone_channels: 4,
                spatial_feature_dim: 16,
                mlp_hidden: 32,
                phase_channels: 0,
                temporal_channels: 0,
                recurrent_hidden: 16,
                window_length: 8,
            },
            train: TrainConfig {
                epochs: 30,
                batch_windows: 8,
                learning_rate: 0.01,
                ..Default::default()
            },
        }
    }
}

/// Scores of one trained arm on the test set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArmScore {
    pub pooled_mean_ccc: f64,
    pub rare_mean_ccc: f64,
    pub best_epoch: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeedOutcome {
    pub seed: u64,
    pub without_lds: ArmScore,
    pub with_lds: ArmScore,
    /// Rare-subset sizes (valence, arousal) on the test set.
    pub rare_frames: (usize, usize),
}

impl SeedOutcome {
    pub fn rare_delta(&self) -> f64 {
        self.with_lds.rare_mean_ccc - self.without_lds.rare_mean_ccc
    }

    pub fn pooled_delta(&self) -> f64 {
        self.with_lds.pooled_mean_ccc - self.without_lds.pooled_mean_ccc
    }
}

fn density_threshold(lds: &TargetLds, labels: &[f64]) -> f64 {
    let mut dens: Vec<f64> = labels.iter().map(|&x| lds.density.at(x).unwrap()).collect();
    dens.sort_by(f64::total_cmp);
    dens[dens.len() / 10]
}

struct RareSubset {
    valence: TargetLds,
    arousal: TargetLds,
    v_cut: f64,
    a_cut: f64,
}

impl RareSubset {
    fn from_training(labels: &[Va]) -> vaest::Result<Self> {
        let v: Vec<f64> = labels.iter().map(|l| l.valence).collect();
        let a: Vec<f64> = labels.iter().map(|l| l.arousal).collect();
        let params = LdsParams::default();
        let valence = estimate_target(&v, &params)?;
        let arousal = estimate_target(&a, &params)?;
        Ok(Self {
            v_cut: density_threshold(&valence, &v),
            a_cut: density_threshold(&arousal, &a),
            valence,
            arousal,
        })
    }

    /// Rare-subset CCC for each target, plus subset sizes.
    fn score(&self, test: &[PreparedVideo], preds: &[Vec<Va>]) -> vaest::Result<(f64, (usize, usize))> {
        let (mut vp, mut vt, mut ap, mut at) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
        for (v, p) in test.iter().zip(preds) {
            for (f, q) in v.video.frames.iter().zip(p) {
                if !f.is_annotated() {
                    continue;
                }
                if self.valence.density.at(f.label.valence)? <= self.v_cut {
                    vp.push(q.valence);
                    vt.push(f.label.valence);
                }
                if self.arousal.density.at(f.label.arousal)? <= self.a_cut {
                    ap.push(q.arousal);
                    at.push(f.label.arousal);
                }
            }
        }
        Ok((mean_ccc(ccc(&vp, &vt)?, ccc(&ap, &at)?), (vp.len(), ap.len())))
    }
}

pub fn run_seed(settings: &AblationSettings, seed: u64) -> vaest::Result<SeedOutcome> {
    let synth = SynthConfig {
        n_videos: settings.n_videos,
        frames_per_video: settings.frames_per_video,
        imbalance_exponent: settings.imbalance_exponent,
        seed,
        ..Default::default()
    };
    let videos = prepare_videos(generate_synthetic_dataset(&synth)?, None, 0.5, None)?;
    let test_synth = SynthConfig {
        n_videos: (settings.n_videos / 4).max(1),
        seed: seed + 1000,
        ..synth
    };
    let test = prepare_videos(generate_synthetic_dataset(&test_synth)?, None, 0.5, None)?;

    let ids: Vec<String> = videos.iter().map(|v| v.video.video_id.clone()).collect();
    let split = fixed_split(&ids, settings.val_fraction, seed)?;
    let train_labels: Vec<Va> = videos
        .iter()
        .filter(|v| split.train.contains(&v.video.video_id))
        .flat_map(|v| v.video.labels().filter(|l| !l.is_sentinel()).collect::<Vec<_>>())
        .collect();
    let rare = RareSubset::from_training(&train_labels)?;

    let mut arms = Vec::with_capacity(2);
    let mut rare_frames = (0, 0);
    for lds_enabled in [false, true] {
        let cfg = TrainConfig {
            lds_enabled,
            seed,
            ..settings.train.clone()
        };
        let out = fit(&videos, &split, &settings.model, &cfg, None)?;
        let (report, preds) = evaluate(&out.best_model, &test, Pooling::Pooled)?;
        let (rare_ccc, sizes) = rare.score(&test, &preds)?;
        rare_frames = sizes;
        arms.push(ArmScore {
            pooled_mean_ccc: report.mean_ccc,
            rare_mean_ccc: rare_ccc,
            best_epoch: out.report.best_epoch,
        });
    }
    Ok(SeedOutcome {
        seed,
        without_lds: arms[0],
        with_lds: arms[1],
        rare_frames,
    })
}
