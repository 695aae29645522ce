//! Flat run configuration: one TOML table, every key optional with a
//! documented default, unknown keys rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use vaest::dataio::SynthConfig;
use vaest::eval::Pooling;
use vaest::lds::{KernelKind, LdsParams, SmoothingKernel};
use vaest::model::{ModelConfig, ModelMode};
use vaest::phasediff::PhaseParams;
use vaest::train::{LossKind, TrainConfig};

use crate::Failure;

/// Every key the CLI understands. Defaults are listed in `Default`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Dataset directory: written by `synth`, read by everything else.
    pub dataset_root: PathBuf,
    /// Root for weights, plots, checkpoints, reports and predictions.
    pub out_dir: PathBuf,
    /// Phase-difference cache; empty means `<out_dir>/cache`.
    pub cache_dir: PathBuf,

    pub n_videos: usize,
    pub frames_per_video: usize,
    pub image_size: usize,
    pub imbalance_exponent: f64,
    pub noise_std: f64,
    pub seed: u64,

    pub lds_enabled: bool,
    pub lds_bins: usize,
    /// gaussian, triangular, laplacian or delta.
    pub lds_kernel: String,
    /// Kernel scale in label units.
    pub lds_bandwidth: f64,
    pub lds_half_width: usize,
    pub lds_clip_max: f64,

    pub phase_scales: usize,
    pub phase_orientations: usize,
    pub phase_amplitude_quantile: f64,

    /// two_stream or spatial_only.
    pub model_mode: String,
    pub backbone_channels: usize,
    pub spatial_feature_dim: usize,
    pub mlp_hidden: usize,
    pub temporal_channels: usize,
    pub recurrent_hidden: usize,
    pub window_length: usize,

    pub epochs: usize,
    pub batch_windows: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub grad_clip: f64,
    /// weighted_mse or weighted_mse_plus_ccc.
    pub loss_kind: String,
    /// fixed (one held-out split) or kfold.
    pub cv_mode: String,
    pub folds: usize,
    pub val_fraction: f64,

    /// pooled or per_video.
    pub pooling: String,
    /// Fraction of frames whose prediction is dropped before imputation.
    pub eval_missing_rate: f64,

    pub plot_width: u32,
    pub plot_height: u32,
    pub histogram_cells: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        let synth = SynthConfig::default();
        let phase = PhaseParams::default();
        let lds = LdsParams::default();
        let train = TrainConfig::default();
        Self {
            dataset_root: PathBuf::from("data"),
            out_dir: PathBuf::from("runs"),
            cache_dir: PathBuf::new(),
            n_videos: synth.n_videos,
            frames_per_video: synth.frames_per_video,
            image_size: synth.image_size,
            imbalance_exponent: synth.imbalance_exponent,
            noise_std: synth.noise_std,
            seed: synth.seed,
            lds_enabled: train.lds_enabled,
            lds_bins: lds.n_bins,
            lds_kernel: lds.kernel.kind.as_str().to_string(),
            lds_bandwidth: lds.kernel.bandwidth,
            lds_half_width: lds.kernel.half_width,
            lds_clip_max: lds.clip_max,
            phase_scales: phase.n_scales,
            phase_orientations: phase.n_orientations,
            phase_amplitude_quantile: phase.amplitude_quantile,
            model_mode: "two_stream".into(),
            backbone_channels: 4,
            spatial_feature_dim: 16,
            mlp_hidden: 32,
            temporal_channels: 8,
            recurrent_hidden: 16,
            window_length: 8,
            epochs: train.epochs,
            batch_windows: train.batch_windows,
            learning_rate: train.learning_rate,
            momentum: train.momentum,
            grad_clip: train.grad_clip,
            loss_kind: train.loss_kind.as_str().to_string(),
            cv_mode: "fixed".into(),
            folds: 5,
            val_fraction: 0.2,
            pooling: "pooled".into(),
            eval_missing_rate: 0.0,
            plot_width: 640,
            plot_height: 360,
            histogram_cells: 20,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CvMode {
    Fixed,
    KFold,
}

fn parse_value(raw: &str) -> toml::Value {
    // Bare words that are not valid TOML (paths, enum names) are strings.
    format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

impl RunConfig {
    /// Defaults overlaid with the file at `path`, if any.
    pub fn load(path: Option<&Path>) -> Result<Self, Failure> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::user(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|f| Failure::user(format!("{}: {}", path.display(), f.message)))
    }

    pub fn from_toml(text: &str) -> Result<Self, Failure> {
        toml::from_str(text).map_err(|e| Failure::user(e.to_string()))
    }

    /// Applies `key=value` overrides; values use TOML syntax, with bare
    /// words taken as strings.
    pub fn with_overrides(&self, overrides: &[String]) -> Result<Self, Failure> {
        if overrides.is_empty() {
            return Ok(self.clone());
        }
        let mut table = toml::Table::try_from(self).map_err(|e| Failure::runtime(e.to_string()))?;
        for item in overrides {
            let (key, raw) = item
                .split_once('=')
                .ok_or_else(|| Failure::user(format!("--set expects key=value, got {item:?}")))?;
            let key = key.trim();
            if !table.contains_key(key) {
                return Err(Failure::user(format!("unknown config key {key:?}")));
            }
            table.insert(key.to_string(), parse_value(raw.trim()));
        }
        table.try_into().map_err(|e: toml::de::Error| Failure::user(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config serializes")
    }

    pub fn cache_path(&self) -> PathBuf {
        if self.cache_dir.as_os_str().is_empty() {
            self.out_dir.join("cache")
        } else {
            self.cache_dir.clone()
        }
    }

    pub fn synth(&self) -> SynthConfig {
        SynthConfig {
            n_videos: self.n_videos,
            frames_per_video: self.frames_per_video,
            image_size: self.image_size,
            imbalance_exponent: self.imbalance_exponent,
            noise_std: self.noise_std,
            seed: self.seed,
        }
    }

    pub fn lds(&self) -> Result<LdsParams, Failure> {
        let kind: KernelKind = self.lds_kernel.parse()?;
        let kernel = if kind == KernelKind::Delta {
            SmoothingKernel::delta()
        } else {
            SmoothingKernel::new(kind, self.lds_bandwidth, self.lds_half_width)?
        };
        if self.lds_bins < 2 {
            return Err(Failure::user(format!("lds_bins must be at least 2, got {}", self.lds_bins)));
        }
        if !(self.lds_clip_max >= 1.0) {
            return Err(Failure::user(format!("lds_clip_max must be >= 1, got {}", self.lds_clip_max)));
        }
        Ok(LdsParams {
            n_bins: self.lds_bins,
            kernel,
            clip_max: self.lds_clip_max,
        })
    }

    pub fn phase(&self) -> PhaseParams {
        PhaseParams {
            n_scales: self.phase_scales,
            n_orientations: self.phase_orientations,
            amplitude_quantile: self.phase_amplitude_quantile,
        }
    }

    pub fn model(&self) -> Result<ModelConfig, Failure> {
        let mode: ModelMode = self.model_mode.parse()?;
        let cfg = ModelConfig {
            mode,
            image_size: self.image_size,
            backbone_channels: self.backbone_channels,
            spatial_feature_dim: self.spatial_feature_dim,
            mlp_hidden: self.mlp_hidden,
            phase_channels: self.phase_scales * self.phase_orientations,
            temporal_channels: self.temporal_channels,
            recurrent_hidden: self.recurrent_hidden,
            window_length: self.window_length,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn train(&self) -> Result<TrainConfig, Failure> {
        let loss_kind: LossKind = self.loss_kind.parse()?;
        let cfg = TrainConfig {
            epochs: self.epochs,
            batch_windows: self.batch_windows,
            learning_rate: self.learning_rate,
            momentum: self.momentum,
            grad_clip: self.grad_clip,
            loss_kind,
            lds_enabled: self.lds_enabled,
            lds: self.lds()?,
            seed: self.seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn cv(&self) -> Result<CvMode, Failure> {
        match self.cv_mode.as_str() {
            "fixed" => {
                if !(self.val_fraction > 0.0 && self.val_fraction < 1.0) {
                    return Err(Failure::user(format!("val_fraction must be in (0, 1), got {}", self.val_fraction)));
                }
                Ok(CvMode::Fixed)
            }
            "kfold" => {
                if self.folds < 2 {
                    return Err(Failure::user(format!("kfold needs folds >= 2, got {}", self.folds)));
                }
                Ok(CvMode::KFold)
            }
            other => Err(Failure::user(format!("unknown cv_mode {other:?}"))),
        }
    }

    pub fn pooling(&self) -> Result<Pooling, Failure> {
        Ok(self.pooling.parse()?)
    }

    /// Checks every derived setting at once so a bad key fails before any
    /// work starts.
    pub fn validate(&self) -> Result<(), Failure> {
        self.synth().validate()?;
        self.model()?;
        self.train()?;
        self.cv()?;
        self.pooling()?;
        if !(0.0..1.0).contains(&self.eval_missing_rate) {
            return Err(Failure::user(format!(
                "eval_missing_rate must be in [0, 1), got {}",
                self.eval_missing_rate
            )));
        }
        if self.plot_width < 64 || self.plot_height < 64 || self.histogram_cells == 0 {
            return Err(Failure::user("plots need width and height >= 64 and histogram_cells >= 1"));
        }
        vaest::phasediff::FilterBank::from_params(&self.phase(), self.image_size)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_and_validate() {
        let cfg = RunConfig::default();
        cfg.validate().unwrap();
        assert_eq!(RunConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
        assert_eq!(RunConfig::from_toml("").unwrap(), cfg);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = RunConfig::from_toml("epochz = 3").unwrap_err();
        assert_eq!(err.code, 1);
        assert!(RunConfig::default().with_overrides(&["epochz=3".into()]).is_err());
    }

    #[test]
    fn overrides_parse_toml_values() {
        let cfg = RunConfig::default()
            .with_overrides(&[
                "epochs=3".into(),
                "learning_rate = 0.5".into(),
                "model_mode=spatial_only".into(),
                "lds_enabled=false".into(),
                "out_dir=/tmp/x y".into(),
            ])
            .unwrap();
        assert_eq!(cfg.epochs, 3);
        assert_eq!(cfg.learning_rate, 0.5);
        assert_eq!(cfg.model_mode, "spatial_only");
        assert!(!cfg.lds_enabled);
        assert_eq!(cfg.out_dir, PathBuf::from("/tmp/x y"));
        assert!(RunConfig::default().with_overrides(&["epochs=many".into()]).is_err());
        assert!(RunConfig::default().with_overrides(&["epochs".into()]).is_err());
    }

    #[test]
    fn invalid_settings_fail_validation() {
        for bad in [
            "epochs = 0",
            "lds_kernel = \"box\"",
            "model_mode = \"three_stream\"",
            "cv_mode = \"kfold\"\nfolds = 1",
            "val_fraction = 1.0",
            "eval_missing_rate = 1.0",
            "image_size = 18",
            "learning_rate = -1.0",
        ] {
            let cfg = RunConfig::from_toml(bad).unwrap();
            assert!(cfg.validate().is_err(), "{bad}");
        }
    }
}
