//! Two-stream per-frame valence/arousal regressor.
//!
//! Spatial stream: a small three-block CNN (or any frozen [`FeatureExtractor`])
//! followed by a two-layer MLP. Temporal stream: one convolution block over
//! phase-difference stacks. Per-frame features are concatenated, run through a
//! GRU over the window, and mapped by a linear head with `tanh` to `[-1, 1]²`.
//!
//! All parameters live in one flat `f64` vector; gradients use the same
//! layout.

mod gru;
mod layers;

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataio::Va;
use crate::error::{Error, Result};
use crate::image::Image;
use crate::phasediff::PhaseDiffStack;

use gru::{Gru, GruStep};
use layers::{
    avg_pool2, avg_pool2_backward, global_avg_pool, global_avg_pool_backward, relu_backward, relu_inplace,
    tanh_backward, tanh_inplace, Conv, Dense,
};

/// Model output for one frame; both components in `[-1, 1]`.
pub type Prediction = Va;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelMode {
    TwoStream,
    SpatialOnly,
}

impl std::str::FromStr for ModelMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "two_stream" => Ok(ModelMode::TwoStream),
            "spatial_only" => Ok(ModelMode::SpatialOnly),
            _ => Err(Error::Config(format!("unknown model mode {s:?}"))),
        }
    }
}

impl ModelMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            ModelMode::TwoStream => "two_stream",
            ModelMode::SpatialOnly => "spatial_only",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub mode: ModelMode,
    /// Side length of the square input frames; a multiple of 4.
    pub image_size: usize,
    /// Width of the first CNN block; later blocks use twice this.
    pub backbone_channels: usize,
    pub spatial_feature_dim: usize,
    pub mlp_hidden: usize,
    /// Channels of the phase-difference input (scales × orientations).
    pub phase_channels: usize,
    pub temporal_channels: usize,
    pub recurrent_hidden: usize,
    pub window_length: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            mode: ModelMode::TwoStream,
            image_size: 16,
            backbone_channels: 4,
            spatial_feature_dim: 16,
            mlp_hidden: 32,
            phase_channels: 8,
            temporal_channels: 8,
            recurrent_hidden: 16,
            window_length: 8,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("backbone_channels", self.backbone_channels),
            ("spatial_feature_dim", self.spatial_feature_dim),
            ("mlp_hidden", self.mlp_hidden),
            ("recurrent_hidden", self.recurrent_hidden),
            ("window_length", self.window_length),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        if self.image_size < 16 || !self.image_size.is_multiple_of(4) {
            return Err(Error::Config(format!(
                "image_size must be a multiple of 4 and at least 16, got {}",
                self.image_size
            )));
        }
        if self.mode == ModelMode::TwoStream && (self.phase_channels == 0 || self.temporal_channels == 0) {
            return Err(Error::Config("two_stream mode needs phase_channels and temporal_channels".into()));
        }
        Ok(())
    }

    fn gru_input(&self, spatial_dim: usize) -> usize {
        match self.mode {
            ModelMode::TwoStream => spatial_dim + self.temporal_channels,
            ModelMode::SpatialOnly => spatial_dim,
        }
    }
}

/// Trainable parameter count for the default CNN backbone.
pub fn count_parameters(config: &ModelConfig) -> usize {
    let c = config.backbone_channels;
    let backbone = Conv::n_params(1, c) + Conv::n_params(c, 2 * c) + Conv::n_params(2 * c, 2 * c);
    backbone + head_parameters(config, 2 * c)
}

fn head_parameters(config: &ModelConfig, backbone_dim: usize) -> usize {
    let mlp = Dense::n_params(backbone_dim, config.mlp_hidden)
        + Dense::n_params(config.mlp_hidden, config.spatial_feature_dim);
    let temporal = match config.mode {
        ModelMode::TwoStream => {
            Conv::n_params(config.phase_channels, config.temporal_channels)
                + Dense::n_params(config.temporal_channels, config.temporal_channels)
        }
        ModelMode::SpatialOnly => 0,
    };
    let gru = Gru::n_params(config.gru_input(config.spatial_feature_dim), config.recurrent_hidden);
    mlp + temporal + gru + Dense::n_params(config.recurrent_hidden, 2)
}

/// A frozen per-frame feature extractor standing in for a pretrained
/// backbone. Its features feed the trainable MLP; it receives no gradients.
pub trait FeatureExtractor: Send + Sync {
    fn output_dim(&self) -> usize;
    fn extract(&self, image: &Image) -> Result<Vec<f64>>;
}

/// A named slice of the flat parameter vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSpec {
    pub name: String,
    pub shape: Vec<usize>,
    pub offset: usize,
}

impl ParamSpec {
    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, Copy)]
enum Init {
    Zero,
    /// Uniform in `±bound`.
    Uniform(f64),
}

#[derive(Default)]
struct LayoutBuilder {
    specs: Vec<ParamSpec>,
    inits: Vec<Init>,
    len: usize,
}

impl LayoutBuilder {
    fn add(&mut self, name: &str, shape: &[usize], init: Init) -> usize {
        let offset = self.len;
        let spec = ParamSpec {
            name: name.to_string(),
            shape: shape.to_vec(),
            offset,
        };
        self.len += spec.len();
        self.specs.push(spec);
        self.inits.push(init);
        offset
    }

    fn conv(&mut self, name: &str, cin: usize, cout: usize) -> Conv {
        let bound = (6.0 / (cin * 9) as f64).sqrt();
        let w = self.add(&format!("{name}.weight"), &[cout, cin, 3, 3], Init::Uniform(bound));
        let b = self.add(&format!("{name}.bias"), &[cout], Init::Zero);
        Conv { w, b, cin, cout }
    }

    fn dense(&mut self, name: &str, inp: usize, out: usize, bound: f64) -> Dense {
        let w = self.add(&format!("{name}.weight"), &[out, inp], Init::Uniform(bound));
        let b = self.add(&format!("{name}.bias"), &[out], Init::Zero);
        Dense { w, b, inp, out }
    }

    fn gru(&mut self, name: &str, inp: usize, hidden: usize) -> Gru {
        let bound = 1.0 / (hidden as f64).sqrt();
        let w_ih = self.add(&format!("{name}.weight_ih"), &[3 * hidden, inp], Init::Uniform(bound));
        let w_hh = self.add(&format!("{name}.weight_hh"), &[3 * hidden, hidden], Init::Uniform(bound));
        let b_ih = self.add(&format!("{name}.bias_ih"), &[3 * hidden], Init::Uniform(bound));
        let b_hh = self.add(&format!("{name}.bias_hh"), &[3 * hidden], Init::Uniform(bound));
        Gru {
            w_ih,
            w_hh,
            b_ih,
            b_hh,
            inp,
            hidden,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Backbone {
    convs: [Conv; 3],
}

#[derive(Debug, Clone, Copy)]
struct TemporalBlock {
    conv: Conv,
    proj: Dense,
}

/// Intermediate values of the spatial stream for one frame.
#[derive(Debug, Clone)]
struct SpatialTape {
    /// CNN activations: input, relu1, pool1, relu2, pool2, relu3. Empty for
    /// an external extractor.
    cnn: Vec<Vec<f64>>,
    backbone_out: Vec<f64>,
    hidden: Vec<f64>,
    out: Vec<f64>,
}

#[derive(Debug, Clone)]
struct TemporalTape {
    input: Vec<f64>,
    act: Vec<f64>,
    pooled: Vec<f64>,
    out: Vec<f64>,
}

/// Everything `backward_window` needs from a forward pass.
#[derive(Debug, Clone)]
pub struct WindowTape {
    spatial: Vec<SpatialTape>,
    temporal: Vec<Option<TemporalTape>>,
    steps: Vec<GruStep>,
    outputs: Vec<[f64; 2]>,
}

impl WindowTape {
    pub fn predictions(&self) -> Vec<Prediction> {
        self.outputs.iter().map(|o| Va::new(o[0], o[1])).collect()
    }
}

/// Named parameter tensor, used for checkpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedTensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub values: Vec<f64>,
}

#[derive(Clone)]
pub struct TwoStreamModel {
    config: ModelConfig,
    specs: Vec<ParamSpec>,
    params: Vec<f64>,
    backbone: Option<Backbone>,
    external: Option<Arc<dyn FeatureExtractor>>,
    mlp: [Dense; 2],
    temporal: Option<TemporalBlock>,
    gru: Gru,
    head: Dense,
}

impl std::fmt::Debug for TwoStreamModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TwoStreamModel")
            .field("config", &self.config)
            .field("n_params", &self.params.len())
            .field("external_backbone", &self.external.is_some())
            .finish()
    }
}

impl TwoStreamModel {
    /// Model with the default CNN backbone, initialized from `seed`.
    pub fn new(config: ModelConfig, seed: u64) -> Result<Self> {
        Self::build(config, None, seed)
    }

    /// Model whose spatial stream starts from a frozen external extractor.
    pub fn with_extractor(config: ModelConfig, extractor: Arc<dyn FeatureExtractor>, seed: u64) -> Result<Self> {
        Self::build(config, Some(extractor), seed)
    }

    fn build(config: ModelConfig, external: Option<Arc<dyn FeatureExtractor>>, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut lb = LayoutBuilder::default();
        let c = config.backbone_channels;
        let (backbone, backbone_dim) = match &external {
            None => (
                Some(Backbone {
                    convs: [
                        lb.conv("spatial.conv1", 1, c),
                        lb.conv("spatial.conv2", c, 2 * c),
                        lb.conv("spatial.conv3", 2 * c, 2 * c),
                    ],
                }),
                2 * c,
            ),
            Some(e) => (None, e.output_dim()),
        };
        let mlp = [
            lb.dense(
                "spatial.mlp1",
                backbone_dim,
                config.mlp_hidden,
                (6.0 / backbone_dim as f64).sqrt(),
            ),
            lb.dense(
                "spatial.mlp2",
                config.mlp_hidden,
                config.spatial_feature_dim,
                (6.0 / (config.mlp_hidden + config.spatial_feature_dim) as f64).sqrt(),
            ),
        ];
        let temporal = (config.mode == ModelMode::TwoStream).then(|| TemporalBlock {
            conv: lb.conv("temporal.conv", config.phase_channels, config.temporal_channels),
            proj: lb.dense(
                "temporal.proj",
                config.temporal_channels,
                config.temporal_channels,
                (3.0 / config.temporal_channels as f64).sqrt(),
            ),
        });
        let gru = lb.gru(
            "regressor.gru",
            config.gru_input(config.spatial_feature_dim),
            config.recurrent_hidden,
        );
        let head = lb.dense(
            "regressor.head",
            config.recurrent_hidden,
            2,
            (6.0 / (config.recurrent_hidden + 2) as f64).sqrt(),
        );

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = vec![0.0; lb.len];
        for (spec, init) in lb.specs.iter().zip(&lb.inits) {
            if let Init::Uniform(bound) = *init {
                for v in &mut params[spec.offset..spec.offset + spec.len()] {
                    *v = rng.random_range(-bound..bound);
                }
            }
        }
        Ok(Self {
            config,
            specs: lb.specs,
            params,
            backbone,
            external,
            mlp,
            temporal,
            gru,
            head,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn num_parameters(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn param_specs(&self) -> &[ParamSpec] {
        &self.specs
    }

    pub fn named_tensors(&self) -> Vec<NamedTensor> {
        self.specs
            .iter()
            .map(|s| NamedTensor {
                name: s.name.clone(),
                shape: s.shape.clone(),
                values: self.params[s.offset..s.offset + s.len()].to_vec(),
            })
            .collect()
    }

    /// Loads tensors by name; every parameter must be present with its shape.
    pub fn load_tensors(&mut self, tensors: &[NamedTensor]) -> Result<()> {
        for spec in &self.specs {
            let t = tensors
                .iter()
                .find(|t| t.name == spec.name)
                .ok_or_else(|| Error::Validation(format!("checkpoint lacks tensor {}", spec.name)))?;
            if t.shape != spec.shape || t.values.len() != spec.len() {
                return Err(Error::Shape(format!(
                    "tensor {} has shape {:?}, expected {:?}",
                    spec.name, t.shape, spec.shape
                )));
            }
            self.params[spec.offset..spec.offset + spec.len()].copy_from_slice(&t.values);
        }
        Ok(())
    }

    fn check_image(&self, image: &Image) -> Result<()> {
        if self.external.is_none() && !image.is_square(self.config.image_size) {
            return Err(Error::Shape(format!(
                "frame is {}x{}, model expects {}x{}",
                image.width(),
                image.height(),
                self.config.image_size,
                self.config.image_size
            )));
        }
        Ok(())
    }

    fn spatial_frame(&self, image: &Image) -> Result<SpatialTape> {
        self.check_image(image)?;
        let p = &self.params;
        let (cnn, backbone_out) = match (&self.backbone, &self.external) {
            (Some(bb), _) => {
                let s = self.config.image_size;
                let input = image.pixels().to_vec();
                let mut a1 = bb.convs[0].forward(p, &input, s, s);
                relu_inplace(&mut a1);
                let p1 = avg_pool2(&a1, bb.convs[0].cout, s, s);
                let s2 = s / 2;
                let mut a2 = bb.convs[1].forward(p, &p1, s2, s2);
                relu_inplace(&mut a2);
                let p2 = avg_pool2(&a2, bb.convs[1].cout, s2, s2);
                let s3 = s2 / 2;
                let mut a3 = bb.convs[2].forward(p, &p2, s3, s3);
                relu_inplace(&mut a3);
                let g = global_avg_pool(&a3, bb.convs[2].cout, s3 * s3);
                (vec![input, a1, p1, a2, p2, a3], g)
            }
            (None, Some(ext)) => {
                let f = ext.extract(image)?;
                if f.len() != ext.output_dim() {
                    return Err(Error::Shape(format!(
                        "extractor returned {} features, declared {}",
                        f.len(),
                        ext.output_dim()
                    )));
                }
                (Vec::new(), f)
            }
            (None, None) => unreachable!("model always has a spatial backbone"),
        };
        let mut hidden = self.mlp[0].forward(p, &backbone_out);
        relu_inplace(&mut hidden);
        let mut out = self.mlp[1].forward(p, &hidden);
        tanh_inplace(&mut out);
        Ok(SpatialTape {
            cnn,
            backbone_out,
            hidden,
            out,
        })
    }

    fn spatial_frame_backward(&self, tape: &SpatialTape, d_out: &[f64], grad: &mut [f64]) {
        let p = &self.params;
        let mut d = d_out.to_vec();
        tanh_backward(&tape.out, &mut d);
        let mut d_hidden = vec![0.0; tape.hidden.len()];
        self.mlp[1].backward(p, &tape.hidden, &d, grad, Some(&mut d_hidden));
        relu_backward(&tape.hidden, &mut d_hidden);
        let Some(bb) = &self.backbone else {
            self.mlp[0].backward(p, &tape.backbone_out, &d_hidden, grad, None);
            return;
        };
        let mut d_g = vec![0.0; tape.backbone_out.len()];
        self.mlp[0].backward(p, &tape.backbone_out, &d_hidden, grad, Some(&mut d_g));

        let s = self.config.image_size;
        let (s2, s3) = (s / 2, s / 4);
        let [input, a1, p1, a2, p2, a3] = &tape.cnn[..] else {
            unreachable!("cnn tape has six entries")
        };
        let mut d_a3 = global_avg_pool_backward(&d_g, s3 * s3);
        relu_backward(a3, &mut d_a3);
        let mut d_p2 = vec![0.0; p2.len()];
        bb.convs[2].backward(p, p2, s3, s3, &d_a3, grad, Some(&mut d_p2));
        let mut d_a2 = avg_pool2_backward(&d_p2, bb.convs[1].cout, s2, s2);
        relu_backward(a2, &mut d_a2);
        let mut d_p1 = vec![0.0; p1.len()];
        bb.convs[1].backward(p, p1, s2, s2, &d_a2, grad, Some(&mut d_p1));
        let mut d_a1 = avg_pool2_backward(&d_p1, bb.convs[0].cout, s, s);
        relu_backward(a1, &mut d_a1);
        bb.convs[0].backward(p, input, s, s, &d_a1, grad, None);
    }

    fn check_stack(&self, stack: &PhaseDiffStack) -> Result<()> {
        let s = self.config.image_size;
        if stack.channels() != self.config.phase_channels || stack.height != s || stack.width != s {
            return Err(Error::Shape(format!(
                "phase-difference stack is {}x{}x{}, model expects {}x{s}x{s}",
                stack.channels(),
                stack.height,
                stack.width,
                self.config.phase_channels
            )));
        }
        Ok(())
    }

    fn temporal_frame(&self, block: &TemporalBlock, stack: &PhaseDiffStack) -> Result<TemporalTape> {
        self.check_stack(stack)?;
        let s = self.config.image_size;
        let p = &self.params;
        let mut act = block.conv.forward(p, &stack.diff, s, s);
        relu_inplace(&mut act);
        let pooled = global_avg_pool(&act, block.conv.cout, s * s);
        let mut out = block.proj.forward(p, &pooled);
        tanh_inplace(&mut out);
        Ok(TemporalTape {
            input: stack.diff.clone(),
            act,
            pooled,
            out,
        })
    }

    fn temporal_frame_backward(&self, block: &TemporalBlock, tape: &TemporalTape, d_out: &[f64], grad: &mut [f64]) {
        let s = self.config.image_size;
        let p = &self.params;
        let mut d = d_out.to_vec();
        tanh_backward(&tape.out, &mut d);
        let mut d_pooled = vec![0.0; tape.pooled.len()];
        block.proj.backward(p, &tape.pooled, &d, grad, Some(&mut d_pooled));
        let mut d_act = global_avg_pool_backward(&d_pooled, s * s);
        relu_backward(&tape.act, &mut d_act);
        block.conv.backward(p, &tape.input, s, s, &d_act, grad, None);
    }

    /// Spatial feature vector per frame.
    pub fn spatial_forward(&self, frames: &[&Image]) -> Result<Vec<Vec<f64>>> {
        if frames.is_empty() {
            return Err(Error::Shape("empty frame batch".into()));
        }
        frames.iter().map(|f| self.spatial_frame(f).map(|t| t.out)).collect()
    }

    /// Temporal feature vector per phase-difference stack.
    pub fn temporal_forward(&self, stacks: &[&PhaseDiffStack]) -> Result<Vec<Vec<f64>>> {
        let block = self
            .temporal
            .as_ref()
            .ok_or_else(|| Error::Config("spatial_only model has no temporal stream".into()))?;
        stacks.iter().map(|s| self.temporal_frame(block, s).map(|t| t.out)).collect()
    }

    /// Runs the recurrent regressor over one window of per-frame features.
    ///
    /// In two-stream mode `temporal` holds either one vector per frame or one
    /// fewer, in which case the first frame gets a zero temporal feature.
    /// Spatial-only models ignore `temporal`.
    pub fn fuse_and_regress(&self, spatial: &[Vec<f64>], temporal: Option<&[Vec<f64>]>) -> Result<Vec<Prediction>> {
        let inputs = self.fuse(spatial, temporal)?;
        let (steps, outputs) = self.regress(&inputs);
        drop(steps);
        Ok(outputs.iter().map(|o| Va::new(o[0], o[1])).collect())
    }

    fn fuse(&self, spatial: &[Vec<f64>], temporal: Option<&[Vec<f64>]>) -> Result<Vec<Vec<f64>>> {
        let w = spatial.len();
        if w == 0 {
            return Err(Error::Shape("window must contain at least one frame".into()));
        }
        if spatial.iter().any(|f| f.len() != self.config.spatial_feature_dim) {
            return Err(Error::Shape("spatial feature dimension mismatch".into()));
        }
        match (&self.config.mode, temporal) {
            (ModelMode::SpatialOnly, _) => Ok(spatial.to_vec()),
            (ModelMode::TwoStream, None) => Err(Error::Shape("two_stream model needs temporal features".into())),
            (ModelMode::TwoStream, Some(t)) => {
                let tc = self.config.temporal_channels;
                let lead = match t.len() {
                    n if n == w => 0,
                    n if n + 1 == w => 1,
                    n => {
                        return Err(Error::Shape(format!(
                            "{n} temporal features for a window of {w} frames"
                        )))
                    }
                };
                if t.iter().any(|f| f.len() != tc) {
                    return Err(Error::Shape("temporal feature dimension mismatch".into()));
                }
                Ok((0..w)
                    .map(|i| {
                        let mut v = spatial[i].clone();
                        if i < lead {
                            v.extend(std::iter::repeat_n(0.0, tc));
                        } else {
                            v.extend_from_slice(&t[i - lead]);
                        }
                        v
                    })
                    .collect())
            }
        }
    }

    fn regress(&self, inputs: &[Vec<f64>]) -> (Vec<GruStep>, Vec<[f64; 2]>) {
        let mut h = vec![0.0; self.config.recurrent_hidden];
        let mut steps = Vec::with_capacity(inputs.len());
        let mut outputs = Vec::with_capacity(inputs.len());
        for x in inputs {
            let step = self.gru.step(&self.params, x, &h);
            let o = self.head.forward(&self.params, &step.h);
            outputs.push([o[0].tanh(), o[1].tanh()]);
            h = step.h.clone();
            steps.push(step);
        }
        (steps, outputs)
    }

    /// Forward pass over a window, keeping what the backward pass needs.
    ///
    /// `stacks[i]` is the phase difference ending at frame `i`; `None` means
    /// the frame has no predecessor and gets a zero temporal feature.
    pub fn forward_window(&self, frames: &[&Image], stacks: &[Option<&PhaseDiffStack>]) -> Result<WindowTape> {
        if frames.is_empty() {
            return Err(Error::Shape("window must contain at least one frame".into()));
        }
        let spatial = frames.iter().map(|f| self.spatial_frame(f)).collect::<Result<Vec<_>>>()?;
        let temporal: Vec<Option<TemporalTape>> = match &self.temporal {
            None => vec![None; frames.len()],
            Some(block) => {
                if stacks.len() != frames.len() {
                    return Err(Error::Shape(format!(
                        "{} stacks for {} frames",
                        stacks.len(),
                        frames.len()
                    )));
                }
                stacks
                    .iter()
                    .map(|s| s.map(|s| self.temporal_frame(block, s)).transpose())
                    .collect::<Result<_>>()?
            }
        };
        let tc = self.config.temporal_channels;
        let inputs: Vec<Vec<f64>> = spatial
            .iter()
            .zip(&temporal)
            .map(|(s, t)| {
                let mut v = s.out.clone();
                if self.temporal.is_some() {
                    match t {
                        Some(t) => v.extend_from_slice(&t.out),
                        None => v.extend(std::iter::repeat_n(0.0, tc)),
                    }
                }
                v
            })
            .collect();
        let (steps, outputs) = self.regress(&inputs);
        Ok(WindowTape {
            spatial,
            temporal,
            steps,
            outputs,
        })
    }

    pub fn predict_window(&self, frames: &[&Image], stacks: &[Option<&PhaseDiffStack>]) -> Result<Vec<Prediction>> {
        Ok(self.forward_window(frames, stacks)?.predictions())
    }

    /// Accumulates into `grad` the parameter gradient given `d_preds`, the
    /// loss gradient with respect to each frame's (valence, arousal) output.
    pub fn backward_window(&self, tape: &WindowTape, d_preds: &[(f64, f64)], grad: &mut [f64]) {
        assert_eq!(d_preds.len(), tape.outputs.len());
        assert_eq!(grad.len(), self.params.len());
        let p = &self.params;
        let sd = self.config.spatial_feature_dim;
        let mut d_h_next = vec![0.0; self.config.recurrent_hidden];
        for t in (0..tape.steps.len()).rev() {
            let o = tape.outputs[t];
            let d_o = [d_preds[t].0 * (1.0 - o[0] * o[0]), d_preds[t].1 * (1.0 - o[1] * o[1])];
            let step = &tape.steps[t];
            let mut d_h = d_h_next.clone();
            self.head.backward(p, &step.h, &d_o, grad, Some(&mut d_h));
            let (d_x, d_h_prev) = self.gru.step_backward(p, step, &d_h, grad);
            d_h_next = d_h_prev;
            self.spatial_frame_backward(&tape.spatial[t], &d_x[..sd], grad);
            if let (Some(block), Some(tt)) = (&self.temporal, &tape.temporal[t]) {
                self.temporal_frame_backward(block, tt, &d_x[sd..], grad);
            }
        }
    }
}
