//! Training checkpoints: everything needed to resume a fold exactly.

use std::fs;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{EpochRecord, TrainConfig};
use crate::error::{Error, Result};
use crate::model::{ModelConfig, NamedTensor, TwoStreamModel};

pub const CHECKPOINT_FORMAT: &str = "vaest-checkpoint-1";

/// Position of a ChaCha8 stream.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngState {
    pub seed: [u8; 32],
    pub stream: u64,
    /// `u128` word position, stored as a decimal string.
    pub word_pos: String,
}

impl RngState {
    pub fn capture(rng: &ChaCha8Rng) -> Self {
        Self {
            seed: rng.get_seed(),
            stream: rng.get_stream(),
            word_pos: rng.get_word_pos().to_string(),
        }
    }

    pub fn restore(&self) -> Result<ChaCha8Rng> {
        let pos: u128 = self
            .word_pos
            .parse()
            .map_err(|_| Error::Validation(format!("bad rng word position {:?}", self.word_pos)))?;
        let mut rng = ChaCha8Rng::from_seed(self.seed);
        rng.set_stream(self.stream);
        rng.set_word_pos(pos);
        Ok(rng)
    }
}

/// Best held-out result seen so far within a fold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestState {
    pub epoch: usize,
    pub valence: f64,
    pub arousal: f64,
    pub mean_ccc: f64,
    pub tensors: Vec<NamedTensor>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub model_config: ModelConfig,
    pub train_config: TrainConfig,
    pub fold: usize,
    pub init_seed: u64,
    pub shuffle_seed: u64,
    pub epochs_completed: usize,
    pub tensors: Vec<NamedTensor>,
    /// SGD velocity, laid out like the flat parameter vector.
    pub momentum: Vec<f64>,
    pub rng: RngState,
    pub history: Vec<EpochRecord>,
    pub best: Option<BestState>,
}

impl Checkpoint {
    /// The model at the checkpointed epoch.
    pub fn model(&self) -> Result<TwoStreamModel> {
        let mut m = TwoStreamModel::new(self.model_config.clone(), 0)?;
        m.load_tensors(&self.tensors)?;
        Ok(m)
    }

    /// The model with the best held-out mean CCC so far, if any epoch ran.
    pub fn best_model(&self) -> Result<Option<TwoStreamModel>> {
        let Some(best) = &self.best else {
            return Ok(None);
        };
        let mut m = TwoStreamModel::new(self.model_config.clone(), 0)?;
        m.load_tensors(&best.tensors)?;
        Ok(Some(m))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string(self)?;
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let ck: Checkpoint = serde_json::from_str(&text)?;
        if ck.format != CHECKPOINT_FORMAT {
            return Err(Error::Validation(format!(
                "{}: unsupported checkpoint format {:?}",
                path.display(),
                ck.format
            )));
        }
        Ok(ck)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn rng_state_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        rng.set_stream(3);
        for _ in 0..17 {
            rng.random::<u64>();
        }
        let mut restored = RngState::capture(&rng).restore().unwrap();
        let a: Vec<u32> = (0..10).map(|_| rng.random()).collect();
        let b: Vec<u32> = (0..10).map(|_| restored.random()).collect();
        assert_eq!(a, b);
    }
}
