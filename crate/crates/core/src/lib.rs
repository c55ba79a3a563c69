//! Building blocks for training and evaluating a many-to-many multilingual
//! translation system at desk scale: corpus cleaning, subword training,
//! temperature and robust sampling, tagged augmentation, family routing,
//! a toy multi-task trainer, beam search and evaluation metrics.

pub mod augmentation;
pub mod corpus;
pub mod decoding;
pub mod lang;
pub mod lexicon;
pub mod metrics;
pub mod routing;
pub mod sampling;
pub mod synth;
pub mod tokenizer;
pub mod trainer;

pub use corpus::{CorpusManifest, SentencePair};
pub use augmentation::{AugmentationSpec, TranslatorOracle};
pub use decoding::{beam_search, BeamConfig, Hypothesis, ScoringModel};
pub use lang::{Direction, LanguageTag};
pub use metrics::{chrfpp, spbleu, MetricReport};
pub use routing::{route, GroupTable, ModelRegistry};
pub use sampling::{
    chi2_divergence, dro_worst_case, sample_schedule, temperature_distribution, DroConfig,
    DroWeights, SamplingDistribution, Temperature,
};
pub use tokenizer::{SubwordModel, TokenCounter};
pub use trainer::{train, Checkpoint, TaskSuite, TrainConfig};
