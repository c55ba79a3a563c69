//! Corpus ingestion and cleaning.
//!
//! Raw files pass through four steps in order: [`reformat_records`],
//! [`deduplicate`], [`filter_language`] and [`filter_length`]. Every filter
//! is a pure subsequence operation: surviving records keep their relative
//! order and are never modified.

mod detect;
mod filters;
mod manifest;
mod pipeline;
mod record;
mod reformat;
pub mod table1;

pub use detect::{CharNgramDetector, DetectError, Detection, LanguageDetector};
pub use filters::{
    deduplicate, deduplicate_sharded, filter_language, filter_length, FilterPolicy,
    LanguageTally, PolicyError,
};
pub use manifest::{
    enumerate_directions, CorpusManifest, DirectionRecord, ManifestError, Subset,
};
pub use pipeline::{clean_pairs, PipelineTally};
pub use record::{Provenance, RecordError, SentencePair};
pub use reformat::{reformat_records, RecordFormat, ReformatError, ReformatTally};
