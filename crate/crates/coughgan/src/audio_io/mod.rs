//! WAV decode/encode, manifest ingestion, quality filtering, and dataset
//! splitting.

pub mod manifest;
pub mod split;
pub mod wav;

pub use manifest::{
    filter_manifest, load_manifest, manifest_stats, ManifestRecord, ManifestStats, SslStatus,
    Status,
};
pub use split::{balance_classes, stratified_split, DatasetSplit};
pub use wav::{decode_wav, encode_wav, read_wav, write_wav, AudioClip};
