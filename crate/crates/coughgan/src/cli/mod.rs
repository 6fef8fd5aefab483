//! Operator-facing pipeline driver: configuration, the checkpoint container,
//! subcommand implementations, and plot rendering.

pub mod checkpoint;
pub mod commands;
pub mod config;
pub mod plot;

pub use checkpoint::CheckpointContainer;
pub use commands::{
    cmd_eval, cmd_featurize, cmd_plot, cmd_preprocess, cmd_stats, cmd_synth, cmd_train_clf,
    cmd_train_gan, load_spectrogram_file, test_manifest_hash,
};
pub use config::{derive_seed, PipelineConfig};

use crate::error::Error;

/// Process exit code for an error: 2 config/schema, 3 data, 4 training
/// divergence, 5 I/O.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::Schema(_) => 2,
        Error::Data(_) | Error::Row { .. } | Error::Domain(_) | Error::Shape { .. }
        | Error::Contract(_) => 3,
        Error::Training(_) => 4,
        Error::Io { .. } | Error::Format(_) | Error::UnsupportedFormat(_) => 5,
    }
}
