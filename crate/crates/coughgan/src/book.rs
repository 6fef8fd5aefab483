//! The user guide, compiled into rustdoc so `cargo test --doc` runs every
//! code block in the book. mdbook renders the same files from `book/`; this
//! module is what keeps the two in sync.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/preprocessing.md")]
pub mod preprocessing {}

#[doc = include_str!("../../../book/src/spectrograms.md")]
pub mod spectrograms {}

#[doc = include_str!("../../../book/src/tensor-core.md")]
pub mod tensor_core {}

#[doc = include_str!("../../../book/src/adversarial-training.md")]
pub mod adversarial_training {}

#[doc = include_str!("../../../book/src/augmentation.md")]
pub mod augmentation {}

#[doc = include_str!("../../../book/src/pipeline.md")]
pub mod pipeline {}
