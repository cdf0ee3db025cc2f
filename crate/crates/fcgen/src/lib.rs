//! Command-line pipeline around `fcgen-core`: corpus files, prompts for an
//! external text generator, augmented corpora, training manifests and
//! evaluation reports.

pub mod augmentation;
pub mod cli;
pub mod config;
pub mod exchange;
pub mod genclient;
pub mod io;
pub mod meta;
pub mod trainprep;
