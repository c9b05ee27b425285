//! File formats, artifacts and the command-line front end for `tchak-core`.

pub mod artifact;
mod cli;
pub mod formats;
pub mod jobs;

pub use cli::{run, Cli};
