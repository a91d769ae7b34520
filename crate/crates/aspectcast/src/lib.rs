//! File formats, configuration and the `aspectcast` command line on top
//! of `aspectcast-core`.

pub mod bundled;
pub mod config;
pub mod formats;
pub mod pipeline;
