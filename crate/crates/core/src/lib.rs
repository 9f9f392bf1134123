//! Semantic data catalog core: resources, deep links, the triple store,
//! column profiling and report rendering.

pub mod deeplink;
pub mod graphstore;
pub mod profiler;
pub mod reportgen;
pub mod resources;
pub mod vocab;
