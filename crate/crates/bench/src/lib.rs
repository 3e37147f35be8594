//! Benchmark-only crate; see `benches/hot_paths.rs`. The package exists so
//! the workspace keeps measurement code out of the library's dev-dependency
//! graph.
