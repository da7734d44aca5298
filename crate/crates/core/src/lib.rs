pub mod corpus;
pub mod discourse;
pub mod embeddings;
pub mod eval;
pub mod evidence;
pub mod features;
pub mod lexicons;
pub mod models;
pub mod pipeline;
pub mod resources;
pub mod text;
pub mod topics;

/// Version of this library, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
