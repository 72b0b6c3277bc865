//! Multi-scale community structure and selective-exposure measurements for
//! bipartite consumer–influencer follow networks.

pub mod annotations;
pub mod error;
pub mod graph;
pub mod indices;
pub mod io;
pub mod partition;
pub mod pipeline;
pub mod scales;
pub mod stats;
pub mod synth;

pub use error::{Error, Result};
pub use graph::{build_bipartite, hyper_cover, project, BipartiteNetwork, HyperCover, Side, WeightedGraph};
pub use partition::Partition;
