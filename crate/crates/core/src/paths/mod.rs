//! Domain types, the valley-free predicate, path sanitizing and topology
//! construction.

mod preprocess;
mod topology;
mod types;
mod valley;

pub use preprocess::{default_assigned, preprocess, PreprocessReport};
pub use topology::{build_topology, LinkObservation, Topology};
pub use types::{AsPath, Asn, Link, RelSet, Relationship};
pub use valley::{hop_pair_ok, is_valley_free};
