pub mod alpha;
pub mod convert;
pub mod fetch;
pub mod fit;
pub mod intervene;
pub mod measure;
pub mod replay;
pub mod simulate;
pub mod topologies;
