//! Numerical toolkit for a flow-conjugated cookie-cutter map of the unit
//! interval: the flow family, the map and its symbolic coding, and distortion
//! and dimension analyses of its Cantor repeller.

pub mod analysis;
pub mod error;
pub mod exec;
pub mod flow;
pub mod map;
pub mod numerics;
pub mod symbolic;

pub use analysis::Analyzer;
pub use error::{Error, Result};
pub use exec::Exec;
