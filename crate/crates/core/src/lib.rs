pub mod cluster;
pub mod diagnostics;
pub mod error;
pub mod estimators;
pub mod linalg;
pub mod linreg;
pub mod paneldata;
pub mod probdist;
pub mod simulate;
pub mod unitroot;

pub use error::{Error, Result};
