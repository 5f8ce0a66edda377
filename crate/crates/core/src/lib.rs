pub mod config;
pub mod error;
pub mod fem;
pub mod io;
pub mod ic;
pub mod linalg;
pub mod metrics;
pub mod newmark;
pub mod ecsw;
pub mod nnls;
pub mod pipeline;
pub mod pod;
pub mod rom;
pub mod schwarz;

pub use error::{Error, Result};
