pub mod error;
pub mod experiments;
pub mod finance;
pub mod io;
pub mod lds;
pub mod linalg;
pub mod quad;
pub mod specfun;
pub mod spheremap;
pub mod stats;
pub mod wce;

pub use error::{Error, Result};
