pub mod cli;
pub mod closedform;
pub mod error;
pub mod linalg;
pub mod networks;
pub mod observables;
pub mod optimizer;
pub mod sampling;
pub mod states;

pub use error::{Error, Result};
