pub mod cli;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod exchange;
pub mod grid;
pub mod modes;
pub mod ode;
pub mod oracle;
pub mod overlaps;
pub mod quadrature;
pub mod roots;
pub mod special;

pub use error::{Error, Result};
