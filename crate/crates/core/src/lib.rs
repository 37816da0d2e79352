pub mod error;
pub mod lattice;
pub mod rng;
pub mod transition;
pub mod faults;
pub mod analysis;
pub mod treeify;
pub mod engine;
pub mod infobound;
pub mod config;
pub mod cli;

pub use error::{Error, Result};
