pub mod bcs;
pub mod error;
pub mod game;
pub mod hypergraph;
pub mod linalg;
pub mod operator;
pub mod solver;
pub mod supergame;

pub use error::{Error, Result};
