//! Finite quotients of residually finite groups, their Cayley graphs, and the
//! coarse geometry of the resulting box spaces.

pub mod cli;
pub mod element;
pub mod embedding;
pub mod error;
pub mod family;
pub mod folner;
pub mod graph;
pub mod groups;
pub mod ring;
pub mod spectral;
pub mod topology;
pub mod tower;
pub mod union;
pub mod words;

pub use error::{Error, Result};
