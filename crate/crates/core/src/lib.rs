pub mod bits;
pub mod cli;
pub mod circuits;
pub mod constructions;
pub mod entanglement;
pub mod error;
pub mod gates;
pub mod linalg;
pub mod search;
pub mod state;
