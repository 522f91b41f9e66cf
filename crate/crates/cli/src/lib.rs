//! Sweep orchestration, figure-data reproduction, and serialization on top
//! of the solver crate. The binary in `main.rs` is a thin argument layer
//! over these modules.

pub mod export;
pub mod figures;
