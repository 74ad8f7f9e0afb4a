#![allow(clippy::needless_range_loop)]

pub mod circuit;
pub mod cli;
pub mod contraction;
pub mod fgs;
pub mod hamiltonian;
pub mod lattice;
pub mod mps;
pub mod noise;
pub mod numerics;
pub mod shadows;
pub mod stabilizer;
pub mod timeevol;
pub mod variational;
