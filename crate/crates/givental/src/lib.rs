//! Givental–Teleman reconstruction of higher-genus Gromov–Witten potentials.

pub mod cli;
pub mod convergence;
pub mod fock;
pub mod frobenius;
pub mod potentials;
pub mod rmatrix;
pub mod series;
