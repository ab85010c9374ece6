//! Independent references: exact diagonalization, closed forms and
//! truncated Fock-space sums that share no code with the propagators.

pub mod connected;
pub mod eigen;
pub mod fermi;
pub mod fock;
pub mod sos;
pub mod stats;
pub mod time;
