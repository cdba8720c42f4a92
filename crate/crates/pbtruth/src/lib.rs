//! File formats, experiments and the command-line front end for
//! [`pbtruth_core`].

pub mod cli;
pub mod experiments;
pub mod format;
pub mod fuzz;
pub mod pabulib;

pub use pbtruth_core as core;
