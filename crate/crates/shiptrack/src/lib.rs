//! File formats, command-line tool, and end-to-end checks for
//! [`shiptrack_core`].

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ais;
pub mod cli;
pub mod compare;
pub mod error;
pub mod frames;
pub mod outputs;
pub mod pgm;
pub mod render;
pub mod scene;
pub mod timefmt;
pub mod wind;

pub use error::{Error, Result};
pub use shiptrack_core as core;
