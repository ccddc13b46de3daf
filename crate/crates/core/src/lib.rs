#![cfg_attr(not(test), no_std)]
#![doc = include_str!("../README.md")]

extern crate alloc;

pub mod deform;
pub mod engine;
pub mod error;
pub mod geometry;
pub mod glue;
pub mod integrator;
pub mod linalg;
pub mod map;
pub mod rational;
pub mod smooth;
pub mod structure;
pub mod text;
pub mod turns;

pub use error::{Error, Result};
