//! Smooth sandwich approximations of superlevel sets and quantitative
//! shrinking-target statistics on the torus.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod dynamics;
pub mod error;
pub mod experiment;
pub mod grid;
pub mod mollifier;
pub mod runner;
pub mod tail;

pub use error::{Error, Result};
