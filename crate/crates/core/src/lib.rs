//! Exact Dempster-Shafer evidence combination over finite frames.
//!
//! The crate covers frames of discernment and refinements ([`frames`]),
//! exact scalar arithmetic including rational functions of two rule slacks
//! ε₁, ε₂ ([`scalars`]), mass functions and Dempster's rule ([`evidence`]),
//! translation of uncertain default rules into mass functions ([`rules`]),
//! built-in worked examples with their closed forms ([`scenarios`]) and a
//! small line-oriented language for writing such examples ([`program`]).

pub mod error;
pub mod frames;
pub mod evidence;
pub mod rules;
pub mod scenarios;
pub mod scalars;
pub mod program;

pub use error::{Error, Result};
