//! Exact optimization engine for neutral-host RAN and spectrum sharing.
//!
//! A [`Scenario`](domain::Scenario) describes cell sites laid out on a grid
//! of areas, the PRB pools of each spectrum band, which sites interfere, and
//! the tenant requests to be served. The [`solver`] computes the
//! value-maximal set of requests that can be given a contiguous PRB window
//! at a covering site, subject to interference, band support and
//! single-band restrictions. Every other module exists to check that answer
//! from an independent angle ([`feasibility`], [`oracle`], [`rlt`]) or to
//! run it at scale ([`sim`]).

pub mod domain;
pub mod error;
pub mod feasibility;
pub mod oracle;
pub mod reduction;
pub mod rlt;
pub mod sim;
pub mod solver;

mod bitset;

pub use error::{Error, Result};
