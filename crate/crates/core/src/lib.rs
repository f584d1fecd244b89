//! Bernoulli free-boundary problems for the p-Laplacian on planar convex
//! domains, solved in support-function coordinates.
//!
//! Bodies are sampled support functions on a uniform direction grid
//! ([`geometry`]). A quasi-concave potential on a convex ring is stored as the
//! support functions of its level curves and solved by Newton's method
//! ([`ring`]). The exterior and interior free-boundary problems ([`exterior`],
//! [`interior`]) and the Bernoulli constant are built on top, and
//! [`harness`] runs the inequality checks.

pub mod cli;
pub mod error;
pub mod exterior;
pub mod geometry;
pub mod harness;
pub mod interior;
pub mod io;
pub mod minkowski;
pub mod radial;
pub mod report;
pub mod ring;
mod trial;

pub use error::{Error, Result};
