//! Executable combinatorics for finite graphs of groups acting on their
//! Bass–Serre trees.
//!
//! The crate models a graph of groups purely through its half-edge indices
//! and builds the local machinery on top of that data:
//!
//! * [`gog`]: graphs of groups, the `.gog` text format, tree degrees,
//!   augmentation and gluing.
//! * [`gates`]: gate systems, admissibility certificates and escape rays.
//! * [`patches`]: finite admissible subtrees of the Bass–Serre tree, carets,
//!   leaf expansions, histories, enumeration and interval lattices.
//! * [`counts`]: count vectors, histories, realizability, Dickson bases and
//!   the connectivity thresholds for descending links.
//! * [`simplicial`]: finite simplicial complexes, integer homology and the
//!   pseudosimplex connectivity checker.
//! * [`stein_farley`]: vertices of the Stein–Farley complex as count classes
//!   and their descending links, with a tree-level oracle.
//!
//! Data-parallel inner loops go through rayon when the `parallel` feature is
//! enabled (the default) and fall back to sequential iteration otherwise.
//! Results never depend on scheduling.

pub mod counts;
pub mod error;
pub mod gates;
pub mod gog;
pub mod par;
pub mod patches;
pub mod simplicial;
pub mod stein_farley;

pub use error::{Error, Result};
