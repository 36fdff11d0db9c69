//! Helicoidal surfaces with constant anisotropic mean curvature.
//!
//! The crate builds such surfaces for axially symmetric surface
//! energies `gamma(nu3)` in two ways (a radial first integral for
//! graphs, and the treadmill-sled representation for general
//! helicoidal surfaces), builds the p-norm catenoid/helicoid pairs, and
//! checks everything against independent finite-difference and
//! variational oracles.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod anisotropy;
pub mod error;
pub mod exec;
pub mod fd;
pub mod figures;
pub mod graph;
pub mod io;
pub mod mesh;
pub mod pnorm;
pub mod quad;
pub mod twizzler;
pub mod verify;

pub use anisotropy::{AnisotropyProfile, ProfileKind};
pub use error::{Error, Result};
pub use exec::Exec;
pub use mesh::TriMesh;
