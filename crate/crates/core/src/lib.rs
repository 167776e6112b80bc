//! Surface energy participation ratios of superconducting pad edges.
//!
//! The crate models a single pad edge in cross-section — film, native
//! surface oxide, substrate trench and undercut — together with a mirrored
//! ground edge across the gap, meshes it, solves the 2D electrostatic
//! problem and reports which fraction of the stored electric energy sits in
//! each lossy layer. A small analysis layer relates those participations to
//! measured qubit quality factors.
//!
//! ```
//! use sidewall::geometry::{build_cross_section, GeometryParams};
//!
//! let params = GeometryParams { trench_depth: 100.0, ..GeometryParams::default() };
//! let cs = build_cross_section(&params).unwrap();
//! assert!(sidewall::geometry::validate_cross_section(&cs).is_empty());
//! ```
//!
//! The pipeline, bottom to top:
//!
//! * [`geometry`] — parameter vector to tagged polygons.
//! * [`mesh`] — constrained Delaunay meshing, thin-layer strips, bisection.
//! * [`fem`] — P1/P2 Laplace solve, energies, participation ratios.
//! * [`study`] — sweeps, convergence, optimisation, figure tables.
//! * [`qanalysis`] — quality factors, rank correlations, loss budgets.

pub mod fem;
pub mod fixtures;
pub mod geometry;
pub mod mesh;
pub mod qanalysis;
pub mod study;

mod error;

pub use error::{Error, Result};
