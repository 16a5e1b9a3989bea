//! Constructive machinery for the divergence-form transmission problem
//! `div(a ∇u) = div f` in the plane, where the coefficient `a` is piecewise
//! constant on two externally tangent disks embedded in a matrix phase.
//!
//! The library evaluates the explicit piecewise-holomorphic solution families
//! for this geometry, the infinite change-of-basis matrix that expands circle
//! data in those solutions, method-of-images Green's functions for both the
//! strip model and the tangent-disk geometry, layer/volume potentials, and
//! end-to-end Dirichlet solvers — everything cross-checked against an
//! independent finite-volume oracle.
//!
//! Canonical geometry: the upper disk `𝔅1 = B_1(0,1)` carries coefficient
//! `a0`, the lower disk `𝔅2 = B_1(0,-1)` carries `b0`, and the surrounding
//! matrix `𝔅0` carries 1. The disks touch at the origin (the cusp). Unequal
//! radii are reduced to this picture by a Möbius map.

pub mod basis;
pub mod coeffmatrix;
pub mod dirichlet;
pub mod error;
pub mod fdoracle;
pub mod geometry;
pub mod greens;
pub mod potential;
pub mod series;

mod linalg;
pub mod util;

pub use error::Error;
pub type Result<T> = std::result::Result<T, Error>;

pub use basis::{BasisId, Family, MediumParams, Parity};
pub use geometry::{DiskGeometry, Point, Region, RegionTag};
pub use series::{SeriesValue, TruncationPolicy};
