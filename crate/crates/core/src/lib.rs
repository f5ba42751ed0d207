//! Geometry of the space of Riemannian metrics on a discrete torus.
//!
//! Fibres are positive-definite matrices with the conformal metric
//! `tr(x⁻¹ a x⁻¹ b) √det x`, completed to a Euclidean cone. Fields of such
//! values carry the integrated distance `d_E`, its geodesics, and the action
//! of fibrewise isometries and grid diffeomorphisms.

// `!(x > 0.0)` style guards are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod affine;
pub mod cone;
pub mod convergence;
pub mod error;
pub mod fields;
pub mod io;
pub mod isometry;
pub mod sampling;
pub mod spd;

pub use cone::{ConePoint, FiberDilation, FiberIsometry, FibreChart};
pub use error::{GeomError, Result};
pub use fields::{ebin_distance, l2_geodesic, DiscreteManifold, MetricField, TorusGrid};
pub use isometry::{DiffeoAction, EbinIsometry, FiberSection, FieldMap, L2NormalForm};
pub use spd::{Matrix, SpdMatrix, SymMatrix, UnimodularSpd};
