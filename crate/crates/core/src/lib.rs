//! Numerical tools for the α-Gauss curvature flow of convex bodies written
//! in terms of their support function.
//!
//! Two backends implement [`ConvexBody`]: closed convex curves sampled by
//! normal angle ([`CurveBody`]) and convex bodies of revolution in ℝ³
//! sampled by the polar angle of the normal ([`AxisymBody`]).

pub mod diagnostics;
pub mod flow;
pub mod geometry;
pub mod lemma_q;
pub mod soliton;

pub use diagnostics::DiagnosticBody;
pub use geometry::{AxisymBody, ConvexBody, CurveBody, GeometryError, Mode};
