//! Finite metric measure spaces, curve families and the convex programs
//! for modulus, capacity and minimal gradients.

mod curves;
mod poincare;
mod programs;
mod solve;
mod space;

pub use curves::{is_upper_gradient, line_integral, Curve, CurveFamily, FamilyGenerator, UpperGradientVerdict, UG_TOL};
pub use poincare::{poincare_ratio, PoincareReport};
pub use programs::{capacity, minimal_hajlasz, minimal_upper_gradient, modulus};
pub use solve::{Certificate, SolveResult, FEAS_TOL, STALL_TOL};
pub use space::{Ball, Mms, TRIANGLE_TOL};
