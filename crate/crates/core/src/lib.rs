//! Parallel hybrid projection method for finding a common point of the
//! solution sets of finitely many equilibrium problems, variational
//! inequalities with inverse strongly monotone operators, and fixed-point
//! problems of nonexpansive maps in R^d.
//!
//! Each iteration evaluates every family member independently, keeps the
//! candidate farthest from the current iterate, and projects the anchor `x0`
//! onto an outer approximation of the solution set built from at most four
//! half-spaces. The iterates converge to the projection of `x0` onto the
//! common solution set.
//!
//! ```
//! # fn main() -> Result<(), Box<dyn std::error::Error>> {
//! use hproj::params::{SolverParams, Variant};
//! use hproj::problem::ProblemInstance;
//! use hproj::solver::solve;
//! use hproj::{ConvexSet, NonexpansiveMap, Vector};
//!
//! let disc = |c: [f64; 2]| -> Result<NonexpansiveMap, Box<dyn std::error::Error>> {
//!     Ok(NonexpansiveMap::projection(ConvexSet::new_ball(Vector::new(c.to_vec())?, 1.0)?)?)
//! };
//! let prob = ProblemInstance::new(
//!     ConvexSet::whole_space(2),
//!     vec![],
//!     vec![],
//!     vec![disc([0.0, 0.0])?, disc([1.0, 0.0])?],
//!     Vector::new(vec![2.0, 1.5])?,
//!     None,
//! )?;
//! let res = solve(&prob, &SolverParams::with_variant(Variant::FixedPointOnlyCor36))?;
//! assert!(res.point.distance(&Vector::new(vec![0.8, 0.6])?) < 1e-4);
//! # Ok(())
//! # }
//! ```

pub mod halfspace;
pub mod linalg;
pub mod executor;
pub mod operators;
pub mod params;
pub mod problem;
pub mod random;
pub mod regression;
pub mod resolvent;
pub mod sets;
pub mod solver;
pub mod verify;

pub use linalg::{Matrix, Vector};
pub use operators::{Bifunction, IsmOperator, NonexpansiveMap};
pub use resolvent::ResolventConfig;
pub use sets::{ConvexSet, HalfSpace};
