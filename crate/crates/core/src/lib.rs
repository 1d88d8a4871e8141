//! Single-projection solvers for linear and max-affine programs over
//! polyhedra, with the sharpness machinery that certifies them.
//!
//! The crate is organised bottom-up:
//!
//! - [`numkernel`]: vectors, unit directions, cones, NNLS distances;
//! - [`polyhedron`]: `{x : Ax <= b}`, active sets, normal cones, faces and
//!   the exhaustive vertex-enumeration oracles;
//! - [`projection`]: the production projector and the epigraph lift;
//! - [`sharpness`]: sharpness moduli and KL constants;
//! - [`spp`]: the single-projection procedure and its certificates;
//! - [`regularity`]: subtransversality estimates and distance bounds.
//!
//! ```
//! use spp_core::{Polyhedron, UnitDirection, Vector};
//! use spp_core::spp::{solve_lp_spp, SppOptions, MuChoice};
//!
//! let p = Polyhedron::new(vec![vec![1.0, -1.0], vec![-1.0, -1.0]], vec![0.0, 0.0]).unwrap();
//! let x_star = UnitDirection::from_slice(&[0.0, 1.0]).unwrap();
//! let v = Vector::from_slice(&[-1.0, -0.5]).unwrap();
//! let opts = SppOptions { mu: MuChoice::Explicit(10.0), ..SppOptions::default() };
//! let report = solve_lp_spp(&p, &x_star, &v, &opts).unwrap();
//! assert!(report.solution.norm() < 1e-8);
//! ```

pub mod error;
pub mod extreal;
mod linalg;
pub mod instances;
pub mod maxaffine;
pub mod numkernel;
pub mod polyhedron;
pub mod projection;
pub mod regularity;
pub mod sampling;
pub mod sharpness;
pub mod spp;

pub use error::{Error, Result};
pub use maxaffine::{AffinePiece, MaxAffine};
pub use numkernel::{distance_to_cone, distance_to_convex_hull, distance_to_ray, Cone, UnitDirection, Vector};
pub use polyhedron::{
    active_set, face_of, lp_solve_enumeration, normal_cone_at, project_brute, realizable_active_sets,
    support_function, ActiveSet, FaceDescription, LpResult, LpStatus, Polyhedron,
};
pub use projection::{lift_epigraph, project_epigraph, projection_residual, project_halfspace, project_polyhedron, LiftedEpigraph, ProjectionResult};
pub use regularity::{DistBoundReport, SubtransReport};
pub use sharpness::SharpnessReport;
pub use spp::{CpReport, SppReport};
