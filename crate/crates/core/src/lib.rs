//! Numerical toolkit for graphical hypersurfaces `x ↦ (x, f(x))` in `ℝⁿ⁺¹`:
//! curvature of the graph, radial profiles with prescribed scalar curvature,
//! ADM mass and the Penrose bound, the algebraic identities behind the
//! mean-curvature inequalities, and sliding-comparison experiments.

// Negated comparisons are used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod catalog;
pub mod error;
pub mod geometry;
pub mod graph;
pub mod identities;
pub mod io;
pub mod linalg;
pub mod mass;
pub mod quadrature;
pub mod radial;
pub mod rigidity;
pub mod sampling;
pub mod suites;

pub use catalog::GraphSpec;
pub use error::{Error, Result};
pub use geometry::{curvature_at, CurvaturePoint, DecayReport, MeanConvexityReport};
pub use graph::{Domain, GraphFunction, RadialFunction, RadialGraph};
pub use identities::{hhr_residual, sigma_identity_residual, sigma_inequality_check, HHRReport};
pub use mass::{adm_mass, lam_identity_residual, penrose_report, MassEstimate, PenroseReport};
pub use radial::{solve_radial_from_scalar, SchwarzschildProfile, ScalarSource, TabulatedProfile};
pub use rigidity::{global_ellipticity_check, slide_comparison, SlideOptions, SlideResult};
pub use sampling::SamplePlan;
pub use suites::{run_suite, SuiteId, SuiteOptions, SuiteReport};
