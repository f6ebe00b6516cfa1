//! Usefulness classification of Boolean predicates for Max-CSP: Fourier
//! tools, moment-space feasibility tests, separating quadratics, planted
//! instances, SDP rounding, and dictatorship tests.

pub mod dictator;
pub mod error;
pub mod exact;
pub mod fourier;
pub mod instance;
pub mod lp;
pub mod measure;
pub mod predicates;
pub mod quadsign;
pub mod report;
pub mod rounding;
pub mod sdp;
pub mod separate;
pub mod univariate;

pub use error::{Error, Result};
pub use fourier::{MultilinearPoly, Predicate};
pub use instance::{Assignment, Constraint, Instance};
pub use measure::Measure;
pub use separate::Quadratic;
