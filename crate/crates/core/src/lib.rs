//! Numerical laboratory for weighted `L_p` models and their amplifications.
//!
//! The crate models a measure space `X` as a finite weighted coordinate
//! space, builds `L_p(X)` linear algebra on top of it, equips
//! amplifications `L ⊗ E` with several norm structures (minimal, maximal,
//! vector-valued, standard extension, induced), and computes two-sided
//! brackets for the p-convex tensor norm together with the inflation
//! construction and a property-check suite for the inequalities these
//! structures satisfy.
//!
//! Every estimate produced by the optimization layers is a certified
//! bracket `[lower, upper]`: lower bounds come from explicit witnesses,
//! upper bounds from exact closed forms, corner enumeration, or envelope
//! inequalities. No routine claims exact values for quantities that are
//! only bracketed.

pub mod error;
pub mod inflation;
pub mod lpcore;
pub mod measure;
pub mod propsuite;
pub mod quantization;
pub mod rng;
pub mod scalar;
pub mod tensor;
pub mod tol;
pub mod underlying;

pub use error::{Error, Result};
pub use lpcore::{LpFunctional, LpOperator, LpVector, NormEstimate};
pub use measure::{CopiedSpace, MeasurableSubset, MeasureSpace, Space};
pub use quantization::{AmplifiedElement, DiamondOp, QuantKind, QuantizedSpace};
pub use tensor::{LowerCertificate, Representation, TensorNormResult};
