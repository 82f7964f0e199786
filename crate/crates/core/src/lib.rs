//! Numerical construction and verification of `(λ, n+m)`-quasi-Einstein
//! structures.
//!
//! A quasi-Einstein structure is a Riemannian metric `g` together with a
//! positive function `w` solving `Hess w = (w/m)(Ric − λg)`. For integer
//! `m > 1` these are exactly the bases of `(n+m)`-dimensional warped-product
//! Einstein metrics.
//!
//! The crate works on two kinds of closed-form models:
//!
//! * left-invariant metrics on Lie groups, given by structure constants in an
//!   orthonormal frame ([`lie`]), and
//! * cohomogeneity-one warped products `dr² + φ(r)² g_N` ([`warped`]).
//!
//! On top of the curvature kernels, [`qe`] derives the auxiliary quantities
//! `ρ, k̄, μ̄, P, Q`, evaluates the constant-scalar-curvature identities and
//! issues rigidity certificates, and [`family`] builds the four-dimensional
//! solvable examples together with their `m → ∞` solvsoliton limit.
//!
//! All tensors live in a declared-orthonormal frame, so raising and lowering
//! indices is the identity.

// `!(x > 0.0)` is deliberate throughout: NaN must fail every positivity test.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod exec;
pub mod family;
pub mod lie;
pub mod qe;
pub mod tensor;
pub mod warped;

pub use error::{QemError, Result};
pub use exec::Execution;
pub use family::{FamilyParams, FamilyRealization, FamilyVerification, LimitSolvsoliton};
pub use lie::{ConnectionCoeffs, CurvatureData, LieAlgebraMetric, SolitonData};
pub use qe::{Geometry, PQTensors, QEParameters, QEStructure, RigidityReport, RigidityVerdict};
pub use tensor::{CurvTensor4, Spectrum, SymTensor2, Vector};
pub use warped::{CatalogRow, Interval, Profile, ProfileKind, WForm, WarpedProductModel};
