//! Moving-frame analysis of timelike surfaces in Lorentzian 3-space.
//!
//! The pipeline runs: parse an immersion, evaluate 2-jets on a grid, build
//! the principal frame and its invariants, test integrability of the
//! deformation equation, then deform and reconstruct.

pub mod bonnet;
pub mod deformation;
pub mod expr;
pub mod forms;
pub mod frame;
pub mod grid;
pub mod jets;
pub mod minkowski;

pub use bonnet::{
    bonnet_check, default_tolerance, phi_field, solve_t, BonnetReport, Classification,
    PfaffianSystem, PhiError, PhiField, TSolution,
};
pub use deformation::{
    deform_bundle, reconstruct, DeformError, DeformedBundle, FrameState, ReconstructedSurface,
};
pub use expr::{parse_immersion, ExprError, ImmersionExpr};
pub use forms::{Coframe, GridOneForm, GridScalar, GridTwoForm};
pub use frame::{
    identity_suite, principal_frame, AmbientModel, FrameOptions, GeometryError, IdentityResiduals,
    InvariantBundle, NormalOrientation, PrincipalFrame,
};
pub use grid::{Grid, GridError};
pub use jets::{build_grid, JetError, JetGrid, SurfacePatch};
pub use minkowski::{FrameError, LVec3};
