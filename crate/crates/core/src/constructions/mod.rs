//! Explicit ReLU constructions: squaring, bumps, products, and the
//! Hölder-function approximator assembled from them.

pub mod gadgets;
pub mod grid;
pub mod holder;
pub mod support;
pub mod targets;
pub mod taylor;

pub use gadgets::{build_prod2, build_prodd, build_sq, build_xi, xi_value};
pub use grid::{build_grid_cover, BoxIndex, GridCover};
pub use holder::{build_holder_approximator, sup_error, ApproxReport, HolderApproximation};
pub use support::{SupportKind, SUPPORT_NAMES};
pub use targets::{FnTarget, RegistryFunction, TargetFunction, REGISTRY_NAMES};
pub use taylor::{taylor_piece, TaylorPiece};
