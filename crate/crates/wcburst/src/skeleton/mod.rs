//! Singular skeletons: fine-scale fronts, jump loci, the computable
//! conditions behind the pulse and burst constructions, and the burst orbits
//! themselves.

mod fronts;
mod lemmas;
mod orbit;
mod reduced;
mod standing;
mod traveling;

pub use fronts::*;
pub use lemmas::*;
pub use orbit::*;
pub use reduced::*;
pub use standing::*;
pub use traveling::*;

use thiserror::Error;

use crate::unfolding::UnfoldingError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SkeletonError {
    #[error(transparent)]
    Unfolding(#[from] UnfoldingError),
    #[error("no w admits three roots at z = {z}")]
    NoBistableRange { z: f64 },
    #[error("no equal-area front exists at z = {z}")]
    NoEqualArea { z: f64 },
    #[error("slice at w = {w}, z = {z} is not bistable")]
    NotBistable { w: f64, z: f64 },
    #[error("shooting left the box |u|, |v| <= 50 at c = {c}")]
    ShootingDiverged { c: f64 },
    #[error("jump locus radicand is negative at z = {z}")]
    RadicandNegative { z: f64 },
    #[error("branch parameterization breaks at w = {w}")]
    BranchGap { w: f64 },
    #[error("arc reached a fold near w = {w}, z = {z}")]
    FoldCollision { w: f64, z: f64 },
    #[error("final arc grazes the merge point: |z - z*| = {gap:e}")]
    NonGenericGrazing { gap: f64 },
    #[error("no arc crosses the symmetry section inside the validity window")]
    NoSymmetricCrossing,
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("integration failed: {0}")]
    Integration(String),
}
