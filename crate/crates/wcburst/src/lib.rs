//! Three-scale reaction–diffusion model organized by the winged-cusp
//! singularity: unfolding geometry, singular skeletons of fronts, pulses and
//! bursts, and a method-of-lines simulator with pattern measurement.

pub mod cubic;
pub mod numerics;
pub mod pde;
pub mod scales;
pub mod skeleton;
pub mod unfolding;

pub use scales::ScaleParams;
pub use unfolding::UnfoldingParams;
