//! Geometry and distribution primitives on the unit sphere S^{d-1}.

pub mod beta;
pub mod quadrature;
pub mod sample;

pub use beta::{ln_gamma, tail_sandwich, tau_of, BetaDist, TailTable, Threshold};
pub use sample::{
    dot, fill_uniform_sphere, norm, sample_cap, sample_shell, sample_uniform_sphere, shifted_threshold, CapSampler,
    CapSpec, UnitVector,
};
