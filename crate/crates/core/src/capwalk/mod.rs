//! The cap walk, Brownian motion on the sphere, and distances measured on
//! one-dimensional projections.

pub mod measure;
pub mod walk;

pub use measure::{
    cap_decomposition, dkw_radius, dominance_check, dominance_check_projections, fit_decay_rate, least_squares_slope,
    noise_floor, project_1d, reference_masses, tv_between, tv_to_uniform, CapMixture, DecayFit, DecayRow, Dominance,
    Projected1DMeasure, StepFunction, MIN_BINS,
};
pub use walk::{
    beta_cdf, bm_concentration_check, bm_overlaps, bm_tail_bound, brownian_endpoint, brownian_sphere, cap_walk,
    uniform_projections, BMPath, BmConcentration, CapWalk, TailRow, BM_STABILITY,
};

#[cfg(test)]
mod tests;
