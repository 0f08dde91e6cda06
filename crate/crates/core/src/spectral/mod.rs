//! Spectra of normalized adjacency operators and the bounds built on them.

pub mod bounds;
pub mod operator;
pub mod solver;

pub use bounds::{rank1_deflated_norm, rayleigh_lower_bound, row_sum_bound, spectral_norm, trickle_down_check, Rank1, TrickleDown};
pub use operator::{normalized_adjacency, DenseSymmetric, NormalizedAdjacency, SymmetricOperator};
pub use solver::{
    dense_eigen, dense_spectrum, iteration_cap, lanczos_extremes, second_abs_eigenvalue, second_abs_eigenvalue_with,
    Extremes, Method, SpectralReport, DENSE_LIMIT,
};
