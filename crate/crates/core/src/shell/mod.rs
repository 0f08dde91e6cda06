//! Link structure conditioned on the shells: the expected adjacency `Q` of a
//! link given each vertex's height above the center, its random-walk
//! normalization `Qbar`, typical/outlier shells, and instance checks of the
//! bounds that make `Qbar` close to rank one.

mod checks;
mod matrices;

pub use checks::{
    analyze_shells, classify_shells, degree_concentration_check, max_pair_l1, outlier_ratio_quadrature,
    outlier_ratio_with, ratio_claims_check, row_similarity_check, shell_eta, typical_alpha, DegreeConcentration,
    OutlierRatio, RatioDeviations, RowSimilarity, ShellClasses, ShellReport, ShellSlack,
};
pub use matrices::{
    build_shell_matrices, conditional_edge_prob, min_edge_prob, sample_cap_link, sample_shells, shell_spectral_check,
    CapLink, InvariantErrors, ShellMatrices, ShellSpectrum, ShellVector, SHELL_DENSE_LIMIT,
};
