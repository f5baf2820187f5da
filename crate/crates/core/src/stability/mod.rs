//! Second variation of radial profiles: block assembly, spectra, instability directions.

mod eigen;
mod forms;
mod lq;
mod search;
mod verdict;

pub use eigen::{count_below, dense_eigenvalues, smallest, BlockTridiag, Eigenpair};
pub use forms::{
    assemble_block, assemble_ia1_tilde, assemble_ia_001, assemble_ia_02, assemble_ia_n,
    assemble_ib_mode, assemble_ib_tilde, assemble_j, ib_direct, ib_first_mode, ib_partner,
    BlockLabel, QuadraticFormBlock,
};
pub use lq::{lq34_at, lq_from_moments, lq_matrix, rotate34, Matrix5};
pub use search::{
    far_field_radius, instability_search, log_tent, reduced_instability_value, tent_family,
    NegativeDirection, SearchOptions,
};
pub use verdict::{
    block_labels, cross_check, full_verdict, BlockSpectrum, CrossCheck, GrowthRow, SpectralReport, Verdict,
    VerdictOptions,
};
