//! Fermionic modes via Jordan–Wigner, Gaussian unitaries and states,
//! covariance matrices, and the fermionic purification channel.

mod gaussian;
mod purify;
mod system;

pub use gaussian::{
    adjoint_rotation, covariance, covariance_pure, gaussian_mixed_state, gaussian_state_from_covariance,
    gaussian_unitary, gaussianity_defect, gaussianity_residuals, hamiltonian_for_rotation, is_gaussian_pure,
    majorana_gram, pure_gaussian_overlap, pure_state_from_covariance, random_gaussian_unitary, random_pure_gaussian, reference_covariance,
    reference_state, rotation_log, rotation_to_covariance, CovarianceMatrix, Parity, QuadraticHamiltonian,
};
pub use purify::{
    diagonal_purification_circuit, diagonal_purification_closed_form, fermi_purify_channel,
    signed_standard_purification, FermionChannel, GaussianCopiesSampler, FERMION_BUDGET,
};
pub use system::{apply_majorana, gamma, DoubledSystem, FermionSystem};
