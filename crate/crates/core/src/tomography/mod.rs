//! Fermionic Gaussian tomography and property testing built on the Haar
//! POVM over pure Gaussian states.

mod dimension;
mod povm;
mod protocols;

pub use dimension::{dimension_ratio, gram_rank, ratio_f64, rep_dimension, RepDimension};
pub use povm::{povm_sample, PovmOutcome, PovmProblem, PovmSamplerConfig, PovmTarget, SamplerMethod};
pub use protocols::{
    detect_parity, even_sector_weight, far_state, gaussianity_test, lower_bound_report, max_gaussian_overlap,
    mixed_tomography, moment_check, pure_tomography, sample_overlaps, test_copies, Estimate, MixedRoute,
    MixedTomography, MomentReport, OverlapCertificate, TestConstants, TestDecision, TestOutcome, TomographyResult,
    PARITY_THRESHOLD,
};
