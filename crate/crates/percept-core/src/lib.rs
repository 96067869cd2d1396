//! Linear-Gaussian structural causal models, interventions, receiver
//! profiles, and perception analysis.

pub mod abstraction;
pub mod error;
pub mod gaussian;
pub mod graph;
pub mod intervention;
pub mod perception;
pub mod profile;
pub mod sampler;
pub mod scm;

pub use abstraction::{apply_omega, check_exact_transformation, check_exact_transformation_with};
pub use abstraction::{omega_equal_split, tau_pushforward};
pub use abstraction::{ConsistencyReport, ConsistencyRow, OmegaRule};
pub use error::{Error, Result};
pub use gaussian::{implied_distribution, kl_divergence, partial_correlation, wasserstein2};
pub use gaussian::{GaussianDist, Metric};
pub use graph::{CausalGraph, FactorizationTerms};
pub use intervention::{apply_do, implied_poset};
pub use intervention::{DistributionPoset, InterventionSet, InterventionSpec};
pub use perception::{
    causal_perception, check_conjunction, classify_kind, observational_perception, pib_report,
};
pub use perception::{
    Aggregation, DistanceRow, FallacyVerdict, PerceptionKind, PerceptionReport, PibReport, PibRow,
};
pub use profile::{assemble_high_level, assemble_low_level};
pub use profile::{
    AssumedEdge, InterventionGrid, ReceiverProfile, Signification, SignificationKind, Tau,
};
pub use sampler::SampleMatrix;
pub use sampler::{
    empirical_distribution, empirical_moments, mc_distance, sample, sample_with_workers,
};
pub use scm::{FaithfulnessFlag, LinearScm, MarkovEntry};
