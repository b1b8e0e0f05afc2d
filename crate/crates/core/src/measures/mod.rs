//! Finite measures, channels, priors and the Rényi quantities built on them.

mod divergence;
mod information;
mod mean;
mod types;

pub use divergence::{binary_renyi_entropy, coarsen_channel, renyi_divergence};
pub use information::{
    gallager_e0, information_derivative, joint_divergence, log_mean_norm, prior_decomposition,
    renyi_information, PriorDecomposition,
};
pub use mean::{mean_density_and_posterior, mean_measure, renyi_mean, THETA_TIE_TOL};
pub use types::{FiniteChannel, FiniteMeasure, MeanMeasure, Pmf, PosteriorMatrix, Prior, PMF_TOL};

pub(crate) use divergence::{coarsen_vec, divergence_raw};
pub(crate) use information::{information_unchecked, joint_pair};
pub(crate) use mean::log_mean;
pub(crate) use types::l1_distance;
