//! Average mutual information of finite-constellation signaling over
//! mixture-gamma fading channels.
//!
//! The crate covers the full pipeline: Gaussian quadrature rules,
//! constellation geometry, scalar-channel mutual information and MMSE,
//! the Mellin transform of the MMSE, mixture-gamma fading families
//! (Nakagami-m, eta-mu, kappa-mu, Rician, K_G), fading-averaged mutual
//! information with its high-SNR diversity/coding-gain characterization,
//! and optimal power allocation across parallel fading sub-channels.

pub mod ami;
pub mod awgn;
pub mod constellation;
pub mod error;
pub mod mg_fading;
mod numeric;
pub mod power_alloc;
pub mod quadrature;

pub use ami::{
    ami_mc, ami_quadrature, asymptotic_ami, average_gap_direct, characterize_asymptote,
    corollary_asymptote, AsymptoticCharacterization,
};
pub use awgn::{mellin_mmse, mmse, mmse_derivative_check, mutual_information, MellinValue};
pub use constellation::Constellation;
pub use error::{Error, Result};
pub use mg_fading::{EtaMuFormat, FadingParams, MgTerm, MixtureGamma};
pub use power_alloc::{
    asymptotic_allocate, exact_allocate, kkt_residual, limiting_allocate, marginal_rate,
    AllocationMethod, ParallelChannels, PowerPolicy, SubChannel,
};
pub use quadrature::{gauss_hermite, gauss_laguerre, QuadratureKind, QuadratureRule};
