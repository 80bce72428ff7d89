//! Energy-efficient power control for multi-hop DS-CDMA networks.
//!
//! Nodes choose transmit powers (and, in the unrestricted game, linear
//! receivers) to maximize delivered bits per joule. The crate builds random
//! multi-hop scenarios, computes SINRs for matched-filter, decorrelator and
//! MMSE receivers, finds the Nash equilibrium by best-response sweeps,
//! computes SINR-balanced social optima, and evaluates the large-system
//! equations for random spreading.

// Argument checks are written `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotic;
pub mod error;
pub mod experiment;
pub mod game;
pub mod network;
pub mod receivers;
pub mod rng;
pub mod roots;
pub mod social;
pub mod validate;

pub use asymptotic::{AsymptoticParams, GainLaw, InterferenceProfile, LargeSystem, LargeSystemConfig};
pub use error::{Error, Result};
pub use experiment::{ExperimentSpec, Mode, ResultRow, RunStatus};
pub use game::{EfficiencyFunction, GameConfig, GameOutcome};
pub use network::{Network, NetworkConfig, Scenario, SpreadingSet};
pub use receivers::{ReceiverBank, ReceiverKind, SinrEngine};
pub use social::{BalancedSolution, OperatingPoint, WeightVector};
