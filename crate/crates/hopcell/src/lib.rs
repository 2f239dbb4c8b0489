//! Analytical and simulation toolkit for downlink cellular networks that
//! carry device-to-device (D2D) traffic under time-frequency hopping.
//!
//! Base stations, cellular users and D2D transmitters are modelled as
//! independent homogeneous Poisson point processes.  D2D transmitters of
//! each traffic type independently choose D2D mode (time hopping,
//! probability `p_t`) and access each subband independently (frequency
//! hopping, probability `p_f`).  The D2D side either gets a dedicated
//! slice of the band (an `theta` fraction of the subbands) or shares the
//! whole band with the cellular downlink.
//!
//! The crate is organised as four layers:
//!
//! * [`model`] — network parameters, derived load quantities, scenario
//!   files and presets;
//! * [`analytic`] — SINR coverage probabilities, average rates and rate
//!   lower bounds obtained from the point-process analysis;
//! * [`sim`] — an independent Monte Carlo simulator used to validate the
//!   analytic results;
//! * [`optimize`] — optimal hopping probabilities and spectrum partition
//!   for the rate-density objective.
//!
//! All internal quantities use SI units: watts, meters, transmitters per
//! square meter.  Decibel forms exist only at the configuration boundary.

pub mod analytic;
pub mod model;
pub mod numeric;
pub mod optimize;
pub mod report;
pub mod sim;

pub use analytic::{CoverageCurve, LowerBounds, RateReport};
pub use model::{
    AllocationMode, ConfigError, D2dTypeConfig, LinkClass, LoadState, NetworkConfig,
};
pub use optimize::{PartitionSolution, SolveMethod, SplitSweepPoint, ThetaPartitionCoeffs};
pub use sim::{Deployment, EmpiricalCcdf, EmpiricalRates};
