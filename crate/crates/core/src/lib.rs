//! Connectivity of one-dimensional vehicular ad-hoc networks in free-flow
//! traffic, under a unit-disc channel and a Rayleigh-fading channel.
//!
//! The crate has two halves. [`analytic`] evaluates link, vehicle and
//! network connectivity probabilities in closed form or by quadrature;
//! [`montecarlo`] samples vehicle placements and channel draws, builds the
//! communication graph ([`graph`]) and estimates the same quantities with
//! confidence intervals.
//!
//! ```
//! use vanet_connectivity::{analytic, db_to_linear, ScenarioParams};
//!
//! let params = ScenarioParams::with_defaults(0.019, db_to_linear(15.0)).unwrap();
//! let p = analytic::p_network_ud(&params);
//! assert!((p - 0.2008).abs() < 1e-3);
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod analytic;
pub mod channel;
pub mod error;
pub mod graph;
pub mod montecarlo;
pub mod numerics;
pub mod scenario;

pub use channel::{db_to_linear, dbm_to_mw, linear_to_db, mw_to_dbm, ChannelModel, LinkBudget, SnrMatrix};
pub use error::{Error, Result};
pub use graph::{ConnectivityDecider, GraphMatrices, ZeroTolerance};
pub use montecarlo::{EnsembleEstimate, MeanEstimate, TrialOutcome, VehicleSide};
pub use scenario::{Placement, ScenarioParams};
