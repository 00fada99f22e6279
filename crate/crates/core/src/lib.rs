//! Revenue-maximizing admission prices for K-server loss systems.
//!
//! Customers arrive according to a renewal process, carry an i.i.d. valuation
//! and join only if the posted price does not exceed it. Service is
//! exponential, and an arrival that finds all servers busy is lost. The crate
//! computes:
//!
//! - the optimal uniform (state-independent) price and its blocking
//!   probability ([`uniform_pricing`]);
//! - optimal state-dependent prices under Poisson arrivals by the
//!   bisection fixed point on the average-reward optimality equations
//!   ([`mdp_poisson`]);
//! - the same for general renewal arrivals via departure-count
//!   probabilities ([`mdp_general`]);
//! - the revenue rate of any price vector from the stationary occupancy
//!   ([`stationary`]);
//! - Monte Carlo estimates of all of the above ([`simulator`]).
//!
//! ```
//! use farm_pricer::{mdp_poisson, SystemSpec, ValuationDist};
//!
//! let spec = SystemSpec::poisson(5, 25.0, 2.0, ValuationDist::exponential(1.0)?)?;
//! let sol = mdp_poisson::fixed_point(&spec, 1e-9)?;
//! assert!((sol.theta_star - 7.7262).abs() < 1e-3);
//! # Ok::<(), farm_pricer::Error>(())
//! ```

pub mod arrival;
pub mod error;
pub mod mdp_general;
pub mod mdp_poisson;
pub mod numeric;
pub mod simulator;
pub mod stationary;
pub mod uniform_pricing;
pub mod valuation;

mod system;

pub use arrival::{DepartureMatrix, InterarrivalDist};
pub use error::{Error, Result};
pub use system::{PriceVector, SystemSpec};
pub use valuation::{AuxEval, ValuationDist};
