//! Downlink coverage probability for cellular networks whose base stations
//! form a Ginibre point process, under Nakagami-m fading.
//!
//! The model: base stations are deployed as a Ginibre point process of
//! intensity 1/π on the plane, each transmitting at unit power; a user at the
//! origin attaches to the nearest base station; every link fades independently
//! with a Nakagami-m (power-domain Gamma(m, 1/m)) coefficient; path loss over
//! distance r is r^(-2β) with β > 1; the network is interference-limited. The
//! quantity of interest is the probability that the downlink
//! signal-to-interference ratio exceeds a threshold θ.
//!
//! Two independent evaluation routes are provided and cross-validated:
//!
//! * [`analytic`]: a semi-analytic formula that reduces the coverage
//!   probability to a single outer integral over products and series of
//!   incomplete-Gamma-type integrals, assembled through partition
//!   combinatorics. Exact up to numerical quadrature/truncation, with
//!   certified tail control.
//! * [`simulator`]: Monte Carlo over the radial representation of the
//!   Ginibre process (squared ordered distances are distributed as sorted
//!   independent Gamma(i,1) draws), with three estimators of increasing
//!   variance reduction, plus a Poisson-process baseline for comparison.
//!
//! [`analytic`] also exposes the two high-threshold asymptotic constants
//! (the θ → ∞ tail coefficients for m = 1 and m = ∞) and the Gamma-factor
//! inequality linking them.
//!
//! Supporting modules: [`specfun`] (incomplete Gamma family, Erlang tail,
//! Gamma sampling), [`combinatorics`] (partition index sets, Bell
//! polynomials, derivative transforms), [`quadrature`] (adaptive
//! Gauss-Kronrod integration, Gamma-weighted integrals, certified series
//! truncation), and [`cli`] (the command-line front end used by the `gppcov`
//! binary).
//!
//! # Example
//!
//! ```
//! use gppcov::analytic::{coverage_analytic, ModelParams};
//! use gppcov::quadrature::NumericsPolicy;
//!
//! let p = ModelParams { m: 1, beta: 2.0, theta: 1.0 };
//! let policy = NumericsPolicy::default();
//! let cov = coverage_analytic(&p, &policy).unwrap();
//! assert!(cov.value > 0.60 && cov.value < 0.70);
//! ```

pub mod error;

pub mod analytic;
pub mod cli;
pub mod combinatorics;
pub mod quadrature;
pub mod simulator;
pub mod specfun;

pub use error::{Error, Result};
