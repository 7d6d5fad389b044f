//! Positive-temperature jellium: the two-term free-energy expansion and the
//! numerical ingredients of its correlation estimates.

// `!(x > 0.0)` is used on purpose throughout: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod linalg;
pub mod quadrature;
pub mod quasifree;
pub mod report;
pub mod bounds;
pub mod coulomb;
pub mod eta;
pub mod exchange;
pub mod fock;
pub mod periodic;
pub mod profile;
pub mod statmech;
pub mod verify;

pub use error::{Error, Result};
pub use statmech::{
    critical_density, density_from_fugacity, ideal_free_energy, momentum_occupation, solve_fugacity, Statistics,
    ThermoState,
};
pub use bounds::{h_q, HqPoint, SweepGrid};
pub use coulomb::SplitPotential;
pub use eta::{build_eta, EtaCutoff};
pub use exchange::{exchange_integral, two_term_free_energy, ExchangeIntegral, TwoTermFreeEnergy};
pub use fock::{FockSpace, FockState};
pub use profile::RadialProfile;
pub use quasifree::OnePdm;
pub use report::SweepReport;
pub use verify::{run_suite, Suite, VerifyReport};
