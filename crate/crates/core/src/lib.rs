//! Planning of 5G gNB deployments over a pixel grid under massive-MIMO service
//! constraints and EMF exposure regulation.
//!
//! The crate is organised bottom-up: [`scenario`] describes the world,
//! [`radio`] and [`exposure`] evaluate it, [`optmodel`] holds the exact
//! mixed-integer model and its verifier, [`platea`] and [`baselines`] search
//! for deployments and [`evaluation`] turns plans into metrics and sweeps.

pub mod baselines;
pub mod error;
pub mod evaluation;
pub mod exposure;
pub mod instance;
pub mod optmodel;
pub mod platea;
pub mod radio;
pub mod rng;
pub mod scenario;

pub use error::{Error, Result};
pub use instance::Instance;
