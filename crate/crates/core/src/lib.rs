//! Estimation of hidden-population sizes from sampled network reports.
//!
//! The crate has three layers:
//!
//! * survey data structures and estimators ([`data`], [`estimators`],
//!   [`sensitivity`], [`variance`]) that operate on aggregate relational
//!   data collected from a frame-population sample and, optionally, an
//!   enriched sample of the hidden population itself;
//! * survey designs and bootstrap resamplers ([`sampling`]);
//! * a simulation laboratory ([`netsim`], [`harness`]) that generates
//!   synthetic populations with a stochastic block model, degrades their
//!   reporting graphs, and replays whole survey designs against exact
//!   census quantities.
//!
//! Everything stochastic is driven by counter-based random streams keyed
//! on `(seed, context)`, so results are identical no matter how many
//! worker threads are used. The `parallel` feature (on by default) runs
//! replicate-level loops on rayon; disabling it leaves a sequential
//! fallback with bit-identical output.

pub mod data;
pub mod estimators;
pub mod exec;
pub mod harness;
pub mod netsim;
pub mod rng;
pub mod sampling;
pub mod sensitivity;
pub mod variance;
