//! Simulator-in-the-loop vehicle state estimation.
//!
//! A closed-loop observer wraps any black-box vehicle predictor, augments it
//! with extended states for the tire forces and corrects it with a sparse
//! linear gain. The gain is tuned offline by Bayesian optimization of the
//! full-horizon simulation error.
//!
//! Modules:
//!
//! - [`dynamics`]: benchmark double-track model and the higher-fidelity plant.
//! - [`observer`]: predictor contract, gain templates and the observer loop.
//! - [`tuner`]: cost, Gaussian-process surrogate, Expected Improvement, tuning loop.
//! - [`dataio`]: dataset schema, CSV persistence, twin-experiment generation.
//! - [`harness`]: metrics and comparison reports.
//! - [`xbridge`]: line protocol that lets an external process act as predictor.
//!
//! Runnable walkthroughs live in `crates/core/examples/`.

pub mod dataio;
pub mod dynamics;
pub mod error;
pub mod harness;
pub mod observer;
pub mod tuner;
pub mod xbridge;

pub use error::{
    BridgeError, ConfigError, DataError, DynamicsError, ObserverError, PredictorError, ReportError, TuneError,
};
