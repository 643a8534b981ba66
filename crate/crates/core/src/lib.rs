pub mod covariance;
pub mod cramer_wold;
pub mod error;
pub mod fanova;
pub mod fmri;
pub mod gls;
pub mod linalg;
pub mod rng;
pub mod scenario;
pub mod simulation;
pub mod special;
pub mod spectral;

pub use error::{Error, Result};
