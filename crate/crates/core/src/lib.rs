pub mod certificate;
pub mod contour;
pub mod elliptic;
pub mod error;
pub mod melnikov;
pub mod ode;
pub mod pendulum;
pub mod poincare;
pub mod quad;

pub use error::{MelnikovError, Result};
