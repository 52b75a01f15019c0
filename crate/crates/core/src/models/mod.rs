//! Concrete flow models.

pub mod em;
pub mod linear;
pub mod nse;
pub mod simple;

pub use em::{Drift, EmModel};
pub use linear::{LinearOUModel, PeriodicForcing};
pub use nse::{nse_evolve, NseConfig, NseModel, SpectralField};
pub use simple::{ExponentialFlow, IdentityFlow, ShiftFlow};
