//! Stochastic flows on a dyadic time grid: Wiener noise, pullback measures and attractors,
//! evolution systems of measures, an exact finite-state oracle and a stochastic Navier-Stokes model.

pub mod error;
pub mod esm;
pub mod flow;
pub mod measure;
pub mod models;
pub mod oracle;
pub mod time;
pub mod wiener;

pub use error::{Error, Result};
pub use time::DyadicTime;
pub use wiener::{KeySurgery, NoiseRealization, OUConfig, WienerLimits};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/noise.md")]
    mod noise {}
    #[doc = include_str!("../../../book/src/flows.md")]
    mod flows {}
    #[doc = include_str!("../../../book/src/measures.md")]
    mod measures {}
    #[doc = include_str!("../../../book/src/pullback.md")]
    mod pullback {}
    #[doc = include_str!("../../../book/src/oracle.md")]
    mod oracle {}
    #[doc = include_str!("../../../book/src/navier_stokes.md")]
    mod navier_stokes {}
}
