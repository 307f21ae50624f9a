//! Joint user pairing, link selection and power allocation for cooperative
//! NOMA downlinks in hybrid visible-light / RF networks.
//!
//! One LED access point serves `2K` users grouped into `K` strong/weak
//! pairs. Each weak user is served either directly over the optical link or
//! through its strong partner, which decodes the weak message, harvests
//! energy from the received light, and forwards the message over RF.
//!
//! The crate is organised bottom-up:
//!
//! * [`channel`]: user placement, Lambertian optical gain, indoor RF gain;
//! * [`rates`]: achievable rates, harvested relay power, weighted objective;
//! * [`power`]: closed-form pair splits and budget waterfilling;
//! * [`assignment`]: Hungarian pairing of weak to strong users;
//! * [`links`]: exact link selection through the rate-difference matrix;
//! * [`solver`]: the alternating joint optimizer, baselines, exhaustive
//!   oracle and proportional-fair weight updates;
//! * [`sim`]: Monte-Carlo sweeps, fairness metrics and result files.

// `!(x > 0.0)` deliberately rejects NaN alongside out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod assignment;
pub mod channel;
pub mod error;
pub mod links;
pub mod model;
pub mod power;
pub mod rates;
pub mod sim;
pub mod solver;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/channels.md")]
    mod channels {}
    #[doc = include_str!("../../../book/src/rates.md")]
    mod rates {}
    #[doc = include_str!("../../../book/src/power.md")]
    mod power {}
    #[doc = include_str!("../../../book/src/pairing-and-links.md")]
    mod pairing_and_links {}
    #[doc = include_str!("../../../book/src/solver.md")]
    mod solver {}
    #[doc = include_str!("../../../book/src/sweeps.md")]
    mod sweeps {}
}
