//! faultforge: fault injection, robustness metrics and a bounded-latency
//! fault lookup table for camera-based lane following.
//!
//! Offline: [`scenario`] -> [`degrade`] / [`genai_client`] -> [`perception`]
//! -> [`metrics`] -> [`faultlut::build`]. Online: [`faultlut::FaultLookupTable::query`].

pub mod degrade;
pub mod faultlut;
pub mod genai_client;
pub mod metrics;
pub mod perception;
pub mod rng;
pub mod scenario;
