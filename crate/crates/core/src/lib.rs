//! Physical-layer network coding for the two-way relay channel with
//! two-antenna end nodes: CIOD space-time coding, singular fade analysis,
//! adaptive network-code maps, detectors and a Monte Carlo engine.

#![allow(clippy::needless_range_loop, clippy::type_complexity)]

pub mod channel;
pub mod cli;
pub mod config;
pub mod constellation;
pub mod decode;
pub mod engine;
pub mod linalg;
pub mod netcode;
pub mod stbc;
