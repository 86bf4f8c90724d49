//! Behavioral model of a variable aligned-mantissa FP8 digital
//! compute-in-memory macro.
//!
//! - [`fp8`]: FP8 codec for E2M5, E3M4, E4M3 and E5M2
//! - [`dsbp`]: exact reference for shift-aware bitwidth prediction and group alignment
//! - [`mpu`]: fixed-point mantissa prediction unit
//! - [`fiau`]: FIFO-pointer input alignment
//! - [`mac`]: sliced, bit-serial INT MAC array with fusion paths
//! - [`perf`]: calibrated throughput / efficiency model
//! - [`io`]: F8T container and real-valued imports
//! - [`explorer`]: sweeps and Pareto extraction

pub mod dsbp;
pub mod error;
pub mod explorer;
pub mod fiau;
pub mod fp8;
pub mod io;
pub mod mac;
pub mod mpu;
pub mod perf;

pub use error::{Error, Result};
pub use fp8::{DecodedFp8, Fp8Format, Fp8Tensor};
