//! Energy-efficiency optimization for reconfigurable-intelligent-surface
//! (RIS) assisted device-to-device networks.
//!
//! The crate simulates `L` co-channel D2D pairs assisted by reflecting
//! surfaces with a total of `N` passive elements, and maximizes the network
//! energy efficiency (sum rate over total consumed power) by alternating two
//! solvers:
//!
//! * [`beamforming`] — passive phase-shift optimization via fractional
//!   programming, a semidefinite relaxation, and Gaussian randomization,
//! * [`power_control`] — transmit-power optimization via Dinkelbach's method
//!   with an inner difference-of-convex solver.
//!
//! Supporting pieces: [`netmodel`] (geometry + fading), [`system`] (SINR,
//! rate, and power bookkeeping), [`sdp`] (a small dense semidefinite solver),
//! [`oracle`] (brute-force references used by the test suite), and
//! [`harness`] (experiment sweeps, CSV output, CLI).

pub mod beamforming;
pub mod harness;
pub mod netmodel;
pub mod oracle;
pub mod power_control;
pub mod sdp;
pub mod system;
