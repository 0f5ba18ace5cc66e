//! Accelerated observers in flat and Schwarzschild spacetime, and the
//! indefinite-causal-order protocols built from them.

pub mod figures;
pub mod kinematics;
pub mod numerics;
pub mod protocols;
pub mod quantum;
pub mod schwarzschild;
