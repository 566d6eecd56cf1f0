//! Six-degree-of-freedom spacecraft rendezvous on SE(3): relative dynamics,
//! potential-field guidance, fixed-time sliding mode control and a
//! fixed-step simulator.

// `!(x > 0.0)` style checks are meant to reject NaN as well
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod apf;
pub mod disturbance;
pub mod dynamics;
pub mod integrator;
pub mod lie;
pub mod smc;
pub mod orbit;
pub mod scenario;
pub mod sim;
pub mod output;
pub mod sweep;
