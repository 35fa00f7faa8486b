pub mod born;
pub mod consistency;
mod model;
pub mod qft;
pub mod ts;
pub mod zerorange;
