pub mod crv;
pub mod dut;
pub mod error;
pub mod fcov;
pub mod sim;
pub mod tb;
pub mod tlm;
pub mod uvm;

pub use error::{Error, Result};
