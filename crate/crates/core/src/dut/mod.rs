//! Cycle-level models of the designs under test, plus kernel attachments.

pub mod adc;
pub mod alu;
pub mod ecc;

pub use adc::{attach_adc, quantize, AdcCore, AdcInputs, AdcOutputs, AdcPorts};
pub use alu::{alu_eval, attach_alu, AluOp, AluPorts};
pub use ecc::{attach_codec, CodecPorts, Decoded, Secded};
