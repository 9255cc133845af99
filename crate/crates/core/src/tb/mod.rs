//! The three verification environments and their registered tests.

pub mod adc;
pub mod alu;
pub mod common;
pub mod ecc;

use crate::error::Result;
use crate::uvm::TestRegistry;

use adc::{AdcScenario, AdcTest};

/// Registry holding every bundled test.
pub fn registry() -> Result<TestRegistry> {
    let mut reg = TestRegistry::new();
    reg.register("alu.base", || Box::new(alu::AluTest::default()))?;
    reg.register("ecc.base", || Box::new(ecc::EccTest::default()))?;
    reg.register("adc.feature_adc", || Box::new(AdcTest::new(AdcScenario::Conversions)))?;
    reg.register("adc.feature_reg", || Box::new(AdcTest::new(AdcScenario::Registers)))?;
    reg.register("adc.stress", || Box::new(AdcTest::new(AdcScenario::Stress)))?;
    Ok(reg)
}
