//! Four-state bit vectors.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Widest vector a signal may carry.
pub const MAX_WIDTH: u32 = 128;

/// A single four-state bit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Logic {
    Zero,
    One,
    X,
    Z,
}

impl Logic {
    pub fn as_char(self) -> char {
        match self {
            Logic::Zero => '0',
            Logic::One => '1',
            Logic::X => 'X',
            Logic::Z => 'Z',
        }
    }
}

/// A vector of `width` four-state bits.
///
/// Stored as two bit-planes: `unknown` marks X/Z bits, and for those bits
/// `bits` distinguishes X (0) from Z (1). Bits above `width` are always zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LogicValue {
    width: u32,
    bits: u128,
    unknown: u128,
}

fn mask(width: u32) -> u128 {
    if width >= 128 {
        u128::MAX
    } else {
        (1u128 << width) - 1
    }
}

fn check_width(width: u32) -> Result<()> {
    if width == 0 || width > MAX_WIDTH {
        return Err(Error::Config(format!(
            "vector width must be 1..={MAX_WIDTH}, got {width}"
        )));
    }
    Ok(())
}

impl LogicValue {
    /// All bits X.
    pub fn x(width: u32) -> Result<Self> {
        check_width(width)?;
        Ok(Self {
            width,
            bits: 0,
            unknown: mask(width),
        })
    }

    /// All bits Z.
    pub fn z(width: u32) -> Result<Self> {
        check_width(width)?;
        Ok(Self {
            width,
            bits: mask(width),
            unknown: mask(width),
        })
    }

    pub fn from_u128(width: u32, value: u128) -> Result<Self> {
        check_width(width)?;
        if value & !mask(width) != 0 {
            return Err(Error::ValueTooWide { value, width });
        }
        Ok(Self {
            width,
            bits: value,
            unknown: 0,
        })
    }

    pub fn from_u64(width: u32, value: u64) -> Result<Self> {
        Self::from_u128(width, value as u128)
    }

    /// Two's-complement encoding of `value` in `width` bits; errors if it does not fit.
    pub fn from_i64(width: u32, value: i64) -> Result<Self> {
        check_width(width)?;
        if width < 64 {
            let lo = -(1i64 << (width - 1));
            let hi = (1i64 << (width - 1)) - 1;
            if value < lo || value > hi {
                return Err(Error::ValueTooWide {
                    value: value as u64 as u128,
                    width,
                });
            }
        }
        Ok(Self {
            width,
            bits: (value as i128 as u128) & mask(width),
            unknown: 0,
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn is_known(&self) -> bool {
        self.unknown == 0
    }

    pub fn bit(&self, index: u32) -> Logic {
        assert!(index < self.width, "bit {index} out of range");
        let b = (self.bits >> index) & 1 == 1;
        match ((self.unknown >> index) & 1 == 1, b) {
            (false, false) => Logic::Zero,
            (false, true) => Logic::One,
            (true, false) => Logic::X,
            (true, true) => Logic::Z,
        }
    }

    pub fn with_bit(mut self, index: u32, value: Logic) -> Self {
        assert!(index < self.width, "bit {index} out of range");
        let m = 1u128 << index;
        let (u, b) = match value {
            Logic::Zero => (false, false),
            Logic::One => (false, true),
            Logic::X => (true, false),
            Logic::Z => (true, true),
        };
        self.unknown = if u { self.unknown | m } else { self.unknown & !m };
        self.bits = if b { self.bits | m } else { self.bits & !m };
        self
    }

    pub fn to_u128(&self) -> Result<u128> {
        if !self.is_known() {
            return Err(Error::NotAnInteger(self.to_string()));
        }
        Ok(self.bits)
    }

    pub fn to_u64(&self) -> Result<u64> {
        let v = self.to_u128()?;
        u64::try_from(v).map_err(|_| Error::ValueTooWide { value: v, width: 64 })
    }

    /// Sign-extended integer value.
    pub fn to_i128(&self) -> Result<i128> {
        let v = self.to_u128()?;
        if self.width == 128 {
            return Ok(v as i128);
        }
        let sign = 1u128 << (self.width - 1);
        Ok(if v & sign != 0 {
            (v | !mask(self.width)) as i128
        } else {
            v as i128
        })
    }
}

impl fmt::Display for LogicValue {
    /// MSB-first string of `0`, `1`, `X`, `Z`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in (0..self.width).rev() {
            write!(f, "{}", self.bit(i).as_char())?;
        }
        Ok(())
    }
}

impl FromStr for LogicValue {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let width = s.len() as u32;
        let mut v = LogicValue::from_u128(width, 0)?;
        for (i, c) in s.chars().rev().enumerate() {
            let l = match c.to_ascii_uppercase() {
                '0' => Logic::Zero,
                '1' => Logic::One,
                'X' => Logic::X,
                'Z' => Logic::Z,
                other => return Err(Error::Config(format!("invalid logic character `{other}`"))),
            };
            v = v.with_bit(i as u32, l);
        }
        Ok(v)
    }
}
