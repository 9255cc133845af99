//! 32-bit ALU with a registered result.

use crate::error::{Error, Result};
use crate::sim::{Edge, LogicValue, SignalId, Sim};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AluOp {
    Add = 0,
    Sub = 1,
    Not = 2,
    And = 3,
    Or = 4,
    Xor = 5,
    Nand = 6,
    Nor = 7,
}

impl AluOp {
    pub const ALL: [AluOp; 8] = [
        AluOp::Add,
        AluOp::Sub,
        AluOp::Not,
        AluOp::And,
        AluOp::Or,
        AluOp::Xor,
        AluOp::Nand,
        AluOp::Nor,
    ];

    pub fn from_code(code: u32) -> Result<Self> {
        Self::ALL
            .get(code as usize)
            .copied()
            .ok_or_else(|| Error::Config(format!("ALU opcode {code} out of range")))
    }

    pub fn code(self) -> u32 {
        self as u32
    }

    pub fn mnemonic(self) -> &'static str {
        match self {
            AluOp::Add => "ADD",
            AluOp::Sub => "SUB",
            AluOp::Not => "NOT",
            AluOp::And => "AND",
            AluOp::Or => "OR",
            AluOp::Xor => "XOR",
            AluOp::Nand => "NAND",
            AluOp::Nor => "NOR",
        }
    }
}

/// Golden model. Arithmetic wraps modulo 2^32; `Not` ignores `b`.
pub fn alu_eval(a: u32, b: u32, op: AluOp) -> u32 {
    match op {
        AluOp::Add => a.wrapping_add(b),
        AluOp::Sub => a.wrapping_sub(b),
        AluOp::Not => !a,
        AluOp::And => a & b,
        AluOp::Or => a | b,
        AluOp::Xor => a ^ b,
        AluOp::Nand => !(a & b),
        AluOp::Nor => !(a | b),
    }
}

#[derive(Debug, Clone, Copy)]
pub struct AluPorts {
    pub clk: SignalId,
    pub a: SignalId,
    pub b: SignalId,
    pub op: SignalId,
    pub r: SignalId,
}

/// Adds signals `a`, `b`, `op`, `r` and a flop updating `r` on each rising
/// edge of `clk`. `r` goes X when any input is X.
pub fn attach_alu(sim: &Sim, clk: SignalId) -> Result<AluPorts> {
    let p = AluPorts {
        clk,
        a: sim.add_signal("a", 32)?,
        b: sim.add_signal("b", 32)?,
        op: sim.add_signal("op", 3)?,
        r: sim.add_signal("r", 32)?,
    };
    sim.add_edge_process(clk, Edge::Rising, move |bus| {
        let (a, b, op) = (bus.read(p.a)?, bus.read(p.b)?, bus.read(p.op)?);
        let next = if a.is_known() && b.is_known() && op.is_known() {
            let op = AluOp::from_code(op.to_u64()? as u32)?;
            LogicValue::from_u64(32, alu_eval(a.to_u64()? as u32, b.to_u64()? as u32, op) as u64)?
        } else {
            LogicValue::x(32)?
        };
        bus.write(p.r, next)
    })?;
    Ok(p)
}
