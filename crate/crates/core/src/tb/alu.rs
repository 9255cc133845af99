//! ALU environment: operands drawn uniformly over the coverage ranges,
//! result compared against the golden model one cycle later.

use std::fmt;
use std::rc::Rc;

use crate::crv::{randomize, RandField, Randomizable, Rng, SamplingPolicy};
use crate::dut::{alu_eval, attach_alu, AluOp, AluPorts};
use crate::error::Result;
use crate::fcov::{Covergroup, Coverpoint};
use crate::sim::Sim;
use crate::tlm::{Sequence, SequenceCtx};
use crate::uvm::{Component, PhaseCtx, Reporter, RunTask};

use super::common::{aligned, sequence_task, Bfm, Checker, Env, EnvSpec, MismatchLog, PinDriver, Probe, Sample};

pub const DEFAULT_TRANSACTIONS: u64 = 30_000;
pub const GROUP: &str = "alu.cg_1";

pub const A_RANGES: [(i128, i128); 5] = [
    (-2147483648, -1768769053),
    (-1768769052, -866),
    (-865, 866),
    (867, 1300000000),
    (1300000001, 2147483647),
];

pub const B_RANGES: [(i128, i128); 5] = [
    (-2147483648, -1654895901),
    (-1654895902, -989),
    (-988, 0),
    (1, 1928710300),
    (1928710301, 2147483647),
];

pub const ALL_OPS: [(i128, i128); 1] = [(0, 7)];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AluSeqItem {
    pub a: i32,
    pub b: i32,
    pub op: AluOp,
}

impl Default for AluSeqItem {
    fn default() -> Self {
        Self {
            a: 0,
            b: 0,
            op: AluOp::Add,
        }
    }
}

impl fmt::Display for AluSeqItem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.op.mnemonic(), self.a, self.b)
    }
}

/// An item together with the opcode ranges it may take.
pub struct ConstrainedAlu<'a> {
    pub item: &'a mut AluSeqItem,
    pub op_ranges: &'a [(i128, i128)],
}

impl Randomizable for ConstrainedAlu<'_> {
    fn rand_fields(&self) -> Vec<RandField> {
        let field = |name, ranges: &[(i128, i128)], width, signed| {
            RandField::rand(name, width, signed)
                .inside(ranges)
                .expect("ALU ranges lie inside their domains")
        };
        vec![
            field("a", &A_RANGES, 32, true),
            field("b", &B_RANGES, 32, true),
            field("op", self.op_ranges, 3, false),
        ]
    }

    fn assign(&mut self, field: &str, value: i128) {
        match field {
            "a" => self.item.a = value as i32,
            "b" => self.item.b = value as i32,
            "op" => self.item.op = AluOp::from_code(value as u32).expect("3-bit opcode"),
            _ => {}
        }
    }
}

impl Randomizable for AluSeqItem {
    fn rand_fields(&self) -> Vec<RandField> {
        let mut copy = *self;
        ConstrainedAlu {
            item: &mut copy,
            op_ranges: &ALL_OPS,
        }
        .rand_fields()
    }

    fn assign(&mut self, field: &str, value: i128) {
        ConstrainedAlu {
            item: self,
            op_ranges: &ALL_OPS,
        }
        .assign(field, value)
    }
}

/// `count` random items.
pub struct AluSeq {
    pub count: u64,
    pub op_ranges: Vec<(i128, i128)>,
    pub rng: Rng,
}

impl Sequence<AluSeqItem> for AluSeq {
    async fn body(&mut self, ctx: &mut SequenceCtx<AluSeqItem>) -> Result<()> {
        for _ in 0..self.count {
            ctx.start_item().await?;
            let mut item = AluSeqItem::default();
            randomize(
                &mut ConstrainedAlu {
                    item: &mut item,
                    op_ranges: &self.op_ranges,
                },
                &mut self.rng,
                SamplingPolicy::UniformOverRanges,
            )?;
            ctx.finish_item(item).await?;
        }
        Ok(())
    }
}

struct AluPins(AluPorts);

impl PinDriver<AluSeqItem> for AluPins {
    async fn drive(&mut self, sim: &Sim, item: Option<AluSeqItem>) -> Result<()> {
        if let Some(t) = item {
            sim.write_i64(self.0.a, t.a as i64)?;
            sim.write_i64(self.0.b, t.b as i64)?;
            sim.write_u64(self.0.op, t.op.code() as u64)?;
        }
        Ok(())
    }
}

fn range_label((lo, hi): (i128, i128)) -> String {
    format!("{lo}..{hi}")
}

pub fn coverage_model() -> Covergroup {
    let mut g = Covergroup::new(GROUP);
    let ranged = |name: &str, ranges: &[(i128, i128)]| {
        ranges
            .iter()
            .fold(Coverpoint::new(name), |cp, &r| cp.range_bin(&range_label(r), r.0, r.1))
    };
    let ops = AluOp::ALL.iter().fold(Coverpoint::new("op"), |cp, op| {
        cp.value_bin(op.mnemonic(), op.code() as i128)
    });
    g.add_coverpoint(ranged("a", &A_RANGES)).expect("fresh group");
    g.add_coverpoint(ranged("b", &B_RANGES)).expect("fresh group");
    g.add_coverpoint(ops).expect("fresh group");
    for (name, members) in [
        ("aXb", &["a", "b"][..]),
        ("bXop", &["b", "op"][..]),
        ("aXop", &["a", "op"][..]),
        ("aXbXop", &["a", "b", "op"][..]),
    ] {
        g.add_cross(name, members).expect("members exist");
    }
    g
}

/// Compares `r` one cycle after each valid input against [`alu_eval`].
pub struct AluChecker;

impl Checker for AluChecker {
    fn check(&mut self, inputs: &[Sample], outputs: &[Sample], rep: &Reporter) -> Result<()> {
        let mut bad = MismatchLog::new("ALU mismatches");
        let pairs = aligned(inputs, outputs, 1, rep);
        for &(k, i, o) in &pairs {
            let op = AluOp::from_code(i.require("op")? as u32)?;
            let expected = alu_eval(i.require("a")? as u32, i.require("b")? as u32, op);
            match o.get("r") {
                Some(r) if r as u32 == expected => {}
                got => bad.report(rep, || {
                    format!("transaction {k}: {i} expected r={expected}, got {got:?}")
                }),
            }
        }
        bad.finish(rep);
        rep.info(&format!(
            "{} transactions checked, {} mismatches",
            pairs.len(),
            bad.count()
        ));
        Ok(())
    }
}

/// Top of the ALU test.
#[derive(Default)]
pub struct AluTest {
    /// Opcode constraint; all opcodes when `None`.
    pub op_ranges: Option<Vec<(i128, i128)>>,
}

impl Component for AluTest {
    fn build(&mut self, ctx: &mut PhaseCtx<'_>) -> Result<()> {
        let mut bfm = Bfm::<AluSeqItem>::new(ctx.sim())?;
        let p = attach_alu(ctx.sim(), bfm.clk)?;
        bfm.set_probes(
            vec![
                Probe::signed("a", p.a),
                Probe::signed("b", p.b),
                Probe::unsigned("op", p.op),
            ],
            vec![Probe::unsigned("r", p.r)],
        );
        bfm.start(AluPins(p));
        ctx.uvm().config().borrow_mut().set(None, "*", "BFM", Rc::new(bfm))?;
        ctx.create_with(
            "env",
            Env::<AluSeqItem>::new(EnvSpec {
                checker: Box::new(AluChecker),
                inp_groups: vec![coverage_model()],
                out_groups: vec![],
            }),
        )
    }

    fn run(&mut self, ctx: &mut PhaseCtx<'_>) -> Result<Option<RunTask>> {
        let count = ctx.uvm().transactions().unwrap_or(DEFAULT_TRANSACTIONS);
        ctx.uvm().set_executed(count);
        let seq = AluSeq {
            count,
            op_ranges: self.op_ranges.clone().unwrap_or_else(|| ALL_OPS.to_vec()),
            rng: ctx.rng("seq"),
        };
        Ok(Some(sequence_task(ctx, seq, 3)?))
    }
}
