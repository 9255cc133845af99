//! SECDED environment. An encoder and a decoder instance are relayed by
//! the driver, which corrupts up to two codeword bits in between.

use std::fmt;
use std::rc::Rc;

use crate::crv::{pick_flip_indices, randomize, RandField, Randomizable, Rng, SamplingPolicy};
use crate::dut::{attach_codec, CodecPorts, Secded};
use crate::error::{Error, Result};
use crate::fcov::{Covergroup, Coverpoint};
use crate::sim::{SignalId, Sim};
use crate::tlm::{Sequence, SequenceCtx};
use crate::uvm::{Component, Level, PhaseCtx, Reporter, RunTask};

use super::common::{aligned, sequence_task, Bfm, Checker, Env, EnvSpec, MismatchLog, PinDriver, Probe, Sample};

pub const DEFAULT_TRANSACTIONS: u64 = 30_000;
pub const DATA_WIDTH: u32 = 32;
pub const GROUP: &str = "ecc.cg_1";

/// Probability of injecting zero, one and two bit flips.
pub const FLIP_WEIGHTS: [f64; 3] = [0.25, 0.5, 0.25];

pub const DATA_RANGES: [(i128, i128); 8] = [
    (0, 2975706),
    (2975707, 10295960),
    (10295961, 56784980),
    (56784981, 130000000),
    (130000001, 789394219),
    (789394220, 1248579698),
    (1248579699, 2000000000),
    (2000000001, 2147483647),
];

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EccSeqItem {
    /// 1 disables correction in the decoder.
    pub correct_n: u8,
    pub datain: u32,
    /// Check word expected from the encoder.
    pub chkin: u8,
    /// Codeword bit indices to corrupt, sorted and distinct.
    pub flips: Vec<usize>,
}

impl fmt::Display for EccSeqItem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "data={:#010x} chk={:#04x} correct_n={} flips={:?}",
            self.datain, self.chkin, self.correct_n, self.flips
        )
    }
}

impl Randomizable for EccSeqItem {
    fn rand_fields(&self) -> Vec<RandField> {
        vec![
            RandField::nonrand("correct_n", 1, false),
            RandField::rand("datain", DATA_WIDTH, false),
        ]
    }

    fn assign(&mut self, field: &str, value: i128) {
        match field {
            "correct_n" => self.correct_n = value as u8,
            "datain" => self.datain = value as u32,
            _ => {}
        }
    }
}

/// `count` random words with 0, 1 or 2 injected flips.
pub struct EccSeq {
    pub count: u64,
    pub correct_n: u8,
    pub rng: Rng,
}

impl Sequence<EccSeqItem> for EccSeq {
    async fn body(&mut self, ctx: &mut SequenceCtx<EccSeqItem>) -> Result<()> {
        let code = Secded::new(DATA_WIDTH)?;
        let width = code.codeword_width() as usize;
        for _ in 0..self.count {
            ctx.start_item().await?;
            let mut item = EccSeqItem {
                correct_n: self.correct_n,
                ..EccSeqItem::default()
            };
            randomize(&mut item, &mut self.rng, SamplingPolicy::UniformOverDomain)?;
            item.chkin = code.encode(item.datain as u128) as u8;
            let n = self.rng.weighted_index(&FLIP_WEIGHTS);
            item.flips = pick_flip_indices(width, n, &mut self.rng)?;
            ctx.finish_item(item).await?;
        }
        Ok(())
    }
}

struct EccPins {
    code: Secded,
    enc: CodecPorts,
    dec: CodecPorts,
    flips: SignalId,
}

impl PinDriver<EccSeqItem> for EccPins {
    async fn drive(&mut self, sim: &Sim, item: Option<EccSeqItem>) -> Result<()> {
        let Some(t) = item else { return Ok(()) };
        sim.write_u64(self.enc.datain, t.datain as u64)?;
        // let the encoder settle before relaying its outputs
        sim.timer(1).await?;
        let (mut data, mut check) = (
            sim.read_u64(self.enc.dataout)? as u128,
            sim.read_u64(self.enc.chkout)? as u128,
        );
        if check != t.chkin as u128 {
            return Err(Error::Check(format!("encoder produced {check:#x} for {t}")));
        }
        for &i in &t.flips {
            (data, check) = self.code.flip(data, check, i as u32);
        }
        sim.write_u64(self.dec.correct_n, t.correct_n as u64)?;
        sim.write_u64(self.dec.datain, data as u64)?;
        sim.write_u64(self.dec.chkin, check as u64)?;
        sim.write_u64(self.flips, t.flips.len() as u64)
    }
}

pub fn coverage_model() -> Covergroup {
    let mut g = Covergroup::new(GROUP);
    let data = DATA_RANGES.iter().fold(
        Coverpoint::new("data_out").with_source("dec_dataout"),
        |cp, &(lo, hi)| cp.range_bin(&format!("{lo}..{hi}"), lo, hi),
    );
    let chk = Coverpoint::new("chkout")
        .with_source("dec_chkout")
        .range_bin("low", 0, 23)
        .range_bin("mid", 24, 89)
        .range_bin("high", 90, 127);
    g.add_coverpoint(data).expect("fresh group");
    g.add_coverpoint(chk).expect("fresh group");
    g.add_coverpoint(Coverpoint::boolean("err_detect").with_source("dec_err_detect"))
        .expect("fresh group");
    g.add_coverpoint(Coverpoint::boolean("err_multpl").with_source("dec_err_multpl"))
        .expect("fresh group");
    g.add_cross("detectXmultpl", &["err_detect", "err_multpl"])
        .expect("members exist");
    g
}

/// Checks each decoded word against the word that was encoded.
pub struct EccChecker;

impl Checker for EccChecker {
    fn check(&mut self, inputs: &[Sample], outputs: &[Sample], rep: &Reporter) -> Result<()> {
        let mut bad = MismatchLog::new("ECC mismatches");
        let pairs = aligned(inputs, outputs, 0, rep);
        let mut by_flips = [0u64; 3];
        for &(k, i, o) in &pairs {
            let flips = i.require("tb_flips")?;
            by_flips[flips.min(2) as usize] += 1;
            let sent = i.require("enc_datain")?;
            let expected_data = if i.require("dec_correct_n")? == 1 {
                i.require("dec_datain")?
            } else {
                sent
            };
            let got = (o.get("dec_dataout"), o.get("dec_err_detect"), o.get("dec_err_multpl"));
            let ok = match flips {
                0 => got == (Some(expected_data), Some(0), Some(0)),
                1 => got == (Some(expected_data), Some(1), Some(0)),
                _ => {
                    if got.0 != Some(sent) {
                        rep.debug("Decoded data mismatched!!");
                    }
                    (got.1, got.2) == (Some(1), Some(1))
                }
            };
            if ok {
                rep.log(Level::DEBUG, "Test: Yay!!! Passed!");
            } else {
                bad.report(rep, || {
                    format!("transaction {k}: data={sent:#x} flips={flips} got data/detect/multpl {got:?}")
                });
            }
        }
        bad.finish(rep);
        rep.info(&format!(
            "{} words checked ({} clean, {} single, {} double), {} mismatches",
            pairs.len(),
            by_flips[0],
            by_flips[1],
            by_flips[2],
            bad.count()
        ));
        if bad.count() == 0 {
            rep.info("Test: Yay!!! Passed!");
        }
        Ok(())
    }
}

/// Top of the ECC test.
#[derive(Default)]
pub struct EccTest {
    /// Disable correction in the decoder.
    pub no_correct: bool,
}

impl Component for EccTest {
    fn build(&mut self, ctx: &mut PhaseCtx<'_>) -> Result<()> {
        let sim = ctx.sim().clone();
        let code = Secded::new(DATA_WIDTH)?;
        let mut bfm = Bfm::<EccSeqItem>::new(&sim)?;
        let enc = attach_codec(&sim, "enc_", code.clone())?;
        let dec = attach_codec(&sim, "dec_", code.clone())?;
        sim.write_u64(enc.gen, 1)?;
        sim.write_u64(enc.correct_n, 0)?;
        sim.write_u64(dec.gen, 0)?;
        let flips = sim.add_signal("tb_flips", 2)?;
        bfm.set_probes(
            vec![
                Probe::unsigned("enc_datain", enc.datain),
                Probe::unsigned("dec_datain", dec.datain),
                Probe::unsigned("dec_correct_n", dec.correct_n),
                Probe::unsigned("tb_flips", flips),
            ],
            vec![
                Probe::unsigned("dec_dataout", dec.dataout),
                Probe::unsigned("dec_chkout", dec.chkout),
                Probe::unsigned("dec_err_detect", dec.err_detect),
                Probe::unsigned("dec_err_multpl", dec.err_multpl),
            ],
        );
        bfm.start(EccPins { code, enc, dec, flips });
        ctx.uvm().config().borrow_mut().set(None, "*", "BFM", Rc::new(bfm))?;
        ctx.create_with(
            "env",
            Env::<EccSeqItem>::new(EnvSpec {
                checker: Box::new(EccChecker),
                inp_groups: vec![],
                out_groups: vec![coverage_model()],
            }),
        )
    }

    fn run(&mut self, ctx: &mut PhaseCtx<'_>) -> Result<Option<RunTask>> {
        let count = ctx.uvm().transactions().unwrap_or(DEFAULT_TRANSACTIONS);
        ctx.uvm().set_executed(count);
        let seq = EccSeq {
            count,
            correct_n: self.no_correct as u8,
            rng: ctx.rng("seq"),
        };
        Ok(Some(sequence_task(ctx, seq, 2)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn model_shape() {
        let g = coverage_model();
        assert_eq!(g.coverpoints.len(), 4);
        assert_eq!(g.cross("detectXmultpl").unwrap().bin_count(), 4);
    }

    #[test]
    fn flip_mix() {
        let mut rng = Rng::new(11);
        let mut counts = [0u32; 3];
        for _ in 0..40_000 {
            counts[rng.weighted_index(&FLIP_WEIGHTS)] += 1;
        }
        assert!((counts[1] as f64 / 40_000.0 - 0.5).abs() < 0.02, "{counts:?}");
    }
}
