//! ADC environment: one bus operation per clock cycle, checked against a
//! cycle-accurate reference model built only from the monitored traces.

use std::fmt;
use std::rc::Rc;

use crate::crv::{randomize, RandField, Randomizable, Rng, SamplingPolicy};
use crate::dut::adc::{ADDR_CONFIG, ADDR_DUMMY, ADDR_TRIGGER};
use crate::dut::{attach_adc, AdcCore, AdcInputs, AdcPorts};
use crate::error::Result;
use crate::fcov::{Covergroup, Coverpoint};
use crate::sim::Sim;
use crate::tlm::{Sequence, SequenceCtx};
use crate::uvm::{Component, PhaseCtx, Reporter, RunTask};

use super::common::{sequence_task, Bfm, Checker, Env, EnvSpec, MismatchLog, PinDriver, Probe, Sample};

pub const DEFAULT_TRANSACTIONS: u64 = 1000;
pub const INPUT_GROUP: &str = "adc.cg_1";
pub const OUTPUT_GROUP: &str = "adc.cg_2";

/// Longest conversion (factor 8) plus pipeline slack.
pub const DRAIN_CYCLES: u32 = 4 * 8 + 4;

pub const BYTE_RANGES: [(i128, i128); 5] = [(0, 50), (51, 101), (102, 152), (153, 203), (204, 255)];
pub const MILLIVOLT_RANGES: [(i128, i128); 5] = [
    (-10000, -6001),
    (-6000, -2001),
    (-2000, 1999),
    (2000, 5999),
    (6000, 10000),
];

/// Pin values for one cycle. `en == false` is an idle cycle that still
/// drives `analog`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AdcStimulus {
    pub en: bool,
    /// 1 = write.
    pub rw: bool,
    pub addr: u8,
    pub data: u8,
    pub analog: f64,
}

impl AdcStimulus {
    pub fn idle(analog: f64) -> Self {
        Self {
            analog,
            ..Self::default()
        }
    }

    pub fn read(addr: u8, analog: f64) -> Self {
        Self {
            en: true,
            addr,
            analog,
            ..Self::default()
        }
    }

    pub fn write(addr: u8, data: u8, analog: f64) -> Self {
        Self {
            en: true,
            rw: true,
            addr,
            data,
            analog,
        }
    }
}

impl fmt::Display for AdcStimulus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.en, self.rw) {
            (false, _) => write!(f, "idle {:+.4} V", self.analog),
            (true, false) => write!(f, "read [{}] {:+.4} V", self.addr, self.analog),
            (true, true) => write!(f, "write [{}]={:#04x} {:+.4} V", self.addr, self.data, self.analog),
        }
    }
}

/// Integer fields of a random bus operation; the analog level is drawn
/// separately since the randomizer works on integers.
impl Randomizable for AdcStimulus {
    fn rand_fields(&self) -> Vec<RandField> {
        vec![
            RandField::rand("en", 1, false),
            RandField::rand("rw", 1, false),
            RandField::rand("addr", 8, false),
            RandField::rand("data", 8, false),
        ]
    }

    fn assign(&mut self, field: &str, value: i128) {
        match field {
            "en" => self.en = value == 1,
            "rw" => self.rw = value == 1,
            "addr" => self.addr = value as u8,
            "data" => self.data = value as u8,
            _ => {}
        }
    }
}

/// Which ADC test a sequence implements.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdcScenario {
    /// Reset values and register field behavior.
    Registers,
    /// Known voltages converted at every oversampling factor.
    Conversions,
    /// Random register traffic, triggers and voltages.
    Stress,
}

pub struct AdcSeq {
    pub scenario: AdcScenario,
    pub count: u64,
    pub rng: Rng,
}

/// Voltages converted by the conversion test; the last one is redrawn
/// each round.
const KNOWN_VOLTS: [f64; 6] = [-10.0, 10.0, 0.0, -5.0, 5.0, 2.5];

impl AdcSeq {
    /// The full stimulus list, truncated or padded to `count`.
    pub fn plan(&mut self) -> Result<Vec<AdcStimulus>> {
        let n = self.count as usize;
        let mut ops = Vec::with_capacity(n);
        match self.scenario {
            AdcScenario::Registers => {
                use AdcStimulus as S;
                ops.extend([
                    S::read(ADDR_DUMMY, 0.0),
                    S::read(ADDR_CONFIG, 0.0),
                    S::read(ADDR_TRIGGER, 0.0),
                    S::write(ADDR_CONFIG, 0b11, 0.0),
                    S::read(ADDR_CONFIG, 0.0),
                    S::write(ADDR_CONFIG, 0xFC, 0.0),
                    S::read(ADDR_CONFIG, 0.0),
                    S::write(ADDR_DUMMY, 0xFF, 0.0),
                    S::read(ADDR_DUMMY, 0.0),
                    S::write(ADDR_TRIGGER, 0xFE, 0.0),
                    S::read(ADDR_TRIGGER, 0.0),
                    S::read(0x80, 0.0),
                    S::write(0xFF, 0x55, 0.0),
                ]);
                while ops.len() < n {
                    let mut op = AdcStimulus::default();
                    randomize(&mut op, &mut self.rng, SamplingPolicy::UniformOverDomain)?;
                    if self.rng.below(4) == 0 {
                        op.addr &= 3;
                    }
                    if op.rw && op.addr == ADDR_TRIGGER {
                        // register traffic only: never start a conversion
                        op.data &= !1;
                    }
                    ops.push(op);
                }
            }
            AdcScenario::Conversions => {
                let mut round = 0u8;
                while ops.len() < n {
                    let code = round % 4;
                    ops.push(AdcStimulus::write(ADDR_CONFIG, code, 0.0));
                    for (i, &v) in KNOWN_VOLTS.iter().enumerate() {
                        let v = if i + 1 == KNOWN_VOLTS.len() {
                            self.rng.uniform_f64(-10.0, 10.0)
                        } else {
                            v
                        };
                        ops.push(AdcStimulus::write(ADDR_TRIGGER, 1, v));
                        // hold the level for the whole conversion
                        for _ in 0..4 * (1u32 << code) {
                            ops.push(AdcStimulus::idle(v));
                        }
                        ops.push(AdcStimulus::read(ADDR_TRIGGER, v));
                    }
                    round = round.wrapping_add(1);
                }
            }
            AdcScenario::Stress => {
                while ops.len() < n {
                    let analog = self.rng.uniform_f64(-10.0, 10.0);
                    let op = match self.rng.weighted_index(&[0.3, 0.2, 0.15, 0.25, 0.1]) {
                        0 => AdcStimulus::idle(analog),
                        1 => AdcStimulus::read(self.rng.below(256) as u8, analog),
                        2 => AdcStimulus::write(ADDR_CONFIG, self.rng.below(256) as u8, analog),
                        3 => AdcStimulus::write(ADDR_TRIGGER, self.rng.below(256) as u8, analog),
                        _ => AdcStimulus::write(self.rng.below(256) as u8, self.rng.below(256) as u8, analog),
                    };
                    ops.push(op);
                }
            }
        }
        ops.truncate(n);
        Ok(ops)
    }
}

impl Sequence<AdcStimulus> for AdcSeq {
    async fn body(&mut self, ctx: &mut SequenceCtx<AdcStimulus>) -> Result<()> {
        for op in self.plan()? {
            ctx.send(op).await?;
        }
        Ok(())
    }
}

struct AdcPins(AdcPorts);

impl AdcPins {
    fn apply(&self, sim: &Sim, s: &AdcStimulus) -> Result<()> {
        sim.write_u64(self.0.en_in, s.en as u64)?;
        sim.write_u64(self.0.rw_in, s.rw as u64)?;
        sim.write_u64(self.0.addr_in, s.addr as u64)?;
        sim.write_u64(self.0.data_in, s.data as u64)?;
        sim.write_real(self.0.analog_in, s.analog)
    }
}

impl PinDriver<AdcStimulus> for AdcPins {
    async fn drive(&mut self, sim: &Sim, item: Option<AdcStimulus>) -> Result<()> {
        match item {
            Some(s) => self.apply(sim, &s),
            None => sim.write_u64(self.0.en_in, 0),
        }
    }
}

fn byte_point(name: &str) -> Coverpoint {
    BYTE_RANGES.iter().fold(Coverpoint::new(name), |cp, &(lo, hi)| {
        cp.range_bin(&format!("{lo}..{hi}"), lo, hi)
    })
}

/// Bus and analog inputs.
pub fn input_model() -> Covergroup {
    let mut g = Covergroup::new(INPUT_GROUP);
    let ana = MILLIVOLT_RANGES
        .iter()
        .fold(Coverpoint::new("ana_in"), |cp, &(lo, hi)| {
            cp.range_bin(&format!("{lo}..{hi}mV"), lo, hi)
        });
    for cp in [
        Coverpoint::boolean("en_in"),
        Coverpoint::boolean("rw_in"),
        byte_point("addr_in"),
        byte_point("data_in"),
        ana,
    ] {
        g.add_coverpoint(cp).expect("fresh group");
    }
    g
}

/// Status outputs.
pub fn output_model() -> Covergroup {
    let mut g = Covergroup::new(OUTPUT_GROUP);
    for name in ["start_out", "busy_out", "eoc_out", "err_out"] {
        g.add_coverpoint(Coverpoint::boolean(name)).expect("fresh group");
    }
    g
}

/// Registered outputs predicted for one cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
struct Expected {
    data_out: u8,
    digital_out: u16,
    start: bool,
    busy: bool,
    eoc: bool,
    err: bool,
}

/// Reference quantizer: nearest of 65536 codes over +/-10 V, ties up.
pub fn expected_code(volts: f64) -> u16 {
    let v = volts.clamp(-10.0, 10.0);
    let code = ((v + 10.0) * 65535.0 / 20.0 + 0.5).floor();
    code.clamp(0.0, 65535.0) as u16
}

/// Cycle model of the ADC register file and converter, written against
/// the monitored pins rather than the DUT's internals.
#[derive(Default)]
struct Reference {
    config: u8,
    trigger: u8,
    /// (accepting cycle, factor, sample codes)
    conversion: Option<(usize, usize, Vec<u16>)>,
    out: Expected,
}

impl Reference {
    fn step(&mut self, cycle: usize, pins: &AdcStimulus) -> Expected {
        self.out.start = false;
        self.out.eoc = false;
        self.out.err = false;
        if let Some((start, factor, samples)) = &mut self.conversion {
            let age = cycle - *start;
            if age == 4 * *factor {
                let sum: u64 = samples.iter().map(|&c| c as u64).sum();
                let n = samples.len() as u64;
                self.out.digital_out = ((sum * 2 + n) / (2 * n)) as u16;
                self.out.eoc = true;
                self.conversion = None;
            } else if age.is_multiple_of(4) {
                samples.push(expected_code(pins.analog));
            }
        }
        if pins.en {
            match (pins.rw, pins.addr) {
                (true, 0) => {}
                (true, 1) => self.config = pins.data & 3,
                (true, 2) => {
                    self.trigger = pins.data & 1;
                    if self.trigger == 1 {
                        if self.conversion.is_some() {
                            self.out.err = true;
                        } else {
                            let factor = [1, 2, 4, 8][self.config as usize];
                            self.conversion = Some((cycle, factor, vec![expected_code(pins.analog)]));
                            self.out.start = true;
                        }
                    }
                }
                (false, 0) => self.out.data_out = 0,
                (false, 1) => self.out.data_out = self.config,
                (false, 2) => self.out.data_out = self.trigger,
                (rw, _) => {
                    if !rw {
                        self.out.data_out = 0;
                    }
                    self.out.err = true;
                }
            }
        }
        self.out.busy = self.conversion.is_some();
        self.out
    }
}

fn pins_of(s: &Sample) -> Option<AdcStimulus> {
    let bit = |n| s.get(n).map(|v| v == 1);
    let en = bit("en_in")?;
    Some(AdcStimulus {
        en,
        rw: bit("rw_in").unwrap_or(false),
        addr: s.get("addr_in").unwrap_or(0) as u8,
        data: s.get("data_in").unwrap_or(0) as u8,
        analog: s.get("analog_bits").map_or(0.0, |b| f64::from_bits(b as u64)),
    })
}

fn observed(s: &Sample) -> Option<Expected> {
    let bit = |n| s.get(n).map(|v| v == 1);
    Some(Expected {
        data_out: s.get("data_out")? as u8,
        digital_out: s.get("digital_out")? as u16,
        start: bit("start_out")?,
        busy: bit("busy_out")?,
        eoc: bit("eoc_out")?,
        err: bit("err_out")?,
    })
}

/// Replays every cycle through [`Reference`]: the outputs sampled after
/// rising edge `m` answer the pins driven at edge `m - 1`.
#[derive(Default)]
pub struct AdcChecker {
    conversions: u64,
    busy_errors: u64,
}

impl Checker for AdcChecker {
    fn check(&mut self, inputs: &[Sample], outputs: &[Sample], rep: &Reporter) -> Result<()> {
        let mut bad = MismatchLog::new("ADC mismatches");
        let mut model = Reference::default();
        for (m, out) in outputs.iter().enumerate() {
            let pins = match m.checked_sub(1) {
                None => AdcStimulus::default(),
                Some(k) => inputs.get(k).and_then(pins_of).unwrap_or_default(),
            };
            let was_busy = model.conversion.is_some();
            let want = model.step(m, &pins);
            self.conversions += want.eoc as u64;
            self.busy_errors += (want.err && was_busy && pins.en && pins.rw && pins.addr == 2) as u64;
            let got = observed(out);
            if got != Some(want) {
                bad.report(rep, || {
                    format!("cycle {m}: after {pins} expected {want:?}, got {got:?}")
                });
            }
        }
        bad.finish(rep);
        rep.info(&format!(
            "{} cycles checked, {} conversions, {} triggers while busy, {} mismatches",
            outputs.len(),
            self.conversions,
            self.busy_errors,
            bad.count()
        ));
        Ok(())
    }
}

/// Standard normal draw (Box-Muller).
fn gaussian(rng: &mut Rng) -> f64 {
    let u = 1.0 - rng.next_f64();
    let v = rng.next_f64();
    (-2.0 * u.ln()).sqrt() * (std::f64::consts::TAU * v).cos()
}

/// Runs `conversions` back-to-back conversions on a bare [`AdcCore`] with
/// Config code `code`, the input held at `volts` plus fresh Gaussian noise
/// of standard deviation `sigma_volts` every cycle. Returns the codes.
pub fn noisy_conversions(code: u8, volts: f64, sigma_volts: f64, conversions: usize, seed: u64) -> Vec<u16> {
    let mut rng = Rng::for_stream(seed, "adc.noise");
    let mut core = AdcCore::new();
    let noisy = |rng: &mut Rng| volts + sigma_volts * gaussian(rng);
    let write = |addr, data, analog| AdcInputs {
        en: true,
        rw: true,
        addr,
        data,
        analog,
    };
    core.rising_edge(&write(ADDR_CONFIG, code, volts));
    let mut codes = Vec::with_capacity(conversions);
    while codes.len() < conversions {
        let out = core.rising_edge(&write(ADDR_TRIGGER, 1, noisy(&mut rng)));
        assert!(out.start, "conversion not accepted");
        loop {
            let out = core.rising_edge(&AdcInputs {
                analog: noisy(&mut rng),
                ..AdcInputs::default()
            });
            if out.eoc {
                codes.push(out.digital_out);
                break;
            }
        }
    }
    codes
}

/// Unbiased sample variance.
pub fn sample_variance(xs: &[u16]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().map(|&x| x as f64).sum::<f64>() / n;
    xs.iter().map(|&x| (x as f64 - mean).powi(2)).sum::<f64>() / (n - 1.0)
}

/// Top of the three ADC tests.
pub struct AdcTest {
    pub scenario: AdcScenario,
}

impl AdcTest {
    pub fn new(scenario: AdcScenario) -> Self {
        Self { scenario }
    }
}

impl Component for AdcTest {
    fn build(&mut self, ctx: &mut PhaseCtx<'_>) -> Result<()> {
        let sim = ctx.sim().clone();
        let mut bfm = Bfm::<AdcStimulus>::new(&sim)?;
        let p = attach_adc(&sim, bfm.clk)?;
        let pins = AdcPins(p);
        pins.apply(&sim, &AdcStimulus::default())?;
        bfm.set_probes(
            vec![
                Probe::unsigned("en_in", p.en_in),
                Probe::unsigned("rw_in", p.rw_in),
                Probe::unsigned("addr_in", p.addr_in),
                Probe::unsigned("data_in", p.data_in),
                Probe::millivolts("ana_in", p.analog_in),
                Probe::unsigned("analog_bits", p.analog_in),
            ],
            vec![
                Probe::unsigned("data_out", p.data_out),
                Probe::unsigned("digital_out", p.digital_out),
                Probe::unsigned("start_out", p.start_out),
                Probe::unsigned("busy_out", p.busy_out),
                Probe::unsigned("eoc_out", p.eoc_out),
                Probe::unsigned("err_out", p.err_out),
            ],
        );
        bfm.start(pins);
        ctx.uvm().config().borrow_mut().set(None, "*", "BFM", Rc::new(bfm))?;
        ctx.create_with(
            "env",
            Env::<AdcStimulus>::new(EnvSpec {
                checker: Box::new(AdcChecker::default()),
                inp_groups: vec![input_model()],
                out_groups: vec![output_model()],
            }),
        )
    }

    fn run(&mut self, ctx: &mut PhaseCtx<'_>) -> Result<Option<RunTask>> {
        let count = ctx.uvm().transactions().unwrap_or(DEFAULT_TRANSACTIONS);
        ctx.uvm().set_executed(count);
        let seq = AdcSeq {
            scenario: self.scenario,
            count,
            rng: ctx.rng("seq"),
        };
        Ok(Some(sequence_task(ctx, seq, DRAIN_CYCLES)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dut::quantize;

    #[test]
    fn reference_quantizer_agrees_with_dut() {
        let mut rng = Rng::new(3);
        for v in [-10.0, 10.0, 0.0, -12.0, 12.0, 1e-9] {
            assert_eq!(expected_code(v) as u32, quantize(v), "{v}");
        }
        for _ in 0..10_000 {
            let v = rng.uniform_f64(-11.0, 11.0);
            assert_eq!(expected_code(v) as u32, quantize(v), "{v}");
        }
        assert_eq!(expected_code(-10.0), 0);
        assert_eq!(expected_code(10.0), 65535);
        assert_eq!(expected_code(0.0), 32768);
    }

    #[test]
    fn reference_tracks_core_under_stress() {
        let mut seq = AdcSeq {
            scenario: AdcScenario::Stress,
            count: 5000,
            rng: Rng::new(9),
        };
        let mut core = AdcCore::new();
        let mut model = Reference::default();
        for (m, s) in seq.plan().unwrap().iter().enumerate() {
            let o = core.rising_edge(&AdcInputs {
                en: s.en,
                rw: s.rw,
                addr: s.addr,
                data: if s.rw { s.data } else { 0 },
                analog: s.analog,
            });
            let e = model.step(m, s);
            assert_eq!(
                (o.data_out, o.digital_out, o.start, o.busy, o.eoc, o.err),
                (e.data_out, e.digital_out, e.start, e.busy, e.eoc, e.err),
                "cycle {m}: {s}"
            );
        }
    }

    #[test]
    fn noiseless_conversions_hit_the_quantizer() {
        for code in 0..4 {
            assert_eq!(noisy_conversions(code, 10.0, 0.0, 3, 1), [65535; 3]);
            assert_eq!(noisy_conversions(code, -10.0, 0.0, 3, 1), [0; 3]);
        }
        assert_eq!(sample_variance(&[1, 1, 1]), 0.0);
    }

    #[test]
    fn plans_have_requested_length() {
        for scenario in [AdcScenario::Registers, AdcScenario::Conversions, AdcScenario::Stress] {
            let mut seq = AdcSeq {
                scenario,
                count: 321,
                rng: Rng::new(1),
            };
            assert_eq!(seq.plan().unwrap().len(), 321);
        }
    }

    #[test]
    fn register_plan_never_triggers() {
        let mut seq = AdcSeq {
            scenario: AdcScenario::Registers,
            count: 2000,
            rng: Rng::new(5),
        };
        assert!(seq
            .plan()
            .unwrap()
            .iter()
            .all(|s| !(s.en && s.rw && s.addr == ADDR_TRIGGER && s.data & 1 == 1)));
    }
}
