//! 16-bit ADC with an 8-bit register interface and oversampling.
//!
//! Register map (all reset to 0):
//!
//! | addr | name    | access | fields                        |
//! |------|---------|--------|-------------------------------|
//! | 0    | Dummy   | RO     |                               |
//! | 1    | Config  | RW     | `[1:0]` oversampling code     |
//! | 2    | Trigger | RW     | `[0]` start conversion        |
//!
//! The bus is sampled on each rising edge while `en_in` is high. A
//! conversion with factor `N` takes one sample every 4 cycles starting at
//! the accepting edge, keeps `busy_out` high for `4N` cycles and then
//! pulses `eoc_out` with the averaged code on `digital_out`.

use crate::error::{Error, Result};
use crate::sim::{Edge, LogicValue, SignalId, Sim};

pub const CYCLES_PER_SAMPLE: u32 = 4;
pub const FULL_SCALE_VOLTS: f64 = 10.0;
pub const MAX_CODE: u32 = 65535;

pub const ADDR_DUMMY: u8 = 0;
pub const ADDR_CONFIG: u8 = 1;
pub const ADDR_TRIGGER: u8 = 2;

/// Quantizes a voltage, clamped to +/-10 V, to 16 bits (round half up).
pub fn quantize(volts: f64) -> u32 {
    let v = if volts.is_nan() {
        0.0
    } else {
        volts.clamp(-FULL_SCALE_VOLTS, FULL_SCALE_VOLTS)
    };
    let scaled = (v + FULL_SCALE_VOLTS) / (2.0 * FULL_SCALE_VOLTS) * MAX_CODE as f64;
    ((scaled + 0.5).floor() as u32).min(MAX_CODE)
}

/// Mean of sample codes, rounded half up.
pub fn average_codes(codes: &[u32]) -> u32 {
    assert!(!codes.is_empty(), "no samples");
    let n = codes.len() as u64;
    let sum: u64 = codes.iter().map(|&c| c as u64).sum();
    ((2 * sum + n) / (2 * n)) as u32
}

/// Oversampling factor for a Config code.
pub fn factor_for_code(code: u8) -> u32 {
    1 << (code & 3)
}

/// Pin values seen at a rising edge.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AdcInputs {
    pub en: bool,
    pub rw: bool,
    pub addr: u8,
    pub data: u8,
    pub analog: f64,
}

/// Registered outputs after a rising edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct AdcOutputs {
    pub data_out: u8,
    pub digital_out: u16,
    pub start: bool,
    pub busy: bool,
    pub eoc: bool,
    pub err: bool,
}

#[derive(Debug, Clone, PartialEq)]
struct Conversion {
    factor: u32,
    elapsed: u32,
    samples: Vec<u32>,
}

/// Cycle-level ADC state machine.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AdcCore {
    config: u8,
    trigger: u8,
    conversion: Option<Conversion>,
    out: AdcOutputs,
}

impl AdcCore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn outputs(&self) -> AdcOutputs {
        self.out
    }

    pub fn register(&self, addr: u8) -> Option<u8> {
        match addr {
            ADDR_DUMMY => Some(0),
            ADDR_CONFIG => Some(self.config),
            ADDR_TRIGGER => Some(self.trigger),
            _ => None,
        }
    }

    pub fn is_busy(&self) -> bool {
        self.conversion.is_some()
    }

    /// Advances one rising edge.
    pub fn rising_edge(&mut self, inp: &AdcInputs) -> AdcOutputs {
        self.out.start = false;
        self.out.eoc = false;
        self.out.err = false;

        if let Some(conv) = self.conversion.as_mut() {
            conv.elapsed += 1;
            let e = conv.elapsed;
            if e == conv.factor * CYCLES_PER_SAMPLE {
                self.out.digital_out = average_codes(&conv.samples) as u16;
                self.out.eoc = true;
                self.conversion = None;
            } else if e % CYCLES_PER_SAMPLE == 0 {
                conv.samples.push(quantize(inp.analog));
            }
        }

        if inp.en {
            if inp.rw {
                match inp.addr {
                    ADDR_DUMMY => {}
                    ADDR_CONFIG => self.config = inp.data & 0b11,
                    ADDR_TRIGGER => {
                        self.trigger = inp.data & 1;
                        if self.trigger == 1 {
                            self.request_conversion(inp.analog);
                        }
                    }
                    _ => self.out.err = true,
                }
            } else {
                match self.register(inp.addr) {
                    Some(v) => self.out.data_out = v,
                    None => {
                        self.out.data_out = 0;
                        self.out.err = true;
                    }
                }
            }
        }
        self.out.busy = self.conversion.is_some();
        self.out
    }

    fn request_conversion(&mut self, analog: f64) {
        if self.conversion.is_some() {
            self.out.err = true;
            return;
        }
        self.conversion = Some(Conversion {
            factor: factor_for_code(self.config),
            elapsed: 0,
            samples: vec![quantize(analog)],
        });
        self.out.start = true;
    }
}

#[derive(Debug, Clone, Copy)]
pub struct AdcPorts {
    pub clk: SignalId,
    pub en_in: SignalId,
    pub rw_in: SignalId,
    pub addr_in: SignalId,
    pub data_in: SignalId,
    /// 64-bit signal carrying the IEEE-754 bits of the input voltage.
    pub analog_in: SignalId,
    pub data_out: SignalId,
    pub digital_out: SignalId,
    pub start_out: SignalId,
    pub busy_out: SignalId,
    pub eoc_out: SignalId,
    pub err_out: SignalId,
}

/// Adds the ADC's signals and a rising-edge process on `clk`. Outputs start at 0.
pub fn attach_adc(sim: &Sim, clk: SignalId) -> Result<AdcPorts> {
    let p = AdcPorts {
        clk,
        en_in: sim.add_signal("en_in", 1)?,
        rw_in: sim.add_signal("rw_in", 1)?,
        addr_in: sim.add_signal("addr_in", 8)?,
        data_in: sim.add_signal("data_in", 8)?,
        analog_in: sim.add_signal("analog_in", 64)?,
        data_out: sim.add_signal("data_out", 8)?,
        digital_out: sim.add_signal("digital_out", 16)?,
        start_out: sim.add_signal("start_out", 1)?,
        busy_out: sim.add_signal("busy_out", 1)?,
        eoc_out: sim.add_signal("eoc_out", 1)?,
        err_out: sim.add_signal("err_out", 1)?,
    };
    for (s, w) in [
        (p.data_out, 8),
        (p.digital_out, 16),
        (p.start_out, 1),
        (p.busy_out, 1),
        (p.eoc_out, 1),
        (p.err_out, 1),
    ] {
        sim.write(s, LogicValue::from_u64(w, 0)?)?;
    }
    let mut core = AdcCore::new();
    sim.add_edge_process(clk, Edge::Rising, move |bus| {
        let bit = |v: LogicValue| -> Result<bool> { Ok(v.is_known() && v.to_u64()? == 1) };
        let en = bit(bus.read(p.en_in)?)?;
        let mut inp = AdcInputs {
            en,
            ..AdcInputs::default()
        };
        if en {
            inp.rw = bit(bus.read(p.rw_in)?)?;
            let addr = bus.read(p.addr_in)?;
            let data = bus.read(p.data_in)?;
            if !addr.is_known() || (inp.rw && !data.is_known()) {
                return Err(Error::Check("ADC bus driven with X while enabled".into()));
            }
            inp.addr = addr.to_u64()? as u8;
            inp.data = if inp.rw { data.to_u64()? as u8 } else { 0 };
        }
        let analog = bus.read(p.analog_in)?;
        inp.analog = if analog.is_known() {
            f64::from_bits(analog.to_u64()?)
        } else {
            0.0
        };
        let o = core.rising_edge(&inp);
        bus.write_u64(p.data_out, o.data_out as u64)?;
        bus.write_u64(p.digital_out, o.digital_out as u64)?;
        bus.write_u64(p.start_out, o.start as u64)?;
        bus.write_u64(p.busy_out, o.busy as u64)?;
        bus.write_u64(p.eoc_out, o.eoc as u64)?;
        bus.write_u64(p.err_out, o.err as u64)
    })?;
    Ok(p)
}
