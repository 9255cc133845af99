//! SECDED codec: positional Hamming check bits plus one overall parity bit.
//!
//! Check word layout: bits `[m-1:0]` are the Hamming checks (check `j` sits
//! at codeword position `2^j`), bit `m` is the overall parity over data and
//! Hamming bits. Data bit `k` occupies the `k`-th non-power-of-two position.
//!
//! A decoder's check output carries the syndrome: bits `[m-1:0]` are the
//! Hamming syndrome and bit `m` is the overall parity mismatch.

use crate::error::{Error, Result};
use crate::sim::{LogicValue, SignalId, Sim};

fn parity(x: u128) -> u128 {
    (x.count_ones() & 1) as u128
}

fn low_mask(width: u32) -> u128 {
    if width >= 128 {
        u128::MAX
    } else {
        (1u128 << width) - 1
    }
}

/// Result of decoding a received word.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Decoded {
    pub data: u128,
    pub syndrome: u128,
    pub err_detect: bool,
    pub err_multpl: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Secded {
    data_width: u32,
    hamming_bits: u32,
    // data bits covered by each Hamming check
    check_masks: Vec<u128>,
    // codeword position -> data bit index
    position_to_data: Vec<Option<u32>>,
}

impl Secded {
    /// Code for `data_width` data bits; the codeword must fit in 128 bits.
    pub fn new(data_width: u32) -> Result<Self> {
        if data_width == 0 {
            return Err(Error::Config("ECC data width must be positive".into()));
        }
        let mut m = 1;
        while (1u64 << m) < (m + data_width + 1) as u64 {
            m += 1;
        }
        if data_width + m + 1 > 128 {
            return Err(Error::Config(format!(
                "ECC data width {data_width} needs a {}-bit codeword (max 128)",
                data_width + m + 1
            )));
        }
        let n = data_width + m;
        let mut position_to_data = vec![None; n as usize + 1];
        let mut check_masks = vec![0u128; m as usize];
        let mut k = 0;
        for pos in 1..=n {
            if pos.is_power_of_two() {
                continue;
            }
            position_to_data[pos as usize] = Some(k);
            for (j, mask) in check_masks.iter_mut().enumerate() {
                if pos & (1 << j) != 0 {
                    *mask |= 1u128 << k;
                }
            }
            k += 1;
        }
        Ok(Self {
            data_width,
            hamming_bits: m,
            check_masks,
            position_to_data,
        })
    }

    pub fn data_width(&self) -> u32 {
        self.data_width
    }

    /// Hamming checks plus the overall parity bit.
    pub fn check_width(&self) -> u32 {
        self.hamming_bits + 1
    }

    pub fn codeword_width(&self) -> u32 {
        self.data_width + self.check_width()
    }

    fn hamming(&self, data: u128) -> u128 {
        self.check_masks
            .iter()
            .enumerate()
            .fold(0, |acc, (j, m)| acc | (parity(data & m) << j))
    }

    pub fn encode(&self, data: u128) -> u128 {
        let data = data & low_mask(self.data_width);
        let h = self.hamming(data);
        h | ((parity(data) ^ parity(h)) << self.hamming_bits)
    }

    /// Flips bit `index` of the codeword: `0..DW` address data bits,
    /// `DW..DW+CW` address check bits.
    pub fn flip(&self, data: u128, check: u128, index: u32) -> (u128, u128) {
        assert!(index < self.codeword_width(), "flip index {index} out of range");
        if index < self.data_width {
            (data ^ (1u128 << index), check)
        } else {
            (data, check ^ (1u128 << (index - self.data_width)))
        }
    }

    /// Decodes a received word. With `correct` false the data is passed
    /// through unmodified; the flags are the same either way.
    pub fn decode(&self, data: u128, check: u128, correct: bool) -> Decoded {
        let data = data & low_mask(self.data_width);
        let check = check & low_mask(self.check_width());
        let hmask = low_mask(self.hamming_bits);
        let s = self.hamming(data) ^ (check & hmask);
        let p = parity(data) ^ parity(check);
        let syndrome = s | (p << self.hamming_bits);
        let (out, detect, multiple) = match (s, p) {
            (0, 0) => (data, false, false),
            (0, _) => (data, true, false),
            (_, 0) => (data, true, true),
            _ => match self.position_to_data.get(s as usize) {
                Some(Some(k)) => {
                    let fixed = if correct { data ^ (1u128 << k) } else { data };
                    (fixed, true, false)
                }
                // a Hamming check bit itself
                Some(None) => (data, true, false),
                // points past the codeword: more than one error
                None => (data, true, true),
            },
        };
        Decoded {
            data: out,
            syndrome,
            err_detect: detect,
            err_multpl: multiple,
        }
    }
}

/// Kernel signals of one codec instance.
#[derive(Debug, Clone, Copy)]
pub struct CodecPorts {
    pub gen: SignalId,
    pub correct_n: SignalId,
    pub datain: SignalId,
    pub chkin: SignalId,
    pub dataout: SignalId,
    pub chkout: SignalId,
    pub err_detect: SignalId,
    pub err_multpl: SignalId,
}

/// Adds a combinational codec whose signals are named `{prefix}datain` etc.
///
/// With `gen` high it encodes (`dataout = datain`, `chkout` = check word);
/// with `gen` low it decodes, correcting unless `correct_n` is high.
/// Outputs go to X while any used input is X.
pub fn attach_codec(sim: &Sim, prefix: &str, code: Secded) -> Result<CodecPorts> {
    let dw = code.data_width();
    let cw = code.check_width();
    let sig = |n: &str, w| sim.add_signal(&format!("{prefix}{n}"), w);
    let ports = CodecPorts {
        gen: sig("gen", 1)?,
        correct_n: sig("correct_n", 1)?,
        datain: sig("datain", dw)?,
        chkin: sig("chkin", cw)?,
        dataout: sig("dataout", dw)?,
        chkout: sig("chkout", cw)?,
        err_detect: sig("err_detect", 1)?,
        err_multpl: sig("err_multpl", 1)?,
    };
    let p = ports;
    sim.add_comb_process(&[p.gen, p.correct_n, p.datain, p.chkin], move |bus| {
        let gen = bus.read(p.gen)?;
        let known = |v: &LogicValue| v.is_known();
        let datain = bus.read(p.datain)?;
        let outputs = if !known(&gen) || !known(&datain) {
            None
        } else if gen.to_u128()? == 1 {
            let d = datain.to_u128()?;
            Some((d, code.encode(d), 0, 0))
        } else {
            let chkin = bus.read(p.chkin)?;
            let correct_n = bus.read(p.correct_n)?;
            if known(&chkin) && known(&correct_n) {
                let r = code.decode(datain.to_u128()?, chkin.to_u128()?, correct_n.to_u128()? == 0);
                Some((r.data, r.syndrome, r.err_detect as u128, r.err_multpl as u128))
            } else {
                None
            }
        };
        match outputs {
            Some((d, c, e, m)) => {
                bus.write(p.dataout, LogicValue::from_u128(dw, d)?)?;
                bus.write(p.chkout, LogicValue::from_u128(cw, c)?)?;
                bus.write(p.err_detect, LogicValue::from_u128(1, e)?)?;
                bus.write(p.err_multpl, LogicValue::from_u128(1, m)?)?;
            }
            None => {
                bus.write(p.dataout, LogicValue::x(dw)?)?;
                bus.write(p.chkout, LogicValue::x(cw)?)?;
                bus.write(p.err_detect, LogicValue::x(1)?)?;
                bus.write(p.err_multpl, LogicValue::x(1)?)?;
            }
        }
        Ok(())
    })?;
    Ok(ports)
}
