use proptest::prelude::*;
use verikit::crv::{pick_flip_indices, Rng};
use verikit::dut::{alu_eval, attach_alu, quantize, AluOp, Secded};
use verikit::sim::{Sim, DEFAULT_CLK_PERIOD};
use verikit::tb::adc::{noisy_conversions, sample_variance};

#[path = "suites/secded_oracle.rs"]
mod secded_oracle;
use secded_oracle::oracle_check;

fn codeword(c: &Secded, d: u128) -> u128 {
    d | (c.encode(d) << c.data_width())
}

#[test]
fn encoder_matches_oracle_small_widths() {
    for dw in 1..=10 {
        let c = Secded::new(dw).unwrap();
        for d in 0..(1u128 << dw) {
            assert_eq!(c.encode(d), oracle_check(dw, d), "dw={dw} d={d}");
        }
    }
}

#[test]
fn check_widths() {
    for (dw, cw) in [(4, 4), (8, 5), (16, 6), (32, 7), (64, 8)] {
        assert_eq!(Secded::new(dw).unwrap().check_width(), cw, "dw={dw}");
    }
}

#[test]
fn minimum_distance_at_least_four() {
    for dw in 1..=8 {
        let c = Secded::new(dw).unwrap();
        let words: Vec<u128> = (0..1u128 << dw).map(|d| codeword(&c, d)).collect();
        let min = (0..words.len())
            .flat_map(|i| (i + 1..words.len()).map(move |j| (i, j)))
            .map(|(i, j)| (words[i] ^ words[j]).count_ones())
            .min()
            .unwrap_or(u32::MAX);
        assert!(min >= 4, "dw={dw}: distance {min}");
    }
}

#[test]
fn round_trip_exhaustive_small_widths() {
    for dw in 1..=8 {
        let c = Secded::new(dw).unwrap();
        for d in 0..1u128 << dw {
            let r = c.decode(d, c.encode(d), true);
            assert_eq!((r.data, r.err_detect, r.err_multpl, r.syndrome), (d, false, false, 0));
        }
    }
}

#[test]
fn round_trip_random_words() {
    let c = Secded::new(32).unwrap();
    let mut rng = Rng::new(17);
    for _ in 0..10_000 {
        let d = rng.next_u64() as u128 & 0xFFFF_FFFF;
        let r = c.decode(d, c.encode(d), true);
        assert_eq!((r.data, r.err_detect, r.err_multpl), (d, false, false));
    }
}

#[test]
fn every_single_and_double_flip_for_standard_widths() {
    let mut rng = Rng::new(4);
    for dw in [4u32, 8, 16, 32] {
        let c = Secded::new(dw).unwrap();
        let n = c.codeword_width();
        let mask = (1u128 << dw) - 1;
        for _ in 0..20 {
            let d = rng.next_u64() as u128 & mask;
            let k = c.encode(d);
            for i in 0..n {
                let (fd, fk) = c.flip(d, k, i);
                let r = c.decode(fd, fk, true);
                assert_eq!((r.data, r.err_detect, r.err_multpl), (d, true, false), "dw={dw} i={i}");
                for j in i + 1..n {
                    let (gd, gk) = c.flip(fd, fk, j);
                    let r = c.decode(gd, gk, true);
                    assert_eq!(
                        (r.data, r.err_detect, r.err_multpl),
                        (gd, true, true),
                        "dw={dw} {i},{j}"
                    );
                }
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    /// Three or more flips: flags may be wrong but decoding never panics
    /// and always reports an error when the syndrome is non-zero.
    #[test]
    fn many_flips_never_crash(d: u32, seed: u64, count in 3usize..8) {
        let c = Secded::new(32).unwrap();
        let mut rng = Rng::new(seed);
        let (mut fd, mut fk) = (d as u128, c.encode(d as u128));
        for i in pick_flip_indices(39, count, &mut rng).unwrap() {
            (fd, fk) = c.flip(fd, fk, i as u32);
        }
        let r = c.decode(fd, fk, true);
        prop_assert!(r.data <= u32::MAX as u128);
        prop_assert_eq!(r.err_detect, r.syndrome != 0);
    }

    #[test]
    fn decoder_without_correction_passes_data(d: u32, i in 0u32..39) {
        let c = Secded::new(32).unwrap();
        let (fd, fk) = c.flip(d as u128, c.encode(d as u128), i);
        let r = c.decode(fd, fk, false);
        prop_assert_eq!((r.data, r.err_detect, r.err_multpl), (fd, true, false));
    }

    #[test]
    fn quantizer_monotone_and_bounded(a in -12.0f64..12.0, b in -12.0f64..12.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(quantize(lo) <= quantize(hi));
        prop_assert!(quantize(hi) <= 65535);
    }

    /// The registered ALU output equals alu_eval of the operands present at
    /// the previous rising edge.
    #[test]
    fn alu_registered_output(ops in prop::collection::vec((any::<u32>(), any::<u32>(), 0u32..8), 1..40)) {
        let sim = Sim::new();
        let clk = sim.add_signal("clk", 1).unwrap();
        sim.start_clock(clk, DEFAULT_CLK_PERIOD).unwrap();
        let p = attach_alu(&sim, clk).unwrap();
        let seen = std::rc::Rc::new(std::cell::RefCell::new(Vec::new()));
        let (s, out, stim) = (sim.clone(), seen.clone(), ops.clone());
        sim.spawn(async move {
            for (a, b, op) in stim {
                s.rising_edge(clk).await?;
                s.write_u64(p.a, a as u64)?;
                s.write_u64(p.b, b as u64)?;
                s.write_u64(p.op, op as u64)?;
                s.falling_edge(clk).await?;
                out.borrow_mut().push(s.read_u64(p.r).ok());
            }
            s.rising_edge(clk).await?;
            s.falling_edge(clk).await?;
            out.borrow_mut().push(s.read_u64(p.r).ok());
            s.stop();
            Ok(())
        });
        sim.run(None).unwrap();
        sim.abandon_tasks();
        let seen = seen.borrow();
        for (k, &(a, b, op)) in ops.iter().enumerate() {
            let want = alu_eval(a, b, AluOp::from_code(op).unwrap());
            prop_assert_eq!(seen[k + 1], Some(want as u64), "transaction {}", k);
        }
    }
}

#[test]
fn oversampling_reduces_noise_variance() {
    let sigma_volts: f64 = 0.05;
    let lsb = 20.0 / 65535.0;
    let input_var = (sigma_volts / lsb).powi(2);
    let v1 = sample_variance(&noisy_conversions(0, 1.234, sigma_volts, 10_000, 1));
    let v8 = sample_variance(&noisy_conversions(3, 1.234, sigma_volts, 10_000, 1));
    assert!(
        v8 <= input_var / 8.0 * 1.25,
        "factor-8 variance {v8} vs input {input_var}"
    );
    assert!(v1 / v8 >= 6.0, "ratio {}", v1 / v8);
    for (code, factor) in [(1u8, 2.0), (2, 4.0)] {
        let v = sample_variance(&noisy_conversions(code, -3.3, sigma_volts, 5_000, 2));
        assert!(v <= input_var / factor * 1.25, "factor {factor}: {v}");
    }
}
