//! Brute-force Hamming plus overall parity encoder, independent of the
//! library implementation.

/// Textbook construction over codeword positions 1..=n: data at the
/// non-power-of-two positions, parity bit `j` at position 2^j covering every
/// position with bit `j` set, then one overall parity bit. Returns the check
/// word as (hamming bits, overall parity << m).
pub fn oracle_check(dw: u32, data: u128) -> u128 {
    let mut m = 0;
    while (1u32 << m) < m + dw + 1 {
        m += 1;
    }
    let n = dw + m;
    let mut word = vec![0u8; n as usize + 1];
    let mut k = 0;
    for pos in 1..=n {
        if !pos.is_power_of_two() {
            word[pos as usize] = ((data >> k) & 1) as u8;
            k += 1;
        }
    }
    let mut check = 0u128;
    for j in 0..m {
        let p = (1..=n)
            .filter(|pos| pos & (1 << j) != 0)
            .fold(0, |acc, pos| acc ^ word[pos as usize]);
        word[1 << j] = p;
        check |= (p as u128) << j;
    }
    let overall = word.iter().fold(0, |a, b| a ^ b);
    check | ((overall as u128) << m)
}
