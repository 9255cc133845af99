//! Seeded constrained-random stimulus generation.
//!
//! Only interval constraints are supported: a field carries a list of
//! constraints, each an `inside { [lo:hi], ... }` union, and a value must
//! satisfy every constraint. The feasible set is kept as a list of
//! intervals (not merged), so the listed ranges keep their identity for
//! [`SamplingPolicy::UniformOverRanges`].

use crate::error::{Error, Result};

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// 64-bit FNV-1a. Stable across platforms and toolchains, unlike `DefaultHasher`.
pub fn stable_hash(s: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in s.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// SplitMix64 generator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rng {
    state: u64,
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    /// Independent stream for a named consumer: `seed ^ stable_hash(name)`.
    pub fn for_stream(seed: u64, name: &str) -> Self {
        Self::new(seed ^ stable_hash(name))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in `[0, 1)` with 53 bits of precision.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn uniform_f64(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Uniform in `[0, n)` by rejection; `n` must be non-zero.
    pub fn below(&mut self, n: u128) -> u128 {
        assert!(n > 0, "below(0)");
        if n <= 1u128 << 64 {
            if n == 1u128 << 64 {
                return self.next_u64() as u128;
            }
            let n64 = n as u64;
            let threshold = n64.wrapping_neg() % n64;
            loop {
                let x = self.next_u64();
                if x >= threshold {
                    return (x % n64) as u128;
                }
            }
        }
        let zone = u128::MAX - (u128::MAX % n + 1) % n;
        loop {
            let x = ((self.next_u64() as u128) << 64) | self.next_u64() as u128;
            if x <= zone {
                return x % n;
            }
        }
    }

    pub fn range_inclusive(&mut self, lo: i128, hi: i128) -> i128 {
        assert!(lo <= hi, "empty range");
        let span = (hi - lo) as u128 + 1;
        lo + self.below(span) as i128
    }

    /// Index drawn with probability proportional to `weights[i]`.
    pub fn weighted_index(&mut self, weights: &[f64]) -> usize {
        let total: f64 = weights.iter().sum();
        let mut x = self.next_f64() * total;
        for (i, w) in weights.iter().enumerate() {
            if x < *w {
                return i;
            }
            x -= w;
        }
        weights.len() - 1
    }
}

/// Inclusive integer interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Interval {
    pub lo: i128,
    pub hi: i128,
}

impl Interval {
    pub fn new(lo: i128, hi: i128) -> Result<Self> {
        if lo > hi {
            return Err(Error::InvalidRanges(format!("[{lo}, {hi}] is empty")));
        }
        Ok(Self { lo, hi })
    }

    pub fn point(v: i128) -> Self {
        Self { lo: v, hi: v }
    }

    pub fn contains(&self, v: i128) -> bool {
        self.lo <= v && v <= self.hi
    }

    pub fn size(&self) -> u128 {
        (self.hi - self.lo) as u128 + 1
    }

    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        (lo <= hi).then_some(Interval { lo, hi })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SamplingPolicy {
    /// Every value of the feasible set equally likely.
    #[default]
    UniformOverDomain,
    /// Pick a listed range uniformly, then a value uniformly inside it.
    UniformOverRanges,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldMode {
    Rand,
    NonRand,
}

/// Declaration of one randomizable field.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RandField {
    pub name: &'static str,
    pub width: u32,
    pub signed: bool,
    pub mode: FieldMode,
    constraints: Vec<Vec<Interval>>,
}

impl RandField {
    pub fn rand(name: &'static str, width: u32, signed: bool) -> Self {
        assert!((1..=64).contains(&width), "field width must be 1..=64");
        Self {
            name,
            width,
            signed,
            mode: FieldMode::Rand,
            constraints: Vec::new(),
        }
    }

    pub fn nonrand(name: &'static str, width: u32, signed: bool) -> Self {
        Self {
            mode: FieldMode::NonRand,
            ..Self::rand(name, width, signed)
        }
    }

    pub fn domain(&self) -> Interval {
        if self.signed {
            let half = 1i128 << (self.width - 1);
            Interval {
                lo: -half,
                hi: half - 1,
            }
        } else {
            Interval {
                lo: 0,
                hi: (1i128 << self.width) - 1,
            }
        }
    }

    /// Adds an `inside { ranges }` constraint. Every range must be non-empty
    /// and lie inside the field's domain.
    pub fn inside(mut self, ranges: &[(i128, i128)]) -> Result<Self> {
        if ranges.is_empty() {
            return Err(Error::InvalidRanges(format!("`{}`: empty range list", self.name)));
        }
        let domain = self.domain();
        let mut list = Vec::with_capacity(ranges.len());
        for &(lo, hi) in ranges {
            let r = Interval::new(lo, hi)?;
            if r.intersect(&domain) != Some(r) {
                return Err(Error::InvalidRanges(format!(
                    "`{}`: [{lo}, {hi}] outside domain [{}, {}]",
                    self.name, domain.lo, domain.hi
                )));
            }
            list.push(r);
        }
        self.constraints.push(list);
        Ok(self)
    }

    pub fn constraints(&self) -> &[Vec<Interval>] {
        &self.constraints
    }

    /// Intersection of all constraints as a list of intervals.
    pub fn feasible(&self) -> Result<Vec<Interval>> {
        let mut current = vec![self.domain()];
        for c in &self.constraints {
            let next: Vec<Interval> = if current.len() == 1 && current[0] == self.domain() {
                c.clone()
            } else {
                current
                    .iter()
                    .flat_map(|r| c.iter().filter_map(move |s| r.intersect(s)))
                    .collect()
            };
            if next.is_empty() {
                return Err(Error::Unsatisfiable(self.name.to_string()));
            }
            current = next;
        }
        Ok(current)
    }

    pub fn satisfied_by(&self, value: i128) -> bool {
        self.domain().contains(value) && self.constraints.iter().all(|c| c.iter().any(|r| r.contains(value)))
    }
}

/// Draws one value from `ranges` according to `policy`.
pub fn rand_in_ranges(ranges: &[Interval], rng: &mut Rng, policy: SamplingPolicy) -> Result<i128> {
    if ranges.is_empty() {
        return Err(Error::InvalidRanges("empty range list".into()));
    }
    let pick = match policy {
        SamplingPolicy::UniformOverRanges => ranges[rng.below(ranges.len() as u128) as usize],
        SamplingPolicy::UniformOverDomain => {
            let total: u128 = ranges.iter().map(Interval::size).sum();
            let mut x = rng.below(total);
            let mut chosen = ranges[0];
            for r in ranges {
                if x < r.size() {
                    chosen = *r;
                    break;
                }
                x -= r.size();
            }
            chosen
        }
    };
    Ok(rng.range_inclusive(pick.lo, pick.hi))
}

/// A transaction whose fields can be randomized.
pub trait Randomizable {
    /// Field declarations including their current constraints.
    fn rand_fields(&self) -> Vec<RandField>;

    /// Stores a generated value. `value` lies in the field's domain.
    fn assign(&mut self, field: &str, value: i128);
}

/// Assigns every `rand` field a value satisfying all of its constraints.
pub fn randomize<T: Randomizable + ?Sized>(item: &mut T, rng: &mut Rng, policy: SamplingPolicy) -> Result<()> {
    let fields = item.rand_fields();
    if !fields.iter().any(|f| f.mode == FieldMode::Rand) {
        return Err(Error::Config("item declares no rand fields".into()));
    }
    for f in fields.iter().filter(|f| f.mode == FieldMode::Rand) {
        let feasible = f.feasible()?;
        let v = rand_in_ranges(&feasible, rng, policy)?;
        item.assign(f.name, v);
    }
    Ok(())
}

/// `count` distinct bit positions drawn uniformly from `[0, width)`, sorted.
pub fn pick_flip_indices(width: usize, count: usize, rng: &mut Rng) -> Result<Vec<usize>> {
    if count > width {
        return Err(Error::Config(format!(
            "cannot pick {count} distinct flips from a {width}-bit word"
        )));
    }
    let mut pool: Vec<usize> = (0..width).collect();
    for i in 0..count {
        let j = i + rng.below((width - i) as u128) as usize;
        pool.swap(i, j);
    }
    let mut picked = pool[..count].to_vec();
    picked.sort_unstable();
    Ok(picked)
}
