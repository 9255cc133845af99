//! Functional coverage: covergroups, coverpoints with explicit bins, crosses,
//! percentage arithmetic and the XML coverage database.
//!
//! Every bin is explicit. A sampled value increments the first bin of a
//! coverpoint that matches it; values matching no bin are ignored. A cross
//! product bin increments when every member coverpoint matched the
//! corresponding bin in the same sample. Coverage is averaged without
//! weights at every level, computed exactly as a rational and reported
//! with two decimals (round half up).

mod xml;

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use num_rational::Ratio;

use crate::crv::Interval;
use crate::error::{Error, Result};

pub use xml::{parse_coverage_db, read_coverage_db, write_coverage_db};

/// Exact coverage fraction in `[0, 1]`.
pub type Fraction = Ratio<u128>;

/// Formats a fraction as a percentage with two decimals, rounding half up.
pub fn format_percent(f: Fraction) -> String {
    let hundredths = (f.numer() * 20_000 + f.denom()) / (2 * f.denom());
    format!("{}.{:02}", hundredths / 100, hundredths % 100)
}

pub fn percent(f: Fraction) -> f64 {
    *f.numer() as f64 * 100.0 / *f.denom() as f64
}

fn mean(parts: impl IntoIterator<Item = Fraction>) -> Fraction {
    let mut sum = Fraction::from_integer(0);
    let mut n = 0u128;
    for p in parts {
        sum += p;
        n += 1;
    }
    if n == 0 {
        Fraction::from_integer(0)
    } else {
        sum / n
    }
}

/// Named values offered to [`Covergroup::sample`].
pub trait ValueSource {
    fn value(&self, name: &str) -> Option<i128>;
}

impl ValueSource for [(&str, i128)] {
    fn value(&self, name: &str) -> Option<i128> {
        self.iter().find(|(n, _)| *n == name).map(|(_, v)| *v)
    }
}

impl<const N: usize> ValueSource for [(&str, i128); N] {
    fn value(&self, name: &str) -> Option<i128> {
        self.as_slice().value(name)
    }
}

impl ValueSource for HashMap<String, i128> {
    fn value(&self, name: &str) -> Option<i128> {
        self.get(name).copied()
    }
}

impl ValueSource for BTreeMap<String, i128> {
    fn value(&self, name: &str) -> Option<i128> {
        self.get(name).copied()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BinMatcher {
    Value(i128),
    Range(Interval),
    Set(Vec<i128>),
}

impl BinMatcher {
    pub fn matches(&self, v: i128) -> bool {
        match self {
            BinMatcher::Value(x) => *x == v,
            BinMatcher::Range(r) => r.contains(v),
            BinMatcher::Set(s) => s.contains(&v),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bin {
    pub name: String,
    pub matcher: BinMatcher,
    pub hits: u64,
    pub goal: u64,
}

impl Bin {
    pub fn covered(&self) -> bool {
        self.hits >= self.goal
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Coverpoint {
    pub name: String,
    /// Name looked up in the sampled values; defaults to the coverpoint name.
    pub source: String,
    pub bins: Vec<Bin>,
}

impl Coverpoint {
    pub fn new(name: &str) -> Self {
        Self {
            name: name.to_string(),
            source: name.to_string(),
            bins: Vec::new(),
        }
    }

    pub fn with_source(mut self, source: &str) -> Self {
        self.source = source.to_string();
        self
    }

    fn push(mut self, name: &str, matcher: BinMatcher) -> Self {
        self.bins.push(Bin {
            name: name.to_string(),
            matcher,
            hits: 0,
            goal: 1,
        });
        self
    }

    pub fn value_bin(self, name: &str, v: i128) -> Self {
        self.push(name, BinMatcher::Value(v))
    }

    /// Inclusive range bin. Panics if `lo > hi`.
    pub fn range_bin(self, name: &str, lo: i128, hi: i128) -> Self {
        let r = Interval::new(lo, hi).expect("range bin with lo > hi");
        self.push(name, BinMatcher::Range(r))
    }

    pub fn set_bin(self, name: &str, values: &[i128]) -> Self {
        self.push(name, BinMatcher::Set(values.to_vec()))
    }

    /// Bins named `0` and `1` for a single-bit value.
    pub fn boolean(name: &str) -> Self {
        Self::new(name).value_bin("0", 0).value_bin("1", 1)
    }

    pub fn with_goal(mut self, goal: u64) -> Self {
        if let Some(b) = self.bins.last_mut() {
            b.goal = goal.max(1);
        }
        self
    }

    /// Index of the first bin matching `v`.
    pub fn matching_bin(&self, v: i128) -> Option<usize> {
        self.bins.iter().position(|b| b.matcher.matches(v))
    }

    pub fn coverage(&self) -> Fraction {
        if self.bins.is_empty() {
            return Fraction::from_integer(0);
        }
        let covered = self.bins.iter().filter(|b| b.covered()).count() as u128;
        Fraction::new(covered, self.bins.len() as u128)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cross {
    pub name: String,
    /// Member coverpoint names, first member varies slowest.
    pub members: Vec<String>,
    member_idx: Vec<usize>,
    dims: Vec<usize>,
    /// Product bin hits, row-major over `members`.
    pub hits: Vec<u64>,
}

impl Cross {
    pub fn bin_count(&self) -> usize {
        self.hits.len()
    }

    pub fn coverage(&self) -> Fraction {
        if self.hits.is_empty() {
            return Fraction::from_integer(0);
        }
        let covered = self.hits.iter().filter(|&&h| h >= 1).count() as u128;
        Fraction::new(covered, self.hits.len() as u128)
    }

    /// Member bin indices of product bin `flat`.
    pub fn tuple_of(&self, mut flat: usize) -> Vec<usize> {
        let mut out = vec![0; self.dims.len()];
        for (i, d) in self.dims.iter().enumerate().rev() {
            out[i] = flat % d;
            flat /= d;
        }
        out
    }

    pub fn index_of(&self, tuple: &[usize]) -> usize {
        tuple.iter().zip(&self.dims).fold(0, |acc, (t, d)| acc * d + t)
    }

    /// Product bin hit count for a tuple of member bin names.
    pub fn hits_for(&self, group: &Covergroup, names: &[&str]) -> Option<u64> {
        if names.len() != self.members.len() {
            return None;
        }
        let mut tuple = Vec::with_capacity(names.len());
        for (&pi, n) in self.member_idx.iter().zip(names) {
            tuple.push(group.coverpoints[pi].bins.iter().position(|b| b.name == *n)?);
        }
        Some(self.hits[self.index_of(&tuple)])
    }

    /// `b1|b2|...` label of product bin `flat`.
    pub fn tuple_label(&self, group: &Covergroup, flat: usize) -> String {
        self.tuple_of(flat)
            .iter()
            .zip(&self.member_idx)
            .map(|(b, &p)| group.coverpoints[p].bins[*b].name.as_str())
            .collect::<Vec<_>>()
            .join("|")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Covergroup {
    pub name: String,
    pub coverpoints: Vec<Coverpoint>,
    pub crosses: Vec<Cross>,
}

impl Covergroup {
    pub fn new(name: &str) -> Self {
        Self {
            name: name.to_string(),
            coverpoints: Vec::new(),
            crosses: Vec::new(),
        }
    }

    pub fn add_coverpoint(&mut self, cp: Coverpoint) -> Result<()> {
        if self.coverpoints.iter().any(|c| c.name == cp.name) {
            return Err(Error::Config(format!(
                "coverpoint `{}` already in `{}`",
                cp.name, self.name
            )));
        }
        if cp.bins.is_empty() {
            return Err(Error::Config(format!("coverpoint `{}` has no bins", cp.name)));
        }
        self.coverpoints.push(cp);
        Ok(())
    }

    pub fn add_cross(&mut self, name: &str, members: &[&str]) -> Result<()> {
        if members.len() < 2 {
            return Err(Error::Config(format!("cross `{name}` needs at least two members")));
        }
        let mut member_idx = Vec::new();
        for m in members {
            let i = self
                .coverpoints
                .iter()
                .position(|c| c.name == *m)
                .ok_or_else(|| Error::Config(format!("cross `{name}`: unknown coverpoint `{m}`")))?;
            member_idx.push(i);
        }
        let dims: Vec<usize> = member_idx.iter().map(|&i| self.coverpoints[i].bins.len()).collect();
        let total = dims.iter().product();
        self.crosses.push(Cross {
            name: name.to_string(),
            members: members.iter().map(|m| m.to_string()).collect(),
            member_idx,
            dims,
            hits: vec![0; total],
        });
        Ok(())
    }

    pub fn coverpoint(&self, name: &str) -> Option<&Coverpoint> {
        self.coverpoints.iter().find(|c| c.name == name)
    }

    pub fn cross(&self, name: &str) -> Option<&Cross> {
        self.crosses.iter().find(|c| c.name == name)
    }

    /// Records one sample. Every coverpoint source must be present in `values`.
    pub fn sample<S: ValueSource + ?Sized>(&mut self, values: &S) -> Result<()> {
        let mut matched = Vec::with_capacity(self.coverpoints.len());
        for cp in &self.coverpoints {
            let v = values
                .value(&cp.source)
                .ok_or_else(|| Error::MissingSample(cp.source.clone()))?;
            matched.push(cp.matching_bin(v));
        }
        for (cp, m) in self.coverpoints.iter_mut().zip(&matched) {
            if let Some(i) = m {
                cp.bins[*i].hits += 1;
            }
        }
        for cross in &mut self.crosses {
            let tuple: Option<Vec<usize>> = cross.member_idx.iter().map(|&i| matched[i]).collect();
            if let Some(t) = tuple {
                let idx = cross.index_of(&t);
                cross.hits[idx] += 1;
            }
        }
        Ok(())
    }

    pub fn coverage(&self) -> Fraction {
        mean(
            self.coverpoints
                .iter()
                .map(Coverpoint::coverage)
                .chain(self.crosses.iter().map(Cross::coverage)),
        )
    }

    fn same_shape(&self, other: &Covergroup) -> bool {
        let points = self.coverpoints.len() == other.coverpoints.len()
            && self.coverpoints.iter().zip(&other.coverpoints).all(|(a, b)| {
                a.name == b.name
                    && a.source == b.source
                    && a.bins.len() == b.bins.len()
                    && a.bins
                        .iter()
                        .zip(&b.bins)
                        .all(|(x, y)| x.name == y.name && x.matcher == y.matcher && x.goal == y.goal)
            });
        let crosses = self.crosses.len() == other.crosses.len()
            && self
                .crosses
                .iter()
                .zip(&other.crosses)
                .all(|(a, b)| a.name == b.name && a.members == b.members);
        points && crosses
    }

    fn absorb(&mut self, other: &Covergroup) {
        for (a, b) in self.coverpoints.iter_mut().zip(&other.coverpoints) {
            for (x, y) in a.bins.iter_mut().zip(&b.bins) {
                x.hits += y.hits;
            }
        }
        for (a, b) in self.crosses.iter_mut().zip(&other.crosses) {
            for (x, y) in a.hits.iter_mut().zip(&b.hits) {
                *x += y;
            }
        }
    }
}

/// A set of covergroups plus run metadata.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CoverageDb {
    pub test: String,
    pub seed: String,
    pub transactions: u64,
    pub groups: Vec<Covergroup>,
}

impl CoverageDb {
    pub fn new(test: &str, seed: &str, transactions: u64) -> Self {
        Self {
            test: test.to_string(),
            seed: seed.to_string(),
            transactions,
            groups: Vec::new(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty() && self.test.is_empty()
    }

    pub fn group(&self, name: &str) -> Option<&Covergroup> {
        self.groups.iter().find(|g| g.name == name)
    }

    /// Unweighted mean of group coverages; 0 for an empty database.
    pub fn coverage(&self) -> Fraction {
        mean(self.groups.iter().map(Covergroup::coverage))
    }

    /// Sums hits of same-named groups (which must have identical shape) and
    /// keeps groups present on only one side.
    pub fn merge(&self, other: &CoverageDb) -> Result<CoverageDb> {
        if other.is_empty() {
            return Ok(self.clone());
        }
        if self.is_empty() {
            return Ok(other.clone());
        }
        let join = |a: &str, b: &str| match (a.is_empty(), b.is_empty()) {
            (true, _) => b.to_string(),
            (_, true) => a.to_string(),
            _ => format!("{a},{b}"),
        };
        let mut out = CoverageDb {
            test: join(&self.test, &other.test),
            seed: join(&self.seed, &other.seed),
            transactions: self.transactions + other.transactions,
            groups: self.groups.clone(),
        };
        for g in &other.groups {
            match out.groups.iter_mut().find(|x| x.name == g.name) {
                Some(mine) => {
                    if !mine.same_shape(g) {
                        return Err(Error::ShapeMismatch(format!(
                            "covergroup `{}` differs between databases",
                            g.name
                        )));
                    }
                    mine.absorb(g);
                }
                None => out.groups.push(g.clone()),
            }
        }
        Ok(out)
    }

    /// Plain-text coverage table.
    pub fn report(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{:<40} {:>8}", "covergroup / item", "coverage");
        for g in &self.groups {
            let _ = writeln!(s, "{:<40} {:>8}", g.name, format_percent(g.coverage()));
            for cp in &g.coverpoints {
                let covered = cp.bins.iter().filter(|b| b.covered()).count();
                let label = format!("  {} ({}/{} bins)", cp.name, covered, cp.bins.len());
                let _ = writeln!(s, "{:<40} {:>8}", label, format_percent(cp.coverage()));
            }
            for x in &g.crosses {
                let covered = x.hits.iter().filter(|&&h| h > 0).count();
                let label = format!("  {} ({}/{} bins)", x.name, covered, x.hits.len());
                let _ = writeln!(s, "{:<40} {:>8}", label, format_percent(x.coverage()));
            }
        }
        let _ = writeln!(s, "{:<40} {:>8}", "overall", format_percent(self.coverage()));
        s
    }
}
