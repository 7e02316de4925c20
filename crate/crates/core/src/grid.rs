//! The diagonal pairing `⟨i, j⟩` and depth/level of binary strings.
//!
//! The pairing walks each anti-diagonal `i + j = d` from row `d` up to row 0:
//!
//! ```text
//! 0 = ⟨0,0⟩  2 = ⟨0,1⟩  5 = ⟨0,2⟩  9 = ⟨0,3⟩
//! 1 = ⟨1,0⟩  4 = ⟨1,1⟩  8 = ⟨1,2⟩
//! 3 = ⟨2,0⟩  7 = ⟨2,1⟩
//! 6 = ⟨3,0⟩
//! ```
//!
//! A binary string is laid out on this grid by position, so its depth (largest
//! row touched) and level (row of its last cell) depend only on its length.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `⟨i, j⟩ = (i+j)(i+j+1)/2 + j`.
pub fn pair(i: u64, j: u64) -> Result<u64> {
    let overflow = || Error::Overflow(format!("pair({i}, {j}) does not fit in u64"));
    let d = i.checked_add(j).ok_or_else(overflow)?;
    let tri = if d % 2 == 0 {
        (d / 2).checked_mul(d + 1)
    } else {
        d.checked_mul(d.div_ceil(2))
    }
    .ok_or_else(overflow)?;
    tri.checked_add(j).ok_or_else(overflow)
}

/// Index of the anti-diagonal containing `n`: the largest `d` with `d(d+1)/2 <= n`.
fn diagonal(n: u64) -> u64 {
    let n = n as u128;
    let mut d = (((8 * n + 1).isqrt() - 1) / 2) as u64;
    // isqrt is exact, the adjustments only guard the boundary arithmetic
    while (d as u128) * (d as u128 + 1) / 2 > n {
        d -= 1;
    }
    while (d as u128 + 1) * (d as u128 + 2) / 2 <= n {
        d += 1;
    }
    d
}

/// The unique `(i, j)` with `⟨i, j⟩ = n`.
pub fn unpair(n: u64) -> (u64, u64) {
    let d = diagonal(n);
    let tri = (d as u128 * (d as u128 + 1) / 2) as u64;
    let j = n - tri;
    (d - j, j)
}

/// A cell of the diagonal grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GridPosition {
    pub row: u64,
    pub col: u64,
    pub index: u64,
}

impl GridPosition {
    pub fn at(index: u64) -> Self {
        let (row, col) = unpair(index);
        Self { row, col, index }
    }

    pub fn from_cell(row: u64, col: u64) -> Result<Self> {
        Ok(Self {
            row,
            col,
            index: pair(row, col)?,
        })
    }
}

/// A finite binary string.
///
/// Ordered by length first, then lexicographically, so sorted collections list
/// the binary tree level by level.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BitString {
    bits: Vec<bool>,
}

impl BitString {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn from_bits(bits: &[u8]) -> Result<Self> {
        bits.iter()
            .map(|&b| match b {
                0 => Ok(false),
                1 => Ok(true),
                other => Err(Error::invalid(format!("bit must be 0 or 1, got {other}"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(|bits| Self { bits })
    }

    pub fn from_bools(bits: Vec<bool>) -> Self {
        Self { bits }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn bit(&self, n: usize) -> Option<u8> {
        self.bits.get(n).map(|&b| b as u8)
    }

    pub fn last(&self) -> Option<u8> {
        self.bits.last().map(|&b| b as u8)
    }

    /// `self ⌢ (bit)`.
    pub fn child(&self, bit: bool) -> Self {
        let mut bits = Vec::with_capacity(self.bits.len() + 1);
        bits.extend_from_slice(&self.bits);
        bits.push(bit);
        Self { bits }
    }

    pub fn parent(&self) -> Option<Self> {
        (!self.bits.is_empty()).then(|| self.prefix(self.bits.len() - 1))
    }

    pub fn prefix(&self, len: usize) -> Self {
        Self {
            bits: self.bits[..len.min(self.bits.len())].to_vec(),
        }
    }

    /// `self ⊑ other`.
    pub fn is_prefix_of(&self, other: &BitString) -> bool {
        other.bits.starts_with(&self.bits)
    }

    pub fn depth(&self) -> i64 {
        depth(self)
    }

    pub fn level(&self) -> Result<u64> {
        level(self)
    }

    /// Every binary string of length exactly `len`, in lexicographic order.
    pub fn all_of_len(len: usize) -> impl Iterator<Item = BitString> {
        assert!(len < 64, "enumerating 2^{len} strings is not supported");
        (0u64..(1u64 << len)).map(move |code| BitString {
            bits: (0..len).map(|k| (code >> (len - 1 - k)) & 1 == 1).collect(),
        })
    }
}

impl Ord for BitString {
    fn cmp(&self, other: &Self) -> Ordering {
        self.bits
            .len()
            .cmp(&other.bits.len())
            .then_with(|| self.bits.cmp(&other.bits))
    }
}

impl PartialOrd for BitString {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for BitString {
    /// The empty string prints as `-`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.bits.is_empty() {
            return write!(f, "-");
        }
        for &b in &self.bits {
            write!(f, "{}", b as u8)?;
        }
        Ok(())
    }
}

impl FromStr for BitString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "-" {
            return Ok(Self::empty());
        }
        s.chars()
            .enumerate()
            .map(|(pos, c)| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::Parse {
                    pos,
                    msg: format!("expected '0' or '1', found {other:?}"),
                }),
            })
            .collect::<Result<Vec<_>>>()
            .map(|bits| Self { bits })
    }
}

/// Depth of a string of length `len`; `-1` for the empty string.
pub fn depth_of_len(len: u64) -> i64 {
    if len == 0 {
        -1
    } else {
        // the largest row touched is the row where the last diagonal starts
        diagonal(len - 1) as i64
    }
}

/// Level of a string of length `len >= 1`.
pub fn level_of_len(len: u64) -> Result<u64> {
    if len == 0 {
        return Err(Error::domain("level is only defined for non-empty strings"));
    }
    Ok(unpair(len - 1).0)
}

/// The largest row reached by `s`, or `-1` for the empty string.
pub fn depth(s: &BitString) -> i64 {
    depth_of_len(s.len() as u64)
}

/// The row holding the last entry of `s`.
pub fn level(s: &BitString) -> Result<u64> {
    level_of_len(s.len() as u64)
}

/// Outcome of checking the depth/level transition laws on `(σ, σ⌢(bit))`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LawReport {
    pub checked: usize,
    pub violations: Vec<String>,
}

impl LawReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn merge(&mut self, other: LawReport) {
        self.checked += other.checked;
        self.violations.extend(other.violations);
    }
}

/// Checks the five depth/level laws for `σ = s` and `σ' = s⌢(bit)`.
pub fn extend_laws_check(s: &BitString, bit: bool) -> Result<LawReport> {
    if s.is_empty() {
        return Err(Error::domain(
            "the transition laws are stated for non-empty strings",
        ));
    }
    let t = s.child(bit);
    let (ds, dt) = (depth(s), depth(&t));
    let (ls, lt) = (level(s)? as i64, level(&t)? as i64);
    let mut report = LawReport {
        checked: 5,
        violations: Vec::new(),
    };
    let mut law = |ok: bool, name: &str| {
        if !ok {
            report
                .violations
                .push(format!("{name} fails for σ={s}, bit={}", bit as u8));
        }
    };
    law(ls <= ds && lt <= dt, "l(σ) <= d(σ)");
    law(ds <= dt, "σ ⊑ σ' => d(σ) <= d(σ')");
    law(dt <= ds + 1, "d(σ⌢(s)) <= d(σ)+1");
    law(
        ls != 0 || (lt == dt && dt == ds + 1),
        "l(σ)=0 => l(σ⌢(s)) = d(σ⌢(s)) = d(σ)+1",
    );
    law(
        ls <= 0 || (lt == ls - 1 && dt == ds),
        "l(σ)>0 => l(σ⌢(s)) = l(σ)-1 and d(σ⌢(s)) = d(σ)",
    );
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Walks the diagonals literally, row `d` first.
    fn scan_enumeration(count: u64) -> Vec<(u64, u64)> {
        let mut out = Vec::new();
        let mut d = 0;
        while (out.len() as u64) < count {
            for j in 0..=d {
                out.push((d - j, j));
            }
            d += 1;
        }
        out.truncate(count as usize);
        out
    }

    #[test]
    fn pairing_table() {
        let table = [
            ((0, 0), 0),
            ((1, 0), 1),
            ((0, 1), 2),
            ((2, 0), 3),
            ((1, 1), 4),
            ((0, 2), 5),
            ((3, 0), 6),
            ((2, 1), 7),
            ((1, 2), 8),
            ((0, 3), 9),
        ];
        for ((i, j), n) in table {
            assert_eq!(pair(i, j).unwrap(), n);
            assert_eq!(unpair(n), (i, j));
        }
    }

    #[test]
    fn matches_scan_oracle() {
        let scan = scan_enumeration(5000);
        for (n, &(i, j)) in scan.iter().enumerate() {
            assert_eq!(unpair(n as u64), (i, j));
            assert_eq!(pair(i, j).unwrap(), n as u64);
        }
        let idx = scan.iter().position(|&c| c == (17, 23)).unwrap() as u64;
        assert_eq!(pair(17, 23).unwrap(), idx);
        assert_eq!(unpair(idx), (17, 23));
    }

    #[test]
    fn pair_overflow_is_reported() {
        assert!(matches!(pair(u64::MAX, 1), Err(Error::Overflow(_))));
        assert!(matches!(pair(1 << 33, 0), Err(Error::Overflow(_))));
        let (i, j) = unpair(u64::MAX);
        assert_eq!(pair(i, j).unwrap(), u64::MAX);
    }

    #[test]
    fn depth_and_level_examples() {
        assert_eq!(depth_of_len(0), -1);
        assert_eq!(depth_of_len(1), 0);
        assert_eq!(depth_of_len(7), 3);
        assert_eq!(depth_of_len(8), 3);
        assert_eq!(level_of_len(1).unwrap(), 0);
        assert_eq!(level_of_len(7).unwrap(), 3);
        assert_eq!(level_of_len(8).unwrap(), 2);
        assert!(matches!(level_of_len(0), Err(Error::Domain(_))));
    }

    #[test]
    fn depth_matches_definition() {
        // d(σ) = max { i : some ⟨i,k⟩ < lh(σ) }
        for len in 1..200u64 {
            let brute = (0..len).map(|n| unpair(n).0).max().unwrap() as i64;
            assert_eq!(depth_of_len(len), brute, "len={len}");
        }
    }

    #[test]
    fn law_examples() {
        let s: BitString = "1".parse().unwrap();
        assert_eq!(level(&s).unwrap(), 0);
        let t = s.child(false);
        assert_eq!(level(&t).unwrap(), 1);
        assert_eq!(depth(&t), 1);
        assert!(extend_laws_check(&s, false).unwrap().passed());

        let s: BitString = "11".parse().unwrap();
        assert_eq!(level(&s).unwrap(), 1);
        let t = s.child(true);
        assert_eq!(level(&t).unwrap(), 0);
        assert_eq!(depth(&t), 1);
        assert!(extend_laws_check(&s, true).unwrap().passed());

        assert!(extend_laws_check(&BitString::empty(), true).is_err());
    }

    #[test]
    fn empty_string_extension() {
        let t = BitString::empty().child(true);
        assert_eq!(depth(&t), 0);
        assert_eq!(level(&t).unwrap(), 0);
    }

    #[test]
    fn bitstring_parse_and_order() {
        let s: BitString = "0110".parse().unwrap();
        assert_eq!(s.to_string(), "0110");
        assert_eq!("-".parse::<BitString>().unwrap(), BitString::empty());
        assert!(matches!(
            "01x".parse::<BitString>(),
            Err(Error::Parse { pos: 2, .. })
        ));
        assert!(BitString::from_bits(&[0, 2]).is_err());
        let mut v: Vec<BitString> = ["1", "00", "0", "-"]
            .iter()
            .map(|s| s.parse().unwrap())
            .collect();
        v.sort();
        let shown: Vec<String> = v.iter().map(|s| s.to_string()).collect();
        assert_eq!(shown, ["-", "0", "1", "00"]);
        assert_eq!(BitString::all_of_len(3).count(), 8);
        assert!("01".parse::<BitString>().unwrap().is_prefix_of(&s));
    }
}
