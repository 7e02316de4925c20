//! Finite descriptions of points of Cantor space, row by row on the pairing grid.
//!
//! Text form: clauses separated by `;`, each one of
//! `row=<i>:finite{j,...}`, `row=<i>:eventually(<j>)` or
//! `row=<i>:periodic(<r>,<m>,<j>)`. The empty string is the all-zero point.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{unpair, BitString};

/// The set of columns `j` with `α(⟨i, j⟩) = 1` in one row `i`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum RowPattern {
    FiniteOnes(BTreeSet<u64>),
    /// Every `j >= start`.
    EventuallyOne {
        start: u64,
    },
    /// Every `j >= start` with `j ≡ residue (mod modulus)`.
    PeriodicOnes {
        residue: u64,
        modulus: u64,
        start: u64,
    },
}

impl RowPattern {
    pub fn periodic(residue: u64, modulus: u64, start: u64) -> Result<Self> {
        if modulus == 0 || residue >= modulus {
            return Err(Error::invalid(format!(
                "periodic row needs 0 <= r < m, got r={residue}, m={modulus}"
            )));
        }
        Ok(RowPattern::PeriodicOnes {
            residue,
            modulus,
            start,
        })
    }

    pub fn bit(&self, j: u64) -> bool {
        match self {
            RowPattern::FiniteOnes(set) => set.contains(&j),
            RowPattern::EventuallyOne { start } => j >= *start,
            RowPattern::PeriodicOnes {
                residue,
                modulus,
                start,
            } => j >= *start && j % modulus == *residue,
        }
    }

    /// True iff the row has only finitely many ones.
    pub fn is_finite(&self) -> bool {
        matches!(self, RowPattern::FiniteOnes(_))
    }

    /// The least `j >= from` with a one.
    pub fn next_one(&self, from: u64) -> Option<u64> {
        match self {
            RowPattern::FiniteOnes(set) => set.range(from..).next().copied(),
            RowPattern::EventuallyOne { start } => Some(from.max(*start)),
            RowPattern::PeriodicOnes {
                residue,
                modulus,
                start,
            } => {
                let lo = from.max(*start);
                let offset = (residue + modulus - lo % modulus) % modulus;
                lo.checked_add(offset)
            }
        }
    }

    /// One past the last one for finite rows, `None` for infinite rows.
    pub fn zero_from(&self) -> Option<u64> {
        match self {
            RowPattern::FiniteOnes(set) => Some(set.last().map_or(0, |j| j + 1)),
            _ => None,
        }
    }
}

impl fmt::Display for RowPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RowPattern::FiniteOnes(set) => {
                let cols: Vec<String> = set.iter().map(u64::to_string).collect();
                write!(f, "finite{{{}}}", cols.join(","))
            }
            RowPattern::EventuallyOne { start } => write!(f, "eventually({start})"),
            RowPattern::PeriodicOnes {
                residue,
                modulus,
                start,
            } => {
                write!(f, "periodic({residue},{modulus},{start})")
            }
        }
    }
}

/// A point `α ∈ 2^ℕ` given by finitely many row patterns; other rows are zero.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlphaSpec {
    rows: BTreeMap<u64, RowPattern>,
}

impl AlphaSpec {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn with_row(mut self, row: u64, pattern: RowPattern) -> Self {
        self.rows.insert(row, pattern);
        self
    }

    pub fn set_row(&mut self, row: u64, pattern: RowPattern) {
        self.rows.insert(row, pattern);
    }

    pub fn rows(&self) -> &BTreeMap<u64, RowPattern> {
        &self.rows
    }

    pub fn row(&self, i: u64) -> Option<&RowPattern> {
        self.rows.get(&i)
    }

    pub fn cell(&self, i: u64, j: u64) -> bool {
        self.rows.get(&i).is_some_and(|r| r.bit(j))
    }

    /// `α(n)`.
    pub fn bit(&self, n: u64) -> bool {
        let (i, j) = unpair(n);
        self.cell(i, j)
    }

    pub fn in_p3(&self) -> bool {
        self.rows.values().all(RowPattern::is_finite)
    }

    /// Rows with infinitely many ones.
    pub fn bad_rows(&self) -> impl Iterator<Item = u64> + '_ {
        self.rows
            .iter()
            .filter(|(_, r)| !r.is_finite())
            .map(|(&i, _)| i)
    }

    /// `(α(0), ..., α(len - 1))`.
    pub fn prefix(&self, len: usize) -> BitString {
        BitString::from_bools((0..len as u64).map(|n| self.bit(n)).collect())
    }

    /// The least `j_0` such that rows `0..=i` vanish from column `j_0` on,
    /// or `None` if one of those rows has infinitely many ones.
    pub fn zero_column(&self, i: u64) -> Option<u64> {
        self.rows
            .range(..=i)
            .map(|(_, r)| r.zero_from())
            .try_fold(0, |acc, z| z.map(|z| acc.max(z)))
    }
}

/// `α(n)` for the point described by `spec`.
pub fn alpha_bit(spec: &AlphaSpec, n: u64) -> bool {
    spec.bit(n)
}

/// `α ∈ P3`: every row is eventually zero.
pub fn in_p3(spec: &AlphaSpec) -> bool {
    spec.in_p3()
}

impl fmt::Display for AlphaSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, (i, r)) in self.rows.iter().enumerate() {
            if k > 0 {
                f.write_str(";")?;
            }
            write!(f, "row={i}:{r}")?;
        }
        Ok(())
    }
}

struct Cursor<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn err(&self, msg: impl Into<String>) -> Error {
        let rest: String = self.src[self.pos..].chars().take(12).collect();
        let msg = msg.into();
        Error::Parse {
            pos: self.pos,
            msg: if rest.is_empty() {
                format!("{msg} at end of input")
            } else {
                format!("{msg} near {rest:?}")
            },
        }
    }

    fn skip_ws(&mut self) {
        while self.src[self.pos..].starts_with(char::is_whitespace) {
            self.pos += self.src[self.pos..]
                .chars()
                .next()
                .map_or(1, char::len_utf8);
        }
    }

    fn eat(&mut self, token: &str) -> bool {
        self.skip_ws();
        if self.src[self.pos..].starts_with(token) {
            self.pos += token.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, token: &str) -> Result<()> {
        if self.eat(token) {
            Ok(())
        } else {
            Err(self.err(format!("expected {token:?}")))
        }
    }

    fn number(&mut self) -> Result<u64> {
        self.skip_ws();
        let digits = self.src[self.pos..]
            .bytes()
            .take_while(u8::is_ascii_digit)
            .count();
        if digits == 0 {
            return Err(self.err("expected a natural number"));
        }
        let n = self.src[self.pos..self.pos + digits]
            .parse()
            .map_err(|_| self.err("number out of range"))?;
        self.pos += digits;
        Ok(n)
    }

    fn at_end(&mut self) -> bool {
        self.skip_ws();
        self.pos == self.src.len()
    }
}

impl FromStr for AlphaSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut c = Cursor { src: s, pos: 0 };
        let mut spec = AlphaSpec::zero();
        if c.at_end() {
            return Ok(spec);
        }
        loop {
            let clause_start = c.pos;
            c.expect("row=")?;
            let row = c.number()?;
            c.expect(":")?;
            let pattern = if c.eat("finite") {
                c.expect("{")?;
                let mut cols = BTreeSet::new();
                if !c.eat("}") {
                    loop {
                        cols.insert(c.number()?);
                        if c.eat("}") {
                            break;
                        }
                        c.expect(",")?;
                    }
                }
                RowPattern::FiniteOnes(cols)
            } else if c.eat("eventually") {
                c.expect("(")?;
                let start = c.number()?;
                c.expect(")")?;
                RowPattern::EventuallyOne { start }
            } else if c.eat("periodic") {
                c.expect("(")?;
                let r = c.number()?;
                c.expect(",")?;
                let m = c.number()?;
                c.expect(",")?;
                let j = c.number()?;
                c.expect(")")?;
                RowPattern::periodic(r, m, j).map_err(|e| Error::Parse {
                    pos: clause_start,
                    msg: e.to_string(),
                })?
            } else {
                return Err(c.err("expected finite{...}, eventually(...) or periodic(...)"));
            };
            if spec.rows.insert(row, pattern).is_some() {
                return Err(Error::Parse {
                    pos: clause_start,
                    msg: format!("row {row} declared twice"),
                });
            }
            if c.at_end() {
                return Ok(spec);
            }
            c.expect(";")?;
        }
    }
}
