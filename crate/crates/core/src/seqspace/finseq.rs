use std::fmt;

use serde::{Deserialize, Serialize};

/// Index and length type for finite sequences.
///
/// Witness blocks can be astronomically long (a single constant run may hold
/// more than 2^64 entries), so lengths are 128-bit.
pub type Count = u128;

/// `count` consecutive copies of `value`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Run {
    pub value: f64,
    pub count: Count,
}

/// A finite sequence of reals, identified with its zero padding.
///
/// Stored as maximal runs of equal values. The representation is canonical:
/// no run is empty and adjacent runs hold different values, so structural
/// equality is sequence equality.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FinSeq {
    runs: Vec<Run>,
}

impl FinSeq {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_values<I: IntoIterator<Item = f64>>(values: I) -> Self {
        let mut s = Self::new();
        for v in values {
            s.push(v);
        }
        s
    }

    /// `count` copies of `value`.
    pub fn constant(value: f64, count: Count) -> Self {
        let mut s = Self::new();
        s.push_run(value, count);
        s
    }

    pub fn from_runs<I: IntoIterator<Item = Run>>(runs: I) -> Self {
        let mut s = Self::new();
        for r in runs {
            s.push_run(r.value, r.count);
        }
        s
    }

    pub fn push(&mut self, value: f64) {
        self.push_run(value, 1);
    }

    pub fn push_run(&mut self, value: f64, count: Count) {
        if count == 0 {
            return;
        }
        match self.runs.last_mut() {
            Some(last) if last.value == value => last.count += count,
            _ => self.runs.push(Run { value, count }),
        }
    }

    pub fn runs(&self) -> &[Run] {
        &self.runs
    }

    pub fn len(&self) -> Count {
        self.runs.iter().map(|r| r.count).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.runs.is_empty()
    }

    pub fn append(&mut self, other: &FinSeq) {
        for r in &other.runs {
            self.push_run(r.value, r.count);
        }
    }

    /// `self` followed by `other`.
    pub fn concat(&self, other: &FinSeq) -> FinSeq {
        let mut out = self.clone();
        out.append(other);
        out
    }

    pub fn get(&self, index: Count) -> Option<f64> {
        let mut start: Count = 0;
        for r in &self.runs {
            if index < start + r.count {
                return Some(r.value);
            }
            start += r.count;
        }
        None
    }

    /// Expands the runs entry by entry. Only sensible for short sequences.
    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.runs.iter().flat_map(|r| {
            std::iter::repeat_n(r.value, usize::try_from(r.count).unwrap_or(usize::MAX))
        })
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.values().collect()
    }

    /// Splits into the first `at` entries and the rest (`at` is clamped to the length).
    pub fn split_at(&self, at: Count) -> (FinSeq, FinSeq) {
        let mut head = FinSeq::new();
        let mut tail = FinSeq::new();
        let mut left = at;
        for r in &self.runs {
            if left >= r.count {
                head.push_run(r.value, r.count);
                left -= r.count;
            } else {
                head.push_run(r.value, left);
                tail.push_run(r.value, r.count - left);
                left = 0;
            }
        }
        (head, tail)
    }

    pub fn starts_with(&self, prefix: &FinSeq) -> bool {
        prefix.len() <= self.len() && self.split_at(prefix.len()).0 == *prefix
    }

    /// The block `v` with `prefix ⌢ v == self`, if `prefix` is an initial segment.
    pub fn strip_prefix(&self, prefix: &FinSeq) -> Option<FinSeq> {
        let (head, tail) = self.split_at(prefix.len());
        (head == *prefix).then_some(tail)
    }

    pub fn truncate(&self, len: Count) -> FinSeq {
        self.split_at(len).0
    }

    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> FinSeq {
        FinSeq::from_runs(self.runs.iter().map(|r| Run {
            value: f(r.value),
            count: r.count,
        }))
    }

    pub fn scale(&self, factor: f64) -> FinSeq {
        self.map(|v| v * factor)
    }

    /// Entrywise difference `self - other`, the shorter side zero-padded.
    pub fn sub(&self, other: &FinSeq) -> FinSeq {
        zip_padded(self, other, |a, b| a - b)
    }

    pub fn all_finite(&self) -> bool {
        self.runs.iter().all(|r| r.value.is_finite())
    }

    pub fn min_value(&self) -> Option<f64> {
        self.runs.iter().map(|r| r.value).reduce(f64::min)
    }
}

/// Combines two sequences entrywise over the longer length, padding with zeros.
pub fn zip_padded<F: Fn(f64, f64) -> f64>(x: &FinSeq, y: &FinSeq, f: F) -> FinSeq {
    let mut out = FinSeq::new();
    let (mut i, mut j) = (0usize, 0usize);
    let (mut left_x, mut left_y) = (
        x.runs.first().map_or(0, |r| r.count),
        y.runs.first().map_or(0, |r| r.count),
    );
    loop {
        let xv = x.runs.get(i).map(|r| r.value);
        let yv = y.runs.get(j).map(|r| r.value);
        let step = match (xv, yv) {
            (None, None) => break,
            (Some(_), None) => left_x,
            (None, Some(_)) => left_y,
            (Some(_), Some(_)) => left_x.min(left_y),
        };
        out.push_run(f(xv.unwrap_or(0.0), yv.unwrap_or(0.0)), step);
        if xv.is_some() {
            left_x -= step;
            if left_x == 0 {
                i += 1;
                left_x = x.runs.get(i).map_or(0, |r| r.count);
            }
        }
        if yv.is_some() {
            left_y -= step;
            if left_y == 0 {
                j += 1;
                left_y = y.runs.get(j).map_or(0, |r| r.count);
            }
        }
    }
    out
}

impl From<Vec<f64>> for FinSeq {
    fn from(v: Vec<f64>) -> Self {
        FinSeq::from_values(v)
    }
}

impl From<&[f64]> for FinSeq {
    fn from(v: &[f64]) -> Self {
        FinSeq::from_values(v.iter().copied())
    }
}

impl fmt::Display for FinSeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (k, r) in self.runs.iter().enumerate() {
            if k > 0 {
                write!(f, ", ")?;
            }
            if r.count == 1 {
                write!(f, "{}", r.value)?;
            } else {
                write!(f, "{}x{}", r.value, r.count)?;
            }
        }
        write!(f, ")")
    }
}
