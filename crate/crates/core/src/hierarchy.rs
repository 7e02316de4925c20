//! Double sequences on the pairing grid, the embedding inequalities used to move
//! the reduction into `c_0`, `ℓ^∞` and `⋂_{q>b} ℓ^q`, and finite certificates
//! for the fourth-level sets built from countably many reductions.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::construction::ConstructionCache;
use crate::error::{Error, Result};
use crate::grid::{pair, unpair};
use crate::reduction::{f_blocks, scale_prefix, AlphaSpec, PrefixCertificate};
use crate::seqspace::{frechet_metric, pnorm_pow, sup_norm, Count, ExpLadder, Exponent, FinSeq};
use crate::witness::InequalityCheck;

/// A sequence read as `x_{m,t} = flat(⟨m, t⟩)`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DoubleSeq {
    pub flat: FinSeq,
}

impl DoubleSeq {
    pub fn new(flat: FinSeq) -> Self {
        Self { flat }
    }

    pub fn row(&self, m: u64) -> FinSeq {
        extract_row(self, m)
    }
}

/// `(x_{m,t})_t` for every `t` with `⟨m, t⟩ < lh(flat)`.
pub fn extract_row(d: &DoubleSeq, m: u64) -> FinSeq {
    let len = d.flat.len();
    let mut out = FinSeq::new();
    let mut runs = d.flat.runs().iter();
    let mut run = runs.next();
    let mut run_start: Count = 0;
    for t in 0.. {
        let Ok(n) = pair(m, t) else { break };
        let n = n as Count;
        if n >= len {
            break;
        }
        while let Some(r) = run {
            if n < run_start + r.count {
                break;
            }
            run_start += r.count;
            run = runs.next();
        }
        out.push(run.map_or(0.0, |r| r.value));
    }
    out
}

/// The flat sequence of length `upto` with `flat(⟨m, t⟩) = rows[m](t)`, zero where undefined.
pub fn interleave(rows: &[FinSeq], upto: u64) -> DoubleSeq {
    let mut dense: Vec<Option<Vec<f64>>> = vec![None; rows.len()];
    let mut flat = FinSeq::new();
    for n in 0..upto {
        let (m, t) = unpair(n);
        let v = rows.get(m as usize).map_or(0.0, |r| {
            if r.len() <= 1 << 16 {
                let d = dense[m as usize].get_or_insert_with(|| r.to_vec());
                d.get(t as usize).copied().unwrap_or(0.0)
            } else {
                r.get(t as Count).unwrap_or(0.0)
            }
        });
        flat.push(v);
    }
    DoubleSeq { flat }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingReport {
    pub checks: Vec<InequalityCheck>,
    /// Conditional inequalities whose hypothesis failed on this pair.
    pub skipped: Vec<String>,
}

impl EmbeddingReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.holds)
    }
}

fn leq(name: &str, lhs: f64, rhs: f64) -> InequalityCheck {
    InequalityCheck {
        name: name.to_string(),
        lhs,
        rhs,
        holds: lhs <= rhs * (1.0 + 1e-12),
    }
}

/// Checks `‖x - y‖_∞ ≤ ‖x - y‖_b` (or `‖x - y‖_∞^b ≤ d_b(x, y)` for `b < 1`) and
/// that the first `terms` summands of `d_{>b}(x, y)` stay below `‖x - y‖_b`,
/// resp. below `d_b(x, y)` when `b < 1` and `d_b(x, y) < 1`.
pub fn embedding_inequality_check(
    x: &FinSeq,
    y: &FinSeq,
    b: Exponent,
    ladder: &ExpLadder,
    terms: usize,
) -> Result<EmbeddingReport> {
    if ladder.floor() != b.value() {
        return Err(Error::invalid(format!(
            "ladder floor {} differs from b = {}",
            ladder.floor(),
            b.value()
        )));
    }
    let diff = x.sub(y);
    let sup = sup_norm(&diff);
    let pow = pnorm_pow(&diff, b)?;
    let fr = frechet_metric(x, y, ladder, terms)?;
    let mut checks = Vec::new();
    let mut skipped = Vec::new();
    if b.value() >= 1.0 {
        let norm = pow.powf(1.0 / b.value());
        checks.push(leq("sup <= b-norm", sup, norm));
        checks.push(leq("frechet <= b-norm", fr.value, norm));
    } else {
        checks.push(leq("sup^b <= d_b", sup.powf(b.value()), pow));
        if pow < 1.0 {
            checks.push(leq("frechet <= d_b", fr.value, pow));
        } else {
            skipped.push(format!("frechet <= d_b needs d_b < 1, got {pow}"));
        }
    }
    Ok(EmbeddingReport { checks, skipped })
}

/// Finite data for the point `z ↦ (f_m(z))_m` of `ℓ^q`, each component scaled
/// so that its `q`-power is at most `2^-m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pi4Certificate {
    pub components: Vec<PrefixCertificate>,
    pub scalings: Vec<f64>,
    /// Component `m` lies in `⋂_{p>a} ℓ^p` iff its point is in P3.
    pub rows_in_intersection: Vec<bool>,
    pub interleaved: DoubleSeq,
    /// True if `interleaved` covers every entry of every component prefix.
    pub complete: bool,
}

impl Pi4Certificate {
    /// Some row lies in the intersection. Components past the declared ones
    /// are zero, so this always holds for a finite list.
    pub fn point_in_a(&self) -> bool {
        true
    }

    /// Every row avoids the intersection; never true for finitely many declared components.
    pub fn point_in_b(&self) -> bool {
        !self.point_in_a()
    }

    /// `(m, δ_m^q·(prefix q-power + tail bound), 2^-m)` for each component.
    pub fn component_bounds(&self) -> Result<Vec<(usize, f64, f64)>> {
        self.components
            .iter()
            .enumerate()
            .map(|(m, c)| Ok((m, c.q_pow_upper()?, 0.5f64.powi(m as i32))))
            .collect()
    }

    pub fn violations(&self) -> Result<Vec<String>> {
        Ok(self
            .component_bounds()?
            .into_iter()
            .filter(|(_, v, bound)| v > bound)
            .map(|(m, v, bound)| format!("component {m}: q-power bound {v} exceeds {bound}"))
            .collect())
    }

    /// Text export: a header, then one record per component
    /// `m<TAB>scale<TAB>in_intersection<TAB>tail_q_bound<TAB>value*count ...`.
    pub fn export_string(&self) -> String {
        let q = self.components.first().map_or(f64::NAN, |c| c.q.value());
        let mut s = String::from("# lprl pi4 certificate v1\n");
        let _ = writeln!(
            s,
            "# q={q:e} components={} interleaved_len={} complete={}",
            self.components.len(),
            self.interleaved.flat.len(),
            self.complete
        );
        for (m, c) in self.components.iter().enumerate() {
            let runs: Vec<String> = c
                .prefix
                .runs()
                .iter()
                .map(|r| format!("{:e}*{}", r.value, r.count))
                .collect();
            let _ = writeln!(
                s,
                "{m}\t{:e}\t{}\t{:e}\t{}",
                self.scalings[m],
                self.rows_in_intersection[m],
                c.tail_q_bound,
                runs.join(" ")
            );
        }
        s
    }
}

/// Builds component `m` from `specs[m]` with `k + 1` blocks, scales it by
/// `δ_m = min(1, (2^-m / max(q-power bound, tiny))^{1/q})` and interleaves the
/// scaled prefixes into at most `max_flat` entries.
pub fn build_pi4_certificate(
    cache: &mut ConstructionCache,
    specs: &[AlphaSpec],
    k: usize,
    max_flat: u64,
) -> Result<Pi4Certificate> {
    let q = cache.config().q().value();
    let mut components = Vec::with_capacity(specs.len());
    let mut scalings = Vec::with_capacity(specs.len());
    for (m, spec) in specs.iter().enumerate() {
        let pc = f_blocks(cache, spec, k)?.certificate();
        let target = 0.5f64.powi(m as i32);
        let upper = pc.q_pow_upper()?.max(f64::MIN_POSITIVE);
        let mut delta = if upper <= target {
            1.0
        } else {
            (target / upper).powf(1.0 / q)
        };
        let mut scaled = scale_prefix(&pc, delta)?;
        // absorb rounding in the scaled sum
        while scaled.q_pow_upper()? > target {
            delta *= 1.0 - 1e-12;
            scaled = scale_prefix(&pc, delta)?;
        }
        components.push(scaled);
        scalings.push(delta);
    }
    let needed = components
        .iter()
        .enumerate()
        .map(|(m, c)| {
            if c.prefix.is_empty() {
                return Some(0);
            }
            let last = u64::try_from(c.prefix.len() - 1).ok()?;
            pair(m as u64, last).ok().map(|n| n + 1)
        })
        .try_fold(0u64, |acc, n| n.map(|n| acc.max(n)));
    let (upto, complete) = match needed {
        Some(n) if n <= max_flat => (n, true),
        _ => (max_flat, false),
    };
    let rows: Vec<FinSeq> = components.iter().map(|c| c.prefix.clone()).collect();
    Ok(Pi4Certificate {
        rows_in_intersection: specs.iter().map(AlphaSpec::in_p3).collect(),
        interleaved: interleave(&rows, upto),
        complete,
        components,
        scalings,
    })
}
