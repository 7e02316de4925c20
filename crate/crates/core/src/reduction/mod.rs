//! The reduction `f: 2^ℕ → ℓ^q`, examined one finite prefix at a time.
//!
//! `f(α)` is the limit of `φ((α(0), ..., α(k)))`; its blocks `u_k^α` are the
//! successive increments. Everything here is computed on a
//! [`ConstructionCache`], building missing nodes along the path on demand.

mod alpha;
mod export;

use serde::{Deserialize, Serialize};

use crate::construction::ConstructionCache;
use crate::error::{Error, Result};
use crate::grid::{pair, BitString};
use crate::seqspace::{certified_less, pnorm_pow, Count, Exponent, FinSeq, Margin};

pub use alpha::{alpha_bit, in_p3, AlphaSpec, RowPattern};
pub use export::{block_table_csv, read_prefix, write_prefix};

/// The blocks `u_0, ..., u_k` of `f` along one path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockDecomposition {
    pub blocks: Vec<FinSeq>,
    /// `(α(0), ..., α(k))`.
    pub sigma: BitString,
    /// The point the path came from; `None` for raw bit strings.
    pub alpha: Option<AlphaSpec>,
    pub k: usize,
    pub q: Exponent,
}

impl BlockDecomposition {
    /// `u_0 ⌢ ... ⌢ u_k`, which equals `φ(σ)`.
    pub fn prefix(&self) -> FinSeq {
        let mut out = FinSeq::new();
        for b in &self.blocks {
            out.append(b);
        }
        out
    }

    pub fn certificate(&self) -> PrefixCertificate {
        PrefixCertificate {
            prefix: self.prefix(),
            blocks_used: self.k,
            tail_q_bound: 0.5f64.powi(self.k as i32 + 1),
            q: self.q,
            scale: 1.0,
        }
    }
}

/// An initial segment of `f(α)` (or of `δ·f(α)`), with a bound on the `q`-power
/// of everything after it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrefixCertificate {
    pub prefix: FinSeq,
    pub blocks_used: usize,
    pub tail_q_bound: f64,
    pub q: Exponent,
    /// The factor `δ` applied to `f`.
    pub scale: f64,
}

impl PrefixCertificate {
    pub fn q_pow(&self) -> Result<f64> {
        pnorm_pow(&self.prefix, self.q)
    }

    /// Upper bound on the `q`-power of the whole infinite sequence.
    pub fn q_pow_upper(&self) -> Result<f64> {
        Ok(self.q_pow()? + self.tail_q_bound)
    }
}

/// Blocks along the path of `spec` up to index `k`.
pub fn f_blocks(
    cache: &mut ConstructionCache,
    spec: &AlphaSpec,
    k: usize,
) -> Result<BlockDecomposition> {
    let mut bd = blocks_from_bits(cache, &spec.prefix(k + 1))?;
    bd.alpha = Some(spec.clone());
    Ok(bd)
}

/// Blocks along an arbitrary non-empty bit string; no membership claims are attached.
pub fn blocks_from_bits(
    cache: &mut ConstructionCache,
    sigma: &BitString,
) -> Result<BlockDecomposition> {
    if sigma.is_empty() {
        return Err(Error::invalid(
            "a block decomposition needs at least one bit",
        ));
    }
    cache.build_node(sigma)?;
    let mut blocks = Vec::with_capacity(sigma.len());
    let mut prev = FinSeq::new();
    for len in 1..=sigma.len() {
        let phi = &cache
            .get(&sigma.prefix(len))
            .expect("prefixes were built")
            .phi;
        let block = phi.strip_prefix(&prev).ok_or_else(|| {
            Error::Precondition(format!("φ is not prefix coherent below {sigma}"))
        })?;
        blocks.push(block);
        prev = phi.clone();
    }
    Ok(BlockDecomposition {
        blocks,
        sigma: sigma.clone(),
        alpha: None,
        k: sigma.len() - 1,
        q: cache.config().q(),
    })
}

/// `δ·prefix`, with the tail bound scaled by `δ^q`.
pub fn scale_prefix(pc: &PrefixCertificate, delta: f64) -> Result<PrefixCertificate> {
    if !(delta.is_finite() && delta > 0.0) {
        return Err(Error::invalid(format!(
            "scale must be finite and > 0, got {delta}"
        )));
    }
    Ok(PrefixCertificate {
        prefix: pc.prefix.scale(delta),
        blocks_used: pc.blocks_used,
        tail_q_bound: pc.tail_q_bound * delta.powf(pc.q.value()),
        q: pc.q,
        scale: pc.scale * delta,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitBallReport {
    pub block_q_pows: Vec<f64>,
    /// `Σ_{t<=k} ‖u_t‖_q^q`.
    pub partial_sum: f64,
    /// `‖u_0 ⌢ ... ⌢ u_k‖_q^q`, summed directly.
    pub prefix_q_pow: f64,
    pub violations: Vec<String>,
}

impl UnitBallReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks `‖u_t‖_q^q < 2^-(t+1)` for every block and that the prefix stays in the unit ball.
pub fn unit_ball_check(bd: &BlockDecomposition, m: Margin) -> Result<UnitBallReport> {
    let mut violations = Vec::new();
    let mut block_q_pows = Vec::with_capacity(bd.blocks.len());
    let mut budget = 0.0;
    for (t, block) in bd.blocks.iter().enumerate() {
        let qp = pnorm_pow(block, bd.q)?;
        let bound = 0.5f64.powi(t as i32 + 1);
        budget += bound;
        if !certified_less(qp, bound, m) {
            violations.push(format!(
                "block {t} of {}: q-power {qp} not below {bound}",
                bd.sigma
            ));
        }
        block_q_pows.push(qp);
    }
    let partial_sum: f64 = block_q_pows.iter().sum();
    let prefix_q_pow = pnorm_pow(&bd.prefix(), bd.q)?;
    for (what, v) in [
        ("partial block sum", partial_sum),
        ("prefix q-power", prefix_q_pow),
    ] {
        if v > budget + m.eta() || v > 1.0 {
            violations.push(format!("{what} {v} of {} exceeds {budget}", bd.sigma));
        }
    }
    Ok(UnitBallReport {
        block_q_pows,
        partial_sum,
        prefix_q_pow,
        violations,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuityReport {
    pub agree_to: usize,
    pub blocks: usize,
    /// `‖x - y‖_q` for `q >= 1`, `d_q(x, y)` for `q < 1`, on the truncations.
    pub distance: f64,
    pub bound: f64,
    /// `u_t^A = u_t^B` for every `t <= agree_to`.
    pub shared_blocks_identical: bool,
}

impl ContinuityReport {
    pub fn holds(&self) -> bool {
        self.shared_blocks_identical && self.distance <= self.bound
    }
}

/// Compares `f` on two points that agree on indices `0..=agree_to`, using
/// `agree_to + k_extra + 1` blocks of each.
pub fn continuity_check(
    cache: &mut ConstructionCache,
    a: &AlphaSpec,
    b: &AlphaSpec,
    agree_to: usize,
    k_extra: usize,
) -> Result<ContinuityReport> {
    if let Some(n) = (0..=agree_to as u64).find(|&n| a.bit(n) != b.bit(n)) {
        return Err(Error::domain(format!(
            "points differ at index {n}, before the agreement horizon {agree_to}"
        )));
    }
    let k = agree_to + k_extra;
    let x = f_blocks(cache, a, k)?;
    let y = f_blocks(cache, b, k)?;
    let q = x.q.value();
    let diff_pow = pnorm_pow(&x.prefix().sub(&y.prefix()), x.q)?;
    let exp = -((agree_to + 1) as f64);
    let (distance, bound) = if q >= 1.0 {
        (diff_pow.powf(1.0 / q), 2.0 * (exp / q).exp2())
    } else {
        (diff_pow, 2.0 * exp.exp2())
    };
    Ok(ContinuityReport {
        agree_to,
        blocks: k + 1,
        distance,
        bound,
        shared_blocks_identical: x.blocks[..=agree_to] == y.blocks[..=agree_to],
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DivergenceWitness {
    pub row: u64,
    /// The index `⟨row, j⟩` of the one that pushed the sum past the target.
    pub index: u64,
    pub prefix_len: Count,
    /// `δ^p · ‖φ‖_p^p` of the returned prefix, `p = p_row`.
    pub norm_value: f64,
    pub exponent: f64,
}

/// Walks the ones of an infinite row until the `p_row`-power sum of the prefix exceeds `target`.
pub fn divergence_witness(
    cache: &mut ConstructionCache,
    spec: &AlphaSpec,
    row: u64,
    target: f64,
) -> Result<DivergenceWitness> {
    divergence_witness_scaled(cache, spec, row, target, 1.0)
}

/// As [`divergence_witness`] for `δ·f`.
pub fn divergence_witness_scaled(
    cache: &mut ConstructionCache,
    spec: &AlphaSpec,
    row: u64,
    target: f64,
    delta: f64,
) -> Result<DivergenceWitness> {
    let pattern = match spec.row(row) {
        Some(p) if !p.is_finite() => p.clone(),
        _ => {
            return Err(Error::domain(format!(
                "row {row} of {spec:?} has finitely many ones"
            )))
        }
    };
    if !(delta.is_finite() && delta > 0.0) {
        return Err(Error::invalid(format!(
            "scale must be finite and > 0, got {delta}"
        )));
    }
    let m = cache.config().margin;
    let p = cache.config().p(row as usize);
    let weight = delta.powf(p.value());
    let mut j = pattern.next_one(0);
    while let Some(col) = j {
        let index = pair(row, col)?;
        let node = cache.build_node(&spec.prefix(index as usize + 1))?;
        let norm_value = weight * pnorm_pow(&node.phi, p)?;
        if certified_less(target, norm_value, m) {
            return Ok(DivergenceWitness {
                row,
                index,
                prefix_len: node.phi.len(),
                norm_value,
                exponent: p.value(),
            });
        }
        if weight * (index as f64 + 1.0) > target + m.eta() {
            return Err(Error::Precondition(format!(
                "p_{row}-power {norm_value} after the one at index {index} does not exceed {}",
                weight * (index as f64 + 1.0)
            )));
        }
        j = col.checked_add(1).and_then(|c| pattern.next_one(c));
    }
    Err(Error::Overflow(format!("ran out of columns in row {row}")))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilizationReport {
    pub row: u64,
    pub j0: u64,
    /// `⟨row, j0⟩`; `σ_0` has length `start_index + 1`.
    pub start_index: u64,
    /// `M_row(σ_0)`.
    pub cap: u64,
    pub checked: usize,
    pub max_p_pow: f64,
    pub violations: Vec<String>,
}

impl StabilizationReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// For `α ∈ P3`, checks that `M_i` is frozen from `σ_0` on and bounds every
/// later prefix's `p_i`-power sum, through index `max_k`.
pub fn stabilization_check(
    cache: &mut ConstructionCache,
    spec: &AlphaSpec,
    i: u64,
    max_k: u64,
) -> Result<StabilizationReport> {
    if !spec.in_p3() {
        return Err(Error::domain(format!("{spec} is not in P3")));
    }
    let j0 = spec.zero_column(i).expect("P3 rows are eventually zero");
    let start_index = pair(i, j0)?;
    let idx = i as usize;
    let p = cache.config().p(idx);
    let m = cache.config().margin;
    let cap = cache
        .build_node(&spec.prefix(start_index as usize + 1))?
        .caps[idx];
    let mut report = StabilizationReport {
        row: i,
        j0,
        start_index,
        cap,
        checked: 0,
        max_p_pow: 0.0,
        violations: Vec::new(),
    };
    for k in start_index..=max_k {
        let node = cache.build_node(&spec.prefix(k as usize + 1))?;
        let pp = pnorm_pow(&node.phi, p)?;
        report.checked += 1;
        report.max_p_pow = report.max_p_pow.max(pp);
        if node.caps[idx] != cap {
            report
                .violations
                .push(format!("M_{i} changed to {} at index {k}", node.caps[idx]));
        }
        if !certified_less(pp, cap as f64, m) {
            report.violations.push(format!(
                "p_{i}-power {pp} at index {k} not below M_{i} = {cap}"
            ));
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construction::ConstructionConfig;

    fn cache(a: f64, q: f64) -> ConstructionCache {
        ConstructionCache::new(ConstructionConfig::new(a, q).unwrap())
    }

    fn spec(s: &str) -> AlphaSpec {
        s.parse().unwrap()
    }

    #[test]
    fn zero_point_blocks() {
        let mut c = cache(0.0, 2.0);
        let bd = f_blocks(&mut c, &AlphaSpec::zero(), 5).unwrap();
        assert_eq!(bd.blocks.len(), 6);
        assert!(bd.blocks.iter().all(|b| b.to_vec() == vec![0.0]));
        assert_eq!(bd.prefix().to_vec(), vec![0.0; 6]);
        let r = unit_ball_check(&bd, Margin::default()).unwrap();
        assert!(r.passed());
        assert_eq!(r.partial_sum, 0.0);
    }

    #[test]
    fn first_block_is_phi_of_first_bit() {
        let mut c = cache(0.0, 0.5);
        for s in ["", "row=0:eventually(0)"] {
            let a = spec(s);
            let bd = f_blocks(&mut c, &a, 0).unwrap();
            assert_eq!(bd.blocks.len(), 1);
            assert_eq!(bd.blocks[0], c.get(&a.prefix(1)).unwrap().phi);
        }
    }

    #[test]
    fn block_bound_on_a_bad_row() {
        let mut c = cache(0.0, 2.0);
        let bd = f_blocks(&mut c, &spec("row=0:eventually(0)"), 2).unwrap();
        for (t, b) in bd.blocks.iter().enumerate() {
            let direct: f64 = b.values().map(|v| v * v).sum();
            assert!(direct < 0.5f64.powi(t as i32 + 1));
        }
        assert_eq!(bd.prefix(), c.get(&bd.sigma).unwrap().phi);
    }

    #[test]
    fn paths_are_consistent() {
        let mut c = cache(0.0, 2.0);
        let a = spec("row=1:periodic(0,2,0)");
        let short = f_blocks(&mut c, &a, 4).unwrap();
        let long = f_blocks(&mut c, &a, 9).unwrap();
        assert_eq!(short.blocks[..], long.blocks[..5]);
    }

    #[test]
    fn scaling() {
        let mut c = cache(0.0, 2.0);
        let pc = f_blocks(&mut c, &spec("row=0:eventually(0)"), 6)
            .unwrap()
            .certificate();
        assert_eq!(scale_prefix(&pc, 1.0).unwrap(), pc);
        let half = scale_prefix(&pc, 0.5).unwrap();
        assert!((half.q_pow().unwrap() - pc.q_pow().unwrap() / 4.0).abs() < 1e-12);
        assert!(half.q_pow_upper().unwrap() <= 0.25);
        assert_eq!(half.tail_q_bound, pc.tail_q_bound / 4.0);
        assert!(scale_prefix(&pc, 0.0).is_err());
    }

    #[test]
    fn continuity_on_close_points() {
        for q in [2.0, 0.5] {
            let mut c = cache(0.0, q);
            let a = AlphaSpec::zero();
            let same = continuity_check(&mut c, &a, &a, 4, 3).unwrap();
            assert_eq!(same.distance, 0.0);
            let b = AlphaSpec::zero().with_row(0, RowPattern::FiniteOnes([4].into()));
            // ⟨0,4⟩ = 14, so the points agree up to 13
            let r = continuity_check(&mut c, &a, &b, 13, 2).unwrap();
            assert!(r.holds(), "{r:?}");
            assert!(r.distance > 0.0);
            assert!(matches!(
                continuity_check(&mut c, &a, &b, 14, 0),
                Err(Error::Domain(_))
            ));
        }
    }

    #[test]
    fn divergence() {
        let mut c = cache(0.0, 2.0);
        let a = spec("row=0:eventually(0)");
        let w = divergence_witness(&mut c, &a, 0, 3.0).unwrap();
        let phi = &c.get(&a.prefix(w.index as usize + 1)).unwrap().phi;
        let p0 = c.config().p(0).value();
        let resum: f64 = phi.values().map(|v| v.powf(p0)).sum();
        assert!(resum > 3.0);
        assert_eq!(phi.len(), w.prefix_len);

        let w0 = divergence_witness(&mut c, &a, 0, 0.0).unwrap();
        assert_eq!(w0.index, 0);
        let mut last = 0;
        for t in [0.0, 1.0, 2.0, 3.0, 5.0, 8.0] {
            let w = divergence_witness(&mut c, &a, 0, t).unwrap();
            assert!(w.prefix_len >= last);
            last = w.prefix_len;
        }
        assert!(matches!(
            divergence_witness(&mut c, &a, 1, 3.0),
            Err(Error::Domain(_))
        ));

        let delta: f64 = 0.5;
        let scaled = divergence_witness_scaled(&mut c, &a, 0, 3.0 * delta.powf(p0), delta).unwrap();
        assert!(scaled.norm_value > 3.0 * delta.powf(p0));
    }

    #[test]
    fn stabilization() {
        let mut c = cache(0.0, 2.0);
        let r = stabilization_check(&mut c, &AlphaSpec::zero(), 0, 12).unwrap();
        assert!(r.passed());
        assert_eq!((r.start_index, r.cap, r.checked), (0, 1, 13));

        let a = spec("row=3:finite{0,1}");
        let r = stabilization_check(&mut c, &a, 0, 12).unwrap();
        assert!(r.passed(), "{r:?}");
        // exhaustive sweep: M_0 along the whole path is constant from σ_0 on
        for k in r.start_index..=12 {
            assert_eq!(c.get(&a.prefix(k as usize + 1)).unwrap().caps[0], r.cap);
        }

        let b = spec("row=0:finite{0,3};row=1:finite{2}");
        let r = stabilization_check(&mut c, &b, 1, 20).unwrap();
        assert_eq!(r.j0, 4);
        assert!(r.passed());
        assert!(matches!(
            stabilization_check(&mut c, &spec("row=5:eventually(0)"), 0, 5),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn raw_bits() {
        let mut c = cache(0.0, 2.0);
        let bits: BitString = "1101".parse().unwrap();
        let bd = blocks_from_bits(&mut c, &bits).unwrap();
        assert!(bd.alpha.is_none());
        assert_eq!(bd.k, 3);
        assert!(blocks_from_bits(&mut c, &BitString::empty()).is_err());
    }
}
