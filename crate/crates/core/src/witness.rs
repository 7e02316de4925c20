//! The witness-extension step.
//!
//! Given `q > p_0 > ... > p_k > p_{k+1} > 0`, caps `r_0..r_k`, a target `M`,
//! a budget `eps` and a prefix `u` with `‖u‖_{p_i}^{p_i} < r_i`, [`extend`]
//! produces a non-empty block `v` of non-negative reals with
//!
//! * `‖v‖_q^q < eps`,
//! * `‖u⌢v‖_{p_i}^{p_i} < r_i` for `i <= k`,
//! * `‖u⌢v‖_{p_{k+1}}^{p_{k+1}} > M`.
//!
//! Two generators are available. [`Generator::Harmonic`] takes the block from
//! the fixed sequence `x_n = (n+1)^(-1/p_{k+1})`: it picks `n0` so the
//! `p_k`-tail from `n0` is below `min(δ, eps)` and then the least `n1` whose
//! `p_{k+1}` partial sum from `n0` passes the target. Its cost grows like
//! `e^M`. [`Generator::ConstantBlock`] returns `N` copies of a single value
//! sized from the request, which is the cheapest shape of block (by convexity
//! of `y ↦ y^r`) and the only one that keeps deep construction levels
//! tractable.
//!
//! Whatever the generator, the returned witness has been re-checked by
//! [`verify_witness`] with exact partial sums.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seqspace::{certified_less, pnorm_pow, Count, Exponent, FinSeq, Margin, NeumaierSum};

/// Input of the witness-extension step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClaimRequest {
    /// Current prefix `u`.
    pub u: FinSeq,
    pub q: Exponent,
    /// `p_0 > p_1 > ... > p_{k+1}`; one more entry than `caps`.
    pub exps: Vec<Exponent>,
    /// `r_0, ..., r_k` (may be empty).
    pub caps: Vec<f64>,
    /// The divergence target `M`.
    pub target: f64,
    /// The `q`-power budget.
    pub eps: f64,
}

impl ClaimRequest {
    /// `p_{k+1}`, the exponent whose power sum is pushed past the target.
    pub fn bottom(&self) -> Exponent {
        *self.exps.last().expect("validated request has exponents")
    }

    /// `p_k`, or `q` when there are no caps.
    pub fn upper(&self) -> Exponent {
        if self.caps.is_empty() {
            self.q
        } else {
            self.exps[self.caps.len() - 1]
        }
    }

    /// Checks the request invariants, strict inequalities under margin `m`.
    pub fn validate(&self, m: Margin) -> Result<()> {
        let pre = |msg: String| Err(Error::Precondition(msg));
        if self.exps.len() != self.caps.len() + 1 {
            return pre(format!(
                "need exactly one more exponent than caps, got {} exponents and {} caps",
                self.exps.len(),
                self.caps.len()
            ));
        }
        let mut prev = self.q.value();
        for (i, p) in self.exps.iter().enumerate() {
            if p.value() >= prev {
                return pre(format!(
                    "exponents must decrease strictly below q; p_{i} = {} >= {prev}",
                    p.value()
                ));
            }
            prev = p.value();
        }
        for (name, v) in [("target", self.target), ("eps", self.eps)] {
            if !(v.is_finite() && v > 0.0) {
                return pre(format!("{name} must be positive and finite, got {v}"));
            }
        }
        if !certified_less(0.0, self.eps, m) {
            return pre(format!(
                "eps = {} is not above the margin {}",
                self.eps,
                m.eta()
            ));
        }
        if !self.u.all_finite() {
            return pre("prefix has non-finite entries".into());
        }
        for (i, (&r, &p)) in self.caps.iter().zip(&self.exps).enumerate() {
            if !(r.is_finite() && r > 0.0) {
                return pre(format!("cap r_{i} must be positive and finite, got {r}"));
            }
            let have = pnorm_pow(&self.u, p)?;
            if !certified_less(have, r, m) {
                return pre(format!(
                    "cap violated: ||u||_{{p_{i}}}^{{p_{i}}} = {have} is not certified below r_{i} = {r}"
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Generator {
    /// `x_n = (n+1)^(-1/p_{k+1})`.
    #[default]
    Harmonic,
    /// `N` copies of one value fitted to the request.
    ConstantBlock,
}

impl std::str::FromStr for Generator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "harmonic" => Ok(Generator::Harmonic),
            "constant-block" => Ok(Generator::ConstantBlock),
            other => Err(Error::invalid(format!(
                "unknown generator {other:?} (expected harmonic or constant-block)"
            ))),
        }
    }
}

impl std::fmt::Display for Generator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Generator::Harmonic => "harmonic",
            Generator::ConstantBlock => "constant-block",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WitnessConfig {
    pub generator: Generator,
    /// Maximum number of summation steps a search may take.
    pub step_budget: u64,
}

impl WitnessConfig {
    pub const DEFAULT_STEP_BUDGET: u64 = 100_000_000;
}

impl Default for WitnessConfig {
    fn default() -> Self {
        Self {
            generator: Generator::Harmonic,
            step_budget: Self::DEFAULT_STEP_BUDGET,
        }
    }
}

/// A block `v` together with the generator window `x_{n0}..x_{n1}` it was cut from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClaimWitness {
    pub v: FinSeq,
    pub n0: Count,
    pub n1: Count,
    pub generator: Generator,
}

/// `x_n = (n+1)^(-1/p_bottom)`.
pub fn generator_entry(n: u64, p_bottom: Exponent) -> f64 {
    ((n as f64) + 1.0).powf(-1.0 / p_bottom.value())
}

/// Integral bound `Σ_{n>=n0} (n+1)^-s <= n0^(1-s)/(s-1)`, valid for `n0 >= 1`, `s > 1`.
fn harmonic_tail_bound(n0: u64, s: f64) -> f64 {
    (n0 as f64).powf(1.0 - s) / (s - 1.0)
}

pub fn extend(req: &ClaimRequest, m: Margin, cfg: &WitnessConfig) -> Result<ClaimWitness> {
    req.validate(m)?;
    let w = match cfg.generator {
        Generator::Harmonic => extend_harmonic(req, m, cfg.step_budget)?,
        Generator::ConstantBlock => extend_constant(req, m)?,
    };
    let report = verify_witness(req, &w, m);
    if !report.passed() {
        // the searches certify every inequality with margin, so this means the
        // margin is too small for the rounding involved
        return Err(Error::Domain(format!(
            "{} witness failed re-verification: {}",
            w.generator,
            report.failures().join("; ")
        )));
    }
    Ok(w)
}

fn cap_slack(req: &ClaimRequest) -> Result<Vec<f64>> {
    req.caps
        .iter()
        .zip(&req.exps)
        .map(|(&r, &p)| Ok(r - pnorm_pow(&req.u, p)?))
        .collect()
}

fn extend_harmonic(req: &ClaimRequest, m: Margin, budget: u64) -> Result<ClaimWitness> {
    let p = req.bottom();
    let s = req.upper().value() / p.value();
    let delta = cap_slack(req)?.into_iter().fold(f64::INFINITY, f64::min);
    let tail_cap = delta.min(req.eps);
    let exhausted = |what: &str, progress: String| Error::ResourceLimit {
        what: what.into(),
        progress,
    };

    // n0 from the integral bound: n0^(1-s)/(s-1) < tail_cap - eta
    let room = tail_cap - m.eta();
    let estimate = ((s - 1.0) * room).powf(-1.0 / (s - 1.0)).ceil();
    if !estimate.is_finite() || estimate > 9.0e18 {
        return Err(exhausted(
            "harmonic n0 search",
            format!("integral bound needs n0 ≈ {estimate:e} (s = {s}, tail cap {tail_cap:e})"),
        ));
    }
    let mut n0 = (estimate as u64).max(1);
    let mut guard = 0;
    while !certified_less(harmonic_tail_bound(n0, s), tail_cap, m) {
        n0 = n0.saturating_add(n0 / 64 + 1);
        guard += 1;
        if guard > 10_000 {
            return Err(exhausted(
                "harmonic n0 search",
                format!("stuck at n0 = {n0}"),
            ));
        }
    }

    // walk n0 down while exact terms plus the bound at the old n0 stay certified
    let anchor = harmonic_tail_bound(n0, s);
    let mut exact = NeumaierSum::new();
    let mut best = n0;
    let mut steps = 0u64;
    while best > 1 && steps < budget {
        let cand = best - 1;
        exact += generator_entry(cand, p).powf(req.upper().value());
        steps += 1;
        if certified_less(exact.value() + anchor, tail_cap, m) {
            best = cand;
        } else {
            break;
        }
    }
    let n0 = best;

    // least n1 >= n0 with Σ_{n0..=n1} x_n^{p_{k+1}} > M + eta
    let mut partial = NeumaierSum::new();
    let mut v = FinSeq::new();
    let mut n = n0;
    loop {
        if n - n0 >= budget {
            return Err(exhausted(
                "harmonic n1 search",
                format!(
                    "partial sum {} after {budget} terms from n0 = {n0}, target {}",
                    partial.value(),
                    req.target
                ),
            ));
        }
        let x = generator_entry(n, p);
        partial += x.powf(p.value());
        v.push(x);
        if certified_less(req.target, partial.value(), m) {
            break;
        }
        n += 1;
    }
    Ok(ClaimWitness {
        v,
        n0: n0 as Count,
        n1: n as Count,
        generator: Generator::Harmonic,
    })
}

fn extend_constant(req: &ClaimRequest, m: Margin) -> Result<ClaimWitness> {
    let p = req.bottom().value();
    let eta = m.eta();
    let prefix_bottom = pnorm_pow(&req.u, req.bottom())?;
    let need = (req.target - prefix_bottom).max(0.0) + 2.0 * eta;

    // Each constraint Σ_v c^e <= slack reads N y^{e/p} with y = c^p. With
    // N ≈ need / y this is need * y^{e/p - 1}, so y is bounded by a power of
    // slack / need.
    let mut limits: Vec<(f64, f64)> = cap_slack(req)?
        .into_iter()
        .zip(&req.exps)
        .map(|(slack, e)| (slack, e.value() / p))
        .collect();
    limits.push((req.eps, req.q.value() / p));
    let mut y = limits
        .iter()
        .map(|&(slack, r)| ((slack - eta) / (4.0 * need.max(1.0))).powf(1.0 / (r - 1.0)))
        .fold(0.5f64.min(need), f64::min);

    let prefix_powers: Vec<f64> = req
        .exps
        .iter()
        .take(req.caps.len())
        .map(|&e| pnorm_pow(&req.u, e))
        .collect::<Result<_>>()?;

    for _ in 0..4096 {
        let c = y.powf(1.0 / p);
        if c <= 0.0 || !c.is_normal() {
            break;
        }
        let yc = c.powf(p);
        let count = (need / yc).ceil().max(1.0);
        if count.is_nan() || count >= 2f64.powi(126) {
            break;
        }
        let n = count as Count;
        let nf = n as f64;
        let caps_ok = req
            .caps
            .iter()
            .zip(&req.exps)
            .zip(&prefix_powers)
            .all(|((&r, e), &have)| certified_less(have + nf * c.powf(e.value()), r, m));
        let eps_ok = certified_less(nf * c.powf(req.q.value()), req.eps, m);
        let target_ok = certified_less(req.target, prefix_bottom + nf * yc, m);
        if caps_ok && eps_ok && target_ok {
            return Ok(ClaimWitness {
                v: FinSeq::constant(c, n),
                n0: 0,
                n1: n - 1,
                generator: Generator::ConstantBlock,
            });
        }
        y *= 0.5;
    }
    Err(Error::ResourceLimit {
        what: "constant-block witness".into(),
        progress: format!(
            "block value underflowed or length exceeded 2^126 (target {}, eps {}, last y {y:e})",
            req.target, req.eps
        ),
    })
}

/// One inequality evaluated by [`verify_witness`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityCheck {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct WitnessReport {
    pub checks: Vec<InequalityCheck>,
}

impl WitnessReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.holds)
    }

    pub fn failures(&self) -> Vec<String> {
        self.checks
            .iter()
            .filter(|c| !c.holds)
            .map(|c| format!("{} (lhs {}, rhs {})", c.name, c.lhs, c.rhs))
            .collect()
    }
}

/// Recomputes the witness inequalities by direct summation over `v` and `u⌢v`.
pub fn verify_witness(req: &ClaimRequest, w: &ClaimWitness, m: Margin) -> WitnessReport {
    let mut checks = Vec::new();
    let mut push = |name: String, lhs: f64, rhs: f64, holds: bool| {
        checks.push(InequalityCheck {
            name,
            lhs,
            rhs,
            holds,
        });
    };
    let len = w.v.len() as f64;
    push("v is non-empty".into(), len, 1.0, !w.v.is_empty());
    let min = w.v.min_value().unwrap_or(0.0);
    push("entries of v are >= 0".into(), min, 0.0, min >= 0.0);

    let uv = req.u.concat(&w.v);
    let eval = |x: &FinSeq, p: Exponent| pnorm_pow(x, p).unwrap_or(f64::NAN);

    let vq = eval(&w.v, req.q);
    push(
        "||v||_q^q < eps".into(),
        vq,
        req.eps,
        certified_less(vq, req.eps, m),
    );
    for (i, (&r, &p)) in req.caps.iter().zip(&req.exps).enumerate() {
        let val = eval(&uv, p);
        push(
            format!("||u⌢v||_p{i}^p{i} < r_{i}"),
            val,
            r,
            certified_less(val, r, m),
        );
    }
    if let Some(&p) = req.exps.last() {
        let k1 = req.exps.len() - 1;
        let val = eval(&uv, p);
        push(
            format!("||u⌢v||_p{k1}^p{k1} > M"),
            val,
            req.target,
            certified_less(req.target, val, m),
        );
    }
    WitnessReport { checks }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(p: f64) -> Exponent {
        Exponent::new(p).unwrap()
    }

    fn worked_request(target: f64) -> ClaimRequest {
        ClaimRequest {
            u: FinSeq::new(),
            q: e(2.0),
            exps: vec![e(1.0), e(0.5)],
            caps: vec![10.0],
            target,
            eps: 10.0,
        }
    }

    fn harmonic() -> WitnessConfig {
        WitnessConfig::default()
    }

    fn constant() -> WitnessConfig {
        WitnessConfig {
            generator: Generator::ConstantBlock,
            ..WitnessConfig::default()
        }
    }

    #[test]
    fn generator_entry_examples() {
        assert_eq!(generator_entry(0, e(0.5)), 1.0);
        assert_eq!(generator_entry(3, e(0.5)), 1.0 / 16.0);
        assert_eq!(generator_entry(1, e(1.0)), 0.5);
    }

    #[test]
    fn worked_example() {
        let req = worked_request(1.0);
        let w = extend(&req, Margin::default(), &harmonic()).unwrap();
        assert_eq!((w.n0, w.n1), (1, 3));
        let v = w.v.to_vec();
        let expect = [0.25, 1.0 / 9.0, 1.0 / 16.0];
        for (got, want) in v.iter().zip(expect) {
            assert!((got - want).abs() < 1e-12);
        }
        // direct summation oracle
        let q2: f64 = expect.iter().map(|x| x * x).sum();
        let p1: f64 = expect.iter().sum();
        let p05: f64 = expect.iter().map(|x| x.sqrt()).sum();
        assert!((q2 - 0.078_751_929).abs() < 1e-9 && q2 < 10.0);
        assert!((p1 - 0.4236).abs() < 1e-4 && p1 < 10.0);
        assert!((p05 - 1.0833).abs() < 1e-4 && p05 > 1.0);
        assert!(verify_witness(&req, &w, Margin::default()).passed());
    }

    #[test]
    fn harmonic_threshold_for_target_three() {
        let req = worked_request(3.0);
        let w = extend(&req, Margin::default(), &harmonic()).unwrap();
        assert_eq!(w.n0, 1);
        // oracle: least n1 with Σ_{n=1}^{n1} 1/(n+1) > 3
        let mut sum = 0.0;
        let mut n1 = 0u128;
        for n in 1u128.. {
            sum += 1.0 / (n as f64 + 1.0);
            if sum > 3.0 + Margin::default().eta() {
                n1 = n;
                break;
            }
        }
        assert_eq!(w.n1, n1);
        assert_eq!(n1, 30);
    }

    #[test]
    fn entries_are_sub_unit() {
        for cfg in [harmonic(), constant()] {
            let w = extend(&worked_request(2.0), Margin::default(), &cfg).unwrap();
            assert!(!w.v.is_empty());
            assert!(w.v.runs().iter().all(|r| (0.0..1.0).contains(&r.value)));
        }
    }

    #[test]
    fn constant_block_handles_close_exponents() {
        // p_k / p_{k+1} = 10/9: the harmonic generator would need n0 > 1e20
        let req = ClaimRequest {
            u: FinSeq::new(),
            q: e(3.0),
            exps: vec![e(2.0), e(1.5), e(1.25), e(1.125)],
            caps: vec![1.0, 1.0, 1.0],
            target: 7.0,
            eps: 1.0 / 128.0,
        };
        let err = extend(&req, Margin::default(), &harmonic()).unwrap_err();
        assert!(err.is_resource_limit());
        let w = extend(&req, Margin::default(), &constant()).unwrap();
        assert!(w.v.len() > 100_000_000);
        assert!(verify_witness(&req, &w, Margin::default()).passed());
    }

    #[test]
    fn constant_block_counts_prefix() {
        let mut req = worked_request(1.0);
        req.u = FinSeq::from_values([0.8, 0.8]);
        req.caps = vec![3.0];
        let w = extend(&req, Margin::default(), &constant()).unwrap();
        assert!(verify_witness(&req, &w, Margin::default()).passed());
    }

    #[test]
    fn cap_violation_is_a_precondition_error() {
        let mut req = worked_request(1.0);
        req.u = FinSeq::from_values([5.0, 5.0]);
        assert!(matches!(
            extend(&req, Margin::default(), &harmonic()),
            Err(Error::Precondition(_))
        ));
        let mut req = worked_request(1.0);
        req.exps = vec![e(0.5), e(1.0)];
        assert!(matches!(
            req.validate(Margin::default()),
            Err(Error::Precondition(_))
        ));
        let mut req = worked_request(1.0);
        req.caps.clear();
        assert!(req.validate(Margin::default()).is_err());
    }

    #[test]
    fn step_budget_is_enforced() {
        let cfg = WitnessConfig {
            generator: Generator::Harmonic,
            step_budget: 5,
        };
        match extend(&worked_request(3.0), Margin::default(), &cfg) {
            Err(Error::ResourceLimit { progress, .. }) => assert!(progress.contains("partial sum")),
            other => panic!("expected resource limit, got {other:?}"),
        }
    }

    #[test]
    fn verify_flags_bad_witnesses() {
        let req = worked_request(1.0);
        let mut w = extend(&req, Margin::default(), &harmonic()).unwrap();
        w.v = FinSeq::new();
        let r = verify_witness(&req, &w, Margin::default());
        assert!(!r.passed());
        assert!(r.failures().iter().any(|f| f.contains("non-empty")));

        let mut w = extend(&req, Margin::default(), &harmonic()).unwrap();
        w.v = w.v.scale(1e6);
        let r = verify_witness(&req, &w, Margin::default());
        assert!(r.failures().iter().any(|f| f.contains("eps")));
    }

    #[test]
    fn deterministic() {
        for cfg in [harmonic(), constant()] {
            let a = extend(&worked_request(2.5), Margin::default(), &cfg).unwrap();
            let b = extend(&worked_request(2.5), Margin::default(), &cfg).unwrap();
            assert_eq!(a, b);
        }
    }
}
