//! Verification sweeps shared by the command-line `verify` command and the test suites.
//!
//! Each sweep returns a [`SuiteResult`] counting the inequalities it evaluated and
//! listing every one that failed. Randomized sweeps draw from a seeded ChaCha
//! generator, so results depend only on the configuration and the seed.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::construction::{check_properties, ConstructionCache};
use crate::error::Result;
use crate::grid::{depth_of_len, extend_laws_check, level_of_len, pair, unpair, BitString};
use crate::hierarchy::{
    build_pi4_certificate, embedding_inequality_check, extract_row, interleave, DoubleSeq,
};
use crate::reduction::{
    continuity_check, divergence_witness, f_blocks, stabilization_check, unit_ball_check,
    AlphaSpec, RowPattern,
};
use crate::seqspace::{pnorm_pow, sup_norm, ExpLadder, Exponent, FinSeq, Margin};
use crate::witness::{extend, verify_witness, ClaimRequest, Generator, WitnessConfig};

/// Four points in P3 followed by four points outside it.
pub const CORPUS: [&str; 8] = [
    "",
    "row=3:finite{0,1}",
    "row=0:finite{0,1};row=1:finite{1}",
    "row=2:finite{0};row=4:finite{0,2,5}",
    "row=0:eventually(0)",
    "row=1:periodic(0,2,0)",
    "row=2:eventually(1);row=0:finite{0}",
    "row=0:periodic(1,3,0);row=3:finite{0}",
];

pub fn corpus() -> Vec<AlphaSpec> {
    CORPUS
        .iter()
        .map(|s| s.parse().expect("corpus specs parse"))
        .collect()
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SuiteResult {
    pub suite: String,
    pub instances: u64,
    /// Instances not evaluated because a stated hypothesis failed.
    pub skipped: u64,
    /// Instance counts of named sub-checks, where a sweep has them.
    pub breakdown: BTreeMap<String, u64>,
    pub violations: Vec<String>,
}

impl SuiteResult {
    fn new(suite: &str) -> Self {
        Self {
            suite: suite.to_string(),
            ..Self::default()
        }
    }

    fn check(&mut self, ok: bool, msg: impl FnOnce() -> String) {
        self.instances += 1;
        if !ok {
            self.violations.push(msg());
        }
    }

    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// The ten displayed table values and both round trips below `limit`.
pub fn pairing_suite(limit: u64) -> SuiteResult {
    let mut r = SuiteResult::new("pairing");
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
        let got = pair(i, j).ok();
        r.check(got == Some(n), || {
            format!("pair({i},{j}) = {got:?}, expected {n}")
        });
    }
    for n in 0..limit {
        let (i, j) = unpair(n);
        let back = pair(i, j).ok();
        r.check(back == Some(n), || format!("pair(unpair({n})) = {back:?}"));
    }
    r
}

/// The five transition laws for every non-empty string up to `max_len` and both extensions.
pub fn grid_suite(max_len: usize) -> Result<SuiteResult> {
    let mut r = SuiteResult::new("grid laws");
    r.check(depth_of_len(8) == 3, || {
        format!("depth at length 8 is {}", depth_of_len(8))
    });
    let l8 = level_of_len(8)?;
    r.check(l8 == 2, || format!("level at length 8 is {l8}"));
    for len in 1..=max_len {
        for s in BitString::all_of_len(len) {
            for bit in [false, true] {
                let rep = extend_laws_check(&s, bit)?;
                r.instances += rep.checked as u64;
                r.violations.extend(rep.violations);
            }
        }
    }
    Ok(r)
}

/// Consecutive exponents (starting from `q`) differ by a factor of at least
/// 1.2; closer exponents need blocks longer than a `u128` count can hold.
fn random_request<R: Rng>(rng: &mut R, q_at_least_one: bool) -> ClaimRequest {
    let q = if q_at_least_one {
        rng.gen_range(1.0..4.0)
    } else {
        rng.gen_range(0.3..0.95)
    };
    let ncaps = rng.gen_range(0..=2usize);
    let mut exps = Vec::with_capacity(ncaps + 1);
    let mut prev = q;
    for _ in 0..=ncaps {
        prev /= rng.gen_range(1.2..2.0);
        exps.push(Exponent::new(prev).expect("positive"));
    }
    let ulen = rng.gen_range(0..5);
    let u = FinSeq::from_values((0..ulen).map(|_| rng.gen_range(0.0..0.5)));
    let caps = exps[..exps.len() - 1]
        .iter()
        .map(|&p| pnorm_pow(&u, p).expect("finite") + rng.gen_range(0.5..3.0))
        .collect();
    ClaimRequest {
        u,
        q: Exponent::new(q).expect("positive"),
        exps,
        caps,
        target: rng.gen_range(0.5..3.0),
        eps: rng.gen_range(1e-3..0.5),
    }
}

/// Randomized witness requests in both exponent regimes plus the worked example.
///
/// Every request is answered by the constant-block generator; the harmonic
/// generator is also tried with `harmonic_budget` steps and counted as skipped
/// when it runs out.
pub fn claim_suite(seed: u64, per_regime: usize, harmonic_budget: u64) -> Result<SuiteResult> {
    let mut r = SuiteResult::new("claim");
    let m = Margin::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for regime in [true, false] {
        for n in 0..per_regime {
            let req = random_request(&mut rng, regime);
            for (generator, step_budget) in [
                (Generator::ConstantBlock, WitnessConfig::DEFAULT_STEP_BUDGET),
                (Generator::Harmonic, harmonic_budget),
            ] {
                match extend(
                    &req,
                    m,
                    &WitnessConfig {
                        generator,
                        step_budget,
                    },
                ) {
                    Ok(w) => {
                        let rep = verify_witness(&req, &w, m);
                        r.check(rep.passed(), || {
                            format!("request {n} ({generator}): {:?}", rep.failures())
                        });
                    }
                    Err(e) if generator == Generator::Harmonic && e.is_resource_limit() => {
                        r.skipped += 1
                    }
                    Err(e) => r.check(false, || format!("request {n} ({generator}): {e}")),
                }
            }
        }
    }

    let worked = ClaimRequest {
        u: FinSeq::new(),
        q: Exponent::new(2.0)?,
        exps: vec![Exponent::new(1.0)?, Exponent::new(0.5)?],
        caps: vec![10.0],
        target: 1.0,
        eps: 10.0,
    };
    let w = extend(&worked, m, &WitnessConfig::default())?;
    let expected = [0.25, 1.0 / 9.0, 1.0 / 16.0];
    let got = w.v.to_vec();
    r.check(
        got.len() == 3 && got.iter().zip(expected).all(|(g, e)| (g - e).abs() < 1e-12),
        || format!("worked example gave {got:?}"),
    );
    let direct: f64 = expected.iter().map(|v| v * v).sum();
    let q2 = pnorm_pow(&w.v, worked.q)?;
    r.check((q2 - direct).abs() < 1e-12, || {
        format!("q-power {q2} vs direct {direct}")
    });
    let half: f64 = expected.iter().map(|v| v.sqrt()).sum();
    r.check(half > 1.0, || {
        format!("p-power {half} does not pass the target")
    });
    Ok(r)
}

/// Builds the full tree to `max_len` and checks the seven construction properties.
pub fn construction_suite(cache: &mut ConstructionCache, max_len: usize) -> Result<SuiteResult> {
    let mut r = SuiteResult::new("construction properties");
    cache.populate(max_len)?;
    let rep = check_properties(cache, max_len);
    for p in &rep.properties {
        r.instances += p.instances;
        r.breakdown
            .insert(format!("property {} ({})", p.id, p.name), p.instances);
        r.violations.extend(
            p.violations
                .iter()
                .map(|v| format!("property {} ({}): {v}", p.id, p.name)),
        );
    }
    Ok(r)
}

/// Block bound and unit ball for every corpus point to `depth` blocks.
pub fn block_bound_suite(cache: &mut ConstructionCache, depth: usize) -> Result<SuiteResult> {
    let mut r = SuiteResult::new("block bound and unit ball");
    let m = cache.config().margin;
    for spec in corpus() {
        let bd = f_blocks(cache, &spec, depth)?;
        let rep = unit_ball_check(&bd, m)?;
        r.instances += rep.block_q_pows.len() as u64 + 2;
        r.violations
            .extend(rep.violations.iter().map(|v| format!("[{spec}] {v}")));
    }
    Ok(r)
}

/// Divergence to `target` along each bad row of the non-P3 corpus points,
/// stabilization of `M_i` for `i <= max_row` along the P3 corpus points.
pub fn dichotomy_suite(
    cache: &mut ConstructionCache,
    target: f64,
    max_row: u64,
    max_k: u64,
) -> Result<SuiteResult> {
    let mut r = SuiteResult::new("dichotomy");
    for spec in corpus() {
        if spec.in_p3() {
            for i in 0..=max_row {
                let rep = stabilization_check(cache, &spec, i, max_k)?;
                r.instances += 2 * rep.checked as u64;
                if rep.checked == 0 {
                    r.skipped += 1;
                }
                r.violations.extend(
                    rep.violations
                        .iter()
                        .map(|v| format!("[{spec}] row {i}: {v}")),
                );
            }
        } else {
            let bad: Vec<u64> = spec.bad_rows().collect();
            for row in bad {
                let w = divergence_witness(cache, &spec, row, target)?;
                let phi = &cache
                    .get(&spec.prefix(w.index as usize + 1))
                    .expect("built")
                    .phi;
                let resum: f64 = phi
                    .runs()
                    .iter()
                    .map(|run| run.count as f64 * run.value.abs().powf(w.exponent))
                    .sum();
                r.check(resum > target && w.norm_value > target, || {
                    format!(
                        "[{spec}] row {row}: prefix re-sums to {resum}, reported {}",
                        w.norm_value
                    )
                });
            }
        }
    }
    Ok(r)
}

fn random_spec<R: Rng>(rng: &mut R) -> AlphaSpec {
    let mut spec = AlphaSpec::zero();
    for _ in 0..rng.gen_range(0..=3) {
        let row = rng.gen_range(0..5);
        let pattern = match rng.gen_range(0..3) {
            0 => RowPattern::FiniteOnes(
                (0..rng.gen_range(0..=3))
                    .map(|_| rng.gen_range(0..6))
                    .collect(),
            ),
            1 => RowPattern::EventuallyOne {
                start: rng.gen_range(0..4),
            },
            _ => {
                let modulus = rng.gen_range(2..=4);
                RowPattern::periodic(rng.gen_range(0..modulus), modulus, rng.gen_range(0..3))
                    .expect("valid")
            }
        };
        spec.set_row(row, pattern);
    }
    spec
}

/// `b` agrees with `a` below index `k + 1` and differs from it there.
fn diverge_after(a: &AlphaSpec, k: u64) -> AlphaSpec {
    let (i, j) = unpair(k + 1);
    let mut ones: std::collections::BTreeSet<u64> = (0..j).filter(|&c| a.cell(i, c)).collect();
    if !a.cell(i, j) {
        ones.insert(j);
    }
    let mut b = a.clone();
    b.set_row(i, RowPattern::FiniteOnes(ones));
    b
}

/// Seeded pairs of points agreeing up to a random horizon in `3..=8`, compared
/// on `depth + 1` blocks (at least one past the horizon).
pub fn continuity_suite(
    cache: &mut ConstructionCache,
    seed: u64,
    pairs: usize,
    depth: usize,
) -> Result<SuiteResult> {
    let mut r = SuiteResult::new("continuity");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..pairs {
        let a = random_spec(&mut rng);
        let k = rng.gen_range(3..=8u64);
        let b = diverge_after(&a, k);
        let k_extra = depth.saturating_sub(k as usize).max(1);
        let rep = continuity_check(cache, &a, &b, k as usize, k_extra)?;
        r.check(rep.holds(), || {
            format!(
                "[{a}] vs [{b}] agreeing to {k}: distance {} > bound {}",
                rep.distance, rep.bound
            )
        });
    }
    Ok(r)
}

/// Double-sequence round trips, 1-Lipschitz rows, component bounds of Π⁰₄
/// certificates and the embedding inequalities.
pub fn hierarchy_suite(
    cache: &mut ConstructionCache,
    seed: u64,
    cases: usize,
    pi4_k: usize,
) -> Result<SuiteResult> {
    let mut r = SuiteResult::new("hierarchy");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    for case in 0..cases {
        let nrows = rng.gen_range(0..6usize);
        let rows: Vec<FinSeq> = (0..nrows)
            .map(|_| {
                FinSeq::from_values((0..rng.gen_range(0..12)).map(|_| rng.gen_range(-1.0..1.0)))
            })
            .collect();
        let upto = rows
            .iter()
            .enumerate()
            .filter(|(_, row)| !row.is_empty())
            .map(|(m, row)| pair(m as u64, row.len() as u64 - 1).expect("small") + 1)
            .max()
            .unwrap_or(0);
        let d = interleave(&rows, upto);
        for (m, row) in rows.iter().enumerate() {
            let back = extract_row(&d, m as u64);
            let ok =
                back.starts_with(row) && back.values().skip(row.len() as usize).all(|v| v == 0.0);
            r.check(ok, || format!("case {case}: row {m} did not round-trip"));
        }

        let len = rng.gen_range(0..60u64);
        let flat = FinSeq::from_values((0..len).map(|_| rng.gen_range(-1.0..1.0)));
        let other = FinSeq::from_values((0..len).map(|_| rng.gen_range(-1.0..1.0)));
        let (d1, d2) = (DoubleSeq::new(flat.clone()), DoubleSeq::new(other.clone()));
        let nrows = if len == 0 {
            0
        } else {
            unpair(len - 1).0 + unpair(len - 1).1 + 1
        };
        let rows: Vec<FinSeq> = (0..nrows).map(|m| extract_row(&d1, m)).collect();
        r.check(interleave(&rows, len).flat == flat, || {
            format!("case {case}: flat sequence did not round-trip")
        });

        let diff = flat.sub(&other);
        for m in 0..nrows {
            let rd = extract_row(&d1, m).sub(&extract_row(&d2, m));
            for q in [0.5, 1.0, 2.0] {
                let q = Exponent::new(q)?;
                let (lhs, rhs) = (pnorm_pow(&rd, q)?, pnorm_pow(&diff, q)?);
                r.check(lhs <= rhs * (1.0 + 1e-12), || {
                    format!(
                        "case {case}: row {m} not 1-Lipschitz for q={}: {lhs} > {rhs}",
                        q.value()
                    )
                });
            }
            let (lhs, rhs) = (sup_norm(&rd), sup_norm(&diff));
            r.check(lhs <= rhs, || {
                format!("case {case}: row {m} not 1-Lipschitz in sup norm")
            });
        }
    }

    let specs: Vec<AlphaSpec> = corpus().into_iter().take(7).collect();
    let cert = build_pi4_certificate(cache, &specs, pi4_k, 1 << 16)?;
    let q = cache.config().q().value();
    for (m, comp) in cert.components.iter().enumerate() {
        let direct: f64 = comp
            .prefix
            .runs()
            .iter()
            .map(|run| run.count as f64 * run.value.abs().powf(q))
            .sum();
        let bound = 0.5f64.powi(m as i32);
        r.check(direct + comp.tail_q_bound <= bound, || {
            format!(
                "component {m}: q-power {direct} + tail {} exceeds {bound}",
                comp.tail_q_bound
            )
        });
        r.check(cert.rows_in_intersection[m] == specs[m].in_p3(), || {
            format!("component {m} misclassified")
        });
    }
    r.violations.extend(cert.violations()?);

    for b in [0.5, 1.0, 2.0] {
        let ladder = ExpLadder::for_frechet(b)?;
        let be = Exponent::new(b)?;
        for case in 0..cases.min(100) {
            // half the pairs are small enough for the conditional case below 1
            let scale = if case % 2 == 0 { 1.0 } else { 0.02 };
            let len = rng.gen_range(1..10);
            let x = FinSeq::from_values((0..len).map(|_| scale * rng.gen_range(0.0..1.0)));
            let y = FinSeq::from_values((0..len).map(|_| scale * rng.gen_range(0.0..1.0)));
            let rep = embedding_inequality_check(&x, &y, be, &ladder, 16)?;
            r.skipped += rep.skipped.len() as u64;
            for c in &rep.checks {
                *r.breakdown
                    .entry(format!("embedding b={b}: {}", c.name))
                    .or_default() += 1;
            }
            for c in rep.checks {
                r.check(c.holds, || {
                    format!(
                        "b={b}, case {case}: {} fails ({} > {})",
                        c.name, c.lhs, c.rhs
                    )
                });
            }
        }
    }
    Ok(r)
}

/// Parameters of a full verification run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyPlan {
    pub max_len: usize,
    pub block_depth: usize,
    pub divergence_target: f64,
    pub stabilization_rows: u64,
    pub seed: u64,
    pub random_cases: usize,
    pub continuity_pairs: usize,
    pub pairing_limit: u64,
    pub grid_max_len: usize,
}

impl Default for VerifyPlan {
    fn default() -> Self {
        Self {
            max_len: 10,
            block_depth: 12,
            divergence_target: 3.0,
            stabilization_rows: 2,
            seed: 0,
            random_cases: 100,
            continuity_pairs: 20,
            pairing_limit: 1_000_000,
            grid_max_len: 16,
        }
    }
}

/// Runs every sweep, populating `cache` as needed.
pub fn run_all(cache: &mut ConstructionCache, plan: &VerifyPlan) -> Result<Vec<SuiteResult>> {
    Ok(vec![
        pairing_suite(plan.pairing_limit),
        grid_suite(plan.grid_max_len)?,
        claim_suite(plan.seed, plan.random_cases, 1_000_000)?,
        construction_suite(cache, plan.max_len)?,
        block_bound_suite(cache, plan.block_depth)?,
        dichotomy_suite(
            cache,
            plan.divergence_target,
            plan.stabilization_rows,
            plan.block_depth as u64,
        )?,
        continuity_suite(cache, plan.seed, plan.continuity_pairs, plan.block_depth)?,
        hierarchy_suite(cache, plan.seed, plan.random_cases * 10, 8)?,
    ])
}
