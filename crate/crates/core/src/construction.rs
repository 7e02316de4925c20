//! The recursion `σ ↦ (φ(σ), ψ(σ))` over finite binary strings.
//!
//! `φ(σ)` is a finite non-negative sequence and `ψ(σ) = (M_0(σ), ..., M_{d(σ)}(σ))`
//! a list of naturals. Extending `σ` by 0 extends `φ` by a single 0 and keeps
//! every `M_i`; extending by 1 appends a witness block that keeps the
//! `p_i`-power sums below `M_i` for rows under the new level and pushes the
//! level's own power sum past `lh(σ) + 1`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{BufRead, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{depth, level, BitString};
use crate::seqspace::{certified_less, pnorm_pow, Count, Exponent, FinSeq, Margin};
use crate::witness::{extend, ClaimRequest, Generator, WitnessConfig};

pub use crate::seqspace::ExpLadder;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstructionConfig {
    pub ladder: ExpLadder,
    pub margin: Margin,
    pub witness: WitnessConfig,
}

impl ConstructionConfig {
    /// Default ladder for `(a, q)`, default margin, constant-block witnesses.
    pub fn new(a: f64, q: f64) -> Result<Self> {
        Ok(Self {
            ladder: ExpLadder::new(a, q)?,
            margin: Margin::default(),
            witness: WitnessConfig {
                generator: Generator::ConstantBlock,
                step_budget: WitnessConfig::DEFAULT_STEP_BUDGET,
            },
        })
    }

    pub fn q(&self) -> Exponent {
        self.ladder.top_exponent()
    }

    pub fn p(&self, i: usize) -> Exponent {
        self.ladder.exponent(i)
    }
}

/// `φ(σ)` and `ψ(σ)` for one string.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub sigma: BitString,
    pub phi: FinSeq,
    /// `M_0(σ), ..., M_{d(σ)}(σ)`.
    pub caps: Vec<u64>,
}

impl Node {
    pub fn root() -> Self {
        Self {
            sigma: BitString::empty(),
            phi: FinSeq::new(),
            caps: Vec::new(),
        }
    }

    pub fn depth(&self) -> i64 {
        depth(&self.sigma)
    }
}

/// The least natural `M` with `x + eta < M`.
pub fn least_natural_above(x: f64, m: Margin) -> u64 {
    (x + m.eta()).floor().max(-1.0) as u64 + 1
}

fn caps_from(
    phi: &FinSeq,
    rows: std::ops::RangeInclusive<usize>,
    cfg: &ConstructionConfig,
) -> Result<Vec<u64>> {
    rows.map(|i| Ok(least_natural_above(pnorm_pow(phi, cfg.p(i))?, cfg.margin)))
        .collect()
}

/// Computes the node for `parent.sigma ⌢ (bit)`.
pub fn extend_node(parent: &Node, bit: bool, cfg: &ConstructionConfig) -> Result<Node> {
    let sigma = parent.sigma.child(bit);
    let lh = parent.sigma.len();
    let d_tau = depth(&sigma) as usize;

    if !bit {
        if parent.sigma.is_empty() {
            return Ok(Node {
                sigma,
                phi: FinSeq::from_values([0.0]),
                caps: vec![1],
            });
        }
        let mut phi = parent.phi.clone();
        phi.push(0.0);
        let mut caps = parent.caps.clone();
        if d_tau as i64 > parent.depth() {
            caps.extend(caps_from(&phi, d_tau..=d_tau, cfg)?);
        }
        return Ok(Node { sigma, phi, caps });
    }

    let lvl = level(&sigma)? as usize;
    let req = ClaimRequest {
        u: parent.phi.clone(),
        q: cfg.q(),
        exps: (0..=lvl).map(|i| cfg.p(i)).collect(),
        caps: parent.caps[..lvl].iter().map(|&m| m as f64).collect(),
        target: (lh + 1) as f64,
        eps: 0.5f64.powi(lh as i32 + 1),
    };
    let w = extend(&req, cfg.margin, &cfg.witness).map_err(|e| Error::Node {
        sigma: sigma.to_string(),
        source: Box::new(e),
    })?;
    let phi = parent.phi.concat(&w.v);
    let mut caps = parent.caps[..lvl].to_vec();
    caps.extend(caps_from(&phi, lvl..=d_tau, cfg)?);
    Ok(Node { sigma, phi, caps })
}

/// Memoised nodes, closed under prefixes.
#[derive(Debug, Clone)]
pub struct ConstructionCache {
    config: ConstructionConfig,
    nodes: BTreeMap<BitString, Node>,
}

impl ConstructionCache {
    pub fn new(config: ConstructionConfig) -> Self {
        let mut nodes = BTreeMap::new();
        nodes.insert(BitString::empty(), Node::root());
        Self { config, nodes }
    }

    pub fn config(&self) -> &ConstructionConfig {
        &self.config
    }

    pub fn get(&self, sigma: &BitString) -> Option<&Node> {
        self.nodes.get(sigma)
    }

    pub fn nodes(&self) -> impl Iterator<Item = &Node> {
        self.nodes.values()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Builds `sigma` and any missing prefix.
    pub fn build_node(&mut self, sigma: &BitString) -> Result<&Node> {
        for len in 1..=sigma.len() {
            let key = sigma.prefix(len);
            if !self.nodes.contains_key(&key) {
                let parent = &self.nodes[&sigma.prefix(len - 1)];
                let node = extend_node(parent, key.bits()[len - 1], &self.config)?;
                self.nodes.insert(key, node);
            }
        }
        Ok(&self.nodes[sigma])
    }

    /// Builds every string of length `<= max_len`, siblings in parallel.
    pub fn populate(&mut self, max_len: usize) -> Result<()> {
        for len in 0..max_len {
            let parents: Vec<&Node> = self
                .nodes
                .values()
                .filter(|n| n.sigma.len() == len)
                .collect();
            let built: Vec<Result<Node>> = parents
                .par_iter()
                .flat_map_iter(|p| [false, true].map(|bit| (*p, bit)))
                .filter(|(p, bit)| !self.nodes.contains_key(&p.sigma.child(*bit)))
                .map(|(p, bit)| extend_node(p, bit, &self.config))
                .collect();
            let built = built.into_iter().collect::<Result<Vec<_>>>()?;
            for node in built {
                self.nodes.insert(node.sigma.clone(), node);
            }
        }
        Ok(())
    }

    pub fn max_phi_len(&self) -> Count {
        self.nodes.values().map(|n| n.phi.len()).max().unwrap_or(0)
    }

    /// Approximate heap footprint of the stored nodes.
    pub fn memory_bytes(&self) -> usize {
        self.nodes
            .values()
            .map(|n| {
                std::mem::size_of::<Node>()
                    + std::mem::size_of_val(n.phi.runs())
                    + n.caps.len() * 8
                    + n.sigma.len()
            })
            .sum()
    }

    /// Writes the cache as text: a header with the configuration, then one
    /// record `sigma<TAB>M_0,...,M_d<TAB>value*count ...` per node in
    /// length-then-lexicographic order. Floats use shortest round-trip form.
    pub fn export<W: Write>(&self, mut out: W) -> Result<()> {
        out.write_all(self.export_string().as_bytes())?;
        Ok(())
    }

    pub fn export_string(&self) -> String {
        let cfg = &self.config;
        let mut s = String::from("# lprl construction cache v1\n");
        let ladder = if cfg.ladder.overrides().is_empty() {
            "default".to_string()
        } else {
            cfg.ladder
                .overrides()
                .iter()
                .map(|p| format!("{p:e}"))
                .collect::<Vec<_>>()
                .join(",")
        };
        let _ = writeln!(
            s,
            "# a={:e} q={:e} ladder={ladder} eta={:e} generator={} step_budget={}",
            cfg.ladder.floor(),
            cfg.ladder.top(),
            cfg.margin.eta(),
            cfg.witness.generator,
            cfg.witness.step_budget
        );
        for node in self.nodes.values() {
            let caps: Vec<String> = node.caps.iter().map(u64::to_string).collect();
            let runs: Vec<String> = node
                .phi
                .runs()
                .iter()
                .map(|r| format!("{:e}*{}", r.value, r.count))
                .collect();
            let _ = writeln!(s, "{}\t{}\t{}", node.sigma, caps.join(","), runs.join(" "));
        }
        s
    }

    pub fn import<R: BufRead>(input: R) -> Result<Self> {
        let mut config = None;
        let mut nodes = BTreeMap::new();
        for (lineno, line) in input.lines().enumerate() {
            let line = line?;
            let perr = |msg: String| Error::Parse {
                pos: lineno + 1,
                msg,
            };
            if let Some(rest) = line.strip_prefix("# ") {
                if rest.starts_with("a=") {
                    config = Some(parse_header(rest).map_err(perr)?);
                }
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            let node = parse_record(&line).map_err(perr)?;
            if nodes.insert(node.sigma.clone(), node).is_some() {
                return Err(perr("duplicate record".into()));
            }
        }
        let config = config.ok_or(Error::Parse {
            pos: 0,
            msg: "missing configuration header".into(),
        })?;
        if nodes.get(&BitString::empty()) != Some(&Node::root()) {
            return Err(Error::invalid(
                "cache file lacks the empty-string root record",
            ));
        }
        for sigma in nodes.keys() {
            if let Some(parent) = sigma.parent() {
                if !nodes.contains_key(&parent) {
                    return Err(Error::invalid(format!(
                        "cache is not prefix closed: {sigma} has no parent"
                    )));
                }
            }
        }
        Ok(Self { config, nodes })
    }
}

fn parse_header(rest: &str) -> std::result::Result<ConstructionConfig, String> {
    let mut fields = BTreeMap::new();
    for kv in rest.split_whitespace() {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| format!("malformed header field {kv:?}"))?;
        fields.insert(k, v);
    }
    let get = |k: &str| {
        fields
            .get(k)
            .copied()
            .ok_or_else(|| format!("header lacks {k}"))
    };
    let num = |k: &str| -> std::result::Result<f64, String> {
        get(k)?.parse().map_err(|e| format!("bad {k}: {e}"))
    };
    let a = num("a")?;
    let q = num("q")?;
    let ladder = match get("ladder")? {
        "default" => ExpLadder::new(a, q),
        list => list
            .split(',')
            .map(|p| p.parse::<f64>().map_err(|e| Error::invalid(e.to_string())))
            .collect::<Result<Vec<_>>>()
            .and_then(|ps| ExpLadder::with_override(a, q, ps)),
    }
    .map_err(|e| e.to_string())?;
    Ok(ConstructionConfig {
        ladder,
        margin: Margin::new(num("eta")?).map_err(|e| e.to_string())?,
        witness: WitnessConfig {
            generator: get("generator")?
                .parse()
                .map_err(|e: Error| e.to_string())?,
            step_budget: get("step_budget")?
                .parse()
                .map_err(|e| format!("bad step_budget: {e}"))?,
        },
    })
}

fn parse_record(line: &str) -> std::result::Result<Node, String> {
    let mut parts = line.split('\t');
    let sigma: BitString = parts
        .next()
        .ok_or("empty record")?
        .parse()
        .map_err(|e: Error| e.to_string())?;
    let caps_field = parts.next().ok_or("record lacks the M field")?;
    let caps = if caps_field.is_empty() {
        Vec::new()
    } else {
        caps_field
            .split(',')
            .map(|m| {
                m.parse::<u64>()
                    .map_err(|e| format!("bad M entry {m:?}: {e}"))
            })
            .collect::<std::result::Result<_, _>>()?
    };
    let mut phi = FinSeq::new();
    for run in parts
        .next()
        .ok_or("record lacks the phi field")?
        .split_whitespace()
    {
        let (v, c) = run
            .split_once('*')
            .ok_or_else(|| format!("bad run {run:?}"))?;
        let value: f64 = v.parse().map_err(|e| format!("bad value {v:?}: {e}"))?;
        let count: Count = c.parse().map_err(|e| format!("bad count {c:?}: {e}"))?;
        phi.push_run(value, count);
    }
    Ok(Node { sigma, phi, caps })
}

/// Instances checked and violations found for one construction property.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyCheck {
    pub id: u8,
    pub name: String,
    pub instances: u64,
    pub violations: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyReport {
    pub max_len: usize,
    pub properties: Vec<PropertyCheck>,
}

impl PropertyReport {
    pub fn passed(&self) -> bool {
        self.properties.iter().all(|p| p.violations.is_empty())
    }

    pub fn violation_count(&self) -> usize {
        self.properties.iter().map(|p| p.violations.len()).sum()
    }

    pub fn property(&self, id: u8) -> Option<&PropertyCheck> {
        self.properties.iter().find(|p| p.id == id)
    }
}

/// Checks the seven construction properties on every string of length `<= max_len`.
///
/// 1. prefix coherence of `φ`;
/// 2. `q`-cost of each appended block below `2^-(lh(σ)+1)`;
/// 3. `‖φ(σ)‖_{p_i}^{p_i} < M_i(σ)` for `i <= d(σ)`;
/// 4. `M_i` unchanged by a 0-extension;
/// 5. `M_i` unchanged by a 1-extension for rows below the new level;
/// 6. `‖φ(σ⌢(1))‖_{p_l}^{p_l} > lh(σ) + 1` at the new level `l`;
/// 7. bookkeeping: `lh(ψ(σ)) = d(σ) + 1`, `φ(σ)` non-empty and non-negative for `σ ≠ ∅`.
pub fn check_properties(cache: &ConstructionCache, max_len: usize) -> PropertyReport {
    let cfg = cache.config();
    let m = cfg.margin;
    let names = [
        "prefix coherence",
        "block q-cost",
        "cap discipline",
        "0-extension keeps caps",
        "1-extension keeps lower caps",
        "forced growth",
        "bookkeeping",
    ];
    let mut props: Vec<PropertyCheck> = names
        .iter()
        .enumerate()
        .map(|(k, name)| PropertyCheck {
            id: k as u8 + 1,
            name: (*name).to_string(),
            instances: 0,
            violations: Vec::new(),
        })
        .collect();
    let mut note = |id: usize, ok: bool, msg: &dyn Fn() -> String| {
        let p = &mut props[id - 1];
        p.instances += 1;
        if !ok {
            p.violations.push(msg());
        }
    };
    let pow = |x: &FinSeq, p: Exponent| pnorm_pow(x, p).unwrap_or(f64::NAN);

    for len in 0..=max_len {
        for sigma in BitString::all_of_len(len) {
            let Some(node) = cache.get(&sigma) else {
                note(7, false, &|| format!("node {sigma} missing from cache"));
                continue;
            };
            let d = node.depth();

            note(7, node.caps.len() as i64 == d + 1, &|| {
                format!("σ={sigma}: lh(ψ)={} but d+1={}", node.caps.len(), d + 1)
            });
            if len > 0 {
                let min = node.phi.min_value();
                note(
                    7,
                    matches!(min, Some(v) if v >= 0.0) && node.phi.all_finite(),
                    &|| format!("σ={sigma}: φ empty, negative or non-finite"),
                );

                for plen in 0..len {
                    let Some(pre) = cache.get(&sigma.prefix(plen)) else {
                        continue;
                    };
                    let ok = node.phi.len() > pre.phi.len() && node.phi.starts_with(&pre.phi);
                    note(1, ok, &|| {
                        format!("φ({}) is not a proper prefix of φ({sigma})", pre.sigma)
                    });
                }

                for (i, &cap) in node.caps.iter().enumerate() {
                    let val = pow(&node.phi, cfg.p(i));
                    note(3, certified_less(val, cap as f64, m), &|| {
                        format!("σ={sigma}: ||φ||_p{i}^p{i} = {val} not below M_{i} = {cap}")
                    });
                }
            }

            if len == max_len {
                continue;
            }
            let bound = 0.5f64.powi(len as i32 + 1);
            for bit in [false, true] {
                let Some(child) = cache.get(&sigma.child(bit)) else {
                    continue;
                };
                match child.phi.strip_prefix(&node.phi) {
                    Some(block) => {
                        let cost = pow(&block, cfg.q());
                        note(2, certified_less(cost, bound, m), &|| {
                            format!(
                                "σ={sigma}, s={}: block q-cost {cost} not below {bound}",
                                bit as u8
                            )
                        });
                    }
                    None => note(2, false, &|| {
                        format!("φ({sigma}) is not a prefix of φ of its child")
                    }),
                }
            }

            let zero = cache.get(&sigma.child(false));
            let one = cache.get(&sigma.child(true));
            if let (Some(zero), true) = (zero, len > 0) {
                let k = (d + 1) as usize;
                let ok = zero.caps.len() >= k && zero.caps[..k] == node.caps[..k];
                note(4, ok, &|| format!("σ={sigma}: M changed by 0-extension"));
            }
            if let Some(one) = one {
                let lvl = level(&one.sigma).unwrap_or(0) as usize;
                if len > 0 && lvl > 0 {
                    let ok = one.caps.len() >= lvl
                        && node.caps.len() >= lvl
                        && one.caps[..lvl] == node.caps[..lvl];
                    note(5, ok, &|| {
                        format!("σ={sigma}: M_i changed below level {lvl} by 1-extension")
                    });
                }
                let val = pow(&one.phi, cfg.p(lvl));
                let target = (len + 1) as f64;
                note(6, certified_less(target, val, m), &|| {
                    format!("σ={sigma}: ||φ(σ⌢1)||_p{lvl}^p{lvl} = {val} not above {target}")
                });
            }
        }
    }
    PropertyReport {
        max_len,
        properties: props,
    }
}
