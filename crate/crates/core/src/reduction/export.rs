use std::fmt::Write as _;
use std::io::{BufRead, Write};

use super::{BlockDecomposition, PrefixCertificate};
use crate::construction::ConstructionConfig;
use crate::error::{Error, Result};
use crate::grid::level;
use crate::seqspace::{pnorm_pow, Count, Exponent, FinSeq};

/// Writes a prefix certificate as text: `#` header lines, then one run of
/// equal values per line as `value<TAB>count`.
pub fn write_prefix<W: Write>(pc: &PrefixCertificate, mut out: W) -> Result<()> {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "# q={:e} blocks_used={} scale={:e}",
        pc.q.value(),
        pc.blocks_used,
        pc.scale
    );
    let _ = writeln!(s, "# tail_q_bound={:e}", pc.tail_q_bound);
    for r in pc.prefix.runs() {
        let _ = writeln!(s, "{:e}\t{}", r.value, r.count);
    }
    out.write_all(s.as_bytes())?;
    Ok(())
}

pub fn read_prefix<R: BufRead>(input: R) -> Result<PrefixCertificate> {
    let mut prefix = FinSeq::new();
    let mut header = std::collections::BTreeMap::new();
    for (lineno, line) in input.lines().enumerate() {
        let line = line?;
        let perr = |msg: String| Error::Parse {
            pos: lineno + 1,
            msg,
        };
        if let Some(rest) = line.strip_prefix('#') {
            for kv in rest.split_whitespace() {
                let (k, v) = kv
                    .split_once('=')
                    .ok_or_else(|| perr(format!("bad header field {kv:?}")))?;
                header.insert(k.to_string(), v.to_string());
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let (v, c) = line
            .split_once('\t')
            .ok_or_else(|| perr("expected value<TAB>count".into()))?;
        let value: f64 = v
            .trim()
            .parse()
            .map_err(|e| perr(format!("bad value {v:?}: {e}")))?;
        let count: Count = c
            .trim()
            .parse()
            .map_err(|e| perr(format!("bad count {c:?}: {e}")))?;
        prefix.push_run(value, count);
    }
    let field = |k: &str| {
        header.get(k).ok_or_else(|| Error::Parse {
            pos: 0,
            msg: format!("header lacks {k}"),
        })
    };
    let num = |k: &str| -> Result<f64> {
        field(k)?.parse().map_err(|e| Error::Parse {
            pos: 0,
            msg: format!("bad {k}: {e}"),
        })
    };
    Ok(PrefixCertificate {
        prefix,
        blocks_used: num("blocks_used")? as usize,
        tail_q_bound: num("tail_q_bound")?,
        q: Exponent::new(num("q")?)?,
        scale: num("scale")?,
    })
}

/// One CSV row per block with columns
/// `k,bit,level,block_len,q_pow,cum_q_pow,p0_pow,cum_p0_pow,...` for rows `0..rows`.
/// `cum_*` columns are the power sums of the whole prefix `φ((α(0), ..., α(k)))`.
pub fn block_table_csv(
    bd: &BlockDecomposition,
    cfg: &ConstructionConfig,
    rows: usize,
) -> Result<String> {
    let mut s = String::from("k,bit,level,block_len,q_pow,cum_q_pow");
    for i in 0..rows {
        let _ = write!(s, ",p{i}_pow,cum_p{i}_pow");
    }
    s.push('\n');
    let exps: Vec<Exponent> = (0..rows).map(|i| cfg.p(i)).collect();
    let mut prefix = FinSeq::new();
    for (t, block) in bd.blocks.iter().enumerate() {
        prefix.append(block);
        let sigma = bd.sigma.prefix(t + 1);
        let _ = write!(
            s,
            "{t},{},{},{},{},{}",
            sigma.last().unwrap_or(0),
            level(&sigma)?,
            block.len(),
            pnorm_pow(block, bd.q)?,
            pnorm_pow(&prefix, bd.q)?
        );
        for &p in &exps {
            let _ = write!(s, ",{},{}", pnorm_pow(block, p)?, pnorm_pow(&prefix, p)?);
        }
        s.push('\n');
    }
    Ok(s)
}
